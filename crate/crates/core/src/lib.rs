//! Finite-scale spectral analysis of quasiperiodic Jacobi matrices.
//!
//! The operator acts on sequences indexed by the integers,
//!
//! ```text
//! (H(x, ω) φ)(k) = -b(x + (k+1)ω) φ(k+1) - conj(b(x + kω)) φ(k-1) + a(x + kω) φ(k)
//! ```
//!
//! with `a` real-valued and `b` complex-valued trigonometric polynomials. The
//! crate builds finite windows of `H`, their eigensystems and analytic
//! determinants, the transfer-matrix cocycle and its Lyapunov exponents,
//! Green's functions, localization diagnostics and the slope-based resonance
//! elimination machinery with eigenvalue-gap statistics.
//!
//! Quantities that grow like `exp(N L)` are carried in scaled form
//! ([`ScaledValue`], [`ScaledMatrix2`]) so nothing overflows at the window
//! sizes used here.

pub mod avalanche;
pub mod error;
pub mod frequency;
pub mod green;
pub mod localization;
pub mod numeric;
pub mod operator;
pub mod resonance;
pub mod sampling;
pub mod scaled;
pub mod transfer;
pub mod tridiag;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use operator::{JacobiWindow, SpectralData};
pub use resonance::interval::IntervalUnion;
pub use sampling::{SamplingPair, TrigPolynomial};
pub use scaled::{ScaledMatrix2, ScaledValue};
