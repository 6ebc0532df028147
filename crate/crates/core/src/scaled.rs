//! Log-magnitude scaled scalars and 2×2 matrices.
//!
//! Determinants and transfer products grow like `exp(N L)`; both types below
//! keep a mantissa of moderate size together with an explicit scale. Internal
//! rescaling uses exact powers of two so that the reconstructed value does
//! not depend on how often it happened.

use std::f64::consts::LN_2;
use std::fmt;
use std::ops::{Div, Mul, Neg};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// `unit · exp(log_magnitude)`, or exactly zero.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledValue {
    log_magnitude: f64,
    unit: Complex64,
    zero: bool,
}

impl fmt::Debug for ScaledValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.zero {
            write!(f, "ScaledValue(0)")
        } else {
            write!(f, "ScaledValue({:?}·e^{})", self.unit, self.log_magnitude)
        }
    }
}

impl ScaledValue {
    pub const ZERO: ScaledValue = ScaledValue {
        log_magnitude: f64::NEG_INFINITY,
        unit: Complex64 { re: 0.0, im: 0.0 },
        zero: true,
    };

    pub const ONE: ScaledValue = ScaledValue {
        log_magnitude: 0.0,
        unit: Complex64 { re: 1.0, im: 0.0 },
        zero: false,
    };

    pub fn from_complex(z: Complex64) -> Self {
        let r = z.norm();
        if r == 0.0 {
            Self::ZERO
        } else {
            Self { log_magnitude: r.ln(), unit: z / r, zero: false }
        }
    }

    /// Mantissa times `2^exponent`.
    pub fn from_mantissa(mantissa: Complex64, exponent: i64) -> Self {
        let r = mantissa.norm();
        if r == 0.0 {
            Self::ZERO
        } else {
            Self {
                log_magnitude: r.ln() + exponent as f64 * LN_2,
                unit: mantissa / r,
                zero: false,
            }
        }
    }

    pub fn from_polar(log_magnitude: f64, unit: Complex64) -> Self {
        if log_magnitude == f64::NEG_INFINITY {
            return Self::ZERO;
        }
        let r = unit.norm();
        Self { log_magnitude, unit: unit / r, zero: false }
    }

    pub fn is_zero(&self) -> bool {
        self.zero
    }

    /// Natural log of the modulus (`-inf` for zero).
    pub fn log_magnitude(&self) -> f64 {
        self.log_magnitude
    }

    pub fn unit(&self) -> Complex64 {
        self.unit
    }

    /// Plain complex value; overflows to infinity when the magnitude does.
    pub fn to_complex(&self) -> Complex64 {
        if self.zero {
            Complex64::new(0.0, 0.0)
        } else {
            self.unit * self.log_magnitude.exp()
        }
    }

    /// Plain complex value only when `|log|value|| <= limit`.
    pub fn materialize(&self, limit: f64) -> Option<Complex64> {
        if self.zero {
            Some(Complex64::new(0.0, 0.0))
        } else if self.log_magnitude.abs() <= limit {
            Some(self.to_complex())
        } else {
            None
        }
    }

    pub fn conj(&self) -> Self {
        Self { unit: self.unit.conj(), ..*self }
    }

    pub fn abs(&self) -> Self {
        if self.zero {
            Self::ZERO
        } else {
            Self { unit: Complex64::new(1.0, 0.0), ..*self }
        }
    }

    pub fn recip(&self) -> Self {
        Self { log_magnitude: -self.log_magnitude, unit: self.unit.conj(), zero: self.zero }
    }

    /// Sum of two scaled values, aligned to the larger magnitude.
    pub fn add(&self, other: &Self) -> Self {
        if self.zero {
            return *other;
        }
        if other.zero {
            return *self;
        }
        let (big, small) =
            if self.log_magnitude >= other.log_magnitude { (self, other) } else { (other, self) };
        let ratio = (small.log_magnitude - big.log_magnitude).exp();
        let m = big.unit + small.unit * ratio;
        let r = m.norm();
        if r == 0.0 {
            return Self::ZERO;
        }
        Self { log_magnitude: big.log_magnitude + r.ln(), unit: m / r, zero: false }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&-*other)
    }

    /// `|self - other| / |other|`, computed without leaving scaled form.
    pub fn relative_error(&self, reference: &Self) -> f64 {
        match (self.zero, reference.zero) {
            (true, true) => 0.0,
            (_, true) | (true, _) => f64::INFINITY,
            _ => {
                let ratio = self.unit * (self.log_magnitude - reference.log_magnitude).exp()
                    / reference.unit;
                (ratio - Complex64::new(1.0, 0.0)).norm()
            }
        }
    }
}

impl Mul for ScaledValue {
    type Output = ScaledValue;
    fn mul(self, rhs: ScaledValue) -> ScaledValue {
        if self.zero || rhs.zero {
            return ScaledValue::ZERO;
        }
        let u = self.unit * rhs.unit;
        ScaledValue {
            log_magnitude: self.log_magnitude + rhs.log_magnitude,
            unit: u / u.norm(),
            zero: false,
        }
    }
}

impl Div for ScaledValue {
    type Output = ScaledValue;
    fn div(self, rhs: ScaledValue) -> ScaledValue {
        self * rhs.recip()
    }
}

impl Neg for ScaledValue {
    type Output = ScaledValue;
    fn neg(self) -> ScaledValue {
        ScaledValue { unit: -self.unit, ..self }
    }
}

impl From<Complex64> for ScaledValue {
    fn from(z: Complex64) -> Self {
        ScaledValue::from_complex(z)
    }
}

/// Binary exponent `k` with `2^-k · magnitude ∈ [1, 2)`; zero for non-normal input.
#[inline]
pub(crate) fn binary_exponent(magnitude: f64) -> i64 {
    if magnitude == 0.0 || !magnitude.is_finite() {
        return 0;
    }
    let bits = magnitude.to_bits();
    let raw = ((bits >> 52) & 0x7ff) as i64;
    if raw == 0 {
        // subnormal
        magnitude.log2().floor() as i64
    } else {
        raw - 1023
    }
}

/// Exact multiplication by `2^k`, splitting large shifts to stay in range.
#[inline]
pub(crate) fn scale_pow2(z: Complex64, k: i64) -> Complex64 {
    let mut z = z;
    let mut k = k;
    while k != 0 {
        let step = k.clamp(-1000, 1000);
        let f = 2f64.powi(step as i32);
        z *= f;
        k -= step;
    }
    z
}

/// `entries · 2^exponent`, with the largest entry kept in `[1/2, 2]`.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledMatrix2 {
    entries: [[Complex64; 2]; 2],
    exponent: i64,
}

impl fmt::Debug for ScaledMatrix2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScaledMatrix2({:?} · 2^{})", self.entries, self.exponent)
    }
}

impl ScaledMatrix2 {
    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        Self { entries: [[one, zero], [zero, one]], exponent: 0 }
    }

    pub fn new(entries: [[Complex64; 2]; 2]) -> Self {
        let mut m = Self { entries, exponent: 0 };
        m.normalize();
        m
    }

    /// Entries taken as given, exponent zero, no normalisation.
    pub fn new_raw(entries: [[Complex64; 2]; 2]) -> Self {
        Self { entries, exponent: 0 }
    }

    /// Projection onto the first coordinate, `[[1, 0], [0, 0]]`.
    pub fn first_projection() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        Self { entries: [[one, zero], [zero, zero]], exponent: 0 }
    }

    pub fn mantissa(&self) -> [[Complex64; 2]; 2] {
        self.entries
    }

    pub fn exponent(&self) -> i64 {
        self.exponent
    }

    /// Natural-log scale factor, `exponent · ln 2`.
    pub fn log_scale(&self) -> f64 {
        self.exponent as f64 * LN_2
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().flatten().all(|z| z.norm_sqr() == 0.0)
    }

    pub fn entry(&self, row: usize, col: usize) -> ScaledValue {
        ScaledValue::from_mantissa(self.entries[row][col], self.exponent)
    }

    fn max_entry(&self) -> f64 {
        self.entries.iter().flatten().fold(0.0f64, |acc, z| acc.max(z.norm()))
    }

    /// Rescale by a power of two so the largest entry lies in `[1, 2)`.
    pub fn normalize(&mut self) {
        let k = binary_exponent(self.max_entry());
        if k != 0 {
            for z in self.entries.iter_mut().flatten() {
                *z = scale_pow2(*z, -k);
            }
            self.exponent += k;
        }
    }

    /// Product `self · rhs` without renormalising.
    pub fn mul_raw(&self, rhs: &Self) -> Self {
        let a = &self.entries;
        let b = &rhs.entries;
        let entries = [
            [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
            [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
        ];
        Self { entries, exponent: self.exponent + rhs.exponent }
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        let mut m = self.mul_raw(rhs);
        m.normalize();
        m
    }

    /// Multiply every entry by a scaled scalar.
    pub fn scale(&self, factor: ScaledValue) -> Self {
        if factor.is_zero() {
            return Self { entries: [[Complex64::new(0.0, 0.0); 2]; 2], exponent: 0 };
        }
        // Split the scalar into a power of two and a residual of modulus in [1, 2).
        let log2 = factor.log_magnitude() / LN_2;
        let k = log2.floor() as i64;
        let residual = factor.unit() * ((log2 - k as f64) * LN_2).exp();
        let mut m = *self;
        for z in m.entries.iter_mut().flatten() {
            *z *= residual;
        }
        m.exponent += k;
        m.normalize();
        m
    }

    pub fn det(&self) -> ScaledValue {
        let a = &self.entries;
        let d = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        ScaledValue::from_mantissa(d, 2 * self.exponent)
    }

    /// Natural log of the spectral norm.
    pub fn log_norm(&self) -> f64 {
        let s = spectral_norm(&self.entries);
        if s == 0.0 {
            f64::NEG_INFINITY
        } else {
            s.ln() + self.log_scale()
        }
    }

    /// Plain entries (may overflow).
    pub fn to_plain(&self) -> [[Complex64; 2]; 2] {
        let mut out = self.entries;
        for z in out.iter_mut().flatten() {
            *z = scale_pow2(*z, self.exponent);
        }
        out
    }
}

/// Largest singular value of a 2×2 complex matrix, in closed form.
pub fn spectral_norm(m: &[[Complex64; 2]; 2]) -> f64 {
    let frob2: f64 = m.iter().flatten().map(|z| z.norm_sqr()).sum();
    if frob2 == 0.0 {
        return 0.0;
    }
    let det = (m[0][0] * m[1][1] - m[0][1] * m[1][0]).norm();
    let disc = ((frob2 - 2.0 * det) * (frob2 + 2.0 * det)).max(0.0);
    ((frob2 + disc.sqrt()) / 2.0).sqrt()
}
