//! The sampling functions `a`, `b` and `b̃` as trigonometric polynomials.
//!
//! `b̃` is the analytic continuation of `conj(b)` off the real line; its
//! Fourier coefficients are `conj(b_{-n})`.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::path::Path;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::numeric::{e, pairwise_mean};

/// Relative tolerance for the conjugate symmetry of real-valued polynomials.
const REAL_SYMMETRY_TOL: f64 = 1e-12;

/// Default strip half-width for models given as exact trigonometric polynomials.
pub const DEFAULT_RHO0: f64 = 0.5;

/// `Σ_{n=-K}^{K} c_n e(n z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigPolynomial {
    /// `coeffs[n + degree]` is the coefficient of `e(n z)`.
    coeffs: Vec<Complex64>,
    degree: usize,
    real_valued: bool,
}

impl TrigPolynomial {
    /// Build from `(index, coefficient)` pairs. Repeated indices add up.
    pub fn from_pairs<I>(pairs: I, real_valued: bool) -> Result<Self>
    where
        I: IntoIterator<Item = (i64, Complex64)>,
    {
        let mut map: BTreeMap<i64, Complex64> = BTreeMap::new();
        for (n, c) in pairs {
            *map.entry(n).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        let degree = map.keys().map(|n| n.unsigned_abs() as usize).max().unwrap_or(0);
        let mut coeffs = vec![Complex64::new(0.0, 0.0); 2 * degree + 1];
        for (n, c) in map {
            coeffs[(n + degree as i64) as usize] = c;
        }
        Self::from_dense(coeffs, real_valued)
    }

    /// Build from the dense list `c_{-K}, …, c_K` (odd length).
    pub fn from_dense(coeffs: Vec<Complex64>, real_valued: bool) -> Result<Self> {
        if coeffs.len() % 2 == 0 {
            return Err(Error::InvalidInput("dense coefficient list must have odd length".into()));
        }
        let degree = coeffs.len() / 2;
        let p = Self { coeffs, degree, real_valued };
        if real_valued {
            let scale = p.l1_norm().max(f64::MIN_POSITIVE);
            for n in 0..=degree as i64 {
                let d = (p.coefficient(-n) - p.coefficient(n).conj()).norm();
                if d > REAL_SYMMETRY_TOL * scale {
                    return Err(Error::InvalidInput(format!(
                        "coefficients at ±{n} are not conjugate (|c_-n - conj c_n| = {d:e})"
                    )));
                }
            }
        }
        Ok(p.trimmed())
    }

    pub fn constant(value: Complex64) -> Self {
        Self { coeffs: vec![value], degree: 0, real_valued: value.im == 0.0 }
    }

    /// `amplitude · 2cos(2πx)`.
    pub fn cosine(amplitude: f64) -> Self {
        let c = Complex64::new(amplitude, 0.0);
        Self { coeffs: vec![c, Complex64::new(0.0, 0.0), c], degree: 1, real_valued: true }
    }

    /// `c · e(n x)` (complex-valued unless `n = 0` and `c` real).
    pub fn monomial(n: i64, c: Complex64) -> Self {
        Self::from_pairs([(n, c)], false).expect("single monomial is valid")
    }

    fn trimmed(mut self) -> Self {
        while self.degree > 0
            && self.coeffs[0].norm_sqr() == 0.0
            && self.coeffs[self.coeffs.len() - 1].norm_sqr() == 0.0
        {
            self.coeffs.remove(0);
            self.coeffs.pop();
            self.degree -= 1;
        }
        self
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn is_real_valued(&self) -> bool {
        self.real_valued
    }

    pub fn coefficient(&self, n: i64) -> Complex64 {
        if n.unsigned_abs() as usize > self.degree {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[(n + self.degree as i64) as usize]
        }
    }

    /// `(n, c_n)` for every stored index.
    pub fn terms(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let k = self.degree as i64;
        self.coeffs.iter().enumerate().map(move |(i, &c)| (i as i64 - k, c))
    }

    pub fn l1_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.norm_sqr() == 0.0)
    }

    /// Evaluate at a complex point (no strip check).
    pub fn eval(&self, z: Complex64) -> Complex64 {
        if self.degree == 0 {
            return self.coeffs[0];
        }
        let w = e(z);
        let w_inv = Complex64::new(1.0, 0.0) / w;
        let k = self.degree;
        // Horner in w for n ≥ 0 and in 1/w for n < 0.
        let mut pos = Complex64::new(0.0, 0.0);
        for n in (1..=k).rev() {
            pos = (pos + self.coeffs[k + n]) * w;
        }
        let mut neg = Complex64::new(0.0, 0.0);
        for n in (1..=k).rev() {
            neg = (neg + self.coeffs[k - n]) * w_inv;
        }
        let v = self.coeffs[k] + pos + neg;
        if self.real_valued && z.im == 0.0 {
            Complex64::new(v.re, 0.0)
        } else {
            v
        }
    }

    pub fn eval_real(&self, x: f64) -> Complex64 {
        self.eval(Complex64::new(x, 0.0))
    }

    /// Term-by-term derivative with respect to the phase.
    pub fn derivative(&self) -> Self {
        let k = self.degree as i64;
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| c * Complex64::new(0.0, TAU * (i as i64 - k) as f64))
            .collect();
        Self { coeffs, degree: self.degree, real_valued: self.real_valued }.trimmed()
    }

    /// Coefficients `conj(c_{-n})`: the analytic continuation of `conj(p)`.
    pub fn conj_reflect(&self) -> Self {
        let coeffs = self.coeffs.iter().rev().map(|c| c.conj()).collect();
        Self { coeffs, degree: self.degree, real_valued: self.real_valued }
    }

    /// Keep only `|n| ≤ k`.
    pub fn truncated(&self, k: usize) -> Self {
        if k >= self.degree {
            return self.clone();
        }
        let lo = self.degree - k;
        let coeffs = self.coeffs[lo..lo + 2 * k + 1].to_vec();
        Self { coeffs, degree: k, real_valued: self.real_valued }.trimmed()
    }

    /// `Σ_{|n|>k} |c_n| e^{2π|n| y}`: sup of the truncation error on `|Im z| ≤ y`.
    pub fn tail_bound(&self, k: usize, y: f64) -> f64 {
        self.terms()
            .filter(|(n, _)| n.unsigned_abs() as usize > k)
            .map(|(n, c)| c.norm() * (TAU * n.unsigned_abs() as f64 * y).exp())
            .sum()
    }
}

/// The pair `(a, b)` together with `b̃` and the strip half-width `ρ₀`.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingPair {
    pub a: TrigPolynomial,
    pub b: TrigPolynomial,
    pub tilde_b: TrigPolynomial,
    pub rho0: f64,
    a_prime: TrigPolynomial,
    b_prime: TrigPolynomial,
}

impl SamplingPair {
    pub fn new(a: TrigPolynomial, b: TrigPolynomial, rho0: f64) -> Result<Self> {
        if !a.is_real_valued() {
            return Err(Error::InvalidInput("a must be real-valued".into()));
        }
        if b.is_zero() {
            return Err(Error::InvalidInput("b must not vanish identically".into()));
        }
        if !(rho0 > 0.0) {
            return Err(Error::InvalidInput(format!("rho0 must be positive, got {rho0}")));
        }
        let tilde_b = b.conj_reflect();
        let a_prime = a.derivative();
        let b_prime = b.derivative();
        Ok(Self { a, b, tilde_b, rho0, a_prime, b_prime })
    }

    /// Almost Mathieu: `a = 2λ cos(2πx)`, `b ≡ 1`.
    pub fn almost_mathieu(lambda: f64) -> Self {
        Self::new(
            TrigPolynomial::cosine(lambda),
            TrigPolynomial::constant(Complex64::new(1.0, 0.0)),
            DEFAULT_RHO0,
        )
        .expect("almost Mathieu model is valid")
    }

    /// Free Laplacian: `a ≡ 0`, `b ≡ 1`.
    pub fn free() -> Self {
        Self::new(
            TrigPolynomial::constant(Complex64::new(0.0, 0.0)),
            TrigPolynomial::constant(Complex64::new(1.0, 0.0)),
            DEFAULT_RHO0,
        )
        .expect("free model is valid")
    }

    /// Random model of degree at most `max_degree`. The constant term of `b`
    /// dominates so `b` has no zeros on the real line.
    pub fn random<R: Rng>(rng: &mut R, max_degree: usize) -> Self {
        let ka = rng.gen_range(1..=max_degree.max(1));
        let kb = rng.gen_range(0..=max_degree);
        let mut a_terms = vec![(0i64, Complex64::new(rng.gen_range(-1.0..1.0), 0.0))];
        for n in 1..=ka as i64 {
            let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                * (1.5 / n as f64);
            a_terms.push((n, c));
            a_terms.push((-n, c.conj()));
        }
        let mut b_terms = Vec::new();
        let mut rest = 0.0;
        for n in 1..=kb as i64 {
            for sign in [-1i64, 1] {
                let c = Complex64::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5))
                    / n as f64;
                rest += c.norm();
                b_terms.push((sign * n, c));
            }
        }
        let phase = rng.gen_range(0.0..TAU);
        let b0 = Complex64::from_polar(rest + rng.gen_range(0.3..1.2), phase);
        b_terms.push((0, b0));
        let a = TrigPolynomial::from_pairs(a_terms, true).expect("symmetric by construction");
        let b = TrigPolynomial::from_pairs(b_terms, false).expect("valid");
        Self::new(a, b, DEFAULT_RHO0).expect("valid")
    }

    pub fn a_at(&self, z: Complex64) -> Complex64 {
        self.a.eval(z)
    }

    pub fn b_at(&self, z: Complex64) -> Complex64 {
        self.b.eval(z)
    }

    pub fn tilde_b_at(&self, z: Complex64) -> Complex64 {
        self.tilde_b.eval(z)
    }

    pub fn a_prime_at(&self, z: Complex64) -> Complex64 {
        self.a_prime.eval(z)
    }

    pub fn b_prime_at(&self, z: Complex64) -> Complex64 {
        self.b_prime.eval(z)
    }

    pub fn check_strip(&self, z: Complex64) -> Result<()> {
        if z.im.abs() < self.rho0 {
            Ok(())
        } else {
            Err(Error::OutsideStrip { im: z.im, rho0: self.rho0 })
        }
    }

    /// Strip-checked evaluation of any of the three functions.
    pub fn evaluate(&self, which: Component, z: Complex64) -> Result<Complex64> {
        self.check_strip(z)?;
        Ok(match which {
            Component::A => self.a_at(z),
            Component::B => self.b_at(z),
            Component::TildeB => self.tilde_b_at(z),
        })
    }

    /// Upper bound for `|a| + 2|b|` on the real line, hence for `‖H‖`.
    pub fn operator_norm_bound(&self) -> f64 {
        self.a.l1_norm() + 2.0 * self.b.l1_norm()
    }

    /// Replace `a`, `b` by their degree-`k` truncations.
    pub fn truncated(&self, k: usize) -> Self {
        Self::new(self.a.truncated(k), self.b.truncated(k), self.rho0).expect("truncation keeps validity")
    }

    pub fn to_model(&self) -> ModelFile {
        let pairs = |p: &TrigPolynomial| {
            p.terms()
                .filter(|(_, c)| c.norm_sqr() != 0.0)
                .map(|(n, c)| Coefficient { index: n, re: c.re, im: c.im })
                .collect()
        };
        ModelFile { a: pairs(&self.a), b: pairs(&self.b), rho0: self.rho0 }
    }

    /// Hex SHA-256 of the canonical model JSON.
    pub fn model_hash(&self) -> String {
        let json = serde_json::to_vec(&self.to_model()).expect("serialisable");
        let digest = Sha256::digest(&json);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    A,
    B,
    TildeB,
}

/// One Fourier coefficient in a model file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub index: i64,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

/// On-disk model: coefficient lists for `a` and `b` plus `ρ₀`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub a: Vec<Coefficient>,
    pub b: Vec<Coefficient>,
    #[serde(default = "default_rho0")]
    pub rho0: f64,
}

fn default_rho0() -> f64 {
    DEFAULT_RHO0
}

impl ModelFile {
    pub fn into_pair(self) -> Result<SamplingPair> {
        let conv = |v: &[Coefficient]| v.iter().map(|c| (c.index, Complex64::new(c.re, c.im))).collect::<Vec<_>>();
        let a = TrigPolynomial::from_pairs(conv(&self.a), true)
            .map_err(|e| Error::Model(format!("coefficients of a: {e}")))?;
        let b = TrigPolynomial::from_pairs(conv(&self.b), false)
            .map_err(|e| Error::Model(format!("coefficients of b: {e}")))?;
        SamplingPair::new(a, b, self.rho0).map_err(|e| Error::Model(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<SamplingPair> {
        let file: ModelFile = serde_json::from_str(text)?;
        file.into_pair()
    }

    pub fn load(path: &Path) -> Result<SamplingPair> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// A truncation together with its certified error on `|Im z| < ρ₀/3`.
#[derive(Debug, Clone, PartialEq)]
pub struct Truncation {
    pub polynomial: TrigPolynomial,
    pub degree: usize,
    /// `None` when some coefficient breaks the decay envelope.
    pub certificate: Option<f64>,
    /// Constant `C'` with `certificate = C' exp(-πρ₀K/3)`.
    pub certificate_constant: Option<f64>,
    /// First index whose coefficient exceeds `C exp(-πρ₀|n|)`.
    pub envelope_violation: Option<i64>,
}

/// Truncate `stream` to degree `k` and certify the sup-error on the strip
/// `|Im z| < ρ₀/3`, assuming `|c_n| ≤ C exp(-πρ₀|n|)` for every `n` (checked on
/// the supplied coefficients; the tail beyond them is taken on trust).
///
/// The certificate is the geometric tail of the envelope,
/// `2C Σ_{n>K} exp(-πρ₀n/3) = 2C exp(-πρ₀(K+1)/3) / (1 - exp(-πρ₀/3))`.
pub fn truncate(stream: &TrigPolynomial, k: usize, envelope: f64, rho0: f64) -> Truncation {
    let polynomial = stream.truncated(k);
    let violation = stream
        .terms()
        .find(|&(n, c)| c.norm() > envelope * (-PI * rho0 * n.unsigned_abs() as f64).exp() * (1.0 + 1e-12))
        .map(|(n, _)| n);
    let (certificate, constant) = if violation.is_some() {
        (None, None)
    } else {
        let q = (-PI * rho0 / 3.0).exp();
        let constant = 2.0 * envelope * q / (1.0 - q);
        (Some(constant * (-PI * rho0 * k as f64 / 3.0).exp()), Some(constant))
    };
    Truncation { polynomial, degree: k, certificate, certificate_constant: constant, envelope_violation: violation }
}

/// Smallest `K` with `C' exp(-πρ₀K/3) ≤ 1/N²`; grows like `log N`.
pub fn degree_for_scale(envelope: f64, rho0: f64, n: usize) -> usize {
    let q = (-PI * rho0 / 3.0).exp();
    let constant = 2.0 * envelope * q / (1.0 - q);
    let target = 1.0 / (n as f64 * n as f64);
    let k = (3.0 / (PI * rho0)) * (constant / target).ln();
    k.max(0.0).ceil() as usize
}

/// Quadrature value of `D(y) = ∫ log|b(x+iy)| dx`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanLogModulus {
    pub value: f64,
    pub grid_size: usize,
    /// `|D_n − D_{n/2}|` between the grid and its even-index half.
    pub tolerance: f64,
    /// Grid points dropped because `b` vanished there.
    pub excluded_points: usize,
    pub unstable: bool,
}

/// Below this `|b|` relative to `‖b‖₁` a grid point is treated as a zero of `b`.
const ZERO_FLOOR: f64 = 1e-300;

/// Midpoint-grid quadrature of `D(y)`, reporting a halving-based error
/// estimate. The grid is offset by half a step so symmetric zeros of `b` on
/// the circle (like those of `cos`) are not sampled.
pub fn mean_log_modulus(b: &TrigPolynomial, y: f64, grid_size: usize) -> MeanLogModulus {
    let n = grid_size.max(8) & !1;
    let mut values = Vec::with_capacity(n);
    let mut excluded = 0;
    for i in 0..n {
        let x = (i as f64 + 0.5) / n as f64;
        let m = b.eval(Complex64::new(x, y)).norm();
        if m > ZERO_FLOOR {
            values.push(m.ln());
        } else {
            excluded += 1;
            values.push(f64::NAN);
        }
    }
    let kept: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    let half: Vec<f64> = values.iter().step_by(2).copied().filter(|v| v.is_finite()).collect();
    let value = pairwise_mean(&kept);
    let coarse = pairwise_mean(&half);
    let tolerance = (value - coarse).abs();
    MeanLogModulus {
        value,
        grid_size: n,
        tolerance,
        excluded_points: excluded,
        unstable: excluded > 0 || tolerance > 1e-6 || !value.is_finite(),
    }
}

/// `D(y)` with doubling until the halving estimate drops below `tol`
/// (or `max_grid` is reached).
pub fn mean_log_modulus_adaptive(b: &TrigPolynomial, y: f64, tol: f64, max_grid: usize) -> MeanLogModulus {
    let mut n = 256;
    loop {
        let d = mean_log_modulus(b, y, n);
        if d.tolerance <= tol || n >= max_grid {
            return d;
        }
        n *= 2;
    }
}

/// Grid estimates of `sup|a|`, `sup|b|` on the closed strip and of `‖b‖_*`.
/// These are lower bounds of the true suprema.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StripBounds {
    pub sup_a: f64,
    pub sup_b: f64,
    pub b_star: f64,
    pub y_points: usize,
    pub x_points: usize,
}

pub fn strip_bounds(pair: &SamplingPair, x_points: usize, y_points: usize) -> StripBounds {
    let y_points = y_points.max(3);
    let rho = pair.rho0;
    let mut sup_a = 0.0f64;
    let mut sup_b = 0.0f64;
    let mut max_d = 0.0f64;
    for iy in 0..y_points {
        let y = -rho + 2.0 * rho * iy as f64 / (y_points - 1) as f64;
        for ix in 0..x_points {
            let z = Complex64::new(ix as f64 / x_points as f64, y);
            sup_a = sup_a.max(pair.a.eval(z).norm());
            sup_b = sup_b.max(pair.b.eval(z).norm());
        }
        let d = mean_log_modulus(&pair.b, y, x_points.max(256));
        if d.value.is_finite() {
            max_d = max_d.max(d.value.abs());
        }
    }
    StripBounds { sup_a, sup_b, b_star: sup_b + max_d, y_points, x_points }
}
