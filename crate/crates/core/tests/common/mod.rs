#![allow(dead_code)]

use nalgebra::DMatrix;
use quasijacobi::{Complex64, SamplingPair};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `b̃(z) = conj(b(conj z))`, evaluated from the coefficients of `b`.
pub fn b_tilde(pair: &SamplingPair, z: Complex64) -> Complex64 {
    pair.b.eval(z.conj()).conj()
}

/// Dense `H − E` on sites `lo..lo+n` straight from the operator formula.
pub fn dense_shifted(pair: &SamplingPair, z: Complex64, omega: f64, lo: i64, n: usize, e: Complex64) -> DMatrix<Complex64> {
    let site = |k: i64| z + Complex64::new(k as f64 * omega, 0.0);
    DMatrix::from_fn(n, n, |r, s| {
        let (kr, ks) = (lo + r as i64, lo + s as i64);
        if r == s {
            pair.a.eval(site(kr)) - e
        } else if s == r + 1 {
            -pair.b.eval(site(ks))
        } else if r == s + 1 {
            -b_tilde(pair, site(kr))
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

pub fn dense_det(pair: &SamplingPair, z: Complex64, omega: f64, lo: i64, n: isize, e: Complex64) -> Complex64 {
    match n {
        n if n < 0 => c(0.0, 0.0),
        0 => c(1.0, 0.0),
        n => dense_shifted(pair, z, omega, lo, n as usize, e).determinant(),
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn models(seed: u64, count: usize, max_degree: usize) -> Vec<SamplingPair> {
    let mut r = rng(seed);
    (0..count).map(|_| SamplingPair::random(&mut r, max_degree)).collect()
}

pub fn rel(x: Complex64, y: Complex64) -> f64 {
    (x - y).norm() / y.norm()
}
