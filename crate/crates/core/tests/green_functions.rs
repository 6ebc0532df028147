mod common;

use common::*;
use quasijacobi::frequency::GOLDEN;
use quasijacobi::green::{poisson_residual, GreenFunction};
use quasijacobi::operator::{dirichlet_eigenvector, eigensystem, eigenvalues, window};
use quasijacobi::Error;
use rand::Rng;

#[test]
fn cramer_entries_match_dense_inverse() {
    let mut r = rng(21);
    let mut checked = 0;
    for pair in models(7, 60, 3) {
        let n = r.gen_range(1..=16);
        let x = r.gen_range(0.0..1.0);
        let w = window(&pair, x, GOLDEN, n).unwrap();
        let spec = eigenvalues(&w).unwrap();
        let e = r.gen_range(spec[0] - 1.0..spec[n - 1] + 1.0);
        if spec.iter().any(|s| (s - e).abs() < 1e-3) {
            continue;
        }
        checked += 1;
        let inv = dense_shifted(&pair, c(x, 0.0), GOLDEN, 0, n, c(e, 0.0)).try_inverse().unwrap();
        let g = GreenFunction::new(&w, c(e, 0.0)).unwrap();
        for j in 0..n {
            for k in 0..n {
                let got = g.entry(j, k).materialize().unwrap();
                assert!((got - inv[(j, k)]).norm() < 1e-8, "n={n} ({j},{k})");
            }
        }
    }
    assert!(checked > 40);
}

#[test]
fn complex_energy_resolvent() {
    let pair = models(8, 1, 2).remove(0);
    let w = window(&pair, 0.37, GOLDEN, 9).unwrap();
    let e = c(0.2, 0.3);
    let inv = dense_shifted(&pair, c(0.37, 0.0), GOLDEN, 0, 9, e).try_inverse().unwrap();
    let dense = GreenFunction::new(&w, e).unwrap().dense().unwrap();
    for j in 0..9 {
        for k in 0..9 {
            assert!((dense[j][k] - inv[(j, k)]).norm() < 1e-10);
        }
    }
}

#[test]
fn poisson_formula_on_eigenpairs() {
    let mut refused = 0;
    let mut checked = 0;
    for pair in models(9, 4, 2) {
        let n = 40;
        let w = window(&pair, 0.13, GOLDEN, n).unwrap();
        let sd = eigensystem(&w).unwrap();
        for (e, psi) in sd.eigenvalues.iter().zip(&sd.eigenvectors) {
            let norm = psi.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            for (a, b) in [(3usize, 20usize), (10, 30), (1, 38), (17, 17)] {
                for m in [a, (a + b) / 2, b] {
                    match poisson_residual(&w, psi, *e, (a, b), m) {
                        Ok(res) => {
                            checked += 1;
                            assert!(res <= 1e-8 * norm, "residual {res:e}");
                        }
                        Err(Error::SingularResolvent { .. }) => refused += 1,
                        Err(other) => panic!("{other}"),
                    }
                }
            }
        }
    }
    assert!(checked > 10 * refused.max(1));
}

#[test]
fn dirichlet_vector_is_the_eigenvector() {
    for pair in models(10, 5, 2) {
        let n = 12;
        let w = window(&pair, 0.29, GOLDEN, n).unwrap();
        let sd = eigensystem(&w).unwrap();
        for j in [0, 5, 11] {
            let v = dirichlet_eigenvector(&pair, 0.29, GOLDEN, n, sd.eigenvalues[j]).unwrap();
            if v.degraded {
                continue;
            }
            let overlap: f64 = v.values.iter().zip(&sd.eigenvectors[j]).map(|(p, q)| p.conj() * q).sum::<quasijacobi::Complex64>().norm();
            assert!((overlap - 1.0).abs() < 1e-8, "overlap {overlap}");
        }
    }
}
