//! Avalanche Principle checks for 2×2 matrix chains and determinant blocks.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{determinant_n, site_phase};
use crate::scaled::ScaledMatrix2;
use crate::transfer::{transfer_product, Variant};

/// Slack on `|det A_j| ≤ 1` for round-off in the determinant.
pub const DET_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct APReport {
    pub n: usize,
    /// `min_j ‖A_j‖`.
    pub mu: f64,
    /// `max_j |det A_j| ≤ 1`.
    pub cond1: bool,
    /// `μ > n`.
    pub cond2: bool,
    /// `max_j (log‖A_{j+1}‖ + log‖A_j‖ − log‖A_{j+1}A_j‖) < ½ log μ`.
    pub cond3: bool,
    /// `|log‖A_n⋯A_1‖ + Σ_{j=2}^{n-1} log‖A_j‖ − Σ_{j=1}^{n-1} log‖A_{j+1}A_j‖|`.
    pub discrepancy: f64,
    /// `discrepancy · μ / n`.
    pub bound_ratio: f64,
}

impl APReport {
    pub fn conditions_hold(&self) -> bool {
        self.cond1 && self.cond2 && self.cond3
    }
}

/// Signed AP sum `log‖A_n⋯A_1‖ + Σ_{j=2}^{n-1} log‖A_j‖ − Σ_{j=1}^{n-1} log‖A_{j+1}A_j‖`,
/// with the whole-product term supplied by the caller.
fn ap_sum(whole_log_norm: f64, logs: &[f64], pair_logs: &[f64]) -> f64 {
    let n = logs.len();
    let inner: f64 = logs[1..n - 1].iter().sum();
    let pairs: f64 = pair_logs.iter().sum();
    whole_log_norm + inner - pairs
}

pub fn ap_check_scaled(matrices: &[ScaledMatrix2]) -> Result<APReport> {
    let n = matrices.len();
    if n < 2 {
        return Err(Error::InvalidInput(format!("need at least two matrices, got {n}")));
    }
    if let Some(j) = matrices.iter().position(|m| m.is_zero()) {
        return Err(Error::ZeroMatrix(j));
    }
    let logs: Vec<f64> = matrices.iter().map(|m| m.log_norm()).collect();
    let pair_logs: Vec<f64> = matrices.windows(2).map(|w| w[1].mul(&w[0]).log_norm()).collect();
    let mut whole = matrices[0];
    for m in &matrices[1..] {
        whole = m.mul(&whole);
    }
    let log_mu = logs.iter().copied().fold(f64::INFINITY, f64::min);
    let mu = log_mu.exp();
    let max_det = matrices.iter().map(|m| m.det().log_magnitude()).fold(f64::NEG_INFINITY, f64::max);
    let cond1 = max_det <= DET_SLACK.ln_1p();
    let cond2 = log_mu > (n as f64).ln();
    let defect = (0..n - 1).map(|j| logs[j + 1] + logs[j] - pair_logs[j]).fold(f64::NEG_INFINITY, f64::max);
    let cond3 = defect < 0.5 * log_mu;
    let discrepancy = ap_sum(whole.log_norm(), &logs, &pair_logs).abs();
    Ok(APReport { n, mu, cond1, cond2, cond3, discrepancy, bound_ratio: discrepancy * mu / n as f64 })
}

pub fn ap_check(matrices: &[[[Complex64; 2]; 2]]) -> Result<APReport> {
    let scaled: Vec<ScaledMatrix2> = matrices.iter().map(|m| ScaledMatrix2::new(*m)).collect();
    ap_check_scaled(&scaled)
}

/// Result of chaining determinant blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    pub lengths: Vec<usize>,
    /// `log|f^a_{s_{m+1}}(z)|` from the determinant recursion.
    pub log_det_whole: f64,
    /// `|log|f^a| + Σ_{j=2}^{m-1} log‖A_j^a‖ − Σ log‖A_{j+1}^a A_j^a‖|`.
    pub residual: f64,
    /// Signed AP sums built from the `a` and `u` blocks with their own whole products.
    pub a_sum: f64,
    pub u_sum: f64,
    /// `log‖A^a_m⋯A^a_1‖` versus `log|f^a|`: the corner projections select the determinant.
    pub corner_defect: f64,
    /// AP conditions evaluated on the `u` blocks.
    pub u_conditions: APReport,
}

fn chain_matrices(pair: &crate::SamplingPair, z: Complex64, omega: f64, energy: Complex64, lengths: &[usize], variant: Variant) -> Result<Vec<ScaledMatrix2>> {
    let m = lengths.len();
    let p = ScaledMatrix2::first_projection();
    let mut s = 0i64;
    let mut out = Vec::with_capacity(m);
    for (j, &l) in lengths.iter().enumerate() {
        let mut a = transfer_product(pair, site_phase(z, omega, s), omega, l, energy, variant)?;
        if j == 0 {
            a = a.mul(&p);
        }
        if j == m - 1 {
            a = p.mul(&a);
        }
        out.push(a);
        s += l as i64;
    }
    Ok(out)
}

/// Blocks `A_1^a = M^a_{l_1}·P`, `A_j^a = M^a_{l_j}(z + s_jω)`, `A_m^a = P·M^a_{l_m}(z + s_mω)`
/// with `P = [[1,0],[0,0]]`, compared against the whole determinant.
pub fn chain_blocks(pair: &crate::SamplingPair, z: Complex64, omega: f64, energy: Complex64, lengths: &[usize]) -> Result<ChainReport> {
    let m = lengths.len();
    if m < 2 {
        return Err(Error::InvalidInput("need at least two blocks".into()));
    }
    let lmin = *lengths.iter().min().expect("non-empty");
    let lmax = *lengths.iter().max().expect("non-empty");
    if lmin == 0 || lmax > 3 * lmin {
        return Err(Error::InvalidInput(format!("block lengths must satisfy l ≤ l_j ≤ 3l, got {lengths:?}")));
    }
    let total: usize = lengths.iter().sum();
    let log_det_whole = determinant_n(pair, z, omega, total, energy)?.log_magnitude();

    let sums = |blocks: &[ScaledMatrix2]| {
        let logs: Vec<f64> = blocks.iter().map(|a| a.log_norm()).collect();
        let pair_logs: Vec<f64> = blocks.windows(2).map(|w| w[1].mul(&w[0]).log_norm()).collect();
        let mut whole = blocks[0];
        for b in &blocks[1..] {
            whole = b.mul(&whole);
        }
        (logs, pair_logs, whole.log_norm())
    };

    let a_blocks = chain_matrices(pair, z, omega, energy, lengths, Variant::A)?;
    let (logs, pair_logs, whole_a) = sums(&a_blocks);
    let residual = ap_sum(log_det_whole, &logs, &pair_logs).abs();
    let a_sum = ap_sum(whole_a, &logs, &pair_logs);

    let u_blocks = chain_matrices(pair, z, omega, energy, lengths, Variant::U)?;
    let (ulogs, upair_logs, whole_u) = sums(&u_blocks);
    let u_sum = ap_sum(whole_u, &ulogs, &upair_logs);

    Ok(ChainReport {
        lengths: lengths.to_vec(),
        log_det_whole,
        residual,
        a_sum,
        u_sum,
        corner_defect: (whole_a - log_det_whole).abs(),
        u_conditions: ap_check_scaled(&u_blocks)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::SamplingPair;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn commuting_diagonal_sequence() {
        let mu = 1e3;
        let a = [[c(mu), c(0.0)], [c(0.0), c(1.0 / mu)]];
        let rep = ap_check(&vec![a; 10]).unwrap();
        assert!(rep.conditions_hold());
        assert!(rep.discrepancy <= 1e-12, "{}", rep.discrepancy);
    }

    #[test]
    fn identity_fails_cond2() {
        let id = [[c(1.0), c(0.0)], [c(0.0), c(1.0)]];
        let rep = ap_check(&vec![id; 4]).unwrap();
        assert!(rep.cond1);
        assert!(!rep.cond2);
    }

    #[test]
    fn zero_matrix_rejected() {
        let z = [[c(0.0); 2]; 2];
        let id = [[c(1.0), c(0.0)], [c(0.0), c(1.0)]];
        assert!(matches!(ap_check(&[id, z]), Err(Error::ZeroMatrix(1))));
    }

    #[test]
    fn two_block_chain_is_exact() {
        let pair = SamplingPair::almost_mathieu(3.0);
        let rep = chain_blocks(&pair, c(0.2), crate::frequency::GOLDEN, c(0.4), &[12, 20]).unwrap();
        assert!(rep.residual < 1e-10, "{}", rep.residual);
        assert!(rep.corner_defect < 1e-10);
    }

    #[test]
    fn u_and_a_sums_agree() {
        let pair = SamplingPair::almost_mathieu(3.0);
        let rep = chain_blocks(&pair, c(0.31), crate::frequency::GOLDEN, c(-1.1), &[16; 6]).unwrap();
        assert!((rep.a_sum - rep.u_sum).abs() < 1e-9);
    }
}
