//! Frequencies: continued fractions, torus distance and the Diophantine class
//! `‖nω‖ ≥ c / (n (ln n)^α)`.

use serde::{Deserialize, Serialize};

/// Remainders below this are treated as an exact termination of the Gauss map.
pub const REMAINDER_CUTOFF: f64 = 1e-12;

pub const GOLDEN: f64 = 0.618_033_988_749_894_8;
pub const SILVER: f64 = std::f64::consts::SQRT_2 - 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuedFraction {
    /// `a_1, a_2, …` (the integer part `a_0 = 0` is implicit).
    pub partial_quotients: Vec<u64>,
    /// `(p_s, q_s)` for `s = 1, 2, …`.
    pub convergents: Vec<(i64, u64)>,
    /// The expansion ended because the remainder vanished (rational input).
    pub terminated: bool,
}

impl ContinuedFraction {
    /// Denominators `q_s`.
    pub fn denominators(&self) -> impl Iterator<Item = u64> + '_ {
        self.convergents.iter().map(|&(_, q)| q)
    }

    /// Value of the finite fraction `[0; a_1, …, a_s]`.
    pub fn value(&self) -> f64 {
        match self.convergents.last() {
            Some(&(p, q)) => p as f64 / q as f64,
            None => 0.0,
        }
    }
}

/// Expand `omega ∈ (0, 1)` with the Gauss map, stopping after `depth`
/// quotients or when the remainder drops below [`REMAINDER_CUTOFF`].
pub fn continued_fraction(omega: f64, depth: usize) -> ContinuedFraction {
    let mut quotients = Vec::with_capacity(depth);
    let mut convergents = Vec::with_capacity(depth);
    let (mut p_prev, mut q_prev): (i64, u64) = (1, 0);
    let (mut p, mut q): (i64, u64) = (0, 1);
    let mut r = omega - omega.floor();
    let mut terminated = r < REMAINDER_CUTOFF;

    while !terminated && quotients.len() < depth {
        let inv = 1.0 / r;
        let mut a = inv.floor();
        let mut frac = inv - a;
        if 1.0 - frac < REMAINDER_CUTOFF {
            a += 1.0;
            frac = 0.0;
        }
        if a > u32::MAX as f64 {
            terminated = true;
            break;
        }
        let a = a as u64;
        quotients.push(a);
        let p_next = a as i64 * p + p_prev;
        let q_next = a * q + q_prev;
        (p_prev, q_prev, p, q) = (p, q, p_next, q_next);
        convergents.push((p, q));
        r = frac;
        if r < REMAINDER_CUTOFF {
            terminated = true;
        }
    }

    ContinuedFraction { partial_quotients: quotients, convergents, terminated }
}

/// Evaluate `[0; a_1, …, a_s]` for an explicit list of partial quotients.
pub fn from_partial_quotients(quotients: &[u64]) -> f64 {
    let mut value = 0.0;
    for &a in quotients.iter().rev() {
        value = 1.0 / (a as f64 + value);
    }
    value
}

/// Convergent denominator closest to `target` (ties go to the smaller one).
/// Falls back to the nearest power of two when the expansion terminates early.
pub fn grid_denominator(omega: f64, target: u64) -> u64 {
    let cf = continued_fraction(omega, 64);
    let mut best: Option<u64> = None;
    for q in cf.denominators() {
        if q < 8 {
            continue;
        }
        let better = match best {
            None => true,
            Some(b) => q.abs_diff(target) < b.abs_diff(target),
        };
        if better {
            best = Some(q);
        }
        if q > 2 * target {
            break;
        }
    }
    match best {
        Some(q) if q.abs_diff(target) <= target => q,
        _ => target.next_power_of_two(),
    }
}

/// Distance from `t` to the nearest integer.
pub fn torus_norm(t: f64) -> f64 {
    let f = t - t.floor();
    f.min(1.0 - f)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiophantineReport {
    pub c: f64,
    pub alpha: f64,
    pub n_max: u64,
    pub worst_n: u64,
    /// `min_n ‖nω‖ · n (ln n)^α / c` over `2 ≤ n ≤ n_max`.
    pub worst_margin: f64,
    pub passes: bool,
}

/// Exhaustive check of `‖nω‖ ≥ c/(n (ln n)^α)` for `2 ≤ n ≤ n_max`.
pub fn diophantine_check(omega: f64, c: f64, alpha: f64, n_max: u64) -> DiophantineReport {
    let n_max = n_max.max(2);
    let mut worst_n = 2;
    let mut worst_margin = f64::INFINITY;
    for n in 2..=n_max {
        let nf = n as f64;
        let margin = torus_norm(nf * omega) * nf * nf.ln().powf(alpha) / c;
        if margin < worst_margin {
            worst_margin = margin;
            worst_n = n;
        }
    }
    DiophantineReport { c, alpha, n_max, worst_n, worst_margin, passes: worst_margin >= 1.0 }
}
