//! Small deterministic summation helpers shared by the quadrature code.

use num_complex::Complex64;

/// Pairwise (tree) sum in index order. The split points depend only on the
/// slice length, so the result is independent of how the values were produced.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        n if n <= 8 => values.iter().sum(),
        n => {
            let (left, right) = values.split_at(n / 2);
            pairwise_sum(left) + pairwise_sum(right)
        }
    }
}

pub fn pairwise_mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    pairwise_sum(values) / values.len() as f64
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

/// `e(t) = exp(2πi t)` with the real part of `t` reduced modulo one first.
#[inline]
pub fn e(t: Complex64) -> Complex64 {
    let re = t.re - t.re.floor();
    let phase = std::f64::consts::TAU * re;
    let modulus = (-std::f64::consts::TAU * t.im).exp();
    Complex64::new(modulus * phase.cos(), modulus * phase.sin())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive_on_small_input() {
        let v: Vec<f64> = (0..37).map(|i| i as f64 * 0.25).collect();
        let naive: f64 = v.iter().sum();
        assert!((pairwise_sum(&v) - naive).abs() < 1e-12);
    }

    #[test]
    fn compensated_recovers_cancellation() {
        let acc: CompensatedSum = [1.0, 1e100, 1.0, -1e100].into_iter().collect();
        assert_eq!(acc.value(), 2.0);
    }

    #[test]
    fn unit_exponential() {
        let v = e(Complex64::new(0.25, 0.0));
        assert!((v - Complex64::i()).norm() < 1e-15);
        let w = e(Complex64::new(1.25, 0.1));
        assert!((w.norm() - (-std::f64::consts::TAU * 0.1).exp()).abs() < 1e-15);
    }
}
