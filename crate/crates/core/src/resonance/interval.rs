//! Finite unions of closed intervals with measure and complexity.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sorted, pairwise disjoint closed intervals. Touching intervals are merged.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IntervalUnion {
    intervals: Vec<[f64; 2]>,
}

impl IntervalUnion {
    pub fn new() -> Self {
        Self::default()
    }

    /// Normalise arbitrary (possibly overlapping, unordered) intervals.
    /// Reversed endpoints are swapped; NaN endpoints are rejected.
    pub fn from_intervals<I: IntoIterator<Item = (f64, f64)>>(items: I) -> Result<Self> {
        let mut v: Vec<[f64; 2]> = Vec::new();
        for (a, b) in items {
            if a.is_nan() || b.is_nan() {
                return Err(Error::InvalidInput("interval endpoint is NaN".into()));
            }
            v.push([a.min(b), a.max(b)]);
        }
        Ok(Self::merged(v))
    }

    fn merged(mut v: Vec<[f64; 2]>) -> Self {
        v.sort_by(|p, q| p[0].total_cmp(&q[0]).then(p[1].total_cmp(&q[1])));
        let mut out: Vec<[f64; 2]> = Vec::with_capacity(v.len());
        for iv in v {
            match out.last_mut() {
                Some(last) if iv[0] <= last[1] => last[1] = last[1].max(iv[1]),
                _ => out.push(iv),
            }
        }
        Self { intervals: out }
    }

    pub fn single(lo: f64, hi: f64) -> Self {
        Self::from_intervals([(lo, hi)]).expect("finite endpoints")
    }

    pub fn intervals(&self) -> &[[f64; 2]] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Total length.
    pub fn mes(&self) -> f64 {
        self.intervals.iter().map(|iv| iv[1] - iv[0]).sum()
    }

    /// Number of intervals.
    pub fn com(&self) -> usize {
        self.intervals.len()
    }

    pub fn contains(&self, x: f64) -> bool {
        let i = self.intervals.partition_point(|iv| iv[1] < x);
        i < self.intervals.len() && self.intervals[i][0] <= x
    }

    /// Distance from `x` to the set (`+inf` when empty).
    pub fn distance(&self, x: f64) -> f64 {
        if self.intervals.is_empty() {
            return f64::INFINITY;
        }
        let i = self.intervals.partition_point(|iv| iv[1] < x);
        let mut d = f64::INFINITY;
        if i < self.intervals.len() {
            d = d.min((self.intervals[i][0] - x).max(0.0));
        }
        if i > 0 {
            d = d.min(x - self.intervals[i - 1][1]);
        }
        d
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut v = self.intervals.clone();
        v.extend_from_slice(&other.intervals);
        Self::merged(v)
    }

    pub fn insert(&mut self, lo: f64, hi: f64) {
        let mut v = std::mem::take(&mut self.intervals);
        v.push([lo.min(hi), lo.max(hi)]);
        *self = Self::merged(v);
    }

    /// `{x : dist(x, self) ≤ δ}`.
    pub fn fatten(&self, delta: f64) -> Self {
        let delta = delta.max(0.0);
        Self::merged(self.intervals.iter().map(|iv| [iv[0] - delta, iv[1] + delta]).collect())
    }

    /// Intersection with `[lo, hi]`.
    pub fn clip(&self, lo: f64, hi: f64) -> Self {
        Self {
            intervals: self
                .intervals
                .iter()
                .filter(|iv| iv[1] >= lo && iv[0] <= hi)
                .map(|iv| [iv[0].max(lo), iv[1].min(hi)])
                .collect(),
        }
    }
}

/// Header of a persisted bad set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BadSetMeta {
    pub tau: f64,
    pub sigma: Option<f64>,
    pub l: usize,
    pub omega: f64,
    pub grid: usize,
    pub model_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BadSetFile {
    pub meta: BadSetMeta,
    pub intervals: IntervalUnion,
}

impl BadSetFile {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: BadSetFile = serde_json::from_str(text)?;
        // re-normalise in case the file was edited by hand
        let intervals = IntervalUnion::from_intervals(raw.intervals.intervals.iter().map(|iv| (iv[0], iv[1])))?;
        Ok(Self { meta: raw.meta, intervals })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalisation_merges_and_sorts() {
        let u = IntervalUnion::from_intervals([(3.0, 4.0), (0.0, 1.0), (0.5, 2.0), (4.0, 5.0)]).unwrap();
        assert_eq!(u.intervals(), &[[0.0, 2.0], [3.0, 5.0]]);
        assert_eq!(u.com(), 2);
        assert_eq!(u.mes(), 4.0);
    }

    #[test]
    fn membership_and_distance() {
        let u = IntervalUnion::from_intervals([(0.0, 1.0), (2.0, 3.0)]).unwrap();
        assert!(u.contains(0.0) && u.contains(2.5) && !u.contains(1.5));
        assert_eq!(u.distance(1.5), 0.5);
        assert_eq!(u.distance(-1.0), 1.0);
        assert_eq!(u.distance(2.2), 0.0);
        assert_eq!(IntervalUnion::new().distance(0.0), f64::INFINITY);
    }

    #[test]
    fn fatten_merges_neighbours() {
        let u = IntervalUnion::from_intervals([(0.0, 1.0), (1.5, 2.0)]).unwrap();
        let f = u.fatten(0.25);
        assert_eq!(f.intervals(), &[[-0.25, 2.25]]);
    }

    #[test]
    fn json_roundtrip() {
        let file = BadSetFile {
            meta: BadSetMeta { tau: 0.1, sigma: None, l: 16, omega: 0.5, grid: 256, model_hash: "abc".into() },
            intervals: IntervalUnion::from_intervals([(0.0, 1.0)]).unwrap(),
        };
        let back = BadSetFile::from_json(&file.to_json().unwrap()).unwrap();
        assert_eq!(back, file);
    }
}
