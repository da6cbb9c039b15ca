use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Equal-frequency bins over word durations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinSpec {
    pub k: usize,
    /// `k + 1` strictly increasing edges from the data minimum to maximum.
    pub edges: Vec<f64>,
    pub labels: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinLabel {
    /// Zero-based bin index.
    Class(usize),
    OutOfRange,
}

/// Sample quantile at `p = num / den` with linear interpolation between
/// order statistics (`h = (n - 1) p`). The position is computed in integer
/// arithmetic so quantiles that land on an order statistic return it exactly.
/// `sorted` must be ascending and non-empty.
pub fn quantile_sorted(sorted: &[f64], num: usize, den: usize) -> f64 {
    let scaled = (sorted.len() - 1) * num;
    let lo = scaled / den;
    let frac = (scaled % den) as f64 / den as f64;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Edges at the empirical quantiles `i/k`, `i = 0..=k`.
pub fn make_bins(durations: &[f64], k: usize) -> Result<BinSpec> {
    if k < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 bins, got {k}")));
    }
    if durations.iter().any(|d| !d.is_finite()) {
        return Err(Error::InvalidInput("non-finite duration".into()));
    }
    let mut sorted = durations.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted.is_empty() {
        return Err(Error::EmptyInput("no durations to bin".into()));
    }
    let edges: Vec<f64> = (0..=k)
        .map(|i| {
            quantile_sorted(&sorted, i, k)
        })
        .collect();
    if edges.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InsufficientQuantiles(format!(
            "{k} bins over {} values produce tied edges",
            durations.len()
        )));
    }
    Ok(BinSpec {
        k,
        edges,
        labels: (1..=k).map(|i| i.to_string()).collect(),
    })
}

impl BinSpec {
    /// Upper-inclusive intervals `(e[i], e[i+1]]`, with the lowest edge
    /// included in the first bin.
    pub fn assign(&self, duration: f64) -> BinLabel {
        let (lo, hi) = (self.edges[0], self.edges[self.k]);
        if !(lo..=hi).contains(&duration) {
            return BinLabel::OutOfRange;
        }
        // first edge index >= duration among edges[1..]
        let idx = self.edges[1..].partition_point(|&e| e < duration);
        BinLabel::Class(idx.min(self.k - 1))
    }

    pub fn label(&self, duration: f64) -> Option<&str> {
        match self.assign(duration) {
            BinLabel::Class(i) => Some(&self.labels[i]),
            BinLabel::OutOfRange => None,
        }
    }
}

pub fn assign_bin(duration: f64, spec: &BinSpec) -> BinLabel {
    spec.assign(duration)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn one_to_ten_in_five_bins() {
        let d: Vec<f64> = (1..=10).map(f64::from).collect();
        let spec = make_bins(&d, 5).unwrap();
        let want = [1.0, 2.8, 4.6, 6.4, 8.2, 10.0];
        for (e, w) in spec.edges.iter().zip(want) {
            assert!((e - w).abs() < 1e-12, "{e} vs {w}");
        }
        assert_eq!(spec.labels, ["1", "2", "3", "4", "5"]);
    }

    #[test]
    fn endpoints_and_ties() {
        let d: Vec<f64> = (1..=10).map(f64::from).collect();
        let spec = make_bins(&d, 5).unwrap();
        assert_eq!(spec.assign(1.0), BinLabel::Class(0));
        assert_eq!(spec.assign(10.0), BinLabel::Class(4));
        assert_eq!(spec.assign(spec.edges[2]), BinLabel::Class(1));
        assert_eq!(spec.assign(0.5), BinLabel::OutOfRange);
        assert_eq!(spec.assign(10.5), BinLabel::OutOfRange);
        assert_eq!(spec.label(10.0), Some("5"));
    }

    #[test]
    fn constant_durations_fail() {
        assert!(matches!(make_bins(&[0.3; 20], 5), Err(Error::InsufficientQuantiles(_))));
    }

    #[test]
    fn median_split() {
        let d: Vec<f64> = (0..101).map(|i| (i as f64 * 0.618_033_988_7) % 1.0).collect();
        let spec = make_bins(&d, 2).unwrap();
        let low = d.iter().filter(|&&x| spec.assign(x) == BinLabel::Class(0)).count();
        assert!((low as i64 - (d.len() - low) as i64).abs() <= 1);
    }

    proptest! {
        #[test]
        fn occupancy_within_one(
            raw in proptest::collection::hash_set(0u32..1_000_000, 10..300),
            k in 2usize..9,
        ) {
            let d: Vec<f64> = raw.into_iter().map(|x| x as f64 / 1000.0 + 0.01).collect();
            prop_assume!(d.len() >= k);
            let spec = make_bins(&d, k).unwrap();
            let mut counts = vec![0usize; k];
            for &x in &d {
                match spec.assign(x) {
                    BinLabel::Class(i) => counts[i] += 1,
                    BinLabel::OutOfRange => prop_assert!(false, "in-sample value out of range"),
                }
            }
            let expect = d.len() as f64 / k as f64;
            for c in counts {
                prop_assert!((c as f64 - expect).abs() <= 1.0, "count {} vs {}", c, expect);
            }
        }
    }
}
