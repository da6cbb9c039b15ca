use super::class_counts;
use crate::error::{Error, Result};

/// One-way ANOVA F statistic per feature:
/// `(SSB / (g - 1)) / (SSW / (n - g))`.
///
/// Zero within-class variance with between-class spread gives `+inf`; a
/// feature with no spread at all gives 0.
pub fn anova_f_scores(x: &[Vec<f64>], y: &[usize], n_classes: usize) -> Result<Vec<f64>> {
    let counts = class_counts(y, n_classes);
    let present = counts.iter().filter(|&&c| c > 0).count();
    if present < 2 {
        return Err(Error::InvalidInput("ANOVA needs at least 2 classes".into()));
    }
    let n = x.len();
    let p = x.first().map_or(0, Vec::len);
    let mut scores = Vec::with_capacity(p);
    for j in 0..p {
        let grand = x.iter().map(|r| r[j]).sum::<f64>() / n as f64;
        let mut sums = vec![0.0; n_classes];
        for (r, &k) in x.iter().zip(y) {
            sums[k] += r[j];
        }
        let means: Vec<f64> = sums.iter().zip(&counts).map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 }).collect();
        let ssb: f64 = means
            .iter()
            .zip(&counts)
            .map(|(m, &c)| c as f64 * (m - grand).powi(2))
            .sum();
        let ssw: f64 = x.iter().zip(y).map(|(r, &k)| (r[j] - means[k]).powi(2)).sum();
        let df_b = (present - 1) as f64;
        let df_w = (n - present) as f64;
        let f = if ssw == 0.0 || df_w == 0.0 {
            if ssb > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        } else {
            (ssb / df_b) / (ssw / df_w)
        };
        scores.push(f);
    }
    Ok(scores)
}

/// Indices of the `k` highest scores, returned in original feature order.
/// Ties favour the earlier feature.
pub fn select_k_best(scores: &[f64], k: usize) -> Result<Vec<usize>> {
    if k == 0 || k > scores.len() {
        return Err(Error::InvalidInput(format!("k = {k} with {} features", scores.len())));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut chosen = order[..k].to_vec();
    chosen.sort_unstable();
    Ok(chosen)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_case_f_is_eight() {
        let x = vec![vec![1.0], vec![2.0], vec![3.0], vec![4.0]];
        let y = vec![0, 0, 1, 1];
        assert_eq!(anova_f_scores(&x, &y, 2).unwrap(), vec![8.0]);
    }

    #[test]
    fn identical_across_classes_is_zero() {
        let x = vec![vec![1.0], vec![2.0], vec![1.0], vec![2.0]];
        assert_eq!(anova_f_scores(&x, &[0, 0, 1, 1], 2).unwrap(), vec![0.0]);
    }

    #[test]
    fn zero_within_variance_sorts_first() {
        let x = vec![vec![1.0, 0.0], vec![1.0, 1.0], vec![2.0, 2.0], vec![2.0, 3.0]];
        let f = anova_f_scores(&x, &[0, 0, 1, 1], 2).unwrap();
        assert!(f[0].is_infinite());
        assert_eq!(select_k_best(&f, 1).unwrap(), vec![0]);
    }

    #[test]
    fn selection_ties_and_identity() {
        assert_eq!(select_k_best(&[1.0, 3.0, 3.0, 2.0], 2).unwrap(), vec![1, 2]);
        assert_eq!(select_k_best(&[1.0, 3.0, 3.0], 3).unwrap(), vec![0, 1, 2]);
        assert_eq!(select_k_best(&[5.0, 5.0, 1.0], 1).unwrap(), vec![0]);
        assert!(select_k_best(&[1.0], 2).is_err());
    }
}
