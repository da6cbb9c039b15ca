use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Train-set standardization statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub mean: Vec<f64>,
    /// Population standard deviation.
    pub std: Vec<f64>,
    pub constant: Vec<bool>,
}

pub fn fit_scaler(rows: &[Vec<f64>]) -> Result<ScalerParams> {
    if rows.len() < 2 {
        return Err(Error::InvalidInput("scaler needs at least 2 rows".into()));
    }
    let p = rows[0].len();
    let n = rows.len() as f64;
    let mut mean = vec![0.0; p];
    for r in rows {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; p];
    for r in rows {
        for j in 0..p {
            let d = r[j] - mean[j];
            var[j] += d * d;
        }
    }
    let std: Vec<f64> = var.iter().map(|v| (v / n).sqrt()).collect();
    let constant = std.iter().map(|&s| s == 0.0).collect();
    Ok(ScalerParams { mean, std, constant })
}

/// Standardizes with the given train statistics; constant features pass
/// through unchanged.
pub fn apply_scaler(params: &ScalerParams, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|r| {
            r.iter()
                .enumerate()
                .map(|(j, &v)| {
                    if params.constant[j] {
                        v
                    } else {
                        (v - params.mean[j]) / params.std[j]
                    }
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_z_scores() {
        let rows = vec![vec![1.0, 5.0], vec![2.0, 5.0], vec![3.0, 5.0]];
        let p = fit_scaler(&rows).unwrap();
        let z = apply_scaler(&p, &rows);
        let want = [-1.224744871391589, 0.0, 1.224744871391589];
        for (r, w) in z.iter().zip(want) {
            assert!((r[0] - w).abs() < 1e-12);
            assert_eq!(r[1], 5.0);
        }
        assert_eq!(p.constant, vec![false, true]);
    }

    #[test]
    fn test_rows_use_train_statistics() {
        let p = fit_scaler(&[vec![0.0], vec![2.0]]).unwrap();
        assert_eq!(apply_scaler(&p, &[vec![4.0]]), vec![vec![3.0]]);
    }

    #[test]
    fn moments_after_scaling() {
        let rows: Vec<Vec<f64>> = (0..37).map(|i| vec![(i as f64).sin() * 10.0 + 3.0]).collect();
        let z = apply_scaler(&fit_scaler(&rows).unwrap(), &rows);
        let n = z.len() as f64;
        let mean: f64 = z.iter().map(|r| r[0]).sum::<f64>() / n;
        let var: f64 = z.iter().map(|r| (r[0] - mean).powi(2)).sum::<f64>() / n;
        assert!(mean.abs() < 1e-12);
        assert!((var.sqrt() - 1.0).abs() < 1e-12);
    }
}
