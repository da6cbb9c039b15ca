use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::ClassSet;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
    /// The class was never predicted; precision is reported as 0.
    pub never_predicted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Averages {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub accuracy: f64,
    pub classes: Vec<ClassMetrics>,
    pub macro_avg: Averages,
    pub weighted_avg: Averages,
    /// `confusion[t][p]`: rows are true classes, columns predictions.
    pub confusion: Vec<Vec<usize>>,
    pub total: usize,
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

pub fn classification_metrics(y_true: &[usize], y_pred: &[usize], classes: &ClassSet) -> Result<ClassificationReport> {
    if y_true.len() != y_pred.len() {
        return Err(Error::InvalidInput(format!(
            "{} true labels but {} predictions",
            y_true.len(),
            y_pred.len()
        )));
    }
    if y_true.is_empty() {
        return Err(Error::EmptyInput("no predictions to score".into()));
    }
    let g = classes.len();
    let mut confusion = vec![vec![0usize; g]; g];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        confusion[t][p] += 1;
    }
    let total = y_true.len();
    let trace: usize = (0..g).map(|k| confusion[k][k]).sum();
    let classes: Vec<ClassMetrics> = (0..g)
        .map(|k| {
            let tp = confusion[k][k];
            let support: usize = confusion[k].iter().sum();
            let predicted: usize = confusion.iter().map(|r| r[k]).sum();
            let precision = ratio(tp, predicted);
            let recall = ratio(tp, support);
            let f1 = if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            };
            ClassMetrics {
                label: classes.label(k).to_string(),
                precision,
                recall,
                f1,
                support,
                never_predicted: predicted == 0,
            }
        })
        .collect();
    let avg = |weight: &dyn Fn(&ClassMetrics) -> f64| {
        let wsum: f64 = classes.iter().map(weight).sum();
        let f = |get: fn(&ClassMetrics) -> f64| {
            if wsum == 0.0 {
                0.0
            } else {
                classes.iter().map(|c| weight(c) * get(c)).sum::<f64>() / wsum
            }
        };
        Averages {
            precision: f(|c| c.precision),
            recall: f(|c| c.recall),
            f1: f(|c| c.f1),
        }
    };
    let macro_avg = avg(&|_| 1.0);
    let weighted_avg = avg(&|c| c.support as f64);
    Ok(ClassificationReport {
        accuracy: ratio(trace, total),
        classes,
        macro_avg,
        weighted_avg,
        confusion,
        total,
    })
}

impl ClassificationReport {
    pub fn macro_f1(&self) -> f64 {
        self.macro_avg.f1
    }

    /// Aligned text table with per-class rows, averages and the confusion
    /// matrix.
    pub fn render(&self) -> String {
        let w = self.classes.iter().map(|c| c.label.len()).max().unwrap_or(0).max(12);
        let mut s = String::new();
        let _ = writeln!(s, "{:>w$} {:>9} {:>9} {:>9} {:>9}", "", "precision", "recall", "f1-score", "support");
        let _ = writeln!(s);
        for c in &self.classes {
            let mark = if c.never_predicted { " *" } else { "" };
            let _ = writeln!(
                s,
                "{:>w$} {:>9.4} {:>9.4} {:>9.4} {:>9}{mark}",
                c.label, c.precision, c.recall, c.f1, c.support
            );
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "{:>w$} {:>9} {:>9} {:>9.4} {:>9}", "accuracy", "", "", self.accuracy, self.total);
        for (name, a) in [("macro avg", self.macro_avg), ("weighted avg", self.weighted_avg)] {
            let _ = writeln!(
                s,
                "{:>w$} {:>9.4} {:>9.4} {:>9.4} {:>9}",
                name, a.precision, a.recall, a.f1, self.total
            );
        }
        if self.classes.iter().any(|c| c.never_predicted) {
            let _ = writeln!(s, "\n* never predicted; precision set to 0");
        }
        let cw = self.confusion.iter().flatten().map(|v| v.to_string().len()).max().unwrap_or(1).max(
            self.classes.iter().map(|c| c.label.len()).max().unwrap_or(1),
        );
        let _ = writeln!(s, "\nconfusion (rows true, columns predicted)");
        let _ = write!(s, "{:>w$}", "");
        for c in &self.classes {
            let _ = write!(s, " {:>cw$}", c.label);
        }
        let _ = writeln!(s);
        for (c, row) in self.classes.iter().zip(&self.confusion) {
            let _ = write!(s, "{:>w$}", c.label);
            for v in row {
                let _ = write!(s, " {v:>cw$}");
            }
            let _ = writeln!(s);
        }
        s
    }
}
