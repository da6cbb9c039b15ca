use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{argmax, check_xy};
use crate::error::Result;
use crate::seed::{self, TaskRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    /// `ceil(sqrt(p))`.
    Sqrt,
    All,
    Count(usize),
}

impl MaxFeatures {
    pub fn resolve(self, p: usize) -> usize {
        let m = match self {
            MaxFeatures::Sqrt => (p as f64).sqrt().ceil() as usize,
            MaxFeatures::All => p,
            MaxFeatures::Count(m) => m,
        };
        m.clamp(1, p.max(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub max_features: MaxFeatures,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: None,
            min_samples_split: 2,
            min_samples_leaf: 1,
            max_features: MaxFeatures::Sqrt,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        counts: Vec<usize>,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        counts: Vec<usize>,
        /// `n * gini(node) - n_l * gini(left) - n_r * gini(right)`.
        impurity_decrease: f64,
    },
}

impl Node {
    pub fn counts(&self) -> &[usize] {
        match self {
            Node::Leaf { counts } | Node::Split { counts, .. } => counts,
        }
    }
}

/// CART classification tree grown greedily on Gini impurity.
/// `nodes[0]` is the root; rows with `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
    pub n_features: usize,
    pub n_classes: usize,
}

pub fn gini(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    /// `sum l^2 / n_l + sum r^2 / n_r`; larger is purer.
    score: f64,
}

fn best_split_on(
    x: &[Vec<f64>],
    y: &[usize],
    rows: &mut [usize],
    feature: usize,
    n_classes: usize,
    min_leaf: usize,
) -> Option<BestSplit> {
    rows.sort_by(|&a, &b| x[a][feature].total_cmp(&x[b][feature]).then(a.cmp(&b)));
    let n = rows.len();
    let mut left = vec![0usize; n_classes];
    let mut right = vec![0usize; n_classes];
    for &r in rows.iter() {
        right[y[r]] += 1;
    }
    let mut sum_l2 = 0.0f64;
    let mut sum_r2: f64 = right.iter().map(|&c| (c * c) as f64).sum();
    let mut best: Option<BestSplit> = None;
    for t in 1..n {
        let c = y[rows[t - 1]];
        sum_l2 += (2 * left[c] + 1) as f64;
        sum_r2 -= (2 * right[c] - 1) as f64;
        left[c] += 1;
        right[c] -= 1;
        let (lo, hi) = (x[rows[t - 1]][feature], x[rows[t]][feature]);
        if lo >= hi || t < min_leaf || n - t < min_leaf {
            continue;
        }
        let score = sum_l2 / t as f64 + sum_r2 / (n - t) as f64;
        if best.as_ref().is_none_or(|b| score > b.score) {
            let mid = lo + (hi - lo) / 2.0;
            let threshold = if mid >= hi { lo } else { mid };
            best = Some(BestSplit { feature, threshold, score });
        }
    }
    best
}

pub(crate) fn grow(
    x: &[Vec<f64>],
    y: &[usize],
    n_classes: usize,
    sample: Vec<usize>,
    params: &TreeParams,
    rng: &mut TaskRng,
) -> DecisionTree {
    let p = x.first().map_or(0, Vec::len);
    let mtry = params.max_features.resolve(p);
    let mut nodes: Vec<Node> = Vec::new();
    // (node slot, rows, depth)
    let mut stack = vec![(0usize, sample, 0usize)];
    nodes.push(Node::Leaf { counts: vec![] });
    let mut features: Vec<usize> = (0..p).collect();

    while let Some((slot, mut rows, depth)) = stack.pop() {
        let mut counts = vec![0usize; n_classes];
        for &r in &rows {
            counts[y[r]] += 1;
        }
        let n = rows.len();
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let stop = pure
            || n < params.min_samples_split.max(2)
            || n < 2 * params.min_samples_leaf.max(1)
            || params.max_depth.is_some_and(|d| depth >= d);
        let mut best: Option<BestSplit> = None;
        if !stop {
            features.shuffle(rng);
            let mut visited = 0;
            for &f in &features {
                if visited >= mtry && best.is_some() {
                    break;
                }
                let first = x[rows[0]][f];
                if rows.iter().all(|&r| x[r][f] == first) {
                    continue;
                }
                visited += 1;
                if let Some(s) = best_split_on(x, y, &mut rows, f, n_classes, params.min_samples_leaf.max(1)) {
                    if best.as_ref().is_none_or(|b| s.score > b.score) {
                        best = Some(s);
                    }
                }
            }
        }
        match best {
            None => nodes[slot] = Node::Leaf { counts },
            Some(b) => {
                let (l_rows, r_rows): (Vec<usize>, Vec<usize>) =
                    rows.iter().partition(|&&r| x[r][b.feature] <= b.threshold);
                let mut lc = vec![0usize; n_classes];
                for &r in &l_rows {
                    lc[y[r]] += 1;
                }
                let rc: Vec<usize> = counts.iter().zip(&lc).map(|(a, b)| a - b).collect();
                let decrease = n as f64 * gini(&counts)
                    - l_rows.len() as f64 * gini(&lc)
                    - r_rows.len() as f64 * gini(&rc);
                let left = nodes.len();
                nodes.push(Node::Leaf { counts: vec![] });
                let right = nodes.len();
                nodes.push(Node::Leaf { counts: vec![] });
                nodes[slot] = Node::Split {
                    feature: b.feature,
                    threshold: b.threshold,
                    left,
                    right,
                    counts,
                    impurity_decrease: decrease.max(0.0),
                };
                stack.push((right, r_rows, depth + 1));
                stack.push((left, l_rows, depth + 1));
            }
        }
    }
    DecisionTree {
        nodes,
        n_features: p,
        n_classes,
    }
}

/// Fits a tree on all rows.
pub fn fit_tree(x: &[Vec<f64>], y: &[usize], n_classes: usize, params: &TreeParams, seed: u64) -> Result<DecisionTree> {
    check_xy(x, y)?;
    let mut rng = seed::rng(seed);
    Ok(grow(x, y, n_classes, (0..x.len()).collect(), params, &mut rng))
}

impl DecisionTree {
    pub fn leaf_counts(&self, row: &[f64]) -> &[usize] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { counts } => return counts,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => i = if row[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn predict_one(&self, row: &[f64]) -> usize {
        argmax(self.leaf_counts(row))
    }

    pub fn predict(&self, rows: &[Vec<f64>]) -> Vec<usize> {
        rows.iter().map(|r| self.predict_one(r)).collect()
    }

    /// Unnormalized impurity decrease per feature.
    pub fn impurity_decrease(&self) -> Vec<f64> {
        let mut imp = vec![0.0; self.n_features];
        for n in &self.nodes {
            if let Node::Split {
                feature,
                impurity_decrease,
                ..
            } = n
            {
                imp[*feature] += impurity_decrease;
            }
        }
        imp
    }

    pub fn depth(&self) -> usize {
        fn go(t: &DecisionTree, i: usize) -> usize {
            match &t.nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(t, *left).max(go(t, *right)),
            }
        }
        go(self, 0)
    }
}
