use serde::{Deserialize, Serialize};

/// Axis-aligned regression tree; rows with `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeNode {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { value } => return *value,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => node = if row[*feature] <= *threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn leaves(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { left, right, .. } => left.leaves() + right.leaves(),
        }
    }

    /// Greedy squared-error tree over the rows in `idx`.
    pub fn fit(rows: &[Vec<f64>], targets: &[f64], max_depth: usize, min_leaf: usize) -> TreeNode {
        let idx: Vec<usize> = (0..targets.len()).collect();
        grow(rows, targets, &idx, max_depth, min_leaf.max(1))
    }
}

struct BestSplit {
    gain: f64,
    feature: usize,
    threshold: f64,
}

fn mean(targets: &[f64], idx: &[usize]) -> f64 {
    idx.iter().map(|&i| targets[i]).sum::<f64>() / idx.len() as f64
}

fn grow(rows: &[Vec<f64>], targets: &[f64], idx: &[usize], depth: usize, min_leaf: usize) -> TreeNode {
    let leaf = TreeNode::Leaf {
        value: mean(targets, idx),
    };
    if depth == 0 || idx.len() < 2 * min_leaf {
        return leaf;
    }
    let Some(best) = best_split(rows, targets, idx, min_leaf) else {
        return leaf;
    };
    let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| rows[i][best.feature] <= best.threshold);
    TreeNode::Split {
        feature: best.feature,
        threshold: best.threshold,
        left: Box::new(grow(rows, targets, &l, depth - 1, min_leaf)),
        right: Box::new(grow(rows, targets, &r, depth - 1, min_leaf)),
    }
}

/// Exhaustive search over midpoints between consecutive distinct values.
/// Earlier features and lower thresholds win exact ties.
fn best_split(rows: &[Vec<f64>], targets: &[f64], idx: &[usize], min_leaf: usize) -> Option<BestSplit> {
    let n = idx.len();
    let total: f64 = idx.iter().map(|&i| targets[i]).sum();
    let parent = total * total / n as f64;
    let width = rows[idx[0]].len();
    let mut best: Option<BestSplit> = None;
    let mut order = idx.to_vec();
    for feature in 0..width {
        order.sort_by(|&a, &b| rows[a][feature].total_cmp(&rows[b][feature]));
        let mut left_sum = 0.0;
        for k in 0..n - 1 {
            left_sum += targets[order[k]];
            let (lo, hi) = (rows[order[k]][feature], rows[order[k + 1]][feature]);
            let n_left = k + 1;
            if lo == hi || n_left < min_leaf || n - n_left < min_leaf {
                continue;
            }
            let right_sum = total - left_sum;
            let gain = left_sum * left_sum / n_left as f64 + right_sum * right_sum / (n - n_left) as f64 - parent;
            if gain > 1e-12 * (1.0 + parent.abs()) && best.as_ref().is_none_or(|b| gain > b.gain) {
                best = Some(BestSplit {
                    gain,
                    feature,
                    threshold: lo + (hi - lo) / 2.0,
                });
            }
        }
    }
    best
}
