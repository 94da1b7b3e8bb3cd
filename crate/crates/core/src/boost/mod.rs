//! Second forecasting stage: a gradient-boosted tree ensemble fit on the
//! first stage's residuals, the hybrid correction and the MSE metric.

mod tree;

pub use tree::TreeNode;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn same_len(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::Shape { expected: a, got: b });
    }
    Ok(())
}

/// `y_i − ŷ_i` for every evaluated sample, in Mbps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualVector(pub Vec<f64>);

impl ResidualVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub fn compute_residuals(actual: &[f64], predicted: &[f64]) -> Result<ResidualVector> {
    same_len(actual.len(), predicted.len())?;
    Ok(ResidualVector(actual.iter().zip(predicted).map(|(y, p)| y - p).collect()))
}

/// First-stage prediction plus predicted residual, elementwise. No clamping.
pub fn hybrid_predict(first_stage: &[f64], residuals: &[f64]) -> Result<Vec<f64>> {
    same_len(first_stage.len(), residuals.len())?;
    Ok(first_stage.iter().zip(residuals).map(|(p, d)| p + d).collect())
}

pub fn mse(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    same_len(actual.len(), predicted.len())?;
    if actual.is_empty() {
        return Err(Error::InsufficientData("MSE of an empty series".into()));
    }
    Ok(actual.iter().zip(predicted).map(|(y, p)| (y - p).powi(2)).sum::<f64>() / actual.len() as f64)
}

/// Booster feature rows: the lag window followed by the first-stage prediction.
pub fn residual_features(windows: &[Vec<f64>], first_stage: &[f64]) -> Result<Vec<Vec<f64>>> {
    same_len(windows.len(), first_stage.len())?;
    Ok(windows
        .iter()
        .zip(first_stage)
        .map(|(w, p)| {
            let mut row = w.clone();
            row.push(*p);
            row
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoosterConfig {
    pub n_estimators: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
}

impl Default for BoosterConfig {
    fn default() -> Self {
        Self {
            n_estimators: 100,
            learning_rate: 0.5,
            max_depth: 3,
            min_samples_leaf: 1,
        }
    }
}

impl BoosterConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "learning_rate must be > 0, got {}",
                self.learning_rate
            )));
        }
        if self.max_depth == 0 || self.min_samples_leaf == 0 {
            return Err(Error::InvalidConfig("max_depth and min_samples_leaf must be >= 1".into()));
        }
        Ok(())
    }
}

/// `base + ν · Σ trees`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedEnsemble {
    pub base_prediction: f64,
    pub learning_rate: f64,
    pub n_estimators: usize,
    pub n_features: usize,
    pub trees: Vec<TreeNode>,
}

/// Training MSE after each boosting round (index 0 is the base prediction).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostHistory {
    pub train_mse: Vec<f64>,
}

impl BoostedEnsemble {
    pub fn fit(features: &[Vec<f64>], targets: &[f64], cfg: &BoosterConfig) -> Result<(Self, BoostHistory)> {
        cfg.validate()?;
        same_len(features.len(), targets.len())?;
        if targets.is_empty() {
            return Err(Error::InsufficientData("booster needs at least one sample".into()));
        }
        let n_features = features[0].len();
        for row in features {
            same_len(n_features, row.len())?;
        }
        let base = targets.iter().sum::<f64>() / targets.len() as f64;
        let mut current = vec![base; targets.len()];
        let mut history = vec![mse(targets, &current)?];
        let mut trees = Vec::with_capacity(cfg.n_estimators);
        for _ in 0..cfg.n_estimators {
            let pseudo: Vec<f64> = targets.iter().zip(&current).map(|(t, c)| t - c).collect();
            let tree = TreeNode::fit(features, &pseudo, cfg.max_depth, cfg.min_samples_leaf);
            for (c, row) in current.iter_mut().zip(features) {
                *c += cfg.learning_rate * tree.predict(row);
            }
            history.push(mse(targets, &current)?);
            trees.push(tree);
        }
        Ok((
            Self {
                base_prediction: base,
                learning_rate: cfg.learning_rate,
                n_estimators: cfg.n_estimators,
                n_features,
                trees,
            },
            BoostHistory { train_mse: history },
        ))
    }

    pub fn predict_row(&self, row: &[f64]) -> Result<f64> {
        same_len(self.n_features, row.len())?;
        Ok(self.base_prediction + self.learning_rate * self.trees.iter().map(|t| t.predict(row)).sum::<f64>())
    }

    pub fn predict(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        rows.iter().map(|r| self.predict_row(r)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn residual_examples() {
        assert_eq!(compute_residuals(&[10.0, 8.0], &[9.0, 10.0]).unwrap().0, vec![1.0, -2.0]);
        assert_eq!(compute_residuals(&[4.0, 4.5], &[4.0, 4.5]).unwrap().0, vec![0.0, 0.0]);
        assert_eq!(compute_residuals(&[5.0], &[2.0]).unwrap().0, vec![3.0]);
        assert!(matches!(compute_residuals(&[1.0], &[]), Err(Error::Shape { .. })));
    }

    #[test]
    fn hybrid_examples() {
        assert_eq!(hybrid_predict(&[9.0], &[0.8]).unwrap(), vec![9.8]);
        assert_eq!(hybrid_predict(&[3.0, 4.0], &[0.0, 0.0]).unwrap(), vec![3.0, 4.0]);
        assert_eq!(hybrid_predict(&[0.0], &[-1.0]).unwrap(), vec![-1.0]);
        assert!(hybrid_predict(&[0.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn mse_examples() {
        assert_eq!(mse(&[1.0, 2.0], &[1.0, 4.0]).unwrap(), 2.0);
        assert_eq!(mse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(mse(&[3.0], &[0.0]).unwrap(), 9.0);
        assert!(matches!(mse(&[], &[]), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn constant_targets_predict_constant() {
        let rows = vec![vec![1.0], vec![5.0], vec![9.0]];
        let (e, _) = BoostedEnsemble::fit(&rows, &[2.0, 2.0, 2.0], &BoosterConfig::default()).unwrap();
        for x in [-100.0, 0.0, 3.3, 1e6] {
            assert_eq!(e.predict_row(&[x]).unwrap(), 2.0);
        }
    }

    #[test]
    fn step_targets_are_recovered() {
        let rows: Vec<Vec<f64>> = (0..4).map(|i| vec![i as f64]).collect();
        let targets = [0.0, 0.0, 10.0, 10.0];
        let cfg = BoosterConfig {
            n_estimators: 40,
            max_depth: 1,
            ..BoosterConfig::default()
        };
        let (e, _) = BoostedEnsemble::fit(&rows, &targets, &cfg).unwrap();
        match &e.trees[0] {
            TreeNode::Split { threshold, left, right, .. } => {
                assert!(*threshold > 1.0 && *threshold < 2.0);
                assert_eq!(e.base_prediction + left.predict(&[0.0]), 0.0);
                assert_eq!(e.base_prediction + right.predict(&[3.0]), 10.0);
            }
            leaf => panic!("expected a split, got {leaf:?}"),
        }
        for (row, t) in rows.iter().zip(targets) {
            assert!((e.predict_row(row).unwrap() - t).abs() < 1e-6);
        }
    }

    #[test]
    fn empty_and_single_tree_predictions() {
        let empty = BoostedEnsemble {
            base_prediction: 1.25,
            learning_rate: 0.5,
            n_estimators: 0,
            n_features: 2,
            trees: vec![],
        };
        assert_eq!(empty.predict_row(&[7.0, 8.0]).unwrap(), 1.25);
        let single = BoostedEnsemble {
            base_prediction: 0.0,
            trees: vec![TreeNode::Leaf { value: 4.0 }],
            n_estimators: 1,
            ..empty.clone()
        };
        assert_eq!(single.predict_row(&[0.0, 0.0]).unwrap(), 2.0);
        assert!(matches!(single.predict_row(&[0.0]), Err(Error::Shape { .. })));
    }

    #[test]
    fn empty_input_rejected() {
        assert!(matches!(
            BoostedEnsemble::fit(&[], &[], &BoosterConfig::default()),
            Err(Error::InsufficientData(_))
        ));
    }

    proptest! {
        #[test]
        fn training_loss_never_increases(
            data in prop::collection::vec((0.0f64..10.0, 0.0f64..10.0, -5.0f64..5.0), 2..60),
            lr in 0.05f64..1.0,
        ) {
            let rows: Vec<Vec<f64>> = data.iter().map(|(a, b, _)| vec![*a, *b]).collect();
            let targets: Vec<f64> = data.iter().map(|d| d.2).collect();
            let cfg = BoosterConfig { n_estimators: 15, learning_rate: lr, ..BoosterConfig::default() };
            let (e, h) = BoostedEnsemble::fit(&rows, &targets, &cfg).unwrap();
            for pair in h.train_mse.windows(2) {
                prop_assert!(pair[1] <= pair[0] + 1e-9 * (1.0 + pair[0]));
            }
            // Row order at inference does not matter.
            let mut rev = rows.clone();
            rev.reverse();
            let mut back = e.predict(&rev).unwrap();
            back.reverse();
            prop_assert_eq!(back, e.predict(&rows).unwrap());
        }

        #[test]
        fn perfect_residuals_reconstruct_truth(
            pairs in prop::collection::vec((0.0f64..100.0, 0.0f64..100.0), 1..50),
        ) {
            let y: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let first: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let res = compute_residuals(&y, &first).unwrap();
            let back = hybrid_predict(&first, res.as_slice()).unwrap();
            for (a, b) in back.iter().zip(&y) {
                prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
            }
        }
    }
}
