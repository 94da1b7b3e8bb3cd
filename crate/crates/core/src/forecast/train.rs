use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{Adam, AdamParams};
use super::bilstm::BiLstm;
use super::window::WindowedDataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Leading fraction of windows used for weight updates.
    pub train_fraction: f64,
    /// Fraction following the training block used for validation loss.
    pub val_fraction: f64,
    pub batch_size: usize,
    pub adam: AdamParams,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 40,
            train_fraction: 0.8,
            val_fraction: 0.1,
            batch_size: 32,
            adam: AdamParams::default(),
            seed: 17,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let f = |v: f64| (0.0..=1.0).contains(&v);
        if !(f(self.train_fraction) && f(self.val_fraction) && self.train_fraction + self.val_fraction <= 1.0 + 1e-12) {
            return Err(Error::InvalidConfig(format!(
                "train/val fractions {} + {} must lie in [0, 1]",
                self.train_fraction, self.val_fraction
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be >= 1".into()));
        }
        let a = &self.adam;
        if !(a.lr > 0.0 && (0.0..1.0).contains(&a.beta1) && (0.0..1.0).contains(&a.beta2) && a.eps > 0.0) {
            return Err(Error::InvalidConfig(format!("bad Adam parameters {a:?}")));
        }
        Ok(())
    }

    /// (train, validation) window counts for a dataset of `n` windows.
    pub fn split(&self, n: usize) -> (usize, usize) {
        let train = (n as f64 * self.train_fraction).floor() as usize;
        let val = ((n as f64 * self.val_fraction).floor() as usize).min(n - train);
        (train, val)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
}

/// Losses are MSE on scaled values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    pub initial_train_loss: f64,
    pub train_windows: usize,
    pub val_windows: usize,
    pub epochs: Vec<EpochLoss>,
}

impl TrainingReport {
    pub fn final_train_loss(&self) -> f64 {
        self.epochs.last().map_or(self.initial_train_loss, |e| e.train_loss)
    }
}

/// Mini-batch BPTT training with Adam on the leading `train_fraction` of
/// windows (chronological split), reshuffled every epoch.
pub fn train(model: &mut BiLstm, data: &WindowedDataset, cfg: &TrainConfig) -> Result<TrainingReport> {
    cfg.validate()?;
    if cfg.epochs == 0 {
        return Err(Error::Untrained("epochs = 0".into()));
    }
    if data.is_empty() {
        return Err(Error::InsufficientData("no training windows".into()));
    }
    if data.window_size != model.config().window {
        return Err(Error::Shape {
            expected: model.config().window,
            got: data.window_size,
        });
    }
    let (n_train, n_val) = cfg.split(data.len());
    if n_train == 0 {
        return Err(Error::InsufficientData(format!(
            "{} windows leave none for training at fraction {}",
            data.len(),
            cfg.train_fraction
        )));
    }
    let train_inputs = &data.inputs[..n_train];
    let train_targets = &data.targets[..n_train];
    let val_inputs = &data.inputs[n_train..n_train + n_val];
    let val_targets = &data.targets[n_train..n_train + n_val];

    let initial_train_loss = model.mse(train_inputs, train_targets)?;
    let mut adam = Adam::new(cfg.adam, model.params().len());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..n_train).collect();
    let dropout = model.config().dropout > 0.0;
    let mut epochs = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut sse_total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let inputs: Vec<&[f64]> = batch.iter().map(|&i| train_inputs[i].as_slice()).collect();
            let targets: Vec<f64> = batch.iter().map(|&i| train_targets[i]).collect();
            let seeds: Option<Vec<u64>> = dropout.then(|| batch.iter().map(|_| rng.random()).collect());
            let (sse, mut grad) = model.sse_gradient(&inputs, &targets, seeds.as_deref())?;
            if !sse.is_finite() {
                return Err(Error::Divergence { epoch, loss: sse });
            }
            let scale = 1.0 / batch.len() as f64;
            grad.iter_mut().for_each(|g| *g *= scale);
            adam.step(model.params_mut(), &grad);
            sse_total += sse;
        }
        let train_loss = sse_total / n_train as f64;
        let val_loss = if n_val > 0 {
            Some(model.mse(val_inputs, val_targets)?)
        } else {
            None
        };
        if !train_loss.is_finite() || val_loss.is_some_and(|v| !v.is_finite()) || model.params().iter().any(|p| !p.is_finite()) {
            return Err(Error::Divergence {
                epoch,
                loss: train_loss,
            });
        }
        epochs.push(EpochLoss {
            epoch,
            train_loss,
            val_loss,
        });
    }

    Ok(TrainingReport {
        initial_train_loss,
        train_windows: n_train,
        val_windows: n_val,
        epochs,
    })
}
