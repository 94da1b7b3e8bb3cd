use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::agent::AgentParams;
use crate::boost::BoosterConfig;
use crate::error::{Error, Result};
use crate::forecast::{AdamParams, BiLstmConfig, TrainConfig};
use crate::model::{ActionSpace, Binning};
use crate::sim::SimConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub train_samples: usize,
    pub test_samples: usize,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            train_samples: 1800,
            test_samples: 700,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForecasterConfig {
    pub window: usize,
    pub hidden: usize,
    pub layers: usize,
    pub dense_hidden: usize,
    pub dropout: f64,
    pub epochs: usize,
    pub train_fraction: f64,
    pub val_fraction: f64,
    pub batch_size: usize,
    pub learning_rate: f64,
}

impl Default for ForecasterConfig {
    fn default() -> Self {
        let m = BiLstmConfig::default();
        let t = TrainConfig::default();
        Self {
            window: m.window,
            hidden: m.hidden,
            layers: m.layers,
            dense_hidden: m.dense_hidden,
            dropout: m.dropout,
            epochs: t.epochs,
            train_fraction: t.train_fraction,
            val_fraction: t.val_fraction,
            batch_size: t.batch_size,
            learning_rate: t.adam.lr,
        }
    }
}

impl ForecasterConfig {
    pub fn model(&self) -> BiLstmConfig {
        BiLstmConfig {
            window: self.window,
            hidden: self.hidden,
            layers: self.layers,
            dense_hidden: self.dense_hidden,
            dropout: self.dropout,
        }
    }

    pub fn training(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            train_fraction: self.train_fraction,
            val_fraction: self.val_fraction,
            batch_size: self.batch_size,
            adam: AdamParams {
                lr: self.learning_rate,
                ..AdamParams::default()
            },
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentConfig {
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub epsilon_decay: f64,
    pub episodes: usize,
    pub num_bins: usize,
    pub max_bw: f64,
    /// Target bandwidth in the reward; defaults to the cell capacity.
    pub expected_bw: f64,
    /// Ticks averaged when probing an action's achieved bandwidth.
    pub probe_ticks: usize,
}

impl Default for AgentConfig {
    fn default() -> Self {
        let p = AgentParams::default();
        Self {
            alpha: p.alpha,
            gamma: p.gamma,
            epsilon_start: p.epsilon_start,
            epsilon_end: p.epsilon_end,
            epsilon_decay: p.epsilon_decay,
            episodes: p.episodes,
            num_bins: 20,
            max_bw: 100.0,
            expected_bw: 100.0,
            probe_ticks: 5,
        }
    }
}

impl AgentConfig {
    pub fn params(&self) -> AgentParams {
        AgentParams {
            alpha: self.alpha,
            gamma: self.gamma,
            epsilon_start: self.epsilon_start,
            epsilon_end: self.epsilon_end,
            epsilon_decay: self.epsilon_decay,
            episodes: self.episodes,
        }
    }

    pub fn binning(&self) -> Result<Binning> {
        Binning::new(self.num_bins, self.max_bw)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoopConfig {
    pub timestamps: usize,
    /// Apply the action chosen for the observed state instead of the forecast.
    pub reactive: bool,
}

impl Default for LoopConfig {
    fn default() -> Self {
        Self {
            timestamps: 20,
            reactive: false,
        }
    }
}

/// Everything one experiment needs. All randomness derives from `seed`; the
/// per-component seeds inside `sim` are overwritten.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub dataset: DatasetConfig,
    pub sim: SimConfig,
    pub forecaster: ForecasterConfig,
    pub booster: BoosterConfig,
    pub agent: AgentConfig,
    #[serde(rename = "loop")]
    pub run_loop: LoopConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            dataset: DatasetConfig::default(),
            sim: SimConfig::default(),
            forecaster: ForecasterConfig::default(),
            booster: BoosterConfig::default(),
            agent: AgentConfig::default(),
            run_loop: LoopConfig::default(),
        }
    }
}

/// Independent seed streams derived from the experiment seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedStream {
    Dataset = 1,
    Init = 2,
    Shuffle = 3,
    Agent = 4,
    Live = 5,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        self.forecaster.model().validate()?;
        self.forecaster.training(0).validate()?;
        self.booster.validate()?;
        self.agent.params().validate()?;
        self.agent.binning()?;
        if !(self.agent.expected_bw.is_finite() && self.agent.expected_bw > 0.0) {
            return Err(Error::InvalidConfig(format!("expected_bw must be > 0, got {}", self.agent.expected_bw)));
        }
        if self.dataset.train_samples <= self.forecaster.window || self.dataset.test_samples <= self.forecaster.window {
            return Err(Error::InvalidConfig(format!(
                "train and test sets need more than {} samples",
                self.forecaster.window
            )));
        }
        if self.run_loop.timestamps == 0 {
            return Err(Error::InvalidConfig("loop.timestamps must be >= 1".into()));
        }
        Ok(())
    }

    pub fn seed_for(&self, stream: SeedStream) -> u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream as u64);
        rng.random()
    }

    pub fn sim_config(&self, stream: SeedStream) -> SimConfig {
        SimConfig {
            rng_seed: self.seed_for(stream),
            ..self.sim.clone()
        }
    }

    pub fn actions(&self) -> ActionSpace {
        ActionSpace::table3()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_carry_the_reference_hyperparameters() {
        let c = ExperimentConfig::default();
        assert_eq!((c.dataset.train_samples, c.dataset.test_samples), (1800, 700));
        assert_eq!(c.sim.num_ues_max, 30);
        assert_eq!((c.booster.n_estimators, c.booster.learning_rate), (100, 0.5));
        let p = c.agent.params();
        assert_eq!((p.alpha, p.gamma, p.epsilon_start, p.epsilon_decay, p.epsilon_end), (0.1, 0.9, 1.0, 0.995, 0.01));
        assert_eq!(p.episodes, 40_000);
        assert_eq!((c.forecaster.window, c.forecaster.layers, c.forecaster.hidden, c.forecaster.epochs), (9, 3, 50, 40));
        assert_eq!(c.run_loop.timestamps, 20);
    }

    #[test]
    fn toml_round_trip_and_partial_files() {
        let c = ExperimentConfig::default();
        assert_eq!(ExperimentConfig::from_toml(&c.to_toml().unwrap()).unwrap(), c);
        let partial = ExperimentConfig::from_toml("seed = 3\n[agent]\nepisodes = 10\n").unwrap();
        assert_eq!(partial.seed, 3);
        assert_eq!(partial.agent.episodes, 10);
        assert_eq!(partial.agent.alpha, 0.1);
    }

    #[test]
    fn bad_files_are_config_errors() {
        for text in ["[agent]\nalpha = 0.0\n", "[sim]\ncapacity = -1.0\n", "[nonsense]\nx = 1\n", "seed = \"x\"\n"] {
            let err = ExperimentConfig::from_toml(text).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{text}: {err}");
        }
    }

    #[test]
    fn seed_streams_differ_and_are_stable() {
        let c = ExperimentConfig::default();
        let a = c.seed_for(SeedStream::Dataset);
        assert_eq!(a, c.seed_for(SeedStream::Dataset));
        assert_ne!(a, c.seed_for(SeedStream::Live));
        let other = ExperimentConfig { seed: 8, ..c.clone() };
        assert_ne!(a, other.seed_for(SeedStream::Dataset));
    }
}
