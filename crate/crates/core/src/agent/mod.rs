//! Tabular Q-learning over (bandwidth state × shaping action).

mod train;

pub use train::{train, EpisodeRecord, Replay, RewardModel, TrainingTrace};

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentParams {
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub epsilon_decay: f64,
    pub episodes: usize,
}

impl Default for AgentParams {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            gamma: 0.9,
            epsilon_start: 1.0,
            epsilon_end: 0.01,
            epsilon_decay: 0.995,
            episodes: 40_000,
        }
    }
}

impl AgentParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidConfig(format!("{what} (got {self:?})")));
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad("alpha must lie in (0, 1]");
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return bad("gamma must lie in [0, 1)");
        }
        if !(self.epsilon_end > 0.0 && self.epsilon_end <= self.epsilon_start && self.epsilon_start <= 1.0) {
            return bad("need 0 < epsilon_end <= epsilon_start <= 1");
        }
        if !(self.epsilon_decay > 0.0 && self.epsilon_decay < 1.0) {
            return bad("epsilon_decay must lie in (0, 1)");
        }
        Ok(())
    }
}

pub fn reward(expected: f64, observed: f64) -> f64 {
    -(expected - observed).powi(2)
}

pub fn decay_epsilon(start: f64, decay: f64, episode: u64, end: f64) -> f64 {
    let e = start * decay.powf(episode as f64);
    e.max(end)
}

/// Index of the largest value; the lowest index wins ties.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in row.iter().enumerate().skip(1) {
        if *v > row[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QTable {
    num_states: usize,
    num_actions: usize,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct QTableDocument {
    num_states: usize,
    num_actions: usize,
    actions: Vec<String>,
    values: Vec<f64>,
}

impl QTable {
    pub fn new(num_states: usize, num_actions: usize) -> Result<Self> {
        if num_states == 0 || num_actions == 0 {
            return Err(Error::InvalidConfig(format!(
                "Q-table needs at least one state and action, got {num_states}x{num_actions}"
            )));
        }
        Ok(Self {
            num_states,
            num_actions,
            values: vec![0.0; num_states * num_actions],
        })
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    fn check(&self, s: usize, a: usize) -> Result<()> {
        if s >= self.num_states {
            return Err(Error::RejectedInput(format!("state {s} outside 0..{}", self.num_states)));
        }
        if a >= self.num_actions {
            return Err(Error::InvalidAction {
                index: a,
                cardinality: self.num_actions,
            });
        }
        Ok(())
    }

    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.values[s * self.num_actions + a]
    }

    pub fn set(&mut self, s: usize, a: usize, v: f64) -> Result<()> {
        self.check(s, a)?;
        if !v.is_finite() {
            return Err(Error::RejectedInput(format!("non-finite Q value {v}")));
        }
        self.values[s * self.num_actions + a] = v;
        Ok(())
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.values[s * self.num_actions..(s + 1) * self.num_actions]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn best_action(&self, s: usize) -> usize {
        argmax(self.row(s))
    }

    pub fn max_value(&self, s: usize) -> f64 {
        self.row(s)[self.best_action(s)]
    }

    pub fn is_all_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }

    /// ε-greedy choice. One uniform draw decides explore vs exploit; exploring
    /// draws a second uniform action index.
    pub fn select_action<R: Rng + ?Sized>(&self, s: usize, epsilon: f64, rng: &mut R) -> usize {
        if rng.random::<f64>() < epsilon {
            rng.random_range(0..self.num_actions)
        } else {
            self.best_action(s)
        }
    }

    /// One Bellman backup. `next = None` marks a terminal transition.
    pub fn update(&mut self, s: usize, a: usize, r: f64, next: Option<usize>, alpha: f64, gamma: f64) -> Result<()> {
        self.check(s, a)?;
        if !r.is_finite() {
            return Err(Error::RejectedInput(format!("non-finite reward {r}")));
        }
        let future = match next {
            Some(n) => {
                self.check(n, 0)?;
                self.max_value(n)
            }
            None => 0.0,
        };
        let old = self.get(s, a);
        self.set(s, a, old + alpha * (r + gamma * future - old))
    }

    pub fn to_document(&self, labels: &[String]) -> Result<String> {
        if labels.len() != self.num_actions {
            return Err(Error::Shape {
                expected: self.num_actions,
                got: labels.len(),
            });
        }
        let doc = QTableDocument {
            num_states: self.num_states,
            num_actions: self.num_actions,
            actions: labels.to_vec(),
            values: self.values.clone(),
        };
        serde_json::to_string_pretty(&doc).map_err(|e| Error::Format(e.to_string()))
    }

    /// Returns the table and its action labels.
    pub fn from_document(text: &str) -> Result<(Self, Vec<String>)> {
        let doc: QTableDocument = serde_json::from_str(text).map_err(|e| Error::Schema(format!("Q-table: {e}")))?;
        let mut q = Self::new(doc.num_states, doc.num_actions)?;
        if doc.values.len() != doc.num_states * doc.num_actions || doc.actions.len() != doc.num_actions {
            return Err(Error::Schema(format!(
                "Q-table declares {}x{} but holds {} values and {} labels",
                doc.num_states,
                doc.num_actions,
                doc.values.len(),
                doc.actions.len()
            )));
        }
        if doc.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Schema("Q-table holds non-finite values".into()));
        }
        q.values = doc.values;
        Ok((q, doc.actions))
    }

    pub fn save(&self, path: &Path, labels: &[String]) -> Result<()> {
        std::fs::write(path, self.to_document(labels)? + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<(Self, Vec<String>)> {
        Self::from_document(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}
