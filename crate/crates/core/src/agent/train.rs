use std::io::{Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{decay_epsilon, reward, AgentParams, QTable};
use crate::error::{Error, Result};

/// Fixed target bandwidth plus a precomputed (state × action) table of the
/// bandwidth each action achieves from each state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardModel {
    pub expected: f64,
    num_states: usize,
    num_actions: usize,
    achieved: Vec<f64>,
}

impl RewardModel {
    pub fn new(expected: f64, num_states: usize, num_actions: usize, achieved: Vec<f64>) -> Result<Self> {
        if !(expected.is_finite() && expected > 0.0) {
            return Err(Error::InvalidConfig(format!("expected bandwidth must be > 0, got {expected}")));
        }
        if achieved.len() != num_states * num_actions {
            return Err(Error::Shape {
                expected: num_states * num_actions,
                got: achieved.len(),
            });
        }
        if achieved.iter().any(|v| !v.is_finite()) {
            return Err(Error::RejectedInput("achieved table holds non-finite values".into()));
        }
        Ok(Self {
            expected,
            num_states,
            num_actions,
            achieved,
        })
    }

    /// Builds the table row by row from `f(state, action)`.
    pub fn tabulate(
        expected: f64,
        num_states: usize,
        num_actions: usize,
        mut f: impl FnMut(usize, usize) -> Result<f64>,
    ) -> Result<Self> {
        let mut achieved = Vec::with_capacity(num_states * num_actions);
        for s in 0..num_states {
            for a in 0..num_actions {
                achieved.push(f(s, a)?);
            }
        }
        Self::new(expected, num_states, num_actions, achieved)
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn achieved(&self, s: usize, a: usize) -> f64 {
        self.achieved[s * self.num_actions + a]
    }

    pub fn reward(&self, s: usize, a: usize) -> f64 {
        reward(self.expected, self.achieved(s, a))
    }

    /// Action with the highest immediate reward; lowest index wins ties.
    pub fn oracle_action(&self, s: usize) -> usize {
        let row: Vec<f64> = (0..self.num_actions).map(|a| self.reward(s, a)).collect();
        super::argmax(&row)
    }
}

/// The state sequence an episode walks through, paired with the true state at
/// each position. Training acts on `predicted`; `actual` only feeds the MAE.
#[derive(Debug, Clone, PartialEq)]
pub struct Replay {
    pub predicted: Vec<usize>,
    pub actual: Vec<usize>,
}

impl Replay {
    pub fn new(predicted: Vec<usize>, actual: Vec<usize>) -> Result<Self> {
        if predicted.is_empty() {
            return Err(Error::InsufficientData("empty state sequence".into()));
        }
        if predicted.len() != actual.len() {
            return Err(Error::Shape {
                expected: predicted.len(),
                got: actual.len(),
            });
        }
        Ok(Self { predicted, actual })
    }

    /// Replay where the prediction is exact.
    pub fn exact(states: Vec<usize>) -> Result<Self> {
        Self::new(states.clone(), states)
    }

    pub fn len(&self) -> usize {
        self.predicted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predicted.is_empty()
    }

    /// Mean |O(y, π(y)) − O(y, π(ŷ))| under the current greedy policy.
    pub fn action_mae(&self, q: &QTable, model: &RewardModel) -> f64 {
        let greedy: Vec<usize> = (0..q.num_states()).map(|s| q.best_action(s)).collect();
        let total: f64 = self
            .actual
            .iter()
            .zip(&self.predicted)
            .map(|(&y, &p)| (model.achieved(y, greedy[y]) - model.achieved(y, greedy[p])).abs())
            .sum();
        total / self.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub total_reward: f64,
    pub epsilon: f64,
    pub mae: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingTrace {
    pub records: Vec<EpisodeRecord>,
}

impl TrainingTrace {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        for r in &self.records {
            w.serialize(r).map_err(|e| Error::Format(e.to_string()))?;
        }
        w.flush().map_err(|e| Error::Format(e.to_string()))
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    /// Parses a trace; a missing column is a format error.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let headers = r.headers().map_err(|e| Error::Format(e.to_string()))?.clone();
        for col in ["episode", "total_reward", "epsilon", "mae"] {
            if !headers.iter().any(|h| h == col) {
                return Err(Error::Format(format!("trace is missing the `{col}` column")));
            }
        }
        let records = r
            .deserialize()
            .collect::<std::result::Result<Vec<EpisodeRecord>, _>>()
            .map_err(|e| Error::Format(e.to_string()))?;
        Ok(Self { records })
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(std::io::BufReader::new(file))
    }
}

/// Episodic Q-learning. Each episode walks the predicted sequence in order;
/// the successor of position `i` is position `i + 1` and the last position is
/// terminal. ε for episode `k` (1-based) is the decay evaluated at `k − 1`.
pub fn train(q: &mut QTable, replay: &Replay, model: &RewardModel, params: &AgentParams, seed: u64) -> Result<TrainingTrace> {
    params.validate()?;
    if replay.is_empty() {
        return Err(Error::InsufficientData("empty state sequence".into()));
    }
    if (q.num_states(), q.num_actions()) != (model.num_states(), model.num_actions()) {
        return Err(Error::Shape {
            expected: q.num_states() * q.num_actions(),
            got: model.num_states() * model.num_actions(),
        });
    }
    if let Some(&s) = replay.predicted.iter().chain(&replay.actual).find(|&&s| s >= q.num_states()) {
        return Err(Error::RejectedInput(format!("state {s} outside 0..{}", q.num_states())));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::with_capacity(params.episodes);
    let states = &replay.predicted;
    for episode in 1..=params.episodes {
        let epsilon = decay_epsilon(params.epsilon_start, params.epsilon_decay, episode as u64 - 1, params.epsilon_end);
        let mut total_reward = 0.0;
        for (i, &s) in states.iter().enumerate() {
            let a = q.select_action(s, epsilon, &mut rng);
            let r = model.reward(s, a);
            q.update(s, a, r, states.get(i + 1).copied(), params.alpha, params.gamma)?;
            total_reward += r;
        }
        records.push(EpisodeRecord {
            episode,
            total_reward,
            epsilon,
            mae: replay.action_mae(q, model),
        });
    }
    Ok(TrainingTrace { records })
}
