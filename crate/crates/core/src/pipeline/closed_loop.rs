use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::agent::{achieved_table, state_of};
use super::config::{ExperimentConfig, SeedStream};
use super::forecaster::HybridForecaster;
use crate::agent::{QTable, RewardModel};
use crate::error::{Error, Result};
use crate::model::{ActionSpace, Binning};
use crate::sim::Simulator;

/// Source of ŷ_i for the loop.
#[derive(Debug, Clone, Copy)]
pub enum Predictor<'a> {
    Hybrid(&'a HybridForecaster),
    /// Returns the observation itself. Upper-bound fixture, not a forecaster.
    Oracle { window: usize },
}

impl Predictor<'_> {
    pub fn window(&self) -> usize {
        match self {
            Predictor::Hybrid(m) => m.window(),
            Predictor::Oracle { window } => *window,
        }
    }

    fn predict(&self, preceding: &[f64], observed: f64) -> Result<f64> {
        match self {
            Predictor::Hybrid(m) => Ok(m.predict(preceding)?.hybrid),
            Predictor::Oracle { .. } => Ok(observed),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopRecord {
    pub time_s: f64,
    pub actual_bw: f64,
    pub predicted_bw: f64,
    pub action_actual: String,
    pub action_predicted: String,
    /// Bandwidth measured on the tick after the action was applied.
    pub achieved_bw: f64,
    #[serde(rename = "match")]
    pub matched: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopSummary {
    pub mode: String,
    pub timestamps: usize,
    pub matches: usize,
    pub accuracy: f64,
    /// Mean |O(y, a_y) − O(y, a_ŷ)| over the achieved-bandwidth table, Mbps.
    pub mae: f64,
    pub actions_applied: usize,
    /// Set when the Q-table is all zeros, so every choice is the tie-break.
    pub degenerate_qtable: bool,
}

impl LoopSummary {
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "closed loop ({} mode), {} timestamps\naccuracy {:.4} ({}/{})\nmae      {:.4} Mbps\n",
            self.mode, self.timestamps, self.accuracy, self.matches, self.timestamps, self.mae
        );
        if self.degenerate_qtable {
            s.push_str("warning: Q-table is all zeros; every state picks a1\n");
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoopOutcome {
    pub records: Vec<LoopRecord>,
    pub summary: LoopSummary,
}

impl LoopOutcome {
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
}

/// Monitor, forecast, decide and act against a live simulator.
pub struct ClosedLoop<'a> {
    predictor: Predictor<'a>,
    q: &'a QTable,
    reward: RewardModel,
    binning: Binning,
    sim: Simulator,
    reactive: bool,
    history: Vec<(f64, f64)>,
}

impl<'a> ClosedLoop<'a> {
    pub fn new(cfg: &ExperimentConfig, predictor: Predictor<'a>, q: &'a QTable) -> Result<Self> {
        cfg.validate()?;
        let reward = achieved_table(cfg)?;
        if (q.num_states(), q.num_actions()) != (reward.num_states(), reward.num_actions()) {
            return Err(Error::Schema(format!(
                "Q-table is {}x{} but the configuration implies {}x{}",
                q.num_states(),
                q.num_actions(),
                reward.num_states(),
                reward.num_actions()
            )));
        }
        Ok(Self {
            predictor,
            q,
            reward,
            binning: cfg.agent.binning()?,
            sim: Simulator::new(cfg.sim_config(SeedStream::Live), cfg.actions())?,
            reactive: cfg.run_loop.reactive,
            history: Vec::new(),
        })
    }

    /// Observes `window + 1` ticks under the default settings.
    pub fn warm_up(&mut self) -> Result<()> {
        for _ in 0..=self.predictor.window() {
            let obs = self.sim.step()?;
            self.history.push((obs.timestamp, obs.observed_bw));
        }
        Ok(())
    }

    pub fn actions_applied(&self) -> usize {
        self.sim.actions_applied()
    }

    /// One timestamp: y_i is the latest observation, ŷ_i the forecast from the
    /// `w` observations before it. Applies exactly one action.
    pub fn step(&mut self) -> Result<(LoopRecord, f64)> {
        let w = self.predictor.window();
        if self.history.len() < w + 1 {
            return Err(Error::InsufficientData(format!(
                "loop needs {} observations of warm-up, has {}",
                w + 1,
                self.history.len()
            )));
        }
        let n = self.history.len();
        let (time_s, actual) = self.history[n - 1];
        let preceding: Vec<f64> = self.history[n - 1 - w..n - 1].iter().map(|h| h.1).collect();
        let predicted = self.predictor.predict(&preceding, actual)?;
        let s_actual = state_of(&self.binning, actual)?;
        let s_predicted = state_of(&self.binning, predicted)?;
        let a_actual = self.q.best_action(s_actual);
        let a_predicted = self.q.best_action(s_predicted);
        self.sim.apply_action(if self.reactive { a_actual } else { a_predicted })?;
        let obs = self.sim.step()?;
        self.history.push((obs.timestamp, obs.observed_bw));
        let gap = (self.reward.achieved(s_actual, a_actual) - self.reward.achieved(s_actual, a_predicted)).abs();
        let record = LoopRecord {
            time_s,
            actual_bw: actual,
            predicted_bw: predicted,
            action_actual: ActionSpace::label(a_actual),
            action_predicted: ActionSpace::label(a_predicted),
            achieved_bw: obs.observed_bw,
            matched: a_actual == a_predicted,
        };
        Ok((record, gap))
    }

    pub fn run(mut self, timestamps: usize) -> Result<LoopOutcome> {
        self.warm_up()?;
        let mut records = Vec::with_capacity(timestamps);
        let mut gap_total = 0.0;
        for _ in 0..timestamps {
            let (r, gap) = self.step()?;
            gap_total += gap;
            records.push(r);
        }
        let matches = records.iter().filter(|r| r.matched).count();
        let summary = LoopSummary {
            mode: if self.reactive { "reactive" } else { "proactive" }.into(),
            timestamps,
            matches,
            accuracy: matches as f64 / timestamps.max(1) as f64,
            mae: gap_total / timestamps.max(1) as f64,
            actions_applied: self.actions_applied(),
            degenerate_qtable: self.q.is_all_zero(),
        };
        Ok(LoopOutcome { records, summary })
    }
}

pub fn run_closed_loop(cfg: &ExperimentConfig, model: &HybridForecaster, q: &QTable) -> Result<LoopOutcome> {
    ClosedLoop::new(cfg, Predictor::Hybrid(model), q)?.run(cfg.run_loop.timestamps)
}
