//! End-to-end experiment: dataset, forecaster, agent, closed loop, reports.
//!
//! Each stage reads and writes plain files in one output directory so the
//! stages can run as separate commands.

mod agent;
mod closed_loop;
pub mod config;
mod convergence;
mod forecaster;

pub use agent::{achieved_table, state_of, test_replay, train_agent};
pub use closed_loop::{run_closed_loop, ClosedLoop, LoopOutcome, LoopRecord, LoopSummary, Predictor};
pub use config::{ExperimentConfig, SeedStream};
pub use convergence::{evaluate_convergence, ConvergencePoint, ConvergenceReport};
pub use forecaster::{train_forecaster, Forecast, ForecastReport, HybridForecaster};

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::agent::{QTable, TrainingTrace};
use crate::error::{Error, Result};
use crate::model::ActionSpace;
use crate::sim::{self, TimeSeries};

/// Episodes between convergence samples.
pub const CONVERGENCE_EVERY: usize = 2000;

/// One simulator run split into consecutive train and test series.
pub fn generate_dataset(cfg: &ExperimentConfig) -> Result<(TimeSeries, TimeSeries)> {
    cfg.validate()?;
    let d = cfg.dataset;
    let mut sim_cfg = cfg.sim_config(SeedStream::Dataset);
    sim_cfg.duration = (d.train_samples + d.test_samples) as f64 * sim_cfg.tick;
    let series = sim::run(&sim_cfg, &cfg.actions(), None)?;
    if series.len() != d.train_samples + d.test_samples {
        return Err(Error::InvalidConfig(format!(
            "tick {} does not divide the requested sample count",
            sim_cfg.tick
        )));
    }
    Ok((series.slice(0, d.train_samples), series.slice(d.train_samples, series.len())))
}

/// File layout of an experiment directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifacts {
    pub dir: PathBuf,
}

impl Artifacts {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn train_csv(&self) -> PathBuf {
        self.path("train.csv")
    }

    pub fn test_csv(&self) -> PathBuf {
        self.path("test.csv")
    }

    pub fn forecaster(&self) -> PathBuf {
        self.path("forecaster.json")
    }

    pub fn qtable(&self) -> PathBuf {
        self.path("qtable.json")
    }

    pub fn trace(&self) -> PathBuf {
        self.path("agent_trace.csv")
    }

    pub fn loop_csv(&self) -> PathBuf {
        self.path("loop.csv")
    }

    fn ensure(&self) -> Result<()> {
        std::fs::create_dir_all(&self.dir).map_err(|e| Error::io(&self.dir, e))
    }

    fn write_text(&self, name: &str, text: &str) -> Result<()> {
        let p = self.path(name);
        std::fs::write(&p, text).map_err(|e| Error::io(p, e))
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        let text = serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
        self.write_text(name, &(text + "\n"))
    }

    pub fn simulate(&self, cfg: &ExperimentConfig) -> Result<(TimeSeries, TimeSeries)> {
        self.ensure()?;
        let (train, test) = generate_dataset(cfg)?;
        train.save_csv(&self.train_csv(), true)?;
        test.save_csv(&self.test_csv(), true)?;
        Ok((train, test))
    }

    pub fn train(&self, cfg: &ExperimentConfig) -> Result<ForecastReport> {
        let train = TimeSeries::load_csv(&self.train_csv())?;
        let test = TimeSeries::load_csv(&self.test_csv())?;
        let (model, report) = train_forecaster(cfg, &train, &test)?;
        model.save(&self.forecaster())?;
        self.write_json("forecast_report.json", &report)?;
        self.write_text("forecast_report.txt", &report.to_text())?;
        Ok(report)
    }

    pub fn train_agent(&self, cfg: &ExperimentConfig) -> Result<(QTable, TrainingTrace)> {
        let model = HybridForecaster::load(&self.forecaster())?;
        let test = TimeSeries::load_csv(&self.test_csv())?;
        let (q, trace) = train_agent(cfg, &model, &test)?;
        q.save(&self.qtable(), &cfg.actions().labels())?;
        trace.save_csv(&self.trace())?;
        Ok((q, trace))
    }

    pub fn run_loop(&self, cfg: &ExperimentConfig) -> Result<LoopOutcome> {
        let model = HybridForecaster::load(&self.forecaster())?;
        let (q, labels) = QTable::load(&self.qtable())?;
        if labels != cfg.actions().labels() {
            return Err(Error::Schema(format!("Q-table action labels {labels:?} do not match the action space")));
        }
        let out = run_closed_loop(cfg, &model, &q)?;
        out.save_csv(&self.loop_csv())?;
        self.write_json("loop_summary.json", &out.summary)?;
        self.write_text("loop_summary.txt", &out.summary.to_text())?;
        Ok(out)
    }

    pub fn report(&self) -> Result<ConvergenceReport> {
        let trace = TrainingTrace::load_csv(&self.trace())?;
        let report = evaluate_convergence(&trace, CONVERGENCE_EVERY)?;
        self.write_json("convergence.json", &report)?;
        self.write_text("convergence.txt", &report.to_text())?;
        Ok(report)
    }
}

/// Writes the action space description next to the other artifacts.
pub fn write_action_space(dir: &Path) -> Result<()> {
    let p = dir.join("actions.json");
    std::fs::write(&p, ActionSpace::table3().to_document() + "\n").map_err(|e| Error::io(p, e))
}

#[cfg(test)]
pub(crate) mod testing {
    use super::ExperimentConfig;

    /// Seconds-scale configuration for pipeline tests.
    pub fn tiny_config() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.dataset.train_samples = 120;
        cfg.dataset.test_samples = 60;
        cfg.forecaster.window = 4;
        cfg.forecaster.hidden = 4;
        cfg.forecaster.layers = 1;
        cfg.forecaster.dense_hidden = 4;
        cfg.forecaster.epochs = 2;
        cfg.booster.n_estimators = 5;
        cfg.agent.episodes = 50;
        cfg
    }
}
