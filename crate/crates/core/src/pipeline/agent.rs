use super::config::{ExperimentConfig, SeedStream};
use super::forecaster::HybridForecaster;
use crate::agent::{self, QTable, Replay, RewardModel, TrainingTrace};
use crate::error::Result;
use crate::model::Binning;
use crate::sim::{Simulator, TimeSeries};

/// Bin of a bandwidth value. Forecasts can undershoot zero; those land in bin 0.
pub fn state_of(binning: &Binning, bandwidth: f64) -> Result<usize> {
    binning.bin(bandwidth.max(0.0))
}

/// Achieved bandwidth of every action from every state's bin-center load.
pub fn achieved_table(cfg: &ExperimentConfig) -> Result<RewardModel> {
    let binning = cfg.agent.binning()?;
    let actions = cfg.actions();
    let sim = cfg.sim_config(SeedStream::Live);
    RewardModel::tabulate(
        cfg.agent.expected_bw,
        binning.num_bins,
        actions.cardinality(),
        |s, a| Simulator::probe_achieved(&sim, &actions, binning.center(s), a, cfg.agent.probe_ticks),
    )
}

/// Predicted and observed states over the test series.
pub fn test_replay(cfg: &ExperimentConfig, model: &HybridForecaster, test: &TimeSeries) -> Result<Replay> {
    let binning = cfg.agent.binning()?;
    let bw = test.bandwidth();
    let (_, hybrid) = model.predict_series(&bw)?;
    let predicted = hybrid.iter().map(|&p| state_of(&binning, p)).collect::<Result<_>>()?;
    let actual = bw[model.window()..].iter().map(|&y| state_of(&binning, y)).collect::<Result<_>>()?;
    Replay::new(predicted, actual)
}

pub fn train_agent(cfg: &ExperimentConfig, model: &HybridForecaster, test: &TimeSeries) -> Result<(QTable, TrainingTrace)> {
    cfg.validate()?;
    let reward = achieved_table(cfg)?;
    let replay = test_replay(cfg, model, test)?;
    let mut q = QTable::new(reward.num_states(), reward.num_actions())?;
    let trace = agent::train(&mut q, &replay, &reward, &cfg.agent.params(), cfg.seed_for(SeedStream::Agent))?;
    Ok((q, trace))
}
