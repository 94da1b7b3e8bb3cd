//! Tabular Q-learning on a random 20-state, 8-action reward table, compared
//! with the brute-force best action per state.
//!
//! cargo run --release --example q_agent

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ztn_loop::agent::{self, AgentParams, QTable, Replay, RewardModel};

fn main() -> ztn_loop::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let achieved: Vec<f64> = (0..20 * 8).map(|_| rng.random_range(0.0..100.0)).collect();
    let model = RewardModel::new(100.0, 20, 8, achieved)?;
    let replay = Replay::exact((0..20).collect())?;

    let mut q = QTable::new(20, 8)?;
    let params = AgentParams {
        episodes: 5000,
        ..AgentParams::default()
    };
    let trace = agent::train(&mut q, &replay, &model, &params, 3)?;
    for r in trace.records.iter().step_by(1000) {
        println!("episode {:>5}  eps {:.3}  reward {:>10.1}  mae {:.3}", r.episode, r.epsilon, r.total_reward, r.mae);
    }

    let agree = (0..20).filter(|&s| q.best_action(s) == model.oracle_action(s)).count();
    println!("\ngreedy policy matches the oracle on {agree}/20 states");
    Ok(())
}
