//! Whole experiment at reduced scale: dataset, hybrid forecaster, agent,
//! then 20 proactive steps against the live simulator.
//!
//! cargo run --release --example closed_loop [out_dir]

use ztn_loop::pipeline::{Artifacts, ExperimentConfig};

fn main() -> ztn_loop::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "target/closed_loop_example".into());
    let mut cfg = ExperimentConfig::default();
    cfg.forecaster.epochs = 10;
    cfg.agent.episodes = 4000;

    let a = Artifacts::new(out);
    a.simulate(&cfg)?;
    let fc = a.train(&cfg)?;
    println!("forecaster MSE: bilstm {:.2}, hybrid {:.2}", fc.mse_bilstm, fc.mse_hybrid);
    a.train_agent(&cfg)?;
    print!("{}", a.report()?.to_text());
    let run = a.run_loop(&cfg)?;
    for r in &run.records {
        println!(
            "t={:>6.0}  y={:>6.2}  yhat={:>6.2}  {} {}  {}",
            r.time_s,
            r.actual_bw,
            r.predicted_bw,
            r.action_actual,
            r.action_predicted,
            if r.matched { "match" } else { "miss" }
        );
    }
    print!("{}", run.summary.to_text());
    println!("artifacts in {}", a.dir.display());
    Ok(())
}
