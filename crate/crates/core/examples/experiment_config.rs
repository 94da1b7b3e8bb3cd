//! Prints the default experiment file and loads a partial override.
//!
//! cargo run --example experiment_config

use ztn_loop::pipeline::ExperimentConfig;

fn main() -> ztn_loop::Result<()> {
    print!("{}", ExperimentConfig::default().to_toml()?);
    let cfg = ExperimentConfig::from_toml("seed = 3\n[agent]\nepisodes = 1000\n")?;
    println!("\n# override: seed {} episodes {}", cfg.seed, cfg.agent.episodes);
    Ok(())
}
