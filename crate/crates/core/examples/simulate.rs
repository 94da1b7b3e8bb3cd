//! Runs the cell simulator under default settings, then replays the same
//! seed with every action held fixed for the whole run.
//!
//! cargo run --release --example simulate

use ztn_loop::model::ActionSpace;
use ztn_loop::sim::{self, ActionSource, SimConfig, TickObservation};

struct Hold(usize);

impl ActionSource for Hold {
    fn next_action(&mut self, tick: u64, _: Option<&TickObservation>) -> Option<usize> {
        (tick == 0).then_some(self.0)
    }
}

fn main() -> ztn_loop::Result<()> {
    let cfg = SimConfig {
        duration: 300.0,
        ..SimConfig::default()
    };
    let actions = ActionSpace::table3();

    let series = sim::run(&cfg, &actions, None)?;
    let bw = series.bandwidth();
    let mean = bw.iter().sum::<f64>() / bw.len() as f64;
    println!("defaults: {} ticks, mean {mean:.2} Mbps", series.len());
    for o in series.observations.iter().step_by(20).take(8) {
        println!("  t={:>5.0}s  {:>6.2} Mbps", o.timestamp, o.bandwidth);
    }

    println!("\nheld action, mean observed bandwidth:");
    for a in 0..actions.cardinality() {
        let held = sim::run(&cfg, &actions, Some(&mut Hold(a)))?.bandwidth();
        let m = held.iter().sum::<f64>() / held.len() as f64;
        println!("  {} {:<16} {m:>6.2}", ActionSpace::label(a), actions.get(a)?.to_string());
    }
    Ok(())
}
