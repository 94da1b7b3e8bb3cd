use serde::{Deserialize, Serialize};

/// Token-bucket style shaper knobs for one traffic class.
///
/// `cir` and `eir` are rates (Mbps); `ebs` is a buffer depth (Mbit). An
/// unshaped class uses an infinite `cir`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShaperConfig {
    pub cir: f64,
    pub eir: f64,
    pub ebs: f64,
}

impl ShaperConfig {
    pub fn unshaped() -> Self {
        Self {
            cir: f64::INFINITY,
            eir: 0.0,
            ebs: 0.0,
        }
    }
}

/// Result of shaping one tick of offered traffic.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ShapeOutcome {
    /// Mbps passed within the committed rate.
    pub conformant: f64,
    /// Mbps passed within the excess rate.
    pub excess_served: f64,
    /// Mbit held for the next tick.
    pub buffered_out: f64,
    /// Mbps discarded.
    pub dropped: f64,
}

/// Shapes `offered` Mbps plus `buffered_in` Mbit of backlog over one tick.
///
/// Service order: committed rate, then excess rate, then the burst buffer up
/// to `ebs`, and whatever remains is dropped. Negative inputs are treated as 0.
pub fn shape(offered: f64, cfg: &ShaperConfig, buffered_in: f64, tick: f64) -> ShapeOutcome {
    let offered = offered.max(0.0);
    let buffered_in = buffered_in.max(0.0);
    let cir = cfg.cir.max(0.0);
    let eir = cfg.eir.max(0.0);
    let ebs = cfg.ebs.max(0.0);

    let mut pool = offered * tick + buffered_in;
    let conformant = (pool / tick).min(cir);
    pool = (pool - conformant * tick).max(0.0);
    let excess_served = (pool / tick).min(eir);
    pool = (pool - excess_served * tick).max(0.0);
    let buffered_out = pool.min(ebs);
    let dropped = (pool - buffered_out).max(0.0) / tick;

    ShapeOutcome {
        conformant,
        excess_served,
        buffered_out,
        dropped,
    }
}
