//! Closed-loop congestion control testbed.
//!
//! A synthetic cell simulator produces a bandwidth series, a bidirectional
//! LSTM plus a boosted residual model forecasts the next sample, and a tabular
//! Q-learning agent picks the traffic-shaping action for the forecast state.

pub mod error;
pub mod model;
pub mod agent;
pub mod boost;
pub mod forecast;
pub mod pipeline;
pub mod sim;

pub use error::{Error, Result};
