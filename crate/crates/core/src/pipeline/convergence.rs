use serde::{Deserialize, Serialize};

use crate::agent::TrainingTrace;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergencePoint {
    pub episode: usize,
    pub mae: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub every: usize,
    pub points: Vec<ConvergencePoint>,
    /// Last sampled MAE over the first; 1.0 when both are zero.
    pub ratio: f64,
}

impl ConvergenceReport {
    pub fn first(&self) -> Option<ConvergencePoint> {
        self.points.first().copied()
    }

    pub fn last(&self) -> Option<ConvergencePoint> {
        self.points.last().copied()
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("MAE every {} episodes\nepisode        mae\n", self.every);
        for p in &self.points {
            s.push_str(&format!("{:>7}  {:>9.4}\n", p.episode, p.mae));
        }
        s.push_str(&format!("final/initial {:.4}\n", self.ratio));
        s
    }
}

/// Samples the trace's MAE at every `every`-th episode, plus the last
/// episode when the trace length is not a multiple of `every`.
pub fn evaluate_convergence(trace: &TrainingTrace, every: usize) -> Result<ConvergenceReport> {
    if every == 0 {
        return Err(Error::InvalidConfig("sampling interval must be >= 1".into()));
    }
    let Some(last) = trace.records.last() else {
        return Err(Error::InsufficientData("empty training trace".into()));
    };
    let mut points: Vec<ConvergencePoint> = trace
        .records
        .iter()
        .filter(|r| r.episode % every == 0)
        .map(|r| ConvergencePoint {
            episode: r.episode,
            mae: r.mae,
        })
        .collect();
    if points.last().is_none_or(|p| p.episode != last.episode) {
        points.push(ConvergencePoint {
            episode: last.episode,
            mae: last.mae,
        });
    }
    let (first, end) = (points[0].mae, points[points.len() - 1].mae);
    let ratio = if first == 0.0 {
        if end == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        end / first
    };
    Ok(ConvergenceReport { every, points, ratio })
}
