use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Affine map of `[min, max]` onto `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    pub min: f64,
    pub max: f64,
}

impl MinMaxScaler {
    pub fn fit(series: &[f64]) -> Result<Self> {
        let mut it = series.iter().copied();
        let first = it
            .next()
            .ok_or_else(|| Error::InsufficientData("cannot fit a scaler on an empty series".into()))?;
        let (mut min, mut max) = (first, first);
        for v in it {
            if !v.is_finite() {
                return Err(Error::RejectedInput(format!("non-finite sample {v}")));
            }
            min = min.min(v);
            max = max.max(v);
        }
        if !first.is_finite() {
            return Err(Error::RejectedInput(format!("non-finite sample {first}")));
        }
        Self::new(min, max).map_err(|_| Error::DegenerateScaler(min))
    }

    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(min.is_finite() && max.is_finite() && max > min) {
            return Err(Error::DegenerateScaler(min));
        }
        Ok(Self { min, max })
    }

    pub fn transform(&self, x: f64) -> f64 {
        (x - self.min) / (self.max - self.min)
    }

    pub fn inverse(&self, scaled: f64) -> f64 {
        scaled * (self.max - self.min) + self.min
    }

    pub fn transform_all(&self, xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|&x| self.transform(x)).collect()
    }
}
