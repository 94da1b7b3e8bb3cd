use crate::error::{Error, Result};

/// Sliding windows (stride 1) over a series: window `i` is
/// `series[i..i + w]` and its target is `series[i + w]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedDataset {
    pub window_size: usize,
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
}

impl WindowedDataset {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    /// Windows `[start, end)` as a new dataset.
    pub fn range(&self, start: usize, end: usize) -> Self {
        Self {
            window_size: self.window_size,
            inputs: self.inputs[start..end].to_vec(),
            targets: self.targets[start..end].to_vec(),
        }
    }
}

pub fn make_windows(series: &[f64], w: usize) -> Result<WindowedDataset> {
    if w == 0 {
        return Err(Error::InvalidConfig("window size must be >= 1".into()));
    }
    if series.len() <= w {
        return Err(Error::InsufficientData(format!(
            "series of length {} needs more than {w} samples",
            series.len()
        )));
    }
    let n = series.len() - w;
    Ok(WindowedDataset {
        window_size: w,
        inputs: (0..n).map(|i| series[i..i + w].to_vec()).collect(),
        targets: (0..n).map(|i| series[i + w]).collect(),
    })
}
