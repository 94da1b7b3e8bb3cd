//! First forecasting stage: a bidirectional LSTM over min-max scaled
//! sliding windows, trained from scratch with Adam on MSE.

mod adam;
mod bilstm;
mod scaler;
mod train;
mod window;

pub use adam::{Adam, AdamParams};
pub use bilstm::{BiLstm, BiLstmConfig, ParamGroup};
pub use scaler::MinMaxScaler;
pub use train::{train, EpochLoss, TrainConfig, TrainingReport};
pub use window::{make_windows, WindowedDataset};

use crate::error::Result;

/// One-step-ahead predictions in Mbps: scale, window, forward, inverse-scale.
/// Output `i` predicts `series[i + w]`.
pub fn predict_series(model: &BiLstm, scaler: &MinMaxScaler, series: &[f64]) -> Result<Vec<f64>> {
    let scaled = scaler.transform_all(series);
    let windows = make_windows(&scaled, model.config().window)?;
    Ok(model
        .predict_many(&windows.inputs)?
        .into_iter()
        .map(|p| scaler.inverse(p))
        .collect())
}

/// Scaled prediction for a single trailing window given in Mbps.
pub fn predict_next(model: &BiLstm, scaler: &MinMaxScaler, window_mbps: &[f64]) -> Result<f64> {
    let scaled = scaler.transform_all(window_mbps);
    Ok(scaler.inverse(model.forward(&scaled)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn output_length_is_len_minus_window() {
        let m = BiLstm::new(BiLstmConfig { hidden: 4, layers: 1, dense_hidden: 4, ..BiLstmConfig::default() }, 1).unwrap();
        let scaler = MinMaxScaler::new(0.0, 100.0).unwrap();
        let series: Vec<f64> = (0..700).map(|i| (i % 97) as f64).collect();
        let a = predict_series(&m, &scaler, &series).unwrap();
        assert_eq!(a.len(), 691);
        assert_eq!(a, predict_series(&m, &scaler, &series).unwrap());
        assert!((a[5] - predict_next(&m, &scaler, &series[5..14]).unwrap()).abs() < 1e-12);
        assert!(matches!(predict_series(&m, &scaler, &series[..9]), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn inverse_scaling_of_half() {
        assert_eq!(MinMaxScaler::new(0.0, 100.0).unwrap().inverse(0.5), 50.0);
    }
}
