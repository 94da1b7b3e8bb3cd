use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, SeedStream};
use crate::boost::{self, BoostedEnsemble};
use crate::error::{Error, Result};
use crate::forecast::{self, make_windows, BiLstm, BiLstmConfig, MinMaxScaler, TrainingReport};
use crate::sim::TimeSeries;

const SCHEMA_VERSION: u32 = 1;
const KIND: &str = "ztn-hybrid-forecaster";

/// BiLSTM + boosted residual correction, with the scaler the BiLSTM was fit on.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridForecaster {
    pub scaler: MinMaxScaler,
    pub bilstm: BiLstm,
    pub booster: BoostedEnsemble,
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    schema_version: u32,
    kind: String,
    architecture: BiLstmConfig,
    scaler: MinMaxScaler,
    weights: Vec<f64>,
    booster: BoostedEnsemble,
}

/// Both stages' predictions for one window, in Mbps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Forecast {
    pub bilstm: f64,
    pub hybrid: f64,
}

impl HybridForecaster {
    pub fn window(&self) -> usize {
        self.bilstm.config().window
    }

    pub fn predict(&self, window_mbps: &[f64]) -> Result<Forecast> {
        let bilstm = forecast::predict_next(&self.bilstm, &self.scaler, window_mbps)?;
        let mut row = window_mbps.to_vec();
        row.push(bilstm);
        Ok(Forecast {
            bilstm,
            hybrid: bilstm + self.booster.predict_row(&row)?,
        })
    }

    /// Predictions for every target `series[w..]`: (first stage, hybrid).
    pub fn predict_series(&self, series: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let first = forecast::predict_series(&self.bilstm, &self.scaler, series)?;
        let windows = make_windows(series, self.window())?;
        let rows = boost::residual_features(&windows.inputs, &first)?;
        let hybrid = boost::hybrid_predict(&first, &self.booster.predict(&rows)?)?;
        Ok((first, hybrid))
    }

    pub fn to_document(&self) -> Result<String> {
        let doc = Checkpoint {
            schema_version: SCHEMA_VERSION,
            kind: KIND.into(),
            architecture: *self.bilstm.config(),
            scaler: self.scaler,
            weights: self.bilstm.params().to_vec(),
            booster: self.booster.clone(),
        };
        serde_json::to_string(&doc).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_document(text: &str) -> Result<Self> {
        let doc: Checkpoint = serde_json::from_str(text).map_err(|e| Error::Schema(format!("forecaster checkpoint: {e}")))?;
        if doc.schema_version != SCHEMA_VERSION || doc.kind != KIND {
            return Err(Error::Schema(format!(
                "expected {KIND} v{SCHEMA_VERSION}, found {} v{}",
                doc.kind, doc.schema_version
            )));
        }
        if doc.booster.n_features != doc.architecture.window + 1 {
            return Err(Error::Schema(format!(
                "booster expects {} features but the window is {}",
                doc.booster.n_features, doc.architecture.window
            )));
        }
        let bilstm = BiLstm::from_params(doc.architecture, doc.weights).map_err(|e| Error::Schema(e.to_string()))?;
        Ok(Self {
            scaler: doc.scaler,
            bilstm,
            booster: doc.booster,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_document()? + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_document(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastReport {
    /// Held-out MSE of the BiLSTM alone, Mbps².
    pub mse_bilstm: f64,
    /// Held-out MSE after the residual correction, Mbps².
    pub mse_hybrid: f64,
    pub test_windows: usize,
    pub booster_windows: usize,
    /// Booster training MSE per round on its fitting segment.
    pub booster_train_mse: Vec<f64>,
    pub training: TrainingReport,
}

impl ForecastReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str("forecaster report\n");
        s.push_str(&format!(
            "windows: train {} / validation {} / test {}\n",
            self.training.train_windows, self.training.val_windows, self.test_windows
        ));
        s.push_str(&format!("booster fit on {} validation windows\n", self.booster_windows));
        s.push_str("epoch  train_loss  val_loss\n");
        for e in &self.training.epochs {
            let val = e.val_loss.map_or("-".to_string(), |v| format!("{v:.6}"));
            s.push_str(&format!("{:>5}  {:>10.6}  {val}\n", e.epoch, e.train_loss));
        }
        s.push_str(&format!("mse_bilstm {:.4}\n", self.mse_bilstm));
        s.push_str(&format!("mse_hybrid {:.4}\n", self.mse_hybrid));
        s.push_str(&format!("ratio      {:.4}\n", self.mse_hybrid / self.mse_bilstm));
        s
    }
}

/// Fits the scaler on `train`, the BiLSTM on the leading training windows, the
/// booster on the BiLSTM's residuals over the validation windows, and scores
/// both stages on every window of `test`.
pub fn train_forecaster(cfg: &ExperimentConfig, train: &TimeSeries, test: &TimeSeries) -> Result<(HybridForecaster, ForecastReport)> {
    cfg.validate()?;
    let f = &cfg.forecaster;
    let train_bw = train.bandwidth();
    let test_bw = test.bandwidth();
    let scaler = MinMaxScaler::fit(&train_bw)?;
    let scaled = make_windows(&scaler.transform_all(&train_bw), f.window)?;
    let mut bilstm = BiLstm::new(f.model(), cfg.seed_for(SeedStream::Init))?;
    let train_cfg = f.training(cfg.seed_for(SeedStream::Shuffle));
    let training = forecast::train(&mut bilstm, &scaled, &train_cfg)?;

    let (n_train, n_val) = train_cfg.split(scaled.len());
    if n_val == 0 {
        return Err(Error::InsufficientData("no validation windows left to fit the booster".into()));
    }
    let mbps = make_windows(&train_bw, f.window)?.range(n_train, n_train + n_val);
    let first: Vec<f64> = bilstm
        .predict_many(&scaled.inputs[n_train..n_train + n_val])?
        .into_iter()
        .map(|p| scaler.inverse(p))
        .collect();
    let residuals = boost::compute_residuals(&mbps.targets, &first)?;
    let rows = boost::residual_features(&mbps.inputs, &first)?;
    let (booster, history) = BoostedEnsemble::fit(&rows, residuals.as_slice(), &cfg.booster)?;

    let model = HybridForecaster { scaler, bilstm, booster };
    let (first_test, hybrid_test) = model.predict_series(&test_bw)?;
    let targets = &test_bw[f.window..];
    let report = ForecastReport {
        mse_bilstm: boost::mse(targets, &first_test)?,
        mse_hybrid: boost::mse(targets, &hybrid_test)?,
        test_windows: targets.len(),
        booster_windows: n_val,
        booster_train_mse: history.train_mse,
        training,
    };
    Ok((model, report))
}
