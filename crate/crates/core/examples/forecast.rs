//! Trains a small BiLSTM on simulated bandwidth and prints one-step-ahead
//! predictions against the held-out tail.
//!
//! cargo run --release --example forecast

use ztn_loop::forecast::{self, make_windows, BiLstm, BiLstmConfig, MinMaxScaler, TrainConfig};
use ztn_loop::model::ActionSpace;
use ztn_loop::sim::{self, SimConfig};

fn main() -> ztn_loop::Result<()> {
    let cfg = SimConfig {
        duration: 600.0,
        ..SimConfig::default()
    };
    let bw = sim::run(&cfg, &ActionSpace::table3(), None)?.bandwidth();
    let (train, test) = bw.split_at(480);

    let scaler = MinMaxScaler::fit(train)?;
    let windows = make_windows(&scaler.transform_all(train), 10)?;
    let arch = BiLstmConfig {
        window: 10,
        hidden: 16,
        layers: 2,
        dense_hidden: 16,
        dropout: 0.1,
    };
    let mut model = BiLstm::new(arch, 1)?;
    let report = forecast::train(
        &mut model,
        &windows,
        &TrainConfig {
            epochs: 15,
            ..TrainConfig::default()
        },
    )?;
    for e in report.epochs.iter().step_by(3) {
        println!("epoch {:>2}  train {:.5}  val {:?}", e.epoch, e.train_loss, e.val_loss);
    }

    let pred = forecast::predict_series(&model, &scaler, test)?;
    let actual = &test[10..];
    let mse = actual.iter().zip(&pred).map(|(y, p)| (y - p).powi(2)).sum::<f64>() / pred.len() as f64;
    println!("\nheld-out MSE {mse:.2} Mbps^2 over {} windows", pred.len());
    for (y, p) in actual.iter().zip(&pred).take(10) {
        println!("  actual {y:>6.2}  predicted {p:>6.2}");
    }
    Ok(())
}
