//! Fits the boosted-tree residual corrector on a deliberately biased first
//! stage and shows the hybrid prediction recovering the target.
//!
//! cargo run --release --example boost_residuals

use ztn_loop::boost::{self, BoostedEnsemble, BoosterConfig};

fn main() -> ztn_loop::Result<()> {
    // A sinusoidal signal and a first stage that lags it by one step and
    // underestimates high values.
    let y: Vec<f64> = (0..300).map(|t| 50.0 + 30.0 * (t as f64 * 0.1).sin()).collect();
    let windows: Vec<Vec<f64>> = (3..y.len()).map(|t| y[t - 3..t].to_vec()).collect();
    let targets = &y[3..];
    let first: Vec<f64> = windows.iter().map(|w| 0.9 * w[2] + 2.0).collect();

    let (fit, holdout) = (200, windows.len());
    let residuals = boost::compute_residuals(&targets[..fit], &first[..fit])?;
    let rows = boost::residual_features(&windows, &first)?;
    let (ens, history) = BoostedEnsemble::fit(&rows[..fit], residuals.as_slice(), &BoosterConfig::default())?;
    println!(
        "booster train MSE: round 1 {:.4}, round {} {:.6}",
        history.train_mse[0],
        history.train_mse.len(),
        history.train_mse.last().unwrap()
    );

    let corrected = boost::hybrid_predict(&first[fit..holdout], &ens.predict(&rows[fit..holdout])?)?;
    println!("held-out MSE first stage {:.3}", boost::mse(&targets[fit..], &first[fit..])?);
    println!("held-out MSE hybrid      {:.3}", boost::mse(&targets[fit..], &corrected)?);
    Ok(())
}
