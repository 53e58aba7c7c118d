use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::Vec2;

/// Diagonal Gaussian location estimate: mean and per-axis variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocationPrediction {
    pub mean: Vec2,
    pub var: Vec2,
}

impl LocationPrediction {
    pub fn new(mean: Vec2, var: Vec2) -> Result<Self> {
        if !(var[0] > 0.0 && var[1] > 0.0) {
            return Err(Error::InvalidInput(format!(
                "variances must be positive, got {var:?}"
            )));
        }
        Ok(LocationPrediction { mean, var })
    }
}

/// Gradient of the β-NLL for one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaNllGrad {
    pub mean: Vec2,
    pub var: Vec2,
}

fn check(preds: &[LocationPrediction], targets: &[Vec2], beta: f64) -> Result<()> {
    if preds.len() != targets.len() {
        return Err(Error::InvalidInput(format!(
            "{} predictions for {} targets",
            preds.len(),
            targets.len()
        )));
    }
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::InvalidInput(format!("beta {beta} outside [0, 1]")));
    }
    if let Some(p) = preds.iter().find(|p| !(p.var[0] > 0.0 && p.var[1] > 0.0)) {
        return Err(Error::InvalidInput(format!(
            "nonpositive variance {:?}",
            p.var
        )));
    }
    Ok(())
}

/// Σ over samples and axes of `σ^{2β} · (½ log σ² + (x − μ)² / 2σ²)`.
pub fn beta_nll_loss(preds: &[LocationPrediction], targets: &[Vec2], beta: f64) -> Result<f64> {
    check(preds, targets, beta)?;
    let mut total = 0.0;
    for (p, x) in preds.iter().zip(targets) {
        for j in 0..2 {
            let var = p.var[j];
            let r = x[j] - p.mean[j];
            total += var.powf(beta) * (0.5 * var.ln() + r * r / (2.0 * var));
        }
    }
    Ok(total)
}

/// Gradient with the `σ^{2β}` weight held constant (stop-gradient).
pub fn beta_nll_grad(
    preds: &[LocationPrediction],
    targets: &[Vec2],
    beta: f64,
) -> Result<Vec<BetaNllGrad>> {
    check(preds, targets, beta)?;
    Ok(preds
        .iter()
        .zip(targets)
        .map(|(p, x)| {
            let mut g = BetaNllGrad {
                mean: [0.0; 2],
                var: [0.0; 2],
            };
            for j in 0..2 {
                let var = p.var[j];
                let w = var.powf(beta);
                let r = x[j] - p.mean[j];
                g.mean[j] = -w * r / var;
                g.var[j] = w * (0.5 / var - r * r / (2.0 * var * var));
            }
            g
        })
        .collect())
}
