//! Training objectives for a touch estimation network: CTC over finger
//! classes, a latency-anchoring cross-entropy, and the β-weighted Gaussian
//! NLL for the location head. Gradients are derived by hand.

mod beta_nll;
mod ctc;
mod offset;

pub use beta_nll::{beta_nll_grad, beta_nll_loss, BetaNllGrad, LocationPrediction};
pub use ctc::{ctc_grad, ctc_loss, min_frames, softmax_backward, CtcLoss};
pub use offset::{offset_xent_grad, offset_xent_loss, OffsetXent, TouchLabel};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::finger::FrameDistribution;
use crate::gaussian::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub alpha_c: f64,
    pub alpha_e: f64,
    pub alpha_x: f64,
    pub beta: f64,
    /// Target emission latency in frames for the cross-entropy term.
    pub d: usize,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            alpha_c: 1.0,
            alpha_e: 0.01,
            alpha_x: 0.001,
            beta: 0.9,
            d: 2,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        let weights = [self.alpha_c, self.alpha_e, self.alpha_x];
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::InvalidInput(format!(
                "loss weights must be nonnegative: {weights:?}"
            )));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::InvalidInput(format!(
                "beta {} outside [0, 1]",
                self.beta
            )));
        }
        Ok(())
    }
}

/// Everything one sequence contributes to the combined objective.
#[derive(Debug, Clone, Copy)]
pub struct LossInputs<'a> {
    pub frames: &'a [FrameDistribution],
    pub labels: &'a [usize],
    pub events: &'a [TouchLabel],
    pub preds: &'a [LocationPrediction],
    pub targets: &'a [Vec2],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CombinedLoss {
    pub total: f64,
    pub ctc: CtcLoss,
    pub xent: OffsetXent,
    pub nll: f64,
}

/// `α_c·L_c + α_e·L_e + α_x·L_x`. A zero weight drops its term entirely, so an
/// infeasible CTC term does not poison the total when `α_c = 0`.
pub fn combined_loss(cfg: &LossConfig, inputs: &LossInputs<'_>) -> Result<CombinedLoss> {
    cfg.validate()?;
    let ctc = ctc_loss(inputs.frames, inputs.labels)?;
    let xent = offset_xent_loss(inputs.frames, inputs.events, cfg.d)?;
    let nll = beta_nll_loss(inputs.preds, inputs.targets, cfg.beta)?;
    let weighted = |w: f64, v: f64| if w == 0.0 { 0.0 } else { w * v };
    let total = weighted(cfg.alpha_c, ctc.loss)
        + weighted(cfg.alpha_e, xent.loss)
        + weighted(cfg.alpha_x, nll);
    Ok(CombinedLoss {
        total,
        ctc,
        xent,
        nll,
    })
}
