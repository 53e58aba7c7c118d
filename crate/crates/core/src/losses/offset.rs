use crate::error::{Error, Result};
use crate::finger::{FrameDistribution, NUM_CLASSES};

/// A ground-truth contact: frame index and finger class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TouchLabel {
    pub frame: usize,
    pub finger: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OffsetXent {
    pub loss: f64,
    /// Events whose shifted frame `frame + d` lies past the last frame.
    pub skipped: usize,
}

/// Cross-entropy that asks for the correct finger exactly `d` frames after
/// each ground-truth contact. Summed, not averaged.
pub fn offset_xent_loss(
    frames: &[FrameDistribution],
    events: &[TouchLabel],
    d: usize,
) -> Result<OffsetXent> {
    let mut loss = 0.0;
    let mut skipped = 0;
    for ev in events {
        if ev.finger >= NUM_CLASSES {
            return Err(Error::InvalidInput(format!(
                "finger class {} out of range",
                ev.finger
            )));
        }
        match frames.get(ev.frame + d) {
            Some(frame) => loss -= frame.prob(ev.finger).ln(),
            None => skipped += 1,
        }
    }
    Ok(OffsetXent { loss, skipped })
}

/// Gradient of [`offset_xent_loss`] with respect to the frame probabilities.
pub fn offset_xent_grad(
    frames: &[FrameDistribution],
    events: &[TouchLabel],
    d: usize,
) -> Vec<[f64; NUM_CLASSES]> {
    let mut grads = vec![[0.0; NUM_CLASSES]; frames.len()];
    for ev in events {
        if let Some(frame) = frames.get(ev.frame + d) {
            grads[ev.frame + d][ev.finger] -= 1.0 / frame.prob(ev.finger);
        }
    }
    grads
}
