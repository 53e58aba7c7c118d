//! CTC loss over per-frame finger distributions and its gradient with respect
//! to the frame probabilities, both via the log-domain forward-backward
//! recursion on the blank-augmented label sequence.

use crate::error::{Error, Result};
use crate::finger::{FrameDistribution, BLANK, NUM_CLASSES};
use crate::numeric::log_sum_exp;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CtcLoss {
    /// `-log p(labels | frames)` in nats; `+∞` when no alignment exists.
    pub loss: f64,
    /// False when the label sequence cannot be aligned to this many frames.
    pub feasible: bool,
}

/// Minimum number of frames needed to emit `labels`: one per label plus a
/// separating blank between each pair of identical neighbors.
pub fn min_frames(labels: &[usize]) -> usize {
    labels.len() + labels.windows(2).filter(|w| w[0] == w[1]).count()
}

fn validate(labels: &[usize]) -> Result<()> {
    if labels.is_empty() {
        return Err(Error::InvalidInput("CTC labels must be non-empty".into()));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= NUM_CLASSES || l == BLANK) {
        return Err(Error::InvalidInput(format!(
            "CTC label {bad} is not a finger class"
        )));
    }
    Ok(())
}

/// Blank-augmented sequence `[ε, l1, ε, l2, ..., ε]`.
fn extended(labels: &[usize]) -> Vec<usize> {
    let mut ext = Vec::with_capacity(2 * labels.len() + 1);
    ext.push(BLANK);
    for &l in labels {
        ext.push(l);
        ext.push(BLANK);
    }
    ext
}

/// Whether state `s` may be entered directly from `s - 2`.
fn can_skip(ext: &[usize], s: usize) -> bool {
    s >= 2 && ext[s] != BLANK && ext[s] != ext[s - 2]
}

struct Lattice {
    ext: Vec<usize>,
    /// log α including the emission at t.
    alpha: Vec<Vec<f64>>,
    /// log β including the emission at t.
    beta: Vec<Vec<f64>>,
    log_prob: f64,
}

fn ln_emission(frames: &[FrameDistribution], t: usize, class: usize) -> f64 {
    frames[t].prob(class).ln()
}

fn incoming_alpha(lat_alpha: &[Vec<f64>], ext: &[usize], t: usize, s: usize) -> f64 {
    if t == 0 {
        return if s <= 1 { 0.0 } else { f64::NEG_INFINITY };
    }
    let prev = &lat_alpha[t - 1];
    let mut terms = [prev[s], f64::NEG_INFINITY, f64::NEG_INFINITY];
    if s >= 1 {
        terms[1] = prev[s - 1];
    }
    if can_skip(ext, s) {
        terms[2] = prev[s - 2];
    }
    log_sum_exp(&terms)
}

fn outgoing_beta(lat_beta: &[Vec<f64>], ext: &[usize], t: usize, s: usize) -> f64 {
    let n = ext.len();
    if t + 1 == lat_beta.len() {
        return if s + 2 >= n { 0.0 } else { f64::NEG_INFINITY };
    }
    let next = &lat_beta[t + 1];
    let mut terms = [next[s], f64::NEG_INFINITY, f64::NEG_INFINITY];
    if s + 1 < n {
        terms[1] = next[s + 1];
    }
    if s + 2 < n && can_skip(ext, s + 2) {
        terms[2] = next[s + 2];
    }
    log_sum_exp(&terms)
}

fn lattice(frames: &[FrameDistribution], labels: &[usize]) -> Lattice {
    let ext = extended(labels);
    let (t_len, s_len) = (frames.len(), ext.len());
    let mut alpha = vec![vec![f64::NEG_INFINITY; s_len]; t_len];
    for t in 0..t_len {
        for s in 0..s_len {
            alpha[t][s] = incoming_alpha(&alpha, &ext, t, s) + ln_emission(frames, t, ext[s]);
        }
    }
    let mut beta = vec![vec![f64::NEG_INFINITY; s_len]; t_len];
    for t in (0..t_len).rev() {
        for s in 0..s_len {
            beta[t][s] = outgoing_beta(&beta, &ext, t, s) + ln_emission(frames, t, ext[s]);
        }
    }
    let last = &alpha[t_len - 1];
    let log_prob = log_sum_exp(&[last[s_len - 1], last[s_len - 2]]);
    Lattice {
        ext,
        alpha,
        beta,
        log_prob,
    }
}

pub fn ctc_loss(frames: &[FrameDistribution], labels: &[usize]) -> Result<CtcLoss> {
    validate(labels)?;
    if frames.len() < min_frames(labels) {
        return Ok(CtcLoss {
            loss: f64::INFINITY,
            feasible: false,
        });
    }
    let lat = lattice(frames, labels);
    Ok(CtcLoss {
        loss: -lat.log_prob,
        feasible: true,
    })
}

/// `∂ loss / ∂ probs[t][k]` for every frame and class.
///
/// Each alignment uses exactly one entry per frame, so the derivative of the
/// total path mass with respect to `probs[t][k]` is the sum over lattice
/// states labelled `k` of (incoming α) × (outgoing β), with no division by
/// the probability itself.
pub fn ctc_grad(
    frames: &[FrameDistribution],
    labels: &[usize],
) -> Result<Vec<[f64; NUM_CLASSES]>> {
    validate(labels)?;
    if frames.len() < min_frames(labels) {
        return Err(Error::InvalidInput(format!(
            "infeasible CTC alignment: {} frames for {} required",
            frames.len(),
            min_frames(labels)
        )));
    }
    let lat = lattice(frames, labels);
    if lat.log_prob == f64::NEG_INFINITY {
        return Err(Error::InvalidInput(
            "CTC gradient undefined: every alignment has zero probability".into(),
        ));
    }
    let mut grads = vec![[0.0; NUM_CLASSES]; frames.len()];
    for (t, grad) in grads.iter_mut().enumerate() {
        for (s, &class) in lat.ext.iter().enumerate() {
            let through = incoming_alpha(&lat.alpha, &lat.ext, t, s)
                + outgoing_beta(&lat.beta, &lat.ext, t, s)
                - lat.log_prob;
            grad[class] -= through.exp();
        }
    }
    Ok(grads)
}

/// Chains a probability-space gradient through the softmax that produced
/// `probs`, giving the gradient with respect to the logits.
pub fn softmax_backward(probs: &[f64; NUM_CLASSES], grad: &[f64; NUM_CLASSES]) -> [f64; NUM_CLASSES] {
    let inner: f64 = probs.iter().zip(grad).map(|(p, g)| p * g).sum();
    let mut out = [0.0; NUM_CLASSES];
    for k in 0..NUM_CLASSES {
        out[k] = probs[k] * (grad[k] - inner);
    }
    out
}
