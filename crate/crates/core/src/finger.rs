//! Finger identities and the 11-way per-frame class distribution.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of classes in a frame distribution: ten fingers plus blank.
pub const NUM_CLASSES: usize = 11;

/// Class index of the blank ("no touch") symbol.
pub const BLANK: usize = 10;

/// Ten fingers, ordered left pinky to right pinky. The discriminant is the
/// class index used in frame distributions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Finger {
    LeftPinky = 0,
    LeftRing = 1,
    LeftMiddle = 2,
    LeftIndex = 3,
    LeftThumb = 4,
    RightThumb = 5,
    RightIndex = 6,
    RightMiddle = 7,
    RightRing = 8,
    RightPinky = 9,
}

impl Finger {
    pub const ALL: [Finger; 10] = [
        Finger::LeftPinky,
        Finger::LeftRing,
        Finger::LeftMiddle,
        Finger::LeftIndex,
        Finger::LeftThumb,
        Finger::RightThumb,
        Finger::RightIndex,
        Finger::RightMiddle,
        Finger::RightRing,
        Finger::RightPinky,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Finger> {
        Finger::ALL.get(i).copied()
    }

    pub fn is_left(self) -> bool {
        self.index() < 5
    }

    pub fn is_pinky(self) -> bool {
        matches!(self, Finger::LeftPinky | Finger::RightPinky)
    }

    /// Two-letter code (LT, LI, ... RP).
    pub fn code(self) -> &'static str {
        match self {
            Finger::LeftPinky => "LP",
            Finger::LeftRing => "LR",
            Finger::LeftMiddle => "LM",
            Finger::LeftIndex => "LI",
            Finger::LeftThumb => "LT",
            Finger::RightThumb => "RT",
            Finger::RightIndex => "RI",
            Finger::RightMiddle => "RM",
            Finger::RightRing => "RR",
            Finger::RightPinky => "RP",
        }
    }

    pub fn from_code(code: &str) -> Option<Finger> {
        Finger::ALL.into_iter().find(|f| f.code() == code)
    }

    /// Fingers physically next to this one on the same hand.
    pub fn neighbors(self) -> Vec<Finger> {
        let i = self.index();
        let (lo, hi) = if self.is_left() { (0, 4) } else { (5, 9) };
        let mut out = Vec::with_capacity(2);
        if i > lo {
            out.push(Finger::ALL[i - 1]);
        }
        if i < hi {
            out.push(Finger::ALL[i + 1]);
        }
        out
    }
}

/// Per-frame softmax output over {10 fingers, blank}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct FrameDistribution {
    probs: [f64; NUM_CLASSES],
}

impl FrameDistribution {
    pub const SUM_TOLERANCE: f64 = 1e-9;

    pub fn new(probs: [f64; NUM_CLASSES]) -> Result<Self> {
        if probs.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "frame probabilities must be finite and nonnegative: {probs:?}"
            )));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(Error::InvalidInput(format!(
                "frame probabilities sum to {sum}, expected 1"
            )));
        }
        Ok(FrameDistribution { probs })
    }

    /// Normalizes nonnegative weights.
    pub fn from_weights(weights: [f64; NUM_CLASSES]) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if !(sum > 0.0) {
            return Err(Error::InvalidInput("weights must have positive sum".into()));
        }
        Self::new(weights.map(|w| w / sum))
    }

    /// `mass` on `class`, the remainder spread evenly over the other classes.
    pub fn concentrated(class: usize, mass: f64) -> Self {
        assert!(class < NUM_CLASSES && (0.0..=1.0).contains(&mass));
        let rest = (1.0 - mass) / (NUM_CLASSES - 1) as f64;
        let mut probs = [rest; NUM_CLASSES];
        probs[class] = mass;
        FrameDistribution { probs }
    }

    pub fn probs(&self) -> &[f64; NUM_CLASSES] {
        &self.probs
    }

    pub fn prob(&self, class: usize) -> f64 {
        self.probs[class]
    }

    /// Most likely class; the lowest index wins ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = i;
            }
        }
        best
    }

    pub fn argmax_finger(&self) -> Option<Finger> {
        Finger::from_index(self.argmax())
    }
}

impl TryFrom<Vec<f64>> for FrameDistribution {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        let probs: [f64; NUM_CLASSES] = v.as_slice().try_into().map_err(|_| {
            Error::InvalidInput(format!(
                "expected {NUM_CLASSES} class probabilities, got {}",
                v.len()
            ))
        })?;
        FrameDistribution::new(probs)
    }
}

impl From<FrameDistribution> for Vec<f64> {
    fn from(d: FrameDistribution) -> Self {
        d.probs.to_vec()
    }
}
