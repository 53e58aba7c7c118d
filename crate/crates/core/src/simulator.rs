//! Synthetic touch streams from target phrases.
//!
//! Each intended key goes through two error sources: the user's own scatter
//! around the key (the per-key touch Gaussian) and the sensing pipeline's
//! per-finger location noise. Missed touches, ghost touches and finger
//! confusions are layered on top. Output is fully determined by the seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::decoder::{TouchObservation, STREAM_FORMAT_VERSION};
use crate::error::{Error, Result};
use crate::finger::{Finger, FrameDistribution};
use crate::gaussian::{Gaussian2, Mat2, Vec2};
use crate::keyboard::{KeyTouchModel, KeyboardLayout};

/// Mean touch position error per finger (mm) in LT, LI, LM, LR, LP, RT, RI,
/// RM, RR, RP order, for a β = 0.9 β-NLL touch model.
pub const TABLE2_BETA_NLL_09: [(Finger, f64); 10] = [
    (Finger::LeftThumb, 6.07),
    (Finger::LeftIndex, 4.87),
    (Finger::LeftMiddle, 5.98),
    (Finger::LeftRing, 9.06),
    (Finger::LeftPinky, 11.35),
    (Finger::RightThumb, 6.40),
    (Finger::RightIndex, 5.41),
    (Finger::RightMiddle, 6.22),
    (Finger::RightRing, 6.70),
    (Finger::RightPinky, 7.77),
];

/// Overall mean position error (mm) of the same model.
pub const OVERALL_MEAN_ERROR: f64 = 6.30;

/// Mean per-axis σ (x, y) the same model predicts for left-pinky touches.
pub const PINKY_SIGMA_RATIO: (f64, f64) = (11.6, 5.6);

/// Standard touch-typing finger for `c`. Space goes to the thumb of the hand
/// opposite to the one that typed `prev` (left thumb when unknown).
pub fn finger_for_key(c: char, prev: Option<char>) -> Result<Finger> {
    use Finger::*;
    let f = match c {
        'q' | 'a' | 'z' | '1' => LeftPinky,
        'w' | 's' | 'x' | '2' => LeftRing,
        'e' | 'd' | 'c' | '3' => LeftMiddle,
        'r' | 'f' | 'v' | 't' | 'g' | 'b' | '4' | '5' => LeftIndex,
        'y' | 'h' | 'n' | 'u' | 'j' | 'm' | '6' | '7' => RightIndex,
        'i' | 'k' | ',' | '8' => RightMiddle,
        'o' | 'l' | '.' | '9' => RightRing,
        'p' | '0' => RightPinky,
        ' ' => {
            let left = prev
                .filter(|p| *p != ' ')
                .and_then(|p| finger_for_key(p, None).ok())
                .is_some_and(|f| f.is_left());
            if left {
                RightThumb
            } else {
                LeftThumb
            }
        }
        other => return Err(Error::UnknownKey(other)),
    };
    Ok(f)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseProfile {
    /// Sensing σ (x, y) in mm, indexed by finger class.
    pub sensing_sigma: [(f64, f64); 10],
    /// Multiplies the per-key user covariance; 0 removes user error.
    pub user_scale: f64,
    pub miss_rate: f64,
    pub ghost_rate: f64,
    pub confusion_rate: f64,
    /// Frame-jitter standard deviation of the emitted observation.
    pub frame_jitter: f64,
    /// Frames between consecutive intended keystrokes.
    pub frame_spacing: i64,
    /// Emission delay of an observation after its contact, in frames.
    pub latency: i64,
    /// Reported variance = true sensing variance × this factor.
    pub reported_var_scale: f64,
    /// Probability mass on the emitted finger class.
    pub finger_confidence: f64,
}

impl Default for NoiseProfile {
    fn default() -> Self {
        NoiseProfile {
            sensing_sigma: [(5.0, 5.0); 10],
            user_scale: 1.0,
            miss_rate: 0.01,
            ghost_rate: 0.005,
            confusion_rate: 0.04,
            frame_jitter: 0.5,
            frame_spacing: 5,
            latency: 2,
            reported_var_scale: 1.0,
            finger_confidence: 0.91,
        }
    }
}

impl NoiseProfile {
    /// No noise of any kind; observations land exactly on the user model means.
    pub fn noiseless() -> Self {
        NoiseProfile {
            sensing_sigma: [(0.0, 0.0); 10],
            user_scale: 0.0,
            miss_rate: 0.0,
            ghost_rate: 0.0,
            confusion_rate: 0.0,
            frame_jitter: 0.0,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, r) in [
            ("miss_rate", self.miss_rate),
            ("ghost_rate", self.ghost_rate),
            ("confusion_rate", self.confusion_rate),
        ] {
            if !(0.0..1.0).contains(&r) {
                return Err(Error::InvalidInput(format!("{name} {r} outside [0, 1)")));
            }
        }
        let stds = self.sensing_sigma.iter().flat_map(|(x, y)| [*x, *y]);
        if stds.chain([self.user_scale, self.frame_jitter, self.reported_var_scale]).any(|s| !(s >= 0.0)) {
            return Err(Error::InvalidInput("standard deviations and scales must be nonnegative".into()));
        }
        if self.frame_spacing < 1 {
            return Err(Error::InvalidInput("frame_spacing must be at least 1".into()));
        }
        if !(self.finger_confidence > 1.0 / 11.0 && self.finger_confidence <= 1.0) {
            return Err(Error::InvalidInput("finger_confidence must exceed 1/11".into()));
        }
        Ok(())
    }

    pub fn sigma(&self, f: Finger) -> (f64, f64) {
        self.sensing_sigma[f.index()]
    }

    /// Same profile with every sensing σ multiplied by `k`.
    pub fn scaled_sensing(&self, k: f64) -> Self {
        let mut p = self.clone();
        for s in p.sensing_sigma.iter_mut() {
            *s = (s.0 * k, s.1 * k);
        }
        p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthEvent {
    pub frame: i64,
    #[serde(rename = "char")]
    pub ch: char,
    pub contact: Vec2,
    pub finger: Finger,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub truth: Vec<GroundTruthEvent>,
    pub observations: Vec<TouchObservation>,
    pub misses: usize,
    pub ghosts: usize,
}

/// Draws from `N(mean, cov)` via the 2×2 Cholesky factor.
pub fn sample_gaussian<R: Rng>(rng: &mut R, g: &Gaussian2) -> Vec2 {
    let z0: f64 = rng.sample(StandardNormal);
    let z1: f64 = rng.sample(StandardNormal);
    let [[a, b], [_, c]] = g.cov.0;
    let l00 = a.max(0.0).sqrt();
    let l10 = if l00 > 0.0 { b / l00 } else { 0.0 };
    let l11 = (c - l10 * l10).max(0.0).sqrt();
    [g.mean[0] + l00 * z0, g.mean[1] + l10 * z0 + l11 * z1]
}

const FIRST_FRAME: i64 = 10;

pub fn simulate(
    phrase: &str,
    layout: &KeyboardLayout,
    keys: &KeyTouchModel,
    profile: &NoiseProfile,
    seed: u64,
) -> Result<Simulation> {
    profile.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = layout.bounds();
    let mut truth = Vec::with_capacity(phrase.len());
    let mut observations: Vec<TouchObservation> = Vec::with_capacity(phrase.len() + 2);
    let (mut misses, mut ghosts) = (0, 0);
    let mut prev = None;

    for (i, ch) in phrase.chars().enumerate() {
        let finger = finger_for_key(ch, prev)?;
        prev = Some(ch);
        let user = keys.get(ch).ok_or(Error::UnknownKey(ch))?;
        let user = user.with_cov(user.cov.scale(profile.user_scale));
        let contact = sample_gaussian(&mut rng, &user);
        let frame = FIRST_FRAME + i as i64 * profile.frame_spacing;
        truth.push(GroundTruthEvent {
            frame,
            ch,
            contact,
            finger,
        });

        // Draw everything up front so the stream of random numbers does not
        // depend on which branches fire.
        let missed = rng.random::<f64>() < profile.miss_rate;
        let confused = rng.random::<f64>() < profile.confusion_rate;
        let pick: f64 = rng.random();
        let jitter: f64 = rng.sample::<f64, _>(StandardNormal) * profile.frame_jitter;
        let (sx, sy) = profile.sigma(finger);
        let noise = sample_gaussian(&mut rng, &Gaussian2::deterministic([0.0; 2]).with_cov(Mat2::diag(sx * sx, sy * sy)));
        let ghost = rng.random::<f64>() < profile.ghost_rate;
        let ghost_at: Vec2 = [rng.random_range(lo[0]..hi[0]), rng.random_range(lo[1]..hi[1])];
        let ghost_finger = Finger::ALL[rng.random_range(0..10)];

        if missed {
            misses += 1;
        } else {
            let emitted = if confused {
                let n = finger.neighbors();
                n[((pick * n.len() as f64) as usize).min(n.len() - 1)]
            } else {
                finger
            };
            observations.push(observation(
                profile,
                frame + profile.latency + jitter.round() as i64,
                emitted,
                [contact[0] + noise[0], contact[1] + noise[1]],
                (sx, sy),
            )?);
        }
        if ghost {
            ghosts += 1;
            let (gx, gy) = profile.sigma(ghost_finger);
            observations.push(observation(
                profile,
                frame + profile.latency + profile.frame_spacing / 2,
                ghost_finger,
                ghost_at,
                (gx, gy),
            )?);
        }
    }

    observations.sort_by_key(|o| o.frame);
    for i in 1..observations.len() {
        if observations[i].frame <= observations[i - 1].frame {
            observations[i].frame = observations[i - 1].frame + 1;
        }
    }
    Ok(Simulation {
        truth,
        observations,
        misses,
        ghosts,
    })
}

fn observation(
    profile: &NoiseProfile,
    frame: i64,
    finger: Finger,
    mean: Vec2,
    sigma: (f64, f64),
) -> Result<TouchObservation> {
    let k = profile.reported_var_scale;
    let var = [sigma.0 * sigma.0 * k, sigma.1 * sigma.1 * k];
    TouchObservation::new(
        frame,
        FrameDistribution::concentrated(finger.index(), profile.finger_confidence),
        Gaussian2::diagonal(mean, var)?,
    )
}

/// One line of a ground-truth file: the phrase and its intended touches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRecord {
    #[serde(default = "truth_version")]
    pub v: u32,
    pub phrase: usize,
    pub text: String,
    pub events: Vec<GroundTruthEvent>,
}

fn truth_version() -> u32 {
    STREAM_FORMAT_VERSION
}

pub fn write_truth<'a>(records: impl IntoIterator<Item = &'a TruthRecord>) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}

pub fn read_truth(text: &str) -> Result<Vec<TruthRecord>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: TruthRecord = serde_json::from_str(line).map_err(|e| Error::Format {
            line: i + 1,
            message: e.to_string(),
        })?;
        if rec.v != STREAM_FORMAT_VERSION {
            return Err(Error::Format {
                line: i + 1,
                message: format!("unsupported version {}", rec.v),
            });
        }
        out.push(rec);
    }
    Ok(out)
}

/// A single intended keystroke passed through user and sensing noise, with
/// no misses, ghosts or finger confusion. Used for live typing.
pub fn sample_touch<R: Rng>(
    rng: &mut R,
    ch: char,
    prev: Option<char>,
    keys: &KeyTouchModel,
    profile: &NoiseProfile,
    frame: i64,
) -> Result<(GroundTruthEvent, TouchObservation)> {
    let finger = finger_for_key(ch, prev)?;
    let user = keys.get(ch).ok_or(Error::UnknownKey(ch))?;
    let contact = sample_gaussian(rng, &user.with_cov(user.cov.scale(profile.user_scale)));
    let (sx, sy) = profile.sigma(finger);
    let z0: f64 = rng.sample(StandardNormal);
    let z1: f64 = rng.sample(StandardNormal);
    let mean = [contact[0] + sx * z0, contact[1] + sy * z1];
    let obs = observation(profile, frame, finger, mean, (sx, sy))?;
    Ok((
        GroundTruthEvent {
            frame,
            ch,
            contact,
            finger,
        },
        obs,
    ))
}

/// Monte-Carlo mean of `|(rx·z0, ry·z1)|` over `n` seeded standard normal pairs.
pub fn mean_radial_error(ratio: (f64, f64), n: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = 0.0;
    for _ in 0..n {
        let z0: f64 = rng.sample(StandardNormal);
        let z1: f64 = rng.sample(StandardNormal);
        total += (ratio.0 * z0).hypot(ratio.1 * z1);
    }
    total / n as f64
}

const CALIBRATION_DRAWS: usize = 200_000;
const CALIBRATION_SEED: u64 = 0x5eed;
const CALIBRATION_ITERATIONS: usize = 200;

/// Axis ratio used for a finger: anisotropic for pinkies, isotropic otherwise.
pub fn sigma_ratio(f: Finger) -> (f64, f64) {
    if f.is_pinky() {
        (PINKY_SIGMA_RATIO.0 / PINKY_SIGMA_RATIO.1, 1.0)
    } else {
        (1.0, 1.0)
    }
}

/// Per-finger sensing σ whose mean radial error hits each target, found by
/// bisection on the σ scale against a fixed-seed Monte-Carlo estimate.
pub fn calibrate_sensing(targets: &[(Finger, f64)]) -> Result<[(f64, f64); 10]> {
    let mut out = [(0.0, 0.0); 10];
    for &(finger, target) in targets {
        if !(target > 0.0) {
            return Err(Error::InvalidInput(format!(
                "target error for {} must be positive",
                finger.code()
            )));
        }
        let ratio = sigma_ratio(finger);
        let unit = mean_radial_error(ratio, CALIBRATION_DRAWS, CALIBRATION_SEED);
        let scale = bisect(|s| s * unit, target)?;
        out[finger.index()] = (scale * ratio.0, scale * ratio.1);
    }
    Ok(out)
}

fn bisect(f: impl Fn(f64) -> f64, target: f64) -> Result<f64> {
    let (mut lo, mut hi) = (0.0, target.max(1.0));
    while f(hi) < target {
        hi *= 2.0;
    }
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..CALIBRATION_ITERATIONS {
        mid = 0.5 * (lo + hi);
        let v = f(mid);
        if ((v - target) / target).abs() < 1e-10 {
            return Ok(mid);
        }
        if v < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let estimate = f(mid);
    if ((estimate - target) / target).abs() <= 0.02 {
        Ok(mid)
    } else {
        Err(Error::NoConvergence {
            iterations: CALIBRATION_ITERATIONS,
            target,
            estimate,
        })
    }
}

/// Rescales `per_finger` targets by one common factor so that their
/// usage-weighted mean equals `overall`.
pub fn rescale_targets(
    per_finger: &[(Finger, f64)],
    overall: f64,
    usage: &[f64; 10],
) -> Vec<(Finger, f64)> {
    let total: f64 = usage.iter().sum();
    let weighted: f64 = per_finger
        .iter()
        .map(|(f, t)| usage[f.index()] / total * t)
        .sum();
    let k = overall / weighted;
    per_finger.iter().map(|(f, t)| (*f, t * k)).collect()
}

/// Finger usage counts for typing `phrases`.
pub fn finger_usage<'a>(phrases: impl IntoIterator<Item = &'a str>) -> Result<[f64; 10]> {
    let mut usage = [0.0; 10];
    for p in phrases {
        let mut prev = None;
        for c in p.chars() {
            usage[finger_for_key(c, prev)?.index()] += 1.0;
            prev = Some(c);
        }
    }
    Ok(usage)
}

/// Profile whose sensing noise reproduces the per-finger errors above,
/// rescaled so that typing `phrases` gives the overall mean error.
pub fn calibrated_profile<'a>(phrases: impl IntoIterator<Item = &'a str>) -> Result<NoiseProfile> {
    let usage = finger_usage(phrases)?;
    let targets = rescale_targets(&TABLE2_BETA_NLL_09, OVERALL_MEAN_ERROR, &usage);
    Ok(NoiseProfile {
        sensing_sigma: calibrate_sensing(&targets)?,
        ..Default::default()
    })
}
