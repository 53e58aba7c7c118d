//! Touch observations and their JSON-lines stream format.
//!
//! One observation per line:
//!
//! ```json
//! {"v":1,"phrase":0,"frame":12,"finger_probs":[...11 values...],"mean":[x,y],"var":[vx,vy]}
//! ```
//!
//! `v` is the format version (currently 1, optional on input). `phrase`
//! groups observations that belong to one target phrase (default 0).
//! `source_ref` is an optional opaque string identifying the sensor window.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::finger::{Finger, FrameDistribution};
use crate::gaussian::{Gaussian2, Mat2, Vec2};

pub const STREAM_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct TouchObservation {
    /// Frame index at 30 Hz.
    pub frame: i64,
    pub finger_dist: FrameDistribution,
    pub location: Gaussian2,
    pub source_ref: Option<String>,
}

impl TouchObservation {
    /// Rejects observations whose most likely class is blank.
    pub fn new(frame: i64, finger_dist: FrameDistribution, location: Gaussian2) -> Result<Self> {
        if finger_dist.argmax_finger().is_none() {
            return Err(Error::InvalidInput(format!(
                "observation at frame {frame} is a blank frame"
            )));
        }
        Ok(TouchObservation {
            frame,
            finger_dist,
            location,
            source_ref: None,
        })
    }

    pub fn finger(&self) -> Finger {
        self.finger_dist
            .argmax_finger()
            .expect("observations are never blank")
    }

    pub fn mean(&self) -> Vec2 {
        self.location.mean
    }

    /// Copy with the location covariance set to zero.
    pub fn deterministic(&self) -> Self {
        TouchObservation {
            location: self.location.with_cov(Mat2::ZERO),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationRecord {
    #[serde(default = "version")]
    pub v: u32,
    #[serde(default)]
    pub phrase: usize,
    pub frame: i64,
    pub finger_probs: Vec<f64>,
    pub mean: Vec2,
    pub var: Vec2,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_ref: Option<String>,
}

fn version() -> u32 {
    STREAM_FORMAT_VERSION
}

impl ObservationRecord {
    pub fn from_observation(phrase: usize, obs: &TouchObservation) -> Self {
        let cov = &obs.location.cov.0;
        ObservationRecord {
            v: STREAM_FORMAT_VERSION,
            phrase,
            frame: obs.frame,
            finger_probs: obs.finger_dist.probs().to_vec(),
            mean: obs.location.mean,
            var: [cov[0][0], cov[1][1]],
            source_ref: obs.source_ref.clone(),
        }
    }

    pub fn to_observation(&self) -> Result<TouchObservation> {
        if self.v != STREAM_FORMAT_VERSION {
            return Err(Error::InvalidInput(format!(
                "unsupported stream version {}",
                self.v
            )));
        }
        let dist = FrameDistribution::try_from(self.finger_probs.clone())?;
        let location = Gaussian2::diagonal(self.mean, self.var)?;
        let mut obs = TouchObservation::new(self.frame, dist, location)?;
        obs.source_ref = self.source_ref.clone();
        Ok(obs)
    }
}

/// Parses a JSON-lines stream, grouped by phrase index in ascending order.
pub fn read_observations(text: &str) -> Result<BTreeMap<usize, Vec<TouchObservation>>> {
    let mut out: BTreeMap<usize, Vec<TouchObservation>> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let wrap = |e: Error| Error::Format {
            line: i + 1,
            message: e.to_string(),
        };
        let rec: ObservationRecord = serde_json::from_str(line)
            .map_err(Error::from)
            .map_err(wrap)?;
        let obs = rec.to_observation().map_err(wrap)?;
        out.entry(rec.phrase).or_default().push(obs);
    }
    Ok(out)
}

pub fn write_observations<'a, I>(groups: I) -> String
where
    I: IntoIterator<Item = (usize, &'a [TouchObservation])>,
{
    let mut out = String::new();
    for (phrase, stream) in groups {
        for obs in stream {
            let rec = ObservationRecord::from_observation(phrase, obs);
            out.push_str(&serde_json::to_string(&rec).expect("record serializes"));
            out.push('\n');
        }
    }
    out
}

/// Collapses runs of observations on consecutive frames that share the same
/// most likely finger, keeping the first of each run.
pub fn debounce(stream: &[TouchObservation]) -> Vec<TouchObservation> {
    let mut out: Vec<TouchObservation> = Vec::with_capacity(stream.len());
    let mut prev: Option<&TouchObservation> = None;
    for obs in stream {
        let repeat = prev.is_some_and(|p| obs.frame == p.frame + 1 && obs.finger() == p.finger());
        if !repeat {
            out.push(obs.clone());
        }
        prev = Some(obs);
    }
    out
}
