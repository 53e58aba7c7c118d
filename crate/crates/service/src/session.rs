//! One live typing session and the wire messages it speaks.
//!
//! A keydown on a character key names the key the user meant. The session
//! turns it into a noisy observation with the configured noise profile and
//! feeds that to the decoder session, so the decoder sees what a tracker
//! would have reported.

use std::sync::Arc;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use tapfuse::decoder::{key_likelihood_map, DecoderConfig, DecoderModels, DecoderSession, TouchObservation};
use tapfuse::metrics::{text_entry_stats_from, TextEntryStats};
use tapfuse::simulator::{sample_touch, NoiseProfile};
use tapfuse::Gaussian2;

use crate::{ServiceError, SCHEMA_VERSION};

/// Number of per-key likelihoods returned with each observation.
pub const TOP_KEYS: usize = 5;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    #[serde(default)]
    pub v: Option<u32>,
    #[serde(default)]
    pub noise_profile: NoiseProfile,
    #[serde(default)]
    pub decoder: DecoderConfig,
    #[serde(default)]
    pub seed: u64,
    /// Phrase the user is copying, for live WPM and error rates.
    #[serde(default)]
    pub target: Option<String>,
}

impl CreateSession {
    pub fn validate(&self) -> Result<(), ServiceError> {
        check_version(self.v)?;
        if self.decoder.beam_width == 0 {
            return Err(ServiceError::bad_request("decoder.beam_width", "must be at least 1"));
        }
        self.decoder
            .validate()
            .map_err(|e| ServiceError::bad_request("decoder", e.to_string()))?;
        self.noise_profile
            .validate()
            .map_err(|e| ServiceError::bad_request("noise_profile", e.to_string()))
    }
}

fn check_version(v: Option<u32>) -> Result<(), ServiceError> {
    match v {
        Some(v) if v != SCHEMA_VERSION => Err(ServiceError::bad_request(
            "v",
            format!("unsupported schema version {v}, expected {SCHEMA_VERSION}"),
        )),
        _ => Ok(()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClientMessage {
    #[serde(default)]
    pub v: Option<u32>,
    /// A single character, or one of `space`, `backspace`, `commit_literal`.
    pub keydown: String,
    /// Client clock in milliseconds.
    #[serde(default)]
    pub client_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Key {
    Char(char),
    Space,
    Backspace,
    CommitLiteral,
}

impl Key {
    pub fn parse(s: &str) -> Result<Key, ServiceError> {
        let mut chars = s.chars();
        match (s, chars.next(), chars.next()) {
            ("space", ..) | (_, Some(' '), None) => Ok(Key::Space),
            ("backspace", ..) => Ok(Key::Backspace),
            ("commit_literal", ..) => Ok(Key::CommitLiteral),
            (_, Some(c), None) => Ok(Key::Char(c)),
            _ => Err(ServiceError::bad_request("keydown", format!("unknown key {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeyScore {
    pub key: char,
    pub loglik: f64,
}

/// 1σ ellipse of an observation: semi-axes in decreasing order, rotation of
/// the major axis from +x in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ellipse {
    pub center: [f64; 2],
    pub radii: [f64; 2],
    pub angle: f64,
}

impl Ellipse {
    pub fn of(g: &Gaussian2) -> Ellipse {
        let [[a, b], [_, c]] = g.cov.0;
        let [l0, l1] = g.cov.eigenvalues();
        let (major, minor) = (l0.max(l1), l0.min(l1));
        Ellipse {
            center: g.mean,
            radii: [major.max(0.0).sqrt(), minor.max(0.0).sqrt()],
            angle: 0.5 * (2.0 * b).atan2(a - c),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reply {
    pub v: u32,
    /// Position of this reply in the session, starting at 1.
    pub seq: u64,
    pub literal: String,
    pub suggestion: String,
    pub committed: String,
    pub autocorrect_disabled: bool,
    pub per_key_loglik: Vec<KeyScore>,
    pub observation_ellipse: Option<Ellipse>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionMetrics {
    pub v: u32,
    pub id: String,
    pub keystrokes: usize,
    pub backspaces: usize,
    pub transcript: String,
    pub target: Option<String>,
    /// Absent until there is a target and at least one keystroke.
    pub stats: Option<TextEntryStats>,
}

pub struct Session {
    id: String,
    decoder: DecoderSession,
    profile: NoiseProfile,
    rng: ChaCha8Rng,
    frame: i64,
    prev: Option<char>,
    target: Option<String>,
    keystrokes: usize,
    erased: usize,
    first_time: Option<f64>,
    last_time: f64,
    seq: u64,
}

impl Session {
    pub fn new(id: String, models: Arc<DecoderModels>, req: CreateSession) -> Result<Session, ServiceError> {
        req.validate()?;
        let decoder =
            DecoderSession::new(models, req.decoder).map_err(|e| ServiceError::bad_request("decoder", e.to_string()))?;
        Ok(Session {
            id,
            decoder,
            profile: req.noise_profile,
            rng: ChaCha8Rng::seed_from_u64(req.seed),
            frame: 0,
            prev: None,
            target: req.target,
            keystrokes: 0,
            erased: 0,
            first_time: None,
            last_time: 0.0,
            seq: 0,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn decoder(&self) -> &DecoderSession {
        &self.decoder
    }

    pub fn handle(&mut self, msg: &ClientMessage) -> Result<Reply, ServiceError> {
        check_version(msg.v)?;
        let key = Key::parse(&msg.keydown)?;
        let mut observed: Option<TouchObservation> = None;
        match key {
            Key::Char(c) => {
                self.frame += self.profile.frame_spacing;
                let (_, obs) = sample_touch(
                    &mut self.rng,
                    c,
                    self.prev,
                    &self.decoder.models().keys,
                    &self.profile,
                    self.frame,
                )
                .map_err(|e| ServiceError::bad_request("keydown", e.to_string()))?;
                self.decoder
                    .feed(obs.clone())
                    .map_err(|e| ServiceError::bad_request("keydown", e.to_string()))?;
                self.prev = Some(c);
                observed = Some(obs);
            }
            Key::Space => {
                self.decoder.commit_space();
                self.prev = Some(' ');
            }
            Key::CommitLiteral => {
                self.decoder.commit_literal();
                self.prev = Some(' ');
            }
            Key::Backspace => {
                if !self.decoder.state().literal.is_empty() {
                    self.erased += 1;
                }
                self.decoder
                    .backspace()
                    .map_err(|e| ServiceError::bad_request("keydown", e.to_string()))?;
            }
        }
        self.keystrokes += 1;
        self.first_time.get_or_insert(msg.client_time);
        self.last_time = msg.client_time;
        self.seq += 1;

        let per_key_loglik = match &observed {
            Some(obs) => top_keys(obs, &self.decoder)?,
            None => Vec::new(),
        };
        let state = self.decoder.state();
        Ok(Reply {
            v: SCHEMA_VERSION,
            seq: self.seq,
            literal: state.literal.clone(),
            suggestion: state.suggestion.clone(),
            committed: state.committed.clone(),
            autocorrect_disabled: state.autocorrect_disabled,
            per_key_loglik,
            observation_ellipse: observed.map(|o| Ellipse::of(&o.location)),
        })
    }

    /// Committed text followed by the word in progress.
    pub fn transcript(&self) -> String {
        let s = self.decoder.state();
        format!("{}{}", s.committed, s.literal)
    }

    pub fn metrics(&self) -> SessionMetrics {
        let transcript = self.transcript();
        let stats = match (&self.target, self.first_time) {
            (Some(target), Some(first)) => Some(text_entry_stats_from(
                transcript.trim_end(),
                target,
                self.erased,
                self.keystrokes,
                self.last_time - first,
            )),
            _ => None,
        };
        SessionMetrics {
            v: SCHEMA_VERSION,
            id: self.id.clone(),
            keystrokes: self.keystrokes,
            backspaces: self.erased,
            transcript,
            target: self.target.clone(),
            stats,
        }
    }
}

fn top_keys(obs: &TouchObservation, decoder: &DecoderSession) -> Result<Vec<KeyScore>, ServiceError> {
    let mut scores = key_likelihood_map(obs, &decoder.models().keys, decoder.config())
        .map_err(|e| ServiceError::internal(e.to_string()))?;
    scores.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(scores
        .into_iter()
        .take(TOP_KEYS)
        .map(|(key, loglik)| KeyScore { key, loglik })
        .collect())
}
