//! Probabilistic text decoding of touch observation streams.
//!
//! Each observation is scored against every key by the closed-form integral
//! of the observation Gaussian times the key's touch Gaussian, then combined
//! with a character n-gram prior (per character) and a word n-gram prior
//! (per completed word). All scores are natural logs.

mod beam;
mod greedy;
mod observation;
mod session;

pub use beam::{beam_decode, beam_decode_with_context, Op, Ranked};
pub use greedy::{greedy_decode, greedy_decode_scored, greedy_decode_with_context};
pub use observation::{
    debounce, read_observations, write_observations, ObservationRecord, TouchObservation,
    STREAM_FORMAT_VERSION,
};
pub use session::{DecoderSession, SessionState};

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{fuse, Mat2};
use crate::keyboard::KeyTouchModel;
use crate::lexicon::Trie;
use crate::lm::{char_token, is_char_vocab, words_of, NgramModel, BOS};
use crate::numeric::log10_to_nats;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecoderConfig {
    /// Hypotheses kept after each observation; `usize::MAX` disables pruning.
    pub beam_width: usize,
    /// Log-probability cost of hypothesizing a character with no touch.
    pub lambda_omission: f64,
    /// Log-probability cost of a touch that produced no character.
    pub lambda_insertion: f64,
    pub char_lm_weight: f64,
    pub word_lm_weight: f64,
    /// When false, observation covariances are treated as zero.
    pub uncertainty_enabled: bool,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        DecoderConfig {
            beam_width: 20,
            lambda_omission: -10.0,
            lambda_insertion: -10.0,
            char_lm_weight: 1.0,
            word_lm_weight: 1.0,
            uncertainty_enabled: true,
        }
    }
}

impl DecoderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.beam_width == 0 {
            return Err(Error::InvalidInput("beam_width must be at least 1".into()));
        }
        if !(self.lambda_omission <= 0.0 && self.lambda_insertion <= 0.0) {
            return Err(Error::InvalidInput(format!(
                "penalties must be nonpositive, got omission {} insertion {}",
                self.lambda_omission, self.lambda_insertion
            )));
        }
        if !(self.char_lm_weight >= 0.0 && self.word_lm_weight >= 0.0) {
            return Err(Error::InvalidInput("LM weights must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Everything a decoder reads; immutable and shareable across sessions.
#[derive(Debug, Clone)]
pub struct DecoderModels {
    pub keys: KeyTouchModel,
    pub char_lm: NgramModel,
    pub word_lm: NgramModel,
    pub trie: Trie,
}

impl DecoderModels {
    /// Candidate characters in ascending order: modelled keys that belong to
    /// the character vocabulary.
    pub fn alphabet(&self) -> Vec<char> {
        self.keys
            .iter()
            .map(|(c, _)| c)
            .filter(|c| is_char_vocab(*c))
            .collect()
    }
}

/// `log ρ` for every key in `alphabet`, in the same order.
pub fn key_likelihoods(
    obs: &TouchObservation,
    keys: &KeyTouchModel,
    alphabet: &[char],
    cfg: &DecoderConfig,
) -> Result<Vec<f64>> {
    let location = if cfg.uncertainty_enabled {
        obs.location
    } else {
        obs.location.with_cov(Mat2::ZERO)
    };
    alphabet
        .iter()
        .map(|&c| {
            let model = keys.get(c).ok_or(Error::UnknownKey(c))?;
            Ok(fuse(&location, model)?.log_rho)
        })
        .collect()
}

/// Key likelihoods as a map, for callers that want them by key id.
pub fn key_likelihood_map(
    obs: &TouchObservation,
    keys: &KeyTouchModel,
    cfg: &DecoderConfig,
) -> Result<Vec<(char, f64)>> {
    let alphabet: Vec<char> = keys.iter().map(|(c, _)| c).collect();
    let ll = key_likelihoods(obs, keys, &alphabet, cfg)?;
    Ok(alphabet.into_iter().zip(ll).collect())
}

/// Weighted character-LM scores for every alphabet character, cached by the
/// truncated history.
pub(crate) struct CharScorer<'a> {
    lm: &'a NgramModel,
    weight: f64,
    key_tokens: Vec<Option<u32>>,
    window: usize,
    cache: RefCell<HashMap<Vec<u32>, Rc<[f64]>>>,
}

impl<'a> CharScorer<'a> {
    pub(crate) fn new(lm: &'a NgramModel, alphabet: &[char], weight: f64) -> Self {
        CharScorer {
            lm,
            weight,
            key_tokens: alphabet
                .iter()
                .map(|&c| lm.id_or_unk(&char_token(c)))
                .collect(),
            window: lm.order().saturating_sub(1),
            cache: RefCell::new(HashMap::new()),
        }
    }

    /// Token ids for `<s>` followed by `text`, keeping the last `order - 1`.
    pub(crate) fn context(&self, text: &str) -> Vec<u32> {
        let mut ids: Vec<u32> = Vec::with_capacity(text.len() + 1);
        if let Some(bos) = self.lm.id(BOS) {
            ids.push(bos);
        }
        for c in text.chars() {
            ids.push(self.lm.id_or_unk(&char_token(c)).unwrap_or(u32::MAX));
        }
        self.trim(ids)
    }

    pub(crate) fn extend(&self, ctx: &[u32], c: char) -> Vec<u32> {
        let mut ids = ctx.to_vec();
        ids.push(self.lm.id_or_unk(&char_token(c)).unwrap_or(u32::MAX));
        self.trim(ids)
    }

    fn trim(&self, mut ids: Vec<u32>) -> Vec<u32> {
        if ids.len() > self.window {
            ids.drain(..ids.len() - self.window);
        }
        ids
    }

    pub(crate) fn scores(&self, ctx: &[u32]) -> Rc<[f64]> {
        if let Some(hit) = self.cache.borrow().get(ctx) {
            return hit.clone();
        }
        let cut = ctx.iter().rposition(|&id| id == u32::MAX).map_or(0, |p| p + 1);
        let history = &ctx[cut..];
        let scores: Rc<[f64]> = self
            .key_tokens
            .iter()
            .map(|&tok| {
                if self.weight == 0.0 {
                    0.0
                } else {
                    self.weight * log10_to_nats(self.lm.score_ids(history, tok))
                }
            })
            .collect();
        self.cache.borrow_mut().insert(ctx.to_vec(), scores.clone());
        scores
    }
}

/// Weighted word-LM score for a completed word.
pub(crate) struct WordScorer<'a> {
    lm: &'a NgramModel,
    weight: f64,
}

impl<'a> WordScorer<'a> {
    pub(crate) fn new(lm: &'a NgramModel, weight: f64) -> Self {
        WordScorer { lm, weight }
    }

    /// `preceding` is the full text before the word; its words form the
    /// history after `<s>`.
    pub(crate) fn score(&self, preceding: &str, word: &str) -> f64 {
        if self.weight == 0.0 {
            return 0.0;
        }
        let words = words_of(preceding);
        let mut ctx: Vec<&str> = Vec::with_capacity(words.len() + 1);
        ctx.push(BOS);
        ctx.extend(words.iter().map(String::as_str));
        self.weight * log10_to_nats(self.lm.score(&ctx, word))
    }
}

/// Word boundary characters close the current word.
pub fn is_boundary(c: char) -> bool {
    matches!(c, ' ' | ',' | '.')
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finger::FrameDistribution;
    use crate::gaussian::{log_pdf, Gaussian2};
    use crate::keyboard::default_layout;

    fn observation(mean: [f64; 2], var: [f64; 2]) -> TouchObservation {
        TouchObservation::new(
            0,
            FrameDistribution::concentrated(3, 0.9),
            Gaussian2::diagonal(mean, var).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn argmax_at_key_center() {
        let layout = default_layout();
        let keys = KeyTouchModel::default_prior(&layout);
        let f = layout.key('f').unwrap().center();
        let ll = key_likelihood_map(&observation(f, [0.01, 0.01]), &keys, &DecoderConfig::default())
            .unwrap();
        let best = ll.iter().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
        assert_eq!(best.0, 'f');
    }

    #[test]
    fn disabled_uncertainty_is_the_density() {
        let layout = default_layout();
        let keys = KeyTouchModel::default_prior(&layout);
        let o = observation([3.0, -4.0], [30.0, 12.0]);
        let cfg = DecoderConfig {
            uncertainty_enabled: false,
            ..Default::default()
        };
        for (c, v) in key_likelihood_map(&o, &keys, &cfg).unwrap() {
            assert_eq!(v, log_pdf(keys.get(c).unwrap(), o.mean()).unwrap());
        }
    }

    #[test]
    fn config_validation() {
        assert!(DecoderConfig::default().validate().is_ok());
        let bad = DecoderConfig {
            beam_width: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = DecoderConfig {
            lambda_insertion: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
