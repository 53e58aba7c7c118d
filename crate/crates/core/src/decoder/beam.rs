//! Trie-constrained beam search with omission and insertion hypotheses.
//!
//! For every observation each hypothesis either matches it with a character
//! that keeps the current word a vocabulary prefix (or closes a vocabulary
//! word with a boundary character), or treats it as a spurious touch. After
//! that consuming round one omission round lets every surviving hypothesis
//! append a character without a touch, so omissions are never consecutive.
//! Hypotheses with identical text are merged by log-sum-exp and the beam is
//! pruned to `beam_width`, ties broken by text.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{
    is_boundary, key_likelihoods, CharScorer, DecoderConfig, DecoderModels, TouchObservation,
    WordScorer,
};
use crate::error::Result;
use crate::lexicon::{is_word_char, NodeId, Trie};
use crate::numeric::{log_add_exp, log_sum_exp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", content = "char", rename_all = "snake_case")]
pub enum Op {
    Match(char),
    Omission(char),
    Insertion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranked {
    pub text: String,
    pub log_score: f64,
    /// Operations of the best-scoring path merged into this text.
    pub ops: Vec<Op>,
}

#[derive(Debug, Clone)]
struct Hypothesis {
    text: String,
    /// Byte offset where the in-progress word starts.
    word_start: usize,
    node: NodeId,
    lm_ctx: Vec<u32>,
    log_score: f64,
    ops: Vec<Op>,
}

struct Search<'a> {
    prefix: &'a str,
    trie: &'a Trie,
    alphabet: Vec<char>,
    chars: CharScorer<'a>,
    words: WordScorer<'a>,
}

impl Search<'_> {
    fn word_score(&self, h: &Hypothesis) -> f64 {
        let word = &h.text[h.word_start..];
        let mut preceding = String::with_capacity(self.prefix.len() + h.word_start);
        preceding.push_str(self.prefix);
        preceding.push_str(&h.text[..h.word_start]);
        self.words.score(&preceding, word)
    }

    /// Appends `alphabet[i]` if the trie allows it, adding `base` plus the
    /// language-model terms.
    fn append(&self, h: &Hypothesis, i: usize, base: f64, prior: &[f64], op: Op) -> Option<Hypothesis> {
        let c = self.alphabet[i];
        let (node, word_start, word_term) = if is_word_char(c) {
            (self.trie.step(h.node, c)?, h.word_start, 0.0)
        } else if is_boundary(c) {
            let in_word = h.word_start < h.text.len();
            if in_word && !self.trie.is_word(h.node) {
                return None;
            }
            let term = if in_word { self.word_score(h) } else { 0.0 };
            (Trie::ROOT, h.text.len() + c.len_utf8(), term)
        } else {
            return None;
        };
        let mut text = String::with_capacity(h.text.len() + 1);
        text.push_str(&h.text);
        text.push(c);
        let mut ops = Vec::with_capacity(h.ops.len() + 1);
        ops.extend_from_slice(&h.ops);
        ops.push(op);
        Some(Hypothesis {
            text,
            word_start,
            node,
            lm_ctx: self.chars.extend(&h.lm_ctx, c),
            log_score: h.log_score + base + prior[i] + word_term,
            ops,
        })
    }

    /// An insertion is charged `lambda_insertion` relative to the
    /// observation's marginal likelihood under all candidate keys, so the
    /// penalty does not depend on the absolute density scale.
    fn consume(&self, beam: &[Hypothesis], ll: &[f64], lambda_insertion: f64) -> Vec<Hypothesis> {
        let log_z = log_sum_exp(ll);
        let mut out = Vec::with_capacity(beam.len() * (self.alphabet.len() + 1));
        for h in beam {
            let prior = self.chars.scores(&h.lm_ctx);
            for i in 0..self.alphabet.len() {
                if let Some(next) = self.append(h, i, ll[i], &prior, Op::Match(self.alphabet[i])) {
                    out.push(next);
                }
            }
            let mut skip = h.clone();
            skip.log_score += lambda_insertion + log_z;
            skip.ops.push(Op::Insertion);
            out.push(skip);
        }
        out
    }

    fn omit(&self, beam: Vec<Hypothesis>, lambda_omission: f64) -> Vec<Hypothesis> {
        let mut out = Vec::with_capacity(beam.len() * (self.alphabet.len() + 1));
        for h in &beam {
            let prior = self.chars.scores(&h.lm_ctx);
            for i in 0..self.alphabet.len() {
                if let Some(next) =
                    self.append(h, i, lambda_omission, &prior, Op::Omission(self.alphabet[i]))
                {
                    out.push(next);
                }
            }
        }
        out.extend(beam);
        out
    }
}

/// Merges identical texts by log-sum-exp, sorts by score (text ascending on
/// ties) and keeps the best `width`.
fn merge_and_prune(candidates: Vec<Hypothesis>, width: usize) -> Vec<Hypothesis> {
    let mut index: HashMap<String, usize> = HashMap::with_capacity(candidates.len());
    let mut merged: Vec<Hypothesis> = Vec::with_capacity(candidates.len());
    for h in candidates {
        match index.get(&h.text) {
            Some(&i) => {
                let kept = &mut merged[i];
                let total = log_add_exp(kept.log_score, h.log_score);
                if h.log_score > kept.log_score {
                    *kept = h;
                }
                kept.log_score = total;
            }
            None => {
                index.insert(h.text.clone(), merged.len());
                merged.push(h);
            }
        }
    }
    merged.sort_by(|a, b| {
        b.log_score
            .total_cmp(&a.log_score)
            .then_with(|| a.text.cmp(&b.text))
    });
    merged.truncate(width);
    merged
}

/// Ranked decodings of a whole stream, most likely first.
pub fn beam_decode(
    stream: &[TouchObservation],
    models: &DecoderModels,
    cfg: &DecoderConfig,
) -> Result<Vec<Ranked>> {
    beam_decode_with_context(stream, models, cfg, "", true)
}

/// Beam search continuing after `prefix` (already committed text, which
/// feeds both language models). With `allow_space` false the space key is
/// not a candidate character.
pub fn beam_decode_with_context(
    stream: &[TouchObservation],
    models: &DecoderModels,
    cfg: &DecoderConfig,
    prefix: &str,
    allow_space: bool,
) -> Result<Vec<Ranked>> {
    cfg.validate()?;
    let alphabet: Vec<char> = models
        .alphabet()
        .into_iter()
        .filter(|&c| allow_space || c != ' ')
        .collect();
    let search = Search {
        prefix,
        trie: &models.trie,
        chars: CharScorer::new(&models.char_lm, &alphabet, cfg.char_lm_weight),
        words: WordScorer::new(&models.word_lm, cfg.word_lm_weight),
        alphabet,
    };

    let root = Hypothesis {
        text: String::new(),
        word_start: 0,
        node: Trie::ROOT,
        lm_ctx: search.chars.context(prefix),
        log_score: 0.0,
        ops: Vec::new(),
    };
    let mut beam = merge_and_prune(search.omit(vec![root], cfg.lambda_omission), cfg.beam_width);
    for obs in stream {
        let ll = key_likelihoods(obs, &models.keys, &search.alphabet, cfg)?;
        let consumed = merge_and_prune(search.consume(&beam, &ll, cfg.lambda_insertion), cfg.beam_width);
        beam = merge_and_prune(search.omit(consumed, cfg.lambda_omission), cfg.beam_width);
    }

    // The final word must be complete and gets its word prior.
    let finished: Vec<Hypothesis> = beam
        .iter()
        .filter_map(|h| {
            if h.word_start == h.text.len() {
                return Some(h.clone());
            }
            if !search.trie.is_word(h.node) {
                return None;
            }
            let mut done = h.clone();
            done.log_score += search.word_score(h);
            Some(done)
        })
        .collect();
    let ranked = if finished.is_empty() { beam } else { merge_and_prune(finished, usize::MAX) };
    Ok(ranked
        .into_iter()
        .map(|h| Ranked {
            text: h.text,
            log_score: h.log_score,
            ops: h.ops,
        })
        .collect())
}
