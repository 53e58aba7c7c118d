//! Backoff n-gram language models.
//!
//! Probabilities and backoff weights are stored as log10 values, the ARPA
//! convention. Tokens are interned to `u32` ids so that decoding-time lookups
//! hash short integer slices.

mod arpa;
mod tokenize;
mod train;

pub use arpa::{parse_arpa, write_arpa};
pub use tokenize::{
    char_sentences, char_token, is_char_vocab, token_char, word_sentences, words_of, CHAR_VOCAB,
    SPACE_TOKEN,
};
pub use train::{train, TrainConfig};

use std::collections::HashMap;

pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
pub const UNK: &str = "<unk>";

/// log10 value used for `<s>` as a prediction and for tokens missing from a
/// model that has no `<unk>` entry.
pub const LOG10_FLOOR: f64 = -99.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NgramEntry {
    pub log10_prob: f64,
    pub log10_backoff: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NgramModel {
    order: usize,
    tokens: Vec<String>,
    ids: HashMap<String, u32>,
    /// Keyed by the full n-gram, all orders in one table.
    entries: HashMap<Box<[u32]>, NgramEntry>,
    counts: Vec<usize>,
}

impl NgramModel {
    pub(crate) fn empty(order: usize) -> Self {
        NgramModel {
            order,
            tokens: Vec::new(),
            ids: HashMap::new(),
            entries: HashMap::new(),
            counts: vec![0; order],
        }
    }

    pub(crate) fn intern(&mut self, token: &str) -> u32 {
        if let Some(&id) = self.ids.get(token) {
            return id;
        }
        let id = self.tokens.len() as u32;
        self.tokens.push(token.to_string());
        self.ids.insert(token.to_string(), id);
        id
    }

    /// Inserts or replaces an entry; returns true if it was new.
    pub(crate) fn insert(&mut self, ngram: Vec<u32>, entry: NgramEntry) -> bool {
        let n = ngram.len();
        let fresh = self.entries.insert(ngram.into_boxed_slice(), entry).is_none();
        if fresh {
            self.counts[n - 1] += 1;
        }
        fresh
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of stored n-grams of each order, lowest first.
    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.ids.get(token).copied()
    }

    pub fn token(&self, id: u32) -> &str {
        &self.tokens[id as usize]
    }

    /// Id for `token`, mapping unknown tokens to `<unk>` when present.
    pub fn id_or_unk(&self, token: &str) -> Option<u32> {
        self.id(token).or_else(|| self.id(UNK))
    }

    pub fn entry(&self, ngram: &[u32]) -> Option<&NgramEntry> {
        self.entries.get(ngram)
    }

    pub fn entry_by_tokens(&self, ngram: &[&str]) -> Option<&NgramEntry> {
        let ids: Option<Vec<u32>> = ngram.iter().map(|t| self.id(t)).collect();
        ids.and_then(|ids| self.entries.get(ids.as_slice()))
    }

    pub(crate) fn iter_entries(&self) -> impl Iterator<Item = (&[u32], &NgramEntry)> {
        self.entries.iter().map(|(k, v)| (&**k, v))
    }

    pub fn remove(&mut self, ngram: &[&str]) -> Option<NgramEntry> {
        let ids: Vec<u32> = ngram.iter().map(|t| self.id(t)).collect::<Option<_>>()?;
        let removed = self.entries.remove(ids.as_slice());
        if removed.is_some() {
            self.counts[ids.len() - 1] -= 1;
        }
        removed
    }

    /// Standard backoff evaluation over interned ids. Contexts longer than
    /// `order - 1` are truncated from the left.
    pub fn score_ids(&self, context: &[u32], token: Option<u32>) -> f64 {
        let Some(token) = token else {
            return LOG10_FLOOR;
        };
        let keep = context.len().min(self.order - 1);
        let context = &context[context.len() - keep..];
        let mut key: Vec<u32> = Vec::with_capacity(keep + 1);
        let mut backoff = 0.0;
        for start in 0..=keep {
            let history = &context[start..];
            key.clear();
            key.extend_from_slice(history);
            key.push(token);
            if let Some(e) = self.entries.get(key.as_slice()) {
                return backoff + e.log10_prob;
            }
            if !history.is_empty() {
                if let Some(bow) = self.entries.get(history).and_then(|e| e.log10_backoff) {
                    backoff += bow;
                }
            }
        }
        backoff + LOG10_FLOOR
    }

    /// log10 p(token | context). Unknown tokens map to `<unk>`.
    pub fn score(&self, context: &[&str], token: &str) -> f64 {
        let ctx: Vec<u32> = context
            .iter()
            .map(|t| self.id_or_unk(t).unwrap_or(u32::MAX))
            .collect();
        // An unmappable context token simply truncates the history there.
        let cut = ctx.iter().rposition(|&id| id == u32::MAX).map_or(0, |p| p + 1);
        self.score_ids(&ctx[cut..], self.id_or_unk(token))
    }

    /// Tokens that can be predicted: everything except `<s>`.
    pub fn predictable(&self) -> impl Iterator<Item = u32> + '_ {
        self.tokens
            .iter()
            .enumerate()
            .filter(|(_, t)| t.as_str() != BOS)
            .map(|(i, _)| i as u32)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> NgramModel {
        let mut m = NgramModel::empty(2);
        let s = m.intern(BOS);
        let e = m.intern(EOS);
        let a = m.intern("a");
        let b = m.intern("b");
        let lp = |p: f64| p.log10();
        m.insert(vec![s], NgramEntry { log10_prob: LOG10_FLOOR, log10_backoff: Some(lp(0.5)) });
        m.insert(vec![e], NgramEntry { log10_prob: lp(0.2), log10_backoff: None });
        m.insert(vec![a], NgramEntry { log10_prob: lp(0.4), log10_backoff: Some(lp(0.25)) });
        m.insert(vec![b], NgramEntry { log10_prob: lp(0.4), log10_backoff: None });
        m.insert(vec![a, b], NgramEntry { log10_prob: lp(0.9), log10_backoff: None });
        m
    }

    #[test]
    fn lookup_and_backoff() {
        let m = toy();
        assert_eq!(m.score(&["a"], "b"), 0.9f64.log10());
        let v = m.score(&["a"], "a");
        assert!((v - (0.25f64.log10() + 0.4f64.log10())).abs() < 1e-12);
        // No backoff weight on "b": plain unigram.
        assert_eq!(m.score(&["b"], "a"), 0.4f64.log10());
        assert_eq!(m.score(&[], "a"), 0.4f64.log10());
        // Unknown token without <unk> gets the floor.
        assert_eq!(m.score(&[], "zzz"), LOG10_FLOOR);
    }

    #[test]
    fn remove_only_affects_its_chain() {
        let mut m = toy();
        let before_b = m.score(&["b"], "a");
        m.remove(&["a", "b"]).unwrap();
        assert_eq!(m.score(&["b"], "a"), before_b);
        assert!((m.score(&["a"], "b") - (0.25f64.log10() + 0.4f64.log10())).abs() < 1e-12);
        assert_eq!(m.counts(), &[4, 0]);
    }
}
