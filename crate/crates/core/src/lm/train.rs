//! Interpolated Witten–Bell estimation, exported as a backoff model.
//!
//! For a history `h` with `c(h)` continuation tokens of `T(h)` distinct types,
//!
//! ```text
//! P(w | h) = (c(h, w) + T(h) · P(w | h')) / (c(h) + T(h))
//! ```
//!
//! where `h'` drops the oldest token, and the unigram level interpolates with
//! the uniform distribution over the vocabulary. Unseen continuations get
//! `T(h) / (c(h) + T(h)) · P(w | h')`, so that ratio is exactly the backoff
//! weight of `h` and the backoff form reproduces the interpolated model.

use std::collections::{BTreeMap, HashMap};

use super::{NgramEntry, NgramModel, BOS, EOS, LOG10_FLOOR, UNK};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainConfig {
    pub order: usize,
    /// Keep only the most frequent words (ties broken alphabetically);
    /// everything else becomes `<unk>`.
    pub vocab_limit: Option<usize>,
    /// Tokens added to the vocabulary even when unseen in the corpus.
    pub extra_vocab: Vec<String>,
}

impl TrainConfig {
    pub fn order(order: usize) -> Self {
        TrainConfig {
            order,
            ..Default::default()
        }
    }
}

#[derive(Default)]
struct Follow {
    total: u64,
    next: BTreeMap<u32, u64>,
}

pub fn train(corpus: &[Vec<String>], cfg: &TrainConfig) -> Result<NgramModel> {
    if cfg.order == 0 {
        return Err(Error::InvalidInput("order must be at least 1".into()));
    }
    if corpus.iter().all(|s| s.is_empty()) {
        return Err(Error::EmptyCorpus);
    }
    let order = cfg.order;

    let mut freq: HashMap<&str, u64> = HashMap::new();
    for tok in corpus.iter().flatten() {
        *freq.entry(tok.as_str()).or_default() += 1;
    }
    let mut kept: Vec<(&str, u64)> = freq.into_iter().collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    if let Some(limit) = cfg.vocab_limit {
        kept.truncate(limit);
    }

    let mut model = NgramModel::empty(order);
    let bos = model.intern(BOS);
    let eos = model.intern(EOS);
    let unk = model.intern(UNK);
    let mut words: Vec<&str> = kept.iter().map(|(w, _)| *w).collect();
    words.extend(cfg.extra_vocab.iter().map(String::as_str));
    words.sort_unstable();
    for w in words {
        model.intern(w);
    }

    // follows[k] maps a k-token history to its continuation counts.
    let mut follows: Vec<HashMap<Vec<u32>, Follow>> = (0..order).map(|_| HashMap::new()).collect();
    for sentence in corpus.iter().filter(|s| !s.is_empty()) {
        let mut padded = Vec::with_capacity(sentence.len() + 2);
        padded.push(bos);
        padded.extend(sentence.iter().map(|t| model.id(t).unwrap_or(unk)));
        padded.push(eos);
        for i in 1..padded.len() {
            for k in 0..order.min(i + 1) {
                let history = padded[i - k..i].to_vec();
                let f = follows[k].entry(history).or_default();
                f.total += 1;
                *f.next.entry(padded[i]).or_default() += 1;
            }
        }
    }

    let predictable: Vec<u32> = model.predictable().collect();
    let uniform = 1.0 / predictable.len() as f64;

    // Interpolated probabilities for each stored n-gram, lowest order first
    // so that shorter histories are available when longer ones need them.
    let mut probs: HashMap<Vec<u32>, f64> = HashMap::new();
    let root = &follows[0][&Vec::new()];
    let root_weight = witten_bell_weight(root);
    for &w in &predictable {
        let count = root.next.get(&w).copied().unwrap_or(0) as f64;
        let p = (1.0 - root_weight) * count / root.total as f64 + root_weight * uniform;
        probs.insert(vec![w], p);
    }
    for k in 1..order {
        let mut histories: Vec<&Vec<u32>> = follows[k].keys().collect();
        histories.sort();
        for h in histories {
            let f = &follows[k][h];
            let weight = witten_bell_weight(f);
            for (&w, &c) in &f.next {
                let mut lower = h[1..].to_vec();
                lower.push(w);
                let p_lower = probs[&lower];
                let p = (1.0 - weight) * c as f64 / f.total as f64 + weight * p_lower;
                let mut full = h.clone();
                full.push(w);
                probs.insert(full, p);
            }
        }
    }

    let backoff_of = |ngram: &Vec<u32>| -> Option<f64> {
        let k = ngram.len();
        if k >= order {
            return None;
        }
        follows[k].get(ngram).map(|f| witten_bell_weight(f).log10())
    };

    model.insert(
        vec![bos],
        NgramEntry {
            log10_prob: LOG10_FLOOR,
            log10_backoff: backoff_of(&vec![bos]),
        },
    );
    for (ngram, p) in &probs {
        model.insert(
            ngram.clone(),
            NgramEntry {
                log10_prob: p.log10(),
                log10_backoff: backoff_of(ngram),
            },
        );
    }
    Ok(model)
}

/// Mass reserved for the lower order: `T(h) / (c(h) + T(h))`.
fn witten_bell_weight(f: &Follow) -> f64 {
    let types = f.next.len() as f64;
    types / (f.total as f64 + types)
}
