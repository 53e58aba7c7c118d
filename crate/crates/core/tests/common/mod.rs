#![allow(dead_code)]

use std::f64::consts::{LN_10, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tapfuse::decoder::{is_boundary, DecoderConfig, DecoderModels, TouchObservation};
use tapfuse::finger::FrameDistribution;
use tapfuse::gaussian::{Gaussian2, Vec2};
use tapfuse::keyboard::{KeyModelEntry, KeyTouchModel};
use tapfuse::lexicon::Trie;
use tapfuse::lm::{char_token, parse_arpa, words_of, NgramModel, BOS};

/// Unigram model giving every token the same probability.
pub fn flat_lm(tokens: &[String]) -> NgramModel {
    let p = -(tokens.len() as f64).log10();
    let mut arpa = format!("\\data\\\nngram 1={}\n\n\\1-grams:\n", tokens.len() + 1);
    arpa.push_str(&format!("-99\t{BOS}\n"));
    for t in tokens {
        arpa.push_str(&format!("{p}\t{t}\n"));
    }
    arpa.push_str("\n\\end\\\n");
    parse_arpa(&arpa).unwrap()
}

pub fn flat_char_lm(chars: &str) -> NgramModel {
    flat_lm(&chars.chars().map(char_token).collect::<Vec<_>>())
}

pub fn flat_word_lm(words: &[&str]) -> NgramModel {
    flat_lm(&words.iter().map(|w| w.to_string()).collect::<Vec<_>>())
}

pub fn observation(frame: i64, mean: Vec2, var: Vec2) -> TouchObservation {
    TouchObservation::new(
        frame,
        FrameDistribution::concentrated(3, 0.9),
        Gaussian2::diagonal(mean, var).unwrap(),
    )
    .unwrap()
}

/// `log N(x | m, S)` for a 2×2 covariance, written out directly.
pub fn log_normal(x: Vec2, m: Vec2, s: [[f64; 2]; 2]) -> f64 {
    let det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
    let (dx, dy) = (x[0] - m[0], x[1] - m[1]);
    let q = (s[1][1] * dx * dx - (s[0][1] + s[1][0]) * dx * dy + s[0][0] * dy * dy) / det;
    -(2.0 * PI).ln() - 0.5 * det.ln() - 0.5 * q
}

pub fn oracle_log_rho(obs: &Gaussian2, key: &Gaussian2, uncertainty: bool) -> f64 {
    let mut s = key.cov.0;
    if uncertainty {
        for i in 0..2 {
            for j in 0..2 {
                s[i][j] += obs.cov.0[i][j];
            }
        }
    }
    log_normal(obs.mean, key.mean, s)
}

fn lse(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Language-model part of a text's score, or `None` if the lexicon forbids
/// the text.
pub fn oracle_lm_score(text: &str, models: &DecoderModels, cfg: &DecoderConfig) -> Option<f64> {
    let chars: Vec<char> = text.chars().collect();
    let mut total = 0.0;
    let mut history: Vec<String> = vec![BOS.to_string()];
    let mut word = String::new();
    let mut before_word = String::new();
    let word_term = |preceding: &str, w: &str| {
        let mut ctx = vec![BOS.to_string()];
        ctx.extend(words_of(preceding));
        let refs: Vec<&str> = ctx.iter().map(String::as_str).collect();
        cfg.word_lm_weight * LN_10 * models.word_lm.score(&refs, w)
    };
    for (i, &c) in chars.iter().enumerate() {
        if cfg.char_lm_weight != 0.0 {
            let refs: Vec<&str> = history.iter().map(String::as_str).collect();
            total += cfg.char_lm_weight * LN_10 * models.char_lm.score(&refs, &char_token(c));
        }
        history.push(char_token(c));
        if is_boundary(c) {
            if !word.is_empty() {
                if !models.trie.contains(&word) {
                    return None;
                }
                if cfg.word_lm_weight != 0.0 {
                    total += word_term(&before_word, &word);
                }
            }
            word.clear();
            before_word = chars[..=i].iter().collect();
        } else {
            word.push(c);
            if !models.trie.is_prefix(&word) {
                return None;
            }
        }
    }
    if !word.is_empty() {
        if !models.trie.contains(&word) {
            return None;
        }
        if cfg.word_lm_weight != 0.0 {
            total += word_term(&before_word, &word);
        }
    }
    Some(total)
}

/// Touch part of a text's score: log of the sum over every alignment of
/// characters to observations. Each observation is matched to the next
/// character or skipped; characters may also be produced with no
/// observation, but never two in a row without an observation between.
pub fn oracle_alignment_score(
    text: &str,
    stream: &[TouchObservation],
    models: &DecoderModels,
    alphabet: &[char],
    cfg: &DecoderConfig,
) -> f64 {
    let chars: Vec<char> = text.chars().collect();
    let ll: Vec<Vec<f64>> = stream
        .iter()
        .map(|o| {
            alphabet
                .iter()
                .map(|&c| oracle_log_rho(&o.location, models.keys.get(c).unwrap(), cfg.uncertainty_enabled))
                .collect()
        })
        .collect();
    let idx = |c: char| alphabet.iter().position(|&a| a == c).unwrap();

    // at[i][j][k]: log-sum over alignments of the first i characters with
    // the first j observations, k = 1 when the last step was an omission.
    let (nc, no) = (chars.len(), stream.len());
    let mut at = vec![vec![[f64::NEG_INFINITY; 2]; no + 1]; nc + 1];
    at[0][0][0] = 0.0;
    for i in 0..=nc {
        for j in 0..=no {
            for k in 0..2 {
                let v = at[i][j][k];
                if v == f64::NEG_INFINITY {
                    continue;
                }
                if j < no {
                    let skip = v + cfg.lambda_insertion + lse(&ll[j]);
                    at[i][j + 1][0] = lse(&[at[i][j + 1][0], skip]);
                    if i < nc {
                        let m = v + ll[j][idx(chars[i])];
                        at[i + 1][j + 1][0] = lse(&[at[i + 1][j + 1][0], m]);
                    }
                }
                if i < nc && k == 0 {
                    let o = v + cfg.lambda_omission;
                    at[i + 1][j][1] = lse(&[at[i + 1][j][1], o]);
                }
            }
        }
    }
    lse(&at[nc][no])
}

/// Every text over `alphabet` of length at most `max_len` whose words are
/// all vocabulary prefixes, in no particular order.
pub fn candidate_texts(alphabet: &[char], trie: &Trie, max_len: usize) -> Vec<String> {
    let mut out = vec![String::new()];
    let mut frontier = vec![(String::new(), String::new())];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for (text, word) in &frontier {
            for &c in alphabet {
                let w = if is_boundary(c) {
                    if !word.is_empty() && !trie.contains(word) {
                        continue;
                    }
                    String::new()
                } else {
                    let w = format!("{word}{c}");
                    if !trie.is_prefix(&w) {
                        continue;
                    }
                    w
                };
                next.push((format!("{text}{c}"), w));
            }
        }
        out.extend(next.iter().map(|(t, _)| t.clone()));
        frontier = next;
    }
    out
}

/// Exhaustively scored candidates with finite score, best first.
pub fn exhaustive_ranking(
    stream: &[TouchObservation],
    models: &DecoderModels,
    cfg: &DecoderConfig,
) -> Vec<(String, f64)> {
    let alphabet = models.alphabet();
    let max_len = 2 * stream.len() + 1;
    let mut ranked: Vec<(String, f64)> = candidate_texts(&alphabet, &models.trie, max_len)
        .into_iter()
        .filter_map(|t| {
            let lm = oracle_lm_score(&t, models, cfg)?;
            let touch = oracle_alignment_score(&t, stream, models, &alphabet, cfg);
            (touch > f64::NEG_INFINITY).then_some((t, lm + touch))
        })
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked
}

/// A small random decoding problem: three keys (two letters and space), a
/// short word vocabulary and seeded observations.
pub struct ToyInstance {
    pub models: DecoderModels,
    pub stream: Vec<TouchObservation>,
    pub cfg: DecoderConfig,
}

pub fn toy_instance(seed: u64, max_obs: usize, max_vocab: usize) -> ToyInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let letters = ['a', 'b'];
    let keys = KeyTouchModel::from_entries(vec![
        KeyModelEntry { id: 'a', mean: [-10.0, 0.0], cov: tapfuse::Mat2::diag(30.0, 25.0), samples: 0 },
        KeyModelEntry { id: 'b', mean: [10.0, 0.0], cov: tapfuse::Mat2::diag(20.0, 35.0), samples: 0 },
        KeyModelEntry { id: ' ', mean: [0.0, -19.0], cov: tapfuse::Mat2::diag(60.0, 15.0), samples: 0 },
    ])
    .unwrap();

    let vocab_size = rng.random_range(2..=max_vocab);
    let mut vocab: Vec<String> = Vec::new();
    while vocab.len() < vocab_size {
        let len = rng.random_range(1..=3);
        let w: String = (0..len).map(|_| letters[rng.random_range(0..2)]).collect();
        if !vocab.contains(&w) {
            vocab.push(w);
        }
    }
    let sentences: Vec<String> = (0..6)
        .map(|_| {
            (0..rng.random_range(1..=3))
                .map(|_| vocab[rng.random_range(0..vocab.len())].clone())
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect();
    let text = sentences.join("\n");
    let char_lm = tapfuse::experiment::train_char_lm(&text, 3).unwrap();
    let word_lm = tapfuse::experiment::train_word_lm(&text, 2, &vocab).unwrap();
    let trie = Trie::build_strict(&vocab).unwrap();

    let n = rng.random_range(1..=max_obs);
    let centers = [[-10.0, 0.0], [10.0, 0.0], [0.0, -19.0]];
    let stream = (0..n)
        .map(|i| {
            let c: Vec2 = centers[rng.random_range(0..3)];
            let mean = [c[0] + rng.random_range(-8.0..8.0), c[1] + rng.random_range(-8.0..8.0)];
            let var = if rng.random_bool(0.2) {
                [0.0, 0.0]
            } else {
                [rng.random_range(1.0..60.0), rng.random_range(1.0..60.0)]
            };
            observation(i as i64 * 5, mean, var)
        })
        .collect();
    let cfg = DecoderConfig {
        beam_width: usize::MAX,
        lambda_omission: -rng.random_range(2.0..12.0),
        lambda_insertion: -rng.random_range(2.0..12.0),
        char_lm_weight: rng.random_range(0.0..1.5),
        word_lm_weight: rng.random_range(0.0..1.5),
        uncertainty_enabled: rng.random_bool(0.8),
    };
    ToyInstance {
        models: DecoderModels { keys, char_lm, word_lm, trie },
        stream,
        cfg,
    }
}

/// Checks that a decoder ranking equals the exhaustive one: same texts,
/// scores within `tol`, and order consistent with the oracle scores.
pub fn compare_rankings(beam: &[(String, f64)], oracle: &[(String, f64)], tol: f64) -> Result<(), String> {
    if beam.len() != oracle.len() {
        return Err(format!("{} decoder texts vs {} oracle texts", beam.len(), oracle.len()));
    }
    let lookup: std::collections::HashMap<&str, f64> =
        oracle.iter().map(|(t, s)| (t.as_str(), *s)).collect();
    let mut prev = f64::INFINITY;
    for (t, s) in beam {
        let o = *lookup.get(t.as_str()).ok_or_else(|| format!("{t:?} missing from oracle"))?;
        if (o - s).abs() > tol * (1.0 + o.abs()) {
            return Err(format!("{t:?}: decoder {s} vs oracle {o}"));
        }
        if o > prev + tol * (1.0 + o.abs()) {
            return Err(format!("{t:?} ranked below a worse text"));
        }
        prev = prev.min(o);
    }
    Ok(())
}
