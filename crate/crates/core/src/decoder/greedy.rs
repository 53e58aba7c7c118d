use super::{key_likelihoods, CharScorer, DecoderConfig, DecoderModels, TouchObservation};
use crate::error::Result;
use crate::lm::NgramModel;

/// One character per observation: the key maximizing touch likelihood plus
/// weighted character-LM prior given everything decoded so far.
pub fn greedy_decode(
    stream: &[TouchObservation],
    models: &DecoderModels,
    cfg: &DecoderConfig,
) -> Result<String> {
    greedy_decode_with_context(stream, models, cfg, "", true)
}

/// Greedy decoding after `prefix`. With `allow_space` false the space key is
/// never emitted (sessions use space only as a commit action).
pub fn greedy_decode_with_context(
    stream: &[TouchObservation],
    models: &DecoderModels,
    cfg: &DecoderConfig,
    prefix: &str,
    allow_space: bool,
) -> Result<String> {
    cfg.validate()?;
    let alphabet: Vec<char> = models
        .alphabet()
        .into_iter()
        .filter(|&c| allow_space || c != ' ')
        .collect();
    let scored = stream
        .iter()
        .map(|o| key_likelihoods(o, &models.keys, &alphabet, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(greedy_decode_scored(
        &scored,
        &alphabet,
        &models.char_lm,
        cfg.char_lm_weight,
        prefix,
    ))
}

/// Greedy decoding from precomputed key log-likelihoods (`scored[t][i]` for
/// `alphabet[i]`). Ties go to the smaller character.
pub fn greedy_decode_scored(
    scored: &[Vec<f64>],
    alphabet: &[char],
    char_lm: &NgramModel,
    char_lm_weight: f64,
    prefix: &str,
) -> String {
    let lm = CharScorer::new(char_lm, alphabet, char_lm_weight);
    let mut ctx = lm.context(prefix);
    let mut out = String::with_capacity(scored.len());
    for ll in scored {
        let prior = lm.scores(&ctx);
        let mut best: Option<(usize, f64)> = None;
        for (i, (&l, &p)) in ll.iter().zip(prior.iter()).enumerate() {
            let s = l + p;
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((i, s));
            }
        }
        if let Some((i, _)) = best {
            out.push(alphabet[i]);
            ctx = lm.extend(&ctx, alphabet[i]);
        }
    }
    out
}
