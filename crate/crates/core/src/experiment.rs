//! Seeded end-to-end runs: simulate every phrase, decode under several
//! decoder conditions and pool the metrics.
//!
//! Language models are trained k-fold so that no phrase is decoded by a model
//! that saw it. The lexicon is closed over the phrase set's words.

use std::collections::{BTreeMap, BTreeSet};
use std::thread;

use serde::{Deserialize, Serialize};

use crate::decoder::{beam_decode, greedy_decode, DecoderConfig, DecoderModels};
use crate::error::{Error, Result};
use crate::finger::Finger;
use crate::keyboard::{KeyTouchModel, KeyboardLayout};
use crate::lexicon::Trie;
use crate::lm::{char_sentences, char_token, train, words_of, NgramModel, TrainConfig, CHAR_VOCAB};
use crate::metrics::{
    align_events, char_errors, AlignmentReport, classification_scores, coer_counts, matched_locations,
    temporal_offset, ClassificationScores, EvaluationReport, FrameWindow, TouchEvent, FRAME_MS,
};
use crate::phrases::fold_members;
use crate::simulator::{simulate, NoiseProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecodeMode {
    Greedy,
    Beam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub label: String,
    pub mode: DecodeMode,
    pub decoder: DecoderConfig,
}

impl Condition {
    pub fn new(label: impl Into<String>, mode: DecodeMode, decoder: DecoderConfig) -> Self {
        Condition {
            label: label.into(),
            mode,
            decoder,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub folds: usize,
    pub char_order: usize,
    pub word_order: usize,
    pub profile: NoiseProfile,
    pub conditions: Vec<Condition>,
}

impl ExperimentConfig {
    /// Greedy and beam decoding, each with and without observation
    /// uncertainty.
    pub fn uncertainty_ablation(profile: NoiseProfile, decoder: DecoderConfig, seed: u64) -> Self {
        let on = DecoderConfig {
            uncertainty_enabled: true,
            ..decoder
        };
        let off = DecoderConfig {
            uncertainty_enabled: false,
            ..decoder
        };
        ExperimentConfig {
            seed,
            folds: 5,
            char_order: 6,
            word_order: 3,
            profile,
            conditions: vec![
                Condition::new("greedy w.u.", DecodeMode::Greedy, on),
                Condition::new("greedy w/o u.", DecodeMode::Greedy, off),
                Condition::new("beam w.u.", DecodeMode::Beam, on),
                Condition::new("beam w/o u.", DecodeMode::Beam, off),
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionResult {
    pub label: String,
    pub mode: DecodeMode,
    pub decoder: DecoderConfig,
    /// Pooled over phrases: total edit distance over total target length.
    pub cher: Option<f64>,
    pub edits: usize,
    pub chars: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub seed: u64,
    pub phrases: usize,
    pub observations: usize,
    pub misses: usize,
    pub ghosts: usize,
    pub position_error_mm: Option<f64>,
    /// Keyed by finger code.
    pub per_finger_error_mm: BTreeMap<String, f64>,
    pub nll: Option<f64>,
    pub coer: Option<f64>,
    pub scores: ClassificationScores,
    pub temporal_offset_ms: Option<f64>,
    pub conditions: Vec<ConditionResult>,
    /// Development-seed results behind tuned character-LM weights.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tuning: Vec<TuningPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningPoint {
    pub label: String,
    pub char_lm_weight: f64,
    pub cher: Option<f64>,
    pub chosen: bool,
}

impl ExperimentReport {
    pub fn condition(&self, label: &str) -> Option<&ConditionResult> {
        self.conditions.iter().find(|c| c.label == label)
    }

    /// One table row per condition; ChER lands in the column of its mode.
    pub fn rows(&self) -> Vec<EvaluationReport> {
        self.conditions
            .iter()
            .map(|c| EvaluationReport {
                label: c.label.clone(),
                position_error_mm: self.position_error_mm,
                nll: self.nll,
                scores: self.scores,
                temporal_offset_ms: self.temporal_offset_ms,
                coer: self.coer,
                cher_greedy: (c.mode == DecodeMode::Greedy).then_some(c.cher).flatten(),
                cher_beam: (c.mode == DecodeMode::Beam).then_some(c.cher).flatten(),
            })
            .collect()
    }
}

/// Per-phrase seed derived from the run seed.
pub fn phrase_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// Distinct words of `phrases`, sorted.
pub fn vocabulary<S: AsRef<str>>(phrases: &[S]) -> Vec<String> {
    phrases
        .iter()
        .flat_map(|p| words_of(p.as_ref()))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

/// Character model over the full character vocabulary, trained on `text`.
pub fn train_char_lm(text: &str, order: usize) -> Result<NgramModel> {
    let cfg = TrainConfig {
        extra_vocab: CHAR_VOCAB.chars().map(char_token).collect(),
        ..TrainConfig::order(order)
    };
    train(&char_sentences(text), &cfg)
}

/// Word model trained on `text` with `vocab` forced into its vocabulary.
pub fn train_word_lm(text: &str, order: usize, vocab: &[String]) -> Result<NgramModel> {
    let cfg = TrainConfig {
        extra_vocab: vocab.to_vec(),
        ..TrainConfig::order(order)
    };
    train(&crate::lm::word_sentences(text), &cfg)
}

pub fn train_models(
    training_phrases: &[&str],
    vocab: &[String],
    keys: &KeyTouchModel,
    char_order: usize,
    word_order: usize,
) -> Result<DecoderModels> {
    let text = training_phrases.join("\n");
    Ok(DecoderModels {
        keys: keys.clone(),
        char_lm: train_char_lm(&text, char_order)?,
        word_lm: train_word_lm(&text, word_order, vocab)?,
        trie: Trie::build_strict(vocab)?,
    })
}

#[derive(Default)]
struct PhraseOutcome {
    observations: usize,
    misses: usize,
    ghosts: usize,
    locations: Vec<(Finger, [f64; 2], [f64; 2])>,
    nll: Vec<f64>,
    alignment: AlignmentReport,
    errors: Vec<(usize, usize)>,
}

fn run_phrase(
    index: usize,
    phrase: &str,
    models: &DecoderModels,
    layout: &KeyboardLayout,
    cfg: &ExperimentConfig,
) -> Result<PhraseOutcome> {
    let sim = simulate(phrase, layout, &models.keys, &cfg.profile, phrase_seed(cfg.seed, index))?;
    let predicted: Vec<TouchEvent> = sim.observations.iter().map(TouchEvent::from_observation).collect();
    let truth: Vec<TouchEvent> = sim.truth.iter().map(TouchEvent::from_truth).collect();
    let report = align_events(&predicted, &truth, FrameWindow::default());

    let mut out = PhraseOutcome {
        observations: sim.observations.len(),
        misses: sim.misses,
        ghosts: sim.ghosts,
        ..Default::default()
    };
    for p in &report.pairs {
        let o = &sim.observations[p.predicted];
        let t = &sim.truth[p.truth];
        out.locations.push((t.finger, o.mean(), t.contact));
        if !o.location.is_deterministic() {
            out.nll.push(-o.location.log_pdf(t.contact)?);
        }
    }
    debug_assert_eq!(matched_locations(&sim.observations, &sim.truth, &report).len(), out.locations.len());
    out.alignment = report;

    for cond in &cfg.conditions {
        let decoded = match cond.mode {
            DecodeMode::Greedy => greedy_decode(&sim.observations, models, &cond.decoder)?,
            DecodeMode::Beam => beam_decode(&sim.observations, models, &cond.decoder)?
                .into_iter()
                .next()
                .map(|r| r.text)
                .unwrap_or_default(),
        };
        out.errors.push(char_errors(&decoded, phrase));
    }
    Ok(out)
}

/// Runs every phrase through simulation and all conditions. Deterministic
/// for a given seed regardless of thread scheduling.
pub fn run_experiment(
    phrases: &[String],
    layout: &KeyboardLayout,
    keys: &KeyTouchModel,
    cfg: &ExperimentConfig,
) -> Result<ExperimentReport> {
    if phrases.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if cfg.folds < 2 || cfg.folds > phrases.len() {
        return Err(Error::InvalidInput(format!(
            "folds must be in 2..={}, got {}",
            phrases.len(),
            cfg.folds
        )));
    }
    cfg.profile.validate()?;
    for c in &cfg.conditions {
        c.decoder.validate()?;
    }
    let vocab = vocabulary(phrases);

    let per_fold: Vec<Result<Vec<(usize, PhraseOutcome)>>> = thread::scope(|s| {
        let handles: Vec<_> = (0..cfg.folds)
            .map(|k| {
                let vocab = &vocab;
                s.spawn(move || {
                    let held_out: BTreeSet<usize> = fold_members(phrases.len(), cfg.folds, k).collect();
                    let training: Vec<&str> = phrases
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| !held_out.contains(i))
                        .map(|(_, p)| p.as_str())
                        .collect();
                    let models = train_models(&training, vocab, keys, cfg.char_order, cfg.word_order)?;
                    held_out
                        .into_iter()
                        .map(|i| Ok((i, run_phrase(i, &phrases[i], &models, layout, cfg)?)))
                        .collect()
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("experiment worker panicked"))
            .collect()
    });
    let mut outcomes: Vec<(usize, PhraseOutcome)> = Vec::with_capacity(phrases.len());
    for fold in per_fold {
        outcomes.extend(fold?);
    }
    outcomes.sort_by_key(|(i, _)| *i);
    Ok(summarize(phrases.len(), layout, cfg, outcomes.into_iter().map(|(_, o)| o).collect()))
}

fn summarize(
    count: usize,
    layout: &KeyboardLayout,
    cfg: &ExperimentConfig,
    outcomes: Vec<PhraseOutcome>,
) -> ExperimentReport {
    let mean = |v: &[f64]| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
    let locations: Vec<(Finger, [f64; 2], [f64; 2])> =
        outcomes.iter().flat_map(|o| o.locations.iter().copied()).collect();
    let dist = |a: [f64; 2], b: [f64; 2]| (a[0] - b[0]).hypot(a[1] - b[1]);
    let errors: Vec<f64> = locations.iter().map(|(_, a, b)| dist(*a, *b)).collect();
    let mut per_finger = BTreeMap::new();
    for f in Finger::ALL {
        let e: Vec<f64> = locations
            .iter()
            .filter(|(g, _, _)| *g == f)
            .map(|(_, a, b)| dist(*a, *b))
            .collect();
        if let Some(m) = mean(&e) {
            per_finger.insert(f.code().to_string(), m);
        }
    }
    let pairs: Vec<([f64; 2], [f64; 2])> = locations.iter().map(|(_, a, b)| (*a, *b)).collect();
    let (wrong, scored) = coer_counts(&pairs, layout);

    let mut alignment = AlignmentReport::default();
    for o in &outcomes {
        alignment.extend(&o.alignment);
    }
    let nll: Vec<f64> = outcomes.iter().flat_map(|o| o.nll.iter().copied()).collect();

    let conditions = cfg
        .conditions
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let (edits, chars) = outcomes
                .iter()
                .map(|o| o.errors[k])
                .fold((0, 0), |(e, n), (de, dn)| (e + de, n + dn));
            ConditionResult {
                label: c.label.clone(),
                mode: c.mode,
                decoder: c.decoder,
                cher: (chars > 0).then(|| edits as f64 / chars as f64),
                edits,
                chars,
            }
        })
        .collect();

    ExperimentReport {
        seed: cfg.seed,
        phrases: count,
        observations: outcomes.iter().map(|o| o.observations).sum(),
        misses: outcomes.iter().map(|o| o.misses).sum(),
        ghosts: outcomes.iter().map(|o| o.ghosts).sum(),
        position_error_mm: mean(&errors),
        per_finger_error_mm: per_finger,
        nll: mean(&nll),
        coer: (scored > 0).then(|| wrong as f64 / scored as f64),
        scores: classification_scores(&alignment),
        temporal_offset_ms: temporal_offset(&alignment, cfg.profile.latency, FRAME_MS),
        conditions,
        tuning: Vec::new(),
    }
}

/// Character-LM weights tried by [`run_tuned_experiment`] by default.
pub const CHAR_LM_WEIGHT_GRID: [f64; 4] = [0.25, 0.5, 0.75, 1.0];

/// Seed of the development run used for tuning.
pub fn development_seed(seed: u64) -> u64 {
    seed ^ 0xd5a6_1266_f0c9_392c
}

/// Picks each condition's character-LM weight from `grid` by its own ChER on
/// a development seed, then runs the experiment with the chosen weights.
/// Every condition is tuned independently, so comparisons are best against
/// best. Ties keep the earlier grid value.
pub fn run_tuned_experiment(
    phrases: &[String],
    layout: &KeyboardLayout,
    keys: &KeyTouchModel,
    cfg: &ExperimentConfig,
    grid: &[f64],
) -> Result<ExperimentReport> {
    if grid.is_empty() {
        return run_experiment(phrases, layout, keys, cfg);
    }
    let mut points = Vec::new();
    let mut best: Vec<Option<(f64, f64)>> = vec![None; cfg.conditions.len()];
    for &w in grid {
        let mut dev = cfg.clone();
        dev.seed = development_seed(cfg.seed);
        for c in dev.conditions.iter_mut() {
            c.decoder.char_lm_weight = w;
        }
        let report = run_experiment(phrases, layout, keys, &dev)?;
        for (k, r) in report.conditions.iter().enumerate() {
            points.push(TuningPoint {
                label: r.label.clone(),
                char_lm_weight: w,
                cher: r.cher,
                chosen: false,
            });
            let cher = r.cher.unwrap_or(f64::INFINITY);
            if best[k].is_none_or(|(_, b)| cher < b) {
                best[k] = Some((w, cher));
            }
        }
    }
    let mut tuned = cfg.clone();
    for (c, b) in tuned.conditions.iter_mut().zip(&best) {
        let (w, _) = b.expect("grid is not empty");
        c.decoder.char_lm_weight = w;
        for p in points.iter_mut().filter(|p| p.label == c.label && p.char_lm_weight == w) {
            p.chosen = true;
        }
    }
    let mut report = run_experiment(phrases, layout, keys, &tuned)?;
    report.tuning = points;
    Ok(report)
}
