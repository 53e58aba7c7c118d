use std::collections::BTreeMap;
use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use tapfuse::decoder::{
    beam_decode, greedy_decode, read_observations, write_observations, DecoderConfig, DecoderModels,
    TouchObservation,
};
use tapfuse::experiment::{
    phrase_seed, run_experiment, run_tuned_experiment, train_char_lm, train_word_lm, vocabulary, Condition,
    DecodeMode, ExperimentConfig, CHAR_LM_WEIGHT_GRID,
};
use tapfuse::keyboard::{default_layout, KeyTouchModel, KeyboardLayout};
use tapfuse::lexicon::Trie;
use tapfuse::lm::{parse_arpa, write_arpa, NgramModel};
use tapfuse::metrics::{
    align_events, char_errors, classification_scores, coer_counts, format_table, matched_locations, nll_report,
    position_error, temporal_offset, AlignmentReport, EvaluationReport, FrameWindow, TouchEvent, FRAME_MS,
};
use tapfuse::phrases::{bundled, parse_phrases};
use tapfuse::simulator::{
    calibrated_profile, read_truth, simulate as run_simulation, write_truth, GroundTruthEvent, NoiseProfile,
    TruthRecord,
};
use tapfuse::decoder::STREAM_FORMAT_VERSION;

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn need<T>(v: Option<T>, flag: &str) -> Result<T> {
    v.ok_or_else(|| anyhow!("missing required --{flag}"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Unit {
    Char,
    Word,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Greedy,
    Beam,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Switch {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sweep {
    Uncertainty,
    BetaPenalties,
    BeamWidth,
}

/// `bundled` or a file with one phrase per line.
fn load_phrases(source: Option<&str>, limit: Option<usize>) -> Result<Vec<String>> {
    let mut phrases = match source {
        None | Some("bundled") => bundled(),
        Some(path) => parse_phrases(&read(Path::new(path))?),
    };
    if let Some(n) = limit {
        phrases.truncate(n);
    }
    if phrases.is_empty() {
        bail!("no phrases");
    }
    Ok(phrases)
}

/// `calibrated`, `default`, `noiseless` or a JSON file.
fn load_profile(spec: Option<&str>, phrases: &[String]) -> Result<NoiseProfile> {
    let profile = match spec.unwrap_or("calibrated") {
        "calibrated" => calibrated_profile(phrases.iter().map(String::as_str))?,
        "default" => NoiseProfile::default(),
        "noiseless" => NoiseProfile::noiseless(),
        path => serde_json::from_str(&read(Path::new(path))?).with_context(|| format!("parsing {path}"))?,
    };
    profile.validate()?;
    Ok(profile)
}

fn load_layout(path: Option<&PathBuf>) -> Result<KeyboardLayout> {
    match path {
        Some(p) => Ok(KeyboardLayout::from_json(&read(p)?).with_context(|| format!("parsing {}", p.display()))?),
        None => Ok(default_layout()),
    }
}

fn load_keys(path: Option<&PathBuf>, layout: &KeyboardLayout) -> Result<KeyTouchModel> {
    let keys = match path {
        Some(p) => KeyTouchModel::from_json(&read(p)?).with_context(|| format!("parsing {}", p.display()))?,
        None => KeyTouchModel::default_prior(layout),
    };
    if !keys.covers(layout) {
        bail!("key model does not cover every key of the layout");
    }
    Ok(keys)
}

fn load_arpa(path: &Path) -> Result<NgramModel> {
    parse_arpa(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

/// Model files where given; anything missing is trained on the bundled
/// phrase set (character 6-gram, word trigram, its vocabulary).
fn load_models(
    char_lm: Option<&PathBuf>,
    word_lm: Option<&PathBuf>,
    trie: Option<&PathBuf>,
    keys: KeyTouchModel,
) -> Result<DecoderModels> {
    let phrases = bundled();
    let text = phrases.join("\n");
    let vocab = vocabulary(&phrases);
    Ok(DecoderModels {
        keys,
        char_lm: match char_lm {
            Some(p) => load_arpa(p)?,
            None => train_char_lm(&text, 6)?,
        },
        word_lm: match word_lm {
            Some(p) => load_arpa(p)?,
            None => train_word_lm(&text, 3, &vocab)?,
        },
        trie: match trie {
            Some(p) => Trie::from_json(&read(p)?).with_context(|| format!("parsing {}", p.display()))?,
            None => Trie::build_strict(&vocab)?,
        },
    })
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct TrainLmArgs {
    /// Training corpus, one sentence per line.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// N-gram order; 6 for characters and 3 for words when omitted.
    #[arg(long)]
    pub order: Option<usize>,
    #[arg(long, value_enum)]
    pub unit: Option<Unit>,
    /// Word list kept in the model even when unseen (word models only).
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// Output ARPA file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn train_lm(a: TrainLmArgs) -> Result<()> {
    let text = read(&need(a.input, "input")?)?;
    let out = need(a.out, "out")?;
    let unit = a.unit.unwrap_or(Unit::Char);
    let model = match unit {
        Unit::Char => train_char_lm(&text, a.order.unwrap_or(6))?,
        Unit::Word => {
            let vocab: Vec<String> = match &a.vocab {
                Some(p) => read(p)?.lines().map(str::trim).filter(|l| !l.is_empty()).map(str::to_string).collect(),
                None => vocabulary(&parse_phrases(&text)),
            };
            train_word_lm(&text, a.order.unwrap_or(3), &vocab)?
        }
    };
    write(&out, &write_arpa(&model))?;
    eprintln!("wrote {:?} model with n-gram counts {:?} to {}", unit, model.counts(), out.display());
    Ok(())
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct BuildTrieArgs {
    /// Vocabulary, one word per line.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// Output trie JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn build_trie(a: BuildTrieArgs) -> Result<()> {
    let (trie, rejected) = Trie::from_vocab_text(&read(&need(a.vocab, "vocab")?)?);
    if let Some(first) = rejected.first() {
        bail!("{} invalid vocabulary entries, first: {first}", rejected.len());
    }
    let out = need(a.out, "out")?;
    write(&out, &trie.to_json())?;
    eprintln!("wrote {} words to {}", trie.word_count(), out.display());
    Ok(())
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct SimulateArgs {
    /// Phrase file, or `bundled`.
    #[arg(long)]
    pub phrases: Option<String>,
    /// Use only the first N phrases.
    #[arg(long)]
    pub limit: Option<usize>,
    /// Layout JSON; the built-in QWERTY layout when omitted.
    #[arg(long)]
    pub layout: Option<PathBuf>,
    /// Per-key touch model JSON; the layout prior when omitted.
    #[arg(long)]
    pub key_model: Option<PathBuf>,
    /// `calibrated` (default), `default`, `noiseless` or a profile JSON file.
    #[arg(long)]
    pub noise_profile: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Observation stream output (JSON lines).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Ground-truth output; `<out stem>.truth.jsonl` when omitted.
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

fn truth_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.truth.jsonl"))
}

pub fn simulate(a: SimulateArgs) -> Result<()> {
    let phrases = load_phrases(a.phrases.as_deref(), a.limit)?;
    let layout = load_layout(a.layout.as_ref())?;
    let keys = load_keys(a.key_model.as_ref(), &layout)?;
    let profile = load_profile(a.noise_profile.as_deref(), &phrases)?;
    let seed = a.seed.unwrap_or(0);
    let out = need(a.out, "out")?;
    let truth_out = a.truth.unwrap_or_else(|| truth_path(&out));

    let mut streams = Vec::with_capacity(phrases.len());
    let mut truth = Vec::with_capacity(phrases.len());
    for (i, phrase) in phrases.iter().enumerate() {
        let sim = run_simulation(phrase, &layout, &keys, &profile, phrase_seed(seed, i))
            .with_context(|| format!("phrase {i}: {phrase:?}"))?;
        streams.push(sim.observations);
        truth.push(TruthRecord {
            v: STREAM_FORMAT_VERSION,
            phrase: i,
            text: phrase.clone(),
            events: sim.truth,
        });
    }
    write(&out, &write_observations(streams.iter().enumerate().map(|(i, s)| (i, s.as_slice()))))?;
    write(&truth_out, &write_truth(&truth))?;
    eprintln!("simulated {} phrases into {} and {}", phrases.len(), out.display(), truth_out.display());
    Ok(())
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct DecodeArgs {
    /// Observation stream (JSON lines).
    #[arg(long)]
    pub stream: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    #[arg(long, value_enum)]
    pub uncertainty: Option<Switch>,
    #[arg(long)]
    pub beam_width: Option<usize>,
    /// Omission penalty in nats (nonpositive).
    #[arg(long, allow_hyphen_values = true)]
    pub omission: Option<f64>,
    /// Insertion penalty in nats (nonpositive).
    #[arg(long, allow_hyphen_values = true)]
    pub insertion: Option<f64>,
    #[arg(long)]
    pub char_lm_weight: Option<f64>,
    #[arg(long)]
    pub word_lm_weight: Option<f64>,
    /// Character LM (ARPA); trained on the bundled phrases when omitted.
    #[arg(long)]
    pub char_lm: Option<PathBuf>,
    /// Word LM (ARPA); trained on the bundled phrases when omitted.
    #[arg(long)]
    pub word_lm: Option<PathBuf>,
    /// Trie JSON; built from the bundled vocabulary when omitted.
    #[arg(long)]
    pub trie: Option<PathBuf>,
    #[arg(long)]
    pub layout: Option<PathBuf>,
    #[arg(long)]
    pub key_model: Option<PathBuf>,
    /// Decoded output (JSON lines, one per phrase).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodedRecord {
    pub v: u32,
    pub phrase: usize,
    pub mode: Mode,
    pub uncertainty: bool,
    pub text: String,
}

fn decoder_config(a: &DecodeArgs) -> Result<DecoderConfig> {
    let d = DecoderConfig::default();
    let cfg = DecoderConfig {
        beam_width: a.beam_width.unwrap_or(d.beam_width),
        lambda_omission: a.omission.unwrap_or(d.lambda_omission),
        lambda_insertion: a.insertion.unwrap_or(d.lambda_insertion),
        char_lm_weight: a.char_lm_weight.unwrap_or(d.char_lm_weight),
        word_lm_weight: a.word_lm_weight.unwrap_or(d.word_lm_weight),
        uncertainty_enabled: a.uncertainty.unwrap_or(Switch::On) == Switch::On,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn decode_one(stream: &[TouchObservation], models: &DecoderModels, cfg: &DecoderConfig, mode: Mode) -> Result<String> {
    Ok(match mode {
        Mode::Greedy => greedy_decode(stream, models, cfg)?,
        Mode::Beam => beam_decode(stream, models, cfg)?
            .into_iter()
            .next()
            .map(|r| r.text)
            .unwrap_or_default(),
    })
}

pub fn decode(a: DecodeArgs) -> Result<()> {
    let cfg = decoder_config(&a)?;
    let mode = a.mode.unwrap_or(Mode::Beam);
    let streams = read_observations(&read(&need(a.stream.clone(), "stream")?)?).context("parsing stream")?;
    let out = need(a.out.clone(), "out")?;
    let layout = load_layout(a.layout.as_ref())?;
    let keys = load_keys(a.key_model.as_ref(), &layout)?;
    let models = load_models(a.char_lm.as_ref(), a.word_lm.as_ref(), a.trie.as_ref(), keys)?;

    let groups: Vec<(&usize, &Vec<TouchObservation>)> = streams.iter().collect();
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(groups.len().max(1));
    let chunk = groups.len().div_ceil(workers).max(1);
    let texts: Vec<String> = std::thread::scope(|s| {
        let handles: Vec<_> = groups
            .chunks(chunk)
            .map(|part| {
                let models = &models;
                let cfg = &cfg;
                s.spawn(move || {
                    part.iter()
                        .map(|(_, stream)| decode_one(stream, models, cfg, mode))
                        .collect::<Result<Vec<String>>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("decoder thread"))
            .collect::<Result<Vec<Vec<String>>>>()
            .map(|v| v.into_iter().flatten().collect())
    })?;

    let mut text = String::new();
    for ((phrase, _), decoded) in groups.iter().zip(texts) {
        let rec = DecodedRecord {
            v: STREAM_FORMAT_VERSION,
            phrase: **phrase,
            mode,
            uncertainty: cfg.uncertainty_enabled,
            text: decoded,
        };
        text.push_str(&serde_json::to_string(&rec)?);
        text.push('\n');
    }
    write(&out, &text)?;
    eprintln!("decoded {} phrases into {}", groups.len(), out.display());
    Ok(())
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct EvaluateArgs {
    /// Decoder output (JSON lines).
    #[arg(long)]
    pub decoded: Option<PathBuf>,
    /// Ground truth written by `simulate`.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Observation stream, for the event and location metrics.
    #[arg(long)]
    pub stream: Option<PathBuf>,
    #[arg(long)]
    pub layout: Option<PathBuf>,
    /// Row label in the table.
    #[arg(long)]
    pub label: Option<String>,
    /// Metrics JSON output; the table always goes to standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn read_decoded(text: &str) -> Result<Vec<DecodedRecord>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let rec: DecodedRecord = serde_json::from_str(l).with_context(|| format!("decoded line {}", i + 1))?;
            if rec.v != STREAM_FORMAT_VERSION {
                bail!("decoded line {}: unsupported version {}", i + 1, rec.v);
            }
            Ok(rec)
        })
        .collect()
}

fn event_metrics(
    report: &mut EvaluationReport,
    streams: &BTreeMap<usize, Vec<TouchObservation>>,
    truth: &BTreeMap<usize, &[GroundTruthEvent]>,
    layout: &KeyboardLayout,
) -> Result<()> {
    let mut total = AlignmentReport::default();
    let (mut err_sum, mut err_n) = (0.0, 0usize);
    let (mut nll_sum, mut nll_n) = (0.0, 0usize);
    let (mut wrong, mut scored) = (0, 0);
    for (phrase, events) in truth {
        let obs = streams.get(phrase).map(Vec::as_slice).unwrap_or(&[]);
        let predicted: Vec<TouchEvent> = obs.iter().map(TouchEvent::from_observation).collect();
        let expected: Vec<TouchEvent> = events.iter().map(TouchEvent::from_truth).collect();
        let r = align_events(&predicted, &expected, FrameWindow::default());
        if let Some(e) = position_error(obs, events, &r) {
            err_sum += e * r.pairs.len() as f64;
            err_n += r.pairs.len();
        }
        // Noiseless streams carry point masses, which have no density.
        if r.pairs.iter().all(|p| !obs[p.predicted].location.is_deterministic()) {
            if let Some(v) = nll_report(obs, events, &r)? {
                nll_sum += v * r.pairs.len() as f64;
                nll_n += r.pairs.len();
            }
        }
        let (w, s) = coer_counts(&matched_locations(obs, events, &r), layout);
        wrong += w;
        scored += s;
        total.extend(&r);
    }
    report.position_error_mm = (err_n > 0).then(|| err_sum / err_n as f64);
    report.nll = (nll_n > 0).then(|| nll_sum / nll_n as f64);
    report.scores = classification_scores(&total);
    report.temporal_offset_ms = temporal_offset(&total, 2, FRAME_MS);
    report.coer = (scored > 0).then(|| wrong as f64 / scored as f64);
    Ok(())
}

pub fn evaluate(a: EvaluateArgs) -> Result<()> {
    let decoded = read_decoded(&read(&need(a.decoded.clone(), "decoded")?)?)?;
    let truth = read_truth(&read(&need(a.truth.clone(), "truth")?)?).context("parsing truth")?;
    let by_phrase: BTreeMap<usize, &TruthRecord> = truth.iter().map(|t| (t.phrase, t)).collect();
    let mode = decoded.first().map(|d| d.mode);
    if decoded.iter().any(|d| Some(d.mode) != mode) {
        bail!("decoded file mixes greedy and beam output");
    }
    let (mut edits, mut chars) = (0, 0);
    for d in &decoded {
        let t = by_phrase
            .get(&d.phrase)
            .ok_or_else(|| anyhow!("decoded phrase {} has no ground truth", d.phrase))?;
        let (e, n) = char_errors(&d.text, &t.text);
        edits += e;
        chars += n;
    }
    let cher = (chars > 0).then(|| edits as f64 / chars as f64);
    let mut report = EvaluationReport {
        label: a.label.clone().unwrap_or_else(|| match mode {
            Some(Mode::Greedy) => "greedy".into(),
            Some(Mode::Beam) => "beam".into(),
            None => "empty".into(),
        }),
        cher_greedy: (mode == Some(Mode::Greedy)).then_some(cher).flatten(),
        cher_beam: (mode == Some(Mode::Beam)).then_some(cher).flatten(),
        ..Default::default()
    };
    if let Some(path) = &a.stream {
        let streams = read_observations(&read(path)?).context("parsing stream")?;
        if let Some(p) = streams.keys().find(|p| !by_phrase.contains_key(p)) {
            bail!("stream phrase {p} has no ground truth");
        }
        let events: BTreeMap<usize, &[GroundTruthEvent]> =
            truth.iter().map(|t| (t.phrase, t.events.as_slice())).collect();
        event_metrics(&mut report, &streams, &events, &load_layout(a.layout.as_ref())?)?;
    }
    print!("{}", format_table(std::slice::from_ref(&report)));
    if let Some(out) = &a.out {
        write(out, &serde_json::to_string_pretty(&report)?)?;
    }
    Ok(())
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct AblateArgs {
    #[arg(long, value_enum)]
    pub sweep: Option<Sweep>,
    /// Phrase file, or `bundled`.
    #[arg(long)]
    pub phrases: Option<String>,
    #[arg(long)]
    pub limit: Option<usize>,
    /// `calibrated` (default), `default`, `noiseless` or a profile JSON file.
    #[arg(long)]
    pub noise_profile: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Cross-validation folds for the language models.
    #[arg(long)]
    pub folds: Option<usize>,
    /// Pick each condition's character-LM weight on a development seed.
    #[arg(long)]
    #[serde(default)]
    pub tune: bool,
    /// Full report as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn sweep_conditions(sweep: Sweep) -> Vec<Condition> {
    let base = DecoderConfig::default();
    match sweep {
        Sweep::Uncertainty => ExperimentConfig::uncertainty_ablation(NoiseProfile::default(), base, 0).conditions,
        Sweep::BetaPenalties => {
            let mut out = vec![Condition::new("greedy", DecodeMode::Greedy, base)];
            for om in [-5.0, -10.0, -15.0] {
                for ins in [-5.0, -10.0, -15.0] {
                    let cfg = DecoderConfig {
                        lambda_omission: om,
                        lambda_insertion: ins,
                        ..base
                    };
                    out.push(Condition::new(format!("beam om {om} ins {ins}"), DecodeMode::Beam, cfg));
                }
            }
            out
        }
        Sweep::BeamWidth => {
            let mut out = vec![Condition::new("greedy", DecodeMode::Greedy, base)];
            for w in [1, 2, 5, 10, 20, 40] {
                let cfg = DecoderConfig { beam_width: w, ..base };
                out.push(Condition::new(format!("beam width {w}"), DecodeMode::Beam, cfg));
            }
            out
        }
    }
}

pub fn ablate(a: AblateArgs) -> Result<()> {
    let sweep = need(a.sweep, "sweep")?;
    let phrases = load_phrases(a.phrases.as_deref(), a.limit)?;
    let profile = load_profile(a.noise_profile.as_deref(), &phrases)?;
    let layout = default_layout();
    let keys = KeyTouchModel::default_prior(&layout);
    let mut cfg = ExperimentConfig::uncertainty_ablation(profile, DecoderConfig::default(), a.seed.unwrap_or(7));
    cfg.conditions = sweep_conditions(sweep);
    cfg.folds = a.folds.unwrap_or(cfg.folds);
    if cfg.folds < 2 || cfg.folds > phrases.len() {
        bail!("--folds must be between 2 and the number of phrases ({})", phrases.len());
    }
    let report = if a.tune {
        run_tuned_experiment(&phrases, &layout, &keys, &cfg, &CHAR_LM_WEIGHT_GRID)?
    } else {
        run_experiment(&phrases, &layout, &keys, &cfg)?
    };
    print!("{}", format_table(&report.rows()));
    if let Some(out) = &a.out {
        write(out, &serde_json::to_string_pretty(&report)?)?;
    }
    Ok(())
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ServeArgs {
    #[arg(long)]
    pub port: Option<u16>,
    #[arg(long)]
    pub host: Option<String>,
    #[arg(long)]
    pub char_lm: Option<PathBuf>,
    #[arg(long)]
    pub word_lm: Option<PathBuf>,
    #[arg(long)]
    pub trie: Option<PathBuf>,
    #[arg(long)]
    pub layout: Option<PathBuf>,
    #[arg(long)]
    pub key_model: Option<PathBuf>,
}

pub fn serve(a: ServeArgs) -> Result<()> {
    let layout = load_layout(a.layout.as_ref())?;
    let keys = load_keys(a.key_model.as_ref(), &layout)?;
    let models = load_models(a.char_lm.as_ref(), a.word_lm.as_ref(), a.trie.as_ref(), keys)?;
    let host = a.host.unwrap_or_else(|| "127.0.0.1".into());
    let addr: SocketAddr = format!("{host}:{}", a.port.unwrap_or(8080))
        .parse()
        .with_context(|| format!("bad host {host:?}"))?;
    let state = tapfuse_service::AppState::new(models, layout);
    let rt = tokio::runtime::Runtime::new()?;
    eprintln!("listening on http://{addr}");
    rt.block_on(tapfuse_service::serve(addr, state))?;
    Ok(())
}
