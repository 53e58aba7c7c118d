//! Python bindings. Arrays come in and go out as plain lists and tuples.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use tapfuse::decoder::{self, DecoderConfig, DecoderModels, TouchObservation};
use tapfuse::experiment::{train_char_lm, train_word_lm, vocabulary};
use tapfuse::keyboard::{default_layout, KeyTouchModel};
use tapfuse::lexicon::Trie;
use tapfuse::lm::{parse_arpa, write_arpa, NgramModel};
use tapfuse::losses::{beta_nll_loss as core_beta_nll, ctc_loss as core_ctc, LocationPrediction};
use tapfuse::phrases::bundled;
use tapfuse::simulator::{calibrated_profile, NoiseProfile};
use tapfuse::{FrameDistribution, Gaussian2, Mat2, Vec2};

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Bivariate Gaussian over the keyboard plane, in millimetres.
#[pyclass(name = "Gaussian", frozen, from_py_object)]
#[derive(Clone)]
pub struct PyGaussian(Gaussian2);

#[pymethods]
impl PyGaussian {
    /// `cov` is row-major `[[a, b], [b, d]]`; a zero matrix is a point mass.
    #[new]
    fn new(mean: Vec2, cov: [[f64; 2]; 2]) -> PyResult<Self> {
        let m = Mat2(cov);
        if m.is_zero() {
            return Ok(PyGaussian(Gaussian2::deterministic(mean)));
        }
        Gaussian2::new(mean, m).map(PyGaussian).map_err(err)
    }

    #[getter]
    fn mean(&self) -> Vec2 {
        self.0.mean
    }

    #[getter]
    fn cov(&self) -> [[f64; 2]; 2] {
        self.0.cov.0
    }

    fn log_pdf(&self, x: Vec2) -> PyResult<f64> {
        self.0.log_pdf(x).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Gaussian(mean={:?}, cov={:?})", self.0.mean, self.0.cov.0)
    }
}

/// Log of the overlap integral, fused mean and fused covariance.
#[pyfunction]
fn fuse(obs: &PyGaussian, key: &PyGaussian) -> PyResult<(f64, Vec2, [[f64; 2]; 2])> {
    let r = tapfuse::fuse(&obs.0, &key.0).map_err(err)?;
    Ok((r.log_rho, r.fused_mean, r.fused_cov.0))
}

/// One detected touch: frame index, 11 class probabilities (10 fingers then
/// blank) and a diagonal location Gaussian.
#[pyclass(name = "Observation", frozen, from_py_object)]
#[derive(Clone)]
pub struct PyObservation(TouchObservation);

#[pymethods]
impl PyObservation {
    #[new]
    fn new(frame: i64, finger_probs: Vec<f64>, mean: Vec2, var: Vec2) -> PyResult<Self> {
        let probs: [f64; 11] = finger_probs
            .try_into()
            .map_err(|v: Vec<f64>| err(format!("expected 11 class probabilities, got {}", v.len())))?;
        let dist = FrameDistribution::new(probs).map_err(err)?;
        let location = if var == [0.0, 0.0] {
            Gaussian2::deterministic(mean)
        } else {
            Gaussian2::diagonal(mean, var).map_err(err)?
        };
        TouchObservation::new(frame, dist, location).map(PyObservation).map_err(err)
    }

    #[getter]
    fn frame(&self) -> i64 {
        self.0.frame
    }

    #[getter]
    fn finger(&self) -> &'static str {
        self.0.finger().code()
    }

    #[getter]
    fn location(&self) -> PyGaussian {
        PyGaussian(self.0.location)
    }

    fn __repr__(&self) -> String {
        format!("Observation(frame={}, finger={}, mean={:?})", self.0.frame, self.0.finger().code(), self.0.mean())
    }
}

fn unwrap_obs(stream: &[PyObservation]) -> Vec<TouchObservation> {
    stream.iter().map(|o| o.0.clone()).collect()
}

/// Writes streams as JSON lines, keyed by phrase index.
#[pyfunction]
fn write_observations(streams: Vec<Vec<PyObservation>>) -> String {
    let owned: Vec<Vec<TouchObservation>> = streams.iter().map(|s| unwrap_obs(s)).collect();
    decoder::write_observations(owned.iter().enumerate().map(|(i, s)| (i, s.as_slice())))
}

/// Parses JSON lines into `{phrase: [Observation]}`.
#[pyfunction]
fn read_observations(text: &str) -> PyResult<std::collections::BTreeMap<usize, Vec<PyObservation>>> {
    Ok(decoder::read_observations(text)
        .map_err(err)?
        .into_iter()
        .map(|(k, v)| (k, v.into_iter().map(PyObservation).collect()))
        .collect())
}

#[pyclass(name = "LanguageModel", frozen)]
pub struct PyLanguageModel(NgramModel);

#[pymethods]
impl PyLanguageModel {
    /// Witten-Bell model over characters (`unit="char"`) or words.
    #[staticmethod]
    #[pyo3(signature = (text, order, unit = "char"))]
    fn train(text: &str, order: usize, unit: &str) -> PyResult<Self> {
        let model = match unit {
            "char" => train_char_lm(text, order),
            "word" => {
                let lines: Vec<&str> = text.lines().collect();
                train_word_lm(text, order, &vocabulary(&lines))
            }
            other => return Err(err(format!("unit must be char or word, got {other:?}"))),
        };
        model.map(PyLanguageModel).map_err(err)
    }

    #[staticmethod]
    fn from_arpa(text: &str) -> PyResult<Self> {
        parse_arpa(text).map(PyLanguageModel).map_err(err)
    }

    fn to_arpa(&self) -> String {
        write_arpa(&self.0)
    }

    #[getter]
    fn order(&self) -> usize {
        self.0.order()
    }

    /// log10 probability of `token` after `context`.
    fn score(&self, context: Vec<String>, token: &str) -> f64 {
        let ctx: Vec<&str> = context.iter().map(String::as_str).collect();
        self.0.score(&ctx, token)
    }
}

/// Key touch model, language models and lexicon used by the decoders.
#[pyclass(name = "Models", frozen)]
pub struct PyModels(DecoderModels);

#[pymethods]
impl PyModels {
    /// Character 6-gram, word trigram and lexicon trained on `phrases`, or
    /// on the bundled phrase set when omitted.
    #[new]
    #[pyo3(signature = (phrases = None))]
    fn new(phrases: Option<Vec<String>>) -> PyResult<Self> {
        let phrases = phrases.unwrap_or_else(bundled);
        let text = phrases.join("\n");
        let vocab = vocabulary(&phrases);
        Ok(PyModels(DecoderModels {
            keys: KeyTouchModel::default_prior(&default_layout()),
            char_lm: train_char_lm(&text, 6).map_err(err)?,
            word_lm: train_word_lm(&text, 3, &vocab).map_err(err)?,
            trie: Trie::build_strict(&vocab).map_err(err)?,
        }))
    }

    fn key(&self, c: char) -> Option<PyGaussian> {
        self.0.keys.get(c).map(|g| PyGaussian(*g))
    }

    /// Per-key log-likelihoods of one observation, best first.
    #[pyo3(signature = (obs, uncertainty = true))]
    fn key_scores(&self, obs: &PyObservation, uncertainty: bool) -> PyResult<Vec<(char, f64)>> {
        let cfg = DecoderConfig {
            uncertainty_enabled: uncertainty,
            ..Default::default()
        };
        let alphabet = self.0.alphabet();
        let ll = decoder::key_likelihoods(&obs.0, &self.0.keys, &alphabet, &cfg).map_err(err)?;
        let mut out: Vec<(char, f64)> = alphabet.into_iter().zip(ll).collect();
        out.sort_by(|a, b| b.1.total_cmp(&a.1));
        Ok(out)
    }

    #[pyo3(signature = (stream, uncertainty = true, char_lm_weight = 1.0))]
    fn greedy_decode(
        &self,
        py: Python<'_>,
        stream: Vec<PyObservation>,
        uncertainty: bool,
        char_lm_weight: f64,
    ) -> PyResult<String> {
        let cfg = DecoderConfig {
            uncertainty_enabled: uncertainty,
            char_lm_weight,
            ..Default::default()
        };
        cfg.validate().map_err(err)?;
        let obs = unwrap_obs(&stream);
        py.detach(|| decoder::greedy_decode(&obs, &self.0, &cfg)).map_err(err)
    }

    /// Ranked `(text, log_score)` hypotheses.
    #[pyo3(signature = (
        stream, uncertainty = true, beam_width = 20, omission = -10.0, insertion = -10.0,
        char_lm_weight = 1.0, word_lm_weight = 1.0
    ))]
    #[allow(clippy::too_many_arguments)]
    fn beam_decode(
        &self,
        py: Python<'_>,
        stream: Vec<PyObservation>,
        uncertainty: bool,
        beam_width: usize,
        omission: f64,
        insertion: f64,
        char_lm_weight: f64,
        word_lm_weight: f64,
    ) -> PyResult<Vec<(String, f64)>> {
        let cfg = DecoderConfig {
            beam_width,
            lambda_omission: omission,
            lambda_insertion: insertion,
            char_lm_weight,
            word_lm_weight,
            uncertainty_enabled: uncertainty,
        };
        cfg.validate().map_err(err)?;
        let obs = unwrap_obs(&stream);
        let ranked = py.detach(|| decoder::beam_decode(&obs, &self.0, &cfg)).map_err(err)?;
        Ok(ranked.into_iter().map(|r| (r.text, r.log_score)).collect())
    }
}

/// Simulated stream for `phrase` and its ground truth as
/// `(frame, char, (x, y), finger)` tuples. `profile` is `calibrated`,
/// `default` or `noiseless`.
#[pyfunction]
#[pyo3(signature = (phrase, seed = 0, profile = "calibrated"))]
#[allow(clippy::type_complexity)]
fn simulate(
    phrase: &str,
    seed: u64,
    profile: &str,
) -> PyResult<(Vec<PyObservation>, Vec<(i64, char, Vec2, &'static str)>)> {
    let profile = match profile {
        "calibrated" => calibrated_profile(bundled().iter().map(String::as_str)).map_err(err)?,
        "default" => NoiseProfile::default(),
        "noiseless" => NoiseProfile::noiseless(),
        other => return Err(err(format!("unknown profile {other:?}"))),
    };
    let layout = default_layout();
    let keys = KeyTouchModel::default_prior(&layout);
    let sim = tapfuse::simulator::simulate(phrase, &layout, &keys, &profile, seed).map_err(err)?;
    Ok((
        sim.observations.into_iter().map(PyObservation).collect(),
        sim.truth.iter().map(|e| (e.frame, e.ch, e.contact, e.finger.code())).collect(),
    ))
}

/// CTC negative log-likelihood in nats; `inf` when infeasible.
#[pyfunction]
fn ctc_loss(frames: Vec<Vec<f64>>, labels: Vec<usize>) -> PyResult<f64> {
    let frames = frames
        .into_iter()
        .map(|f| {
            let probs: [f64; 11] = f.try_into().map_err(|_| err("each frame needs 11 probabilities"))?;
            FrameDistribution::new(probs).map_err(err)
        })
        .collect::<PyResult<Vec<_>>>()?;
    Ok(core_ctc(&frames, &labels).map_err(err)?.loss)
}

/// β-weighted Gaussian NLL averaged over samples.
#[pyfunction]
fn beta_nll_loss(means: Vec<Vec2>, variances: Vec<Vec2>, targets: Vec<Vec2>, beta: f64) -> PyResult<f64> {
    if means.len() != variances.len() {
        return Err(err("means and variances differ in length"));
    }
    let preds = means
        .into_iter()
        .zip(variances)
        .map(|(m, v)| LocationPrediction::new(m, v).map_err(err))
        .collect::<PyResult<Vec<_>>>()?;
    core_beta_nll(&preds, &targets, beta).map_err(err)
}

/// Character error rate: edit distance over target length.
#[pyfunction]
fn cher(decoded: &str, target: &str) -> Option<f64> {
    tapfuse::metrics::cher(decoded, target)
}

#[pyfunction]
fn bundled_phrases() -> Vec<String> {
    bundled()
}

#[pymodule]
fn tapfuse_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGaussian>()?;
    m.add_class::<PyObservation>()?;
    m.add_class::<PyLanguageModel>()?;
    m.add_class::<PyModels>()?;
    m.add_function(wrap_pyfunction!(fuse, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(read_observations, m)?)?;
    m.add_function(wrap_pyfunction!(write_observations, m)?)?;
    m.add_function(wrap_pyfunction!(ctc_loss, m)?)?;
    m.add_function(wrap_pyfunction!(beta_nll_loss, m)?)?;
    m.add_function(wrap_pyfunction!(cher, m)?)?;
    m.add_function(wrap_pyfunction!(bundled_phrases, m)?)?;
    Ok(())
}
