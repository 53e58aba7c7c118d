//! Evaluation metrics for touch events, locations and decoded text.
//!
//! Metrics that can have an empty denominator return `None` rather than 0.

mod alignment;
mod text_entry;

pub use alignment::{align_events, AlignmentReport, FrameWindow, MatchedPair, TouchEvent};
pub use text_entry::{
    replay, text_entry_stats, text_entry_stats_from, wpm, KeyAction, Keystroke, TextEntryStats,
};

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::decoder::TouchObservation;
use crate::error::Result;
use crate::finger::Finger;
use crate::gaussian::Vec2;
use crate::keyboard::{contact_key, nearest_key, KeyboardLayout};
use crate::numeric::edit_distance;
use crate::simulator::GroundTruthEvent;

/// Frame period of the 30 Hz tracker, in milliseconds.
pub const FRAME_MS: f64 = 1000.0 / 30.0;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
}

impl Prf {
    pub fn new(precision: Option<f64>, recall: Option<f64>) -> Self {
        let f1 = match (precision, recall) {
            (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
            (Some(_), Some(_)) => Some(0.0),
            _ => None,
        };
        Prf {
            precision,
            recall,
            f1,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassificationScores {
    pub touch: Prf,
    /// Macro averages over finger classes with a defined value, computed on
    /// matched pairs only. F1 is the harmonic mean of the macro P and R.
    pub finger: Prf,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

fn mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values
        .into_iter()
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

pub fn classification_scores(report: &AlignmentReport) -> ClassificationScores {
    let matched = report.pairs.len();
    let touch = Prf::new(
        ratio(matched, report.predicted_count),
        ratio(matched, report.truth_count),
    );
    let mut per_class_p = Vec::new();
    let mut per_class_r = Vec::new();
    for f in Finger::ALL {
        let tp = report.finger_pairs.iter().filter(|(p, t)| *p == f && *t == f).count();
        let predicted = report.finger_pairs.iter().filter(|(p, _)| *p == f).count();
        let actual = report.finger_pairs.iter().filter(|(_, t)| *t == f).count();
        per_class_p.extend(ratio(tp, predicted));
        per_class_r.extend(ratio(tp, actual));
    }
    ClassificationScores {
        touch,
        finger: Prf::new(mean(per_class_p), mean(per_class_r)),
    }
}

/// Mean of `(predicted − truth − d) · frame_ms` over matched pairs.
pub fn temporal_offset(report: &AlignmentReport, d: i64, frame_ms: f64) -> Option<f64> {
    mean(report.pairs.iter().map(|p| (p.offset - d) as f64 * frame_ms))
}

/// Character error rate: edit distance over the target length.
pub fn cher(decoded: &str, target: &str) -> Option<f64> {
    let d: Vec<char> = decoded.chars().collect();
    let t: Vec<char> = target.chars().collect();
    ratio(edit_distance(&d, &t), t.len())
}

/// Edit distance and target length, for pooling over many phrases.
pub fn char_errors(decoded: &str, target: &str) -> (usize, usize) {
    let d: Vec<char> = decoded.chars().collect();
    let t: Vec<char> = target.chars().collect();
    (edit_distance(&d, &t), t.len())
}

/// (observation mean, true contact) pairs for the matched events.
pub fn matched_locations(
    observations: &[TouchObservation],
    truth: &[GroundTruthEvent],
    report: &AlignmentReport,
) -> Vec<(Vec2, Vec2)> {
    report
        .pairs
        .iter()
        .map(|p| (observations[p.predicted].mean(), truth[p.truth].contact))
        .collect()
}

/// Counts of (key disagreements, scored pairs). Contacts that fall in a gap
/// between keys have no contact key and are not scored.
pub fn coer_counts(pairs: &[(Vec2, Vec2)], layout: &KeyboardLayout) -> (usize, usize) {
    let mut wrong = 0;
    let mut scored = 0;
    for &(predicted, contact) in pairs {
        if let Some(actual) = contact_key(layout, contact) {
            scored += 1;
            if nearest_key(layout, predicted) != Some(actual) {
                wrong += 1;
            }
        }
    }
    (wrong, scored)
}

/// Contact key error rate over matched events.
pub fn coer(
    observations: &[TouchObservation],
    truth: &[GroundTruthEvent],
    report: &AlignmentReport,
    layout: &KeyboardLayout,
) -> Option<f64> {
    let (wrong, scored) = coer_counts(&matched_locations(observations, truth, report), layout);
    ratio(wrong, scored)
}

/// Mean Euclidean distance between observation means and true contacts.
pub fn position_error(
    observations: &[TouchObservation],
    truth: &[GroundTruthEvent],
    report: &AlignmentReport,
) -> Option<f64> {
    mean(
        matched_locations(observations, truth, report)
            .into_iter()
            .map(|(a, b)| (a[0] - b[0]).hypot(a[1] - b[1])),
    )
}

/// Mean negative log-likelihood of the true contacts under the matched
/// observation Gaussians.
pub fn nll_report(
    observations: &[TouchObservation],
    truth: &[GroundTruthEvent],
    report: &AlignmentReport,
) -> Result<Option<f64>> {
    let values = report
        .pairs
        .iter()
        .map(|p| Ok(-observations[p.predicted].location.log_pdf(truth[p.truth].contact)?))
        .collect::<Result<Vec<f64>>>()?;
    Ok(mean(values))
}

/// One row of an evaluation, with the columns of the usual results table.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub label: String,
    pub position_error_mm: Option<f64>,
    pub nll: Option<f64>,
    pub scores: ClassificationScores,
    pub temporal_offset_ms: Option<f64>,
    pub coer: Option<f64>,
    pub cher_greedy: Option<f64>,
    pub cher_beam: Option<f64>,
}

fn cell(v: Option<f64>, percent: bool) -> String {
    match v {
        None => "n/a".to_string(),
        Some(x) if percent => format!("{:.2}", 100.0 * x),
        Some(x) => format!("{x:.3}"),
    }
}

/// Plain-text table with one row per report.
pub fn format_table(rows: &[EvaluationReport]) -> String {
    let header = [
        "condition", "pos mm", "NLL", "touch P", "touch R", "touch F1", "finger P",
        "finger R", "finger F1", "offset ms", "CoER %", "greedy ChER %", "beam ChER %",
    ];
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.label.clone(),
                cell(r.position_error_mm, false),
                cell(r.nll, false),
                cell(r.scores.touch.precision, false),
                cell(r.scores.touch.recall, false),
                cell(r.scores.touch.f1, false),
                cell(r.scores.finger.precision, false),
                cell(r.scores.finger.recall, false),
                cell(r.scores.finger.f1, false),
                cell(r.temporal_offset_ms, false),
                cell(r.coer, true),
                cell(r.cher_greedy, true),
                cell(r.cher_beam, true),
            ]
        })
        .collect();
    let widths: Vec<usize> = (0..header.len())
        .map(|i| {
            body.iter()
                .map(|row| row[i].len())
                .chain([header[i].len()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    let mut line = |cells: Vec<&str>| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        let _ = writeln!(out, "{}", padded.join("  ").trim_end());
    };
    line(header.to_vec());
    for row in &body {
        line(row.iter().map(String::as_str).collect());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finger::FrameDistribution;
    use crate::gaussian::Gaussian2;
    use crate::keyboard::default_layout;

    fn obs(frame: i64, finger: Finger, mean: Vec2, var: f64) -> TouchObservation {
        TouchObservation::new(
            frame,
            FrameDistribution::concentrated(finger.index(), 0.9),
            Gaussian2::diagonal(mean, [var, var]).unwrap(),
        )
        .unwrap()
    }

    fn truth(frame: i64, finger: Finger, contact: Vec2) -> GroundTruthEvent {
        GroundTruthEvent {
            frame,
            ch: 'f',
            contact,
            finger,
        }
    }

    #[test]
    fn kitten_sitting() {
        assert_eq!(cher("kitten", "sitting"), Some(3.0 / 7.0));
        assert_eq!(cher("abc", "abc"), Some(0.0));
        assert_eq!(cher("", "abcd"), Some(1.0));
        assert_eq!(cher("a", ""), None);
    }

    #[test]
    fn perfect_run_scores() {
        let t: Vec<TouchEvent> = (0..5)
            .map(|i| TouchEvent { frame: 10 * i, finger: Finger::ALL[i as usize] })
            .collect();
        let p: Vec<TouchEvent> = t.iter().map(|e| TouchEvent { frame: e.frame + 2, ..*e }).collect();
        let r = align_events(&p, &t, FrameWindow::default());
        let s = classification_scores(&r);
        assert_eq!(s.touch, Prf::new(Some(1.0), Some(1.0)));
        assert_eq!(s.finger.f1, Some(1.0));
        assert_eq!(temporal_offset(&r, 2, FRAME_MS), Some(0.0));
    }

    #[test]
    fn no_predictions() {
        let t = [TouchEvent { frame: 0, finger: Finger::LeftIndex }];
        let s = classification_scores(&align_events(&[], &t, FrameWindow::default()));
        assert_eq!(s.touch.precision, None);
        assert_eq!(s.touch.recall, Some(0.0));
        assert_eq!(s.touch.f1, None);
    }

    #[test]
    fn hand_counted_confusion() {
        use Finger::*;
        // Pairs (pred, truth): LI/LI, LI/LI, LM/LI, LM/LM.
        let t: Vec<TouchEvent> = [LeftIndex, LeftIndex, LeftIndex, LeftMiddle]
            .iter()
            .enumerate()
            .map(|(i, &f)| TouchEvent { frame: 10 * i as i64, finger: f })
            .collect();
        let mut p: Vec<TouchEvent> = [LeftIndex, LeftIndex, LeftMiddle, LeftMiddle]
            .iter()
            .enumerate()
            .map(|(i, &f)| TouchEvent { frame: 10 * i as i64 + 2, finger: f })
            .collect();
        p.push(TouchEvent { frame: 45, finger: RightThumb });
        let r = align_events(&p, &t, FrameWindow::default());
        let s = classification_scores(&r);
        assert_eq!(s.touch.precision, Some(4.0 / 5.0));
        assert_eq!(s.touch.recall, Some(1.0));
        // LI: P = 2/2, R = 2/3. LM: P = 1/2, R = 1/1.
        let (mp, mr) = ((1.0 + 0.5) / 2.0, (2.0 / 3.0 + 1.0) / 2.0);
        assert!((s.finger.precision.unwrap() - mp).abs() < 1e-15);
        assert!((s.finger.recall.unwrap() - mr).abs() < 1e-15);
        assert_eq!(s.finger.f1, Some(2.0 * mp * mr / (mp + mr)));
    }

    #[test]
    fn one_frame_late() {
        let t = [TouchEvent { frame: 0, finger: Finger::LeftIndex }];
        let p = [TouchEvent { frame: 3, finger: Finger::LeftIndex }];
        let r = align_events(&p, &t, FrameWindow::default());
        assert!((temporal_offset(&r, 2, FRAME_MS).unwrap() - 33.333333333333336).abs() < 1e-12);
    }

    #[test]
    fn nll_at_mean_with_unit_variance() {
        let o = [obs(2, Finger::LeftIndex, [1.0, 2.0], 1.0)];
        let t = [truth(0, Finger::LeftIndex, [1.0, 2.0])];
        let r = align_events(&[TouchEvent::from_observation(&o[0])], &[TouchEvent::from_truth(&t[0])], FrameWindow::default());
        let nll = nll_report(&o, &t, &r).unwrap().unwrap();
        assert!((nll - (2.0 * std::f64::consts::PI).ln()).abs() < 1e-12);
    }

    #[test]
    fn coer_counts_key_changes() {
        let layout = default_layout();
        let f = layout.key('f').unwrap().center();
        let g = layout.key('g').unwrap().center();
        let o = [obs(2, Finger::LeftIndex, f, 1.0), obs(7, Finger::LeftIndex, [f[0] + 19.0, f[1]], 1.0)];
        let t = [truth(0, Finger::LeftIndex, f), truth(5, Finger::LeftIndex, f)];
        let pe: Vec<TouchEvent> = o.iter().map(TouchEvent::from_observation).collect();
        let te: Vec<TouchEvent> = t.iter().map(TouchEvent::from_truth).collect();
        let r = align_events(&pe, &te, FrameWindow::default());
        assert_eq!(coer(&o, &t, &r, &layout), Some(0.5));
        assert_eq!(nearest_key(&layout, [f[0] + 19.0, f[1]]), Some('g'));
        assert_eq!(g, [f[0] + 19.0, f[1]]);
        assert_eq!(position_error(&o, &t, &r), Some(9.5));
    }

    #[test]
    fn table_has_a_row_per_report() {
        let rows = [EvaluationReport { label: "beam".into(), cher_beam: Some(0.0849), ..Default::default() }];
        let table = format_table(&rows);
        assert_eq!(table.lines().count(), 2);
        assert!(table.contains("8.49"));
        assert!(table.contains("n/a"));
    }
}
