//! Text-entry speed and error rates.
//!
//! Error rates use the usual decomposition of a keystroke log against the
//! presented phrase P and the final transcription T:
//!
//! * INF (incorrect, not fixed) = MSD(P, T), the edit distance left in T.
//! * C (correct) = max(|P|, |T|) − INF.
//! * IF (incorrect, fixed) = characters entered and later erased.
//!
//! UER = INF / (C + INF + IF) and CER = IF / (C + INF + IF). Every erased
//! character counts toward IF whether or not it was itself a mistake.

use serde::{Deserialize, Serialize};

use crate::numeric::edit_distance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", content = "char", rename_all = "snake_case")]
pub enum KeyAction {
    Char(char),
    Backspace,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Keystroke {
    pub time_ms: f64,
    pub action: KeyAction,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TextEntryStats {
    /// Absent with fewer than two keystrokes or zero elapsed time.
    pub wpm: Option<f64>,
    /// Absent when there is nothing to score.
    pub uer: Option<f64>,
    pub cer: Option<f64>,
    pub correct: usize,
    pub incorrect_not_fixed: usize,
    pub incorrect_fixed: usize,
}

/// Replays a log into its final transcription and erased-character count.
pub fn replay(log: &[Keystroke]) -> (String, usize) {
    let mut text = String::new();
    let mut erased = 0;
    for k in log {
        match k.action {
            KeyAction::Char(c) => text.push(c),
            KeyAction::Backspace => {
                if text.pop().is_some() {
                    erased += 1;
                }
            }
        }
    }
    (text, erased)
}

/// Words per minute with a five-character word and the first keystroke
/// treated as time zero.
pub fn wpm(transcribed_len: usize, elapsed_ms: f64) -> Option<f64> {
    if transcribed_len < 2 || !(elapsed_ms > 0.0) {
        return None;
    }
    Some(((transcribed_len - 1) as f64 / 5.0) / (elapsed_ms / 60_000.0))
}

/// Stats from an already replayed session: transcription, erased count and
/// first/last keystroke times.
pub fn text_entry_stats_from(
    transcribed: &str,
    target: &str,
    erased: usize,
    keystrokes: usize,
    elapsed_ms: f64,
) -> TextEntryStats {
    let p: Vec<char> = target.chars().collect();
    let t: Vec<char> = transcribed.chars().collect();
    let inf = edit_distance(&p, &t);
    let c = p.len().max(t.len()) - inf;
    let total = c + inf + erased;
    let rate = |x: usize| (total > 0).then(|| x as f64 / total as f64);
    TextEntryStats {
        wpm: if keystrokes < 2 { None } else { wpm(t.len(), elapsed_ms) },
        uer: rate(inf),
        cer: rate(erased),
        correct: c,
        incorrect_not_fixed: inf,
        incorrect_fixed: erased,
    }
}

pub fn text_entry_stats(log: &[Keystroke], target: &str) -> TextEntryStats {
    let (text, erased) = replay(log);
    let elapsed = match (log.first(), log.last()) {
        (Some(a), Some(b)) => b.time_ms - a.time_ms,
        _ => 0.0,
    };
    text_entry_stats_from(&text, target, erased, log.len(), elapsed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn typed(text: &str, step_ms: f64) -> Vec<Keystroke> {
        text.chars()
            .enumerate()
            .map(|(i, c)| Keystroke {
                time_ms: i as f64 * step_ms,
                action: KeyAction::Char(c),
            })
            .collect()
    }

    #[test]
    fn wpm_formula() {
        let log = typed("hello world", 1200.0);
        let s = text_entry_stats(&log, "hello world");
        assert!((s.wpm.unwrap() - 10.0).abs() < 1e-12);
        assert_eq!((s.uer, s.cer), (Some(0.0), Some(0.0)));
    }

    #[test]
    fn fixed_and_unfixed_errors() {
        let mut log = typed("the quick brown f", 100.0);
        log.push(Keystroke { time_ms: 2000.0, action: KeyAction::Char('x') });
        log.push(Keystroke { time_ms: 2100.0, action: KeyAction::Backspace });
        log.extend(typed("ix", 100.0).into_iter().map(|mut k| {
            k.time_ms += 2200.0;
            k
        }));
        let s = text_entry_stats(&log, "the quick brown fox");
        assert_eq!((s.correct, s.incorrect_not_fixed, s.incorrect_fixed), (18, 1, 1));
        assert_eq!(s.uer, Some(1.0 / 20.0));
        assert_eq!(s.cer, Some(1.0 / 20.0));
    }

    #[test]
    fn too_short_is_undefined() {
        assert_eq!(text_entry_stats(&typed("a", 10.0), "a").wpm, None);
        assert_eq!(text_entry_stats(&[], "").uer, None);
    }
}
