use serde::{Deserialize, Serialize};

use crate::decoder::TouchObservation;
use crate::finger::Finger;
use crate::simulator::GroundTruthEvent;

/// A touch event reduced to what alignment looks at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TouchEvent {
    pub frame: i64,
    pub finger: Finger,
}

impl TouchEvent {
    pub fn from_observation(o: &TouchObservation) -> Self {
        TouchEvent {
            frame: o.frame,
            finger: o.finger(),
        }
    }

    pub fn from_truth(e: &GroundTruthEvent) -> Self {
        TouchEvent {
            frame: e.frame,
            finger: e.finger,
        }
    }
}

/// Accepted offset range `predicted.frame - truth.frame`, inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameWindow {
    pub before: i64,
    pub after: i64,
}

impl Default for FrameWindow {
    fn default() -> Self {
        FrameWindow {
            before: 5,
            after: 15,
        }
    }
}

impl FrameWindow {
    pub fn contains(&self, offset: i64) -> bool {
        (-self.before..=self.after).contains(&offset)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub predicted: usize,
    pub truth: usize,
    /// Predicted frame minus truth frame.
    pub offset: i64,
    pub finger_correct: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AlignmentReport {
    /// Pairs inside the frame window, in sequence order.
    pub pairs: Vec<MatchedPair>,
    pub predicted_count: usize,
    pub truth_count: usize,
    pub missed: usize,
    pub ghost: usize,
    pub finger_correct: usize,
    pub finger_wrong: usize,
    /// Predicted and truth finger of every matched pair.
    pub finger_pairs: Vec<(Finger, Finger)>,
}

impl AlignmentReport {
    /// Appends `other` as if its sequences followed this report's sequences.
    pub fn extend(&mut self, other: &AlignmentReport) {
        let (dp, dt) = (self.predicted_count, self.truth_count);
        self.pairs.extend(other.pairs.iter().map(|p| MatchedPair {
            predicted: p.predicted + dp,
            truth: p.truth + dt,
            ..*p
        }));
        self.finger_pairs.extend_from_slice(&other.finger_pairs);
        self.predicted_count += other.predicted_count;
        self.truth_count += other.truth_count;
        self.missed += other.missed;
        self.ghost += other.ghost;
        self.finger_correct += other.finger_correct;
        self.finger_wrong += other.finger_wrong;
    }
}

/// Lexicographic alignment cost: edit operations first, then more aligned
/// pairs, then more in-window pairs, then more in-window finger agreements.
/// With this ordering every optimal alignment yields the same counts.
pub(crate) type Cost = (usize, i64, i64, i64);

pub(crate) fn add(a: Cost, b: Cost) -> Cost {
    (a.0 + b.0, a.1 + b.1, a.2 + b.2, a.3 + b.3)
}

pub(crate) fn pair_cost(p: &TouchEvent, t: &TouchEvent, window: FrameWindow) -> Cost {
    let same = p.finger == t.finger;
    let inside = window.contains(p.frame - t.frame);
    (
        usize::from(!same),
        -1,
        -i64::from(inside),
        -i64::from(inside && same),
    )
}

pub(crate) const GAP: Cost = (1, 0, 0, 0);

/// Levenshtein alignment of predicted and true finger sequences. Substituted
/// pairs count as matched touches with a wrong finger; pairs whose frame
/// offset falls outside `window` become one miss plus one ghost.
pub fn align_events(
    predicted: &[TouchEvent],
    truth: &[TouchEvent],
    window: FrameWindow,
) -> AlignmentReport {
    let (n, m) = (predicted.len(), truth.len());
    let mut dp = vec![vec![(0usize, 0i64, 0i64, 0i64); m + 1]; n + 1];
    for i in 0..=n {
        for j in 0..=m {
            if i == 0 && j == 0 {
                continue;
            }
            let mut best: Option<Cost> = None;
            let mut consider = |c: Cost| {
                if best.is_none_or(|b| c < b) {
                    best = Some(c);
                }
            };
            if i > 0 && j > 0 {
                consider(add(dp[i - 1][j - 1], pair_cost(&predicted[i - 1], &truth[j - 1], window)));
            }
            if i > 0 {
                consider(add(dp[i - 1][j], GAP));
            }
            if j > 0 {
                consider(add(dp[i][j - 1], GAP));
            }
            dp[i][j] = best.expect("at least one predecessor");
        }
    }

    let mut pairs = Vec::new();
    let mut finger_pairs = Vec::new();
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        if i > 0 && j > 0 {
            let (p, t) = (&predicted[i - 1], &truth[j - 1]);
            if dp[i][j] == add(dp[i - 1][j - 1], pair_cost(p, t, window)) {
                let offset = p.frame - t.frame;
                if window.contains(offset) {
                    pairs.push(MatchedPair {
                        predicted: i - 1,
                        truth: j - 1,
                        offset,
                        finger_correct: p.finger == t.finger,
                    });
                    finger_pairs.push((p.finger, t.finger));
                }
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && dp[i][j] == add(dp[i - 1][j], GAP) {
            i -= 1;
        } else {
            j -= 1;
        }
    }
    pairs.reverse();
    finger_pairs.reverse();

    let finger_correct = pairs.iter().filter(|p| p.finger_correct).count();
    AlignmentReport {
        missed: m - pairs.len(),
        ghost: n - pairs.len(),
        finger_wrong: pairs.len() - finger_correct,
        finger_correct,
        predicted_count: n,
        truth_count: m,
        pairs,
        finger_pairs,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Finger::*;

    fn ev(frame: i64, finger: Finger) -> TouchEvent {
        TouchEvent { frame, finger }
    }

    #[test]
    fn identical_sequences_align_fully() {
        let t = vec![ev(0, LeftIndex), ev(5, RightIndex), ev(10, LeftThumb)];
        let r = align_events(&t, &t, FrameWindow::default());
        assert_eq!(r.pairs.len(), 3);
        assert_eq!((r.missed, r.ghost, r.finger_wrong), (0, 0, 0));
    }

    #[test]
    fn extra_prediction_is_a_ghost() {
        let t = vec![ev(0, LeftIndex), ev(10, RightIndex)];
        let p = vec![ev(2, LeftIndex), ev(6, LeftPinky), ev(12, RightIndex)];
        let r = align_events(&p, &t, FrameWindow::default());
        assert_eq!((r.pairs.len(), r.ghost, r.missed), (2, 1, 0));
    }

    #[test]
    fn late_pair_becomes_miss_and_ghost() {
        let t = vec![ev(0, LeftIndex)];
        let p = vec![ev(16, LeftIndex)];
        let r = align_events(&p, &t, FrameWindow::default());
        assert_eq!((r.pairs.len(), r.ghost, r.missed), (0, 1, 1));
        let r = align_events(&[ev(-5, LeftIndex)], &t, FrameWindow::default());
        assert_eq!(r.pairs.len(), 1);
        let r = align_events(&[ev(-6, LeftIndex)], &t, FrameWindow::default());
        assert_eq!(r.pairs.len(), 0);
    }

    #[test]
    fn substitution_is_a_wrong_finger() {
        let t = vec![ev(0, LeftIndex)];
        let p = vec![ev(2, LeftMiddle)];
        let r = align_events(&p, &t, FrameWindow::default());
        assert_eq!((r.finger_correct, r.finger_wrong), (0, 1));
        assert_eq!(r.finger_pairs, vec![(LeftMiddle, LeftIndex)]);
    }

    #[test]
    fn empty_inputs() {
        let t = vec![ev(0, LeftIndex)];
        let r = align_events(&[], &t, FrameWindow::default());
        assert_eq!((r.missed, r.ghost), (1, 0));
        let r = align_events(&t, &[], FrameWindow::default());
        assert_eq!((r.missed, r.ghost), (0, 1));
    }
}
