//! Phrase sets for simulation and evaluation.

/// 556 short lowercase English phrases in the style of the standard
/// text-entry evaluation set, one per line.
pub const BUNDLED: &str = include_str!("../data/phrases.txt");

/// Non-empty lines of a phrase file, trimmed, with inner whitespace collapsed.
pub fn parse_phrases(text: &str) -> Vec<String> {
    text.lines()
        .map(|l| l.split_whitespace().collect::<Vec<_>>().join(" "))
        .filter(|l| !l.is_empty())
        .collect()
}

pub fn bundled() -> Vec<String> {
    parse_phrases(BUNDLED)
}

/// Phrase indices of fold `k` out of `folds` (round-robin assignment).
pub fn fold_members(count: usize, folds: usize, k: usize) -> impl Iterator<Item = usize> {
    (0..count).filter(move |i| i % folds == k)
}
