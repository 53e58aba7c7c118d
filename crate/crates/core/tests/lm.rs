use std::collections::{BTreeSet, HashMap};

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tapfuse::lexicon::Trie;
use tapfuse::lm::*;

/// Interpolated Witten-Bell estimate computed straight from counts.
struct Oracle {
    order: usize,
    vocab: Vec<String>,
    follow: HashMap<Vec<String>, HashMap<String, u64>>,
}

impl Oracle {
    fn new(corpus: &[Vec<String>], order: usize, vocab: Vec<String>) -> Self {
        let mut follow: HashMap<Vec<String>, HashMap<String, u64>> = HashMap::new();
        for s in corpus {
            let mut padded = vec![BOS.to_string()];
            padded.extend(s.iter().cloned());
            padded.push(EOS.to_string());
            for i in 1..padded.len() {
                for k in 0..order.min(i + 1) {
                    *follow
                        .entry(padded[i - k..i].to_vec())
                        .or_default()
                        .entry(padded[i].clone())
                        .or_default() += 1;
                }
            }
        }
        Oracle { order, vocab, follow }
    }

    fn prob(&self, context: &[String], w: &str) -> f64 {
        let keep = context.len().min(self.order - 1);
        let h = &context[context.len() - keep..];
        let lower = if h.is_empty() {
            1.0 / self.vocab.len() as f64
        } else {
            self.prob(&h[1..], w)
        };
        match self.follow.get(h) {
            None => lower,
            Some(next) => {
                let total: u64 = next.values().sum();
                let types = next.len() as f64;
                let c = next.get(w).copied().unwrap_or(0) as f64;
                (c + types * lower) / (total as f64 + types)
            }
        }
    }
}

fn random_corpus(rng: &mut ChaCha8Rng) -> Vec<Vec<String>> {
    let words = ["a", "b", "c", "d"];
    (0..rng.random_range(1..8))
        .map(|_| {
            (0..rng.random_range(1..6))
                .map(|_| words[rng.random_range(0..words.len())].to_string())
                .collect()
        })
        .collect()
}

fn contexts(vocab: &[String], max: usize) -> Vec<Vec<String>> {
    let mut out = vec![vec![]];
    let mut frontier = vec![vec![]];
    for _ in 0..max {
        let mut next = Vec::new();
        for c in &frontier {
            for v in vocab.iter().chain([BOS.to_string()].iter()) {
                let mut e: Vec<String> = c.clone();
                e.push(v.clone());
                next.push(e);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

#[test]
fn witten_bell_matches_count_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..25 {
        let corpus = random_corpus(&mut rng);
        let order = rng.random_range(1..4);
        let model = train(&corpus, &TrainConfig::order(order)).unwrap();
        let vocab: Vec<String> = model.tokens().iter().filter(|t| *t != BOS).cloned().collect();
        let oracle = Oracle::new(&corpus, order, vocab.clone());
        for ctx in contexts(&vocab, 3) {
            let refs: Vec<&str> = ctx.iter().map(String::as_str).collect();
            let mut total = 0.0;
            for w in &vocab {
                let got = 10f64.powf(model.score(&refs, w));
                let want = oracle.prob(&ctx, w);
                assert!((got - want).abs() < 1e-12, "{ctx:?} {w}: {got} vs {want}");
                total += got;
            }
            assert!((total - 1.0).abs() < 1e-9, "{ctx:?} sums to {total}");
            assert!(model.score(&refs, BOS) <= LOG10_FLOOR);
        }
    }
}

#[test]
fn arpa_round_trip_preserves_scores() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..10 {
        let corpus = random_corpus(&mut rng);
        let model = train(&corpus, &TrainConfig::order(3)).unwrap();
        let text = write_arpa(&model);
        let back = parse_arpa(&text).unwrap();
        assert_eq!(back.counts(), model.counts());
        let vocab: Vec<String> = model.tokens().to_vec();
        for ctx in contexts(&vocab, 2) {
            let refs: Vec<&str> = ctx.iter().map(String::as_str).collect();
            for w in &vocab {
                assert!((back.score(&refs, w) - model.score(&refs, w)).abs() < 1e-9);
            }
        }
        assert_eq!(write_arpa(&back), text);
    }
}

#[test]
fn arpa_rejects_malformed_input() {
    assert!(parse_arpa("").is_err());
    assert!(parse_arpa("\\data\\\nngram 1=1\n\n\\1-grams:\nnot-a-number a\n\n\\end\\\n").is_err());
    assert!(parse_arpa("\\data\\\nngram 1=2\n\n\\1-grams:\n-1.0 a\n\n\\end\\\n").is_err());
}

#[test]
fn char_sentences_use_space_token() {
    let s = char_sentences("Hi there\n\nbad ~ line\n");
    assert_eq!(s.len(), 1);
    assert_eq!(s[0][2], SPACE_TOKEN);
    assert_eq!(token_char(SPACE_TOKEN), Some(' '));
}

proptest! {
    #[test]
    fn trie_agrees_with_a_set(words in prop::collection::vec("[a-c0-1]{1,5}", 0..30), probes in prop::collection::vec("[a-c0-1]{0,6}", 0..30)) {
        let trie = Trie::build_strict(&words).unwrap();
        let set: BTreeSet<String> = words.iter().cloned().collect();
        prop_assert_eq!(trie.word_count(), set.len());
        prop_assert_eq!(trie.words(), set.iter().cloned().collect::<Vec<_>>());
        for p in probes.iter().chain(words.iter()) {
            prop_assert_eq!(trie.contains(p), set.contains(p));
            prop_assert_eq!(trie.is_prefix(p), p.is_empty() || set.iter().any(|w| w.starts_with(p.as_str())));
        }
        let back = Trie::from_json(&trie.to_json()).unwrap();
        prop_assert_eq!(back, trie);
    }
}

#[test]
fn trie_reports_bad_words() {
    let (t, errs) = Trie::build(&["ok", "Bad", "fine", "no-way"]);
    assert_eq!(t.word_count(), 2);
    assert_eq!(errs.len(), 2);
    assert!(Trie::build_strict(&["x y"]).is_err());
}
