//! Prefix trie over the word vocabulary.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Characters allowed inside a vocabulary word.
pub fn is_word_char(c: char) -> bool {
    c.is_ascii_lowercase() || c.is_ascii_digit()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId(u32);

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
struct Node {
    /// Sorted by character.
    children: Vec<(char, NodeId)>,
    terminal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trie {
    nodes: Vec<Node>,
    words: usize,
}

impl Default for Trie {
    fn default() -> Self {
        Trie {
            nodes: vec![Node::default()],
            words: 0,
        }
    }
}

impl Trie {
    pub const ROOT: NodeId = NodeId(0);

    /// Builds from `words`, skipping (and reporting) any word with a
    /// character outside `[a-z0-9]`.
    pub fn build<S: AsRef<str>>(words: &[S]) -> (Trie, Vec<Error>) {
        let mut trie = Trie::default();
        let mut rejected = Vec::new();
        for w in words {
            if let Err(e) = trie.insert(w.as_ref()) {
                rejected.push(e);
            }
        }
        (trie, rejected)
    }

    /// Like [`Trie::build`] but fails on the first rejected word.
    pub fn build_strict<S: AsRef<str>>(words: &[S]) -> Result<Trie> {
        let (trie, mut rejected) = Self::build(words);
        match rejected.is_empty() {
            true => Ok(trie),
            false => Err(rejected.swap_remove(0)),
        }
    }

    pub fn insert(&mut self, word: &str) -> Result<()> {
        if let Some(ch) = word.chars().find(|c| !is_word_char(*c)) {
            return Err(Error::OutOfVocabulary {
                word: word.to_string(),
                ch,
            });
        }
        if word.is_empty() {
            return Err(Error::InvalidInput("empty word".into()));
        }
        let mut node = Self::ROOT;
        for c in word.chars() {
            node = match self.step(node, c) {
                Some(next) => next,
                None => {
                    let next = NodeId(self.nodes.len() as u32);
                    self.nodes.push(Node::default());
                    let children = &mut self.nodes[node.0 as usize].children;
                    let at = children.partition_point(|(k, _)| *k < c);
                    children.insert(at, (c, next));
                    next
                }
            };
        }
        let n = &mut self.nodes[node.0 as usize];
        if !n.terminal {
            n.terminal = true;
            self.words += 1;
        }
        Ok(())
    }

    pub fn step(&self, node: NodeId, c: char) -> Option<NodeId> {
        let children = &self.nodes[node.0 as usize].children;
        children
            .binary_search_by(|(k, _)| k.cmp(&c))
            .ok()
            .map(|i| children[i].1)
    }

    pub fn is_word(&self, node: NodeId) -> bool {
        self.nodes[node.0 as usize].terminal
    }

    /// Children in ascending character order.
    pub fn children(&self, node: NodeId) -> impl Iterator<Item = (char, NodeId)> + '_ {
        self.nodes[node.0 as usize].children.iter().copied()
    }

    pub fn walk(&self, prefix: &str) -> Option<NodeId> {
        prefix.chars().try_fold(Self::ROOT, |n, c| self.step(n, c))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.walk(word).is_some_and(|n| self.is_word(n))
    }

    pub fn is_prefix(&self, prefix: &str) -> bool {
        self.walk(prefix).is_some()
    }

    pub fn word_count(&self) -> usize {
        self.words
    }

    /// All words in lexicographic order.
    pub fn words(&self) -> Vec<String> {
        let mut out = Vec::with_capacity(self.words);
        let mut buf = String::new();
        self.collect(Self::ROOT, &mut buf, &mut out);
        out
    }

    fn collect(&self, node: NodeId, buf: &mut String, out: &mut Vec<String>) {
        if self.is_word(node) {
            out.push(buf.clone());
        }
        for (c, child) in self.children(node) {
            buf.push(c);
            self.collect(child, buf, out);
            buf.pop();
        }
    }

    /// Vocabulary file: one word per line; blank lines ignored.
    pub fn from_vocab_text(text: &str) -> (Trie, Vec<Error>) {
        let words: Vec<String> = text
            .lines()
            .map(|l| l.trim().to_lowercase())
            .filter(|l| !l.is_empty())
            .collect();
        Self::build(&words)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("trie serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}
