//! Corpus tokenization for the character and word models.

/// Characters the character model and keyboard know about.
pub const CHAR_VOCAB: &str = "abcdefghijklmnopqrstuvwxyz0123456789,. ";

/// ARPA tokens cannot contain whitespace, so the space character is spelled
/// with this token inside the character model.
pub const SPACE_TOKEN: &str = "<sp>";

pub fn is_char_vocab(c: char) -> bool {
    c.is_ascii_lowercase() || c.is_ascii_digit() || matches!(c, ',' | '.' | ' ')
}

pub fn char_token(c: char) -> String {
    if c == ' ' {
        SPACE_TOKEN.to_string()
    } else {
        c.to_string()
    }
}

pub fn token_char(token: &str) -> Option<char> {
    if token == SPACE_TOKEN {
        return Some(' ');
    }
    let mut it = token.chars();
    match (it.next(), it.next()) {
        (Some(c), None) if is_char_vocab(c) && c != ' ' => Some(c),
        _ => None,
    }
}

/// One character sentence per corpus line: lowercased, whitespace runs
/// collapsed. Lines with any character outside [`CHAR_VOCAB`] are dropped.
pub fn char_sentences(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter_map(|line| {
            let norm = line
                .to_lowercase()
                .split_whitespace()
                .collect::<Vec<_>>()
                .join(" ");
            if norm.is_empty() || !norm.chars().all(is_char_vocab) {
                return None;
            }
            Some(norm.chars().map(char_token).collect())
        })
        .collect()
}

/// Words of a line: lowercased, split on whitespace, comma and period.
pub fn words_of(line: &str) -> Vec<String> {
    line.to_lowercase()
        .split(|c: char| c.is_whitespace() || c == ',' || c == '.')
        .filter(|w| !w.is_empty())
        .map(str::to_string)
        .collect()
}

pub fn word_sentences(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .map(words_of)
        .filter(|ws| !ws.is_empty())
        .collect()
}
