//! Tokenization and case normalization shared by the matcher, the annotators
//! and the sentiment encoder.
//!
//! All offsets are character (Unicode scalar) offsets, not byte offsets.

use serde::{Deserialize, Serialize};

/// Characters stripped from the edges of a whitespace-delimited token.
pub const EDGE_PUNCTUATION: &[char] = &['.', ',', '!', '?', ';', ':', '(', ')', '[', ']', '"', '\''];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizedComment {
    pub comment_id: u64,
    pub text: String,
    pub tokens: Vec<Token>,
}

impl TokenizedComment {
    pub fn new(comment_id: u64, text: &str) -> Self {
        Self {
            comment_id,
            text: text.to_string(),
            tokens: word_tokenize(text),
        }
    }
}

/// Splits on whitespace and trims [`EDGE_PUNCTUATION`] from each piece.
/// Interior punctuation survives, so `"s20-fe"` stays one token.
pub fn word_tokenize(text: &str) -> Vec<Token> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if chars[i].is_whitespace() {
            i += 1;
            continue;
        }
        let mut j = i;
        while j < chars.len() && !chars[j].is_whitespace() {
            j += 1;
        }
        let (mut start, mut end) = (i, j);
        while start < end && EDGE_PUNCTUATION.contains(&chars[start]) {
            start += 1;
        }
        while end > start && EDGE_PUNCTUATION.contains(&chars[end - 1]) {
            end -= 1;
        }
        if start < end {
            tokens.push(Token {
                text: chars[start..end].iter().collect(),
                start,
                end,
            });
        }
        i = j;
    }
    tokens
}

pub fn normalize_case(text: &str) -> String {
    text.to_lowercase()
}

/// Case-insensitive comparison of two characters that keeps a one-to-one
/// character mapping (offsets stay valid even when lowercasing expands).
pub(crate) fn chars_eq_folded(a: char, b: char) -> bool {
    a == b || a.to_lowercase().eq(b.to_lowercase())
}
