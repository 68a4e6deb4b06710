//! Fuzzy spell correction of device mentions against the gazetteer, and
//! extraction of the corrected mentions as character spans.
//!
//! Correction works on runs of consecutive tokens ("units"). A unit is compared
//! against every catalog model; the candidate with the smallest edit distance
//! wins, ties going to the higher similarity ratio and then to catalog order.
//! A candidate is accepted only when the distance is strictly below
//! [`MatcherConfig::max_edit_distance`] and the ratio strictly above
//! [`MatcherConfig::min_ratio`].
//!
//! Units are visited longest first and, within one length, left to right. A
//! first pass accepts only exact (case-insensitive) matches so that a correctly
//! spelled device can never be absorbed into a longer fuzzy match; a second
//! pass does the fuzzy correction over whatever tokens are still free.

use serde::{Deserialize, Serialize};

use crate::catalog::DeviceCatalog;
use crate::error::{Error, Result};
use crate::textprep::{chars_eq_folded, normalize_case, TokenizedComment};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MatcherConfig {
    /// Exclusive upper bound on accepted edit distance.
    pub max_edit_distance: usize,
    /// Exclusive lower bound on accepted similarity ratio.
    pub min_ratio: f64,
    /// Longest token run considered; `None` uses the catalog's longest model.
    pub max_ngram: Option<usize>,
}

impl Default for MatcherConfig {
    fn default() -> Self {
        Self {
            max_edit_distance: 3,
            min_ratio: 0.55,
            max_ngram: None,
        }
    }
}

impl MatcherConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_edit_distance == 0 {
            return Err(Error::Config("max_edit_distance must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.min_ratio) {
            return Err(Error::Config("min_ratio must lie in [0, 1)".into()));
        }
        if self.max_ngram == Some(0) {
            return Err(Error::Config("max_ngram must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Replacement {
    /// Character offsets into the original text.
    pub start: usize,
    pub end: usize,
    pub original: String,
    pub replacement: String,
    pub distance: usize,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrectionResult {
    pub corrected_text: String,
    pub replacements: Vec<Replacement>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityMatch {
    pub comment_id: u64,
    /// Character offsets into the corrected text.
    pub start: usize,
    pub end: usize,
    pub device: String,
}

/// Levenshtein distance over characters with unit costs.
pub fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    edit_distance_chars(&a, &b)
}

fn edit_distance_chars(a: &[char], b: &[char]) -> usize {
    let (a, b) = if a.len() < b.len() { (b, a) } else { (a, b) };
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, &ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Edit distance where a substitution costs 2 (an insertion plus a deletion).
pub fn indel_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    indel_distance_chars(&a, &b)
}

fn indel_distance_chars(a: &[char], b: &[char]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, &ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let sub = prev[j] + if ca == cb { 0 } else { 2 };
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Similarity `(|a| + |b| - D2) / (|a| + |b|)` with `D2` the
/// [`indel_distance`]. Two empty strings are identical (1.0).
pub fn levenshtein_ratio(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    ratio_chars(&a, &b)
}

fn ratio_chars(a: &[char], b: &[char]) -> f64 {
    let total = a.len() + b.len();
    if total == 0 {
        return 1.0;
    }
    (total - indel_distance_chars(a, b)) as f64 / total as f64
}

struct Candidate {
    index: usize,
    distance: usize,
    ratio: f64,
}

fn best_candidate(unit: &[char], models: &[Vec<char>], cfg: &MatcherConfig) -> Option<Candidate> {
    let mut best: Option<Candidate> = None;
    for (index, model) in models.iter().enumerate() {
        // the distance is at least the length gap
        if unit.len().abs_diff(model.len()) >= cfg.max_edit_distance {
            continue;
        }
        let distance = edit_distance_chars(unit, model);
        if distance >= cfg.max_edit_distance {
            continue;
        }
        if let Some(b) = &best {
            if distance > b.distance {
                continue;
            }
        }
        let ratio = ratio_chars(unit, model);
        if ratio <= cfg.min_ratio {
            continue;
        }
        let better = match &best {
            None => true,
            Some(b) => distance < b.distance || (distance == b.distance && ratio > b.ratio),
        };
        if better {
            best = Some(Candidate {
                index,
                distance,
                ratio,
            });
        }
    }
    best
}

/// Replaces misspelled device mentions with their catalog spelling.
///
/// Tokens that are not part of an accepted unit are left exactly as they
/// appear in the source text, including the whitespace and punctuation
/// around them.
pub fn correct_tokens(comment: &TokenizedComment, catalog: &DeviceCatalog, cfg: &MatcherConfig) -> CorrectionResult {
    let tokens = &comment.tokens;
    let folded_tokens: Vec<Vec<char>> = tokens.iter().map(|t| normalize_case(&t.text).chars().collect()).collect();
    let models: Vec<Vec<char>> = catalog.folded_models().iter().map(|m| m.chars().collect()).collect();
    let max_n = cfg.max_ngram.unwrap_or(catalog.max_model_tokens()).max(1).min(tokens.len());

    let mut taken = vec![false; tokens.len()];
    // (first token, last token exclusive, candidate)
    let mut accepted: Vec<(usize, usize, Candidate)> = Vec::new();

    let unit_chars = |i: usize, n: usize| -> Vec<char> {
        let mut unit = Vec::new();
        for (k, t) in folded_tokens[i..i + n].iter().enumerate() {
            if k > 0 {
                unit.push(' ');
            }
            unit.extend_from_slice(t);
        }
        unit
    };

    for exact_only in [true, false] {
        for n in (1..=max_n).rev() {
            for i in 0..=tokens.len() - n {
                if taken[i..i + n].iter().any(|&t| t) {
                    continue;
                }
                let unit = unit_chars(i, n);
                let found = if exact_only {
                    models.iter().position(|m| *m == unit).map(|index| Candidate {
                        index,
                        distance: 0,
                        ratio: 1.0,
                    })
                } else {
                    best_candidate(&unit, &models, cfg)
                };
                if let Some(c) = found {
                    taken[i..i + n].iter_mut().for_each(|t| *t = true);
                    accepted.push((i, i + n, c));
                }
            }
        }
    }
    accepted.sort_by_key(|(i, _, _)| *i);

    let chars: Vec<char> = comment.text.chars().collect();
    let mut corrected = String::with_capacity(comment.text.len());
    let mut replacements = Vec::new();
    let mut cursor = 0;
    for (first, last, cand) in accepted {
        let start = tokens[first].start;
        let end = tokens[last - 1].end;
        let original: String = chars[start..end].iter().collect();
        let replacement = &catalog.entries()[cand.index].normalized_model;
        corrected.extend(&chars[cursor..start]);
        corrected.push_str(replacement);
        cursor = end;
        if original != *replacement {
            replacements.push(Replacement {
                start,
                end,
                original,
                replacement: replacement.clone(),
                distance: cand.distance,
                ratio: cand.ratio,
            });
        }
    }
    corrected.extend(&chars[cursor..]);
    CorrectionResult {
        corrected_text: corrected,
        replacements,
    }
}

/// Re-applies `replacements` to `original`; used to check a correction.
pub fn apply_replacements(original: &str, replacements: &[Replacement]) -> String {
    let chars: Vec<char> = original.chars().collect();
    let mut out = String::new();
    let mut cursor = 0;
    for r in replacements {
        out.extend(&chars[cursor..r.start]);
        out.push_str(&r.replacement);
        cursor = r.end;
    }
    out.extend(&chars[cursor..]);
    out
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric()
}

/// Finds catalog models in `corrected` (case-insensitive, on word boundaries).
/// Overlapping hits are resolved longest first, then leftmost.
pub fn extract_entities(corrected: &CorrectionResult, comment_id: u64, catalog: &DeviceCatalog) -> Vec<EntityMatch> {
    find_devices(&corrected.corrected_text, comment_id, catalog)
}

pub fn find_devices(text: &str, comment_id: u64, catalog: &DeviceCatalog) -> Vec<EntityMatch> {
    let chars: Vec<char> = text.chars().collect();
    let mut hits: Vec<(usize, usize, usize)> = Vec::new();
    for (index, entry) in catalog.entries().iter().enumerate() {
        let model: Vec<char> = entry.normalized_model.chars().collect();
        if model.is_empty() || model.len() > chars.len() {
            continue;
        }
        for start in 0..=chars.len() - model.len() {
            let end = start + model.len();
            if start > 0 && is_word_char(chars[start - 1]) && is_word_char(model[0]) {
                continue;
            }
            if end < chars.len() && is_word_char(chars[end]) && is_word_char(model[model.len() - 1]) {
                continue;
            }
            if chars[start..end].iter().zip(&model).all(|(&a, &b)| chars_eq_folded(a, b)) {
                hits.push((start, end, index));
            }
        }
    }
    hits.sort_by(|a, b| (b.1 - b.0).cmp(&(a.1 - a.0)).then(a.0.cmp(&b.0)).then(a.2.cmp(&b.2)));

    let mut used = vec![false; chars.len()];
    let mut out = Vec::new();
    for (start, end, index) in hits {
        if used[start..end].iter().any(|&u| u) {
            continue;
        }
        used[start..end].iter_mut().for_each(|u| *u = true);
        out.push(EntityMatch {
            comment_id,
            start,
            end,
            device: catalog.entries()[index].normalized_model.clone(),
        });
    }
    out.sort_by_key(|m| m.start);
    out
}

/// Corrects and extracts in one step.
pub fn match_comment(
    comment_id: u64,
    text: &str,
    catalog: &DeviceCatalog,
    cfg: &MatcherConfig,
) -> (CorrectionResult, Vec<EntityMatch>) {
    let tokenized = TokenizedComment::new(comment_id, text);
    let corrected = correct_tokens(&tokenized, catalog, cfg);
    let entities = extract_entities(&corrected, comment_id, catalog);
    (corrected, entities)
}
