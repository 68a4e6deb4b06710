//! The device gazetteer: phone names with the manufacturer prefix removed
//! where the remaining model name is still distinctive.

use std::collections::HashSet;
use std::path::Path;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{column_index, csv_err, csv_reader, write_atomic};
use crate::textprep::normalize_case;

/// A stripped model name shorter than this keeps its brand prefix.
pub const MIN_MODEL_CHARS: usize = 7;

static PARENTHESIZED: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\([^()]*\)").unwrap());
static YEAR: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?:^|\s)(?:199\d|20[0-2]\d|2030)(?:\s|$)").unwrap());
static MARKS: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"[™®©]").unwrap());

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub brand: String,
    pub full_model: String,
    pub normalized_model: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeviceCatalog {
    entries: Vec<CatalogEntry>,
    folded: Vec<String>,
    max_model_tokens: usize,
}

fn collapse_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Removes parenthesized notes, standalone release years (1990-2030) and
/// trademark signs, then collapses whitespace.
pub fn strip_markers(model: &str) -> String {
    let mut current = collapse_whitespace(model);
    loop {
        let mut next = PARENTHESIZED.replace_all(&current, " ").into_owned();
        next = MARKS.replace_all(&next, "").into_owned();
        // years are matched with their surrounding space, so adjacent years need another pass
        next = YEAR.replace_all(&next, " ").into_owned();
        next = collapse_whitespace(&next);
        if next == current {
            return next;
        }
        current = next;
    }
}

fn strip_brand<'a>(brand: &str, model: &'a str) -> Option<&'a str> {
    let brand = brand.trim();
    if brand.is_empty() {
        return None;
    }
    let mut chars = model.char_indices();
    for b in brand.chars() {
        let (_, m) = chars.next()?;
        if !crate::textprep::chars_eq_folded(b, m) {
            return None;
        }
    }
    match chars.next() {
        Some((i, ' ')) => Some(model[i + 1..].trim()),
        _ => None,
    }
}

pub fn normalize_model(brand: &str, full_model: &str) -> Result<CatalogEntry> {
    let mut normalized = strip_markers(full_model);
    if normalized.is_empty() {
        return Err(Error::EmptyModel);
    }
    while let Some(rest) = strip_brand(brand, &normalized) {
        if rest.chars().count() < MIN_MODEL_CHARS {
            break;
        }
        normalized = rest.to_string();
    }
    Ok(CatalogEntry {
        brand: brand.trim().to_string(),
        full_model: full_model.to_string(),
        normalized_model: normalized,
    })
}

impl DeviceCatalog {
    /// Builds a catalog, keeping the first entry of each case-folded model name.
    pub fn from_entries(entries: impl IntoIterator<Item = CatalogEntry>) -> Self {
        let mut seen = HashSet::new();
        let mut kept = Vec::new();
        let mut folded = Vec::new();
        for entry in entries {
            let key = normalize_case(&entry.normalized_model);
            if entry.normalized_model.trim().is_empty() || !seen.insert(key.clone()) {
                continue;
            }
            folded.push(key);
            kept.push(entry);
        }
        let max_model_tokens = kept
            .iter()
            .map(|e| e.normalized_model.split_whitespace().count())
            .max()
            .unwrap_or(0);
        Self {
            entries: kept,
            folded,
            max_model_tokens,
        }
    }

    /// Convenience constructor from bare model names (brand left empty).
    pub fn from_models<S: AsRef<str>>(models: &[S]) -> Self {
        Self::from_entries(models.iter().map(|m| CatalogEntry {
            brand: String::new(),
            full_model: m.as_ref().to_string(),
            normalized_model: m.as_ref().to_string(),
        }))
    }

    pub fn entries(&self) -> &[CatalogEntry] {
        &self.entries
    }

    /// Case-folded model names, parallel to [`entries`](Self::entries).
    pub fn folded_models(&self) -> &[String] {
        &self.folded
    }

    pub fn max_model_tokens(&self) -> usize {
        self.max_model_tokens
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains_folded(&self, model: &str) -> bool {
        let key = normalize_case(model);
        self.folded.contains(&key)
    }
}

/// Reads a scraped phone list with `brand,model` columns.
pub fn load_catalog(path: &Path) -> Result<DeviceCatalog> {
    let mut reader = csv_reader(path)?;
    let headers = reader.headers().map_err(csv_err(path))?.clone();
    let brand_idx = column_index(&headers, "brand", path)?;
    let model_idx = column_index(&headers, "model", path)?;
    let mut entries = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err(path))?;
        let model = record.get(model_idx).unwrap_or_default();
        if model.trim().is_empty() {
            continue;
        }
        entries.push(normalize_model(record.get(brand_idx).unwrap_or_default(), model)?);
    }
    finish(entries, path)
}

/// Reads a catalog previously written by [`write_catalog_csv`].
pub fn read_catalog_csv(path: &Path) -> Result<DeviceCatalog> {
    let mut reader = csv_reader(path)?;
    let headers = reader.headers().map_err(csv_err(path))?.clone();
    let idx = [
        column_index(&headers, "brand", path)?,
        column_index(&headers, "full_model", path)?,
        column_index(&headers, "normalized_model", path)?,
    ];
    let mut entries = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err(path))?;
        let field = |i: usize| record.get(idx[i]).unwrap_or_default().to_string();
        entries.push(CatalogEntry {
            brand: field(0),
            full_model: field(1),
            normalized_model: field(2),
        });
    }
    finish(entries, path)
}

fn finish(entries: Vec<CatalogEntry>, path: &Path) -> Result<DeviceCatalog> {
    let catalog = DeviceCatalog::from_entries(entries);
    if catalog.is_empty() {
        return Err(Error::EmptyCatalog {
            path: path.to_path_buf(),
        });
    }
    Ok(catalog)
}

pub fn write_catalog_csv(catalog: &DeviceCatalog, path: &Path) -> Result<()> {
    write_atomic(path, |out| {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["brand", "full_model", "normalized_model"])?;
        for e in catalog.entries() {
            w.write_record([&e.brand, &e.full_model, &e.normalized_model])?;
        }
        w.flush()
    })
}
