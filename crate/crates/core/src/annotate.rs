//! Annotated datasets: automatic device spans, sentiment labels from a sidecar
//! file, seeded train/test splitting and the two NER training export formats.

use std::collections::HashMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::catalog::DeviceCatalog;
use crate::error::{Error, Result};
use crate::ingest::CleanComment;
use crate::io::{column_index, csv_err, csv_reader, read_to_string, write_atomic};
use crate::matcher::{match_comment, MatcherConfig};

pub const DEVICE_LABEL: &str = "DEVICE";

/// Exact header of the line/offset annotation CSV.
pub const LINE_OFFSET_HEADER: &str = "File,Line,Begin Offset,End Offset,Type";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sentiment {
    Positive,
    Negative,
}

impl Sentiment {
    pub fn from_label(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pos" | "positive" | "1" => Some(Sentiment::Positive),
            "neg" | "negative" | "0" => Some(Sentiment::Negative),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Sentiment::Positive => "pos",
            Sentiment::Negative => "neg",
        }
    }
}

/// Character span `[start, end)` serialized as `[start, end, label]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "(usize, usize, String)", into = "(usize, usize, String)")]
pub struct EntitySpan {
    pub start: usize,
    pub end: usize,
    pub label: String,
}

impl EntitySpan {
    pub fn device(start: usize, end: usize) -> Self {
        Self {
            start,
            end,
            label: DEVICE_LABEL.to_string(),
        }
    }
}

impl From<(usize, usize, String)> for EntitySpan {
    fn from((start, end, label): (usize, usize, String)) -> Self {
        Self { start, end, label }
    }
}

impl From<EntitySpan> for (usize, usize, String) {
    fn from(s: EntitySpan) -> Self {
        (s.start, s.end, s.label)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledComment {
    pub comment: CleanComment,
    pub sentiment: Option<Sentiment>,
    pub entities: Vec<EntitySpan>,
}

/// One element of the offset JSON export.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OffsetRecord {
    pub text: String,
    pub entities: Vec<EntitySpan>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitConfig {
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            train_fraction: 0.6,
            seed: 42,
        }
    }
}

impl SplitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config("train_fraction must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Corrects device spellings and tags device spans. Comments without any
/// device are dropped; the stored text is the corrected text.
pub fn auto_annotate(comments: &[CleanComment], catalog: &DeviceCatalog, cfg: &MatcherConfig) -> Vec<LabeledComment> {
    use rayon::prelude::*;

    comments
        .par_iter()
        .filter_map(|c| {
            let (corrected, entities) = match_comment(c.id, &c.text, catalog, cfg);
            if entities.is_empty() {
                return None;
            }
            Some(LabeledComment {
                comment: CleanComment {
                    text: corrected.corrected_text,
                    ..c.clone()
                },
                sentiment: None,
                entities: entities.iter().map(|m| EntitySpan::device(m.start, m.end)).collect(),
            })
        })
        .collect()
}

/// Reads an `id,sentiment` sidecar (`pos`/`neg`).
pub fn read_labels(path: &Path) -> Result<HashMap<u64, Sentiment>> {
    let mut reader = csv_reader(path)?;
    let headers = reader.headers().map_err(csv_err(path))?.clone();
    let id_idx = column_index(&headers, "id", path)?;
    let label_idx = column_index(&headers, "sentiment", path)?;
    let mut labels = HashMap::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err(path))?;
        let bad = || Error::Data(format!("bad label row {} in {}", line + 2, path.display()));
        let id: u64 = record.get(id_idx).and_then(|s| s.trim().parse().ok()).ok_or_else(bad)?;
        let sentiment = record.get(label_idx).and_then(Sentiment::from_label).ok_or_else(bad)?;
        labels.insert(id, sentiment);
    }
    Ok(labels)
}

/// Attaches labels by comment id; returns how many comments had no label.
pub fn apply_labels(data: &mut [LabeledComment], labels: &HashMap<u64, Sentiment>) -> usize {
    let mut missing = 0;
    for item in data.iter_mut() {
        item.sentiment = labels.get(&item.comment.id).copied();
        if item.sentiment.is_none() {
            missing += 1;
        }
    }
    missing
}

pub fn train_size(n: usize, fraction: f64) -> usize {
    ((n as f64) * fraction).floor() as usize
}

/// Seeded shuffle, then the first `floor(fraction * n)` items go to train.
pub fn split<T: Clone>(data: &[T], cfg: &SplitConfig) -> Result<(Vec<T>, Vec<T>)> {
    cfg.validate()?;
    if data.len() < 2 {
        return Err(Error::TooFewItems {
            needed: 2,
            got: data.len(),
        });
    }
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed));
    let cut = train_size(data.len(), cfg.train_fraction);
    let pick = |idx: &[usize]| idx.iter().map(|&i| data[i].clone()).collect::<Vec<_>>();
    Ok((pick(&order[..cut]), pick(&order[cut..])))
}

pub fn to_offset_records(data: &[LabeledComment]) -> Vec<OffsetRecord> {
    data.iter()
        .map(|d| OffsetRecord {
            text: d.comment.text.clone(),
            entities: d.entities.clone(),
        })
        .collect()
}

pub fn export_offset_json(data: &[LabeledComment], path: &Path) -> Result<()> {
    let records = to_offset_records(data);
    write_atomic(path, |out| {
        serde_json::to_writer(&mut *out, &records)?;
        out.write_all(b"\n")
    })
}

pub fn parse_offset_json(path: &Path) -> Result<Vec<OffsetRecord>> {
    let text = read_to_string(path)?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

/// Line breaks become spaces one-for-one so character offsets stay valid.
pub fn single_line(text: &str) -> String {
    text.chars().map(|c| if c == '\n' || c == '\r' { ' ' } else { c }).collect()
}

/// Writes one comment per line to `text_path` and a
/// `File,Line,Begin Offset,End Offset,Type` CSV with 0-based lines and
/// end-exclusive character offsets to `csv_path`.
pub fn export_lines_and_offsets(data: &[LabeledComment], text_path: &Path, csv_path: &Path) -> Result<()> {
    let file_name = text_path
        .file_name()
        .map(|f| f.to_string_lossy().into_owned())
        .unwrap_or_default();
    write_atomic(text_path, |out| {
        for d in data {
            writeln!(out, "{}", single_line(&d.comment.text))?;
        }
        Ok(())
    })?;
    write_atomic(csv_path, |out| {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(LINE_OFFSET_HEADER.split(','))?;
        for (line, d) in data.iter().enumerate() {
            for span in &d.entities {
                w.write_record([
                    file_name.clone(),
                    line.to_string(),
                    span.start.to_string(),
                    span.end.to_string(),
                    span.label.clone(),
                ])?;
            }
        }
        w.flush()
    })
}

/// Labeled split file consumed by the training stage: `id,name,text,sentiment`.
pub fn write_labeled_csv(data: &[LabeledComment], path: &Path) -> Result<()> {
    write_atomic(path, |out| {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["id", "name", "text", "sentiment"])?;
        for d in data {
            let label = d.sentiment.map(Sentiment::label).unwrap_or("");
            w.write_record([d.comment.id.to_string().as_str(), &d.comment.commenter_name, &d.comment.text, label])?;
        }
        w.flush()
    })
}

/// Reads `(text, sentiment)` pairs back from [`write_labeled_csv`] output.
pub fn read_labeled_csv(path: &Path) -> Result<Vec<(String, Sentiment)>> {
    let mut reader = csv_reader(path)?;
    let headers = reader.headers().map_err(csv_err(path))?.clone();
    let text_idx = column_index(&headers, "text", path)?;
    let label_idx = column_index(&headers, "sentiment", path)?;
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err(path))?;
        let Some(label) = record.get(label_idx).and_then(Sentiment::from_label) else {
            return Err(Error::Data(format!("unlabeled row in {}", path.display())));
        };
        out.push((record.get(text_idx).unwrap_or_default().to_string(), label));
    }
    Ok(out)
}
