//! Loading, merging, profiling and cleaning of scraped comment exports.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{column_index, csv_err, csv_reader, write_atomic};

/// Names of the two columns kept from a scraper export.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColumnNames {
    pub name: String,
    pub text: String,
}

impl Default for ColumnNames {
    fn default() -> Self {
        Self {
            name: "name".into(),
            text: "comment".into(),
        }
    }
}

/// One scraped row, exactly as it appeared in its source file. An empty cell
/// (or a row too short to reach the column) is `None`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawComment {
    pub source_file: PathBuf,
    pub row_index: usize,
    pub commenter_name: Option<String>,
    pub text: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanComment {
    pub id: u64,
    pub commenter_name: String,
    pub text: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NullProfile {
    pub total_rows: usize,
    pub missing_name: usize,
    pub missing_text: usize,
    pub duplicate_rows: usize,
}

impl std::fmt::Display for NullProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "rows:            {}", self.total_rows)?;
        writeln!(f, "missing name:    {}", self.missing_name)?;
        writeln!(f, "missing text:    {}", self.missing_text)?;
        write!(f, "duplicate rows:  {}", self.duplicate_rows)
    }
}

fn is_null(cell: &Option<String>) -> bool {
    cell.as_deref().is_none_or(|s| s.trim().is_empty())
}

fn read_one(path: &Path, columns: &ColumnNames) -> Result<Vec<RawComment>> {
    let mut reader = csv_reader(path)?;
    let headers = reader.headers().map_err(csv_err(path))?.clone();
    let name_idx = column_index(&headers, &columns.name, path)?;
    let text_idx = column_index(&headers, &columns.text, path)?;

    let mut rows = Vec::new();
    for (row_index, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err(path))?;
        let cell = |i: usize| record.get(i).filter(|s| !s.is_empty()).map(str::to_string);
        rows.push(RawComment {
            source_file: path.to_path_buf(),
            row_index,
            commenter_name: cell(name_idx),
            text: cell(text_idx),
        });
    }
    Ok(rows)
}

/// Concatenates the name/comment columns of every file, in path order.
/// Files are parsed in parallel; the merge order is always the path order.
pub fn merge_csv<P: AsRef<Path> + Sync>(paths: &[P], columns: &ColumnNames) -> Result<Vec<RawComment>> {
    use rayon::prelude::*;

    let per_file: Vec<Result<Vec<RawComment>>> = paths
        .par_iter()
        .map(|p| read_one(p.as_ref(), columns))
        .collect();
    let mut merged = Vec::new();
    for rows in per_file {
        merged.extend(rows?);
    }
    Ok(merged)
}

pub fn profile(rows: &[RawComment]) -> NullProfile {
    let mut seen = HashSet::new();
    let mut profile = NullProfile {
        total_rows: rows.len(),
        ..Default::default()
    };
    for row in rows {
        if is_null(&row.commenter_name) {
            profile.missing_name += 1;
        }
        if is_null(&row.text) {
            profile.missing_text += 1;
        }
        if !seen.insert((&row.commenter_name, &row.text)) {
            profile.duplicate_rows += 1;
        }
    }
    profile
}

/// Drops rows with a missing or whitespace-only name or text, keeps the first
/// of each exact `(name, text)` pair and numbers the survivors from 0.
pub fn clean(rows: &[RawComment]) -> Vec<CleanComment> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for row in rows {
        if is_null(&row.commenter_name) || is_null(&row.text) {
            continue;
        }
        let (Some(name), Some(text)) = (&row.commenter_name, &row.text) else {
            continue;
        };
        if seen.insert((name.as_str(), text.as_str())) {
            out.push(CleanComment {
                id: out.len() as u64,
                commenter_name: name.clone(),
                text: text.clone(),
            });
        }
    }
    out
}

/// Writes the canonical `id,name,text` table.
pub fn write_clean_csv(comments: &[CleanComment], path: &Path) -> Result<()> {
    write_atomic(path, |out| {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["id", "name", "text"])?;
        for c in comments {
            w.write_record([c.id.to_string().as_str(), &c.commenter_name, &c.text])?;
        }
        w.flush()
    })
}

pub fn read_clean_csv(path: &Path) -> Result<Vec<CleanComment>> {
    let mut reader = csv_reader(path)?;
    let headers = reader.headers().map_err(csv_err(path))?.clone();
    let id_idx = column_index(&headers, "id", path)?;
    let name_idx = column_index(&headers, "name", path)?;
    let text_idx = column_index(&headers, "text", path)?;
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err(path))?;
        let id = record
            .get(id_idx)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Data(format!("bad comment id in {}", path.display())))?;
        out.push(CleanComment {
            id,
            commenter_name: record.get(name_idx).unwrap_or_default().to_string(),
            text: record.get(text_idx).unwrap_or_default().to_string(),
        });
    }
    Ok(out)
}
