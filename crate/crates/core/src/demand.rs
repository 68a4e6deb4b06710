//! Joins device mentions, sentiment and commenter gender into the ranked
//! demand report, and renders it as CSV, JSON and a stacked-bar SVG.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::annotate::Sentiment;
use crate::catalog::DeviceCatalog;
use crate::error::{Error, Result};
use crate::gender::{predict_gender, Gender, NameGenderLexicon, TransliterationClient};
use crate::ingest::CleanComment;
use crate::io::{csv_err, csv_reader, read_to_string, write_atomic};
use crate::matcher::{match_comment, MatcherConfig};
use crate::sentiment::{classify, SentimentModel};

pub const REPORT_HEADER: [&str; 8] = [
    "device",
    "pos_male",
    "pos_female",
    "pos_unknown",
    "neg_male",
    "neg_female",
    "neg_unknown",
    "demand_score",
];

pub const MALE_COLOR: &str = "#1f77b4";
pub const FEMALE_COLOR: &str = "#ff7f0e";
pub const UNKNOWN_COLOR: &str = "#9e9e9e";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzedComment {
    pub comment_id: u64,
    pub devices: Vec<String>,
    pub sentiment: Sentiment,
    pub probability: f64,
    pub gender: Gender,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DemandRecord {
    pub device: String,
    pub pos_male: u64,
    pub pos_female: u64,
    pub pos_unknown: u64,
    pub neg_male: u64,
    pub neg_female: u64,
    pub neg_unknown: u64,
    pub demand_score: u64,
}

impl DemandRecord {
    pub fn mentions(&self) -> u64 {
        self.pos_male + self.pos_female + self.pos_unknown + self.neg_male + self.neg_female + self.neg_unknown
    }

    fn count_mut(&mut self, sentiment: Sentiment, gender: Gender) -> &mut u64 {
        match (sentiment, gender) {
            (Sentiment::Positive, Gender::Male) => &mut self.pos_male,
            (Sentiment::Positive, Gender::Female) => &mut self.pos_female,
            (Sentiment::Positive, Gender::Unknown) => &mut self.pos_unknown,
            (Sentiment::Negative, Gender::Male) => &mut self.neg_male,
            (Sentiment::Negative, Gender::Female) => &mut self.neg_female,
            (Sentiment::Negative, Gender::Unknown) => &mut self.neg_unknown,
        }
    }
}

/// Everything [`analyze`] needs besides the comments.
pub struct Analyzer<'a> {
    pub catalog: &'a DeviceCatalog,
    pub matcher: &'a MatcherConfig,
    pub model: &'a SentimentModel,
    pub lexicon: &'a NameGenderLexicon,
    pub client: &'a dyn TransliterationClient,
}

impl Analyzer<'_> {
    pub fn analyze_one(&self, comment: &CleanComment) -> Option<AnalyzedComment> {
        let (corrected, entities) = match_comment(comment.id, &comment.text, self.catalog, self.matcher);
        let mut devices: Vec<String> = Vec::new();
        for e in entities {
            if !devices.contains(&e.device) {
                devices.push(e.device);
            }
        }
        if devices.is_empty() {
            return None;
        }
        let (sentiment, probability) = classify(self.model, &corrected.corrected_text);
        Some(AnalyzedComment {
            comment_id: comment.id,
            devices,
            sentiment,
            probability,
            gender: predict_gender(&comment.commenter_name, self.lexicon, self.client),
        })
    }
}

/// Runs matching, sentiment and gender per comment, keeping only comments
/// that mention at least one device. Output follows input order.
pub fn analyze(comments: &[CleanComment], analyzer: &Analyzer<'_>) -> Vec<AnalyzedComment> {
    use rayon::prelude::*;
    comments.par_iter().filter_map(|c| analyzer.analyze_one(c)).collect()
}

/// Sorts by demand score, then total mentions (both descending), then name.
pub fn rank(records: &mut [DemandRecord]) {
    records.sort_by(|a, b| {
        b.demand_score
            .cmp(&a.demand_score)
            .then_with(|| b.mentions().cmp(&a.mentions()))
            .then_with(|| a.device.cmp(&b.device))
    });
}

/// Tallies each device mention under the comment's sentiment and gender.
pub fn aggregate(analyzed: &[AnalyzedComment]) -> Vec<DemandRecord> {
    let mut by_device: BTreeMap<&str, DemandRecord> = BTreeMap::new();
    for comment in analyzed {
        for device in &comment.devices {
            let record = by_device.entry(device).or_insert_with(|| DemandRecord {
                device: device.clone(),
                ..Default::default()
            });
            *record.count_mut(comment.sentiment, comment.gender) += 1;
        }
    }
    let mut records: Vec<DemandRecord> = by_device
        .into_values()
        .map(|mut r| {
            r.demand_score = r.pos_male + r.pos_female + r.pos_unknown;
            r
        })
        .collect();
    rank(&mut records);
    records
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

pub fn emit_report(records: &[DemandRecord], path: &Path, format: ReportFormat) -> Result<()> {
    write_atomic(path, |out| match format {
        ReportFormat::Csv => {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
            w.write_record(REPORT_HEADER)?;
            for r in records {
                w.serialize(r)?;
            }
            w.flush()
        }
        ReportFormat::Json => {
            serde_json::to_writer_pretty(&mut *out, records)?;
            out.write_all(b"\n")
        }
    })
}

pub fn read_report(path: &Path, format: ReportFormat) -> Result<Vec<DemandRecord>> {
    match format {
        ReportFormat::Csv => {
            let mut reader = csv_reader(path)?;
            reader.deserialize().map(|r| r.map_err(csv_err(path))).collect()
        }
        ReportFormat::Json => serde_json::from_str(&read_to_string(path)?).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        }),
    }
}

fn escape_xml(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

const CHART_WIDTH: f64 = 900.0;
const LABEL_WIDTH: f64 = 190.0;
const BAR_AREA: f64 = 620.0;
const BAR_HEIGHT: f64 = 22.0;
const ROW_GAP: f64 = 10.0;
const TOP: f64 = 60.0;

/// Horizontal stacked bars of positive mentions for the `top_n` highest
/// ranked devices. Bar length is proportional to the demand score (counts,
/// not shares); segments are male, female and unknown in that order.
pub fn render_chart_svg(records: &[DemandRecord], top_n: usize) -> String {
    let shown: Vec<&DemandRecord> = records.iter().take(top_n.max(1)).collect();
    let rows = shown.len().max(1) as f64;
    let height = TOP + rows * (BAR_HEIGHT + ROW_GAP) + 40.0;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{CHART_WIDTH}" height="{height}" viewBox="0 0 {CHART_WIDTH} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"  <rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"  <text x="{}" y="24" font-size="16" text-anchor="middle">Positive demand by gender</text>"#,
        CHART_WIDTH / 2.0
    );
    let legend = [("male", MALE_COLOR), ("female", FEMALE_COLOR), ("unknown", UNKNOWN_COLOR)];
    for (i, (name, color)) in legend.iter().enumerate() {
        let x = LABEL_WIDTH + i as f64 * 110.0;
        let _ = writeln!(svg, r#"  <rect x="{x}" y="36" width="12" height="12" fill="{color}"/>"#);
        let _ = writeln!(svg, r#"  <text x="{}" y="46">{name}</text>"#, x + 16.0);
    }

    let max_score = shown.iter().map(|r| r.demand_score).max().unwrap_or(0);
    if shown.is_empty() || max_score == 0 {
        let _ = writeln!(
            svg,
            r#"  <text x="{}" y="{}" text-anchor="middle">no data</text>"#,
            CHART_WIDTH / 2.0,
            TOP + BAR_HEIGHT
        );
        svg.push_str("</svg>\n");
        return svg;
    }

    let unit = BAR_AREA / max_score as f64;
    for (i, r) in shown.iter().enumerate() {
        let y = TOP + i as f64 * (BAR_HEIGHT + ROW_GAP);
        let bar_width = r.demand_score as f64 * unit;
        let _ = writeln!(
            svg,
            r#"  <g class="bar" data-device="{}" data-score="{}" data-width="{bar_width:.3}">"#,
            escape_xml(&r.device),
            r.demand_score
        );
        let _ = writeln!(
            svg,
            r#"    <text x="{}" y="{}" text-anchor="end">{}</text>"#,
            LABEL_WIDTH - 8.0,
            y + BAR_HEIGHT * 0.7,
            escape_xml(&r.device)
        );
        let mut x = LABEL_WIDTH;
        for (count, class, color) in [
            (r.pos_male, "male", MALE_COLOR),
            (r.pos_female, "female", FEMALE_COLOR),
            (r.pos_unknown, "unknown", UNKNOWN_COLOR),
        ] {
            let w = count as f64 * unit;
            if count > 0 {
                let _ = writeln!(
                    svg,
                    r#"    <rect class="{class}" x="{x:.3}" y="{y}" width="{w:.3}" height="{BAR_HEIGHT}" fill="{color}"><title>{class}: {count}</title></rect>"#
                );
            }
            x += w;
        }
        let _ = writeln!(
            svg,
            r#"    <text x="{:.3}" y="{}">{}</text>"#,
            LABEL_WIDTH + bar_width + 6.0,
            y + BAR_HEIGHT * 0.7,
            r.demand_score
        );
        svg.push_str("  </g>\n");
    }
    svg.push_str("</svg>\n");
    svg
}

pub fn emit_chart_svg(records: &[DemandRecord], path: &Path, top_n: usize) -> Result<()> {
    if top_n == 0 {
        return Err(Error::Config("top_n must be at least 1".into()));
    }
    let svg = render_chart_svg(records, top_n);
    write_atomic(path, |out| out.write_all(svg.as_bytes()))
}
