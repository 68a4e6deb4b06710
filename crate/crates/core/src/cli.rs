//! Pipeline configuration and the six file-to-file stages behind the
//! command line.
//!
//! Every stage reads its inputs from the configured paths or from earlier
//! stage outputs in the output directory, and writes its own outputs
//! atomically into the output directory.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::annotate::{self, SplitConfig};
use crate::catalog::{self, DeviceCatalog};
use crate::demand::{self, Analyzer, ReportFormat};
use crate::error::{Error, Result};
use crate::gender::{HttpClientConfig, HttpTransliterator, NameGenderLexicon, OfflineTransliterator, TransliterationClient};
use crate::ingest::{self, ColumnNames, NullProfile};
use crate::io::{read_to_string, write_atomic};
use crate::matcher::{match_comment, MatcherConfig};
use crate::sentiment::{self, SentimentConfig, SentimentModel};

pub const COMMENTS_FILE: &str = "comments.csv";
pub const CATALOG_FILE: &str = "catalog.csv";
pub const CORRECTIONS_FILE: &str = "corrections.csv";
pub const ENTITIES_FILE: &str = "entities.csv";
pub const ANNOTATED_JSON: &str = "annotated.json";
pub const ANNOTATED_TEXT: &str = "annotated.txt";
pub const ANNOTATED_OFFSETS: &str = "annotated_offsets.csv";
pub const MODEL_FILE: &str = "model.json";
pub const LOSS_LOG: &str = "loss_log.csv";
pub const REPORT_CSV: &str = "demand.csv";
pub const REPORT_JSON: &str = "demand.json";
pub const REPORT_SVG: &str = "demand.svg";

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsConfig {
    pub comments: Vec<PathBuf>,
    pub catalog: PathBuf,
    #[serde(default)]
    pub labels: Option<PathBuf>,
    /// `None` uses the bundled lexicon.
    #[serde(default)]
    pub lexicon: Option<PathBuf>,
    /// `None` uses the bundled offline transliteration table.
    #[serde(default)]
    pub transliteration: Option<PathBuf>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportConfig {
    pub top_n: usize,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self { top_n: 15 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub paths: PathsConfig,
    /// When set, replaces the split and sentiment seeds.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub columns: ColumnNames,
    #[serde(default)]
    pub matcher: MatcherConfig,
    #[serde(default)]
    pub sentiment: SentimentConfig,
    #[serde(default)]
    pub split: SplitConfig,
    #[serde(default)]
    pub transliteration_service: HttpClientConfig,
    #[serde(default)]
    pub report: ReportConfig,
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
}

fn must_exist(path: &Path) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Error::Read {
            path: path.to_path_buf(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "file not found"),
        })
    }
}

impl PipelineConfig {
    /// Parses the JSON config; relative paths are taken relative to the
    /// config file's directory.
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self> {
        let text = read_to_string(path).map_err(|e| Error::Config(e.to_string()))?;
        let mut cfg: PipelineConfig =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve(base, overrides);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve(&mut self, base: &Path, overrides: &Overrides) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        let paths = &mut self.paths;
        paths.comments.iter_mut().for_each(fix);
        fix(&mut paths.catalog);
        for p in [&mut paths.labels, &mut paths.lexicon, &mut paths.transliteration].into_iter().flatten() {
            fix(p);
        }
        match &overrides.output_dir {
            Some(dir) => paths.output_dir = dir.clone(),
            None => fix(&mut paths.output_dir),
        }
        if let Some(seed) = overrides.seed.or(self.seed) {
            self.seed = Some(seed);
            self.split.seed = seed;
            self.sentiment.seed = seed;
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.paths.comments.is_empty() {
            return Err(Error::Config("paths.comments must list at least one file".into()));
        }
        self.matcher.validate()?;
        self.sentiment.validate()?;
        self.split.validate()?;
        if self.report.top_n == 0 {
            return Err(Error::Config("report.top_n must be at least 1".into()));
        }
        for p in self.paths.comments.iter().chain([&self.paths.catalog]) {
            must_exist(p)?;
        }
        for p in [&self.paths.labels, &self.paths.lexicon, &self.paths.transliteration].into_iter().flatten() {
            must_exist(p)?;
        }
        Ok(())
    }

    pub fn output(&self, name: &str) -> PathBuf {
        self.paths.output_dir.join(name)
    }

    fn stage_input(&self, name: &str) -> Result<PathBuf> {
        let path = self.output(name);
        must_exist(&path)?;
        Ok(path)
    }

    fn lexicon(&self) -> Result<NameGenderLexicon> {
        match &self.paths.lexicon {
            Some(p) => NameGenderLexicon::load(p),
            None => Ok(NameGenderLexicon::bundled()),
        }
    }

    fn transliterator(&self) -> Result<Box<dyn TransliterationClient>> {
        if self.transliteration_service.enabled {
            return Ok(Box::new(HttpTransliterator::from_config(&self.transliteration_service)));
        }
        Ok(Box::new(match &self.paths.transliteration {
            Some(p) => OfflineTransliterator::load(p)?,
            None => OfflineTransliterator::bundled(),
        }))
    }
}

pub fn cmd_ingest(cfg: &PipelineConfig) -> Result<NullProfile> {
    let rows = ingest::merge_csv(&cfg.paths.comments, &cfg.columns)?;
    let profile = ingest::profile(&rows);
    let cleaned = ingest::clean(&rows);
    ingest::write_clean_csv(&cleaned, &cfg.output(COMMENTS_FILE))?;
    Ok(profile)
}

pub fn cmd_catalog(cfg: &PipelineConfig) -> Result<DeviceCatalog> {
    let catalog = catalog::load_catalog(&cfg.paths.catalog)?;
    catalog::write_catalog_csv(&catalog, &cfg.output(CATALOG_FILE))?;
    Ok(catalog)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatchSummary {
    pub comments: usize,
    pub replacements: usize,
    pub entities: usize,
}

pub fn cmd_match(cfg: &PipelineConfig) -> Result<MatchSummary> {
    use rayon::prelude::*;

    let comments = ingest::read_clean_csv(&cfg.stage_input(COMMENTS_FILE)?)?;
    let catalog = catalog::read_catalog_csv(&cfg.stage_input(CATALOG_FILE)?)?;
    let results: Vec<_> = comments
        .par_iter()
        .map(|c| match_comment(c.id, &c.text, &catalog, &cfg.matcher))
        .collect();

    let mut summary = MatchSummary {
        comments: comments.len(),
        replacements: 0,
        entities: 0,
    };
    write_atomic(&cfg.output(CORRECTIONS_FILE), |out| {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["comment_id", "start", "end", "original", "replacement", "distance", "ratio"])?;
        for (c, (corrected, _)) in comments.iter().zip(&results) {
            for r in &corrected.replacements {
                w.write_record([
                    c.id.to_string(),
                    r.start.to_string(),
                    r.end.to_string(),
                    r.original.clone(),
                    r.replacement.clone(),
                    r.distance.to_string(),
                    r.ratio.to_string(),
                ])?;
                summary.replacements += 1;
            }
        }
        w.flush()
    })?;
    write_atomic(&cfg.output(ENTITIES_FILE), |out| {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["comment_id", "start", "end", "device"])?;
        for (_, entities) in &results {
            for e in entities {
                w.write_record([e.comment_id.to_string(), e.start.to_string(), e.end.to_string(), e.device.clone()])?;
                summary.entities += 1;
            }
        }
        w.flush()
    })?;
    Ok(summary)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnnotateSummary {
    pub annotated: usize,
    pub unlabeled: usize,
    pub train: usize,
    pub test: usize,
}

pub fn cmd_annotate(cfg: &PipelineConfig) -> Result<AnnotateSummary> {
    let labels_path = cfg
        .paths
        .labels
        .as_ref()
        .ok_or_else(|| Error::Config("paths.labels is required for annotate".into()))?;
    let comments = ingest::read_clean_csv(&cfg.stage_input(COMMENTS_FILE)?)?;
    let catalog = catalog::read_catalog_csv(&cfg.stage_input(CATALOG_FILE)?)?;
    let labels = annotate::read_labels(labels_path)?;

    let mut data = annotate::auto_annotate(&comments, &catalog, &cfg.matcher);
    let unlabeled = annotate::apply_labels(&mut data, &labels);
    annotate::export_offset_json(&data, &cfg.output(ANNOTATED_JSON))?;
    annotate::export_lines_and_offsets(&data, &cfg.output(ANNOTATED_TEXT), &cfg.output(ANNOTATED_OFFSETS))?;

    let labeled: Vec<_> = data.into_iter().filter(|d| d.sentiment.is_some()).collect();
    let (train, test) = annotate::split(&labeled, &cfg.split)?;
    for (name, part) in [("train", &train), ("test", &test)] {
        annotate::export_offset_json(part, &cfg.output(&format!("{name}.json")))?;
        annotate::export_lines_and_offsets(
            part,
            &cfg.output(&format!("{name}.txt")),
            &cfg.output(&format!("{name}_offsets.csv")),
        )?;
        annotate::write_labeled_csv(part, &cfg.output(&format!("{name}.csv")))?;
    }
    Ok(AnnotateSummary {
        annotated: labeled.len() + unlabeled,
        unlabeled,
        train: train.len(),
        test: test.len(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub epoch_losses: Vec<f64>,
    pub threshold: f64,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
}

pub fn cmd_train(cfg: &PipelineConfig) -> Result<TrainSummary> {
    let train = annotate::read_labeled_csv(&cfg.stage_input("train.csv")?)?;
    let test = annotate::read_labeled_csv(&cfg.stage_input("test.csv")?)?;
    let run = sentiment::train(&train, &cfg.sentiment)?;
    let mut model = run.model;
    let threshold = sentiment::calibrate_threshold(&mut model, &test);
    model.save(&cfg.output(MODEL_FILE))?;
    write_atomic(&cfg.output(LOSS_LOG), |out| {
        writeln!(out, "epoch,loss")?;
        for (i, loss) in run.epoch_losses.iter().enumerate() {
            writeln!(out, "{},{loss}", i + 1)?;
        }
        Ok(())
    })?;
    Ok(TrainSummary {
        train_accuracy: sentiment::accuracy(&model, &train),
        test_accuracy: sentiment::accuracy(&model, &test),
        epoch_losses: run.epoch_losses,
        threshold,
    })
}

pub fn cmd_analyze(cfg: &PipelineConfig) -> Result<Vec<demand::DemandRecord>> {
    let model_path = cfg.stage_input(MODEL_FILE)?;
    let comments = ingest::read_clean_csv(&cfg.stage_input(COMMENTS_FILE)?)?;
    let catalog = catalog::read_catalog_csv(&cfg.stage_input(CATALOG_FILE)?)?;
    let model = SentimentModel::load(&model_path)?;
    let lexicon = cfg.lexicon()?;
    let client = cfg.transliterator()?;

    let analyzer = Analyzer {
        catalog: &catalog,
        matcher: &cfg.matcher,
        model: &model,
        lexicon: &lexicon,
        client: client.as_ref(),
    };
    let analyzed = demand::analyze(&comments, &analyzer);
    let records = demand::aggregate(&analyzed);
    demand::emit_report(&records, &cfg.output(REPORT_CSV), ReportFormat::Csv)?;
    demand::emit_report(&records, &cfg.output(REPORT_JSON), ReportFormat::Json)?;
    demand::emit_chart_svg(&records, &cfg.output(REPORT_SVG), cfg.report.top_n)?;
    Ok(records)
}
