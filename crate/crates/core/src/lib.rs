//! Smartphone demand analysis over romanized Bangla ("Banglish") product
//! comments.
//!
//! The pipeline cleans scraped comment exports ([`ingest`]), builds a device
//! gazetteer ([`catalog`]), corrects and tags misspelled device mentions
//! ([`matcher`]), produces NER training exports ([`annotate`]), classifies
//! sentiment ([`sentiment`]), infers commenter gender ([`gender`]) and ranks
//! devices by positive demand ([`demand`]). [`cli`] wires the stages to files.

pub mod annotate;
pub mod catalog;
pub mod cli;
pub mod demand;
pub mod error;
pub mod gender;
pub mod ingest;
pub mod io;
pub mod matcher;
pub mod sentiment;
pub mod textprep;

pub use annotate::{EntitySpan, LabeledComment, Sentiment, SplitConfig};
pub use catalog::{CatalogEntry, DeviceCatalog};
pub use demand::{AnalyzedComment, DemandRecord};
pub use error::{Error, ErrorKind, Result};
pub use gender::{Gender, NameGenderLexicon, TransliterationClient};
pub use ingest::{CleanComment, RawComment};
pub use matcher::{CorrectionResult, EntityMatch, MatcherConfig};
pub use sentiment::{SentimentConfig, SentimentModel};
