//! Commenter gender from display names.
//!
//! Display names are reduced to a first name (leading honorifics removed),
//! looked up in a romanized lexicon, and on a miss transliterated to Bangla
//! script and looked up again. Anything still unresolved is `Unknown`.

use std::collections::HashMap;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{column_index, csv_err, csv_reader};
use crate::textprep::normalize_case;

/// Leading title tokens removed before the first name is taken.
pub const HONORIFICS: &[&str] = &["md", "mohammad", "phd", "dr", "mrs", "miss", "engr", "mr", "mst"];

const BUNDLED_LEXICON: &str = include_str!("../data/name_gender.csv");
const BUNDLED_TRANSLITERATION: &str = include_str!("../data/transliteration.csv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Gender {
    Male,
    Female,
    Unknown,
}

impl Gender {
    fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "male" | "m" => Some(Gender::Male),
            "female" | "f" => Some(Gender::Female),
            _ => None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TransliterationError {
    #[error("no transliteration for `{0}`")]
    NotFound(String),
    #[error("transliteration service failed: {0}")]
    Service(String),
}

/// Romanized-to-native-script conversion of a single name.
pub trait TransliterationClient: Send + Sync {
    fn transliterate(&self, romanized: &str) -> Result<String, TransliterationError>;
}

/// Returns its input unchanged.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityClient;

impl TransliterationClient for IdentityClient {
    fn transliterate(&self, romanized: &str) -> Result<String, TransliterationError> {
        Ok(romanized.to_string())
    }
}

/// Offline lookup table keyed by case-folded romanized spelling.
#[derive(Debug, Clone, Default)]
pub struct OfflineTransliterator {
    table: HashMap<String, String>,
}

impl OfflineTransliterator {
    pub fn bundled() -> Self {
        Self::parse_csv(BUNDLED_TRANSLITERATION.as_bytes(), Path::new("<bundled transliteration>"))
            .expect("bundled transliteration table is valid")
    }

    pub fn from_pairs<I, K, V>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: Into<String>,
    {
        Self {
            table: pairs.into_iter().map(|(k, v)| (normalize_case(k.as_ref()), v.into())).collect(),
        }
    }

    /// Reads a `romanized,native` CSV.
    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|source| Error::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse_csv(file, path)
    }

    fn parse_csv<R: std::io::Read>(input: R, path: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(input);
        let headers = reader.headers().map_err(csv_err(path))?.clone();
        let from = column_index(&headers, "romanized", path)?;
        let to = column_index(&headers, "native", path)?;
        let mut table = HashMap::new();
        for record in reader.records() {
            let record = record.map_err(csv_err(path))?;
            if let (Some(k), Some(v)) = (record.get(from), record.get(to)) {
                if !k.trim().is_empty() && !v.trim().is_empty() {
                    table.insert(normalize_case(k.trim()), v.trim().to_string());
                }
            }
        }
        Ok(Self { table })
    }
}

impl TransliterationClient for OfflineTransliterator {
    fn transliterate(&self, romanized: &str) -> Result<String, TransliterationError> {
        self.table
            .get(&normalize_case(romanized))
            .cloned()
            .ok_or_else(|| TransliterationError::NotFound(romanized.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HttpClientConfig {
    pub enabled: bool,
    pub endpoint: String,
    pub timeout_ms: u64,
}

impl Default for HttpClientConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            endpoint: "http://127.0.0.1:8080/transliterate".into(),
            timeout_ms: 2000,
        }
    }
}

#[derive(Serialize)]
struct TransliterateRequest<'a> {
    text: &'a str,
}

#[derive(Deserialize)]
struct TransliterateResponse {
    translated: String,
}

/// Remote transliteration: `POST {"text": ...}` answered by `{"translated": ...}`.
pub struct HttpTransliterator {
    agent: ureq::Agent,
    endpoint: String,
}

impl HttpTransliterator {
    pub fn new(endpoint: impl Into<String>, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder().timeout_global(Some(timeout)).build().into();
        Self {
            agent,
            endpoint: endpoint.into(),
        }
    }

    pub fn from_config(cfg: &HttpClientConfig) -> Self {
        Self::new(cfg.endpoint.clone(), Duration::from_millis(cfg.timeout_ms))
    }
}

impl TransliterationClient for HttpTransliterator {
    fn transliterate(&self, romanized: &str) -> Result<String, TransliterationError> {
        let service = |e: ureq::Error| TransliterationError::Service(e.to_string());
        let mut response = self
            .agent
            .post(&self.endpoint)
            .send_json(TransliterateRequest { text: romanized })
            .map_err(service)?;
        let body: TransliterateResponse = response.body_mut().read_json().map_err(service)?;
        Ok(body.translated)
    }
}

/// Case-folded first name to gender. Keys may be romanized or Bangla script.
#[derive(Debug, Clone, Default)]
pub struct NameGenderLexicon {
    names: HashMap<String, Gender>,
}

impl NameGenderLexicon {
    pub fn bundled() -> Self {
        Self::parse_csv(BUNDLED_LEXICON.as_bytes(), Path::new("<bundled lexicon>"))
            .expect("bundled lexicon is valid")
    }

    /// Reads a `name,gender` CSV with gender `male` or `female`.
    pub fn load(path: &Path) -> Result<Self> {
        Self::parse_csv(csv_reader(path)?.into_inner(), path)
    }

    fn parse_csv<R: std::io::Read>(input: R, path: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(input);
        let headers = reader.headers().map_err(csv_err(path))?.clone();
        let name_idx = column_index(&headers, "name", path)?;
        let gender_idx = column_index(&headers, "gender", path)?;
        let mut names = HashMap::new();
        for (row, record) in reader.records().enumerate() {
            let record = record.map_err(csv_err(path))?;
            let name = record.get(name_idx).unwrap_or_default().trim();
            let gender = record.get(gender_idx).and_then(Gender::parse);
            match gender {
                Some(g) if !name.is_empty() && !name.contains(char::is_whitespace) => {
                    names.insert(normalize_case(name), g);
                }
                _ => {
                    return Err(Error::Data(format!("bad lexicon row {} in {}", row + 2, path.display())));
                }
            }
        }
        Ok(Self { names })
    }

    pub fn from_pairs<I, K>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (K, Gender)>,
        K: AsRef<str>,
    {
        Self {
            names: pairs
                .into_iter()
                .filter(|(_, g)| *g != Gender::Unknown)
                .map(|(k, g)| (normalize_case(k.as_ref()), g))
                .collect(),
        }
    }

    pub fn get(&self, name: &str) -> Option<Gender> {
        self.names.get(&normalize_case(name)).copied()
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

fn honorific_rest(token: &str) -> Option<&str> {
    let is_title = |s: &str| HONORIFICS.contains(&s.to_lowercase().as_str());
    let bare = token.strip_suffix('.').unwrap_or(token);
    if is_title(bare) {
        return Some("");
    }
    // "Md.Sabbir" written without a space
    if let Some((head, tail)) = token.split_once('.') {
        if is_title(head) && !tail.is_empty() {
            return Some(tail);
        }
    }
    None
}

/// Removes leading honorifics ("Md.", "Dr", "Engr." ...) until the first token
/// is a real name. A name made only of honorifics becomes empty.
pub fn strip_honorifics(full_name: &str) -> String {
    let mut rest = full_name.trim();
    while !rest.is_empty() {
        let first = rest.split(char::is_whitespace).next().unwrap_or(rest);
        match honorific_rest(first) {
            // glued remainder ("Md.Sabbir") starts inside the first token
            Some(glued) => rest = rest[first.len() - glued.len()..].trim_start(),
            None => break,
        }
    }
    rest.to_string()
}

/// First whitespace token of the honorific-stripped name.
pub fn first_name(name: &str) -> Option<String> {
    let stripped = strip_honorifics(name);
    let token = stripped.split_whitespace().next()?;
    let token = token.trim_matches(|c: char| c.is_ascii_punctuation());
    (!token.is_empty()).then(|| token.to_string())
}

pub fn predict_gender(full_name: &str, lexicon: &NameGenderLexicon, client: &dyn TransliterationClient) -> Gender {
    let Some(first) = first_name(full_name) else {
        return Gender::Unknown;
    };
    let key = normalize_case(&first);
    if let Some(g) = lexicon.get(&key) {
        return g;
    }
    match client.transliterate(&key) {
        Ok(native) => lexicon.get(native.trim()).unwrap_or(Gender::Unknown),
        Err(_) => Gender::Unknown,
    }
}
