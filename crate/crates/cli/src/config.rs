//! Optional JSON config file. Keys mirror the long flag names; flags win.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use tmg_core::mg::LevelCount;
use tmg_core::stability::DampingChoice;

use crate::CliError;

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

/// Either `"optimal"` / `"max"` style keywords or plain numbers.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum Keyword {
    Number(f64),
    Word(String),
}

impl Keyword {
    pub fn as_flag(&self) -> String {
        match self {
            Keyword::Number(v) => v.to_string(),
            Keyword::Word(w) => w.clone(),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct FileConfig {
    pub pt: Option<OneOrMany<usize>>,
    pub tau: Option<f64>,
    pub tau_min: Option<f64>,
    pub tau_max: Option<f64>,
    pub points: Option<usize>,
    pub nu: Option<usize>,
    pub nu1: Option<usize>,
    pub nu2: Option<usize>,
    pub omega: Option<Keyword>,
    pub levels: Option<Keyword>,
    pub steps: Option<usize>,
    pub eps: Option<f64>,
    pub max_iters: Option<usize>,
    pub seed: Option<u64>,
    pub workers: Option<OneOrMany<usize>>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub end: Option<f64>,
    pub u0: Option<f64>,
    pub f: Option<String>,
    pub init: Option<String>,
    pub compare_sequential: Option<bool>,
    pub mode: Option<String>,
    pub reps: Option<usize>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

pub fn parse_damping(text: &str) -> Result<DampingChoice, CliError> {
    if text.eq_ignore_ascii_case("optimal") {
        return Ok(DampingChoice::Optimal);
    }
    let value: f64 = text
        .parse()
        .map_err(|_| CliError::Usage(format!("omega must be `optimal` or a number, got `{text}`")))?;
    DampingChoice::fixed(value).map_err(|e| CliError::Usage(e.to_string()))
}

pub fn parse_levels(text: &str) -> Result<LevelCount, CliError> {
    if text.eq_ignore_ascii_case("max") {
        return Ok(LevelCount::Max);
    }
    text.parse::<usize>()
        .map(LevelCount::Count)
        .map_err(|_| CliError::Usage(format!("levels must be `max` or an integer, got `{text}`")))
}

/// Flag value if given, else the file value, else the default.
pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}
