//! Run configuration: defaults, an optional TOML file, then command-line
//! overrides. Names are validated before any analysis starts.

use std::collections::BTreeSet;
use std::path::Path;
use std::time::Duration;

use serde::Deserialize;
use thiserror::Error;

use crate::bench::BatchConfig;
use crate::detector::DetectorConfig;
use crate::fetch::FetchConfig;
use crate::frontend::ast::CallKind;
use crate::frontend::ParseOptions;
use crate::pipeline::AnalysisConfig;
use crate::triage::{CauseType, UnknownCause};

pub const DEFAULT_API_KEY_ENV: &str = "EXPLORER_API_KEY";
pub const DEFAULT_ENDPOINT: &str =
    "https://api.etherscan.io/api?module=contract&action=getsourcecode&address={address}&apikey={apikey}";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error(transparent)]
    UnknownRule(#[from] UnknownCause),
    #[error("unknown call kind `{0}`")]
    UnknownCallKind(String),
    #[error("unknown output format `{0}` (expected json or text)")]
    UnknownFormat(String),
    #[error("cannot read config {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid config {path}: {message}")]
    Syntax { path: String, message: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Text,
}

impl std::str::FromStr for OutputFormat {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "text" => Ok(OutputFormat::Text),
            other => Err(ConfigError::UnknownFormat(other.to_string())),
        }
    }
}

/// Either `"a,b"` or `["a", "b"]` in the config file.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum NameList {
    Joined(String),
    List(Vec<String>),
}

impl NameList {
    fn joined(&self) -> String {
        match self {
            NameList::Joined(s) => s.clone(),
            NameList::List(v) => v.join(","),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    rules: Option<NameList>,
    call_kinds: Option<NameList>,
    report_bare: Option<bool>,
    timeout_secs: Option<u64>,
    format: Option<String>,
    workers: Option<usize>,
    fetch: Option<FileFetch>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileFetch {
    endpoint: Option<String>,
    api_key_env: Option<String>,
    retries: Option<u32>,
    backoff_ms: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub rules: BTreeSet<CauseType>,
    pub call_kinds: BTreeSet<CallKind>,
    pub report_bare: bool,
    pub timeout: Duration,
    pub format: OutputFormat,
    pub workers: usize,
    pub fetch: FetchConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            rules: CauseType::all(),
            call_kinds: CallKind::EXTERNAL.into_iter().collect(),
            report_bare: true,
            timeout: Duration::from_secs(120),
            format: OutputFormat::Json,
            workers: 4,
            fetch: FetchConfig::default(),
        }
    }
}

pub fn parse_call_kinds(s: &str) -> Result<BTreeSet<CallKind>, ConfigError> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| CallKind::parse_external(p).ok_or_else(|| ConfigError::UnknownCallKind(p.to_string())))
        .collect()
}

impl RunConfig {
    pub fn from_toml(text: &str, path: &str) -> Result<Self, ConfigError> {
        let file: FileConfig =
            toml::from_str(text).map_err(|e| ConfigError::Syntax { path: path.to_string(), message: e.to_string() })?;
        let mut c = RunConfig::default();
        if let Some(r) = &file.rules {
            c.rules = CauseType::parse_list(&r.joined())?;
        }
        if let Some(k) = &file.call_kinds {
            c.call_kinds = parse_call_kinds(&k.joined())?;
        }
        if let Some(b) = file.report_bare {
            c.report_bare = b;
        }
        if let Some(t) = file.timeout_secs {
            c.set_timeout_secs(t)?;
        }
        if let Some(f) = &file.format {
            c.format = f.parse()?;
        }
        if let Some(w) = file.workers {
            c.set_workers(w)?;
        }
        if let Some(f) = file.fetch {
            if let Some(e) = f.endpoint {
                c.fetch.endpoint = e;
            }
            if let Some(e) = f.api_key_env {
                c.fetch.api_key_env = e;
            }
            if let Some(r) = f.retries {
                c.fetch.retries = r;
            }
            if let Some(b) = f.backoff_ms {
                c.fetch.backoff = Duration::from_millis(b);
            }
        }
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let p = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: p.clone(), source })?;
        RunConfig::from_toml(&text, &p)
    }

    pub fn set_timeout_secs(&mut self, secs: u64) -> Result<(), ConfigError> {
        if secs == 0 {
            return Err(ConfigError::Invalid("timeout must be at least 1 second".into()));
        }
        self.timeout = Duration::from_secs(secs);
        Ok(())
    }

    pub fn set_workers(&mut self, n: usize) -> Result<(), ConfigError> {
        if n == 0 {
            return Err(ConfigError::Invalid("workers must be at least 1".into()));
        }
        self.workers = n;
        Ok(())
    }

    pub fn analysis(&self) -> AnalysisConfig {
        AnalysisConfig {
            detector: DetectorConfig { call_kinds: self.call_kinds.clone(), report_bare: self.report_bare },
            rules: self.rules.clone(),
            timeout: Some(self.timeout),
            parse: ParseOptions::default(),
        }
    }

    pub fn batch(&self) -> BatchConfig {
        BatchConfig { analysis: self.analysis(), workers: self.workers, dedupe: true }
    }
}
