//! Verified-source download from a block explorer API.
//!
//! The endpoint is a URL template with `{address}` and `{apikey}`
//! placeholders. The key is read from an environment variable only.

use std::path::{Component, Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::config::{DEFAULT_API_KEY_ENV, DEFAULT_ENDPOINT};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FetchConfig {
    pub endpoint: String,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    /// Retries after the first attempt, for network errors and rate limits.
    pub retries: u32,
    /// First retry delay; doubles on every retry.
    pub backoff: Duration,
    pub request_timeout: Duration,
}

impl Default for FetchConfig {
    fn default() -> Self {
        FetchConfig {
            endpoint: DEFAULT_ENDPOINT.to_string(),
            api_key_env: DEFAULT_API_KEY_ENV.to_string(),
            retries: 3,
            backoff: Duration::from_millis(500),
            request_timeout: Duration::from_secs(30),
        }
    }
}

#[derive(Debug, Error)]
pub enum FetchError {
    #[error("malformed address `{0}` (expected 40 hex digits, optionally 0x-prefixed)")]
    BadAddress(String),
    #[error("environment variable {0} is not set")]
    MissingCredential(String),
    #[error("network failure: {0}")]
    Network(String),
    #[error("source not verified: {0}")]
    NotVerified(String),
    #[error("rate limited by the endpoint")]
    RateLimited,
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
}

impl FetchError {
    /// Process exit code for the `fetch` command.
    pub fn exit_code(&self) -> u8 {
        match self {
            FetchError::BadAddress(_) | FetchError::MissingCredential(_) => 2,
            FetchError::Network(_) | FetchError::Io(_) => 3,
            FetchError::NotVerified(_) => 4,
            FetchError::RateLimited => 5,
        }
    }

    fn retryable(&self) -> bool {
        matches!(self, FetchError::Network(_) | FetchError::RateLimited)
    }
}

/// `0x`-prefixed lowercase form of a 20-byte hex address.
pub fn normalize_address(s: &str) -> Result<String, FetchError> {
    let hexpart = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")).unwrap_or(s);
    if hexpart.len() != 40 || !hexpart.bytes().all(|b| b.is_ascii_hexdigit()) {
        return Err(FetchError::BadAddress(s.to_string()));
    }
    Ok(format!("0x{}", hexpart.to_ascii_lowercase()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceMetadata {
    pub address: String,
    pub contract_name: String,
    pub compiler_version: String,
    pub files: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fetched {
    pub metadata: SourceMetadata,
    /// (relative path, contents)
    pub sources: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FetchOutcome {
    pub files: Vec<PathBuf>,
    pub metadata_path: PathBuf,
    pub metadata: SourceMetadata,
}

fn text_field(v: &Value, key: &str) -> String {
    v.get(key).and_then(Value::as_str).unwrap_or_default().to_string()
}

/// Relative, `..`-free path for a source unit name.
fn safe_relative(name: &str) -> Option<String> {
    let p = Path::new(name);
    let parts: Vec<String> = p
        .components()
        .map(|c| match c {
            Component::Normal(s) => Some(s.to_string_lossy().into_owned()),
            Component::CurDir => Some(String::new()),
            _ => None,
        })
        .collect::<Option<Vec<_>>>()?
        .into_iter()
        .filter(|s| !s.is_empty())
        .collect();
    if parts.is_empty() {
        return None;
    }
    let mut joined = parts.join("/");
    if !joined.ends_with(".sol") {
        joined.push_str(".sol");
    }
    Some(joined)
}

/// Source units of an explorer `SourceCode` field: plain source, a
/// `{{...}}` standard-JSON input, or a bare `{"path": {"content": ...}}` map.
fn split_sources(code: &str, contract_name: &str) -> Result<Vec<(String, String)>, FetchError> {
    let trimmed = code.trim();
    if !trimmed.starts_with('{') {
        let name = if contract_name.is_empty() { "Contract" } else { contract_name };
        return Ok(vec![(format!("{name}.sol"), code.to_string())]);
    }
    let json = trimmed.strip_prefix("{{").and_then(|s| s.strip_suffix("}}")).map(|s| format!("{{{s}}}"));
    let v: Value = serde_json::from_str(json.as_deref().unwrap_or(trimmed))
        .map_err(|e| FetchError::Network(format!("unreadable multi-file source: {e}")))?;
    let map = v.get("sources").unwrap_or(&v).as_object().ok_or_else(|| FetchError::Network("no sources in response".into()))?;
    let mut out = Vec::new();
    for (name, unit) in map {
        let content = unit.get("content").and_then(Value::as_str).ok_or_else(|| FetchError::Network(format!("source {name} has no content")))?;
        let rel = safe_relative(name).ok_or_else(|| FetchError::Network(format!("unsafe source path `{name}`")))?;
        out.push((rel, content.to_string()));
    }
    out.sort();
    Ok(out)
}

/// Interpret one explorer response body.
pub fn parse_response(address: &str, body: &str) -> Result<Fetched, FetchError> {
    let v: Value = serde_json::from_str(body).map_err(|e| FetchError::Network(format!("malformed response: {e}")))?;
    let status = text_field(&v, "status");
    let result = v.get("result").cloned().unwrap_or(Value::Null);
    if status != "1" {
        let msg = result.as_str().map(str::to_string).unwrap_or_else(|| text_field(&v, "message"));
        let lower = msg.to_ascii_lowercase();
        if lower.contains("rate limit") {
            return Err(FetchError::RateLimited);
        }
        if lower.contains("not verified") {
            return Err(FetchError::NotVerified(msg));
        }
        return Err(FetchError::Network(format!("endpoint error: {msg}")));
    }
    let first = result.as_array().and_then(|a| a.first()).ok_or_else(|| FetchError::Network("empty result".into()))?;
    let code = text_field(first, "SourceCode");
    if code.trim().is_empty() {
        return Err(FetchError::NotVerified(format!("{address} has no published source")));
    }
    let contract_name = text_field(first, "ContractName");
    let sources = split_sources(&code, &contract_name)?;
    let metadata = SourceMetadata {
        address: address.to_string(),
        contract_name,
        compiler_version: text_field(first, "CompilerVersion"),
        files: sources.iter().map(|(n, _)| n.clone()).collect(),
    };
    Ok(Fetched { metadata, sources })
}

pub struct Client {
    config: FetchConfig,
    api_key: Option<String>,
    agent: ureq::Agent,
}

impl Client {
    /// Reads the API key from the configured environment variable. A
    /// template that uses `{apikey}` requires it to be set.
    pub fn from_env(config: FetchConfig) -> Result<Self, FetchError> {
        let api_key = std::env::var(&config.api_key_env).ok().filter(|k| !k.is_empty());
        if api_key.is_none() && config.endpoint.contains("{apikey}") {
            return Err(FetchError::MissingCredential(config.api_key_env.clone()));
        }
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(config.request_timeout))
            .build()
            .new_agent();
        Ok(Client { config, api_key, agent })
    }

    fn url(&self, address: &str) -> String {
        self.config.endpoint.replace("{address}", address).replace("{apikey}", self.api_key.as_deref().unwrap_or(""))
    }

    fn attempt(&self, address: &str) -> Result<Fetched, FetchError> {
        let mut resp = self.agent.get(&self.url(address)).call().map_err(|e| {
            // the URL may carry the key; report only the error kind
            FetchError::Network(match e {
                ureq::Error::Timeout(t) => format!("timeout ({t})"),
                ureq::Error::Io(io) => io.kind().to_string(),
                other => other.to_string().replace(self.api_key.as_deref().unwrap_or("\u{0}"), "***"),
            })
        })?;
        let status = resp.status().as_u16();
        if status == 429 {
            return Err(FetchError::RateLimited);
        }
        if status != 200 {
            return Err(FetchError::Network(format!("http status {status}")));
        }
        let body = resp.body_mut().read_to_string().map_err(|e| FetchError::Network(format!("reading body: {e}")))?;
        parse_response(address, &body)
    }

    /// Download with retries and exponential backoff.
    pub fn fetch(&self, address: &str) -> Result<Fetched, FetchError> {
        let address = normalize_address(address)?;
        let mut delay = self.config.backoff;
        let mut attempt = 0;
        loop {
            match self.attempt(&address) {
                Err(e) if e.retryable() && attempt < self.config.retries => {
                    attempt += 1;
                    std::thread::sleep(delay);
                    delay = delay.saturating_mul(2);
                }
                other => return other,
            }
        }
    }

    /// Fetch and write the sources plus `<address>.json` metadata into `out`.
    pub fn fetch_to_dir(&self, address: &str, out: &Path) -> Result<FetchOutcome, FetchError> {
        let fetched = self.fetch(address)?;
        write_atomically(&fetched, out)
    }
}

/// Stage every file in a temporary directory inside `out`, then move them
/// into place. On failure, files already moved are removed again, so no
/// partial output remains.
pub fn write_atomically(fetched: &Fetched, out: &Path) -> Result<FetchOutcome, FetchError> {
    std::fs::create_dir_all(out)?;
    let stage = tempfile::Builder::new().prefix(".fetch-").tempdir_in(out)?;
    let meta_name = format!("{}.json", fetched.metadata.address);
    let mut entries: Vec<(String, Vec<u8>)> =
        fetched.sources.iter().map(|(n, c)| (n.clone(), c.as_bytes().to_vec())).collect();
    let meta = serde_json::to_vec_pretty(&fetched.metadata).map_err(|e| FetchError::Io(e.into()))?;
    entries.push((meta_name.clone(), meta));
    for (name, bytes) in &entries {
        let p = stage.path().join(name);
        if let Some(parent) = p.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&p, bytes)?;
    }
    let mut placed: Vec<PathBuf> = Vec::new();
    let mut created_dirs: Vec<PathBuf> = Vec::new();
    let result = (|| -> std::io::Result<()> {
        for (name, _) in &entries {
            let dest = out.join(name);
            if dest.exists() {
                return Err(std::io::Error::new(std::io::ErrorKind::AlreadyExists, format!("{} already exists", dest.display())));
            }
            if let Some(parent) = dest.parent() {
                if !parent.exists() {
                    std::fs::create_dir_all(parent)?;
                    created_dirs.push(parent.to_path_buf());
                }
            }
            std::fs::rename(stage.path().join(name), &dest)?;
            placed.push(dest);
        }
        Ok(())
    })();
    if let Err(e) = result {
        for p in &placed {
            let _ = std::fs::remove_file(p);
        }
        for d in created_dirs.iter().rev() {
            let _ = std::fs::remove_dir(d);
        }
        return Err(e.into());
    }
    let metadata_path = placed.pop().expect("metadata is written last");
    Ok(FetchOutcome { files: placed, metadata_path, metadata: fetched.metadata.clone() })
}
