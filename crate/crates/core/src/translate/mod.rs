//! Translation backends behind one batch contract.
//!
//! Every backend maps a batch of texts to an index-aligned batch of
//! translations. The remote backend speaks a small JSON protocol over HTTP;
//! the local backends (identity, fixture map, fault injection) are
//! deterministic and exist for testing and dry runs.

mod cache;
mod fault;
mod limit;
mod remote;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use cache::{cached, CachedTranslator, DiskCache, MemoryCache, TranslationCache};
pub use fault::FaultInjectionBackend;
pub use limit::{InFlightLimiter, TokenBucket};
pub use remote::{RemoteBackend, RemoteRequest, RemoteResponse};

/// Longest text, in code points, the remote backend will send. Longer
/// inputs risk being summarized or cut short by the translator.
pub const REMOTE_MAX_CHARS: usize = 1000;

#[derive(Debug, Error)]
pub enum TranslateError {
    #[error("translation batch is empty")]
    EmptyBatch,
    #[error(
        "text {index} has {len} code points; remote requests are capped at {limit} because longer paragraphs come back truncated"
    )]
    Oversize { index: usize, len: usize, limit: usize },
    #[error("backend returned {got} translations for {expected} texts")]
    Misaligned { expected: usize, got: usize },
    #[error("translation service answered HTTP {status}: {message}")]
    Status { status: u16, message: String },
    #[error("transport error: {0}")]
    Transport(String),
    #[error("backend configuration: {0}")]
    Config(String),
}

impl TranslateError {
    /// Whether another attempt could succeed.
    pub fn is_transient(&self) -> bool {
        match self {
            TranslateError::Status { status, .. } => *status == 429 || *status >= 500,
            TranslateError::Transport(_) => true,
            _ => false,
        }
    }
}

/// A translation backend. Implementations must return exactly one output
/// per input, in order.
pub trait Translator: Send + Sync {
    fn translate_batch(&self, texts: &[String]) -> Result<Vec<String>, TranslateError>;

    /// Stable description of the backend and its settings; part of cache keys.
    fn identity(&self) -> String;
}

impl<T: Translator + ?Sized> Translator for Arc<T> {
    fn translate_batch(&self, texts: &[String]) -> Result<Vec<String>, TranslateError> {
        (**self).translate_batch(texts)
    }

    fn identity(&self) -> String {
        (**self).identity()
    }
}

pub(crate) fn check_aligned(expected: usize, out: &[String]) -> Result<(), TranslateError> {
    if out.len() != expected {
        return Err(TranslateError::Misaligned {
            expected,
            got: out.len(),
        });
    }
    Ok(())
}

/// Returns every text unchanged.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityBackend;

impl Translator for IdentityBackend {
    fn translate_batch(&self, texts: &[String]) -> Result<Vec<String>, TranslateError> {
        if texts.is_empty() {
            return Err(TranslateError::EmptyBatch);
        }
        Ok(texts.to_vec())
    }

    fn identity(&self) -> String {
        "identity".to_string()
    }
}

/// Looks each text up in a fixed table; unknown texts pass through.
#[derive(Debug, Clone, Default)]
pub struct FixtureMapBackend {
    map: BTreeMap<String, String>,
}

impl FixtureMapBackend {
    pub fn new(map: BTreeMap<String, String>) -> Self {
        Self { map }
    }
}

impl Translator for FixtureMapBackend {
    fn translate_batch(&self, texts: &[String]) -> Result<Vec<String>, TranslateError> {
        if texts.is_empty() {
            return Err(TranslateError::EmptyBatch);
        }
        Ok(texts
            .iter()
            .map(|t| self.map.get(t).cloned().unwrap_or_else(|| t.clone()))
            .collect())
    }

    fn identity(&self) -> String {
        let mut hasher = Sha256::new();
        for (k, v) in &self.map {
            hasher.update(k.as_bytes());
            hasher.update([0]);
            hasher.update(v.as_bytes());
            hasher.update([0]);
        }
        format!("fixture_map:{}", hex::encode(&hasher.finalize()[..8]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    RemoteHttp,
    Identity,
    FixtureMap,
    FaultInjection,
}

fn default_source_lang() -> String {
    "en".into()
}
fn default_target_lang() -> String {
    "ur".into()
}
fn default_batch_size() -> usize {
    16
}
fn default_max_retries() -> u32 {
    3
}
fn default_max_in_flight() -> usize {
    4
}
fn default_rate() -> f64 {
    5.0
}
fn default_timeout() -> u64 {
    120
}
fn default_backoff() -> u64 {
    500
}

/// Backend settings, read from a JSON file. `ENDPOINT` and `API_KEY` in the
/// environment override the file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BackendConfig {
    pub kind: BackendKind,
    #[serde(default)]
    pub endpoint: Option<String>,
    #[serde(default, skip_serializing)]
    pub api_key: Option<String>,
    #[serde(default = "default_source_lang")]
    pub source_lang: String,
    #[serde(default = "default_target_lang")]
    pub target_lang: String,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    #[serde(default)]
    pub fault_probability: f64,
    #[serde(default)]
    pub seed: u64,
    /// Inline table for `fixture_map`.
    #[serde(default)]
    pub fixtures: BTreeMap<String, String>,
    /// JSON object file merged into `fixtures`.
    #[serde(default)]
    pub fixture_file: Option<PathBuf>,
    #[serde(default = "default_max_in_flight")]
    pub max_in_flight: usize,
    #[serde(default = "default_rate")]
    pub requests_per_second: f64,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default = "default_backoff")]
    pub retry_backoff_ms: u64,
}

impl BackendConfig {
    pub fn new(kind: BackendKind) -> Self {
        Self {
            kind,
            endpoint: None,
            api_key: None,
            source_lang: default_source_lang(),
            target_lang: default_target_lang(),
            batch_size: default_batch_size(),
            max_retries: default_max_retries(),
            fault_probability: 0.0,
            seed: 0,
            fixtures: BTreeMap::new(),
            fixture_file: None,
            max_in_flight: default_max_in_flight(),
            requests_per_second: default_rate(),
            timeout_secs: default_timeout(),
            retry_backoff_ms: default_backoff(),
        }
    }

    pub fn identity() -> Self {
        Self::new(BackendKind::Identity)
    }

    pub fn fault_injection(probability: f64, seed: u64) -> Self {
        Self {
            fault_probability: probability,
            seed,
            ..Self::new(BackendKind::FaultInjection)
        }
    }

    pub fn fixture_map(fixtures: BTreeMap<String, String>) -> Self {
        Self {
            fixtures,
            ..Self::new(BackendKind::FixtureMap)
        }
    }

    pub fn remote(endpoint: impl Into<String>) -> Self {
        Self {
            endpoint: Some(endpoint.into()),
            ..Self::new(BackendKind::RemoteHttp)
        }
    }

    /// Reads a JSON config file and applies environment overrides.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, TranslateError> {
        let path = path.as_ref();
        let raw =
            std::fs::read_to_string(path).map_err(|e| TranslateError::Config(format!("{}: {e}", path.display())))?;
        let mut config: BackendConfig =
            serde_json::from_str(&raw).map_err(|e| TranslateError::Config(format!("{}: {e}", path.display())))?;
        if let Some(file) = &config.fixture_file {
            let file = if file.is_relative() {
                path.parent().unwrap_or(Path::new(".")).join(file)
            } else {
                file.clone()
            };
            config.fixture_file = Some(file);
        }
        config.apply_env(|k| std::env::var(k).ok());
        Ok(config)
    }

    pub fn apply_env(&mut self, lookup: impl Fn(&str) -> Option<String>) {
        if let Some(endpoint) = lookup("ENDPOINT") {
            self.endpoint = Some(endpoint);
        }
        if let Some(key) = lookup("API_KEY") {
            self.api_key = Some(key);
        }
    }

    pub fn validate(&self) -> Result<(), TranslateError> {
        if self.kind == BackendKind::RemoteHttp && self.endpoint.is_none() {
            return Err(TranslateError::Config("remote_http needs an endpoint".into()));
        }
        if !(0.0..=1.0).contains(&self.fault_probability) {
            return Err(TranslateError::Config(format!(
                "fault_probability {} is outside [0, 1]",
                self.fault_probability
            )));
        }
        if self.fault_probability > 0.0 && self.kind != BackendKind::FaultInjection {
            log::warn!("fault_probability is ignored by {:?} backends", self.kind);
        }
        if self.batch_size == 0 {
            return Err(TranslateError::Config("batch_size must be positive".into()));
        }
        Ok(())
    }

    /// Instantiates the configured backend.
    pub fn build(&self) -> Result<Arc<dyn Translator>, TranslateError> {
        self.validate()?;
        Ok(match self.kind {
            BackendKind::Identity => Arc::new(IdentityBackend),
            BackendKind::FixtureMap => {
                let mut map = self.fixtures.clone();
                if let Some(file) = &self.fixture_file {
                    let raw = std::fs::read_to_string(file)
                        .map_err(|e| TranslateError::Config(format!("{}: {e}", file.display())))?;
                    let extra: BTreeMap<String, String> = serde_json::from_str(&raw)
                        .map_err(|e| TranslateError::Config(format!("{}: {e}", file.display())))?;
                    map.extend(extra);
                }
                Arc::new(FixtureMapBackend::new(map))
            }
            BackendKind::FaultInjection => Arc::new(FaultInjectionBackend::new(self.fault_probability, self.seed)),
            BackendKind::RemoteHttp => Arc::new(RemoteBackend::new(self)?),
        })
    }
}

/// Builds the configured backend and translates one batch with it.
pub fn translate_batch(config: &BackendConfig, texts: &[String]) -> Result<Vec<String>, TranslateError> {
    let backend = config.build()?;
    let out = backend.translate_batch(texts)?;
    check_aligned(texts.len(), &out)?;
    Ok(out)
}
