use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::limit::{InFlightLimiter, TokenBucket};
use super::{check_aligned, BackendConfig, TranslateError, Translator, REMOTE_MAX_CHARS};
use crate::text::char_len;

/// Request body: `{"source_lang", "target_lang", "texts": [...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RemoteRequest {
    pub source_lang: String,
    pub target_lang: String,
    pub texts: Vec<String>,
}

/// Success body: `{"translations": [...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RemoteResponse {
    pub translations: Vec<String>,
}

#[derive(Debug, Deserialize)]
struct ErrorBody {
    error: String,
}

/// Client for an HTTP translation service speaking [`RemoteRequest`] /
/// [`RemoteResponse`]. Batches are split into `batch_size` chunks, transient
/// failures (transport errors, 429, 5xx) are retried with exponential
/// backoff, and requests pass through an in-flight cap and a token bucket.
pub struct RemoteBackend {
    client: reqwest::blocking::Client,
    endpoint: String,
    api_key: Option<String>,
    source_lang: String,
    target_lang: String,
    batch_size: usize,
    max_retries: u32,
    backoff: Duration,
    in_flight: InFlightLimiter,
    bucket: TokenBucket,
}

impl RemoteBackend {
    pub fn new(config: &BackendConfig) -> Result<Self, TranslateError> {
        let endpoint = config
            .endpoint
            .clone()
            .ok_or_else(|| TranslateError::Config("remote_http needs an endpoint".into()))?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| TranslateError::Config(e.to_string()))?;
        Ok(Self {
            client,
            endpoint,
            api_key: config.api_key.clone(),
            source_lang: config.source_lang.clone(),
            target_lang: config.target_lang.clone(),
            batch_size: config.batch_size.max(1),
            max_retries: config.max_retries,
            backoff: Duration::from_millis(config.retry_backoff_ms),
            in_flight: InFlightLimiter::new(config.max_in_flight),
            bucket: TokenBucket::new(config.requests_per_second, config.max_in_flight as f64),
        })
    }

    fn send_once(&self, texts: &[String]) -> Result<Vec<String>, TranslateError> {
        let _slot = self.in_flight.acquire();
        self.bucket.take();
        let body = RemoteRequest {
            source_lang: self.source_lang.clone(),
            target_lang: self.target_lang.clone(),
            texts: texts.to_vec(),
        };
        let mut request = self.client.post(&self.endpoint).json(&body);
        if let Some(key) = &self.api_key {
            request = request.bearer_auth(key);
        }
        let response = request.send().map_err(|e| TranslateError::Transport(e.to_string()))?;
        let status = response.status();
        let bytes = response.bytes().map_err(|e| TranslateError::Transport(e.to_string()))?;
        if !status.is_success() {
            let message = serde_json::from_slice::<ErrorBody>(&bytes)
                .map(|b| b.error)
                .unwrap_or_else(|_| String::from_utf8_lossy(&bytes).into_owned());
            return Err(TranslateError::Status {
                status: status.as_u16(),
                message,
            });
        }
        let parsed: RemoteResponse =
            serde_json::from_slice(&bytes).map_err(|e| TranslateError::Transport(format!("bad response body: {e}")))?;
        check_aligned(texts.len(), &parsed.translations)?;
        Ok(parsed.translations)
    }

    fn send(&self, texts: &[String]) -> Result<Vec<String>, TranslateError> {
        let mut attempt = 0;
        loop {
            match self.send_once(texts) {
                Ok(out) => return Ok(out),
                Err(e) if e.is_transient() && attempt < self.max_retries => {
                    let delay = self.backoff * 2u32.pow(attempt);
                    log::warn!("translation request failed ({e}); retrying in {delay:?}");
                    std::thread::sleep(delay);
                    attempt += 1;
                }
                Err(e) => return Err(e),
            }
        }
    }
}

impl Translator for RemoteBackend {
    fn translate_batch(&self, texts: &[String]) -> Result<Vec<String>, TranslateError> {
        if texts.is_empty() {
            return Err(TranslateError::EmptyBatch);
        }
        for (index, text) in texts.iter().enumerate() {
            let len = char_len(text);
            if len > REMOTE_MAX_CHARS {
                return Err(TranslateError::Oversize {
                    index,
                    len,
                    limit: REMOTE_MAX_CHARS,
                });
            }
        }
        let mut out = Vec::with_capacity(texts.len());
        for chunk in texts.chunks(self.batch_size) {
            out.extend(self.send(chunk)?);
        }
        Ok(out)
    }

    fn identity(&self) -> String {
        format!(
            "remote_http:{}:{}:{}",
            self.endpoint, self.source_lang, self.target_lang
        )
    }
}
