//! Uniform access to LLM providers with record/replay caching.
//!
//! Every answer flows through a [`Gateway`]. In [`RunMode::LiveRecord`] a
//! cache miss calls the provider (rate limited, with retries) and appends
//! the answer to the [`ResponseCache`] journal before returning it. In
//! [`RunMode::Replay`] no provider backend exists at all and a miss is a
//! hard error, so replayed analyses are offline and deterministic.

mod cache;
mod config;
mod http;
mod mock;
mod rate_limit;
mod retry;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use cache::{CacheError, CacheKey, CacheProblem, ResponseCache, CACHE_FORMAT_VERSION};
pub use config::{ConfigError, Dialect, ProviderConfig, ProviderSpec, Sampling};
pub use http::HttpProvider;
pub use mock::{MockBehavior, MockCall, MockProvider, ScriptRule};
pub use rate_limit::RateLimiter;
pub use retry::RetryPolicy;

/// Failure reported by a provider backend for one call.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum ProviderError {
    /// Worth retrying: connection trouble, timeouts, 429 and 5xx statuses.
    #[error("transient failure: {0}")]
    Transient(String),
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("request rejected with status {status}: {body}")]
    Rejected { status: u16, body: String },
    #[error("malformed provider response: {0}")]
    Malformed(String),
}

impl ProviderError {
    pub fn is_transient(&self) -> bool {
        matches!(self, ProviderError::Transient(_))
    }
}

/// A source of completions. Implementations must be safe to share across threads.
pub trait Provider: Send + Sync {
    /// Answers `prompt`; `repetition_index` is 1-based and only informs mocks.
    fn complete(&self, prompt: &str, repetition_index: u32) -> Result<String, ProviderError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    LiveRecord,
    Replay,
}

impl RunMode {
    pub fn as_str(self) -> &'static str {
        match self {
            RunMode::LiveRecord => "live_record",
            RunMode::Replay => "replay",
        }
    }
}

impl fmt::Display for RunMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One answer together with the query that produced it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseRecord {
    pub provider_id: String,
    pub question_id: String,
    pub prompt_text: String,
    pub prompt_hash: String,
    pub repetition_index: u32,
    pub response_text: String,
    pub timestamp: DateTime<Utc>,
    pub session_id: String,
}

impl ResponseRecord {
    pub fn key(&self) -> CacheKey {
        CacheKey {
            provider_id: self.provider_id.clone(),
            prompt_hash: self.prompt_hash.clone(),
            repetition_index: self.repetition_index,
        }
    }
}

/// Hex SHA-256 of the UTF-8 prompt bytes.
pub fn prompt_hash(prompt: &str) -> String {
    hex::encode(Sha256::digest(prompt.as_bytes()))
}

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("unknown provider {0:?}")]
    UnknownProvider(String),
    #[error("provider {0:?} registered twice")]
    DuplicateProvider(String),
    #[error("replay cache miss for provider {provider_id:?}, prompt {prompt_hash}, repetition {repetition_index}")]
    CacheMiss {
        provider_id: String,
        prompt_hash: String,
        repetition_index: u32,
    },
    #[error("provider {provider_id:?}: credential variable {env_var} is not set")]
    MissingCredential { provider_id: String, env_var: String },
    #[error("provider {provider_id:?}: {source}")]
    Config {
        provider_id: String,
        #[source]
        source: ConfigError,
    },
    #[error("provider {provider_id:?} failed after {attempts} attempt(s): {source}")]
    Provider {
        provider_id: String,
        attempts: u32,
        #[source]
        source: ProviderError,
    },
    #[error("repetition count must be at least 1, got {0}")]
    InvalidRepetitions(usize),
    #[error("repetition {index} failed: {source}")]
    Repetition {
        index: u32,
        #[source]
        source: Box<GatewayError>,
    },
    #[error(transparent)]
    Cache(#[from] CacheError),
}

impl GatewayError {
    /// The innermost error, past any repetition wrapper.
    pub fn root(&self) -> &GatewayError {
        match self {
            GatewayError::Repetition { source, .. } => source.root(),
            other => other,
        }
    }
}

struct ProviderHandle {
    spec: ProviderSpec,
    backend: Option<Arc<dyn Provider>>,
    limiter: RateLimiter,
    /// Serializes cache lookup, call and append for this provider.
    serial: Mutex<()>,
}

pub struct Gateway {
    mode: RunMode,
    cache: ResponseCache,
    providers: BTreeMap<String, ProviderHandle>,
    retry: RetryPolicy,
    session_id: String,
    served: Mutex<Option<(DateTime<Utc>, DateTime<Utc>)>>,
}

impl Gateway {
    pub fn new(mode: RunMode, cache: ResponseCache) -> Self {
        Gateway {
            mode,
            cache,
            providers: BTreeMap::new(),
            retry: RetryPolicy::default(),
            session_id: "session-1".to_string(),
            served: Mutex::new(None),
        }
    }

    pub fn with_session_id(mut self, session_id: impl Into<String>) -> Self {
        self.session_id = session_id.into();
        self
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn mode(&self) -> RunMode {
        self.mode
    }

    pub fn session_id(&self) -> &str {
        &self.session_id
    }

    pub fn cache(&self) -> &ResponseCache {
        &self.cache
    }

    pub fn provider_specs(&self) -> impl Iterator<Item = &ProviderSpec> {
        self.providers.values().map(|h| &h.spec)
    }

    pub fn spec(&self, provider_id: &str) -> Option<&ProviderSpec> {
        self.providers.get(provider_id).map(|h| &h.spec)
    }

    /// Registers a provider with an explicit backend. Replay mode drops the backend.
    pub fn add_provider(
        &mut self,
        spec: ProviderSpec,
        backend: Arc<dyn Provider>,
    ) -> Result<(), GatewayError> {
        let backend = match self.mode {
            RunMode::LiveRecord => Some(backend),
            RunMode::Replay => None,
        };
        self.insert(spec, backend)
    }

    /// Registers a provider, building its backend from the spec in live mode.
    pub fn add_from_spec(&mut self, spec: ProviderSpec) -> Result<(), GatewayError> {
        spec.validate().map_err(|source| GatewayError::Config {
            provider_id: spec.provider_id.clone(),
            source,
        })?;
        let backend: Option<Arc<dyn Provider>> = match self.mode {
            RunMode::Replay => None,
            RunMode::LiveRecord => Some(match (&spec.request_shape, &spec.mock) {
                (Dialect::Mock, Some(behavior)) => Arc::new(MockProvider::new(behavior.clone())),
                _ => Arc::new(HttpProvider::from_spec(&spec)?),
            }),
        };
        self.insert(spec, backend)
    }

    fn insert(
        &mut self,
        spec: ProviderSpec,
        backend: Option<Arc<dyn Provider>>,
    ) -> Result<(), GatewayError> {
        if self.providers.contains_key(&spec.provider_id) {
            return Err(GatewayError::DuplicateProvider(spec.provider_id));
        }
        let handle = ProviderHandle {
            limiter: RateLimiter::per_second(spec.rate_limit_per_sec),
            spec,
            backend,
            serial: Mutex::new(()),
        };
        self.providers.insert(handle.spec.provider_id.clone(), handle);
        Ok(())
    }

    /// One answer for `(provider, prompt, repetition)`.
    ///
    /// Keys already in the cache are served from it in either mode, which
    /// keeps a recorded run and its replay identical.
    pub fn query(
        &self,
        provider_id: &str,
        question_id: &str,
        prompt: &str,
        repetition_index: u32,
    ) -> Result<ResponseRecord, GatewayError> {
        let handle = self
            .providers
            .get(provider_id)
            .ok_or_else(|| GatewayError::UnknownProvider(provider_id.to_string()))?;
        let key = CacheKey {
            provider_id: provider_id.to_string(),
            prompt_hash: prompt_hash(prompt),
            repetition_index,
        };

        let _serial = handle.serial.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(record) = self.cache.get(&key) {
            self.note_served(record.timestamp);
            return Ok(record);
        }
        let backend = match (&handle.backend, self.mode) {
            (Some(backend), RunMode::LiveRecord) => backend,
            _ => {
                return Err(GatewayError::CacheMiss {
                    provider_id: key.provider_id,
                    prompt_hash: key.prompt_hash,
                    repetition_index,
                })
            }
        };

        let (result, attempts) = self.retry.run(|| {
            handle.limiter.acquire();
            backend.complete(prompt, repetition_index)
        });
        let response_text = result.map_err(|source| GatewayError::Provider {
            provider_id: provider_id.to_string(),
            attempts,
            source,
        })?;

        let record = ResponseRecord {
            provider_id: key.provider_id,
            question_id: question_id.to_string(),
            prompt_text: prompt.to_string(),
            prompt_hash: key.prompt_hash,
            repetition_index,
            response_text,
            timestamp: Utc::now(),
            session_id: self.session_id.clone(),
        };
        self.cache.append(record.clone())?;
        self.note_served(record.timestamp);
        Ok(record)
    }

    /// `k` answers with repetition indices `1..=k`, or the first failure.
    pub fn query_repeated(
        &self,
        provider_id: &str,
        question_id: &str,
        prompt: &str,
        k: usize,
    ) -> Result<Vec<ResponseRecord>, GatewayError> {
        if k == 0 {
            return Err(GatewayError::InvalidRepetitions(k));
        }
        (1..=k as u32)
            .map(|index| {
                self.query(provider_id, question_id, prompt, index)
                    .map_err(|source| GatewayError::Repetition {
                        index,
                        source: Box::new(source),
                    })
            })
            .collect()
    }

    pub fn flush(&self) -> Result<(), GatewayError> {
        Ok(self.cache.flush()?)
    }

    /// Earliest and latest timestamps among the records handed out so far.
    pub fn served_window(&self) -> Option<(DateTime<Utc>, DateTime<Utc>)> {
        *self.served.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn note_served(&self, at: DateTime<Utc>) {
        let mut window = self.served.lock().unwrap_or_else(|e| e.into_inner());
        *window = Some(match *window {
            None => (at, at),
            Some((lo, hi)) => (lo.min(at), hi.max(at)),
        });
    }
}
