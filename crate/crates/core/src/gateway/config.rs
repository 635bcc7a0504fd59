//! Provider definitions and the TOML provider configuration file.
//!
//! ```toml
//! [[provider]]
//! provider_id = "gpt-4o-mini"
//! request_shape = "openai_chat"
//! endpoint = "https://api.openai.com/v1/chat/completions"
//! model_name = "gpt-4o-mini"
//! auth_env_var = "OPENAI_API_KEY"
//! rate_limit_per_sec = 2
//!
//! [[provider]]
//! provider_id = "steady"
//! request_shape = "mock"
//! mock = { kind = "constant", text = "Always the same answer." }
//! ```
//!
//! Credentials never appear in this file, only the name of the
//! environment variable that holds them.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::mock::MockBehavior;

/// Wire format spoken by a provider endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dialect {
    /// `POST` chat completions with `messages`, bearer auth.
    OpenaiChat,
    /// Messages API with `x-api-key` auth.
    AnthropicMessages,
    /// `generateContent` with `x-goog-api-key` auth.
    GeminiGenerateContent,
    /// Chat v2 with bearer auth.
    CohereChat,
    /// Hosted text-generation inference (`inputs` / `generated_text`).
    HfTextGeneration,
    /// Scripted in-process provider, see [`MockBehavior`].
    Mock,
}

/// Sampling overrides; unset fields leave the provider default in place.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sampling {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_tokens: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProviderSpec {
    pub provider_id: String,
    pub request_shape: Dialect,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auth_env_var: Option<String>,
    #[serde(default)]
    pub sampling: Sampling,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_limit_per_sec: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mock: Option<MockBehavior>,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read provider config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("provider config is not valid TOML: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("duplicate provider id {0:?}")]
    DuplicateId(String),
    #[error("provider {provider_id:?} is missing `{field}`")]
    MissingField {
        provider_id: String,
        field: &'static str,
    },
    #[error("provider {provider_id:?}: invalid endpoint {endpoint:?}: {reason}")]
    BadEndpoint {
        provider_id: String,
        endpoint: String,
        reason: String,
    },
    #[error("provider {provider_id:?}: `mock` is only valid with request_shape = \"mock\"")]
    UnexpectedMock { provider_id: String },
    #[error("provider {provider_id:?}: rate_limit_per_sec must be positive")]
    ZeroRateLimit { provider_id: String },
}

impl ProviderSpec {
    pub fn mock(provider_id: impl Into<String>, behavior: MockBehavior) -> Self {
        ProviderSpec {
            provider_id: provider_id.into(),
            request_shape: Dialect::Mock,
            endpoint: None,
            model_name: None,
            auth_env_var: None,
            sampling: Sampling::default(),
            rate_limit_per_sec: None,
            mock: Some(behavior),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let missing = |field| ConfigError::MissingField {
            provider_id: self.provider_id.clone(),
            field,
        };
        if self.provider_id.is_empty() {
            return Err(missing("provider_id"));
        }
        if self.rate_limit_per_sec == Some(0) {
            return Err(ConfigError::ZeroRateLimit {
                provider_id: self.provider_id.clone(),
            });
        }
        if self.request_shape == Dialect::Mock {
            return match self.mock {
                Some(_) => Ok(()),
                None => Err(missing("mock")),
            };
        }
        if self.mock.is_some() {
            return Err(ConfigError::UnexpectedMock {
                provider_id: self.provider_id.clone(),
            });
        }
        let endpoint = self.endpoint.as_deref().ok_or_else(|| missing("endpoint"))?;
        reqwest::Url::parse(endpoint).map_err(|e| ConfigError::BadEndpoint {
            provider_id: self.provider_id.clone(),
            endpoint: endpoint.to_string(),
            reason: e.to_string(),
        })?;
        if self.model_name.is_none() {
            return Err(missing("model_name"));
        }
        if self.auth_env_var.is_none() {
            return Err(missing("auth_env_var"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProviderConfig {
    #[serde(rename = "provider", default)]
    pub providers: Vec<ProviderSpec>,
}

impl ProviderConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let config: ProviderConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("provider config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut seen = HashSet::new();
        for spec in &self.providers {
            if !seen.insert(spec.provider_id.as_str()) {
                return Err(ConfigError::DuplicateId(spec.provider_id.clone()));
            }
            spec.validate()?;
        }
        Ok(())
    }
}
