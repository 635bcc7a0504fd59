//! Blocking HTTP client for the supported chat/completion dialects.

use std::time::Duration;

use reqwest::blocking::Client;
use serde_json::{json, Value};

use super::config::{Dialect, ProviderSpec, Sampling};
use super::{GatewayError, Provider, ProviderError};

const ANTHROPIC_VERSION: &str = "2023-06-01";
const ANTHROPIC_DEFAULT_MAX_TOKENS: u32 = 1024;
const REQUEST_TIMEOUT: Duration = Duration::from_secs(120);

/// Header name/value pairs and JSON body for one request.
#[derive(Debug, Clone, PartialEq)]
pub struct WireRequest {
    pub headers: Vec<(&'static str, String)>,
    pub body: Value,
}

pub fn build_request(
    dialect: Dialect,
    model: &str,
    sampling: &Sampling,
    credential: &str,
    prompt: &str,
) -> WireRequest {
    let bearer = || vec![("authorization", format!("Bearer {credential}"))];
    match dialect {
        Dialect::OpenaiChat | Dialect::CohereChat => {
            let mut body = json!({
                "model": model,
                "messages": [{"role": "user", "content": prompt}],
            });
            if let Some(t) = sampling.temperature {
                body["temperature"] = json!(t);
            }
            if let Some(m) = sampling.max_tokens {
                body["max_tokens"] = json!(m);
            }
            WireRequest {
                headers: bearer(),
                body,
            }
        }
        Dialect::AnthropicMessages => {
            let mut body = json!({
                "model": model,
                "max_tokens": sampling.max_tokens.unwrap_or(ANTHROPIC_DEFAULT_MAX_TOKENS),
                "messages": [{"role": "user", "content": prompt}],
            });
            if let Some(t) = sampling.temperature {
                body["temperature"] = json!(t);
            }
            WireRequest {
                headers: vec![
                    ("x-api-key", credential.to_string()),
                    ("anthropic-version", ANTHROPIC_VERSION.to_string()),
                ],
                body,
            }
        }
        Dialect::GeminiGenerateContent => {
            let mut body = json!({
                "contents": [{"role": "user", "parts": [{"text": prompt}]}],
            });
            let mut generation = serde_json::Map::new();
            if let Some(t) = sampling.temperature {
                generation.insert("temperature".into(), json!(t));
            }
            if let Some(m) = sampling.max_tokens {
                generation.insert("maxOutputTokens".into(), json!(m));
            }
            if !generation.is_empty() {
                body["generationConfig"] = Value::Object(generation);
            }
            WireRequest {
                headers: vec![("x-goog-api-key", credential.to_string())],
                body,
            }
        }
        Dialect::HfTextGeneration => {
            let mut parameters = serde_json::Map::new();
            parameters.insert("return_full_text".into(), json!(false));
            if let Some(t) = sampling.temperature {
                parameters.insert("temperature".into(), json!(t));
            }
            if let Some(m) = sampling.max_tokens {
                parameters.insert("max_new_tokens".into(), json!(m));
            }
            WireRequest {
                headers: bearer(),
                body: json!({"inputs": prompt, "parameters": parameters}),
            }
        }
        Dialect::Mock => WireRequest {
            headers: vec![],
            body: json!({"prompt": prompt}),
        },
    }
}

/// Pulls the answer text out of a successful response body.
pub fn parse_response(dialect: Dialect, body: &Value) -> Result<String, ProviderError> {
    let malformed = |what: &str| ProviderError::Malformed(format!("{what} in {body}"));
    let text = match dialect {
        Dialect::OpenaiChat => body["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string),
        Dialect::AnthropicMessages => join_text(body["content"].as_array(), |part| {
            (part["type"] == "text").then(|| part["text"].as_str()).flatten()
        }),
        Dialect::GeminiGenerateContent => join_text(
            body["candidates"][0]["content"]["parts"].as_array(),
            |part| part["text"].as_str(),
        ),
        Dialect::CohereChat => join_text(body["message"]["content"].as_array(), |part| {
            part["text"].as_str()
        }),
        Dialect::HfTextGeneration => body[0]["generated_text"]
            .as_str()
            .or_else(|| body["generated_text"].as_str())
            .map(str::to_string),
        Dialect::Mock => None,
    };
    text.ok_or_else(|| malformed("no answer text"))
}

fn join_text<'a>(
    parts: Option<&'a Vec<Value>>,
    text_of: impl Fn(&'a Value) -> Option<&'a str>,
) -> Option<String> {
    let pieces: Vec<&str> = parts?.iter().filter_map(text_of).collect();
    (!pieces.is_empty()).then(|| pieces.concat())
}

pub fn classify_status(status: u16, body: String) -> ProviderError {
    match status {
        401 | 403 => ProviderError::Auth(format!("status {status}: {body}")),
        408 | 429 | 500..=599 => ProviderError::Transient(format!("status {status}: {body}")),
        _ => ProviderError::Rejected { status, body },
    }
}

pub struct HttpProvider {
    client: Client,
    dialect: Dialect,
    endpoint: String,
    model: String,
    sampling: Sampling,
    credential: String,
}

impl std::fmt::Debug for HttpProvider {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HttpProvider")
            .field("dialect", &self.dialect)
            .field("endpoint", &self.endpoint)
            .field("model", &self.model)
            .finish_non_exhaustive()
    }
}

impl HttpProvider {
    /// Reads the credential from the spec's environment variable.
    pub fn from_spec(spec: &ProviderSpec) -> Result<Self, GatewayError> {
        let config_err = |source| GatewayError::Config {
            provider_id: spec.provider_id.clone(),
            source,
        };
        spec.validate().map_err(config_err)?;
        let env_var = spec.auth_env_var.clone().unwrap_or_default();
        let credential = std::env::var(&env_var)
            .ok()
            .filter(|v| !v.is_empty())
            .ok_or_else(|| GatewayError::MissingCredential {
                provider_id: spec.provider_id.clone(),
                env_var: env_var.clone(),
            })?;
        let client = Client::builder()
            .timeout(REQUEST_TIMEOUT)
            .build()
            .map_err(|e| GatewayError::Provider {
                provider_id: spec.provider_id.clone(),
                attempts: 0,
                source: ProviderError::Transient(e.to_string()),
            })?;
        Ok(HttpProvider {
            client,
            dialect: spec.request_shape,
            endpoint: spec.endpoint.clone().unwrap_or_default(),
            model: spec.model_name.clone().unwrap_or_default(),
            sampling: spec.sampling,
            credential,
        })
    }
}

impl Provider for HttpProvider {
    fn complete(&self, prompt: &str, _repetition_index: u32) -> Result<String, ProviderError> {
        let wire = build_request(
            self.dialect,
            &self.model,
            &self.sampling,
            &self.credential,
            prompt,
        );
        let mut request = self.client.post(&self.endpoint).json(&wire.body);
        for (name, value) in &wire.headers {
            request = request.header(*name, value);
        }
        let response = request
            .send()
            .map_err(|e| ProviderError::Transient(e.to_string()))?;
        let status = response.status().as_u16();
        let text = response
            .text()
            .map_err(|e| ProviderError::Transient(e.to_string()))?;
        if !(200..300).contains(&status) {
            return Err(classify_status(status, text));
        }
        let body: Value = serde_json::from_str(&text)
            .map_err(|e| ProviderError::Malformed(format!("invalid JSON ({e}): {text}")))?;
        parse_response(self.dialect, &body)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn openai_request_shape() {
        let s = Sampling {
            temperature: Some(0.0),
            max_tokens: None,
        };
        let w = build_request(Dialect::OpenaiChat, "gpt-4o-mini", &s, "sk", "hi");
        assert_eq!(w.headers, vec![("authorization", "Bearer sk".to_string())]);
        assert_eq!(
            w.body,
            json!({"model":"gpt-4o-mini","messages":[{"role":"user","content":"hi"}],"temperature":0.0})
        );
    }

    #[test]
    fn provider_defaults_leave_sampling_out() {
        let w = build_request(Dialect::GeminiGenerateContent, "m", &Sampling::default(), "k", "hi");
        assert!(w.body.get("generationConfig").is_none());
        let w = build_request(Dialect::AnthropicMessages, "m", &Sampling::default(), "k", "hi");
        assert_eq!(w.body["max_tokens"], 1024);
        assert!(w.body.get("temperature").is_none());
    }

    #[test]
    fn parses_each_dialect() {
        let cases = [
            (
                Dialect::OpenaiChat,
                json!({"choices":[{"message":{"role":"assistant","content":"A"}}]}),
            ),
            (
                Dialect::AnthropicMessages,
                json!({"content":[{"type":"text","text":"A"}]}),
            ),
            (
                Dialect::GeminiGenerateContent,
                json!({"candidates":[{"content":{"parts":[{"text":"A"}]}}]}),
            ),
            (
                Dialect::CohereChat,
                json!({"message":{"content":[{"type":"text","text":"A"}]}}),
            ),
            (Dialect::HfTextGeneration, json!([{"generated_text":"A"}])),
        ];
        for (dialect, body) in cases {
            assert_eq!(parse_response(dialect, &body).unwrap(), "A", "{dialect:?}");
        }
        assert!(matches!(
            parse_response(Dialect::OpenaiChat, &json!({"error":"x"})),
            Err(ProviderError::Malformed(_))
        ));
    }

    #[test]
    fn status_classes() {
        assert!(matches!(classify_status(401, String::new()), ProviderError::Auth(_)));
        assert!(classify_status(429, String::new()).is_transient());
        assert!(classify_status(503, String::new()).is_transient());
        assert!(matches!(
            classify_status(400, "bad".into()),
            ProviderError::Rejected { status: 400, .. }
        ));
    }
}
