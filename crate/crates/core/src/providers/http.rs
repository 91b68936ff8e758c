use std::time::{Duration, Instant};

use base64::Engine;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use super::{ModelProvider, ModelRequest, ModelResponse, ProviderError};

/// Connection settings for an OpenAI-compatible chat-completions endpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EndpointConfig {
    pub url: String,
    #[serde(default)]
    pub model_id: String,
    /// Name of the environment variable holding the bearer token.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auth_env_var: Option<String>,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
    /// Extra request fields (temperature, etc.) merged into the body as-is.
    #[serde(default, skip_serializing_if = "Map::is_empty")]
    pub params: Map<String, Value>,
}

fn default_timeout_ms() -> u64 {
    30_000
}

impl EndpointConfig {
    pub fn new(url: impl Into<String>, model_id: impl Into<String>) -> Self {
        EndpointConfig {
            url: url.into(),
            model_id: model_id.into(),
            auth_env_var: None,
            timeout_ms: default_timeout_ms(),
            params: Map::new(),
        }
    }

    pub(crate) fn bearer_token(&self) -> Result<Option<String>, ProviderError> {
        match &self.auth_env_var {
            None => Ok(None),
            Some(var) => std::env::var(var)
                .map(Some)
                .map_err(|_| ProviderError::AuthMissing(var.clone())),
        }
    }

    pub(crate) fn agent(&self) -> ureq::Agent {
        ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(self.timeout_ms)))
            .http_status_as_error(true)
            .build()
            .into()
    }
}

pub(crate) fn map_ureq_error(err: ureq::Error, timeout_ms: u64) -> ProviderError {
    match err {
        ureq::Error::StatusCode(code) => ProviderError::HttpStatus(code),
        ureq::Error::Timeout(_) => ProviderError::Timeout { timeout_ms },
        ureq::Error::Io(e) if e.kind() == std::io::ErrorKind::TimedOut => ProviderError::Timeout { timeout_ms },
        other => ProviderError::Transport(other.to_string()),
    }
}

pub(crate) fn elapsed_ms(start: Instant) -> i64 {
    // rounded up so that any completed request reports a positive latency
    start.elapsed().as_micros().div_ceil(1000) as i64
}

/// One multimodal completion. No retries at this layer.
pub fn http_complete(
    endpoint: &EndpointConfig,
    prompt: &str,
    image_bytes: &[u8],
    image_mime: &str,
) -> Result<ModelResponse, ProviderError> {
    complete_with(&endpoint.agent(), endpoint, prompt, image_bytes, image_mime)
}

fn complete_with(
    agent: &ureq::Agent,
    endpoint: &EndpointConfig,
    prompt: &str,
    image_bytes: &[u8],
    image_mime: &str,
) -> Result<ModelResponse, ProviderError> {
    let token = endpoint.bearer_token()?;
    let data_url = format!(
        "data:{image_mime};base64,{}",
        base64::engine::general_purpose::STANDARD.encode(image_bytes)
    );
    let mut body = json!({
        "model": endpoint.model_id,
        "messages": [{
            "role": "user",
            "content": [
                {"type": "text", "text": prompt},
                {"type": "image_url", "image_url": {"url": data_url}},
            ],
        }],
    });
    if let Value::Object(fields) = &mut body {
        for (key, value) in &endpoint.params {
            fields.insert(key.clone(), value.clone());
        }
    }

    let start = Instant::now();
    let mut request = agent.post(&endpoint.url).header("Content-Type", "application/json");
    if let Some(token) = token {
        request = request.header("Authorization", format!("Bearer {token}"));
    }
    let mut response = request
        .send(body.to_string())
        .map_err(|e| map_ureq_error(e, endpoint.timeout_ms))?;
    let text = response
        .body_mut()
        .read_to_string()
        .map_err(|e| map_ureq_error(e, endpoint.timeout_ms))?;
    let latency_ms = elapsed_ms(start);

    let value: Value = serde_json::from_str(&text).map_err(|e| ProviderError::BadResponse(e.to_string()))?;
    let content = match &value["choices"][0]["message"]["content"] {
        Value::String(s) => s.clone(),
        Value::Array(parts) => parts
            .iter()
            .filter_map(|p| p["text"].as_str())
            .collect::<Vec<_>>()
            .join(""),
        _ => return Err(ProviderError::BadResponse("missing choices[0].message.content".into())),
    };
    let usage = |key: &str| {
        value["usage"][key]
            .as_i64()
            .filter(|n| *n >= 0)
            .unwrap_or(ModelResponse::UNKNOWN_TOKENS)
    };
    Ok(ModelResponse {
        text: content,
        prompt_tokens: usage("prompt_tokens"),
        completion_tokens: usage("completion_tokens"),
        latency_ms,
        model_id: value["model"]
            .as_str()
            .map(str::to_string)
            .unwrap_or_else(|| endpoint.model_id.clone()),
    })
}

/// [`ModelProvider`] that reads the frame from disk and calls the endpoint.
pub struct HttpModelProvider {
    endpoint: EndpointConfig,
    agent: ureq::Agent,
}

impl HttpModelProvider {
    pub fn new(endpoint: EndpointConfig) -> Self {
        let agent = endpoint.agent();
        HttpModelProvider { endpoint, agent }
    }
}

impl ModelProvider for HttpModelProvider {
    fn complete(&self, request: &ModelRequest<'_>) -> Result<ModelResponse, ProviderError> {
        let path = &request.image.path;
        let bytes = std::fs::read(path).map_err(|source| ProviderError::Io {
            path: path.display().to_string(),
            source,
        })?;
        complete_with(
            &self.agent,
            &self.endpoint,
            request.prompt,
            &bytes,
            request.image.mime_type(),
        )
    }
}
