//! Model and depth provider contracts with replay, file and HTTP backends.

mod depth;
mod http;
mod replay;
mod structured;

pub use depth::{
    depth_from_file, depth_http, parse_depth_grid, render_depth_grid, DepthDirProvider, DepthError, DepthProvider,
    DepthResult, HttpDepthProvider,
};
pub use http::{http_complete, EndpointConfig, HttpModelProvider};
pub use replay::{replay_complete, ReplayBundle, ReplayEntry};
pub use structured::{parse_structured_output, StructuredError};

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One frame to analyse, as listed in the run manifest.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageRef {
    pub image_id: String,
    pub path: PathBuf,
    pub camera_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub height: Option<u32>,
}

impl ImageRef {
    pub fn mime_type(&self) -> &'static str {
        match self
            .path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .as_deref()
        {
            Some("png") => "image/png",
            Some("webp") => "image/webp",
            _ => "image/jpeg",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Detect,
    Extract,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Detect => "detect",
            Stage::Extract => "extract",
        }
    }
}

/// Token counts of `-1` mean the endpoint did not report usage.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelResponse {
    pub text: String,
    pub prompt_tokens: i64,
    pub completion_tokens: i64,
    pub latency_ms: i64,
    pub model_id: String,
}

impl ModelResponse {
    pub const UNKNOWN_TOKENS: i64 = -1;

    /// Prompt plus completion tokens, when both are known.
    pub fn total_tokens(&self) -> Option<i64> {
        (self.prompt_tokens >= 0 && self.completion_tokens >= 0).then_some(self.prompt_tokens + self.completion_tokens)
    }
}

pub struct ModelRequest<'a> {
    pub image: &'a ImageRef,
    pub stage: Stage,
    pub prompt: &'a str,
    /// 0 for the first request, 1 for the repair re-prompt.
    pub attempt: u32,
}

#[derive(Debug, Error)]
pub enum ProviderError {
    #[error("no replay fixture for ({fixture_id}, {stage})")]
    MissingFixture { fixture_id: String, stage: &'static str },
    #[error("request timed out after {timeout_ms} ms")]
    Timeout { timeout_ms: u64 },
    #[error("endpoint answered HTTP {0}")]
    HttpStatus(u16),
    #[error("auth token variable {0} is not set")]
    AuthMissing(String),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("unexpected response body: {0}")]
    BadResponse(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// A multimodal text-completion backend. Implementations must tolerate
/// concurrent calls.
pub trait ModelProvider: Send + Sync {
    fn complete(&self, request: &ModelRequest<'_>) -> Result<ModelResponse, ProviderError>;
}

impl<P: ModelProvider + ?Sized> ModelProvider for Box<P> {
    fn complete(&self, request: &ModelRequest<'_>) -> Result<ModelResponse, ProviderError> {
        (**self).complete(request)
    }
}

impl<P: ModelProvider + ?Sized> ModelProvider for std::sync::Arc<P> {
    fn complete(&self, request: &ModelRequest<'_>) -> Result<ModelResponse, ProviderError> {
        (**self).complete(request)
    }
}
