//! Dense metric depth maps.
//!
//! Grid text format:
//!
//! ```text
//! P-DEPTH <width> <height>
//! <width * height whitespace-separated metres, row-major; `nan` = invalid>
//! ```

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use thiserror::Error;

use super::http::{elapsed_ms, map_ureq_error};
use super::{EndpointConfig, ImageRef, ProviderError};

#[derive(Clone, Debug, PartialEq)]
pub struct DepthResult {
    pub width: usize,
    pub height: usize,
    /// Row-major, metres; NaN marks invalid pixels.
    pub depths_m: Vec<f64>,
}

impl DepthResult {
    pub fn new(width: usize, height: usize, depths_m: Vec<f64>) -> Result<Self, DepthError> {
        if depths_m.len() != width * height {
            return Err(DepthError::DimensionMismatch {
                expected: width * height,
                found: depths_m.len(),
            });
        }
        Ok(DepthResult {
            width,
            height,
            depths_m,
        })
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Self {
        DepthResult {
            width,
            height,
            depths_m: vec![value; width * height],
        }
    }

    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.depths_m[y * self.width + x]
    }
}

#[derive(Debug, Error)]
pub enum DepthError {
    #[error("bad depth grid: {0}")]
    BadFormat(String),
    #[error("depth grid declares {expected} values, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Provider(#[from] ProviderError),
}

pub fn parse_depth_grid(text: &str) -> Result<DepthResult, DepthError> {
    let mut tokens = text.split_ascii_whitespace();
    if tokens.next() != Some("P-DEPTH") {
        return Err(DepthError::BadFormat("missing P-DEPTH header".into()));
    }
    let mut dim = |name: &str| -> Result<usize, DepthError> {
        tokens
            .next()
            .and_then(|t| t.parse::<usize>().ok())
            .filter(|n| *n > 0)
            .ok_or_else(|| DepthError::BadFormat(format!("invalid {name} in header")))
    };
    let width = dim("width")?;
    let height = dim("height")?;
    let mut depths = Vec::with_capacity(width * height);
    for (index, token) in tokens.enumerate() {
        let value: f64 = token
            .parse()
            .map_err(|_| DepthError::BadFormat(format!("value {index} is not a number: {token:?}")))?;
        if !value.is_nan() && !(value > 0.0 && value.is_finite()) {
            return Err(DepthError::BadFormat(format!(
                "value {index} is {value}; depths must be positive and finite or nan"
            )));
        }
        depths.push(value);
    }
    DepthResult::new(width, height, depths)
}

pub fn render_depth_grid(depth: &DepthResult) -> String {
    let mut out = format!("P-DEPTH {} {}\n", depth.width, depth.height);
    for row in depth.depths_m.chunks(depth.width) {
        let line: Vec<String> = row
            .iter()
            .map(|v| if v.is_nan() { "nan".to_string() } else { v.to_string() })
            .collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
    out
}

pub fn depth_from_file(path: impl AsRef<Path>) -> Result<DepthResult, DepthError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| DepthError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_depth_grid(&text)
}

/// Posts raw image bytes and parses the grid returned in the response body.
pub fn depth_http(endpoint: &EndpointConfig, image_bytes: &[u8], image_mime: &str) -> Result<DepthResult, DepthError> {
    depth_http_with(&endpoint.agent(), endpoint, image_bytes, image_mime)
}

fn depth_http_with(
    agent: &ureq::Agent,
    endpoint: &EndpointConfig,
    image_bytes: &[u8],
    image_mime: &str,
) -> Result<DepthResult, DepthError> {
    let token = endpoint.bearer_token()?;
    let start = Instant::now();
    let mut request = agent.post(&endpoint.url).header("Content-Type", image_mime);
    if let Some(token) = token {
        request = request.header("Authorization", format!("Bearer {token}"));
    }
    let mut response = request
        .send(image_bytes)
        .map_err(|e| map_ureq_error(e, endpoint.timeout_ms))?;
    let text = response
        .body_mut()
        .read_to_string()
        .map_err(|e| map_ureq_error(e, endpoint.timeout_ms))?;
    log::debug!("depth request took {} ms", elapsed_ms(start));
    parse_depth_grid(&text)
}

/// Source of depth maps for a frame. Must tolerate concurrent calls.
pub trait DepthProvider: Send + Sync {
    fn depth(&self, image: &ImageRef) -> Result<DepthResult, DepthError>;
}

/// Reads `<dir>/<image_id>.pdepth`.
pub struct DepthDirProvider {
    dir: PathBuf,
}

impl DepthDirProvider {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        DepthDirProvider { dir: dir.into() }
    }

    pub fn path_for(&self, image_id: &str) -> PathBuf {
        self.dir.join(format!("{image_id}.pdepth"))
    }
}

impl DepthProvider for DepthDirProvider {
    fn depth(&self, image: &ImageRef) -> Result<DepthResult, DepthError> {
        depth_from_file(self.path_for(&image.image_id))
    }
}

pub struct HttpDepthProvider {
    endpoint: EndpointConfig,
    agent: ureq::Agent,
}

impl HttpDepthProvider {
    pub fn new(endpoint: EndpointConfig) -> Self {
        let agent = endpoint.agent();
        HttpDepthProvider { endpoint, agent }
    }
}

impl DepthProvider for HttpDepthProvider {
    fn depth(&self, image: &ImageRef) -> Result<DepthResult, DepthError> {
        let bytes = std::fs::read(&image.path).map_err(|source| DepthError::Io {
            path: image.path.display().to_string(),
            source,
        })?;
        depth_http_with(&self.agent, &self.endpoint, &bytes, image.mime_type())
    }
}

impl<P: DepthProvider + ?Sized> DepthProvider for Box<P> {
    fn depth(&self, image: &ImageRef) -> Result<DepthResult, DepthError> {
        (**self).depth(image)
    }
}

impl<P: DepthProvider + ?Sized> DepthProvider for std::sync::Arc<P> {
    fn depth(&self, image: &ImageRef) -> Result<DepthResult, DepthError> {
        (**self).depth(image)
    }
}
