use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ModelProvider, ModelRequest, ModelResponse, ProviderError, Stage};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayEntry {
    pub fixture_id: String,
    pub stage: Stage,
    pub response: ModelResponse,
}

/// Recorded responses keyed by `(fixture_id, stage)`. Read-only after load.
///
/// On disk a bundle is a directory of `<fixture_id>.<stage>.json` files,
/// each holding one [`ModelResponse`].
#[derive(Clone, Debug, Default)]
pub struct ReplayBundle {
    entries: HashMap<(String, Stage), ModelResponse>,
}

impl ReplayBundle {
    pub fn load(dir: impl AsRef<Path>) -> Result<Self, ProviderError> {
        let dir = dir.as_ref();
        let io = |source| ProviderError::Io {
            path: dir.display().to_string(),
            source,
        };
        let mut entries = HashMap::new();
        for item in std::fs::read_dir(dir).map_err(io)? {
            let path = item.map_err(io)?.path();
            let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
                continue;
            };
            let Some(stem) = name.strip_suffix(".json") else {
                continue;
            };
            let (fixture_id, stage) = if let Some(id) = stem.strip_suffix(".detect") {
                (id, Stage::Detect)
            } else if let Some(id) = stem.strip_suffix(".extract") {
                (id, Stage::Extract)
            } else {
                continue;
            };
            let text = std::fs::read_to_string(&path).map_err(|source| ProviderError::Io {
                path: path.display().to_string(),
                source,
            })?;
            let response: ModelResponse = serde_json::from_str(&text)
                .map_err(|e| ProviderError::BadResponse(format!("{}: {e}", path.display())))?;
            entries.insert((fixture_id.to_string(), stage), response);
        }
        Ok(ReplayBundle { entries })
    }

    pub fn from_entries(list: impl IntoIterator<Item = ReplayEntry>) -> Result<Self, ProviderError> {
        let mut entries = HashMap::new();
        for entry in list {
            let key = (entry.fixture_id, entry.stage);
            if entries.contains_key(&key) {
                return Err(ProviderError::BadResponse(format!(
                    "duplicate replay key ({}, {})",
                    key.0,
                    key.1.as_str()
                )));
            }
            entries.insert(key, entry.response);
        }
        Ok(ReplayBundle { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, fixture_id: &str, stage: Stage) -> Option<&ModelResponse> {
        self.entries.get(&(fixture_id.to_string(), stage))
    }
}

/// Returns the stored response verbatim, token and latency figures included.
pub fn replay_complete(bundle: &ReplayBundle, fixture_id: &str, stage: Stage) -> Result<ModelResponse, ProviderError> {
    bundle
        .get(fixture_id, stage)
        .cloned()
        .ok_or_else(|| ProviderError::MissingFixture {
            fixture_id: fixture_id.to_string(),
            stage: stage.as_str(),
        })
}

impl ModelProvider for ReplayBundle {
    fn complete(&self, request: &ModelRequest<'_>) -> Result<ModelResponse, ProviderError> {
        replay_complete(self, &request.image.image_id, request.stage)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn response(text: &str) -> ModelResponse {
        ModelResponse {
            text: text.into(),
            prompt_tokens: 100,
            completion_tokens: 20,
            latency_ms: 1500,
            model_id: "m".into(),
        }
    }

    #[test]
    fn loads_directory_and_replays() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("a_01.detect.json"),
            serde_json::to_string(&response("{\"situation_type\":\"NONE\"}")).unwrap(),
        )
        .unwrap();
        std::fs::write(dir.path().join("README.md"), "ignored").unwrap();
        let bundle = ReplayBundle::load(dir.path()).unwrap();
        assert_eq!(bundle.len(), 1);
        let first = replay_complete(&bundle, "a_01", Stage::Detect).unwrap();
        let second = replay_complete(&bundle, "a_01", Stage::Detect).unwrap();
        assert_eq!(first, second);
        assert_eq!(first.latency_ms, 1500);
        assert!(matches!(
            replay_complete(&bundle, "a_01", Stage::Extract),
            Err(ProviderError::MissingFixture { .. })
        ));
        assert!(matches!(
            replay_complete(&bundle, "nope", Stage::Detect),
            Err(ProviderError::MissingFixture { .. })
        ));
    }

    #[test]
    fn rejects_duplicate_keys() {
        let entry = ReplayEntry {
            fixture_id: "x".into(),
            stage: Stage::Detect,
            response: response("{}"),
        };
        assert!(ReplayBundle::from_entries([entry.clone(), entry]).is_err());
    }
}
