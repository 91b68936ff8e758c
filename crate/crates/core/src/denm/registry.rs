use std::collections::BTreeMap;
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

const DEFAULT_REGISTRY: &str = include_str!("../../data/cause_codes.json");
const ETSI_REGISTRY: &str = include_str!("../../data/cause_codes_etsi.json");

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CauseEntry {
    pub code: i64,
    pub label: String,
    #[serde(rename = "subCauses", default)]
    pub sub_causes: BTreeMap<i64, String>,
}

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("cannot read cause registry {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed cause registry: {0}")]
    Format(#[from] serde_json::Error),
    #[error("cause code {0} listed more than once")]
    DuplicateCode(i64),
    #[error("cause code {0} outside 0..=255")]
    CodeOutOfRange(i64),
}

/// Cause-code lookup table loaded from a JSON array of
/// `{code, label, subCauses: {code: label}}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CauseRegistry {
    entries: BTreeMap<i64, CauseEntry>,
}

impl CauseRegistry {
    /// The registry shipped as the default. Registers
    /// "hazardous location - surface condition" under code 90.
    pub fn bundled() -> Self {
        Self::bundled_ref().clone()
    }

    pub fn bundled_ref() -> &'static CauseRegistry {
        static BUNDLED: OnceLock<CauseRegistry> = OnceLock::new();
        BUNDLED.get_or_init(|| Self::from_json(DEFAULT_REGISTRY).expect("bundled registry is valid"))
    }

    /// The ETSI numbering, with surface condition under code 9.
    pub fn etsi() -> Self {
        Self::from_json(ETSI_REGISTRY).expect("bundled ETSI registry is valid")
    }

    /// Resolves `default`, `etsi`, or a path to a registry file.
    pub fn resolve(name_or_path: &str) -> Result<Self, RegistryError> {
        match name_or_path {
            "default" | "" => Ok(Self::bundled()),
            "etsi" => Ok(Self::etsi()),
            path => Self::from_path(path),
        }
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, RegistryError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| RegistryError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, RegistryError> {
        let list: Vec<CauseEntry> = serde_json::from_str(text)?;
        Self::from_entries(list)
    }

    pub fn from_entries(list: Vec<CauseEntry>) -> Result<Self, RegistryError> {
        let mut entries = BTreeMap::new();
        for entry in list {
            if !(0..=255).contains(&entry.code) {
                return Err(RegistryError::CodeOutOfRange(entry.code));
            }
            let code = entry.code;
            if entries.insert(code, entry).is_some() {
                return Err(RegistryError::DuplicateCode(code));
            }
        }
        Ok(CauseRegistry { entries })
    }

    pub fn lookup(&self, code: i64) -> Option<&CauseEntry> {
        self.entries.get(&code)
    }

    pub fn contains(&self, code: i64) -> bool {
        self.entries.contains_key(&code)
    }

    pub fn entries(&self) -> impl Iterator<Item = &CauseEntry> {
        self.entries.values()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl Default for CauseRegistry {
    fn default() -> Self {
        Self::bundled()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_lookups() {
        let registry = CauseRegistry::bundled();
        assert_eq!(
            registry.lookup(90).unwrap().label,
            "hazardous location - surface condition"
        );
        assert_eq!(registry.lookup(2).unwrap().label, "accident");
        assert_eq!(
            registry.lookup(2).unwrap().sub_causes.get(&1).map(String::as_str),
            Some("multi vehicle accident")
        );
        assert!(registry.lookup(255).is_none());
        assert!(registry.lookup(9).is_none());
    }

    #[test]
    fn etsi_numbering() {
        let registry = CauseRegistry::etsi();
        assert_eq!(
            registry.lookup(9).unwrap().label,
            "hazardous location - surface condition"
        );
        assert!(registry.lookup(90).is_none());
        assert_eq!(registry.lookup(2).unwrap().label, "accident");
        assert_eq!(registry.len(), CauseRegistry::bundled().len());
    }

    #[test]
    fn rejects_duplicates() {
        let text = r#"[{"code":1,"label":"a","subCauses":{}},{"code":1,"label":"b","subCauses":{}}]"#;
        assert!(matches!(
            CauseRegistry::from_json(text),
            Err(RegistryError::DuplicateCode(1))
        ));
    }

    #[test]
    fn lookup_is_pure() {
        let registry = CauseRegistry::bundled();
        for code in 0..=255 {
            assert_eq!(registry.lookup(code), registry.lookup(code));
        }
    }
}
