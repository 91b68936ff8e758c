use std::collections::BTreeMap;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::denm::{CauseRegistry, GeoPosition};

/// 2004-01-01T00:00:00Z in Unix milliseconds.
pub const ITS_EPOCH_UNIX_MS: i64 = 1_072_915_200_000;
/// Leap seconds inserted since the ITS epoch (2005, 2008, 2012, 2015, 2016).
const ITS_LEAP_MS: i64 = 5_000;

pub fn its_now_ms() -> i64 {
    let unix_ms = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as i64)
        .unwrap_or(0);
    unix_ms - ITS_EPOCH_UNIX_MS + ITS_LEAP_MS
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Clock {
    System,
    /// Every reading returns this ITS timestamp; used for reproducible runs.
    Fixed(i64),
}

impl Clock {
    pub fn now_its_ms(self) -> i64 {
        match self {
            Clock::System => its_now_ms(),
            Clock::Fixed(t) => t,
        }
    }

    pub fn now_unix_ms(self) -> i64 {
        self.now_its_ms() + ITS_EPOCH_UNIX_MS - ITS_LEAP_MS
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CameraInfo {
    /// 1e-7 degrees.
    pub latitude: i64,
    pub longitude: i64,
    pub altitude_cm: i64,
    pub station_id: i64,
}

impl CameraInfo {
    pub fn position(&self) -> GeoPosition {
        GeoPosition {
            latitude: self.latitude,
            longitude: self.longitude,
            altitude_cm: self.altitude_cm,
        }
    }
}

/// `camera_id -> CameraInfo`, stored as a JSON object.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CameraConfig(pub BTreeMap<String, CameraInfo>);

impl CameraConfig {
    pub fn load(path: impl AsRef<Path>) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(std::io::Error::other)
    }

    pub fn get(&self, camera_id: &str) -> Option<&CameraInfo> {
        self.0.get(camera_id)
    }
}

const DETECT_TEMPLATE: &str = include_str!("../../prompts/detect.txt");
const EXTRACT_TEMPLATE: &str = include_str!("../../prompts/extract.txt");
const REPAIR_TEMPLATE: &str = include_str!("../../prompts/repair.txt");

/// Prompt templates. `extract` understands `{distance_m}` and
/// `{cause_codes}`; `repair` understands `{error}` and is appended to the
/// original prompt for the single repair attempt.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Prompts {
    pub detect: String,
    pub extract: String,
    pub repair: String,
}

impl Default for Prompts {
    fn default() -> Self {
        Prompts {
            detect: DETECT_TEMPLATE.to_string(),
            extract: EXTRACT_TEMPLATE.to_string(),
            repair: REPAIR_TEMPLATE.to_string(),
        }
    }
}

impl Prompts {
    /// Loads `detect.txt`, `extract.txt` and (optionally) `repair.txt`.
    pub fn load(dir: impl AsRef<Path>) -> std::io::Result<Self> {
        let dir = dir.as_ref();
        let repair = match std::fs::read_to_string(dir.join("repair.txt")) {
            Ok(text) => text,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => REPAIR_TEMPLATE.to_string(),
            Err(e) => return Err(e),
        };
        Ok(Prompts {
            detect: std::fs::read_to_string(dir.join("detect.txt"))?,
            extract: std::fs::read_to_string(dir.join("extract.txt"))?,
            repair,
        })
    }

    pub fn render_extract(&self, distance_m: f64, registry: &CauseRegistry) -> String {
        let codes: Vec<String> = registry.entries().map(|e| format!("{} {}", e.code, e.label)).collect();
        self.extract
            .replace("{distance_m}", &format!("{distance_m:.1}"))
            .replace("{cause_codes}", &codes.join("\n"))
    }

    pub fn render_repair(&self, original: &str, error: &str) -> String {
        format!("{original}{}", self.repair.replace("{error}", error))
    }
}
