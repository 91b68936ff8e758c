use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub const MAX_LANES: usize = 13;

/// Per-lane status bits. Bit `i` describes lane `i + 1`, lane 1 being the
/// outermost (rightmost) lane.
///
/// The type itself accepts any length so that malformed messages can be
/// represented and reported by the validator; [`parse_lane_status`] is the
/// checked constructor.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct LaneStatus(Vec<bool>);

impl LaneStatus {
    pub fn from_bits(bits: Vec<bool>) -> Self {
        LaneStatus(bits)
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Builds the bit string for per-lane open flags under `polarity`.
    pub fn from_open_flags(open: &[bool], polarity: LanePolarity) -> Self {
        LaneStatus(open.iter().map(|&o| polarity.bit_for(o)).collect())
    }

    pub fn open_flags(&self, polarity: LanePolarity) -> Vec<bool> {
        self.0.iter().map(|&b| polarity.is_open(b)).collect()
    }

    /// Re-expresses the same lane states under another polarity.
    pub fn convert(&self, from: LanePolarity, to: LanePolarity) -> Self {
        Self::from_open_flags(&self.open_flags(from), to)
    }

    pub fn render(&self) -> String {
        self.0.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }
}

impl fmt::Display for LaneStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

impl Serialize for LaneStatus {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.render())
    }
}

impl<'de> Deserialize<'de> for LaneStatus {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        // Length is a validation concern, the alphabet is not.
        text.chars()
            .enumerate()
            .map(|(index, ch)| match ch {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(serde::de::Error::custom(format!(
                    "non-binary character {other:?} at index {index} in lane status"
                ))),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(LaneStatus)
    }
}

/// Meaning of a set bit in the driving-lane-status string.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LanePolarity {
    /// `1` = open, `0` = closed.
    #[default]
    OneIsOpen,
    /// `1` = closed, as in the ETSI DrivingLaneStatus definition.
    OneIsClosed,
}

impl LanePolarity {
    pub fn is_open(self, bit: bool) -> bool {
        match self {
            LanePolarity::OneIsOpen => bit,
            LanePolarity::OneIsClosed => !bit,
        }
    }

    pub fn bit_for(self, open: bool) -> bool {
        match self {
            LanePolarity::OneIsOpen => open,
            LanePolarity::OneIsClosed => !open,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LaneStatusError {
    #[error("lane status is empty")]
    EmptyInput,
    #[error("lane status has {len} characters, at most {MAX_LANES} allowed (first excess at index {MAX_LANES})")]
    TooLong { len: usize },
    #[error("non-binary character {found:?} at index {index}")]
    NonBinaryCharacter { index: usize, found: char },
}

/// Parses a `0`/`1` string of 1..=13 characters.
pub fn parse_lane_status(text: &str) -> Result<LaneStatus, LaneStatusError> {
    let mut bits = Vec::with_capacity(text.len());
    for (index, ch) in text.chars().enumerate() {
        match ch {
            '0' => bits.push(false),
            '1' => bits.push(true),
            found => return Err(LaneStatusError::NonBinaryCharacter { index, found }),
        }
    }
    if bits.is_empty() {
        return Err(LaneStatusError::EmptyInput);
    }
    if bits.len() > MAX_LANES {
        return Err(LaneStatusError::TooLong { len: bits.len() });
    }
    Ok(LaneStatus(bits))
}
