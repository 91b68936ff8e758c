use std::path::Path;

use super::{UperError, UperPayload};

/// Uppercase hex, no separators.
pub fn payload_to_hex(payload: &UperPayload) -> String {
    hex::encode_upper(&payload.octets)
}

/// Case-insensitive hex with an optional trailing newline.
pub fn hex_to_payload(text: &str) -> Result<UperPayload, UperError> {
    let trimmed = text
        .strip_suffix('\n')
        .map(|t| t.strip_suffix('\r').unwrap_or(t))
        .unwrap_or(text);
    match hex::decode(trimmed) {
        Ok(octets) => Ok(UperPayload::from_octets(octets)),
        Err(hex::FromHexError::OddLength) => Err(UperError::OddLength),
        Err(hex::FromHexError::InvalidHexCharacter { c, index }) => Err(UperError::BadHexCharacter {
            position: index,
            found: c,
        }),
        Err(hex::FromHexError::InvalidStringLength) => Err(UperError::OddLength),
    }
}

/// `.uper` file body: one line of uppercase hex plus a newline.
pub fn write_uper_file(path: impl AsRef<Path>, payload: &UperPayload) -> std::io::Result<()> {
    let mut line = payload_to_hex(payload);
    line.push('\n');
    std::fs::write(path, line)
}

pub fn read_uper_file(path: impl AsRef<Path>) -> std::io::Result<Result<UperPayload, UperError>> {
    Ok(hex_to_payload(&std::fs::read_to_string(path)?))
}
