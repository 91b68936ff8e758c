//! Unaligned PER codec for the DENM subset.
//!
//! The layout is a non-extensible ASN.1 SEQUENCE tree (see
//! `docs/wire-format.md`), so each container starts with one presence bit
//! per OPTIONAL component followed by its fields in declaration order.

mod bits;
mod codec;
mod hex;

pub use self::bits::{
    range_bits, read_constrained_int, read_sized_bitstring, write_constrained_int, write_sized_bitstring, BitSink,
    BitSource,
};
pub use self::codec::{decode_denm, decode_fragment, encode_denm, encode_fragment, PerCodec};
pub use self::hex::{hex_to_payload, payload_to_hex, read_uper_file, write_uper_file};

use thiserror::Error;

use crate::denm::ValidationReport;

/// Encoded octets plus the exact number of meaningful bits.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct UperPayload {
    pub octets: Vec<u8>,
    pub bit_length: usize,
}

impl UperPayload {
    pub fn from_sink(sink: BitSink) -> Self {
        let bit_length = sink.bit_length();
        UperPayload {
            octets: sink.into_bytes(),
            bit_length,
        }
    }

    /// Payload whose exact bit length is unknown (e.g. read from hex);
    /// every octet is counted as meaningful.
    pub fn from_octets(octets: Vec<u8>) -> Self {
        let bit_length = octets.len() * 8;
        UperPayload { octets, bit_length }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum UperError {
    #[error("value {value} outside {lb}..={ub}")]
    OutOfRange { value: i64, lb: i64, ub: i64 },
    #[error("bit string length {len} outside {min}..={max}")]
    LengthOutOfRange { len: usize, min: usize, max: usize },
    #[error("truncated at {field}: need {needed} bits, {remaining} left")]
    Truncated {
        field: String,
        needed: usize,
        remaining: usize,
    },
    #[error("decoded offset {offset} exceeds range span {span} at {field}")]
    DecodedOutOfRange { field: String, offset: u64, span: u64 },
    #[error("padding bits after the message are not zero")]
    NonZeroPadding,
    #[error("{count} trailing octets after the message")]
    TrailingData { count: usize },
    #[error("message fails validation ({} violations)", .0.violations.len())]
    InvalidMessage(ValidationReport),
    #[error("bad hex character {found:?} at position {position}")]
    BadHexCharacter { position: usize, found: char },
    #[error("hex text has odd length")]
    OddLength,
}

impl UperError {
    pub(crate) fn truncated(needed: usize, remaining: usize) -> Self {
        UperError::Truncated {
            field: String::new(),
            needed,
            remaining,
        }
    }

    /// Attaches a field path to decoder errors raised by the primitives.
    pub(crate) fn at(self, path: &str) -> Self {
        match self {
            UperError::Truncated { needed, remaining, .. } => UperError::Truncated {
                field: path.to_string(),
                needed,
                remaining,
            },
            UperError::DecodedOutOfRange { offset, span, .. } => UperError::DecodedOutOfRange {
                field: path.to_string(),
                offset,
                span,
            },
            other => other,
        }
    }
}
