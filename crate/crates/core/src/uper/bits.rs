//! Bit-level primitives for unaligned PER.

use super::UperError;

/// Number of bits needed for a constrained whole number over `lb..=ub`.
pub fn range_bits(lb: i64, ub: i64) -> u32 {
    debug_assert!(lb <= ub);
    let span = (ub as i128 - lb as i128) as u128;
    128 - span.leading_zeros()
}

/// Append-only, MSB-first bit buffer.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BitSink {
    bytes: Vec<u8>,
    bit_length: usize,
}

impl BitSink {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bit_length(&self) -> usize {
        self.bit_length
    }

    pub fn write_bit(&mut self, bit: bool) {
        let offset = self.bit_length % 8;
        if offset == 0 {
            self.bytes.push(0);
        }
        if bit {
            *self.bytes.last_mut().unwrap() |= 0x80 >> offset;
        }
        self.bit_length += 1;
    }

    /// Writes the low `width` bits of `value`, most significant first.
    pub fn write_bits(&mut self, value: u64, width: u32) {
        debug_assert!(width <= 64);
        for i in (0..width).rev() {
            self.write_bit(value >> i & 1 == 1);
        }
    }

    /// Octets with the final byte zero-padded.
    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }

    /// Bits written so far as a `0`/`1` string; handy in tests.
    pub fn to_bit_string(&self) -> String {
        (0..self.bit_length)
            .map(|i| {
                if self.bytes[i / 8] & (0x80 >> (i % 8)) != 0 {
                    '1'
                } else {
                    '0'
                }
            })
            .collect()
    }
}

/// MSB-first reader over a byte slice.
#[derive(Clone, Debug)]
pub struct BitSource<'a> {
    bytes: &'a [u8],
    cursor: usize,
}

impl<'a> BitSource<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        BitSource { bytes, cursor: 0 }
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn remaining(&self) -> usize {
        self.bytes.len() * 8 - self.cursor
    }

    pub fn read_bit(&mut self) -> Result<bool, UperError> {
        Ok(self.read_bits(1)? == 1)
    }

    pub fn read_bits(&mut self, width: u32) -> Result<u64, UperError> {
        let width_usize = width as usize;
        if width_usize > self.remaining() {
            return Err(UperError::truncated(width_usize, self.remaining()));
        }
        let mut value = 0u64;
        for _ in 0..width {
            let bit = self.bytes[self.cursor / 8] & (0x80 >> (self.cursor % 8)) != 0;
            value = value << 1 | bit as u64;
            self.cursor += 1;
        }
        Ok(value)
    }
}

/// Constrained whole number: `value - lb` in `range_bits(lb, ub)` bits.
pub fn write_constrained_int(sink: &mut BitSink, value: i64, lb: i64, ub: i64) -> Result<(), UperError> {
    if lb > ub || value < lb || value > ub {
        return Err(UperError::OutOfRange { value, lb, ub });
    }
    let offset = (value as i128 - lb as i128) as u64;
    sink.write_bits(offset, range_bits(lb, ub));
    Ok(())
}

pub fn read_constrained_int(src: &mut BitSource<'_>, lb: i64, ub: i64) -> Result<i64, UperError> {
    let width = range_bits(lb, ub);
    let offset = src.read_bits(width)?;
    let span = (ub as i128 - lb as i128) as u64;
    if offset > span {
        return Err(UperError::DecodedOutOfRange {
            field: String::new(),
            offset,
            span,
        });
    }
    Ok((lb as i128 + offset as i128) as i64)
}

/// SIZE-constrained BIT STRING: length as a constrained number, then the bits.
pub fn write_sized_bitstring(
    sink: &mut BitSink,
    bits: &[bool],
    min_len: usize,
    max_len: usize,
) -> Result<(), UperError> {
    if bits.len() < min_len || bits.len() > max_len {
        return Err(UperError::LengthOutOfRange {
            len: bits.len(),
            min: min_len,
            max: max_len,
        });
    }
    write_constrained_int(sink, bits.len() as i64, min_len as i64, max_len as i64)?;
    for &bit in bits {
        sink.write_bit(bit);
    }
    Ok(())
}

pub fn read_sized_bitstring(src: &mut BitSource<'_>, min_len: usize, max_len: usize) -> Result<Vec<bool>, UperError> {
    let len = read_constrained_int(src, min_len as i64, max_len as i64)? as usize;
    (0..len).map(|_| src.read_bit()).collect()
}
