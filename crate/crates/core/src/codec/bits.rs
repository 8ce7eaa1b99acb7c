//! MSB-first bit packing.

use crate::error::{Error, Result};

#[derive(Debug, Default)]
pub struct BitWriter {
    bytes: Vec<u8>,
    acc: u64,
    filled: u32,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_bytes(bytes: Vec<u8>) -> Self {
        Self { bytes, acc: 0, filled: 0 }
    }

    /// Writes the low `width` bits of `value`.
    pub fn write(&mut self, value: u64, width: u32) {
        debug_assert!(width <= 32);
        if width == 0 {
            return;
        }
        let mask = (1u64 << width) - 1;
        self.acc = (self.acc << width) | (value & mask);
        self.filled += width;
        while self.filled >= 8 {
            self.filled -= 8;
            self.bytes.push((self.acc >> self.filled) as u8);
        }
        self.acc &= (1u64 << self.filled) - 1;
    }

    /// Two's-complement encoding of `value` in `width` bits.
    pub fn write_signed(&mut self, value: i32, width: u32) {
        self.write(value as u32 as u64, width);
    }

    /// Zero-pads to the next byte boundary.
    pub fn align(&mut self) {
        if self.filled > 0 {
            let pad = 8 - self.filled;
            self.write(0, pad);
        }
    }

    pub fn write_bytes(&mut self, bytes: &[u8]) {
        debug_assert_eq!(self.filled, 0, "byte writes must be aligned");
        self.bytes.extend_from_slice(bytes);
    }

    pub fn bit_len(&self) -> usize {
        self.bytes.len() * 8 + self.filled as usize
    }

    pub fn finish(mut self) -> Vec<u8> {
        self.align();
        self.bytes
    }
}

#[derive(Debug)]
pub struct BitReader<'a> {
    bytes: &'a [u8],
    bit_pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, bit_pos: 0 }
    }

    pub fn byte_offset(&self) -> usize {
        self.bit_pos / 8
    }

    pub fn remaining_bits(&self) -> usize {
        self.bytes.len() * 8 - self.bit_pos
    }

    pub fn read(&mut self, width: u32) -> Result<u64> {
        if width as usize > self.remaining_bits() {
            return Err(Error::Decode {
                offset: self.byte_offset(),
                reason: format!("truncated stream: need {width} bits, {} left", self.remaining_bits()),
            });
        }
        let mut v = 0u64;
        for _ in 0..width {
            let byte = self.bytes[self.bit_pos / 8];
            let bit = (byte >> (7 - self.bit_pos % 8)) & 1;
            v = (v << 1) | bit as u64;
            self.bit_pos += 1;
        }
        Ok(v)
    }

    pub fn read_signed(&mut self, width: u32) -> Result<i32> {
        let raw = self.read(width)?;
        if width == 0 {
            return Ok(0);
        }
        let shift = 64 - width;
        Ok(((raw << shift) as i64 >> shift) as i32)
    }

    pub fn align(&mut self) {
        self.bit_pos = self.bit_pos.div_ceil(8) * 8;
    }

    pub fn read_bytes(&mut self, n: usize) -> Result<&'a [u8]> {
        debug_assert_eq!(self.bit_pos % 8, 0);
        let start = self.bit_pos / 8;
        if start + n > self.bytes.len() {
            return Err(Error::Decode {
                offset: start,
                reason: format!("truncated stream: need {n} bytes, {} left", self.bytes.len() - start),
            });
        }
        self.bit_pos += 8 * n;
        Ok(&self.bytes[start..start + n])
    }

    pub fn read_u16_le(&mut self) -> Result<u16> {
        let b = self.read_bytes(2)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }

    pub fn read_u32_le(&mut self) -> Result<u32> {
        let b = self.read_bytes(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}
