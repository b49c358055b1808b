//! Binary sequences with length bookkeeping.

use crate::error::{Error, Result};
use rand::Rng;

/// An ordered sequence of bits, each 0 or 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitSequence {
    bits: Vec<u8>,
}

impl BitSequence {
    /// Build from raw values; every element must be 0 or 1.
    pub fn from_bits(bits: Vec<u8>) -> Result<Self> {
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::Usage("bit values must be 0 or 1".into()));
        }
        Ok(Self { bits })
    }

    pub fn zeros(len: usize) -> Self {
        Self { bits: vec![0; len] }
    }

    pub fn random<R: Rng>(len: usize, rng: &mut R) -> Self {
        Self {
            bits: (0..len).map(|_| rng.gen_range(0..=1u8)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.bits
    }

    pub fn push(&mut self, bit: u8) {
        debug_assert!(bit <= 1);
        self.bits.push(bit);
    }

    /// First `len` bits as a new sequence.
    pub fn truncated(&self, len: usize) -> Self {
        Self {
            bits: self.bits[..len.min(self.bits.len())].to_vec(),
        }
    }

    /// Copy extended with zero bits up to `len`.
    pub fn zero_padded(&self, len: usize) -> Self {
        let mut bits = self.bits.clone();
        bits.resize(len.max(bits.len()), 0);
        Self { bits }
    }

    pub fn xor(&self, other: &Self) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::Usage("xor of unequal-length sequences".into()));
        }
        Ok(Self {
            bits: self
                .bits
                .iter()
                .zip(&other.bits)
                .map(|(a, b)| a ^ b)
                .collect(),
        })
    }

    pub fn hamming(&self, other: &Self) -> Result<usize> {
        if self.len() != other.len() {
            return Err(Error::Usage("hamming of unequal-length sequences".into()));
        }
        Ok(self
            .bits
            .iter()
            .zip(&other.bits)
            .filter(|(a, b)| a != b)
            .count())
    }

    /// Pack into bytes, LSB-first within each byte.
    pub fn to_packed_bytes(&self) -> Vec<u8> {
        let mut out = vec![0u8; self.bits.len().div_ceil(8)];
        for (i, &b) in self.bits.iter().enumerate() {
            out[i / 8] |= b << (i % 8);
        }
        out
    }

    /// Inverse of [`to_packed_bytes`](Self::to_packed_bytes).
    pub fn from_packed_bytes(len: usize, bytes: &[u8]) -> Result<Self> {
        if bytes.len() < len.div_ceil(8) {
            return Err(Error::Framing("packed bit payload too short".into()));
        }
        let bits = (0..len).map(|i| (bytes[i / 8] >> (i % 8)) & 1).collect();
        Ok(Self { bits })
    }
}

impl std::ops::Index<usize> for BitSequence {
    type Output = u8;
    fn index(&self, i: usize) -> &u8 {
        &self.bits[i]
    }
}

impl FromIterator<u8> for BitSequence {
    fn from_iter<T: IntoIterator<Item = u8>>(iter: T) -> Self {
        Self {
            bits: iter.into_iter().map(|b| b & 1).collect(),
        }
    }
}
