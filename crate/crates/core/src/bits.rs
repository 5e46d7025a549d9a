//! Fixed-length bit strings.
//!
//! Bit `i` lives in byte `i / 8` at position `i % 8`, counting from the least
//! significant bit. Hex encodings are lowercase with byte 0 first, so the
//! 4-bit string `1000` (bit 0 set) encodes as `01`.

use std::cmp::Ordering;
use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitString {
    len: usize,
    bytes: Vec<u8>,
}

impl BitString {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            bytes: vec![0; len.div_ceil(8)],
        }
    }

    /// Builds a bit string from storage bytes. Bits beyond `len` must be zero.
    pub fn from_bytes(bytes: Vec<u8>, len: usize) -> Result<Self> {
        if bytes.len() != len.div_ceil(8) {
            return Err(Error::LengthMismatch {
                expected: len.div_ceil(8) * 8,
                actual: bytes.len() * 8,
            });
        }
        let s = Self { len, bytes };
        if s.trailing_garbage() {
            return Err(Error::Parse(format!(
                "bits beyond length {len} are not zero"
            )));
        }
        Ok(s)
    }

    /// Builds a bit string from bytes, zeroing every bit at index `len` or above.
    pub fn from_bytes_truncated(mut bytes: Vec<u8>, len: usize) -> Self {
        bytes.resize(len.div_ceil(8), 0);
        let mut s = Self { len, bytes };
        s.clear_tail();
        s
    }

    /// The low `len` bits of `value`, `len <= 64`.
    pub fn from_u64(value: u64, len: usize) -> Self {
        assert!(len <= 64, "from_u64 supports at most 64 bits");
        let mut s = Self::zeros(len);
        for (i, byte) in s.bytes.iter_mut().enumerate() {
            *byte = (value >> (8 * i)) as u8;
        }
        s.clear_tail();
        s
    }

    /// Parses a bit string from `0`/`1` characters, bit 0 first.
    pub fn from_bit_str(s: &str) -> Result<Self> {
        let mut out = Self::zeros(s.len());
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => out.set(i, true),
                _ => return Err(Error::Parse(format!("invalid bit character {c:?}"))),
            }
        }
        Ok(out)
    }

    /// Parses lowercase or uppercase hex. Without `len` the length is 8 bits
    /// per byte.
    pub fn from_hex(hex: &str, len: Option<usize>) -> Result<Self> {
        let hex = hex.trim();
        if !hex.len().is_multiple_of(2) {
            return Err(Error::Parse("hex string has odd length".into()));
        }
        let bytes = (0..hex.len())
            .step_by(2)
            .map(|i| {
                u8::from_str_radix(&hex[i..i + 2], 16)
                    .map_err(|_| Error::Parse(format!("invalid hex {:?}", &hex[i..i + 2])))
            })
            .collect::<Result<Vec<u8>>>()?;
        let len = len.unwrap_or(bytes.len() * 8);
        Self::from_bytes(bytes, len)
    }

    pub fn to_hex(&self) -> String {
        use fmt::Write;
        self.bytes.iter().fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        (self.bytes[i / 8] >> (i % 8)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, bit: bool) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        if bit {
            self.bytes[i / 8] |= 1 << (i % 8);
        } else {
            self.bytes[i / 8] &= !(1 << (i % 8));
        }
    }

    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        self.bytes[i / 8] ^= 1 << (i % 8);
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub fn count_ones(&self) -> usize {
        self.bytes.iter().map(|b| b.count_ones() as usize).sum()
    }

    /// Value as an unsigned integer (bit 0 least significant), if it fits.
    pub fn to_u64(&self) -> Option<u64> {
        if self.len > 64 {
            return None;
        }
        Some(
            self.bytes
                .iter()
                .enumerate()
                .fold(0u64, |acc, (i, &b)| acc | (b as u64) << (8 * i)),
        )
    }

    /// Bits `start .. start + len` as a new string.
    pub fn extract(&self, start: usize, len: usize) -> BitString {
        assert!(start + len <= self.len, "extract out of range");
        let mut out = Self::zeros(len);
        for i in 0..len {
            if self.get(start + i) {
                out.set(i, true);
            }
        }
        out
    }

    /// Copy of `self` with length `len`, truncating or zero-extending.
    pub fn resized(&self, len: usize) -> BitString {
        Self::from_bytes_truncated(self.bytes.clone(), len)
    }

    pub fn concat<'a>(parts: impl IntoIterator<Item = &'a BitString>) -> BitString {
        let mut out = BitString::default();
        for p in parts {
            out.append(p);
        }
        out
    }

    pub fn append(&mut self, other: &BitString) {
        let start = self.len;
        self.len += other.len;
        self.bytes.resize(self.len.div_ceil(8), 0);
        if start.is_multiple_of(8) {
            self.bytes[start / 8..start / 8 + other.bytes.len()].copy_from_slice(&other.bytes);
            return;
        }
        for i in 0..other.len {
            if other.get(i) {
                self.set(start + i, true);
            }
        }
    }

    pub fn xor(&self, other: &BitString) -> Result<BitString> {
        self.check_len(other.len)?;
        let bytes = self
            .bytes
            .iter()
            .zip(&other.bytes)
            .map(|(a, b)| a ^ b)
            .collect();
        Ok(BitString {
            len: self.len,
            bytes,
        })
    }

    /// Number of set bits at indices `>= from`.
    pub fn ones_from(&self, from: usize) -> usize {
        (from..self.len).filter(|&i| self.get(i)).count()
    }

    /// Compares as unsigned integers, bit 0 least significant.
    pub fn cmp_numeric(&self, other: &BitString) -> Ordering {
        let n = self.bytes.len().max(other.bytes.len());
        for i in (0..n).rev() {
            let a = self.bytes.get(i).copied().unwrap_or(0);
            let b = other.bytes.get(i).copied().unwrap_or(0);
            match a.cmp(&b) {
                Ordering::Equal => continue,
                o => return o,
            }
        }
        Ordering::Equal
    }

    pub(crate) fn check_len(&self, expected: usize) -> Result<()> {
        if self.len != expected {
            return Err(Error::LengthMismatch {
                expected,
                actual: self.len,
            });
        }
        Ok(())
    }

    fn clear_tail(&mut self) {
        if !self.len.is_multiple_of(8) {
            if let Some(last) = self.bytes.last_mut() {
                *last &= (1u8 << (self.len % 8)) - 1;
            }
        }
    }

    fn trailing_garbage(&self) -> bool {
        !self.len.is_multiple_of(8)
            && self
                .bytes
                .last()
                .is_some_and(|b| b >> (self.len % 8) != 0)
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({}, {})", self.len, self.to_hex())
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_hex())
    }
}
