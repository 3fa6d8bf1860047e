//! Packed bit strings, most-significant-bit first.
//!
//! Bit `i` of a string lives in word `i / 64` at bit position `63 - i % 64`,
//! so the packed words read left to right in the same order as the string.
//! Serialized form: a 64-bit big-endian bit count followed by
//! `ceil(len / 8)` bytes, first bit in the high bit of the first byte,
//! trailing pad bits zero.

use std::fmt;

use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BitsError {
    #[error("serialized bit string truncated: need {need} bytes, have {have}")]
    Truncated { need: usize, have: usize },
    #[error("non-zero padding bits in serialized bit string")]
    DirtyPadding,
    #[error("bit count {0} does not fit in memory")]
    TooLong(u64),
}

#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct BitString {
    len: usize,
    words: Vec<u64>,
}

#[inline]
fn mask(i: usize) -> u64 {
    1u64 << (63 - (i & 63))
}

impl BitString {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn with_capacity(bits: usize) -> Self {
        Self {
            len: 0,
            words: Vec::with_capacity(bits.div_ceil(64)),
        }
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        let mut words: Vec<u64> = (0..len.div_ceil(64)).map(|_| rng.random()).collect();
        clear_tail(&mut words, len);
        Self { len, words }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        bits.iter().copied().collect()
    }

    /// Parses a string of `0`/`1` characters; other characters are skipped.
    pub fn from_bit_str(s: &str) -> Self {
        s.chars()
            .filter_map(|c| match c {
                '0' => Some(false),
                '1' => Some(true),
                _ => None,
            })
            .collect()
    }

    /// Takes the low `len` bits of `value`, most significant first.
    pub fn from_u64(value: u64, len: usize) -> Self {
        assert!(len <= 64);
        (0..len)
            .map(|i| (value >> (len - 1 - i)) & 1 == 1)
            .collect()
    }

    pub fn to_u64(&self) -> u64 {
        assert!(self.len <= 64);
        self.iter().fold(0u64, |acc, b| (acc << 1) | b as u64)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        self.words[i >> 6] & mask(i) != 0
    }

    #[inline]
    pub fn set(&mut self, i: usize, bit: bool) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        if bit {
            self.words[i >> 6] |= mask(i);
        } else {
            self.words[i >> 6] &= !mask(i);
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        self.words[i >> 6] ^= mask(i);
    }

    pub fn push(&mut self, bit: bool) {
        if self.len & 63 == 0 {
            self.words.push(0);
        }
        self.len += 1;
        if bit {
            let i = self.len - 1;
            self.words[i >> 6] |= mask(i);
        }
    }

    pub fn extend_from(&mut self, other: &BitString) {
        let mut i = 0;
        while i < other.len {
            let w = (other.len - i).min(64);
            self.push_bits(other.get_bits(i, w), w);
            i += w;
        }
    }

    /// Bits `[start, start + width)` as an integer, first bit most significant.
    /// Positions past the end read as zero. `width <= 64`.
    pub fn get_bits(&self, start: usize, width: usize) -> u64 {
        assert!(width <= 64);
        if width == 0 {
            return 0;
        }
        let word = |k: usize| self.words.get(k).copied().unwrap_or(0);
        let (k, off) = (start >> 6, start & 63);
        let hi = if off == 0 {
            word(k)
        } else {
            (word(k) << off) | (word(k + 1) >> (64 - off))
        };
        let mut v = hi >> (64 - width);
        // Mask out anything past len.
        if start + width > self.len {
            let valid = self.len.saturating_sub(start);
            v &= if valid == 0 {
                0
            } else {
                u64::MAX << (width - valid) & (u64::MAX >> (64 - width))
            };
        }
        v
    }

    /// Appends the low `width` bits of `value`, most significant first.
    pub fn push_bits(&mut self, value: u64, width: usize) {
        assert!(width <= 64);
        if width == 0 {
            return;
        }
        let v = if width == 64 {
            value
        } else {
            value & ((1u64 << width) - 1)
        };
        let aligned = v << (64 - width);
        let off = self.len & 63;
        if off == 0 {
            self.words.push(aligned);
        } else {
            let last = self.words.len() - 1;
            self.words[last] |= aligned >> off;
            if off + width > 64 {
                self.words.push(aligned << (64 - off));
            }
        }
        self.len += width;
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Parity of the half-open bit range `[start, end)`.
    pub fn parity_range(&self, start: usize, end: usize) -> bool {
        assert!(start <= end && end <= self.len);
        if start == end {
            return false;
        }
        let (first, last) = (start >> 6, (end - 1) >> 6);
        let head = u64::MAX >> (start & 63);
        let tail = u64::MAX << (63 - ((end - 1) & 63));
        let ones = if first == last {
            (self.words[first] & head & tail).count_ones()
        } else {
            let mut n =
                (self.words[first] & head).count_ones() + (self.words[last] & tail).count_ones();
            for w in &self.words[first + 1..last] {
                n += w.count_ones();
            }
            n
        };
        ones & 1 == 1
    }

    pub fn parity(&self) -> bool {
        self.parity_range(0, self.len)
    }

    /// Bits `[start, end)` as a new string.
    pub fn slice(&self, start: usize, end: usize) -> BitString {
        assert!(start <= end && end <= self.len);
        let mut out = BitString::with_capacity(end - start);
        let mut i = start;
        while i < end {
            let w = (end - i).min(64);
            out.push_bits(self.get_bits(i, w), w);
            i += w;
        }
        out
    }

    /// Keeps the first `len` bits.
    pub fn truncate(&mut self, len: usize) {
        if len >= self.len {
            return;
        }
        self.len = len;
        self.words.truncate(len.div_ceil(64));
        clear_tail(&mut self.words, len);
    }

    pub fn hamming_distance(&self, other: &BitString) -> usize {
        assert_eq!(self.len, other.len, "hamming distance needs equal lengths");
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }

    pub fn xor(&self, other: &BitString) -> BitString {
        assert_eq!(self.len, other.len);
        BitString {
            len: self.len,
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(a, b)| a ^ b)
                .collect(),
        }
    }

    /// Packed words, MSB-first; bits past `len` are zero.
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn from_words(words: Vec<u64>, len: usize) -> Self {
        assert!(words.len() >= len.div_ceil(64));
        let mut words = words;
        words.truncate(len.div_ceil(64));
        clear_tail(&mut words, len);
        Self { len, words }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let nbytes = self.len.div_ceil(8);
        self.words
            .iter()
            .flat_map(|w| w.to_be_bytes())
            .take(nbytes)
            .collect()
    }

    pub fn serialize(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + self.len.div_ceil(8));
        out.extend_from_slice(&(self.len as u64).to_be_bytes());
        out.extend(self.to_bytes());
        out
    }

    /// Inverse of [`BitString::serialize`]; returns the string and the bytes consumed.
    pub fn deserialize(data: &[u8]) -> Result<(BitString, usize), BitsError> {
        if data.len() < 8 {
            return Err(BitsError::Truncated {
                need: 8,
                have: data.len(),
            });
        }
        let bits = u64::from_be_bytes(data[..8].try_into().expect("8 bytes"));
        let len = usize::try_from(bits).map_err(|_| BitsError::TooLong(bits))?;
        let nbytes = len.div_ceil(8);
        let body = &data[8..];
        if body.len() < nbytes {
            return Err(BitsError::Truncated {
                need: 8 + nbytes,
                have: data.len(),
            });
        }
        let mut words = vec![0u64; len.div_ceil(64)];
        for (k, &byte) in body[..nbytes].iter().enumerate() {
            words[k / 8] |= (byte as u64) << (56 - 8 * (k % 8));
        }
        let mut check = words.clone();
        clear_tail(&mut check, len);
        if check != words {
            return Err(BitsError::DirtyPadding);
        }
        Ok((BitString { len, words }, 8 + nbytes))
    }

    pub fn to_hex(&self) -> String {
        self.to_bytes().iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn clear_tail(words: &mut [u64], len: usize) {
    let r = len & 63;
    if r != 0 {
        if let Some(last) = words.get_mut(len >> 6) {
            *last &= u64::MAX << (64 - r);
        }
    }
}

impl FromIterator<bool> for BitString {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        let iter = iter.into_iter();
        let mut s = BitString::with_capacity(iter.size_hint().0);
        for b in iter {
            s.push(b);
        }
        s
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.len <= 128 {
            write!(f, "BitString({self})")
        } else {
            write!(
                f,
                "BitString(len={}, hex={}…)",
                self.len,
                &self.to_hex()[..32]
            )
        }
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}
