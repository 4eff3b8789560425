use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// A packed search point with a cached one-count.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitString {
    words: Vec<u64>,
    len: usize,
    ones: usize,
}

impl BitString {
    pub fn zeros(len: usize) -> Self {
        BitString {
            words: vec![0; len.div_ceil(64)],
            len,
            ones: 0,
        }
    }

    pub fn ones_vec(len: usize) -> Self {
        let mut words = vec![u64::MAX; len.div_ceil(64)];
        if !len.is_multiple_of(64) {
            if let Some(last) = words.last_mut() {
                *last = (1u64 << (len % 64)) - 1;
            }
        }
        BitString {
            words,
            len,
            ones: len,
        }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut s = BitString::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                s.words[i / 64] |= 1 << (i % 64);
            }
        }
        s.ones = bits.iter().filter(|&&b| b).count();
        s.debug_check();
        s
    }

    /// Bit `i` of the result is bit `i` of `pattern`; `len <= 64`.
    pub fn from_u64(pattern: u64, len: usize) -> Self {
        assert!(len <= 64, "from_u64 supports at most 64 bits");
        let masked = if len == 64 {
            pattern
        } else {
            pattern & ((1u64 << len) - 1)
        };
        let mut s = BitString::zeros(len);
        if len > 0 {
            s.words[0] = masked;
        }
        s.ones = masked.count_ones() as usize;
        s
    }

    /// The low 64 bits as an integer; the inverse of [`BitString::from_u64`].
    pub fn to_u64(&self) -> u64 {
        self.words.first().copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// `‖x‖₁`.
    pub fn ones(&self) -> usize {
        self.ones
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len);
        let mask = 1u64 << (i % 64);
        let word = &mut self.words[i / 64];
        let was = *word & mask != 0;
        if was != value {
            *word ^= mask;
            if value {
                self.ones += 1;
            } else {
                self.ones -= 1;
            }
        }
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub fn hamming(&self, other: &BitString) -> usize {
        debug_assert_eq!(self.len, other.len);
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }

    /// Overwrites the packed words and recomputes the one-count.
    pub(crate) fn fill_words(&mut self, f: impl FnMut(usize) -> u64) {
        let mut f = f;
        let mut ones = 0;
        for (w, word) in self.words.iter_mut().enumerate() {
            *word = f(w);
            ones += word.count_ones() as usize;
        }
        self.ones = ones;
        self.debug_check();
    }

    #[inline]
    fn debug_check(&self) {
        debug_assert_eq!(
            self.ones,
            self.words.iter().map(|w| w.count_ones() as usize).sum::<usize>()
        );
        debug_assert!(self.len.is_multiple_of(64) || self.words.last().is_none_or(|w| w >> (self.len % 64) == 0));
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({self})")
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

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::InvalidParameter(format!(
                    "bit strings contain only 0 and 1, found {other:?}"
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(BitString::from_bools(&bits))
    }
}
