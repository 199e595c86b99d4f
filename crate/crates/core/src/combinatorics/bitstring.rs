use std::fmt;
use std::str::FromStr;

use smallvec::{smallvec, SmallVec};

use crate::error::CombinatoricsError;

/// Fixed-length binary string.
///
/// Position `k` (0-based) is bit `k % 64` of word `k / 64`; strings up to 64
/// bits live in one inline word. Bits past `len` are always zero.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitString {
    len: usize,
    words: SmallVec<[u64; 1]>,
}

fn word_count(len: usize) -> usize {
    len.div_ceil(64).max(1)
}

impl BitString {
    pub fn zeros(len: usize) -> Self {
        BitString { len, words: smallvec![0; word_count(len)] }
    }

    pub fn ones(len: usize) -> Self {
        let mut s = Self::zeros(len);
        for k in 0..len {
            s.set(k, true);
        }
        s
    }

    /// Low `len` bits of `word`. `len` must be at most 64.
    pub fn from_word(len: usize, word: u64) -> Self {
        assert!(len <= 64, "from_word needs len <= 64");
        let mask = if len == 64 { u64::MAX } else { (1u64 << len) - 1 };
        BitString { len, words: smallvec![word & mask] }
    }

    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let bits: Vec<bool> = bits.into_iter().collect();
        let mut s = Self::zeros(bits.len());
        for (k, b) in bits.into_iter().enumerate() {
            s.set(k, b);
        }
        s
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// The single backing word, for strings of at most 64 bits.
    pub fn as_word(&self) -> Option<u64> {
        (self.len <= 64).then(|| self.words[0])
    }

    pub fn get(&self, k: usize) -> bool {
        assert!(k < self.len, "bit {k} out of range for length {}", self.len);
        (self.words[k / 64] >> (k % 64)) & 1 == 1
    }

    pub fn set(&mut self, k: usize, value: bool) {
        assert!(k < self.len, "bit {k} out of range for length {}", self.len);
        let mask = 1u64 << (k % 64);
        if value {
            self.words[k / 64] |= mask;
        } else {
            self.words[k / 64] &= !mask;
        }
    }

    pub fn bits(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(|k| self.get(k))
    }

    /// Number of set bits `ι(w)`.
    pub fn iota(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    fn zip_words(&self, other: &BitString, f: impl Fn(u64, u64) -> u64) -> BitString {
        assert_eq!(self.len, other.len, "bit strings of different lengths");
        BitString { len: self.len, words: self.words.iter().zip(&other.words).map(|(a, b)| f(*a, *b)).collect() }
    }

    pub fn xor(&self, other: &BitString) -> BitString {
        self.zip_words(other, |a, b| a ^ b)
    }

    pub fn and(&self, other: &BitString) -> BitString {
        self.zip_words(other, |a, b| a & b)
    }

    pub fn complement(&self) -> BitString {
        let mut s = self.clone();
        for w in s.words.iter_mut() {
            *w = !*w;
        }
        s.clear_padding();
        s
    }

    fn clear_padding(&mut self) {
        let rem = self.len % 64;
        if rem != 0 {
            let last = self.words.len() - 1;
            self.words[last] &= (1u64 << rem) - 1;
        }
        if self.len == 0 {
            self.words[0] = 0;
        }
    }

    /// Left circular shift: `(Sw)_k = w_{(k+1) mod t}`.
    pub fn shift(&self) -> BitString {
        if self.len == 0 {
            return self.clone();
        }
        let first = self.get(0);
        let mut out = self.clone();
        let n = out.words.len();
        for i in 0..n {
            let carry = if i + 1 < n { out.words[i + 1] & 1 } else { 0 };
            out.words[i] = (out.words[i] >> 1) | (carry << 63);
        }
        out.set(self.len - 1, first);
        out
    }

    /// All set bits precede all clear bits.
    pub fn is_canonical(&self) -> bool {
        let k = self.iota() as usize;
        (0..k).all(|i| self.get(i))
    }

    /// Stable sort of the bits, ones first. Returns the sorted string and the
    /// permutation that produces it.
    pub fn canonicalize(&self) -> (BitString, BitPermutation) {
        let ones = self.iota() as usize;
        let (mut next_one, mut next_zero) = (0, ones);
        let mut map = Vec::with_capacity(self.len);
        for b in self.bits() {
            if b {
                map.push(next_one);
                next_one += 1;
            } else {
                map.push(next_zero);
                next_zero += 1;
            }
        }
        let perm = BitPermutation { map };
        (perm.apply(self), perm)
    }

    /// First `k` bits.
    pub fn prefix(&self, k: usize) -> BitString {
        BitString::from_bits(self.bits().take(k))
    }

    /// Bits from position `k` on.
    pub fn suffix(&self, k: usize) -> BitString {
        BitString::from_bits(self.bits().skip(k))
    }
}

/// A permutation of bit positions: bit `k` moves to `map[k]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BitPermutation {
    map: Vec<usize>,
}

impl BitPermutation {
    pub fn identity(len: usize) -> Self {
        BitPermutation { map: (0..len).collect() }
    }

    pub fn target(&self, k: usize) -> usize {
        self.map[k]
    }

    pub fn apply(&self, w: &BitString) -> BitString {
        assert_eq!(w.len(), self.map.len());
        let mut out = BitString::zeros(w.len());
        for (k, &to) in self.map.iter().enumerate() {
            if w.get(k) {
                out.set(to, true);
            }
        }
        out
    }

    pub fn inverse(&self) -> BitPermutation {
        let mut map = vec![0; self.map.len()];
        for (k, &to) in self.map.iter().enumerate() {
            map[to] = k;
        }
        BitPermutation { map }
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.bits() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({self})")
    }
}

impl FromStr for BitString {
    type Err = String;

    /// Leftmost character is position 0.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(format!("invalid bit {other:?}")),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(BitString::from_bits)
    }
}

/// All length-`t` words with exactly `k` set bits, in increasing numeric
/// order (Gosper's hack). Only for `t <= 64`.
#[derive(Clone, Debug)]
pub struct WeightClass {
    t: u32,
    next: Option<u64>,
}

impl WeightClass {
    pub fn new(t: usize, k: usize) -> Result<Self, CombinatoricsError> {
        if t > 64 {
            return Err(CombinatoricsError::TooLong(t));
        }
        let next = if k > t {
            None
        } else if k == 64 {
            Some(u64::MAX)
        } else {
            Some((1u64 << k) - 1)
        };
        Ok(WeightClass { t: t as u32, next })
    }

    /// Same class as [`BitString`]s.
    pub fn strings(self) -> impl Iterator<Item = BitString> {
        let t = self.t as usize;
        self.map(move |w| BitString::from_word(t, w))
    }
}

impl Iterator for WeightClass {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        let cur = self.next?;
        self.next = if cur == 0 {
            None
        } else {
            let c = cur & cur.wrapping_neg();
            let (r, overflow) = cur.overflowing_add(c);
            if overflow {
                None
            } else {
                let n = (((r ^ cur) >> 2) / c) | r;
                (self.t == 64 || n >> self.t == 0).then_some(n)
            }
        };
        Some(cur)
    }
}
