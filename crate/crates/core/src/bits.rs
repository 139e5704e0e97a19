//! Finite bitstrings and their computational-basis indices.
//!
//! A string `σ = σ(1)…σ(n)` is identified with the basis vector `|σ⟩` of
//! `ℂ^(2^n)` whose index has `σ(1)` as its most significant bit, so that
//! `|σ⟩ ⊗ |i⟩` has index `2·index(σ) + i`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Longest bitstring representable in one word.
pub const MAX_LEN: usize = 64;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bitstring {
    // Ordered by length first, then by index: the shortlex order.
    len: u8,
    bits: u64,
}

impl Bitstring {
    pub const EMPTY: Bitstring = Bitstring { len: 0, bits: 0 };

    pub fn new(len: usize, index: u64) -> Result<Self> {
        if len > MAX_LEN || (len < 64 && index >> len != 0) {
            return Err(Error::BadBitstring(format!("index {index} with length {len}")));
        }
        Ok(Bitstring { len: len as u8, bits: index })
    }

    /// Caller guarantees `index < 2^len` and `len <= 64`.
    pub(crate) fn from_index(len: usize, index: u64) -> Self {
        debug_assert!(len <= MAX_LEN && (len == 64 || index >> len == 0));
        Bitstring { len: len as u8, bits: index }
    }

    pub fn zeros(len: usize) -> Self {
        Bitstring::from_index(len, 0)
    }

    pub fn ones(len: usize) -> Self {
        let bits = if len == 64 { u64::MAX } else { (1u64 << len) - 1 };
        Bitstring::from_index(len, bits)
    }

    /// `pattern` repeated until `len` bits are filled (`0101…`).
    pub fn periodic(pattern: &str, len: usize) -> Result<Self> {
        let p: Bitstring = pattern.parse()?;
        if p.is_empty() {
            return Err(Error::BadBitstring(pattern.to_string()));
        }
        let mut out = Bitstring::EMPTY;
        for i in 0..len {
            out = out.push(p.bit(i % p.len()));
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn index(&self) -> u64 {
        self.bits
    }

    /// Bit at zero-based position `i` (position 0 is the first qubit).
    pub fn bit(&self, i: usize) -> bool {
        assert!(i < self.len(), "bit {i} out of range for length {}", self.len);
        (self.bits >> (self.len() - 1 - i)) & 1 == 1
    }

    pub fn count_ones(&self) -> usize {
        self.bits.count_ones() as usize
    }

    pub fn count_zeros(&self) -> usize {
        self.len() - self.count_ones()
    }

    /// `σi`, the string extended by one bit.
    pub fn push(&self, bit: bool) -> Self {
        assert!(self.len() < MAX_LEN, "bitstring longer than {MAX_LEN}");
        Bitstring::from_index(self.len() + 1, (self.bits << 1) | bit as u64)
    }

    /// The first `n` bits.
    pub fn prefix(&self, n: usize) -> Self {
        assert!(n <= self.len());
        if n == 0 {
            return Bitstring::EMPTY;
        }
        Bitstring::from_index(n, self.bits >> (self.len() - n))
    }

    /// Drops the last bit.
    pub fn parent(&self) -> Option<Self> {
        (!self.is_empty()).then(|| self.prefix(self.len() - 1))
    }

    pub fn is_prefix_of(&self, other: &Bitstring) -> bool {
        self.len <= other.len && other.prefix(self.len()) == *self
    }

    /// All strings of length `len` in increasing index order.
    pub fn all(len: usize) -> impl Iterator<Item = Bitstring> {
        assert!(len < 64, "cannot enumerate 2^{len} strings");
        (0..1u64 << len).map(move |i| Bitstring::from_index(len, i))
    }
}

impl fmt::Display for Bitstring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len() {
            f.write_str(if self.bit(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Bitstring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "\"{self}\"")
    }
}

impl FromStr for Bitstring {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.len() > MAX_LEN {
            return Err(Error::BadBitstring(s.to_string()));
        }
        let mut out = Bitstring::EMPTY;
        for c in s.chars() {
            out = match c {
                '0' => out.push(false),
                '1' => out.push(true),
                _ => return Err(Error::BadBitstring(s.to_string())),
            };
        }
        Ok(out)
    }
}

impl Serialize for Bitstring {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Bitstring {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_convention() {
        let s: Bitstring = "011".parse().unwrap();
        assert_eq!(s.index(), 3);
        assert!(!s.bit(0) && s.bit(1) && s.bit(2));
        assert_eq!(s.push(true).index(), 2 * 3 + 1);
        assert_eq!(s.to_string(), "011");
        assert_eq!(s.count_ones(), 2);
        assert_eq!(s.prefix(1).to_string(), "0");
        assert_eq!(s.parent().unwrap().to_string(), "01");
    }

    #[test]
    fn periodic_and_extremes() {
        assert_eq!(Bitstring::periodic("01", 5).unwrap().to_string(), "01010");
        assert_eq!(Bitstring::ones(3).to_string(), "111");
        assert_eq!(Bitstring::zeros(2).to_string(), "00");
        assert_eq!(Bitstring::ones(64).count_ones(), 64);
        assert!(Bitstring::periodic("", 3).is_err());
        assert!("01x".parse::<Bitstring>().is_err());
        assert!(Bitstring::new(2, 4).is_err());
    }

    #[test]
    fn shortlex_and_prefix() {
        let a: Bitstring = "1".parse().unwrap();
        let b: Bitstring = "00".parse().unwrap();
        assert!(a < b);
        assert!(a.is_prefix_of(&"10".parse().unwrap()));
        assert!(!a.is_prefix_of(&b));
        assert!(Bitstring::EMPTY.is_prefix_of(&b));
        assert_eq!(Bitstring::all(2).map(|s| s.to_string()).collect::<Vec<_>>(), ["00", "01", "10", "11"]);
    }
}
