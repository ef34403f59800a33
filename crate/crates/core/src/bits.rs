//! Finite binary strings, the basic cylinder names of Cantor space.

use std::fmt;
use std::str::FromStr;

use crate::dyadic::Dyadic;
use crate::error::{Error, Result};

/// A finite binary string. The derived ordering is lexicographic with a
/// proper prefix sorting before its extensions.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bits(Vec<bool>);

impl Bits {
    pub fn new() -> Self {
        Bits(Vec::new())
    }

    pub fn from_bools(bits: Vec<bool>) -> Self {
        Bits(bits)
    }

    /// The string of `len` bits spelling `index` in binary, most significant bit first.
    pub fn from_index(index: u64, len: usize) -> Self {
        debug_assert!(len >= 64 || index < (1u64 << len));
        Bits(
            (0..len)
                .map(|i| {
                    let shift = len - 1 - i;
                    shift < 64 && (index >> shift) & 1 == 1
                })
                .collect(),
        )
    }

    /// Inverse of [`Bits::from_index`]. Only meaningful for strings of at most 64 bits.
    pub fn to_index(&self) -> u64 {
        self.0.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64)
    }

    pub fn repeat(bit: bool, len: usize) -> Self {
        Bits(vec![bit; len])
    }

    /// All strings of length `len` in lexicographic order.
    pub fn all(len: usize) -> impl Iterator<Item = Bits> {
        assert!(len < 64, "cannot enumerate 2^{len} strings");
        (0..(1u64 << len)).map(move |i| Bits::from_index(i, len))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<bool> {
        self.0.get(i).copied()
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        self.0.iter().copied()
    }

    pub fn push(&mut self, bit: bool) {
        self.0.push(bit);
    }

    pub fn extend_from(&mut self, other: &Bits) {
        self.0.extend_from_slice(&other.0);
    }

    /// `self` followed by a single bit.
    pub fn child(&self, bit: bool) -> Bits {
        let mut v = Vec::with_capacity(self.0.len() + 1);
        v.extend_from_slice(&self.0);
        v.push(bit);
        Bits(v)
    }

    pub fn concat(&self, other: &Bits) -> Bits {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Bits(v)
    }

    /// The first `n` bits (or the whole string when shorter).
    pub fn prefix(&self, n: usize) -> Bits {
        Bits(self.0[..n.min(self.0.len())].to_vec())
    }

    pub fn is_prefix_of(&self, other: &Bits) -> bool {
        other.0.starts_with(&self.0)
    }

    pub fn comparable(&self, other: &Bits) -> bool {
        self.is_prefix_of(other) || other.is_prefix_of(self)
    }

    /// The dyadic `0.b_0 b_1 ... b_{n-1}`.
    pub fn value(&self) -> Dyadic {
        let mut num = num_bigint::BigInt::from(0u8);
        for &b in &self.0 {
            num <<= 1;
            if b {
                num += 1;
            }
        }
        Dyadic::new(num, self.0.len() as u64)
    }

    /// Every bit flipped.
    pub fn complement(&self) -> Bits {
        Bits(self.0.iter().map(|b| !b).collect())
    }

    /// Even positions (first component of an interleaving `a ⊕ b`).
    pub fn evens(&self) -> Bits {
        Bits(self.0.iter().step_by(2).copied().collect())
    }

    /// Odd positions (second component of an interleaving).
    pub fn odds(&self) -> Bits {
        Bits(self.0.iter().skip(1).step_by(2).copied().collect())
    }

    /// `a(0) b(0) a(1) b(1) ...`, stopping when either side runs out.
    pub fn interleave(a: &Bits, b: &Bits) -> Bits {
        let mut out = Vec::with_capacity(a.len() + b.len());
        for i in 0..a.len().max(b.len()) {
            match a.get(i) {
                Some(x) => out.push(x),
                None => break,
            }
            match b.get(i) {
                Some(y) => out.push(y),
                None => break,
            }
        }
        Bits(out)
    }

    pub fn count_ones(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    /// Strips trailing zeros; two strings naming the same left endpoint of
    /// the unit interval share this form.
    pub fn trim_trailing_zeros(&self) -> Bits {
        let end = self.0.iter().rposition(|&b| b).map_or(0, |i| i + 1);
        Bits(self.0[..end].to_vec())
    }
}

impl From<Vec<bool>> for Bits {
    fn from(v: Vec<bool>) -> Self {
        Bits(v)
    }
}

impl FromIterator<bool> for Bits {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        Bits(iter.into_iter().collect())
    }
}

impl FromStr for Bits {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::parse("bit string", format!("unexpected {other:?}"))),
            })
            .collect()
    }
}

impl fmt::Display for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "\"{self}\"")
    }
}

impl serde::Serialize for Bits {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for Bits {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Checks that no string in `set` is a proper prefix of another.
/// Returns the first offending pair.
pub fn find_prefix_violation(set: &[Bits]) -> Option<(Bits, Bits)> {
    let mut sorted: Vec<&Bits> = set.iter().collect();
    sorted.sort();
    sorted.dedup();
    // In lexicographic order an extension directly follows some prefix chain,
    // so checking neighbours suffices.
    sorted
        .windows(2)
        .find(|w| w[0].is_prefix_of(w[1]))
        .map(|w| (w[0].clone(), w[1].clone()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(s: &str) -> Bits {
        s.parse().unwrap()
    }

    #[test]
    fn index_round_trip() {
        for len in 0..6 {
            for (i, s) in Bits::all(len).enumerate() {
                assert_eq!(s.len(), len);
                assert_eq!(s.to_index(), i as u64);
            }
        }
        assert_eq!(Bits::from_index(5, 4), b("0101"));
    }

    #[test]
    fn lexicographic_order() {
        assert!(b("0") < b("00"));
        assert!(b("011") < b("1"));
        assert!(b("") < b("0"));
    }

    #[test]
    fn interleaving() {
        let z = Bits::interleave(&b("01"), &b("11"));
        assert_eq!(z, b("0111"));
        assert_eq!(z.evens(), b("01"));
        assert_eq!(z.odds(), b("11"));
    }

    #[test]
    fn value_of_prefix() {
        assert_eq!(b("011").value(), Dyadic::from_ratio(3, 3));
        assert_eq!(b("").value(), Dyadic::zero());
    }

    #[test]
    fn prefix_violation() {
        assert!(find_prefix_violation(&[b("0"), b("01")]).is_some());
        assert!(find_prefix_violation(&[b("00"), b("01"), b("1")]).is_none());
        assert!(find_prefix_violation(&[b("0"), b("10"), b("011")]).is_some());
    }

    #[test]
    fn rejects_garbage() {
        assert!("01x".parse::<Bits>().is_err());
    }
}
