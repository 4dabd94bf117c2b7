//! Binary-vector state space: flips, swaps, Hamming distances, slice
//! enumeration.
//!
//! States are packed into a `u64` with coordinate 0 as the most significant of
//! the `n` used bits, so the numeric order of the packed value is the
//! lexicographic order of the 0/1 string. Serialized form is that string,
//! coordinate 0 leftmost.

use crate::{Error, Result};
use std::fmt;
use std::str::FromStr;

/// Largest dimension for which slices and cubes are enumerated.
pub const ENUMERATION_GUARD: usize = 24;
/// Largest dimension representable in the packed state.
pub const PACKED_GUARD: usize = 63;

/// A point of the discrete cube `{0,1}^n`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CubeState {
    n: usize,
    bits: u64,
}

impl CubeState {
    /// The all-zeros state.
    pub fn zeros(n: usize) -> Result<Self> {
        if n == 0 || n > PACKED_GUARD {
            return Err(Error::InvalidParameter(format!(
                "state length {n} outside 1..={PACKED_GUARD}"
            )));
        }
        Ok(CubeState { n, bits: 0 })
    }

    /// Build from the packed representation; `bits` must fit in `n` bits.
    pub fn from_bits(n: usize, bits: u64) -> Result<Self> {
        let mut s = Self::zeros(n)?;
        if n < 64 && bits >> n != 0 {
            return Err(Error::InvalidParameter(format!(
                "bit pattern {bits:#x} does not fit in {n} coordinates"
            )));
        }
        s.bits = bits;
        Ok(s)
    }

    pub fn from_bools(coords: &[bool]) -> Result<Self> {
        let mut s = Self::zeros(coords.len())?;
        for (i, &b) in coords.iter().enumerate() {
            if b {
                s.bits |= s.coord_mask(i);
            }
        }
        Ok(s)
    }

    fn coord_mask(&self, i: usize) -> u64 {
        1u64 << (self.n - 1 - i)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false // n >= 1 by construction
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    /// Coordinate `i` (0-based).
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.n);
        self.bits & self.coord_mask(i) != 0
    }

    /// Number of ones, the paper's kappa.
    pub fn ones(&self) -> usize {
        self.bits.count_ones() as usize
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.n {
            Err(Error::IndexOutOfRange { index: i, n: self.n })
        } else {
            Ok(())
        }
    }

    /// The state with coordinate `i` negated.
    pub fn flip(&self, i: usize) -> Result<Self> {
        self.check_index(i)?;
        Ok(CubeState { n: self.n, bits: self.bits ^ self.coord_mask(i) })
    }

    /// The state with coordinates `i` and `j` exchanged; equals `self` when
    /// they agree, and preserves the number of ones.
    pub fn swap(&self, i: usize, j: usize) -> Result<Self> {
        self.check_index(i)?;
        self.check_index(j)?;
        if self.get(i) == self.get(j) {
            return Ok(*self);
        }
        Ok(CubeState {
            n: self.n,
            bits: self.bits ^ self.coord_mask(i) ^ self.coord_mask(j),
        })
    }

    /// Hamming distance to `other`.
    pub fn hamming(&self, other: &Self) -> Result<usize> {
        if self.n != other.n {
            return Err(Error::LengthMismatch(self.n, other.n));
        }
        Ok((self.bits ^ other.bits).count_ones() as usize)
    }

    /// Removes coordinate `i`, keeping the order of the rest.
    pub fn delete(&self, i: usize) -> Result<Self> {
        self.check_index(i)?;
        if self.n == 1 {
            return Err(Error::InvalidParameter("cannot delete from a length-1 state".into()));
        }
        let low_width = self.n - 1 - i;
        let low = self.bits & ((1u64 << low_width) - 1);
        let high = self.bits >> (low_width + 1);
        Ok(CubeState { n: self.n - 1, bits: (high << low_width) | low })
    }

    /// Inserts value `b` as the new coordinate `i`, shifting the rest right.
    pub fn insert(&self, i: usize, b: bool) -> Result<Self> {
        if i > self.n {
            return Err(Error::IndexOutOfRange { index: i, n: self.n + 1 });
        }
        if self.n + 1 > PACKED_GUARD {
            return Err(Error::InvalidParameter("insert exceeds packed width".into()));
        }
        let low_width = self.n - i;
        let low = self.bits & ((1u64 << low_width) - 1);
        let high = self.bits >> low_width;
        let bit = if b { 1u64 << low_width } else { 0 };
        Ok(CubeState { n: self.n + 1, bits: (high << (low_width + 1)) | bit | low })
    }
}

impl fmt::Display for CubeState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n {
            write!(f, "{}", if self.get(i) { '1' } else { '0' })?;
        }
        Ok(())
    }
}

impl fmt::Debug for CubeState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CubeState({self})")
    }
}

impl FromStr for CubeState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let coords: Vec<bool> = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::InvalidParameter(format!("invalid state char {other:?}"))),
            })
            .collect::<Result<_>>()?;
        Self::from_bools(&coords)
    }
}

/// Nonnegative coordinate weights for the weighted Hamming distance.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        for (i, &a) in alpha.iter().enumerate() {
            if !(a >= 0.0) {
                return Err(Error::NegativeWeight(i));
            }
        }
        Ok(WeightVector(alpha))
    }

    pub fn ones(n: usize) -> Self {
        WeightVector(vec![1.0; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Sorted copy, largest weight first.
    pub fn nonincreasing_rearrangement(&self) -> Self {
        let mut v = self.0.clone();
        v.sort_by(|a, b| b.partial_cmp(a).unwrap());
        WeightVector(v)
    }

    /// Squared Euclidean norm.
    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|a| a * a).sum()
    }
}

/// Weighted Hamming distance `sum_i alpha_i 1{x_i != y_i}`.
pub fn weighted_hamming(alpha: &WeightVector, x: &CubeState, y: &CubeState) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    if alpha.len() != x.len() {
        return Err(Error::LengthMismatch(alpha.len(), x.len()));
    }
    let mut d = 0.0;
    for i in 0..x.len() {
        if x.get(i) != y.get(i) {
            d += alpha.as_slice()[i];
        }
    }
    Ok(d)
}

/// All states with exactly `k` ones, in lexicographic order.
pub fn enumerate_slice(n: usize, k: usize) -> Result<Vec<CubeState>> {
    if n == 0 || n > ENUMERATION_GUARD {
        return Err(Error::GuardExceeded { what: "slice enumeration", n, guard: ENUMERATION_GUARD });
    }
    if k > n {
        return Err(Error::KOutOfRange { k, n });
    }
    if k == 0 {
        return Ok(vec![CubeState::zeros(n)?]);
    }
    // Gosper's hack walks the k-subsets in increasing numeric order, which is
    // the lexicographic order of the 0/1 string under MSB-first packing.
    let mut out = Vec::new();
    let limit = 1u64 << n;
    let mut v = (1u64 << k) - 1;
    while v < limit {
        out.push(CubeState::from_bits(n, v)?);
        let c = v & v.wrapping_neg();
        let r = v + c;
        if r >= limit {
            break;
        }
        v = r | (((v ^ r) >> 2) / c);
    }
    Ok(out)
}

/// All `2^n` states in lexicographic order.
pub fn enumerate_cube(n: usize) -> Result<Vec<CubeState>> {
    if n == 0 || n > ENUMERATION_GUARD {
        return Err(Error::GuardExceeded { what: "cube enumeration", n, guard: ENUMERATION_GUARD });
    }
    (0..1u64 << n).map(|b| CubeState::from_bits(n, b)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::binomial;
    use proptest::prelude::*;

    fn st(s: &str) -> CubeState {
        s.parse().unwrap()
    }

    #[test]
    fn hamming_examples() {
        assert_eq!(st("000").hamming(&st("000")).unwrap(), 0);
        assert_eq!(st("101").hamming(&st("010")).unwrap(), 3);
        assert!(st("10").hamming(&st("100")).is_err());
    }

    #[test]
    fn weighted_hamming_examples() {
        let x = st("10");
        let y = st("01");
        assert_eq!(weighted_hamming(&WeightVector::new(vec![2.0, 0.0]).unwrap(), &x, &y).unwrap(), 2.0);
        assert!(WeightVector::new(vec![1.0, -0.5]).is_err());
    }

    #[test]
    fn flip_examples() {
        assert_eq!(st("000").flip(0).unwrap(), st("100"));
        assert!(st("000").flip(3).is_err());
    }

    #[test]
    fn swap_examples() {
        assert_eq!(st("10").swap(0, 1).unwrap(), st("01"));
        assert_eq!(st("11").swap(0, 1).unwrap(), st("11"));
    }

    #[test]
    fn swap_preserves_ones_exhaustively() {
        for n in 1..=10usize {
            for bits in 0..1u64 << n {
                let x = CubeState::from_bits(n, bits).unwrap();
                for i in 0..n {
                    for j in 0..n {
                        assert_eq!(x.swap(i, j).unwrap().ones(), x.ones());
                    }
                }
            }
        }
    }

    #[test]
    fn slice_examples() {
        let s = enumerate_slice(2, 1).unwrap();
        assert_eq!(s, vec![st("01"), st("10")]);
        assert_eq!(enumerate_slice(3, 0).unwrap(), vec![st("000")]);
        assert_eq!(enumerate_slice(10, 4).unwrap().len() as u64, binomial(10, 4));
        assert!(enumerate_slice(3, 4).is_err());
        assert!(enumerate_slice(30, 2).is_err());
    }

    #[test]
    fn slice_counts_match_binomial() {
        for n in 1..=12usize {
            for k in 0..=n {
                let s = enumerate_slice(n, k).unwrap();
                assert_eq!(s.len() as u64, binomial(n, k));
                let mut seen = s.clone();
                seen.dedup();
                assert_eq!(seen.len(), s.len(), "duplicates in slice({n},{k})");
                assert!(s.windows(2).all(|w| w[0] < w[1]), "order in slice({n},{k})");
            }
        }
    }

    #[test]
    fn rearrangement_examples() {
        let a = WeightVector::new(vec![1.0, 3.0, 2.0]).unwrap();
        assert_eq!(a.nonincreasing_rearrangement().as_slice(), &[3.0, 2.0, 1.0]);
        let c = WeightVector::new(vec![2.0; 4]).unwrap();
        assert_eq!(c.nonincreasing_rearrangement(), c);
    }

    #[test]
    fn delete_insert_roundtrip() {
        for n in 2..=8usize {
            for bits in 0..1u64 << n {
                let x = CubeState::from_bits(n, bits).unwrap();
                for i in 0..n {
                    let d = x.delete(i).unwrap();
                    assert_eq!(d.insert(i, x.get(i)).unwrap(), x);
                }
            }
        }
    }

    #[test]
    fn string_roundtrip() {
        let x = st("01101");
        assert_eq!(x.to_string(), "01101");
        assert_eq!(x.get(0), false);
        assert_eq!(x.get(1), true);
        assert_eq!(x.ones(), 3);
    }

    proptest! {
        #[test]
        fn hamming_agrees_with_count(xb in 0u64..4096, yb in 0u64..4096) {
            let x = CubeState::from_bits(12, xb).unwrap();
            let y = CubeState::from_bits(12, yb).unwrap();
            let count = (0..12).filter(|&i| x.get(i) != y.get(i)).count();
            prop_assert_eq!(x.hamming(&y).unwrap(), count);
        }

        #[test]
        fn flip_is_involution(bits in 0u64..1024, i in 0usize..10) {
            let x = CubeState::from_bits(10, bits).unwrap();
            let f = x.flip(i).unwrap();
            prop_assert_eq!(f.flip(i).unwrap(), x);
            prop_assert_eq!(x.hamming(&f).unwrap(), 1);
        }

        #[test]
        fn weighted_hamming_matches_direct_sum(
            xb in 0u64..256,
            yb in 0u64..256,
            alpha in prop::collection::vec(0.0f64..5.0, 8),
        ) {
            let x = CubeState::from_bits(8, xb).unwrap();
            let y = CubeState::from_bits(8, yb).unwrap();
            let w = WeightVector::new(alpha.clone()).unwrap();
            let direct: f64 = (0..8).map(|i| if x.get(i) != y.get(i) { alpha[i] } else { 0.0 }).sum();
            prop_assert!((weighted_hamming(&w, &x, &y).unwrap() - direct).abs() < 1e-12);
        }

        #[test]
        fn weighted_hamming_is_pseudometric(
            xb in 0u64..1024, yb in 0u64..1024, zb in 0u64..1024,
            alpha in prop::collection::vec(0.0f64..3.0, 10),
        ) {
            let (x, y, z) = (
                CubeState::from_bits(10, xb).unwrap(),
                CubeState::from_bits(10, yb).unwrap(),
                CubeState::from_bits(10, zb).unwrap(),
            );
            let w = WeightVector::new(alpha).unwrap();
            let dxy = weighted_hamming(&w, &x, &y).unwrap();
            let dyx = weighted_hamming(&w, &y, &x).unwrap();
            let dxz = weighted_hamming(&w, &x, &z).unwrap();
            let dzy = weighted_hamming(&w, &z, &y).unwrap();
            prop_assert!((dxy - dyx).abs() < 1e-12);
            prop_assert!(dxy <= dxz + dzy + 1e-12);
        }

        #[test]
        fn unit_weights_reduce_to_hamming(xb in 0u64..512, yb in 0u64..512) {
            let x = CubeState::from_bits(9, xb).unwrap();
            let y = CubeState::from_bits(9, yb).unwrap();
            let w = WeightVector::ones(9);
            prop_assert_eq!(weighted_hamming(&w, &x, &y).unwrap() as usize, x.hamming(&y).unwrap());
        }

        #[test]
        fn rearrangement_is_permutation(alpha in prop::collection::vec(0.0f64..9.0, 1..12)) {
            let w = WeightVector::new(alpha.clone()).unwrap();
            let mut sorted = alpha;
            sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let rearranged = w.nonincreasing_rearrangement();
            prop_assert_eq!(rearranged.as_slice(), &sorted[..]);
        }
    }
}
