//! Arithmetic backends shared by the exact and floating-point code paths.
//!
//! Distribution tables, couplings and generators are generic over [`Scalar`].
//! The rational backend distinguishes an exact zero from 1e-16, which the
//! coupling and detailed-balance checks rely on; the float backend is what the
//! experiment harness runs.

use num::BigRational;
use num_traits::{Signed, ToPrimitive};

/// A field with exact construction from integer ratios.
///
/// Implemented by `f64` (experiments) and [`BigRational`] (oracles). All DP
/// recursions in the crate are written once against this trait.
pub trait Scalar:
    Clone + std::fmt::Debug + PartialEq + PartialOrd + Signed + Send + Sync + 'static
{
    /// Largest dimension accepted by the recursive generator construction.
    const GENERATOR_GUARD: usize;
    /// True when the backend is exact (no rounding).
    const EXACT: bool;

    fn from_ratio(num: i64, den: i64) -> Self;
    fn to_f64(&self) -> f64;

    fn from_int(v: i64) -> Self {
        Self::from_ratio(v, 1)
    }
}

impl Scalar for f64 {
    const GENERATOR_GUARD: usize = 12;
    const EXACT: bool = false;

    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Scalar for BigRational {
    const GENERATOR_GUARD: usize = 9;
    const EXACT: bool = true;

    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(num.into(), den.into())
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).expect("rational out of f64 range")
    }
}

/// Binomial coefficient as u64; callers keep n at enumeration scale.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_roundtrip() {
        assert_eq!(f64::from_ratio(1, 2), 0.5);
        let r = BigRational::from_ratio(1, 3);
        assert!((Scalar::to_f64(&r) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(r + BigRational::from_ratio(2, 3), BigRational::from_int(1));
    }

    #[test]
    fn binomial_small_table() {
        // Pascal-triangle oracle.
        let mut row = vec![1u64];
        for n in 0..=12 {
            for (k, &c) in row.iter().enumerate() {
                assert_eq!(binomial(n, k), c, "C({n},{k})");
            }
            let mut next = vec![1u64];
            for i in 0..row.len() - 1 {
                next.push(row[i] + row[i + 1]);
            }
            next.push(1);
            row = next;
        }
        assert_eq!(binomial(10, 4), 210);
    }
}
