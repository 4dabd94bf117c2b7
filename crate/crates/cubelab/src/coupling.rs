//! The monotone coupling between `pi(p, k)` and `pi(p, k-1)`.
//!
//! Both kernels are built by exact enumeration of their defining
//! expectations: the conditional law of the larger vector adds one coordinate
//! chosen proportionally to the expectation of `1{Z_r = 1} / #{l : Z_l = 1,
//! x_l = 0}` over the upper law, and symmetrically for the removal direction.
//! Exactness in the rational backend is what the generator construction's
//! detailed-balance property rests on.

use crate::cond_bernoulli::{CondBernoulli, DistributionTable, SuffixTable};
use crate::cube::CubeState;
use crate::numeric::Scalar;
use crate::{Error, Result};
use rand::Rng;
use std::collections::BTreeMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// Rows indexed by `pi(p, k-1)` states, targets in `pi(p, k)`.
    Up,
    /// Rows indexed by `pi(p, k)` states, targets in `pi(p, k-1)`.
    Down,
}

/// One direction of the coupling as a row-stochastic kernel.
pub struct CouplingKernel<S: Scalar> {
    pub direction: Direction,
    pub source: DistributionTable<S>,
    pub target: DistributionTable<S>,
    rows: Vec<Vec<(usize, S)>>,
}

fn kernel_tables<S: Scalar>(
    p: &[S],
    k: usize,
) -> Result<(DistributionTable<S>, DistributionTable<S>)> {
    if k == 0 || k > p.len() {
        return Err(Error::KOutOfRange { k, n: p.len() });
    }
    let upper = CondBernoulli::new(p.to_vec(), k)?.to_table()?;
    let lower = CondBernoulli::new(p.to_vec(), k - 1)?.to_table()?;
    Ok((upper, lower))
}

/// Kernel from `pi(p, k-1)` to `pi(p, k)`: each transition adds one
/// coordinate equal to one.
pub fn up_kernel<S: Scalar>(p: &[S], k: usize) -> Result<CouplingKernel<S>> {
    let (upper, lower) = kernel_tables(p, k)?;
    let n = p.len();
    let mut rows = vec![Vec::new(); lower.len()];
    for (xi, x) in lower.support().iter().enumerate() {
        let mut row: BTreeMap<usize, S> = BTreeMap::new();
        for (z, w) in upper.support().iter().zip(upper.probs()) {
            // Coordinates where z has a one on top of x; at least one exists.
            let extra = z.bits() & !x.bits();
            let den = S::from_int(extra.count_ones() as i64);
            let share = w.clone() / den;
            for r in 0..n {
                if extra & (1u64 << (n - 1 - r)) != 0 {
                    let y = x.flip(r).expect("index in range");
                    let yi = upper.position(&y).expect("flip stays on the k-slice");
                    let entry = row.entry(yi).or_insert_with(S::zero);
                    *entry = entry.clone() + share.clone();
                }
            }
        }
        rows[xi] = row.into_iter().collect();
    }
    Ok(CouplingKernel { direction: Direction::Up, source: lower, target: upper, rows })
}

/// Kernel from `pi(p, k)` to `pi(p, k-1)`: each transition removes one
/// coordinate equal to one.
pub fn down_kernel<S: Scalar>(p: &[S], k: usize) -> Result<CouplingKernel<S>> {
    let (upper, lower) = kernel_tables(p, k)?;
    let n = p.len();
    let mut rows = vec![Vec::new(); upper.len()];
    for (xi, x) in upper.support().iter().enumerate() {
        let mut row: BTreeMap<usize, S> = BTreeMap::new();
        for (z, w) in lower.support().iter().zip(lower.probs()) {
            // Coordinates where x has a one and the lower draw has a zero.
            let extra = x.bits() & !z.bits();
            let den = S::from_int(extra.count_ones() as i64);
            let share = w.clone() / den;
            for r in 0..n {
                if extra & (1u64 << (n - 1 - r)) != 0 {
                    let y = x.flip(r).expect("index in range");
                    let yi = lower.position(&y).expect("removal stays on the (k-1)-slice");
                    let entry = row.entry(yi).or_insert_with(S::zero);
                    *entry = entry.clone() + share.clone();
                }
            }
        }
        rows[xi] = row.into_iter().collect();
    }
    Ok(CouplingKernel { direction: Direction::Down, source: upper, target: lower, rows })
}

impl<S: Scalar> CouplingKernel<S> {
    pub fn row(&self, source_index: usize) -> &[(usize, S)] {
        &self.rows[source_index]
    }

    pub fn row_sum(&self, source_index: usize) -> S {
        let mut acc = S::zero();
        for (_, w) in &self.rows[source_index] {
            acc = acc + w.clone();
        }
        acc
    }

    /// Image of the source law under the kernel, as target-aligned masses.
    pub fn pushforward(&self) -> Vec<S> {
        let mut out = vec![S::zero(); self.target.len()];
        for (xi, row) in self.rows.iter().enumerate() {
            let px = self.source.prob(xi).clone();
            for (yi, w) in row {
                out[*yi] = out[*yi].clone() + px.clone() * w.clone();
            }
        }
        out
    }

    /// Joint law keyed by (upper-state index, lower-state index) regardless of
    /// direction, so the two constructions can be compared entry by entry.
    pub fn joint(&self) -> BTreeMap<(usize, usize), S> {
        let mut out = BTreeMap::new();
        for (xi, row) in self.rows.iter().enumerate() {
            let px = self.source.prob(xi).clone();
            for (yi, w) in row {
                let key = match self.direction {
                    Direction::Up => (*yi, xi),
                    Direction::Down => (xi, *yi),
                };
                out.insert(key, px.clone() * w.clone());
            }
        }
        out
    }

    /// True when every positive transition changes exactly one coordinate,
    /// removing (down) or adding (up) a single one.
    pub fn covering_holds(&self) -> bool {
        self.rows.iter().enumerate().all(|(xi, row)| {
            let x = self.source.state(xi);
            row.iter().all(|(yi, w)| {
                if w <= &S::zero() {
                    return true;
                }
                let y = self.target.state(*yi);
                let delta = match self.direction {
                    Direction::Up => y.ones() as i64 - x.ones() as i64,
                    Direction::Down => x.ones() as i64 - y.ones() as i64,
                };
                x.hamming(y).unwrap() == 1 && delta == 1
            })
        })
    }
}

/// Draws `(Z, Z')` with `Z ~ pi(p, k)`, `Z'` from the removal kernel row of
/// `Z`; the pair differs in exactly one coordinate, which is 1 in `Z`.
pub struct PairSampler {
    spec: CondBernoulli<f64>,
    suffix: SuffixTable<f64>,
    kernel: CouplingKernel<f64>,
}

impl PairSampler {
    pub fn new(p: &[f64], k: usize) -> Result<Self> {
        let spec = CondBernoulli::new(p.to_vec(), k)?;
        let suffix = spec.suffix_table();
        let kernel = down_kernel(p, k)?;
        Ok(PairSampler { spec, suffix, kernel })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (CubeState, CubeState) {
        let z = self.spec.sample(&self.suffix, rng);
        let zi = self.kernel.source.position(&z).expect("sample lies on the slice");
        let row = self.kernel.row(zi);
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (yi, w) in row {
            acc += w;
            if u < acc {
                return (z, *self.kernel.target.state(*yi));
            }
        }
        let last = row.last().expect("k >= 1 rows are nonempty");
        (z, *self.kernel.target.state(last.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::BigRational;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::from_ratio(n, d)
    }

    fn random_rational_p(rng: &mut ChaCha12Rng, n: usize) -> Vec<BigRational> {
        (0..n).map(|_| rat(rng.gen_range(1..16), 16)).collect()
    }

    #[test]
    fn two_state_examples() {
        let p = vec![rat(1, 2), rat(1, 2)];
        let up = up_kernel(&p, 1).unwrap();
        // From 00 the added coordinate is uniform: the upper law is uniform on
        // the 1-slice and the denominator is identically 1.
        let x0 = up.source.position(&"00".parse().unwrap()).unwrap();
        let row = up.row(x0);
        assert_eq!(row.len(), 2);
        for (_, w) in row {
            assert_eq!(*w, rat(1, 2));
        }

        let down = down_kernel(&p, 1).unwrap();
        let xi = down.source.position(&"10".parse().unwrap()).unwrap();
        let row = down.row(xi);
        assert_eq!(row.len(), 1);
        assert_eq!(row[0].1, rat(1, 1));
        assert!(up_kernel(&p, 0).is_err());
    }

    #[test]
    fn rows_are_stochastic_exactly() {
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        for _ in 0..25 {
            let n = rng.gen_range(1..=8);
            let k = rng.gen_range(1..=n);
            let p = random_rational_p(&mut rng, n);
            for kernel in [up_kernel(&p, k).unwrap(), down_kernel(&p, k).unwrap()] {
                for i in 0..kernel.source.len() {
                    assert_eq!(kernel.row_sum(i), BigRational::from_int(1));
                }
                assert!(kernel.covering_holds());
            }
        }
    }

    #[test]
    fn pushforwards_are_exact() {
        let mut rng = ChaCha12Rng::seed_from_u64(23);
        for _ in 0..25 {
            let n = rng.gen_range(1..=8);
            let k = rng.gen_range(1..=n);
            let p = random_rational_p(&mut rng, n);
            let up = up_kernel(&p, k).unwrap();
            for (got, want) in up.pushforward().iter().zip(up.target.probs()) {
                assert_eq!(got, want);
            }
            let down = down_kernel(&p, k).unwrap();
            for (got, want) in down.pushforward().iter().zip(down.target.probs()) {
                assert_eq!(got, want);
            }
        }
    }

    #[test]
    fn both_directions_define_the_same_joint_law() {
        let mut rng = ChaCha12Rng::seed_from_u64(31);
        for _ in 0..20 {
            let n = rng.gen_range(1..=7);
            let k = rng.gen_range(1..=n);
            let p = random_rational_p(&mut rng, n);
            let up = up_kernel(&p, k).unwrap();
            let down = down_kernel(&p, k).unwrap();
            assert_eq!(up.joint(), down.joint());
        }
    }

    #[test]
    fn full_slice_removal_matches_lower_zero_mass() {
        // k = n: Z is all-ones, and the removal law of coordinate r equals the
        // probability that the lower draw has its zero at r (denominator 1).
        let p = vec![rat(1, 3), rat(2, 5), rat(5, 7), rat(1, 2)];
        let down = down_kernel(&p, 4).unwrap();
        assert_eq!(down.source.len(), 1);
        let row = down.row(0);
        assert_eq!(row.len(), 4);
        for (yi, w) in row {
            assert_eq!(*w, *down.target.prob(*yi));
        }
    }

    #[test]
    fn sampled_pairs_cover_and_match_marginal() {
        let p = [0.6, 0.25, 0.45, 0.3];
        let k = 2;
        let sampler = PairSampler::new(&p, k).unwrap();
        let lower = CondBernoulli::new(p.to_vec(), k - 1).unwrap().to_table().unwrap();
        let mut counts = vec![0usize; lower.len()];
        let mut rng = ChaCha12Rng::seed_from_u64(99);
        let trials = 200_000usize;
        for _ in 0..trials {
            let (z, z2) = sampler.sample(&mut rng);
            assert_eq!(z.hamming(&z2).unwrap(), 1);
            assert_eq!(z.ones(), k);
            assert_eq!(z2.ones(), k - 1);
            counts[lower.position(&z2).unwrap()] += 1;
        }
        for (c, prob) in counts.iter().zip(lower.probs()) {
            let freq = *c as f64 / trials as f64;
            let sigma = (prob * (1.0 - prob) / trials as f64).sqrt();
            assert!((freq - prob).abs() < 4.5 * sigma, "{freq} vs {prob}");
        }
    }
}
