//! The conditional Bernoulli law `pi(p, k)`: independent Bernoulli(p_i)
//! conditioned on their sum being exactly `k`.
//!
//! The same DP recursions drive both arithmetic backends. Success
//! probabilities are restricted to the open interval (0, 1); degenerate
//! coordinates are emulated by [`CondBernoulli::condition`].

use crate::cube::{enumerate_slice, CubeState, ENUMERATION_GUARD};
use crate::numeric::Scalar;
use crate::{Error, Result};
use rand::Rng;
use std::collections::HashMap;

/// `P(B_1 + ... + B_n = m)` for independent Bernoulli(p_i), by the standard
/// forward recursion over coordinates.
pub fn poisson_binomial<S: Scalar>(p: &[S], m: usize) -> Result<S> {
    if m > p.len() {
        return Err(Error::KOutOfRange { k: m, n: p.len() });
    }
    let mut dp = vec![S::zero(); m + 1];
    dp[0] = S::one();
    for pi in p {
        let qi = S::one() - pi.clone();
        for j in (0..=m).rev() {
            let stay = dp[j].clone() * qi.clone();
            let step = if j > 0 { dp[j - 1].clone() * pi.clone() } else { S::zero() };
            dp[j] = stay + step;
        }
    }
    Ok(dp[m].clone())
}

/// Suffix table `t[j][m] = P(B_j + ... + B_{n-1} = m)` (0-based, `t[n][0]=1`).
///
/// One table serves both the sequential sampler and inclusion probabilities.
pub struct SuffixTable<S> {
    t: Vec<Vec<S>>,
}

impl<S: Scalar> SuffixTable<S> {
    pub fn new(p: &[S], kmax: usize) -> Self {
        let n = p.len();
        let mut t = vec![vec![S::zero(); kmax + 1]; n + 1];
        t[n][0] = S::one();
        for j in (0..n).rev() {
            let q = S::one() - p[j].clone();
            for m in 0..=kmax {
                let mut v = t[j + 1][m].clone() * q.clone();
                if m > 0 {
                    v = v + t[j + 1][m - 1].clone() * p[j].clone();
                }
                t[j][m] = v;
            }
        }
        SuffixTable { t }
    }

    /// `P(sum of B_j..B_{n-1} = m)`; zero outside the stored range.
    pub fn prob(&self, j: usize, m: usize) -> S {
        self.t
            .get(j)
            .and_then(|row| row.get(m))
            .cloned()
            .unwrap_or_else(S::zero)
    }
}

/// Parameters of `pi(p, k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CondBernoulli<S: Scalar> {
    p: Vec<S>,
    k: usize,
}

impl<S: Scalar> CondBernoulli<S> {
    pub fn new(p: Vec<S>, k: usize) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::InvalidParameter("empty probability vector".into()));
        }
        for (i, pi) in p.iter().enumerate() {
            if *pi <= S::zero() || *pi >= S::one() {
                return Err(Error::ProbabilityOutOfRange { index: i, value: pi.to_f64() });
            }
        }
        if k > p.len() {
            return Err(Error::KOutOfRange { k, n: p.len() });
        }
        Ok(CondBernoulli { p, k })
    }

    pub fn n(&self) -> usize {
        self.p.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn p(&self) -> &[S] {
        &self.p
    }

    pub fn suffix_table(&self) -> SuffixTable<S> {
        SuffixTable::new(&self.p, self.k)
    }

    /// `P(kappa(B) = k)`, the conditioning normalizer.
    pub fn normalizer(&self) -> S {
        poisson_binomial(&self.p, self.k).expect("k validated at construction")
    }

    /// Probability of the single state `x`.
    pub fn pmf(&self, x: &CubeState) -> Result<S> {
        if x.len() != self.n() {
            return Err(Error::LengthMismatch(x.len(), self.n()));
        }
        if x.ones() != self.k {
            return Ok(S::zero());
        }
        let mut w = S::one();
        for (i, pi) in self.p.iter().enumerate() {
            let factor = if x.get(i) { pi.clone() } else { S::one() - pi.clone() };
            w = w * factor;
        }
        Ok(w / self.normalizer())
    }

    /// `P(X_i = 1) = p_i P(kappa(B_{!=i}) = k-1) / P(kappa(B) = k)`.
    pub fn inclusion_probability(&self, i: usize) -> Result<S> {
        if i >= self.n() {
            return Err(Error::IndexOutOfRange { index: i, n: self.n() });
        }
        if self.k == 0 {
            return Ok(S::zero());
        }
        let mut rest = Vec::with_capacity(self.n() - 1);
        rest.extend_from_slice(&self.p[..i]);
        rest.extend_from_slice(&self.p[i + 1..]);
        let reduced = poisson_binomial(&rest, self.k - 1)?;
        Ok(self.p[i].clone() * reduced / self.normalizer())
    }

    /// Law of the remaining coordinates given `X_i = b_i` on the assigned set;
    /// the result lives on the coordinates not mentioned in `assignment`,
    /// order preserved.
    pub fn condition(&self, assignment: &[(usize, bool)]) -> Result<CondBernoulli<S>> {
        let mut fixed: Vec<Option<bool>> = vec![None; self.n()];
        for &(i, b) in assignment {
            if i >= self.n() {
                return Err(Error::IndexOutOfRange { index: i, n: self.n() });
            }
            if fixed[i].is_some() {
                return Err(Error::InvalidParameter(format!("coordinate {i} assigned twice")));
            }
            fixed[i] = Some(b);
        }
        let ones_fixed = assignment.iter().filter(|&&(_, b)| b).count();
        if ones_fixed > self.k {
            return Err(Error::Infeasible(format!(
                "{ones_fixed} ones assigned but k = {}",
                self.k
            )));
        }
        let remaining = self.n() - assignment.len();
        let k_rem = self.k - ones_fixed;
        if k_rem > remaining {
            return Err(Error::Infeasible(format!(
                "{k_rem} ones left for {remaining} free coordinates"
            )));
        }
        if remaining == 0 {
            return Err(Error::Infeasible("no free coordinates left".into()));
        }
        let p_rem: Vec<S> = fixed
            .iter()
            .zip(&self.p)
            .filter(|(f, _)| f.is_none())
            .map(|(_, pi)| pi.clone())
            .collect();
        CondBernoulli::new(p_rem, k_rem)
    }

    /// Explicit finite measure: support is the whole `k`-slice.
    pub fn to_table(&self) -> Result<DistributionTable<S>> {
        if self.n() > ENUMERATION_GUARD {
            return Err(Error::GuardExceeded {
                what: "distribution table",
                n: self.n(),
                guard: ENUMERATION_GUARD,
            });
        }
        let support = enumerate_slice(self.n(), self.k)?;
        let z = self.normalizer();
        let probs = support
            .iter()
            .map(|x| {
                let mut w = S::one();
                for (i, pi) in self.p.iter().enumerate() {
                    let f = if x.get(i) { pi.clone() } else { S::one() - pi.clone() };
                    w = w * f;
                }
                w / z.clone()
            })
            .collect();
        DistributionTable::new(support, probs)
    }
}

impl CondBernoulli<f64> {
    /// Exact draw by sequential conditioning against the suffix table.
    pub fn sample<R: Rng + ?Sized>(&self, table: &SuffixTable<f64>, rng: &mut R) -> CubeState {
        let n = self.n();
        let mut bools = vec![false; n];
        let mut remaining = self.k;
        for i in 0..n {
            if remaining == 0 {
                break;
            }
            let w1 = self.p[i] * table.prob(i + 1, remaining - 1);
            let w0 = (1.0 - self.p[i]) * table.prob(i + 1, remaining);
            let take = rng.gen::<f64>() * (w0 + w1) < w1;
            if take {
                bools[i] = true;
                remaining -= 1;
            }
        }
        CubeState::from_bools(&bools).expect("n validated at construction")
    }
}

/// A finite measure as explicit (state, probability) rows, support distinct
/// and row sums 1 within 1e-12 (exact in the rational backend).
#[derive(Clone, Debug)]
pub struct DistributionTable<S> {
    support: Vec<CubeState>,
    probs: Vec<S>,
    index: HashMap<u64, usize>,
}

impl<S: Scalar> DistributionTable<S> {
    pub fn new(support: Vec<CubeState>, probs: Vec<S>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::EmptySet("distribution support"));
        }
        if support.len() != probs.len() {
            return Err(Error::LengthMismatch(support.len(), probs.len()));
        }
        let n = support[0].len();
        let mut index = HashMap::with_capacity(support.len());
        for (i, s) in support.iter().enumerate() {
            if s.len() != n {
                return Err(Error::LengthMismatch(s.len(), n));
            }
            if index.insert(s.bits(), i).is_some() {
                return Err(Error::InvalidParameter(format!("duplicate support state {s}")));
            }
        }
        let total: f64 = probs.iter().map(|p| p.to_f64()).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(DistributionTable { support, probs, index })
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn n(&self) -> usize {
        self.support[0].len()
    }

    pub fn support(&self) -> &[CubeState] {
        &self.support
    }

    pub fn probs(&self) -> &[S] {
        &self.probs
    }

    pub fn state(&self, i: usize) -> &CubeState {
        &self.support[i]
    }

    pub fn prob(&self, i: usize) -> &S {
        &self.probs[i]
    }

    pub fn position(&self, x: &CubeState) -> Option<usize> {
        self.index.get(&x.bits()).copied().filter(|&i| self.support[i].len() == x.len())
    }

    /// Mass of a state; zero off the support.
    pub fn prob_of(&self, x: &CubeState) -> S {
        self.position(x).map(|i| self.probs[i].clone()).unwrap_or_else(S::zero)
    }

    /// `k` when every support state has the same number of ones.
    pub fn homogeneous_degree(&self) -> Option<usize> {
        let k = self.support[0].ones();
        self.support.iter().all(|s| s.ones() == k).then_some(k)
    }

    /// Expectation of a function table aligned with the support.
    pub fn expectation(&self, f: &[S]) -> S {
        debug_assert_eq!(f.len(), self.len());
        let mut acc = S::zero();
        for (p, v) in self.probs.iter().zip(f) {
            acc = acc + p.clone() * v.clone();
        }
        acc
    }

    /// Total mass of the states satisfying `event`.
    pub fn mass_where(&self, event: impl Fn(&CubeState) -> bool) -> S {
        let mut acc = S::zero();
        for (s, p) in self.support.iter().zip(&self.probs) {
            if event(s) {
                acc = acc + p.clone();
            }
        }
        acc
    }

    /// Conditional expectation of `f` given `event`; errors when the event
    /// has zero mass.
    pub fn conditional_expectation(
        &self,
        f: &[S],
        event: impl Fn(&CubeState) -> bool,
    ) -> Result<S> {
        let mut mass = S::zero();
        let mut acc = S::zero();
        for ((s, p), v) in self.support.iter().zip(&self.probs).zip(f) {
            if event(s) {
                mass = mass + p.clone();
                acc = acc + p.clone() * v.clone();
            }
        }
        if mass.is_zero() {
            return Err(Error::ZeroProbabilityEvent);
        }
        Ok(acc / mass)
    }

    pub fn map_probs<T: Scalar>(&self, f: impl Fn(&S) -> T) -> DistributionTable<T> {
        DistributionTable {
            support: self.support.clone(),
            probs: self.probs.iter().map(f).collect(),
            index: self.index.clone(),
        }
    }

    pub fn to_f64(&self) -> DistributionTable<f64> {
        self.map_probs(|p| p.to_f64())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::BigRational;
    use num_traits::Zero;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::from_ratio(n, d)
    }

    fn st(s: &str) -> CubeState {
        s.parse().unwrap()
    }

    /// Brute-force oracle: enumerate all 2^n outcomes of the product measure.
    fn poisson_binomial_oracle(p: &[BigRational], m: usize) -> BigRational {
        let n = p.len();
        let mut acc = BigRational::from_int(0);
        for bits in 0..1u64 << n {
            let x = CubeState::from_bits(n, bits).unwrap();
            if x.ones() != m {
                continue;
            }
            let mut w = BigRational::from_int(1);
            for (i, pi) in p.iter().enumerate() {
                w *= if x.get(i) { pi.clone() } else { BigRational::from_int(1) - pi.clone() };
            }
            acc += w;
        }
        acc
    }

    #[test]
    fn poisson_binomial_examples() {
        assert_eq!(poisson_binomial(&[rat(1, 2), rat(1, 2)], 1).unwrap(), rat(1, 2));
        // p = (1/2, 1/3, 1/4), m = 1: oracle over all 8 outcomes gives 11/24.
        let p = vec![rat(1, 2), rat(1, 3), rat(1, 4)];
        assert_eq!(poisson_binomial_oracle(&p, 1), rat(11, 24));
        assert_eq!(poisson_binomial(&p, 1).unwrap(), rat(11, 24));
        assert!(poisson_binomial(&p, 4).is_err());
    }

    #[test]
    fn poisson_binomial_normalizes() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for _ in 0..20 {
            let n = rng.gen_range(1..=12);
            let p: Vec<BigRational> =
                (0..n).map(|_| rat(rng.gen_range(1..32), 32)).collect();
            let total: BigRational = (0..=n)
                .map(|m| poisson_binomial(&p, m).unwrap())
                .fold(BigRational::from_int(0), |a, b| a + b);
            assert_eq!(total, BigRational::from_int(1));
        }
    }

    #[test]
    fn pmf_matches_slice_enumeration() {
        // p = (1/2, 1/3, 1/4), k = 1: normalize the product weights on the
        // 1-slice: 100 -> 6/11, 010 -> 3/11, 001 -> 2/11.
        let spec = CondBernoulli::new(vec![rat(1, 2), rat(1, 3), rat(1, 4)], 1).unwrap();
        assert_eq!(spec.pmf(&st("100")).unwrap(), rat(6, 11));
        assert_eq!(spec.pmf(&st("010")).unwrap(), rat(3, 11));
        assert_eq!(spec.pmf(&st("001")).unwrap(), rat(2, 11));
        assert_eq!(spec.pmf(&st("110")).unwrap(), rat(0, 1));
        assert!(spec.pmf(&st("10")).is_err());

        let sym = CondBernoulli::new(vec![rat(1, 2), rat(1, 2)], 1).unwrap();
        assert_eq!(sym.pmf(&st("10")).unwrap(), rat(1, 2));
        assert_eq!(sym.pmf(&st("01")).unwrap(), rat(1, 2));
    }

    #[test]
    fn rejects_degenerate_probabilities() {
        assert!(CondBernoulli::new(vec![0.0, 0.5], 1).is_err());
        assert!(CondBernoulli::new(vec![1.0, 0.5], 1).is_err());
        assert!(CondBernoulli::new(vec![0.5], 2).is_err());
    }

    #[test]
    fn table_is_exact_in_rational_mode() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for _ in 0..15 {
            let n = rng.gen_range(1..=8);
            let k = rng.gen_range(0..=n);
            let p: Vec<BigRational> = (0..n).map(|_| rat(rng.gen_range(1..16), 16)).collect();
            let spec = CondBernoulli::new(p.clone(), k).unwrap();
            let table = spec.to_table().unwrap();
            let total = table
                .probs()
                .iter()
                .fold(BigRational::from_int(0), |a, b| a + b.clone());
            assert_eq!(total, BigRational::from_int(1));
            // Naive product-then-condition oracle.
            let z = poisson_binomial_oracle(&p, k);
            for (s, prob) in table.support().iter().zip(table.probs()) {
                let mut w = BigRational::from_int(1);
                for (i, pi) in p.iter().enumerate() {
                    w *= if s.get(i) { pi.clone() } else { BigRational::from_int(1) - pi.clone() };
                }
                assert_eq!(*prob, w / z.clone());
            }
        }
    }

    #[test]
    fn inclusion_probability_examples() {
        // Uniform slice: P(X_i = 1) = k/n by exchangeability.
        let spec = CondBernoulli::new(vec![rat(2, 5); 6], 2).unwrap();
        for i in 0..6 {
            assert_eq!(spec.inclusion_probability(i).unwrap(), rat(1, 3));
        }
        // Matches the pmf mass of {x_i = 1}, and sums to k.
        let spec = CondBernoulli::new(vec![rat(1, 2), rat(1, 3), rat(1, 4)], 1).unwrap();
        assert_eq!(spec.inclusion_probability(0).unwrap(), rat(6, 11));
        let table = spec.to_table().unwrap();
        let mut total = BigRational::from_int(0);
        for i in 0..3 {
            let incl = spec.inclusion_probability(i).unwrap();
            assert_eq!(incl, table.mass_where(|s| s.get(i)));
            total += incl;
        }
        assert_eq!(total, BigRational::from_int(1));
        assert!(spec.inclusion_probability(3).is_err());
    }

    #[test]
    fn conditioning_matches_table_restriction() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        for _ in 0..10 {
            let n = rng.gen_range(2..=8);
            let k = rng.gen_range(0..=n);
            let p: Vec<BigRational> = (0..n).map(|_| rat(rng.gen_range(1..16), 16)).collect();
            let spec = CondBernoulli::new(p, k).unwrap();
            let table = spec.to_table().unwrap();
            let i = rng.gen_range(0..n);
            let b = rng.gen_bool(0.5);
            let cond = match spec.condition(&[(i, b)]) {
                Ok(c) => c,
                Err(_) => continue, // infeasible assignment
            };
            // pi(p_{!=i}, k - b) per the single-coordinate conditioning identity.
            assert_eq!(cond.k(), k - usize::from(b));
            let sub = cond.to_table().unwrap();
            let mass = table.mass_where(|s| s.get(i) == b);
            if mass.is_zero() {
                continue;
            }
            for (s, prob) in sub.support().iter().zip(sub.probs()) {
                let full = s.insert(i, b).unwrap();
                assert_eq!(*prob, table.prob_of(&full) / mass.clone());
            }
        }
    }

    #[test]
    fn conditioning_on_everything_requires_consistency() {
        let spec = CondBernoulli::new(vec![rat(1, 2), rat(1, 3)], 1).unwrap();
        assert!(spec.condition(&[(0, true), (1, false)]).is_err()); // no coordinates left
        assert!(spec.condition(&[(0, true), (1, true)]).is_err()); // kappa mismatch
    }

    #[test]
    fn sampler_respects_degenerate_slices() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let zero = CondBernoulli::new(vec![0.3, 0.6, 0.2], 0).unwrap();
        let t = zero.suffix_table();
        for _ in 0..50 {
            assert_eq!(zero.sample(&t, &mut rng).ones(), 0);
        }
        let full = CondBernoulli::new(vec![0.3, 0.6, 0.2], 3).unwrap();
        let t = full.suffix_table();
        for _ in 0..50 {
            assert_eq!(full.sample(&t, &mut rng).ones(), 3);
        }
    }

    #[test]
    fn sampler_frequencies_match_pmf() {
        // n = 3, p = (1/2, 1/3, 1/4), k = 1; expected law (6/11, 3/11, 2/11).
        let spec = CondBernoulli::new(vec![0.5, 1.0 / 3.0, 0.25], 1).unwrap();
        let table = spec.suffix_table();
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        let trials = 1_000_000usize;
        let mut counts = [0usize; 3];
        for _ in 0..trials {
            let x = spec.sample(&table, &mut rng);
            for i in 0..3 {
                if x.get(i) {
                    counts[i] += 1;
                }
            }
        }
        let expected = [6.0 / 11.0, 3.0 / 11.0, 2.0 / 11.0];
        for i in 0..3 {
            let freq = counts[i] as f64 / trials as f64;
            let sigma = (expected[i] * (1.0 - expected[i]) / trials as f64).sqrt();
            assert!(
                (freq - expected[i]).abs() < 4.0 * sigma,
                "coordinate {i}: {freq} vs {} (4 sigma = {})",
                expected[i],
                4.0 * sigma
            );
        }
    }

    #[test]
    fn exchangeable_case_is_uniform_slice() {
        let spec = CondBernoulli::new(vec![rat(3, 7); 5], 2).unwrap();
        let table = spec.to_table().unwrap();
        for prob in table.probs() {
            assert_eq!(*prob, rat(1, 10));
        }
    }
}
