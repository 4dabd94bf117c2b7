//! Reversible flip-swap rate matrices over enumerated supports.
//!
//! [`hermon_salez`] realizes the recursive construction for `pi(p, k)`: at
//! each level one coordinate is averaged out, cross-level rates come from the
//! exact coupling kernels of [`crate::coupling`], and same-level blocks are
//! the recursively built generators of the conditioned laws. Reference walks
//! (swap walk on the uniform slice, single-site dynamics on the uniform cube)
//! and a tensor product combinator complete the family, together with the
//! structural audits: detailed balance, flip-swap support, total exit rate
//! and the per-coordinate stability functional.

use crate::cond_bernoulli::{CondBernoulli, DistributionTable};
use crate::coupling::{down_kernel, up_kernel, CouplingKernel};
use crate::cube::{enumerate_cube, enumerate_slice, CubeState};
use crate::numeric::{binomial, Scalar};
use crate::{Error, Result};
use std::collections::HashMap;
use std::rc::Rc;

/// Largest product-support size accepted by [`tensorize`].
pub const TENSOR_GUARD: usize = 4096;
/// Largest dimension accepted by [`glauber_uniform`] (dense `4^n` rates).
pub const GLAUBER_GUARD: usize = 10;

/// A rate matrix `Q` with zero row sums over an enumerated support, together
/// with its stationary distribution.
#[derive(Clone, Debug)]
pub struct Generator<S: Scalar> {
    pi: DistributionTable<S>,
    rates: Vec<S>,
}

impl<S: Scalar> Generator<S> {
    fn from_parts(pi: DistributionTable<S>, mut rates: Vec<S>) -> Self {
        let m = pi.len();
        debug_assert_eq!(rates.len(), m * m);
        for i in 0..m {
            let mut exit = S::zero();
            for j in 0..m {
                if j != i {
                    exit = exit + rates[i * m + j].clone();
                }
            }
            rates[i * m + i] = -exit;
        }
        Generator { pi, rates }
    }

    pub fn n(&self) -> usize {
        self.pi.n()
    }

    pub fn size(&self) -> usize {
        self.pi.len()
    }

    pub fn support(&self) -> &[CubeState] {
        self.pi.support()
    }

    pub fn stationary(&self) -> &DistributionTable<S> {
        &self.pi
    }

    pub fn rate(&self, i: usize, j: usize) -> &S {
        &self.rates[i * self.size() + j]
    }

    pub fn row(&self, i: usize) -> &[S] {
        let m = self.size();
        &self.rates[i * m..(i + 1) * m]
    }

    /// Time change `Q -> a Q`; stability is invariant under it.
    pub fn scale(&self, a: S) -> Self {
        Generator {
            pi: self.pi.clone(),
            rates: self.rates.iter().map(|r| r.clone() * a.clone()).collect(),
        }
    }

    /// Multiplies one off-diagonal rate and repairs the row sum; a negative
    /// control for the reversibility audit.
    pub fn corrupt_rate(&mut self, i: usize, j: usize, factor: S) {
        assert_ne!(i, j, "corrupt an off-diagonal rate");
        let m = self.size();
        self.rates[i * m + j] = self.rates[i * m + j].clone() * factor;
        let mut exit = S::zero();
        for l in 0..m {
            if l != i {
                exit = exit + self.rates[i * m + l].clone();
            }
        }
        self.rates[i * m + i] = -exit;
    }

    /// `max_{x,y} |pi(x) Q(x,y) - pi(y) Q(y,x)|`.
    pub fn detailed_balance_violation(&self) -> S {
        let m = self.size();
        let mut worst = S::zero();
        for i in 0..m {
            for j in i + 1..m {
                let lhs = self.pi.prob(i).clone() * self.rates[i * m + j].clone();
                let rhs = self.pi.prob(j).clone() * self.rates[j * m + i].clone();
                let gap = (lhs - rhs).abs();
                if gap > worst {
                    worst = gap;
                }
            }
        }
        worst
    }

    /// True iff every positive off-diagonal rate connects a flip pair or a
    /// swap pair.
    pub fn is_flip_swap(&self) -> bool {
        let m = self.size();
        for i in 0..m {
            for j in 0..m {
                if i == j || self.rates[i * m + j] <= S::zero() {
                    continue;
                }
                let x = &self.support()[i];
                let y = &self.support()[j];
                let d = x.hamming(y).expect("same length");
                let swap = d == 2 && x.ones() == y.ones();
                if !(d == 1 || swap) {
                    return false;
                }
            }
        }
        true
    }

    /// `Delta(Q) = max_x -Q(x, x)`, the largest total exit rate.
    pub fn delta(&self) -> S {
        let m = self.size();
        let mut worst = S::zero();
        for i in 0..m {
            let exit = -self.rates[i * m + i].clone();
            if exit > worst {
                worst = exit;
            }
        }
        worst
    }

    /// `max_{x: pi(x) > 0, i} sum_{y: y_i != x_i} Q(x, y)`, the quantity the
    /// stability condition compares against `R rho(Q)`.
    pub fn stability_functional(&self) -> S {
        let m = self.size();
        let n = self.n();
        let mut worst = S::zero();
        for xi in 0..m {
            if self.pi.prob(xi).is_zero() {
                continue;
            }
            let x = &self.support()[xi];
            let mut per_coord = vec![S::zero(); n];
            for yi in 0..m {
                if yi == xi || self.rates[xi * m + yi] <= S::zero() {
                    continue;
                }
                let diff = x.bits() ^ self.support()[yi].bits();
                for i in 0..n {
                    if diff & (1u64 << (n - 1 - i)) != 0 {
                        per_coord[i] = per_coord[i].clone() + self.rates[xi * m + yi].clone();
                    }
                }
            }
            for v in per_coord {
                if v > worst {
                    worst = v;
                }
            }
        }
        worst
    }

    /// Upper bound on the best admissible stability constant, given a
    /// certified lower bound on the modified log-Sobolev constant.
    pub fn stability_constant(&self, rho_lower: f64) -> Result<f64> {
        if rho_lower <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "rho lower bound must be positive, got {rho_lower}"
            )));
        }
        Ok(self.stability_functional().to_f64() / rho_lower)
    }

    /// True when the positive-rate graph is connected on the support.
    pub fn is_irreducible(&self) -> bool {
        let m = self.size();
        let mut parent: Vec<usize> = (0..m).collect();
        fn find(parent: &mut [usize], mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        for i in 0..m {
            for j in 0..m {
                if i != j && self.rates[i * m + j] > S::zero() {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    parent[a] = b;
                }
            }
        }
        let root = find(&mut parent, 0);
        (0..m).all(|i| find(&mut parent, i) == root)
    }

    pub fn to_f64(&self) -> Generator<f64> {
        Generator {
            pi: self.pi.to_f64(),
            rates: self.rates.iter().map(|r| r.to_f64()).collect(),
        }
    }
}

/// Swap walk on the uniform `k`-slice: rate `1/n` between swap neighbors,
/// diagonal `-k(n-k)/n`.
pub fn bernoulli_laplace<S: Scalar>(n: usize, k: usize) -> Result<Generator<S>> {
    let support = enumerate_slice(n, k)?;
    let m = support.len();
    let uniform = S::from_ratio(1, binomial(n, k) as i64);
    let pi = DistributionTable::new(support, vec![uniform; m])?;
    let mut rates = vec![S::zero(); m * m];
    let rate = S::from_ratio(1, n as i64);
    for (xi, x) in pi.support().iter().enumerate() {
        for i in 0..n {
            for j in i + 1..n {
                if x.get(i) != x.get(j) {
                    let y = x.swap(i, j)?;
                    let yi = pi.position(&y).expect("swap stays on the slice");
                    rates[xi * m + yi] = rate.clone();
                }
            }
        }
    }
    Ok(Generator::from_parts(pi, rates))
}

/// Single-site dynamics on the uniform cube: every flip at rate 1.
pub fn glauber_uniform<S: Scalar>(n: usize) -> Result<Generator<S>> {
    if n > GLAUBER_GUARD {
        return Err(Error::GuardExceeded { what: "uniform-cube dynamics", n, guard: GLAUBER_GUARD });
    }
    let support = enumerate_cube(n)?;
    let m = support.len();
    let pi = DistributionTable::new(support, vec![S::from_ratio(1, m as i64); m])?;
    let mut rates = vec![S::zero(); m * m];
    for (xi, x) in pi.support().iter().enumerate() {
        for i in 0..n {
            let y = x.flip(i)?;
            let yi = pi.position(&y).expect("flip stays in the cube");
            rates[xi * m + yi] = S::one();
        }
    }
    Ok(Generator::from_parts(pi, rates))
}

/// Sum of block generators acting on a product support, with the product of
/// the stationary measures as the stationary measure.
pub fn tensorize<S: Scalar>(gens: &[Generator<S>]) -> Result<Generator<S>> {
    if gens.is_empty() {
        return Err(Error::EmptySet("tensorize blocks"));
    }
    let total: usize = gens.iter().map(|g| g.size()).product();
    if total > TENSOR_GUARD {
        return Err(Error::GuardExceeded { what: "tensor support", n: total, guard: TENSOR_GUARD });
    }
    let n_total: usize = gens.iter().map(|g| g.n()).sum();
    if n_total > crate::cube::PACKED_GUARD {
        return Err(Error::GuardExceeded {
            what: "tensor dimension",
            n: n_total,
            guard: crate::cube::PACKED_GUARD,
        });
    }

    // Mixed-radix walk over block states; block 0 occupies the leading
    // coordinates, so the product order is lexicographic.
    let sizes: Vec<usize> = gens.iter().map(|g| g.size()).collect();
    let mut support = Vec::with_capacity(total);
    let mut probs = Vec::with_capacity(total);
    let mut multi = vec![0usize; gens.len()];
    for _ in 0..total {
        let mut bits = 0u64;
        let mut prob = S::one();
        for (b, g) in gens.iter().enumerate() {
            let s = g.support()[multi[b]];
            bits = (bits << g.n()) | s.bits();
            prob = prob * g.stationary().prob(multi[b]).clone();
        }
        support.push(CubeState::from_bits(n_total, bits)?);
        probs.push(prob);
        for b in (0..gens.len()).rev() {
            multi[b] += 1;
            if multi[b] < sizes[b] {
                break;
            }
            multi[b] = 0;
        }
    }
    let pi = DistributionTable::new(support, probs)?;

    let strides: Vec<usize> = {
        let mut s = vec![1usize; gens.len()];
        for b in (0..gens.len().saturating_sub(1)).rev() {
            s[b] = s[b + 1] * sizes[b + 1];
        }
        s
    };
    let mut rates = vec![S::zero(); total * total];
    for idx in 0..total {
        let mut rem = idx;
        let coords: Vec<usize> = strides
            .iter()
            .zip(&sizes)
            .map(|(st, sz)| {
                let c = rem / st;
                rem %= st;
                debug_assert!(c < *sz);
                c
            })
            .collect();
        for (b, g) in gens.iter().enumerate() {
            for j in 0..sizes[b] {
                if j == coords[b] {
                    continue;
                }
                let r = g.rate(coords[b], j);
                if *r > S::zero() {
                    let target =
                        (idx as i64 + (j as i64 - coords[b] as i64) * strides[b] as i64) as usize;
                    rates[idx * total + target] = rates[idx * total + target].clone() + r.clone();
                }
            }
        }
    }
    Ok(Generator::from_parts(pi, rates))
}

/// The recursive flip-swap generator with stationary measure `pi(p, k)`.
///
/// Base case: a one-point support carries the trivial generator. Otherwise
/// the construction averages `n` level generators: rates that change
/// coordinate `l` are coupling-kernel transition masses times
/// `P(X_l != x_l)`, rates that keep it are the recursively built generator of
/// the conditioned law. Sub-results are memoized by (retained coordinates, k);
/// without memoization the recursion is exponential.
pub fn hermon_salez<S: Scalar>(p: &[S], k: usize) -> Result<Generator<S>> {
    if p.len() > S::GENERATOR_GUARD {
        return Err(Error::GuardExceeded {
            what: "recursive generator",
            n: p.len(),
            guard: S::GENERATOR_GUARD,
        });
    }
    // Validates p and k ranges up front.
    CondBernoulli::new(p.to_vec(), k)?;
    let mut builder = HsBuilder { p_full: p, gens: HashMap::new(), kernels: HashMap::new() };
    let idx: Vec<u8> = (0..p.len() as u8).collect();
    let g = builder.build(&idx, k)?;
    Ok((*g).clone())
}

type Key = (Vec<u8>, usize);

struct HsBuilder<'a, S: Scalar> {
    p_full: &'a [S],
    gens: HashMap<Key, Rc<Generator<S>>>,
    kernels: HashMap<Key, Rc<(CouplingKernel<S>, CouplingKernel<S>)>>,
}

impl<S: Scalar> HsBuilder<'_, S> {
    fn gather(&self, idx: &[u8]) -> Vec<S> {
        idx.iter().map(|&i| self.p_full[i as usize].clone()).collect()
    }

    fn couplings(&mut self, idx: &[u8], k: usize) -> Result<Rc<(CouplingKernel<S>, CouplingKernel<S>)>> {
        let key = (idx.to_vec(), k);
        if let Some(c) = self.kernels.get(&key) {
            return Ok(c.clone());
        }
        let p = self.gather(idx);
        let pair = Rc::new((up_kernel(&p, k)?, down_kernel(&p, k)?));
        self.kernels.insert(key, pair.clone());
        Ok(pair)
    }

    fn build(&mut self, idx: &[u8], k: usize) -> Result<Rc<Generator<S>>> {
        let key = (idx.to_vec(), k);
        if let Some(g) = self.gens.get(&key) {
            return Ok(g.clone());
        }
        let n = idx.len();
        let p = self.gather(idx);
        let spec = CondBernoulli::new(p, k)?;
        let pi = spec.to_table()?;
        let m = pi.len();

        if m == 1 {
            let g = Rc::new(Generator::from_parts(pi, vec![S::zero()]));
            self.gens.insert(key, g.clone());
            return Ok(g);
        }

        // Here 1 <= k <= n - 1 and n >= 2.
        let mut rates = vec![S::zero(); m * m];
        let inv_n = S::from_ratio(1, n as i64);
        for pos in 0..n {
            let mut sub_idx = idx.to_vec();
            sub_idx.remove(pos);

            // Same-level blocks: coordinate pos frozen at b.
            for b in [false, true] {
                if b && k == 0 {
                    continue;
                }
                let kb = k - usize::from(b);
                if kb > n - 1 {
                    continue;
                }
                let sub = self.build(&sub_idx, kb)?;
                let msub = sub.size();
                for i_sub in 0..msub {
                    let x_full = sub.support()[i_sub].insert(pos, b)?;
                    let xi = pi.position(&x_full).expect("insertion stays on the slice");
                    for j_sub in 0..msub {
                        if i_sub == j_sub {
                            continue;
                        }
                        let r = sub.rate(i_sub, j_sub);
                        if *r > S::zero() {
                            let y_full = sub.support()[j_sub].insert(pos, b)?;
                            let yi = pi.position(&y_full).expect("insertion stays on the slice");
                            rates[xi * m + yi] =
                                rates[xi * m + yi].clone() + inv_n.clone() * r.clone();
                        }
                    }
                }
            }

            // Cross-level rates: coordinate pos changes, the rest moves by the
            // coupling kernel of the conditioned laws.
            let kernels = self.couplings(&sub_idx, k)?;
            let (ref up, ref down) = *kernels;
            let q1 = spec.inclusion_probability(pos)?;
            let q0 = S::one() - q1.clone();

            // x_pos = 0 -> y_pos = 1: removal kernel mass times P(X_pos = 1).
            for (xi_sub, x_sub) in down.source.support().iter().enumerate() {
                let x_full = x_sub.insert(pos, false)?;
                let xi = pi.position(&x_full).expect("x on the slice");
                for (yi_sub, w) in down.row(xi_sub) {
                    let y_full = down.target.state(*yi_sub).insert(pos, true)?;
                    let yi = pi.position(&y_full).expect("y on the slice");
                    rates[xi * m + yi] = rates[xi * m + yi].clone()
                        + inv_n.clone() * w.clone() * q1.clone();
                }
            }
            // x_pos = 1 -> y_pos = 0: addition kernel mass times P(X_pos = 0).
            for (xi_sub, x_sub) in up.source.support().iter().enumerate() {
                let x_full = x_sub.insert(pos, true)?;
                let xi = pi.position(&x_full).expect("x on the slice");
                for (yi_sub, w) in up.row(xi_sub) {
                    let y_full = up.target.state(*yi_sub).insert(pos, false)?;
                    let yi = pi.position(&y_full).expect("y on the slice");
                    rates[xi * m + yi] = rates[xi * m + yi].clone()
                        + inv_n.clone() * w.clone() * q0.clone();
                }
            }
        }

        let g = Rc::new(Generator::from_parts(pi, rates));
        self.gens.insert(key, g.clone());
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::BigRational;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::from_ratio(n, d)
    }

    fn st(s: &str) -> CubeState {
        s.parse().unwrap()
    }

    fn random_rational_p(rng: &mut ChaCha12Rng, n: usize) -> Vec<BigRational> {
        (0..n).map(|_| rat(rng.gen_range(1..16), 16)).collect()
    }

    #[test]
    fn two_coordinate_walk_by_hand() {
        // Unfolding the two level generators by hand: both contribute rate
        // 1/2 between the two slice states, averaged over n = 2.
        let g = hermon_salez(&[rat(1, 2), rat(1, 2)], 1).unwrap();
        let i10 = g.stationary().position(&st("10")).unwrap();
        let i01 = g.stationary().position(&st("01")).unwrap();
        assert_eq!(*g.rate(i10, i01), rat(1, 2));
        assert_eq!(*g.rate(i01, i10), rat(1, 2));
        assert_eq!(*g.rate(i10, i10), rat(-1, 2));
        assert_eq!(g.detailed_balance_violation(), rat(0, 1));
    }

    #[test]
    fn two_coordinate_walk_general_p() {
        // For n = 2, k = 1 both levels give the full kernel mass times the
        // exit probability of the current coordinate, so the rate out of 10
        // is exactly pi(01).
        let p = vec![rat(3, 7), rat(2, 11)];
        let spec = CondBernoulli::new(p.clone(), 1).unwrap();
        let g = hermon_salez(&p, 1).unwrap();
        let i10 = g.stationary().position(&st("10")).unwrap();
        let i01 = g.stationary().position(&st("01")).unwrap();
        assert_eq!(*g.rate(i10, i01), spec.pmf(&st("01")).unwrap());
        assert_eq!(*g.rate(i01, i10), spec.pmf(&st("10")).unwrap());
        assert_eq!(g.detailed_balance_violation(), rat(0, 1));
    }

    #[test]
    fn recursive_generator_is_exactly_reversible() {
        let mut rng = ChaCha12Rng::seed_from_u64(41);
        for _ in 0..12 {
            let n = rng.gen_range(1..=6);
            let k = rng.gen_range(0..=n);
            let p = random_rational_p(&mut rng, n);
            let g = hermon_salez(&p, k).unwrap();
            assert_eq!(g.detailed_balance_violation(), rat(0, 1), "n={n} k={k}");
            assert!(g.is_flip_swap());
            assert!(g.delta() <= rat(2 * k as i64, 1));
            assert!(g.stability_functional() <= rat(2, 1));
        }
    }

    #[test]
    fn level_decomposition_reconstructs_the_rates() {
        // Reassemble n * L(x, y) for every swap pair from the public
        // primitives: coupling masses times exit probabilities for the two
        // moving coordinates, conditioned sub-generators for the rest.
        let mut rng = ChaCha12Rng::seed_from_u64(4242);
        for _ in 0..6 {
            let n = rng.gen_range(2..=5);
            let k = rng.gen_range(1..n);
            let p = random_rational_p(&mut rng, n);
            let spec = CondBernoulli::new(p.clone(), k).unwrap();
            let g = hermon_salez(&p, k).unwrap();
            let m = g.size();
            for xi in 0..m {
                for yi in 0..m {
                    if xi == yi {
                        continue;
                    }
                    let x = g.support()[xi];
                    let y = g.support()[yi];
                    let mut total = BigRational::from_int(0);
                    for l in 0..n {
                        let mut p_sub = p.clone();
                        p_sub.remove(l);
                        let (x_sub, y_sub) = (x.delete(l).unwrap(), y.delete(l).unwrap());
                        if x.get(l) != y.get(l) {
                            let q = spec.inclusion_probability(l).unwrap();
                            // x_l = 1: the deleted state has k-1 ones, so the
                            // addition kernel moves it; exit rate P(X_l = 0).
                            let (kernel, exit) = if x.get(l) {
                                (up_kernel(&p_sub, k).unwrap(), BigRational::from_int(1) - q)
                            } else {
                                (down_kernel(&p_sub, k).unwrap(), q)
                            };
                            if let Some(si) = kernel.source.position(&x_sub) {
                                for (ti, w) in kernel.row(si) {
                                    if kernel.target.state(*ti) == &y_sub {
                                        total += w.clone() * exit.clone();
                                    }
                                }
                            }
                        } else {
                            let sub = hermon_salez(&p_sub, k - usize::from(x.get(l))).unwrap();
                            if let (Some(si), Some(ti)) = (
                                sub.stationary().position(&x_sub),
                                sub.stationary().position(&y_sub),
                            ) {
                                if si != ti {
                                    total += sub.rate(si, ti).clone();
                                }
                            }
                        }
                    }
                    assert_eq!(
                        total,
                        g.rate(xi, yi).clone() * BigRational::from_int(n as i64),
                        "n={n} k={k} x={x} y={y}"
                    );
                }
            }
        }
    }

    #[test]
    fn guards_are_enforced() {
        let p = vec![0.5f64; 13];
        assert!(matches!(hermon_salez(&p, 3), Err(Error::GuardExceeded { .. })));
        let p = vec![rat(1, 2); 10];
        assert!(matches!(hermon_salez(&p, 3), Err(Error::GuardExceeded { .. })));
    }

    #[test]
    fn bernoulli_laplace_structure() {
        let g: Generator<BigRational> = bernoulli_laplace(2, 1).unwrap();
        assert_eq!(g.size(), 2);
        assert_eq!(*g.rate(0, 1), rat(1, 2));
        assert_eq!(*g.rate(1, 0), rat(1, 2));

        let g: Generator<BigRational> = bernoulli_laplace(5, 2).unwrap();
        for i in 0..g.size() {
            assert_eq!(*g.rate(i, i), rat(-(2 * 3), 5)); // -k(n-k)/n
        }
        assert_eq!(g.detailed_balance_violation(), rat(0, 1));
        assert!(g.is_flip_swap());
        assert_eq!(g.delta(), rat(6, 5));
        // Per-coordinate exit rates are (n-k)/n at ones and k/n at zeros.
        assert_eq!(g.stability_functional(), rat(3, 5));
    }

    #[test]
    fn glauber_structure() {
        let g: Generator<BigRational> = glauber_uniform(5).unwrap();
        assert_eq!(g.delta(), rat(5, 1));
        assert_eq!(g.stability_functional(), rat(1, 1));
        assert_eq!(g.detailed_balance_violation(), rat(0, 1));
        assert!(g.is_flip_swap());
    }

    #[test]
    fn corrupted_rate_is_detected() {
        let mut g: Generator<f64> = hermon_salez(&[0.3, 0.6, 0.4], 2).unwrap();
        assert!(g.detailed_balance_violation() < 1e-15);
        g.corrupt_rate(0, 1, 2.0);
        assert!(g.detailed_balance_violation() > 1e-3);
    }

    #[test]
    fn tensor_product_structure() {
        let a: Generator<BigRational> = hermon_salez(&[rat(1, 2), rat(1, 3)], 1).unwrap();
        let single = tensorize(std::slice::from_ref(&a)).unwrap();
        assert_eq!(single.size(), a.size());
        for i in 0..a.size() {
            for j in 0..a.size() {
                assert_eq!(single.rate(i, j), a.rate(i, j));
            }
        }

        let b: Generator<BigRational> = hermon_salez(&[rat(1, 4), rat(3, 4)], 1).unwrap();
        let t = tensorize(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(t.size(), 4);
        assert_eq!(t.n(), 4);
        // Product stationary measure, block rates on matching fibers.
        for (ia, sa) in a.support().iter().enumerate() {
            for (ib, sb) in b.support().iter().enumerate() {
                let bits = (sa.bits() << 2) | sb.bits();
                let full = CubeState::from_bits(4, bits).unwrap();
                let fi = t.stationary().position(&full).unwrap();
                assert_eq!(
                    t.stationary().prob(fi).clone(),
                    a.stationary().prob(ia).clone() * b.stationary().prob(ib).clone()
                );
            }
        }
        assert_eq!(t.detailed_balance_violation(), rat(0, 1));
        // 4x4 construction oracle: rates match the block sums entrywise.
        for i in 0..4 {
            for j in 0..4 {
                if i == j {
                    continue;
                }
                let (ia, ib) = (i / 2, i % 2);
                let (ja, jb) = (j / 2, j % 2);
                let mut want = BigRational::from_int(0);
                if ib == jb && ia != ja {
                    want += a.rate(ia, ja).clone();
                }
                if ia == ja && ib != jb {
                    want += b.rate(ib, jb).clone();
                }
                assert_eq!(*t.rate(i, j), want);
            }
        }
        // Per-coordinate sums only see their own block.
        let expect = a.stability_functional().max(b.stability_functional());
        assert_eq!(t.stability_functional(), expect);
    }

    #[test]
    fn tensor_guard() {
        let g: Generator<f64> = glauber_uniform(5).unwrap();
        let blocks = vec![g.clone(), g.clone(), g.clone()];
        assert!(matches!(tensorize(&blocks), Err(Error::GuardExceeded { .. })));
    }

    #[test]
    fn stability_constant_examples() {
        let bl: Generator<f64> = bernoulli_laplace(6, 2).unwrap();
        assert!(bl.stability_constant(0.5).unwrap() <= 2.0 + 1e-12);
        let gl: Generator<f64> = glauber_uniform(3).unwrap();
        assert!((gl.stability_constant(4.0).unwrap() - 0.25).abs() < 1e-12);
        assert!(gl.stability_constant(0.0).is_err());
    }
}
