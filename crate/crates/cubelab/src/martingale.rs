//! Exact martingale increments for three coordinate-revelation schemes over a
//! finite measure on the cube, and the Azuma/Freedman-type tail evaluators
//! driven by their increment bounds.
//!
//! Scheme F reveals coordinates in index order. Scheme G (for k-homogeneous
//! measures) reveals the first k coordinates, then the positions of the
//! remaining ones in uniformly random order. Scheme H reveals the whole
//! support in uniformly random order. Increments are computed by pure
//! conditioning: the auxiliary uniform randomization never needs simulating
//! because conditioning on a revelation prefix is equivalent to conditioning
//! on the revealed coordinates being one. An exhausted revelation step (no
//! ones left) reveals nothing and contributes a zero increment.

use crate::cond_bernoulli::DistributionTable;
use crate::cube::{CubeState, WeightVector};
use crate::matrix::Hermitian;
use crate::numeric::Scalar;
use crate::{Error, Result};

/// One step of the scheme-G revelation phase: either a position holding a
/// one, or the sentinel used once every one has been revealed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reveal {
    Position(usize),
    Exhausted,
}

fn check_table_fn_len<T>(pi: &DistributionTable<impl Scalar>, f: &[T]) -> Result<()> {
    if f.len() != pi.len() {
        return Err(Error::LengthMismatch(f.len(), pi.len()));
    }
    Ok(())
}

fn homogeneous_k(pi: &DistributionTable<impl Scalar>) -> Result<usize> {
    pi.homogeneous_degree()
        .ok_or_else(|| Error::InvalidParameter("measure is not homogeneous".into()))
}

fn bit_prefix_event(bits: &[bool]) -> impl Fn(&CubeState) -> bool + '_ {
    move |s| bits.iter().enumerate().all(|(i, b)| s.get(i) == *b)
}

/// Conditional expectation difference for the coordinate filtration: the
/// increment at step `bits.len()`.
pub fn increment_f<S: Scalar>(
    pi: &DistributionTable<S>,
    f: &[S],
    bits: &[bool],
) -> Result<S> {
    check_table_fn_len(pi, f)?;
    if bits.is_empty() || bits.len() > pi.n() {
        return Err(Error::InvalidParameter(format!(
            "prefix length {} out of range 1..={}",
            bits.len(),
            pi.n()
        )));
    }
    let now = pi.conditional_expectation(f, bit_prefix_event(bits))?;
    let before = pi.conditional_expectation(f, bit_prefix_event(&bits[..bits.len() - 1]))?;
    Ok(now - before)
}

fn g_event<'a>(
    bits: &'a [bool],
    revealed: &'a [Reveal],
) -> impl Fn(&CubeState) -> bool + 'a {
    move |s| {
        bits.iter().enumerate().all(|(i, b)| s.get(i) == *b)
            && revealed.iter().all(|r| match r {
                Reveal::Position(v) => s.get(*v),
                Reveal::Exhausted => true,
            })
    }
}

fn validate_g_prefix(
    pi: &DistributionTable<impl Scalar>,
    k: usize,
    bits: &[bool],
    revealed: &[Reveal],
) -> Result<()> {
    if bits.len() != k {
        return Err(Error::InvalidParameter(format!(
            "scheme G reveals all {k} leading coordinates first, got {}",
            bits.len()
        )));
    }
    if revealed.len() > k {
        return Err(Error::InvalidParameter(format!(
            "at most {k} revelation steps, got {}",
            revealed.len()
        )));
    }
    let ones_in_prefix = bits.iter().filter(|b| **b).count();
    let mut seen = Vec::new();
    for (step, r) in revealed.iter().enumerate() {
        let remaining = k - ones_in_prefix - seen.len();
        match r {
            Reveal::Position(v) => {
                if *v < k || *v >= pi.n() {
                    return Err(Error::IndexOutOfRange { index: *v, n: pi.n() });
                }
                if seen.contains(v) {
                    return Err(Error::InvalidParameter(format!(
                        "position {v} revealed twice"
                    )));
                }
                if remaining == 0 {
                    return Err(Error::Infeasible(format!(
                        "step {step}: every one is already revealed"
                    )));
                }
                seen.push(*v);
            }
            Reveal::Exhausted => {
                if remaining != 0 {
                    return Err(Error::Infeasible(format!(
                        "step {step}: {remaining} ones still hidden"
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Increment of the two-phase filtration at revelation step `revealed.len()`
/// (overall step `k + revealed.len()`); with `revealed` empty this is the
/// coordinate increment at step `k`.
pub fn increment_g<S: Scalar>(
    pi: &DistributionTable<S>,
    f: &[S],
    bits: &[bool],
    revealed: &[Reveal],
) -> Result<S> {
    check_table_fn_len(pi, f)?;
    let k = homogeneous_k(pi)?;
    if revealed.is_empty() {
        return increment_f(pi, f, bits);
    }
    validate_g_prefix(pi, k, bits, revealed)?;
    if matches!(revealed.last(), Some(Reveal::Exhausted)) {
        return Ok(S::zero());
    }
    let now = pi.conditional_expectation(f, g_event(bits, revealed))?;
    let before =
        pi.conditional_expectation(f, g_event(bits, &revealed[..revealed.len() - 1]))?;
    Ok(now - before)
}

fn h_event(revealed: &[usize]) -> impl Fn(&CubeState) -> bool + '_ {
    move |s| revealed.iter().all(|v| s.get(*v))
}

fn validate_h_prefix(pi: &DistributionTable<impl Scalar>, revealed: &[usize]) -> Result<()> {
    let k = homogeneous_k(pi)?;
    if revealed.is_empty() || revealed.len() > k {
        return Err(Error::InvalidParameter(format!(
            "revelation length {} out of range 1..={k}",
            revealed.len()
        )));
    }
    for (i, v) in revealed.iter().enumerate() {
        if *v >= pi.n() {
            return Err(Error::IndexOutOfRange { index: *v, n: pi.n() });
        }
        if revealed[..i].contains(v) {
            return Err(Error::InvalidParameter(format!("position {v} revealed twice")));
        }
    }
    Ok(())
}

/// Increment of the support-revelation filtration at step `revealed.len()`.
pub fn increment_h<S: Scalar>(
    pi: &DistributionTable<S>,
    f: &[S],
    revealed: &[usize],
) -> Result<S> {
    check_table_fn_len(pi, f)?;
    validate_h_prefix(pi, revealed)?;
    let now = pi.conditional_expectation(f, h_event(revealed))?;
    let before = if revealed.len() == 1 {
        pi.expectation(f)
    } else {
        pi.conditional_expectation(f, h_event(&revealed[..revealed.len() - 1]))?
    };
    Ok(now - before)
}

fn matrix_conditional(
    pi: &DistributionTable<f64>,
    f: &[Hermitian],
    event: impl Fn(&CubeState) -> bool,
) -> Result<Hermitian> {
    let d = f.first().map(|m| m.dim()).unwrap_or(0);
    let mut mass = 0.0;
    let mut acc = Hermitian::zero(d);
    for (i, s) in pi.support().iter().enumerate() {
        if event(s) {
            let p = *pi.prob(i);
            mass += p;
            acc = acc.add(&f[i].scale(p))?;
        }
    }
    if mass <= 0.0 {
        return Err(Error::ZeroProbabilityEvent);
    }
    Ok(acc.scale(1.0 / mass))
}

/// Matrix-valued coordinate-filtration increment.
pub fn increment_f_matrix(
    pi: &DistributionTable<f64>,
    f: &[Hermitian],
    bits: &[bool],
) -> Result<Hermitian> {
    if f.len() != pi.len() {
        return Err(Error::LengthMismatch(f.len(), pi.len()));
    }
    if bits.is_empty() || bits.len() > pi.n() {
        return Err(Error::InvalidParameter("bad prefix length".into()));
    }
    let now = matrix_conditional(pi, f, bit_prefix_event(bits))?;
    let before = matrix_conditional(pi, f, bit_prefix_event(&bits[..bits.len() - 1]))?;
    now.sub(&before)
}

/// Matrix-valued two-phase increment.
pub fn increment_g_matrix(
    pi: &DistributionTable<f64>,
    f: &[Hermitian],
    bits: &[bool],
    revealed: &[Reveal],
) -> Result<Hermitian> {
    if f.len() != pi.len() {
        return Err(Error::LengthMismatch(f.len(), pi.len()));
    }
    let k = homogeneous_k(pi)?;
    if revealed.is_empty() {
        return increment_f_matrix(pi, f, bits);
    }
    validate_g_prefix(pi, k, bits, revealed)?;
    let d = f[0].dim();
    if matches!(revealed.last(), Some(Reveal::Exhausted)) {
        return Ok(Hermitian::zero(d));
    }
    let now = matrix_conditional(pi, f, g_event(bits, revealed))?;
    let before = matrix_conditional(pi, f, g_event(bits, &revealed[..revealed.len() - 1]))?;
    now.sub(&before)
}

/// Matrix-valued support-revelation increment.
pub fn increment_h_matrix(
    pi: &DistributionTable<f64>,
    f: &[Hermitian],
    revealed: &[usize],
) -> Result<Hermitian> {
    if f.len() != pi.len() {
        return Err(Error::LengthMismatch(f.len(), pi.len()));
    }
    validate_h_prefix(pi, revealed)?;
    let now = matrix_conditional(pi, f, h_event(revealed))?;
    let before = if revealed.len() == 1 {
        matrix_conditional(pi, f, |_| true)?
    } else {
        matrix_conditional(pi, f, h_event(&revealed[..revealed.len() - 1]))?
    };
    now.sub(&before)
}

/// All positive-probability coordinate prefixes, every length.
pub fn enumerate_f_prefixes<S: Scalar>(pi: &DistributionTable<S>) -> Vec<Vec<bool>> {
    let n = pi.n();
    let mut out = Vec::new();
    let mut frontier: Vec<Vec<bool>> = vec![Vec::new()];
    for _ in 0..n {
        let mut next = Vec::new();
        for prefix in &frontier {
            for b in [false, true] {
                let mut p = prefix.clone();
                p.push(b);
                if !pi.mass_where(bit_prefix_event(&p)).is_zero() {
                    out.push(p.clone());
                    next.push(p);
                }
            }
        }
        frontier = next;
    }
    out
}

/// All positive-probability two-phase prefixes with a nonempty revelation
/// part, as (leading bits, revelation steps).
pub fn enumerate_g_prefixes<S: Scalar>(
    pi: &DistributionTable<S>,
) -> Result<Vec<(Vec<bool>, Vec<Reveal>)>> {
    let k = homogeneous_k(pi)?;
    let n = pi.n();
    let mut out = Vec::new();
    let mut heads: Vec<Vec<bool>> = vec![Vec::new()];
    for _ in 0..k {
        let mut next = Vec::new();
        for prefix in &heads {
            for b in [false, true] {
                let mut p = prefix.clone();
                p.push(b);
                if !pi.mass_where(bit_prefix_event(&p)).is_zero() {
                    next.push(p);
                }
            }
        }
        heads = next;
    }
    for head in heads {
        let ones = head.iter().filter(|b| **b).count();
        // DFS over revelation suffixes.
        let mut stack: Vec<Vec<Reveal>> = vec![Vec::new()];
        while let Some(pre) = stack.pop() {
            if pre.len() == k {
                continue;
            }
            let used: Vec<usize> = pre
                .iter()
                .filter_map(|r| match r {
                    Reveal::Position(v) => Some(*v),
                    Reveal::Exhausted => None,
                })
                .collect();
            let remaining = k - ones - used.len();
            if remaining == 0 {
                let mut p = pre.clone();
                p.push(Reveal::Exhausted);
                out.push((head.clone(), p.clone()));
                stack.push(p);
            } else {
                for v in k..n {
                    if used.contains(&v) {
                        continue;
                    }
                    let mut p = pre.clone();
                    p.push(Reveal::Position(v));
                    if !pi.mass_where(g_event(&head, &p)).is_zero() {
                        out.push((head.clone(), p.clone()));
                        stack.push(p);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// All positive-probability support-revelation prefixes.
pub fn enumerate_h_prefixes<S: Scalar>(pi: &DistributionTable<S>) -> Result<Vec<Vec<usize>>> {
    let k = homogeneous_k(pi)?;
    let n = pi.n();
    let mut out = Vec::new();
    let mut stack: Vec<Vec<usize>> = vec![Vec::new()];
    while let Some(pre) = stack.pop() {
        if pre.len() == k {
            continue;
        }
        for v in 0..n {
            if pre.contains(&v) {
                continue;
            }
            let mut p = pre.clone();
            p.push(v);
            if !pi.mass_where(h_event(&p)).is_zero() {
                out.push(p.clone());
                stack.push(p);
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Tail-bound evaluators driven by increment bounds.
// ---------------------------------------------------------------------------

/// Scalar Azuma-Hoeffding tail `exp(-t^2 / (2 sum c_l^2))`, clamped to [0,1].
pub fn azuma_bound(c: &[f64], t: f64) -> Result<f64> {
    if c.iter().any(|v| *v < 0.0) {
        return Err(Error::InvalidParameter("negative increment bound".into()));
    }
    if t < 0.0 {
        return Err(Error::InvalidParameter(format!("negative t = {t}")));
    }
    let s: f64 = c.iter().map(|v| v * v).sum();
    if t == 0.0 {
        return Ok(1.0);
    }
    if s == 0.0 {
        return Err(Error::InvalidParameter("zero variance proxy with positive t".into()));
    }
    Ok((-t * t / (2.0 * s)).exp().min(1.0))
}

/// Matrix Azuma tail `d exp(-t^2 / (8 sigma^2))`.
pub fn azuma_matrix_bound(d: usize, sigma2: f64, t: f64) -> Result<f64> {
    if t < 0.0 {
        return Err(Error::InvalidParameter(format!("negative t = {t}")));
    }
    if t == 0.0 {
        return Ok(d as f64);
    }
    if sigma2 <= 0.0 {
        return Err(Error::InvalidParameter("nonpositive variance proxy".into()));
    }
    Ok(((d as f64) * (-t * t / (8.0 * sigma2)).exp()).min(d as f64))
}

/// Matrix Freedman tail `2d exp(-t^2 / (2 sigma^2 + 2at/3))`.
pub fn freedman_matrix_bound(d: usize, a: f64, sigma2: f64, t: f64) -> Result<f64> {
    if a <= 0.0 || sigma2 <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "freedman bound needs positive a and sigma^2, got {a}, {sigma2}"
        )));
    }
    if t < 0.0 {
        return Err(Error::InvalidParameter(format!("negative t = {t}")));
    }
    Ok(2.0 * (d as f64) * (-t * t / (2.0 * sigma2 + 2.0 * a * t / 3.0)).exp())
}

fn head_norm_sq(alpha: &WeightVector, k: usize) -> f64 {
    let sorted = alpha.nonincreasing_rearrangement();
    sorted.as_slice()[..k.min(alpha.len())].iter().map(|a| a * a).sum()
}

/// Subgaussian tail for 1-Lipschitz functions of a covering-property measure:
/// `exp(-t^2 / (8 |alpha|^2))`, improved to `exp(-t^2 / (16 sum_{i<=k}
/// (alpha_i down)^2))` when the measure is k-homogeneous. Returns the smaller
/// applicable value, clamped to [0, 1].
pub fn lipschitz_tail_bound(
    alpha: &WeightVector,
    t: f64,
    homogeneous_k: Option<usize>,
) -> Result<f64> {
    if t < 0.0 {
        return Err(Error::InvalidParameter(format!("negative t = {t}")));
    }
    if t == 0.0 {
        return Ok(1.0);
    }
    let norm_sq = alpha.norm_sq();
    if norm_sq == 0.0 {
        return Err(Error::InvalidParameter("zero weights with positive t".into()));
    }
    let mut bound = (-t * t / (8.0 * norm_sq)).exp();
    if let Some(k) = homogeneous_k {
        let head = head_norm_sq(alpha, k.max(1));
        if head > 0.0 {
            bound = bound.min((-t * t / (16.0 * head)).exp());
        }
    }
    Ok(bound.min(1.0))
}

/// Matrix analogue: `d exp(-t^2 / (32 |alpha|^2))`, homogeneous form with
/// `64 sum_{i<=k}` in the denominator; clamped to [0, d].
pub fn matrix_lipschitz_tail_bound(
    d: usize,
    alpha: &WeightVector,
    t: f64,
    homogeneous_k: Option<usize>,
) -> Result<f64> {
    if t < 0.0 {
        return Err(Error::InvalidParameter(format!("negative t = {t}")));
    }
    if t == 0.0 {
        return Ok(d as f64);
    }
    let norm_sq = alpha.norm_sq();
    if norm_sq == 0.0 {
        return Err(Error::InvalidParameter("zero weights with positive t".into()));
    }
    let mut bound = (-t * t / (32.0 * norm_sq)).exp();
    if let Some(k) = homogeneous_k {
        let head = head_norm_sq(alpha, k.max(1));
        if head > 0.0 {
            bound = bound.min((-t * t / (64.0 * head)).exp());
        }
    }
    Ok(((d as f64) * bound).min(d as f64))
}

/// Subexponential comparison tail `d exp(-t^2 / (8k + 2t sqrt(2k)))` for
/// Hamming-Lipschitz matrix functions of k-homogeneous measures.
pub fn hamming_subexponential_bound(d: usize, k: usize, t: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be positive".into()));
    }
    if t < 0.0 {
        return Err(Error::InvalidParameter(format!("negative t = {t}")));
    }
    let kk = k as f64;
    Ok((d as f64) * (-t * t / (8.0 * kk + 2.0 * t * (2.0 * kk).sqrt())).exp())
}

/// Bernstein-type tail for matrix bounded differences on a k-homogeneous
/// strong Rayleigh measure: `d exp(-t^2 / (8 ||pi(f~)|| log(ek) + 4Kt/3))`
/// with `f~(x) = sum_i x_i C_i^2` and `K = max_i ||C_i||`.
pub fn bounded_difference_matrix_bound(
    d: usize,
    norm_pi_ftilde: f64,
    max_coeff_norm: f64,
    k: usize,
    t: f64,
) -> Result<f64> {
    if norm_pi_ftilde <= 0.0 || max_coeff_norm <= 0.0 || k == 0 {
        return Err(Error::InvalidParameter(format!(
            "need positive ||pi(f~)||, K and k; got {norm_pi_ftilde}, {max_coeff_norm}, {k}"
        )));
    }
    if t < 0.0 {
        return Err(Error::InvalidParameter(format!("negative t = {t}")));
    }
    let log_ek = 1.0 + (k as f64).ln();
    let denom = 8.0 * norm_pi_ftilde * log_ek + 4.0 / 3.0 * max_coeff_norm * t;
    Ok((d as f64) * (-t * t / denom).exp())
}

/// Threshold above which the subgaussian homogeneous matrix bound beats the
/// subexponential comparison bound, for the same `k` and weights.
pub fn subgaussian_crossover(alpha: &WeightVector, k: usize) -> f64 {
    let a = 64.0 * head_norm_sq(alpha, k.max(1));
    let kk = k as f64;
    let t = (a - 8.0 * kk) / (2.0 * (2.0 * kk).sqrt());
    t.max(0.0)
}
