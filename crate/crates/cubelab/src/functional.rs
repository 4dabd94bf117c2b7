//! Dirichlet forms, entropy, spectral gaps, a multi-start estimator for the
//! modified log-Sobolev constant, and the scalar concentration bounds these
//! quantities feed.
//!
//! The mLSI constant is estimated, not certified: [`mlsi_upper_estimate`]
//! returns the best ratio `E(f, log f) / Ent(f)` found over many descent
//! restarts, which is always an upper bound on the true constant. Certified
//! lower bounds come from the structure theorems and are passed in where
//! needed.

use crate::cond_bernoulli::DistributionTable;
use crate::cube::WeightVector;
use crate::generator::Generator;
use crate::{Error, Result};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

/// Carre-du-champ `Gamma(f)(x) = 1/2 sum_y (f(x)-f(y))^2 Q(x,y)`.
pub fn gamma(g: &Generator<f64>, f: &[f64], x: usize) -> f64 {
    gamma_pair(g, f, f, x)
}

/// Polarized form `Gamma(f,h)(x)`.
pub fn gamma_pair(g: &Generator<f64>, f: &[f64], h: &[f64], x: usize) -> f64 {
    let row = g.row(x);
    let mut acc = 0.0;
    for (y, q) in row.iter().enumerate() {
        if y != x && *q > 0.0 {
            acc += (f[x] - f[y]) * (h[x] - h[y]) * q;
        }
    }
    0.5 * acc
}

/// One-sided form `Gamma_+(f)(x) = sum_y (f(x)-f(y))_+^2 Q(x,y)`.
pub fn gamma_plus(g: &Generator<f64>, f: &[f64], x: usize) -> f64 {
    let row = g.row(x);
    let mut acc = 0.0;
    for (y, q) in row.iter().enumerate() {
        if y != x && *q > 0.0 {
            let d = f[x] - f[y];
            if d > 0.0 {
                acc += d * d * q;
            }
        }
    }
    acc
}

/// Dirichlet form `E(f, h) = -pi(f Q h)`; symmetric under reversibility.
pub fn dirichlet(g: &Generator<f64>, f: &[f64], h: &[f64]) -> f64 {
    let m = g.size();
    let mut acc = 0.0;
    for x in 0..m {
        let row = g.row(x);
        let mut qh = 0.0;
        for (y, q) in row.iter().enumerate() {
            if *q != 0.0 {
                qh += q * h[y];
            }
        }
        acc -= g.stationary().prob(x) * f[x] * qh;
    }
    acc
}

/// `pi(f)`.
pub fn mean(pi: &DistributionTable<f64>, f: &[f64]) -> f64 {
    pi.probs().iter().zip(f).map(|(p, v)| p * v).sum()
}

/// `Var_pi(f)`.
pub fn variance(pi: &DistributionTable<f64>, f: &[f64]) -> f64 {
    let m = mean(pi, f);
    pi.probs().iter().zip(f).map(|(p, v)| p * (v - m) * (v - m)).sum()
}

/// Entropy functional `pi(f log f) - pi(f) log pi(f)` with `0 log 0 = 0`;
/// requires `f >= 0`.
pub fn entropy(pi: &DistributionTable<f64>, f: &[f64]) -> Result<f64> {
    let mut pf = 0.0;
    let mut pflogf = 0.0;
    for (p, &v) in pi.probs().iter().zip(f) {
        if v < 0.0 {
            return Err(Error::InvalidParameter(format!("entropy of negative value {v}")));
        }
        pf += p * v;
        if v > 0.0 {
            pflogf += p * v * v.ln();
        }
    }
    if pf == 0.0 {
        return Ok(0.0);
    }
    Ok((pflogf - pf * pf.ln()).max(0.0))
}

/// Smallest nonzero eigenvalue of the symmetrized `-Q`; the Poincare constant
/// of the walk. Errors on reducible generators.
pub fn spectral_gap(g: &Generator<f64>) -> Result<f64> {
    if g.size() == 1 || !g.is_irreducible() {
        return Err(Error::ReducibleGenerator);
    }
    let m = g.size();
    let sqrt_pi: Vec<f64> = g.stationary().probs().iter().map(|p| p.sqrt()).collect();
    let a = DMatrix::from_fn(m, m, |i, j| -g.rate(i, j) * sqrt_pi[i] / sqrt_pi[j]);
    // Symmetrize away float round-off before the eigensolve.
    let a = (&a + a.transpose()) * 0.5;
    let mut eigs: Vec<f64> = a.symmetric_eigenvalues().iter().copied().collect();
    eigs.sort_by(|x, y| x.partial_cmp(y).unwrap());
    Ok(eigs[1])
}

/// Eigenfunction of `-Q` attached to the spectral gap, in function (not
/// symmetrized) coordinates.
fn gap_eigenfunction(g: &Generator<f64>) -> Option<Vec<f64>> {
    let m = g.size();
    if m < 2 {
        return None;
    }
    let sqrt_pi: Vec<f64> = g.stationary().probs().iter().map(|p| p.sqrt()).collect();
    let a = DMatrix::from_fn(m, m, |i, j| -g.rate(i, j) * sqrt_pi[i] / sqrt_pi[j]);
    let a = (&a + a.transpose()) * 0.5;
    let eig = nalgebra::linalg::SymmetricEigen::new(a);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
    let col = eig.eigenvectors.column(order[1]);
    Some((0..m).map(|i| col[i] / sqrt_pi[i]).collect())
}

/// Result of the multi-start mLSI minimization.
#[derive(Clone, Debug)]
pub struct MlsiEstimate {
    /// Best ratio found; an upper bound on the mLSI constant.
    pub estimate: f64,
    pub restarts: usize,
    pub converged: usize,
    /// The positive function table achieving the reported ratio.
    pub best_candidate: Vec<f64>,
}

struct RatioProblem {
    edges: Vec<(usize, usize, f64)>, // (x, y, pi(x) Q(x,y)) for x < y
    probs: Vec<f64>,
}

impl RatioProblem {
    fn new(g: &Generator<f64>) -> Self {
        let m = g.size();
        let mut edges = Vec::new();
        for x in 0..m {
            for y in x + 1..m {
                let w = 0.5
                    * (g.stationary().prob(x) * g.rate(x, y)
                        + g.stationary().prob(y) * g.rate(y, x));
                if w > 0.0 {
                    edges.push((x, y, w));
                }
            }
        }
        RatioProblem { edges, probs: g.stationary().probs().to_vec() }
    }

    /// `E(e^u, u) / Ent(e^u)` after recentering `u`; None when degenerate.
    fn ratio(&self, u: &[f64]) -> Option<f64> {
        let shift = u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let f: Vec<f64> = u.iter().map(|v| (v - shift).exp()).collect();
        let mut energy = 0.0;
        for &(x, y, w) in &self.edges {
            energy += w * (f[x] - f[y]) * (u[x] - u[y]);
        }
        let big_f: f64 = self.probs.iter().zip(&f).map(|(p, v)| p * v).sum();
        let lnf = big_f.ln();
        let ent: f64 = self
            .probs
            .iter()
            .zip(&f)
            .zip(u)
            .map(|((p, v), uu)| p * v * (uu - shift - lnf))
            .sum();
        if !(ent > 1e-300) || !energy.is_finite() {
            return None;
        }
        Some(energy / ent)
    }

    fn ratio_and_grad(&self, u: &[f64]) -> Option<(f64, Vec<f64>)> {
        let m = u.len();
        let shift = u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let f: Vec<f64> = u.iter().map(|v| (v - shift).exp()).collect();
        let mut energy = 0.0;
        let mut denergy = vec![0.0; m];
        for &(x, y, w) in &self.edges {
            let df = f[x] - f[y];
            let du = u[x] - u[y];
            energy += w * df * du;
            denergy[x] += w * (f[x] * du + df);
            denergy[y] += w * (f[y] * du + df);
        }
        let big_f: f64 = self.probs.iter().zip(&f).map(|(p, v)| p * v).sum();
        let lnf = big_f.ln();
        let mut ent = 0.0;
        let mut dent = vec![0.0; m];
        for i in 0..m {
            let centered = u[i] - shift - lnf;
            ent += self.probs[i] * f[i] * centered;
            dent[i] = self.probs[i] * f[i] * centered;
        }
        if !(ent > 1e-300) || !energy.is_finite() {
            return None;
        }
        let ratio = energy / ent;
        let grad: Vec<f64> = (0..m).map(|i| (denergy[i] - ratio * dent[i]) / ent).collect();
        Some((ratio, grad))
    }

    /// Gradient descent with backtracking from `u0`; returns the best ratio
    /// reached, the final table, and whether the run converged.
    fn descend(&self, mut u: Vec<f64>, tol: f64, max_iters: usize) -> Option<(f64, Vec<f64>, bool)> {
        let mut current = self.ratio(&u)?;
        let mut converged = false;
        for _ in 0..max_iters {
            let Some((ratio, grad)) = self.ratio_and_grad(&u) else { break };
            current = current.min(ratio);
            let gnorm2: f64 = grad.iter().map(|g| g * g).sum();
            if gnorm2 == 0.0 {
                converged = true;
                break;
            }
            let mut step = 1.0;
            let mut improved = false;
            for _ in 0..60 {
                let trial: Vec<f64> = u.iter().zip(&grad).map(|(v, g)| v - step * g).collect();
                if let Some(r) = self.ratio(&trial) {
                    if r <= ratio - 1e-4 * step * gnorm2 {
                        let rel = (ratio - r).abs() / ratio.abs().max(1e-300);
                        u = trial;
                        current = current.min(r);
                        improved = true;
                        if rel < tol {
                            converged = true;
                        }
                        break;
                    }
                }
                step *= 0.5;
            }
            if !improved {
                converged = true;
                break;
            }
            if converged {
                break;
            }
        }
        Some((current, u, converged))
    }
}

/// Numerical upper bound on the modified log-Sobolev constant: minimizes the
/// ratio `E(f, log f) / Ent(f)` over `f = exp(u)` with multi-start descent
/// plus deterministic small-amplitude starts along the gap eigenfunction.
/// Restarts run in parallel and reduce by the minimum.
pub fn mlsi_upper_estimate(
    g: &Generator<f64>,
    restarts: usize,
    tol: f64,
    seed: u64,
) -> Result<MlsiEstimate> {
    if g.size() < 2 || !g.is_irreducible() {
        return Err(Error::ReducibleGenerator);
    }
    let problem = RatioProblem::new(g);
    let m = g.size();

    let mut starts: Vec<Vec<f64>> = Vec::new();
    if let Some(v) = gap_eigenfunction(g) {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
        for amp in [1e-3, 1e-2, 0.1] {
            starts.push(v.iter().map(|x| amp * x / norm).collect());
        }
    }
    for r in 0..restarts {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(r as u64 + 1);
        let amp = [0.25, 1.0, 3.0][r % 3];
        // Box-Muller normals.
        let u: Vec<f64> = (0..m)
            .map(|_| {
                let a: f64 = rng.gen_range(1e-12..1.0);
                let b: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                amp * (-2.0 * a.ln()).sqrt() * b.cos()
            })
            .collect();
        starts.push(u);
    }

    let results: Vec<Option<(f64, Vec<f64>, bool)>> =
        starts.par_iter().map(|u0| problem.descend(u0.clone(), tol, 400)).collect();

    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut converged = 0;
    let mut degenerate = 0;
    for r in results {
        match r {
            Some((ratio, u, conv)) => {
                if conv {
                    converged += 1;
                }
                if best.as_ref().map_or(true, |(b, _)| ratio < *b) {
                    best = Some((ratio, u));
                }
            }
            None => degenerate += 1,
        }
    }
    let (estimate, u) = best.ok_or_else(|| {
        Error::DegenerateOptimization(format!(
            "{degenerate} degenerate starts out of {}",
            starts.len()
        ))
    })?;
    let shift = u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(MlsiEstimate {
        estimate,
        restarts: starts.len(),
        converged,
        best_candidate: u.iter().map(|v| (v - shift).exp()).collect(),
    })
}

/// Tail bound `exp(-t^2 rho / (4 ||Gamma_+(f)||_inf))` from the Herbst
/// argument, clamped to [0, 1].
pub fn herbst_bound(rho: f64, gamma_plus_sup: f64, t: f64) -> Result<f64> {
    if rho <= 0.0 || gamma_plus_sup <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "herbst bound needs positive rho and Gamma_+ sup, got {rho}, {gamma_plus_sup}"
        )));
    }
    if t < 0.0 {
        return Err(Error::InvalidParameter(format!("negative t = {t}")));
    }
    Ok((-t * t * rho / (4.0 * gamma_plus_sup)).exp().min(1.0))
}

/// Bounded-difference bound under R-stability: the better of
/// `exp(-t^2 / (8 R |alpha|^2))` and the rearranged form truncated at
/// `ceil(Delta / (R rho))` coordinates.
pub fn stability_tail_bound(
    r_stab: f64,
    delta: f64,
    rho: f64,
    alpha: &WeightVector,
    t: f64,
) -> Result<f64> {
    if r_stab <= 0.0 || delta <= 0.0 || rho <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "stability bound needs positive R, Delta, rho; got {r_stab}, {delta}, {rho}"
        )));
    }
    if t < 0.0 {
        return Err(Error::InvalidParameter(format!("negative t = {t}")));
    }
    let norm_sq = alpha.norm_sq();
    if norm_sq == 0.0 {
        return Err(Error::InvalidParameter("zero weight vector".into()));
    }
    let full = (-t * t / (8.0 * r_stab * norm_sq)).exp();
    let cutoff = ((delta / (r_stab * rho)).ceil() as usize).min(alpha.len()).max(1);
    let sorted = alpha.nonincreasing_rearrangement();
    let head: f64 = sorted.as_slice()[..cutoff].iter().map(|a| a * a).sum();
    let truncated = if head > 0.0 { (-t * t / (16.0 * head)).exp() } else { f64::INFINITY };
    Ok(full.min(truncated).min(1.0))
}

/// Result of the positive-part moment comparison.
#[derive(Clone, Copy, Debug)]
pub struct MomentCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

/// Explicit constant `sqrt(3 sqrt(e) / (sqrt(e) - 1))` in the moment estimate
/// implied by the mLSI.
pub fn moment_constant() -> f64 {
    let se = std::f64::consts::E.sqrt();
    (3.0 * se / (se - 1.0)).sqrt()
}

/// Checks `||(f - pi f)_+||_p <= C sqrt(p / rho) ||sqrt(Gamma_+ f)||_p`
/// by exact summation over the support, with a certified `rho` lower bound.
pub fn moment_check(g: &Generator<f64>, f: &[f64], p: f64, rho_lower: f64) -> Result<MomentCheck> {
    if p < 2.0 {
        return Err(Error::InvalidParameter(format!("moment order {p} below 2")));
    }
    if rho_lower <= 0.0 {
        return Err(Error::InvalidParameter("rho lower bound must be positive".into()));
    }
    let pi = g.stationary();
    let mu = mean(pi, f);
    let mut lhs_p = 0.0;
    let mut rhs_p = 0.0;
    for (x, prob) in pi.probs().iter().enumerate() {
        let pos = (f[x] - mu).max(0.0);
        lhs_p += prob * pos.powf(p);
        rhs_p += prob * gamma_plus(g, f, x).sqrt().powf(p);
    }
    let lhs = lhs_p.powf(1.0 / p);
    let rhs = moment_constant() * (p / rho_lower).sqrt() * rhs_p.powf(1.0 / p);
    let scale = f.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    Ok(MomentCheck { lhs, rhs, pass: lhs <= rhs * (1.0 + 1e-12) + 1e-12 * scale })
}
