//! Hermitian matrix primitives, PSD-order checks, the subset variance proxies
//! entering the matrix Bernstein exponents, the matrix carre-du-champ, and
//! the subset norm-splitting inequality used to control them.

use crate::generator::Generator;
use crate::{Error, Result};
use itertools::Itertools;
use nalgebra::{Complex, DMatrix};

pub type C64 = Complex<f64>;

/// Largest matrix dimension for the dense Hermitian eigensolves.
pub const DIM_GUARD: usize = 64;
/// Largest subset count enumerated exactly by the variance proxies.
pub const SUBSET_GUARD: u64 = 1_000_000;

/// A d x d Hermitian matrix; hermiticity is validated at construction within
/// 1e-12 of the largest entry.
#[derive(Clone, Debug)]
pub struct Hermitian {
    m: DMatrix<C64>,
}

impl Hermitian {
    pub fn new(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch(m.nrows(), m.ncols()));
        }
        if m.nrows() > DIM_GUARD {
            return Err(Error::GuardExceeded {
                what: "Hermitian dimension",
                n: m.nrows(),
                guard: DIM_GUARD,
            });
        }
        let scale = m.iter().fold(1.0f64, |a, z| a.max(z.norm()));
        let mut asym = 0.0f64;
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                asym = asym.max((m[(i, j)] - m[(j, i)].conj()).norm());
            }
        }
        if asym > 1e-12 * scale {
            return Err(Error::NotHermitian(asym));
        }
        // Store the exactly Hermitian average.
        let adj = m.adjoint();
        Ok(Hermitian { m: (m + adj) * C64::new(0.5, 0.0) })
    }

    pub fn from_real(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.len();
        let m = DMatrix::from_fn(d, d, |i, j| C64::new(rows[i][j], 0.0));
        Self::new(m)
    }

    pub fn zero(d: usize) -> Self {
        Hermitian { m: DMatrix::zeros(d, d) }
    }

    pub fn identity(d: usize) -> Self {
        Hermitian { m: DMatrix::identity(d, d) }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn scale(&self, a: f64) -> Self {
        Hermitian { m: &self.m * C64::new(a, 0.0) }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(self.dim(), other.dim()));
        }
        Ok(Hermitian { m: &self.m + &other.m })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(self.dim(), other.dim()));
        }
        Ok(Hermitian { m: &self.m - &other.m })
    }

    /// Matrix square `A * A`; Hermitian and positive semidefinite.
    pub fn square(&self) -> Self {
        Hermitian { m: &self.m * &self.m }
    }

    /// Real eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut e: Vec<f64> = self.m.clone().symmetric_eigenvalues().iter().copied().collect();
        e.sort_by(|a, b| a.partial_cmp(b).unwrap());
        e
    }

    pub fn lambda_max(&self) -> f64 {
        *self.eigenvalues().last().expect("nonempty spectrum")
    }

    pub fn lambda_min(&self) -> f64 {
        self.eigenvalues()[0]
    }

    /// Operator norm: the largest absolute eigenvalue.
    pub fn op_norm(&self) -> f64 {
        let e = self.eigenvalues();
        e[0].abs().max(e.last().unwrap().abs())
    }
}

/// `A <= B` in the positive semidefinite order, within `tol` on the smallest
/// eigenvalue of the difference.
pub fn psd_leq(a: &Hermitian, b: &Hermitian, tol: f64) -> Result<bool> {
    let diff = b.sub(a)?;
    Ok(diff.lambda_min() >= -tol)
}

/// Which subset rule a variance proxy evaluation used.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProxyMode {
    /// Enumerate every admissible subset (guarded).
    Exact,
    /// Sum of the largest norms; a certified upper bound on the exact value.
    Upper,
}

fn check_dims(c: &[Hermitian]) -> Result<usize> {
    let first = c.first().ok_or(Error::EmptySet("matrix family"))?;
    for m in c {
        if m.dim() != first.dim() {
            return Err(Error::DimensionMismatch(m.dim(), first.dim()));
        }
    }
    Ok(first.dim())
}

/// Homogeneous-subset variance proxy: `16 sup { ||sum_{i in I} C_i^2|| :
/// |I| = k }`, exact by enumeration or upper-bounded by the k largest norms.
pub fn sigma_sq_homogeneous(c: &[Hermitian], k: usize, mode: ProxyMode) -> Result<f64> {
    let d = check_dims(c)?;
    let n = c.len();
    if k > n {
        return Err(Error::KOutOfRange { k, n });
    }
    if k == 0 {
        return Ok(0.0);
    }
    let squares: Vec<Hermitian> = c.iter().map(|m| m.square()).collect();
    match mode {
        ProxyMode::Upper => {
            let mut norms: Vec<f64> = squares.iter().map(|s| s.op_norm()).collect();
            norms.sort_by(|a, b| b.partial_cmp(a).unwrap());
            Ok(16.0 * norms[..k].iter().sum::<f64>())
        }
        ProxyMode::Exact => {
            if crate::numeric::binomial(n, k) > SUBSET_GUARD {
                return Err(Error::GuardExceeded {
                    what: "subset enumeration",
                    n,
                    guard: SUBSET_GUARD as usize,
                });
            }
            let mut best: f64 = 0.0;
            for subset in (0..n).combinations(k) {
                let mut acc = Hermitian::zero(d);
                for i in subset {
                    acc = acc.add(&squares[i])?;
                }
                best = best.max(acc.op_norm());
            }
            Ok(16.0 * best)
        }
    }
}

/// SCP-homogeneous proxy: `8 sup { ||sum_{i in I} C_i^2|| + k max_{i not in I}
/// ||C_i^2|| : |I| <= k }`, exact by enumeration over all subset sizes.
pub fn sigma_sq_scp(c: &[Hermitian], k: usize) -> Result<f64> {
    let d = check_dims(c)?;
    let n = c.len();
    if k > n {
        return Err(Error::KOutOfRange { k, n });
    }
    let squares: Vec<Hermitian> = c.iter().map(|m| m.square()).collect();
    let norms: Vec<f64> = squares.iter().map(|s| s.op_norm()).collect();
    let total: u64 = (0..=k).map(|m| crate::numeric::binomial(n, m)).sum();
    if total > SUBSET_GUARD {
        return Err(Error::GuardExceeded {
            what: "subset enumeration",
            n,
            guard: SUBSET_GUARD as usize,
        });
    }
    let mut best: f64 = 0.0;
    for m in 0..=k {
        for subset in (0..n).combinations(m) {
            let mut acc = Hermitian::zero(d);
            let mut chosen = vec![false; n];
            for &i in &subset {
                acc = acc.add(&squares[i])?;
                chosen[i] = true;
            }
            let outside = norms
                .iter()
                .enumerate()
                .filter(|(i, _)| !chosen[*i])
                .map(|(_, v)| *v)
                .fold(0.0f64, f64::max);
            best = best.max(acc.op_norm() + k as f64 * outside);
        }
    }
    Ok(8.0 * best)
}

/// Stability proxy: `8 R sup { ||sum_{i in I} C_i^2|| : |I| = ceil(Delta /
/// (R rho)) }` with the subset size clamped to the family size.
pub fn sigma_sq_stability(c: &[Hermitian], r_stab: f64, delta: f64, rho: f64) -> Result<f64> {
    if r_stab <= 0.0 || delta <= 0.0 || rho <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "stability proxy needs positive R, Delta, rho; got {r_stab}, {delta}, {rho}"
        )));
    }
    let size = ((delta / (r_stab * rho)).ceil() as usize).min(c.len()).max(1);
    let base = sigma_sq_homogeneous(c, size, ProxyMode::Exact)?;
    Ok(8.0 * r_stab * base / 16.0)
}

/// Bernstein-type tail `d exp(-t^2 / (sigma^2 + sigma t))`.
pub fn bernstein_bound(d: usize, sigma: f64, t: f64) -> Result<f64> {
    if sigma <= 0.0 {
        return Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma}")));
    }
    if t < 0.0 {
        return Err(Error::InvalidParameter(format!("negative t = {t}")));
    }
    Ok((d as f64) * (-t * t / (sigma * sigma + sigma * t)).exp())
}

/// Matrix carre-du-champ `1/2 sum_y (f(x)-f(y))^2 Q(x,y)` (matrix square).
pub fn matrix_gamma(g: &Generator<f64>, f: &[Hermitian], x: usize) -> Result<Hermitian> {
    if f.len() != g.size() {
        return Err(Error::LengthMismatch(f.len(), g.size()));
    }
    let d = f[x].dim();
    let mut acc = Hermitian::zero(d);
    let row = g.row(x);
    for (y, q) in row.iter().enumerate() {
        if y != x && *q > 0.0 {
            let diff = f[x].sub(&f[y])?;
            acc = acc.add(&diff.square().scale(*q))?;
        }
    }
    Ok(acc.scale(0.5))
}

/// Exponential matrix tail from the Poincare inequality:
/// `d exp(-t^2 / (2 C_P v_f + t sqrt(2 C_P v_f)))`.
pub fn poincare_matrix_bound(d: usize, c_p: f64, v_f: f64, t: f64) -> Result<f64> {
    if c_p <= 0.0 || v_f <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "poincare bound needs positive C_P and v_f, got {c_p}, {v_f}"
        )));
    }
    if t < 0.0 {
        return Err(Error::InvalidParameter(format!("negative t = {t}")));
    }
    let s = 2.0 * c_p * v_f;
    Ok((d as f64) * (-t * t / (s + t * s.sqrt())).exp())
}

/// Both sides of the subset norm-splitting inequality
/// `||sum t_i D_i|| <= T_inf sup { ||sum_{i in I} D_i|| : |I| <= ceil(T_1 /
/// T_inf) }` for nonnegative `t` and PSD `D_i`.
pub fn subset_split_bound(
    t: &[f64],
    d_mats: &[Hermitian],
    t1: f64,
    tinf: f64,
) -> Result<(f64, f64)> {
    let d = check_dims(d_mats)?;
    if t.len() != d_mats.len() {
        return Err(Error::LengthMismatch(t.len(), d_mats.len()));
    }
    if t.iter().any(|v| *v < 0.0) {
        return Err(Error::InvalidParameter("weights must be nonnegative".into()));
    }
    let l1: f64 = t.iter().sum();
    let linf = t.iter().fold(0.0f64, |a, v| a.max(*v));
    if tinf <= 0.0 || tinf < linf - 1e-15 || t1 < l1 - 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "need T_1 >= |t|_1 = {l1} and T_inf >= |t|_inf = {linf}, got {t1}, {tinf}"
        )));
    }
    let n = d_mats.len();
    let mut weighted = Hermitian::zero(d);
    for (ti, di) in t.iter().zip(d_mats) {
        weighted = weighted.add(&di.scale(*ti))?;
    }
    let lhs = weighted.op_norm();
    let size = ((t1 / tinf).ceil() as usize).min(n);
    let total: u64 = (0..=size).map(|m| crate::numeric::binomial(n, m)).sum();
    if total > SUBSET_GUARD {
        return Err(Error::GuardExceeded {
            what: "subset enumeration",
            n,
            guard: SUBSET_GUARD as usize,
        });
    }
    let mut sup: f64 = 0.0;
    for m in 0..=size {
        for subset in (0..n).combinations(m) {
            let mut acc = Hermitian::zero(d);
            for i in subset {
                acc = acc.add(&d_mats[i])?;
            }
            sup = sup.max(acc.op_norm());
        }
    }
    Ok((lhs, tinf * sup))
}
