//! Lipschitz matrices: analytic constructors, grid-sampled estimates and a
//! randomized check of the defining inequality
//! `|Fᵢ(x) − Fᵢ(y)| ≤ Σⱼ aᵢⱼ |xⱼ − yⱼ|`.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::{Matrix, SparseMatrix};
use crate::network::NetworkMap;

/// Where a Lipschitz matrix came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Provenance {
    /// Derived in closed form from the model (exact bound).
    Analytic,
    /// Grid-sampled central differences; a heuristic, not a proof.
    Sampled { grid: usize, fd_step: f64, inflation: f64 },
    /// Supplied by the caller and trusted as-is.
    UserSupplied,
}

impl Provenance {
    pub fn is_heuristic(&self) -> bool {
        matches!(self, Provenance::Sampled { .. })
    }

    /// Combines provenances of several matrices: any sampled member makes the
    /// whole heuristic, any user-supplied one makes it user-supplied.
    pub fn combine(self, other: Provenance) -> Provenance {
        match (self, other) {
            (p @ Provenance::Sampled { .. }, _) | (_, p @ Provenance::Sampled { .. }) => p,
            (Provenance::UserSupplied, _) | (_, Provenance::UserSupplied) => Provenance::UserSupplied,
            _ => Provenance::Analytic,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Provenance::Analytic => "analytic",
            Provenance::Sampled { .. } => "sampled",
            Provenance::UserSupplied => "user-supplied",
        }
    }
}

/// A square, entrywise nonnegative, finite matrix bounding the componentwise
/// expansion of a map.
#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzMatrix {
    entries: SparseMatrix,
    provenance: Provenance,
}

impl LipschitzMatrix {
    pub fn new(entries: SparseMatrix, provenance: Provenance) -> Result<Self> {
        entries.square_dim()?;
        entries.check_nonnegative()?;
        Ok(Self { entries, provenance })
    }

    pub fn from_dense(m: &Matrix, provenance: Provenance) -> Result<Self> {
        m.square_dim()?;
        m.check_nonnegative()?;
        Ok(Self { entries: m.to_sparse(), provenance })
    }

    pub fn user_supplied(m: &Matrix) -> Result<Self> {
        Self::from_dense(m, Provenance::UserSupplied)
    }

    pub fn dim(&self) -> usize {
        self.entries.rows()
    }

    pub fn entries(&self) -> &SparseMatrix {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries.get(i, j)
    }

    pub fn to_dense(&self) -> Matrix {
        self.entries.to_dense()
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn is_heuristic(&self) -> bool {
        self.provenance.is_heuristic()
    }

    /// `s·A` for `s ≥ 0`, keeping the provenance.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        if !(s >= 0.0 && s.is_finite()) {
            return Err(Error::invalid("scale factor must be finite and nonnegative"));
        }
        Ok(Self { entries: self.entries.scale(s), provenance: self.provenance })
    }
}

/// `|1−ε|·I + K·|W|` for the network `xᵢ ↦ (1−ε)xᵢ + Σⱼ Wᵢⱼ σ(xⱼ) + cᵢ`
/// with `σ` of Lipschitz constant `K`.
pub fn lipschitz_cgn(w: &Matrix, epsilon: f64, k: f64) -> Result<LipschitzMatrix> {
    let n = w.square_dim()?;
    if !(k >= 0.0 && k.is_finite()) || !epsilon.is_finite() {
        return Err(Error::invalid("K must be finite and nonnegative, epsilon finite"));
    }
    let mut a = w.abs().scale(k);
    let leak = (1.0 - epsilon).abs();
    for i in 0..n {
        a.set(i, i, a.get(i, i) + leak);
    }
    LipschitzMatrix::from_dense(&a, Provenance::Analytic)
}

/// `|M|` for the linear map `x ↦ Mx`.
pub fn lipschitz_linear(m: &Matrix) -> Result<LipschitzMatrix> {
    m.square_dim()?;
    LipschitzMatrix::from_dense(&m.abs(), Provenance::Analytic)
}

/// Grid and finite-difference settings for [`lipschitz_sampled`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingOptions {
    pub grid: usize,
    pub fd_step: f64,
    pub inflation: f64,
    /// Maximum number of grid points.
    pub max_points: usize,
}

impl Default for SamplingOptions {
    fn default() -> Self {
        Self { grid: 101, fd_step: 1e-5, inflation: 1.05, max_points: 10_000_000 }
    }
}

/// Estimates `aᵢⱼ = sup |∂Fᵢ/∂xⱼ|` over a box by central differences on a
/// regular grid, then inflates by `opts.inflation`.
///
/// The result is a lower estimate of the supremum and is flagged as sampled.
pub fn lipschitz_sampled(map: &NetworkMap, bounds: &[(f64, f64)], opts: &SamplingOptions) -> Result<LipschitzMatrix> {
    let n = map.dim();
    if bounds.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: bounds.len() });
    }
    if opts.grid < 2 {
        return Err(Error::invalid("grid must have at least 2 points per axis"));
    }
    if !(opts.fd_step > 0.0) || !(opts.inflation >= 1.0) {
        return Err(Error::invalid("fd_step must be positive and inflation at least 1"));
    }
    for &(lo, hi) in bounds {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::invalid("box intervals must be finite with lo <= hi"));
        }
    }
    // Zero-width axes collapse to a single sample.
    let per_axis: Vec<usize> = bounds.iter().map(|&(lo, hi)| if lo == hi { 1 } else { opts.grid }).collect();
    let points = per_axis.iter().try_fold(1u128, |acc, &g| acc.checked_mul(g as u128)).unwrap_or(u128::MAX);
    if points > opts.max_points as u128 {
        return Err(Error::SamplingTooLarge { points, cap: opts.max_points });
    }

    let h = opts.fd_step;
    let mut a = Matrix::zeros(n, n);
    let mut idx = vec![0usize; n];
    let mut x = vec![0.0; n];
    let mut plus = vec![0.0; n];
    let mut minus = vec![0.0; n];
    let mut fp = vec![0.0; n];
    let mut fm = vec![0.0; n];
    loop {
        for (j, xj) in x.iter_mut().enumerate() {
            let (lo, hi) = bounds[j];
            *xj = if per_axis[j] == 1 { lo } else { lo + (hi - lo) * idx[j] as f64 / (per_axis[j] - 1) as f64 };
        }
        for j in 0..n {
            plus.copy_from_slice(&x);
            minus.copy_from_slice(&x);
            plus[j] += h;
            minus[j] -= h;
            map.eval_into(&plus, &mut fp)?;
            map.eval_into(&minus, &mut fm)?;
            for i in 0..n {
                let d = ((fp[i] - fm[i]) / (2.0 * h)).abs();
                if d > a.get(i, j) {
                    a.set(i, j, d);
                }
            }
        }
        // odometer
        let mut axis = 0;
        loop {
            if axis == n {
                let a = a.scale(opts.inflation);
                let provenance = Provenance::Sampled { grid: opts.grid, fd_step: h, inflation: opts.inflation };
                return LipschitzMatrix::from_dense(&a, provenance);
            }
            idx[axis] += 1;
            if idx[axis] < per_axis[axis] {
                break;
            }
            idx[axis] = 0;
            axis += 1;
        }
    }
}

/// Outcome of [`verify_lipschitz`].
#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzReport {
    pub passed: bool,
    /// Largest `|Fᵢ(x) − Fᵢ(y)| − Σⱼ aᵢⱼ|xⱼ − yⱼ|` seen; `≤ 0` means no violation.
    pub worst_margin: f64,
    /// Pair and component attaining `worst_margin`.
    pub witness: Option<(Vec<f64>, Vec<f64>, usize)>,
    pub samples: usize,
}

/// Checks the Lipschitz-matrix inequality on `samples` random pairs drawn
/// from the box. Every other pair is a local perturbation (`y` within 0.1 %
/// of the box width of `x`) so that derivative-scale violations are found.
pub fn verify_lipschitz(
    map: &NetworkMap,
    a: &LipschitzMatrix,
    samples: usize,
    bounds: &[(f64, f64)],
    seed: u64,
) -> Result<LipschitzReport> {
    let n = map.dim();
    if a.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: a.dim() });
    }
    if bounds.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: bounds.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut fx = vec![0.0; n];
    let mut fy = vec![0.0; n];
    let mut dist = vec![0.0; n];
    let mut worst = f64::NEG_INFINITY;
    let mut witness = None;
    let mut passed = true;
    for s in 0..samples {
        for j in 0..n {
            let (lo, hi) = bounds[j];
            x[j] = lo + (hi - lo) * rng.random::<f64>();
            y[j] = if s % 2 == 0 {
                lo + (hi - lo) * rng.random::<f64>()
            } else {
                let r = 1e-3 * (hi - lo) * (2.0 * rng.random::<f64>() - 1.0);
                (x[j] + r).clamp(lo, hi)
            };
            dist[j] = (x[j] - y[j]).abs();
        }
        map.eval_into(&x, &mut fx)?;
        map.eval_into(&y, &mut fy)?;
        for i in 0..n {
            let lhs = (fx[i] - fy[i]).abs();
            let rhs: f64 = a.entries().row(i).map(|(j, aij)| aij * dist[j]).sum();
            let margin = lhs - rhs;
            // Rounding in F itself is not a violation.
            let allowance = 1e-12 * (1.0 + fx[i].abs() + fy[i].abs());
            if margin > allowance {
                passed = false;
            }
            if margin > worst {
                worst = margin;
                witness = Some((x.clone(), y.clone(), i));
            }
        }
    }
    if samples == 0 {
        worst = 0.0;
    }
    Ok(LipschitzReport { passed, worst_margin: worst, witness, samples })
}
