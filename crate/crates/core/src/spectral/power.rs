//! Spectral radius of a nonnegative matrix by power iteration.
//!
//! The sparsity graph is split into strongly connected components first.
//! `ρ(A)` is the largest component radius; singleton components contribute
//! their diagonal entry exactly. Each irreducible component is iterated with
//! the shifted matrix `B + αI` (`α` tracks the current upper bound), which is
//! primitive even when `B` is block-cyclic like the lifted `A_L`. Convergence
//! is read off the Collatz–Wielandt bracket
//! `minᵢ (Bv)ᵢ/vᵢ ≤ ρ(B) ≤ maxᵢ (Bv)ᵢ/vᵢ`, valid for every positive `v`.

use alloc::vec;
use alloc::vec::Vec;

use petgraph::algo::tarjan_scc;
use petgraph::graph::{Graph, NodeIndex};

use crate::error::{Error, Result};
use crate::matrix::SparseMatrix;

/// Tolerance and iteration budget for the power method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerOptions {
    /// Relative width of the final bracket: `upper − lower ≤ tol·max(1, upper)`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PowerOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 100_000 }
    }
}

impl PowerOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

/// Estimate of `ρ(A)` with a guaranteed bracket `lower ≤ ρ(A) ≤ upper`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerResult {
    pub rho: f64,
    pub lower: f64,
    pub upper: f64,
    /// Matrix-vector products spent, summed over components.
    pub iterations: usize,
}

/// `ρ(A)` for a square nonnegative matrix.
pub fn spectral_radius_power(a: &SparseMatrix, opts: &PowerOptions) -> Result<f64> {
    spectral_radius_bounds(a, opts).map(|r| r.rho)
}

/// Like [`spectral_radius_power`] but also returns the bracket.
///
/// On running out of iterations the error carries the last bracket.
pub fn spectral_radius_bounds(a: &SparseMatrix, opts: &PowerOptions) -> Result<PowerResult> {
    let n = a.square_dim()?;
    a.check_nonnegative()?;
    if !(opts.tol > 0.0) || opts.max_iter == 0 {
        return Err(Error::invalid("power method needs tol > 0 and max_iter >= 1"));
    }
    let mut total = PowerResult { rho: 0.0, lower: 0.0, upper: 0.0, iterations: 0 };
    if n == 0 {
        return Ok(total);
    }

    let mut components = strongly_connected(a);
    // Largest row sum first, so that later components can often be skipped.
    let mut keyed: Vec<(f64, Vec<usize>)> = components
        .drain(..)
        .map(|c| {
            let bound = if c.len() == 1 { a.get(c[0], c[0]) } else { restricted_max_row_sum(a, &c) };
            (bound, c)
        })
        .collect();
    keyed.sort_by(|x, y| y.0.total_cmp(&x.0));

    let mut failure: Option<(f64, f64)> = None;
    for (bound, comp) in keyed {
        if bound <= total.lower {
            continue;
        }
        if comp.len() == 1 {
            // A singleton's only cycle is its self-loop.
            merge(&mut total, bound, bound, bound, 0);
            continue;
        }
        let sub = a.principal_submatrix(&comp);
        match irreducible_radius(&sub, opts) {
            Ok(r) => merge(&mut total, r.rho, r.lower, r.upper, r.iterations),
            Err((lower, upper, iterations)) => {
                merge(&mut total, 0.5 * (lower + upper), lower, upper, iterations);
                failure = Some((total.lower, total.upper));
            }
        }
    }
    match failure {
        Some((lower, upper)) if upper - lower > opts.tol * upper.max(1.0) => {
            Err(Error::NoConvergence { iterations: total.iterations, lower, upper })
        }
        _ => Ok(total),
    }
}

fn merge(total: &mut PowerResult, rho: f64, lower: f64, upper: f64, iterations: usize) {
    total.rho = total.rho.max(rho);
    total.lower = total.lower.max(lower);
    total.upper = total.upper.max(upper);
    total.iterations += iterations;
}

fn strongly_connected(a: &SparseMatrix) -> Vec<Vec<usize>> {
    let n = a.rows();
    let mut g: Graph<(), ()> = Graph::with_capacity(n, a.nnz());
    for _ in 0..n {
        g.add_node(());
    }
    for i in 0..n {
        for (j, v) in a.row(i) {
            if v > 0.0 && i != j {
                g.add_edge(NodeIndex::new(i), NodeIndex::new(j), ());
            }
        }
    }
    tarjan_scc(&g).into_iter().map(|c| c.into_iter().map(|v| v.index()).collect()).collect()
}

fn restricted_max_row_sum(a: &SparseMatrix, comp: &[usize]) -> f64 {
    let mut inside = vec![false; a.cols()];
    for &i in comp {
        inside[i] = true;
    }
    comp.iter().map(|&i| a.row(i).filter(|&(j, _)| inside[j]).map(|(_, v)| v).sum::<f64>()).fold(0.0, f64::max)
}

/// Shifted power iteration on an irreducible matrix of size ≥ 2. The error
/// carries `(lower, upper, iterations)` at exhaustion.
fn irreducible_radius(b: &SparseMatrix, opts: &PowerOptions) -> core::result::Result<PowerResult, (f64, f64, usize)> {
    let n = b.rows();
    let mut v = vec![1.0; n];
    let mut bv = vec![0.0; n];
    let mut alpha = b.norm_inf();
    let mut lower = 0.0;
    let mut upper = alpha;
    for it in 1..=opts.max_iter {
        b.mul_vec_into(&v, &mut bv);
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for (&w, &x) in bv.iter().zip(&v) {
            let r = w / x;
            lo = lo.min(r);
            hi = hi.max(r);
        }
        // Every bracket is valid, so keep the tightest seen.
        lower = f64::max(lower, lo);
        upper = f64::min(upper, hi);
        if upper - lower <= opts.tol * upper.max(1.0) {
            return Ok(PowerResult { rho: 0.5 * (lower + upper), lower, upper, iterations: it });
        }
        alpha = upper;
        let mut scale = 0.0f64;
        for (x, &w) in v.iter_mut().zip(&bv) {
            *x = w + alpha * *x;
            scale = scale.max(*x);
        }
        let inv = 1.0 / scale;
        for x in &mut v {
            *x *= inv;
        }
    }
    Err((lower, upper, opts.max_iter))
}
