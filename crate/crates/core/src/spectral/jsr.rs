//! Matrix sets, the row-independence closure and joint-spectral-radius bounds.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use super::power::{spectral_radius_bounds, PowerOptions};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Default cap on `|RI(S)|`.
pub const DEFAULT_CLOSURE_CAP: usize = 1_000_000;
/// Default cap on the number of products enumerated by [`jsr_bruteforce`].
pub const DEFAULT_PRODUCT_CAP: usize = 1_000_000;

/// A nonempty finite set of nonnegative square matrices of equal dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixSet {
    members: Vec<Matrix>,
    labels: Vec<String>,
}

impl MatrixSet {
    /// Members are labelled `0, 1, …`.
    pub fn new(members: Vec<Matrix>) -> Result<Self> {
        let labels = (0..members.len()).map(|i| i.to_string()).collect();
        Self::with_labels(members, labels)
    }

    pub fn with_labels(members: Vec<Matrix>, labels: Vec<String>) -> Result<Self> {
        let first = members.first().ok_or(Error::EmptySet)?;
        let n = first.square_dim()?;
        if labels.len() != members.len() {
            return Err(Error::DimensionMismatch { expected: members.len(), found: labels.len() });
        }
        for m in &members {
            let k = m.square_dim()?;
            if k != n {
                return Err(Error::DimensionMismatch { expected: n, found: k });
            }
            m.check_nonnegative()?;
        }
        Ok(Self { members, labels })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    /// Always false; kept for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.members[0].rows()
    }

    pub fn members(&self) -> &[Matrix] {
        &self.members
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn get(&self, i: usize) -> Option<&Matrix> {
        self.members.get(i)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Matrix)> {
        self.labels.iter().map(String::as_str).zip(&self.members)
    }

    /// Exact (bitwise) membership test.
    pub fn contains(&self, m: &Matrix) -> bool {
        self.members.iter().any(|x| same_bits(x.as_slice(), m.as_slice()))
    }

    /// Same members, reordered by `perm`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), found: perm.len() });
        }
        let members = perm.iter().map(|&i| self.members.get(i).cloned().ok_or(Error::invalid("bad permutation"))).collect::<Result<_>>()?;
        let labels = perm.iter().map(|&i| self.labels[i].clone()).collect();
        Ok(Self { members, labels })
    }
}

fn same_bits(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits() || (*x == 0.0 && *y == 0.0))
}

/// Distinct rows available at each row position, with the first member
/// offering each one.
struct RowChoices {
    n: usize,
    rows: Vec<Vec<(Vec<f64>, usize)>>,
}

impl RowChoices {
    fn new(set: &MatrixSet) -> Self {
        let n = set.dim();
        let rows = (0..n)
            .map(|i| {
                let mut distinct: Vec<(Vec<f64>, usize)> = Vec::new();
                for (k, m) in set.members.iter().enumerate() {
                    if !distinct.iter().any(|(r, _)| same_bits(r, m.row(i))) {
                        distinct.push((m.row(i).to_vec(), k));
                    }
                }
                distinct
            })
            .collect();
        Self { n, rows }
    }

    fn size(&self) -> u128 {
        self.rows.iter().try_fold(1u128, |acc, r| acc.checked_mul(r.len() as u128)).unwrap_or(u128::MAX)
    }

    fn assemble(&self, choice: &[usize]) -> (Matrix, Vec<usize>) {
        let mut data = Vec::with_capacity(self.n * self.n);
        let mut sources = Vec::with_capacity(self.n);
        for (i, &c) in choice.iter().enumerate() {
            let (row, src) = &self.rows[i][c];
            data.extend_from_slice(row);
            sources.push(*src);
        }
        (Matrix::from_vec(self.n, self.n, data).expect("rows have length n"), sources)
    }
}

/// `|RI(S)|` without enumerating it (saturates at `u128::MAX`).
pub fn ri_closure_size(set: &MatrixSet) -> u128 {
    RowChoices::new(set).size()
}

/// Calls `f` on every member of `RI(S)` (with the member index each row was
/// taken from) and returns `|RI(S)|`. Fails before enumerating anything if
/// the closure exceeds `cap`.
pub fn for_each_ri_member<F>(set: &MatrixSet, cap: usize, mut f: F) -> Result<u128>
where
    F: FnMut(&Matrix, &[usize]) -> Result<()>,
{
    let choices = RowChoices::new(set);
    let size = choices.size();
    if size > cap as u128 {
        return Err(Error::ClosureTooLarge { size, cap });
    }
    let n = choices.n;
    let mut choice = vec![0usize; n];
    loop {
        let (m, sources) = choices.assemble(&choice);
        f(&m, &sources)?;
        let mut i = 0;
        loop {
            if i == n {
                return Ok(size);
            }
            choice[i] += 1;
            if choice[i] < choices.rows[i].len() {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
    }
}

/// The row-independence closure with the default cap.
pub fn ri_closure(set: &MatrixSet) -> Result<MatrixSet> {
    ri_closure_capped(set, DEFAULT_CLOSURE_CAP)
}

/// All matrices whose `i`-th row is the `i`-th row of some member.
///
/// A closure member equal to an original member keeps its label; others are
/// labelled by the members their rows came from, e.g. `rows[a,b,b]`.
pub fn ri_closure_capped(set: &MatrixSet, cap: usize) -> Result<MatrixSet> {
    let mut members = Vec::new();
    let mut labels = Vec::new();
    for_each_ri_member(set, cap, |m, sources| {
        let label = match set.members.iter().position(|x| same_bits(x.as_slice(), m.as_slice())) {
            Some(k) => set.labels[k].clone(),
            None => {
                let parts: Vec<&str> = sources.iter().map(|&s| set.labels[s].as_str()).collect();
                format!("rows[{}]", parts.join(","))
            }
        };
        members.push(m.clone());
        labels.push(label);
        Ok(())
    })?;
    MatrixSet::with_labels(members, labels)
}

/// How a [`JsrBounds`] was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JsrMethod {
    RiClosure,
    ProductBruteforce,
}

/// An interval `[lower, upper]` containing the joint spectral radius
/// (for the RI method the upper end bounds `ρ̄(S)` through `ρ̄(RI(S))`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JsrBounds {
    pub lower: f64,
    pub upper: f64,
    pub method: JsrMethod,
    /// Product length searched (brute force only).
    pub depth: Option<usize>,
    /// `|RI(S)|` (RI method only).
    pub closure_size: Option<u128>,
}

/// Guaranteed lower end of the power-method bracket, even when the
/// iteration budget ran out.
fn rho_lower(m: &Matrix, opts: &PowerOptions) -> Result<f64> {
    match spectral_radius_bounds(&m.to_sparse(), opts) {
        Ok(r) => Ok(r.lower),
        Err(Error::NoConvergence { lower, .. }) => Ok(lower),
        Err(e) => Err(e),
    }
}

fn rho_estimate(m: &Matrix, opts: &PowerOptions) -> Result<f64> {
    spectral_radius_bounds(&m.to_sparse(), opts).map(|r| r.rho)
}

/// `upper = max_{A ∈ RI(S)} ρ(A)`, `lower = max_{A ∈ S} ρ(A)`.
pub fn jsr_upper_bound_ri(set: &MatrixSet, tol: f64) -> Result<JsrBounds> {
    jsr_upper_bound_ri_with(set, &PowerOptions::with_tol(tol), DEFAULT_CLOSURE_CAP)
}

pub fn jsr_upper_bound_ri_with(set: &MatrixSet, opts: &PowerOptions, cap: usize) -> Result<JsrBounds> {
    let mut lower = 0.0f64;
    for m in &set.members {
        lower = lower.max(rho_estimate(m, opts)?);
    }
    let mut upper = 0.0f64;
    let size = for_each_ri_member(set, cap, |m, _| {
        upper = upper.max(rho_estimate(m, opts)?);
        Ok(())
    })?;
    Ok(JsrBounds { lower, upper: upper.max(lower), method: JsrMethod::RiClosure, depth: None, closure_size: Some(size) })
}

/// Brute force over all products of length `1..=depth` with the default cap.
pub fn jsr_bruteforce(set: &MatrixSet, depth: usize) -> Result<JsrBounds> {
    jsr_bruteforce_with(set, depth, &PowerOptions::default(), DEFAULT_PRODUCT_CAP)
}

/// `lower = max_{k ≤ depth} max_P ρ(P)^{1/k}` and
/// `upper = min_{k ≤ depth} max_P ‖P‖_∞^{1/k}` over products `P` of length `k`.
pub fn jsr_bruteforce_with(set: &MatrixSet, depth: usize, opts: &PowerOptions, cap: usize) -> Result<JsrBounds> {
    if depth == 0 {
        return Err(Error::invalid("depth must be at least 1"));
    }
    let s = set.len() as u128;
    let mut count: u128 = 0;
    let mut layer: u128 = 1;
    for _ in 0..depth {
        layer = layer.saturating_mul(s);
        count = count.saturating_add(layer);
    }
    if count > cap as u128 {
        return Err(Error::EnumerationCapExceeded { count, cap });
    }

    let mut lower = 0.0f64;
    let mut norm_max = vec![0.0f64; depth + 1];
    extend_products(set, &Matrix::identity(set.dim()), 1, depth, opts, &mut lower, &mut norm_max)?;
    let upper = (1..=depth).map(|k| libm::pow(norm_max[k], 1.0 / k as f64)).fold(f64::INFINITY, f64::min);
    Ok(JsrBounds { lower, upper, method: JsrMethod::ProductBruteforce, depth: Some(depth), closure_size: None })
}

/// Visits every product `M·prefix` of length `k`, then recurses.
fn extend_products(
    set: &MatrixSet,
    prefix: &Matrix,
    k: usize,
    depth: usize,
    opts: &PowerOptions,
    lower: &mut f64,
    norm_max: &mut [f64],
) -> Result<()> {
    let inv_k = 1.0 / k as f64;
    for m in &set.members {
        let p = m.mul(prefix)?;
        *lower = lower.max(libm::pow(rho_lower(&p, opts)?, inv_k));
        norm_max[k] = norm_max[k].max(p.norm_inf());
        if k < depth {
            extend_products(set, &p, k + 1, depth, opts, lower, norm_max)?;
        }
    }
    Ok(())
}
