//! Delay distributions and the delay-space lifting of maps and Lipschitz
//! matrices.
//!
//! A lifted state stacks the current state and `L` past states as blocks
//! `(x_{·,0}, x_{·,1}, …, x_{·,L})`, where block `ℓ` is the state `ℓ` steps
//! ago. The lifted map computes block 0 as `F_i(x_{1,d_{i1}}, …, x_{n,d_{in}})`
//! and shifts every other block down by one.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::lipschitz::LipschitzMatrix;
use crate::matrix::SparseMatrix;
use crate::network::{NetworkMap, StateVector};

/// An `n×n` matrix of delays `0 ≤ d_ij ≤ L`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DelayDistribution {
    n: usize,
    bound: usize,
    entries: Vec<usize>,
}

impl DelayDistribution {
    /// Row-major entries.
    pub fn new(n: usize, bound: usize, entries: Vec<usize>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, found: entries.len() });
        }
        if let Some(p) = entries.iter().position(|&d| d > bound) {
            return Err(Error::DelayExceedsBound {
                row: p / n,
                col: p % n,
                value: entries[p] as i64,
                bound: bound as i64,
            });
        }
        Ok(Self { n, bound, entries })
    }

    pub fn zeros(n: usize, bound: usize) -> Self {
        Self { n, bound, entries: vec![0; n * n] }
    }

    /// Every entry equal to `bound`.
    pub fn maximal(n: usize, bound: usize) -> Self {
        Self { n, bound, entries: vec![bound; n * n] }
    }

    pub fn from_rows<R: AsRef<[usize]>>(rows: &[R], bound: usize) -> Result<Self> {
        let n = rows.len();
        let mut entries = Vec::with_capacity(n * n);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != n {
                return Err(Error::RaggedMatrix { row: i, expected: n, found: r.len() });
            }
            entries.extend_from_slice(r);
        }
        Self::new(n, bound, entries)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bound(&self) -> usize {
        self.bound
    }

    pub fn get(&self, i: usize, j: usize) -> usize {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[usize] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn max_entry(&self) -> usize {
        self.entries.iter().copied().max().unwrap_or(0)
    }

    pub fn to_rows(&self) -> Vec<Vec<usize>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    /// Same entries under a different bound.
    pub fn with_bound(&self, bound: usize) -> Result<Self> {
        Self::new(self.n, bound, self.entries.clone())
    }

    /// `d_ij ≤ d̂_ij` for all entries.
    pub fn entrywise_le(&self, other: &DelayDistribution) -> bool {
        self.n == other.n && self.entries.iter().zip(&other.entries).all(|(a, b)| a <= b)
    }
}

/// Checks an integer matrix against `0 ≤ d_ij ≤ L`.
pub fn validate_delay_distribution<R: AsRef<[i64]>>(d: &[R], bound: i64) -> Result<DelayDistribution> {
    if bound < 0 {
        return Err(Error::invalid("delay bound must be nonnegative"));
    }
    let n = d.len();
    let mut entries = Vec::with_capacity(n * n);
    for (i, row) in d.iter().enumerate() {
        let row = row.as_ref();
        if row.len() != n {
            return Err(Error::NonSquareMatrix { rows: n, cols: row.len() });
        }
        for (j, &v) in row.iter().enumerate() {
            if v < 0 {
                return Err(Error::NegativeDelay { row: i, col: j, value: v });
            }
            if v > bound {
                return Err(Error::DelayExceedsBound { row: i, col: j, value: v, bound });
            }
            entries.push(v as usize);
        }
    }
    DelayDistribution::new(n, bound as usize, entries)
}

/// A point of the lifted space `ℝ^{n(L+1)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedState {
    n: usize,
    bound: usize,
    data: Vec<f64>,
}

impl LiftedState {
    pub fn new(n: usize, bound: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 || data.len() != n * (bound + 1) {
            return Err(Error::DimensionMismatch { expected: n * (bound + 1), found: data.len() });
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue { index });
        }
        Ok(Self { n, bound, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bound(&self) -> usize {
        self.bound
    }

    /// `n(L+1)`.
    pub fn dim(&self) -> usize {
        self.data.len()
    }

    /// The state `ℓ` steps ago.
    pub fn block(&self, l: usize) -> &[f64] {
        &self.data[l * self.n..(l + 1) * self.n]
    }

    /// Block 0.
    pub fn current(&self) -> &[f64] {
        self.block(0)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.data
    }
}

/// `E_L(x)`: `L+1` copies of `x`.
pub fn extend_point(x: &StateVector, bound: usize) -> LiftedState {
    let n = x.dim();
    let mut data = Vec::with_capacity(n * (bound + 1));
    for _ in 0..=bound {
        data.extend_from_slice(x);
    }
    LiftedState { n, bound, data }
}

/// The lifted map `F_D` on `X_L`.
#[derive(Debug, Clone)]
pub struct DelayedMap {
    base: NetworkMap,
    delays: DelayDistribution,
    /// Rows sharing a delay pattern, so `F` is evaluated once per pattern.
    groups: Arc<Vec<(Vec<usize>, Vec<usize>)>>,
}

/// Builds `F_D`.
pub fn lift_map(base: &NetworkMap, delays: &DelayDistribution) -> Result<DelayedMap> {
    DelayedMap::new(base.clone(), delays.clone())
}

impl DelayedMap {
    pub fn new(base: NetworkMap, delays: DelayDistribution) -> Result<Self> {
        if base.dim() != delays.dim() {
            return Err(Error::DimensionMismatch { expected: base.dim(), found: delays.dim() });
        }
        let n = base.dim();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| delays.row(a).cmp(delays.row(b)));
        let mut groups: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
        for i in order {
            match groups.last_mut() {
                Some((pattern, rows)) if pattern.as_slice() == delays.row(i) => rows.push(i),
                _ => groups.push((delays.row(i).to_vec(), vec![i])),
            }
        }
        Ok(Self { base, delays, groups: Arc::new(groups) })
    }

    pub fn base(&self) -> &NetworkMap {
        &self.base
    }

    pub fn delays(&self) -> &DelayDistribution {
        &self.delays
    }

    /// `n(L+1)`.
    pub fn dim(&self) -> usize {
        self.base.dim() * (self.delays.bound() + 1)
    }

    /// Evaluates on raw lifted coordinates, checking dimensions and finiteness.
    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        let dim = self.dim();
        if x.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: x.len() });
        }
        if out.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: out.len() });
        }
        lifted_eval(&self.base, &self.groups, x, out);
        match out.iter().position(|v| !v.is_finite()) {
            Some(index) => Err(Error::NonFiniteOutput { index }),
            None => Ok(()),
        }
    }

    pub fn evaluate(&self, x: &LiftedState) -> Result<LiftedState> {
        if x.n != self.base.dim() || x.bound != self.delays.bound() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: x.dim() });
        }
        let mut out = vec![0.0; self.dim()];
        self.eval_into(&x.data, &mut out)?;
        Ok(LiftedState { n: x.n, bound: x.bound, data: out })
    }

    /// The lifted map as a plain map on `ℝ^{n(L+1)}`.
    pub fn as_network_map(&self) -> NetworkMap {
        let base = self.base.clone();
        let groups = Arc::clone(&self.groups);
        let label = alloc::format!("{} (delayed, L = {})", self.base.label(), self.delays.bound());
        NetworkMap::new(self.dim(), label, move |x, out| lifted_eval(&base, &groups, x, out))
    }
}

fn lifted_eval(base: &NetworkMap, groups: &[(Vec<usize>, Vec<usize>)], x: &[f64], out: &mut [f64]) {
    let n = base.dim();
    let mut z = vec![0.0; n];
    let mut fz = vec![0.0; n];
    for (pattern, rows) in groups {
        for (j, zj) in z.iter_mut().enumerate() {
            *zj = x[pattern[j] * n + j];
        }
        base.eval_unchecked(&z, &mut fz);
        for &i in rows {
            out[i] = fz[i];
        }
    }
    let len = x.len();
    out[n..].copy_from_slice(&x[..len - n]);
}

/// `A_D`: block row 0 is `[A_0 … A_L]` with `(A_ℓ)_ij = a_ij·1{d_ij = ℓ}`,
/// identity blocks on the subdiagonal, zeros elsewhere.
pub fn lift_lipschitz(a: &LipschitzMatrix, delays: &DelayDistribution) -> Result<LipschitzMatrix> {
    let n = a.dim();
    if delays.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: delays.dim() });
    }
    let big = n * (delays.bound() + 1);
    let entries = a.entries();
    let mut indptr = Vec::with_capacity(big + 1);
    let mut indices = Vec::with_capacity(entries.nnz() + big - n);
    let mut values = Vec::with_capacity(entries.nnz() + big - n);
    indptr.push(0);
    let mut row: Vec<(usize, f64)> = Vec::new();
    for i in 0..n {
        row.clear();
        row.extend(entries.row(i).map(|(j, v)| (delays.get(i, j) * n + j, v)));
        row.sort_by_key(|e| e.0);
        for &(c, v) in &row {
            indices.push(c);
            values.push(v);
        }
        indptr.push(indices.len());
    }
    for r in n..big {
        indices.push(r - n);
        values.push(1.0);
        indptr.push(indices.len());
    }
    let lifted = SparseMatrix::from_csr_unchecked(big, big, indptr, indices, values);
    LipschitzMatrix::new(lifted, a.provenance())
}

/// `A_L`: `A` in the top-right block, identities below the diagonal.
/// For `L = 0` this is `A` itself.
pub fn max_delay_lipschitz(a: &LipschitzMatrix, bound: usize) -> Result<LipschitzMatrix> {
    lift_lipschitz(a, &DelayDistribution::maximal(a.dim(), bound))
}
