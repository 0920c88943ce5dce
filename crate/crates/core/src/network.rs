//! State vectors, network maps, orbits and the max metric on `ℝⁿ`.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::Deref;

use crate::error::{Error, Result};
use crate::matrix::{dot, Matrix};

/// Coordinates beyond this magnitude mark an orbit as divergent.
pub const DEFAULT_DIVERGENCE_BOUND: f64 = 1e12;

/// A finite point of `ℝⁿ`, `n ≥ 1`.
#[derive(Clone, PartialEq)]
pub struct StateVector(Vec<f64>);

impl StateVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::DimensionMismatch { expected: 1, found: 0 });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue { index });
        }
        Ok(Self(values))
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        Self::new(values.to_vec())
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n.max(1)])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Largest absolute coordinate.
    pub fn norm_inf(&self) -> f64 {
        max_abs(&self.0)
    }
}

impl Deref for StateVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl fmt::Debug for StateVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

pub(crate) fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Writes `F(x)` into the output slice. Must be pure.
pub type Evaluator = dyn Fn(&[f64], &mut [f64]) + Send + Sync;

/// An evaluatable map `F: ℝⁿ → ℝⁿ`.
#[derive(Clone)]
pub struct NetworkMap {
    dim: usize,
    label: String,
    eval: Arc<Evaluator>,
}

impl NetworkMap {
    pub fn new<F>(dim: usize, label: impl Into<String>, f: F) -> Self
    where
        F: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        assert!(dim >= 1, "network dimension must be positive");
        Self { dim, label: label.into(), eval: Arc::new(f) }
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(dim, "identity", |x, out| out.copy_from_slice(x))
    }

    /// The linear map `x ↦ Mx`.
    pub fn linear(m: Matrix, label: impl Into<String>) -> Result<Self> {
        let n = m.square_dim()?;
        if n == 0 {
            return Err(Error::DimensionMismatch { expected: 1, found: 0 });
        }
        Ok(Self::new(n, label, move |x, out| {
            for (i, o) in out.iter_mut().enumerate() {
                *o = dot(m.row(i), x);
            }
        }))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Evaluates into `out`, checking dimensions and finiteness.
    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: x.len() });
        }
        if out.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: out.len() });
        }
        (self.eval)(x, out);
        match out.iter().position(|v| !v.is_finite()) {
            Some(index) => Err(Error::NonFiniteOutput { index }),
            None => Ok(()),
        }
    }

    /// Runs the evaluator without dimension or finiteness checks.
    pub(crate) fn eval_unchecked(&self, x: &[f64], out: &mut [f64]) {
        (self.eval)(x, out);
    }

    pub fn evaluate(&self, x: &StateVector) -> Result<StateVector> {
        let mut out = vec![0.0; self.dim];
        self.eval_into(x, &mut out)?;
        Ok(StateVector(out))
    }
}

impl fmt::Debug for NetworkMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NetworkMap").field("dim", &self.dim).field("label", &self.label).finish()
    }
}

/// `F(x)`.
pub fn evaluate(map: &NetworkMap, x: &StateVector) -> Result<StateVector> {
    map.evaluate(x)
}

/// A finite orbit `x⁰, x¹, …`.
#[derive(Debug, Clone, PartialEq)]
pub struct Orbit {
    pub states: Vec<StateVector>,
    /// First step whose state exceeded the divergence bound; the orbit stops there.
    pub diverged_at: Option<usize>,
}

impl Orbit {
    pub fn terminal(&self) -> &StateVector {
        self.states.last().expect("orbit holds at least the initial state")
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// Iterates `F` for `steps` steps with the default divergence bound.
pub fn iterate_orbit(map: &NetworkMap, x0: &StateVector, steps: usize) -> Result<Orbit> {
    iterate_orbit_bounded(map, x0, steps, DEFAULT_DIVERGENCE_BOUND)
}

/// Iterates `F`, stopping early (and flagging) once a coordinate exceeds `bound`.
pub fn iterate_orbit_bounded(map: &NetworkMap, x0: &StateVector, steps: usize, bound: f64) -> Result<Orbit> {
    if steps == 0 {
        return Err(Error::invalid("steps must be at least 1"));
    }
    if x0.dim() != map.dim() {
        return Err(Error::DimensionMismatch { expected: map.dim(), found: x0.dim() });
    }
    let mut states = Vec::with_capacity(steps + 1);
    states.push(x0.clone());
    for k in 1..=steps {
        let next = map.evaluate(&states[k - 1]).map_err(|e| e.at_step(k))?;
        let diverged = next.norm_inf() > bound;
        states.push(next);
        if diverged {
            return Ok(Orbit { states, diverged_at: Some(k) });
        }
    }
    Ok(Orbit { states, diverged_at: None })
}

/// `d_max(x, y) = maxᵢ |xᵢ − yᵢ|`.
pub fn d_max(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), found: y.len() });
    }
    Ok(x.iter().zip(y).fold(0.0, |m, (a, b)| m.max((a - b).abs())))
}
