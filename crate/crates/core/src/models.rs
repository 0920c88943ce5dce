//! Builders for concrete model families: Cohen–Grossberg networks, lifted
//! linear delay systems and switched linear systems with feedback control.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use alloc::format;
use core::fmt;

use crate::delay::LiftedState;
use crate::error::{Error, Result};
use crate::lipschitz::{lipschitz_cgn, lipschitz_linear, LipschitzMatrix};
use crate::matrix::{dot, Matrix};
use crate::network::{d_max, NetworkMap, StateVector};
use crate::spectral::MatrixSet;
use crate::switched::{DelaySchedule, SwitchedSet, TauSchedule};

/// The neuron response `σ`.
#[derive(Clone)]
pub enum Activation {
    Tanh,
    /// `1/(1 + e^{−x})`, Lipschitz constant 1/4.
    Logistic,
    /// A caller-supplied function with its declared Lipschitz constant.
    Custom { f: Arc<dyn Fn(f64) -> f64 + Send + Sync>, lipschitz: f64 },
}

impl Activation {
    pub fn custom<F>(f: F, lipschitz: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(lipschitz >= 0.0 && lipschitz.is_finite()) {
            return Err(Error::invalid("activation Lipschitz constant must be finite and nonnegative"));
        }
        Ok(Activation::Custom { f: Arc::new(f), lipschitz })
    }

    pub fn apply(&self, x: f64) -> f64 {
        match self {
            Activation::Tanh => libm::tanh(x),
            Activation::Logistic => 1.0 / (1.0 + libm::exp(-x)),
            Activation::Custom { f, .. } => f(x),
        }
    }

    /// `K` with `|σ(x) − σ(y)| ≤ K|x − y|`.
    pub fn lipschitz_constant(&self) -> f64 {
        match self {
            Activation::Tanh => 1.0,
            Activation::Logistic => 0.25,
            Activation::Custom { lipschitz, .. } => *lipschitz,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Logistic => "logistic",
            Activation::Custom { .. } => "custom",
        }
    }
}

impl fmt::Debug for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Activation::Custom { lipschitz, .. } => write!(f, "Custom(K = {lipschitz})"),
            other => f.write_str(other.name()),
        }
    }
}

/// `C_i(x) = (1−ε)x_i + Σ_j W_ij σ(x_j) + c_i`.
#[derive(Debug, Clone)]
pub struct CgnSpec {
    pub w: Matrix,
    pub epsilon: f64,
    pub sigma: Activation,
    pub c: Vec<f64>,
}

impl CgnSpec {
    pub fn new(w: Matrix, epsilon: f64, sigma: Activation, c: Vec<f64>) -> Result<Self> {
        let n = w.square_dim()?;
        if n == 0 {
            return Err(Error::DimensionMismatch { expected: 1, found: 0 });
        }
        if c.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: c.len() });
        }
        if !epsilon.is_finite() {
            return Err(Error::invalid("epsilon must be finite"));
        }
        if let Some(index) = c.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue { index });
        }
        Ok(Self { w, epsilon, sigma, c })
    }

    pub fn dim(&self) -> usize {
        self.w.rows()
    }
}

/// A network together with its Lipschitz matrix.
#[derive(Debug, Clone)]
pub struct CgnNetwork {
    pub map: NetworkMap,
    pub lipschitz: LipschitzMatrix,
}

pub fn build_cgn(spec: &CgnSpec) -> Result<CgnNetwork> {
    let n = spec.dim();
    if spec.c.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: spec.c.len() });
    }
    let lipschitz = lipschitz_cgn(&spec.w, spec.epsilon, spec.sigma.lipschitz_constant())?;
    let (w, leak, sigma, c) = (spec.w.clone(), 1.0 - spec.epsilon, spec.sigma.clone(), spec.c.clone());
    let label = format!("cgn(n = {n}, eps = {}, {})", spec.epsilon, spec.sigma.name());
    let map = NetworkMap::new(n, label, move |x, out| {
        let s: Vec<f64> = x.iter().map(|&v| sigma.apply(v)).collect();
        for (i, o) in out.iter_mut().enumerate() {
            *o = leak * x[i] + dot(w.row(i), &s) + c[i];
        }
    });
    Ok(CgnNetwork { map, lipschitz })
}

/// Settings for [`find_fixed_point`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointOptions {
    /// Weight of the previous iterate: `x ← θx + (1−θ)F(x)`.
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        Self { damping: 0.5, tol: 1e-12, max_iter: 100_000 }
    }
}

/// Damped fixed-point iteration, stopping when `d_max(F(x), x) ≤ tol`.
pub fn find_fixed_point(map: &NetworkMap, start: &[f64], opts: &FixedPointOptions) -> Result<StateVector> {
    if !(0.0..1.0).contains(&opts.damping) {
        return Err(Error::invalid("damping must lie in [0, 1)"));
    }
    let mut x = start.to_vec();
    let mut fx = vec![0.0; x.len()];
    let mut residual = f64::INFINITY;
    for _ in 0..opts.max_iter {
        map.eval_into(&x, &mut fx)?;
        residual = d_max(&fx, &x)?;
        if residual <= opts.tol {
            return StateVector::new(x);
        }
        for (xi, &f) in x.iter_mut().zip(&fx) {
            *xi = opts.damping * *xi + (1.0 - opts.damping) * f;
        }
    }
    Err(Error::FixedPointNotFound { iterations: opts.max_iter, residual })
}

/// The fixed point of a CGN network, iterated from `c`.
pub fn cgn_fixed_point(spec: &CgnSpec) -> Result<StateVector> {
    let net = build_cgn(spec)?;
    find_fixed_point(&net.map, &spec.c, &FixedPointOptions::default())
}

/// `[[top, right], [I, 0]]`.
fn companion(top: &Matrix, right: &Matrix) -> Matrix {
    let n = top.rows();
    let mut m = Matrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            m.set(i, j, top.get(i, j));
            m.set(i, n + j, right.get(i, j));
        }
        m.set(n + i, i, 1.0);
    }
    m
}

/// The `2n×2n` pattern with ones in the top-right block, marking the
/// interactions that carry the delay.
pub fn delayed_block_pattern(n: usize) -> Vec<bool> {
    let mut p = vec![false; 4 * n * n];
    for i in 0..n {
        for j in n..2 * n {
            p[i * 2 * n + j] = true;
        }
    }
    p
}

fn check_pair(a: &Matrix, b: &Matrix) -> Result<usize> {
    let n = a.square_dim()?;
    let m = b.square_dim()?;
    if n != m {
        return Err(Error::DimensionMismatch { expected: n, found: m });
    }
    if n == 0 {
        return Err(Error::DimensionMismatch { expected: 1, found: 0 });
    }
    Ok(n)
}

fn check_tau(tau: &TauSchedule, bound: usize) -> Result<()> {
    if bound == 0 {
        return Err(Error::invalid("delay bound must be at least 1"));
    }
    let (lo, hi) = tau.range();
    if lo < 1 || hi > bound {
        return Err(Error::invalid(format!("tau must stay in [1, {bound}], schedule spans [{lo}, {hi}]")));
    }
    Ok(())
}

/// `x^{k+1} = A x^k + B x^{k−τ(k)}` with `1 ≤ τ(k) ≤ L`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearDelayedSpec {
    pub a: Matrix,
    pub b: Matrix,
    pub delay_bound: usize,
    pub tau: TauSchedule,
}

impl LinearDelayedSpec {
    pub fn new(a: Matrix, b: Matrix, delay_bound: usize, tau: TauSchedule) -> Result<Self> {
        check_pair(&a, &b)?;
        check_tau(&tau, delay_bound)?;
        Ok(Self { a, b, delay_bound, tau })
    }

    pub fn dim(&self) -> usize {
        self.a.rows()
    }

    /// `Ã = [[A, B], [I, 0]]`.
    pub fn transition(&self) -> Matrix {
        companion(&self.a, &self.b)
    }
}

/// A lifted linear system ready for certification and simulation.
#[derive(Debug, Clone)]
pub struct LiftedLinear {
    /// `x̃ ↦ Ã x̃` on `ℝ^{2n}`.
    pub map: NetworkMap,
    pub lipschitz: LipschitzMatrix,
    pub transition: Matrix,
    pub schedule: DelaySchedule,
}

/// The lifted state `(x^k, x^{k−1})` sees `x^{k−τ}` through lag `τ − 1` of
/// its lower half, so the schedule emits `(τ(k) − 1)` on the top-right block.
pub fn build_lifted_linear(spec: &LinearDelayedSpec) -> Result<LiftedLinear> {
    check_pair(&spec.a, &spec.b)?;
    check_tau(&spec.tau, spec.delay_bound)?;
    let n = spec.dim();
    let transition = spec.transition();
    let schedule = DelaySchedule::lagged(2 * n, delayed_block_pattern(n), spec.tau.clone(), spec.delay_bound)?;
    Ok(LiftedLinear {
        map: NetworkMap::linear(transition.clone(), "lifted linear")?,
        lipschitz: lipschitz_linear(&transition)?,
        transition,
        schedule,
    })
}

/// Initial lifted state with a constant history `x^{−L} = … = x^0`.
pub fn constant_history(x0: &StateVector, delay_bound: usize) -> LiftedState {
    let mut doubled = x0.to_vec();
    doubled.extend_from_slice(x0);
    crate::delay::extend_point(&StateVector::new(doubled).expect("finite input"), delay_bound)
}

/// `x^{k+1} = A x^k + B x^{k−τ(k)} + c_{σ(k)} qᵀ x^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchedControlSpec {
    pub a: Matrix,
    pub b: Matrix,
    pub q: Vec<f64>,
    pub c_set: Vec<Vec<f64>>,
    pub delay_bound: usize,
    pub tau: TauSchedule,
}

impl SwitchedControlSpec {
    pub fn new(a: Matrix, b: Matrix, q: Vec<f64>, c_set: Vec<Vec<f64>>, delay_bound: usize, tau: TauSchedule) -> Result<Self> {
        let n = check_pair(&a, &b)?;
        if q.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: q.len() });
        }
        if c_set.is_empty() {
            return Err(Error::EmptySet);
        }
        for c in &c_set {
            if c.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: c.len() });
            }
        }
        check_tau(&tau, delay_bound)?;
        Ok(Self { a, b, q, c_set, delay_bound, tau })
    }

    /// `Ã_σ = [[A + c_σ qᵀ, B], [I, 0]]` for each control direction.
    pub fn transitions(&self) -> Vec<Matrix> {
        let n = self.a.rows();
        self.c_set
            .iter()
            .map(|c| {
                let mut top = self.a.clone();
                for i in 0..n {
                    for j in 0..n {
                        top.set(i, j, self.a.get(i, j) + c[i] * self.q[j]);
                    }
                }
                companion(&top, &self.b)
            })
            .collect()
    }

    pub fn lipschitz_set(&self) -> Result<MatrixSet> {
        MatrixSet::new(self.transitions().iter().map(Matrix::abs).collect())
    }
}

/// `x^{k+1} = A_σ x^k + B_σ x^{k−τ(k)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchedLinearSpec {
    pub a_set: Vec<Matrix>,
    pub b_set: Vec<Matrix>,
    pub delay_bound: usize,
    pub tau: TauSchedule,
}

impl SwitchedLinearSpec {
    pub fn new(a_set: Vec<Matrix>, b_set: Vec<Matrix>, delay_bound: usize, tau: TauSchedule) -> Result<Self> {
        if a_set.is_empty() {
            return Err(Error::EmptySet);
        }
        if a_set.len() != b_set.len() {
            return Err(Error::DimensionMismatch { expected: a_set.len(), found: b_set.len() });
        }
        let n = check_pair(&a_set[0], &b_set[0])?;
        for (a, b) in a_set.iter().zip(&b_set) {
            let k = check_pair(a, b)?;
            if k != n {
                return Err(Error::DimensionMismatch { expected: n, found: k });
            }
        }
        check_tau(&tau, delay_bound)?;
        Ok(Self { a_set, b_set, delay_bound, tau })
    }

    pub fn transitions(&self) -> Vec<Matrix> {
        self.a_set.iter().zip(&self.b_set).map(|(a, b)| companion(a, b)).collect()
    }

    pub fn lipschitz_set(&self) -> Result<MatrixSet> {
        MatrixSet::new(self.transitions().iter().map(Matrix::abs).collect())
    }
}

/// A switched family of lifted linear maps.
#[derive(Debug, Clone)]
pub struct SwitchedLifted {
    pub set: SwitchedSet,
    pub transitions: Vec<Matrix>,
    pub schedule: DelaySchedule,
}

fn lifted_family(transitions: Vec<Matrix>, tau: &TauSchedule, bound: usize, prefix: &str) -> Result<SwitchedLifted> {
    let n2 = transitions[0].rows();
    let mut maps = Vec::with_capacity(transitions.len());
    let mut lipschitz = Vec::with_capacity(transitions.len());
    for (k, t) in transitions.iter().enumerate() {
        maps.push(NetworkMap::linear(t.clone(), format!("{prefix}{}", k + 1))?);
        lipschitz.push(lipschitz_linear(t)?);
    }
    let labels: Vec<String> = (1..=transitions.len()).map(|k| format!("{prefix}{k}")).collect();
    let set = SwitchedSet::with_labels(maps, lipschitz, labels)?;
    let schedule = DelaySchedule::lagged(n2, delayed_block_pattern(n2 / 2), tau.clone(), bound)?;
    Ok(SwitchedLifted { set, transitions, schedule })
}

pub fn build_switched_control(spec: &SwitchedControlSpec) -> Result<SwitchedLifted> {
    lifted_family(spec.transitions(), &spec.tau, spec.delay_bound, "control")
}

pub fn build_switched_linear(spec: &SwitchedLinearSpec) -> Result<SwitchedLifted> {
    lifted_family(spec.transitions(), &spec.tau, spec.delay_bound, "mode")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::delay::extend_point;
    use crate::spectral::{spectral_radius_exact, spectral_radius_power, PowerOptions};
    use crate::switched::{certify_switched, simulate_instance, SwitchSchedule};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn rho(a: &LipschitzMatrix) -> f64 {
        spectral_radius_power(a.entries(), &PowerOptions::default()).unwrap()
    }

    #[test]
    fn cgn_radii_and_fixed_point() {
        let sensitive = build_cgn(&catalog::cgn_delay_sensitive()).unwrap();
        assert_abs_diff_eq!(rho(&sensitive.lipschitz), 1.35, epsilon = 1e-9);
        let robust = build_cgn(&catalog::cgn_delay_robust()).unwrap();
        assert_abs_diff_eq!(rho(&robust.lipschitz), 0.95, epsilon = 1e-9);
        let x = cgn_fixed_point(&catalog::cgn_delay_robust()).unwrap();
        assert_abs_diff_eq!(x[0], -0.386, epsilon = 1e-3);
        assert_abs_diff_eq!(x[1], 1.595, epsilon = 5e-4);
        for (got, want) in x.iter().zip(catalog::ROBUST_FIXED_POINT) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-8);
        }
    }

    #[test]
    fn printed_coupling_orientation_swaps_the_fixed_point() {
        let spec = CgnSpec::new(catalog::skew_coupling(), 0.8, Activation::Tanh, vec![-1.0, 1.0]).unwrap();
        let x = cgn_fixed_point(&spec).unwrap();
        assert_abs_diff_eq!(x[0], -1.595, epsilon = 5e-4);
        assert_abs_diff_eq!(x[1], 0.387, epsilon = 5e-4);
    }

    #[test]
    fn uncoupled_cgn_is_affine() {
        let spec = CgnSpec::new(Matrix::zeros(2, 2), 0.3, Activation::Tanh, vec![1.0, -2.0]).unwrap();
        let net = build_cgn(&spec).unwrap();
        let out = net.map.evaluate(&StateVector::from_slice(&[4.0, 5.0]).unwrap()).unwrap();
        assert_abs_diff_eq!(out[0], 0.7 * 4.0 + 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(out[1], 0.7 * 5.0 - 2.0, epsilon = 1e-15);
    }

    #[test]
    fn logistic_and_custom_activations() {
        assert_eq!(Activation::Logistic.lipschitz_constant(), 0.25);
        assert_abs_diff_eq!(Activation::Logistic.apply(0.0), 0.5, epsilon = 1e-15);
        assert!(Activation::custom(|x| x, -1.0).is_err());
        let relu = Activation::custom(|x: f64| x.max(0.0), 1.0).unwrap();
        let spec = CgnSpec::new(Matrix::identity(1), 1.0, relu, vec![0.0]).unwrap();
        assert_eq!(build_cgn(&spec).unwrap().lipschitz.get(0, 0), 1.0);
    }

    #[test]
    fn spec_validation() {
        assert!(CgnSpec::new(Matrix::zeros(2, 2), 0.5, Activation::Tanh, vec![0.0]).is_err());
        assert!(CgnSpec::new(Matrix::zeros(2, 3), 0.5, Activation::Tanh, vec![0.0, 0.0]).is_err());
        let a = Matrix::identity(2);
        assert!(LinearDelayedSpec::new(a.clone(), a.clone(), 3, TauSchedule::Constant(4)).is_err());
        assert!(LinearDelayedSpec::new(a.clone(), a.clone(), 3, TauSchedule::Constant(0)).is_err());
        assert!(LinearDelayedSpec::new(a.clone(), Matrix::identity(3), 3, TauSchedule::Constant(1)).is_err());
    }

    #[test]
    fn lifted_linear_radii() {
        let robust = build_lifted_linear(&catalog::lifted_linear_robust()).unwrap();
        assert_abs_diff_eq!(rho(&robust.lipschitz), 0.822, epsilon = 1e-3);
        assert_eq!(robust.transition.row(1), &[0.35, 0.7, 0.2, 0.1]);
        assert_eq!(robust.transition.row(2), &[1.0, 0.0, 0.0, 0.0]);
        let marginal = build_lifted_linear(&catalog::lifted_linear_marginal()).unwrap();
        assert_abs_diff_eq!(rho(&marginal.lipschitz), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn undelayed_part_decides_when_b_vanishes() {
        let a = Matrix::from_rows(&[[0.2, -0.5, 0.0], [0.1, 0.3, 0.4], [-0.6, 0.0, 0.1]]).unwrap();
        let spec = LinearDelayedSpec::new(a.clone(), Matrix::zeros(3, 3), 2, TauSchedule::Constant(1)).unwrap();
        let lifted = build_lifted_linear(&spec).unwrap();
        let full = spectral_radius_exact(&lifted.lipschitz.to_dense()).unwrap();
        assert_abs_diff_eq!(full, spectral_radius_exact(&a.abs()).unwrap(), epsilon = 1e-9);
    }

    #[test]
    fn control_matrices_match_printed_entries() {
        let spec = catalog::switched_control();
        let t = spec.transitions();
        let expect = |m: &Matrix, rows: [[f64; 4]; 2]| {
            for (i, r) in rows.iter().enumerate() {
                for (j, v) in r.iter().enumerate() {
                    assert_abs_diff_eq!(m.get(i, j), *v, epsilon = 1e-6);
                }
            }
        };
        expect(&t[0], [[0.7, 0.0, -0.1, 0.0], [0.050151, 0.7997824, -0.3, -0.1]]);
        expect(&t[1], [[0.700151, -0.0002176, -0.1, 0.0], [0.05, 0.8, -0.3, -0.1]]);
        expect(&t[2], [[0.700151, -0.0002176, -0.1, 0.0], [0.050151, 0.7997824, -0.3, -0.1]]);
    }

    #[test]
    fn row_switched_matrices_match_printed_entries() {
        let t = catalog::switched_linear_rows().transitions();
        assert_eq!(t.len(), 4);
        assert_eq!(t[0].row(1), &[-0.2, 0.1, 0.0, 0.2]);
        assert_eq!(t[1].row(1), &[-0.2, 0.1, 0.0, 0.0]);
        assert_eq!(t[2].row(1), &[-0.2, -0.1, 0.0, 0.2]);
        assert_eq!(t[3].row(1), &[-0.2, -0.1, 0.0, 0.0]);
        for m in &t {
            assert_eq!(m.row(0), &[0.0, 0.3, 0.0, 0.1]);
        }
    }

    #[test]
    fn zero_control_reduces_to_plain_lifted_system() {
        let base = catalog::switched_control();
        let spec = SwitchedControlSpec::new(base.a.clone(), base.b.clone(), base.q.clone(), vec![vec![0.0, 0.0]], 3, TauSchedule::Constant(1)).unwrap();
        let family = build_switched_control(&spec).unwrap();
        assert_eq!(family.transitions.len(), 1);
        let plain = LinearDelayedSpec::new(base.a.clone(), base.b.clone(), 3, TauSchedule::Constant(1)).unwrap();
        assert_eq!(family.transitions[0], plain.transition());
        let lifted = build_lifted_linear(&plain).unwrap();
        let switched = certify_switched(&family.set, 3, 1e-8).unwrap();
        let single = crate::certificate::certify(&lifted.lipschitz, Some(3), 1e-8, &PowerOptions::default()).unwrap();
        assert_abs_diff_eq!(switched.convergence_rate.unwrap(), single.convergence_rate.unwrap(), epsilon = 1e-12);
    }

    fn ring_buffer_run(a: &Matrix, b: &Matrix, tau: &TauSchedule, x0: &[f64], steps: usize) -> Vec<Vec<f64>> {
        // history[k] = x^k; indices below 0 hold x^0.
        let mut history = vec![x0.to_vec()];
        for k in 0..steps {
            let t = tau.at(k);
            let past = if k >= t { &history[k - t] } else { &history[0] };
            let ax = a.mul_vec(&history[k]).unwrap();
            let bx = b.mul_vec(past).unwrap();
            history.push(ax.iter().zip(&bx).map(|(p, q)| p + q).collect());
        }
        history
    }

    fn linear_case() -> impl Strategy<Value = (Matrix, Matrix, usize, Vec<usize>, Vec<f64>)> {
        (1usize..=3, 1usize..=6).prop_flat_map(|(n, l)| {
            (
                proptest::collection::vec(-0.6..0.6f64, n * n),
                proptest::collection::vec(-0.4..0.4f64, n * n),
                proptest::collection::vec(1..=l, 1..8),
                proptest::collection::vec(-3.0..3.0f64, n),
            )
                .prop_map(move |(a, b, cycle, x0)| {
                    (Matrix::from_vec(n, n, a).unwrap(), Matrix::from_vec(n, n, b).unwrap(), l, cycle, x0)
                })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn lifted_simulation_matches_ring_buffer((a, b, l, cycle, x0) in linear_case()) {
            let tau = TauSchedule::Cycle(cycle);
            let spec = LinearDelayedSpec::new(a.clone(), b.clone(), l, tau.clone()).unwrap();
            let lifted = build_lifted_linear(&spec).unwrap();
            let set = SwitchedSet::new(vec![lifted.map.clone()], vec![lifted.lipschitz.clone()]).unwrap();
            let start = constant_history(&StateVector::from_slice(&x0).unwrap(), l);
            let traj = simulate_instance(&set, &SwitchSchedule::Constant(0), &lifted.schedule, &start, 100).unwrap();
            let expected = ring_buffer_run(&a, &b, &tau, &x0, 100);
            let n = a.rows();
            for (k, state) in traj.states.iter().enumerate() {
                for i in 0..n {
                    let want = expected[k][i];
                    prop_assert!((state.current()[i] - want).abs() <= 1e-9 * want.abs().max(1.0), "step {} comp {}", k, i);
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn cgn_matches_two_neuron_expansion(
            w in proptest::collection::vec(-2.0..2.0f64, 4),
            eps in -1.0..2.0f64,
            c in proptest::collection::vec(-2.0..2.0f64, 2),
            x in proptest::collection::vec(-5.0..5.0f64, 2),
        ) {
            let spec = CgnSpec::new(Matrix::from_vec(2, 2, w.clone()).unwrap(), eps, Activation::Tanh, c.clone()).unwrap();
            let out = build_cgn(&spec).unwrap().map.evaluate(&StateVector::from_slice(&x).unwrap()).unwrap();
            let t = libm::tanh;
            let c1 = (1.0 - eps) * x[0] + w[0] * t(x[0]) + w[1] * t(x[1]) + c[0];
            let c2 = (1.0 - eps) * x[1] + w[2] * t(x[0]) + w[3] * t(x[1]) + c[1];
            prop_assert!((out[0] - c1).abs() <= 1e-12 && (out[1] - c2).abs() <= 1e-12);
        }
    }

    #[test]
    fn lifted_start_is_constant_history() {
        let x = StateVector::from_slice(&[1.0, -1.0]).unwrap();
        let s = constant_history(&x, 2);
        assert_eq!(s.as_slice(), extend_point(&StateVector::from_slice(&[1.0, -1.0, 1.0, -1.0]).unwrap(), 2).as_slice());
    }
}
