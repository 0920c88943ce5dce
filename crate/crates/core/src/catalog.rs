//! Reference systems with known stability behaviour.

use alloc::vec;
use alloc::vec::Vec;

use crate::delay::DelayDistribution;
use crate::matrix::Matrix;
use crate::models::{Activation, CgnSpec, LinearDelayedSpec, SwitchedControlSpec, SwitchedLinearSpec};
use crate::switched::{DelaySchedule, TauSchedule};

/// Seed used for the stochastic delay run in the tests and the CLI examples.
pub const UNIFORM_DELAY_SEED: u64 = 20_240_501;

/// Fixed point of [`cgn_delay_robust`], to eight decimals.
pub const ROBUST_FIXED_POINT: [f64; 2] = [-0.38658906, 1.59538997];

fn m2(rows: [[f64; 2]; 2]) -> Matrix {
    Matrix::from_rows(&rows).expect("2x2 literal")
}

/// `[[0, −3/4], [3/4, 0]]`.
pub fn skew_coupling() -> Matrix {
    m2([[0.0, -0.75], [0.75, 0.0]])
}

/// Tanh CGN with `ε = 2/5` and no input: `ρ(A) = 1.35`. Converges without
/// delays but oscillates under [`constant_delays`].
pub fn cgn_delay_sensitive() -> CgnSpec {
    CgnSpec::new(skew_coupling(), 0.4, Activation::Tanh, vec![0.0, 0.0]).expect("valid literal")
}

/// Tanh CGN with `ε = 4/5` and input `(−1, 1)`: `ρ(A) = 0.95`.
pub fn cgn_delay_robust() -> CgnSpec {
    CgnSpec::new(skew_coupling().transpose(), 0.8, Activation::Tanh, vec![-1.0, 1.0]).expect("valid literal")
}

/// `D = [[1, 2], [1, 3]]` with `L = 3`.
pub fn constant_delays() -> DelayDistribution {
    DelayDistribution::from_rows(&[[1usize, 2], [1, 3]], 3).expect("valid literal")
}

/// `d_ij(k) = k mod [[5, 6], [6, 5]]_ij`, `L = 5`, period 30.
pub fn periodic_delays() -> DelaySchedule {
    DelaySchedule::periodic_modulo(2, vec![5, 6, 6, 5], 5).expect("valid literal")
}

/// Entries uniform on `{0, …, 10}`, `L = 10`.
pub fn uniform_delays(seed: u64) -> DelaySchedule {
    DelaySchedule::uniform(2, 0, 10, seed).expect("valid literal")
}

/// `A = [[0.6, 0], [0.35, 0.7]]`, `B = [[0.1, 0], [0.2, 0.1]]`; `ρ(|Ã|) ≈ 0.822`.
/// The delay cycles through `1..=10`.
pub fn lifted_linear_robust() -> LinearDelayedSpec {
    LinearDelayedSpec::new(
        m2([[0.6, 0.0], [0.35, 0.7]]),
        m2([[0.1, 0.0], [0.2, 0.1]]),
        10,
        TauSchedule::Cycle((1..=10).collect()),
    )
    .expect("valid literal")
}

/// `A = [[0.8, 0], [0.05, 0.9]]`, `B = [[−0.1, 0], [−0.2, −0.1]]`; `ρ(|Ã|) = 1`
/// exactly, so intrinsic stability cannot be decided.
pub fn lifted_linear_marginal() -> LinearDelayedSpec {
    LinearDelayedSpec::new(
        m2([[0.8, 0.0], [0.05, 0.9]]),
        m2([[-0.1, 0.0], [-0.2, -0.1]]),
        10,
        TauSchedule::Cycle((1..=10).collect()),
    )
    .expect("valid literal")
}

/// Published delay bounds for [`lifted_linear_robust`] obtained with other
/// methods, as `(method, bound)`. Documentation only.
pub const LITERATURE_ROBUST_BOUNDS: [(&str, f64); 5] = [
    ("delay-dependent LMI criterion A", 10.0),
    ("delay-dependent LMI criterion B", 13.0),
    ("delay-dependent LMI criterion C", 12.0),
    ("delay-dependent LMI criterion D", 15.0),
    ("delay-dependent LMI criterion E", 10.0e21),
];

/// Published delay bound for [`lifted_linear_marginal`]. Documentation only.
pub const LITERATURE_MARGINAL_BOUND: f64 = 9.61e8;

/// Published delay bound for [`switched_linear_rows`]. Documentation only.
pub const LITERATURE_ROWS_BOUND: usize = 13;

/// Published delay bound for [`switched_control`]. Documentation only.
pub const LITERATURE_CONTROL_BOUND: usize = 2;

/// Four modes whose rows vary independently: the closure is the set itself.
/// Delay bound 13, cycling through `1..=13`.
pub fn switched_linear_rows() -> SwitchedLinearSpec {
    let a1 = m2([[0.0, 0.3], [-0.2, 0.1]]);
    let a3 = m2([[0.0, 0.3], [-0.2, -0.1]]);
    let b1 = m2([[0.0, 0.1], [0.0, 0.2]]);
    let b2 = m2([[0.0, 0.1], [0.0, 0.0]]);
    SwitchedLinearSpec::new(
        vec![a1.clone(), a1, a3.clone(), a3],
        vec![b1.clone(), b2.clone(), b1, b2],
        LITERATURE_ROWS_BOUND,
        TauSchedule::Cycle((1..=LITERATURE_ROWS_BOUND).collect()),
    )
    .expect("valid literal")
}

/// Linear system with switched feedback `c_σ qᵀ x` over three control
/// directions. Delay bound 2, alternating 1 and 2.
pub fn switched_control() -> SwitchedControlSpec {
    SwitchedControlSpec::new(
        m2([[0.7, 0.0], [0.05, 0.8]]),
        m2([[-0.1, 0.0], [-0.3, -0.1]]),
        vec![0.1510, -0.2176],
        vec![vec![0.0, 0.001], vec![0.001, 0.0], vec![0.001, 0.001]],
        LITERATURE_CONTROL_BOUND,
        TauSchedule::Cycle(vec![1, 2]),
    )
    .expect("valid literal")
}

/// `P = [[ε, 1], [0, ε]]`, `Q = [[ε, 0], [1, ε]]`. Each is a contraction for
/// small `ε`, yet the product `PQ` has spectral radius above 1.
pub fn jordan_pair(eps: f64) -> (Matrix, Matrix) {
    (m2([[eps, 1.0], [0.0, eps]]), m2([[eps, 0.0], [1.0, eps]]))
}

/// Two tanh CGNs `G` and `H`, both with `ρ(A) = 0.95`. With `inputs = false`
/// both share the fixed point 0.
pub fn switched_cgn_pair(inputs: bool) -> (CgnSpec, CgnSpec) {
    let (c, d): (Vec<f64>, Vec<f64>) =
        if inputs { (vec![-1.0, 1.0], vec![1.0, -1.0]) } else { (vec![0.0, 0.0], vec![0.0, 0.0]) };
    let g = CgnSpec::new(skew_coupling(), 0.8, Activation::Tanh, c).expect("valid literal");
    let h = CgnSpec::new(m2([[0.0, 0.25], [0.25, 0.0]]), 0.3, Activation::Tanh, d).expect("valid literal");
    (g, h)
}
