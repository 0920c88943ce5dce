//! Switched networks: delay and switch schedules, instance simulation,
//! empirical contraction and certification through the row-independence
//! closure.
//!
//! Steps are numbered from 1: state `k` is produced from state `k − 1` by the
//! map `switch.at(k)` lifted with the delays `delays.at(k)`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::certificate::{check_tol, StabilityCertificate, Verdict};
use crate::delay::{extend_point, DelayDistribution, DelayedMap, LiftedState};
use crate::error::{Error, Result};
use crate::lipschitz::{verify_lipschitz, LipschitzMatrix, Provenance};
use crate::network::{d_max, max_abs, NetworkMap, StateVector, DEFAULT_DIVERGENCE_BOUND};
use crate::spectral::{for_each_ri_member, spectral_radius_bounds, MatrixSet, PowerOptions, DEFAULT_CLOSURE_CAP};

/// Maps of equal dimension, each paired with a Lipschitz matrix.
#[derive(Debug, Clone)]
pub struct SwitchedSet {
    maps: Vec<NetworkMap>,
    lipschitz: MatrixSet,
    provenance: Provenance,
}

impl SwitchedSet {
    pub fn new(maps: Vec<NetworkMap>, lipschitz: Vec<LipschitzMatrix>) -> Result<Self> {
        let labels = maps.iter().map(|m| m.label().to_string()).collect();
        Self::with_labels(maps, lipschitz, labels)
    }

    pub fn with_labels(maps: Vec<NetworkMap>, lipschitz: Vec<LipschitzMatrix>, labels: Vec<String>) -> Result<Self> {
        if maps.is_empty() {
            return Err(Error::EmptySet);
        }
        if maps.len() != lipschitz.len() {
            return Err(Error::DimensionMismatch { expected: maps.len(), found: lipschitz.len() });
        }
        let n = maps[0].dim();
        for (m, a) in maps.iter().zip(&lipschitz) {
            if m.dim() != n {
                return Err(Error::DimensionMismatch { expected: n, found: m.dim() });
            }
            if a.dim() != n {
                return Err(Error::DimensionMismatch { expected: n, found: a.dim() });
            }
        }
        let provenance = lipschitz.iter().fold(Provenance::Analytic, |p, a| p.combine(a.provenance()));
        let members = lipschitz.iter().map(LipschitzMatrix::to_dense).collect();
        Ok(Self { maps, lipschitz: MatrixSet::with_labels(members, labels)?, provenance })
    }

    /// Like [`SwitchedSet::new`], but rejects any pair that fails
    /// [`verify_lipschitz`] on the box.
    pub fn verified(
        maps: Vec<NetworkMap>,
        lipschitz: Vec<LipschitzMatrix>,
        samples: usize,
        bounds: &[(f64, f64)],
        seed: u64,
    ) -> Result<Self> {
        for (member, (m, a)) in maps.iter().zip(&lipschitz).enumerate() {
            let report = verify_lipschitz(m, a, samples, bounds, seed)?;
            if !report.passed {
                return Err(Error::LipschitzViolation { member, margin: report.worst_margin });
            }
        }
        Self::new(maps, lipschitz)
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    /// Always false; kept for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.maps[0].dim()
    }

    pub fn maps(&self) -> &[NetworkMap] {
        &self.maps
    }

    pub fn lipschitz_set(&self) -> &MatrixSet {
        &self.lipschitz
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// The same set with members reordered.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let lipschitz = self.lipschitz.permuted(perm)?;
        let maps = perm.iter().map(|&i| self.maps[i].clone()).collect();
        Ok(Self { maps, lipschitz, provenance: self.provenance })
    }
}

fn uniform_at(seed: u64, stream: u64, low: usize, high: usize, out: &mut [usize]) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    for v in out {
        *v = rng.random_range(low..=high);
    }
}

/// Delay magnitudes `τ(k)` for lifted linear systems, indexed from `k = 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TauSchedule {
    Constant(usize),
    /// `τ(k) = seq[k mod len]`.
    Cycle(Vec<usize>),
    /// Uniform on `low..=high`, a pure function of `(seed, k)`.
    Uniform { low: usize, high: usize, seed: u64 },
}

impl TauSchedule {
    pub fn at(&self, k: usize) -> usize {
        match self {
            TauSchedule::Constant(t) => *t,
            TauSchedule::Cycle(seq) => seq[k % seq.len()],
            TauSchedule::Uniform { low, high, seed } => {
                let mut v = [0usize];
                uniform_at(*seed, k as u64, *low, *high, &mut v);
                v[0]
            }
        }
    }

    /// Smallest and largest value the schedule can produce.
    pub fn range(&self) -> (usize, usize) {
        match self {
            TauSchedule::Constant(t) => (*t, *t),
            TauSchedule::Cycle(seq) => (
                seq.iter().copied().min().unwrap_or(0),
                seq.iter().copied().max().unwrap_or(usize::MAX),
            ),
            TauSchedule::Uniform { low, high, .. } => (*low, *high),
        }
    }
}

/// How delay distributions are produced over time.
#[derive(Debug, Clone, PartialEq)]
pub enum DelayRule {
    Constant(DelayDistribution),
    /// `d_ij(k) = k mod m_ij`, with `m_ij = 0` meaning no delay.
    PeriodicModulo { moduli: Vec<usize> },
    /// Every entry uniform on `low..=high`, a pure function of `(seed, k)`.
    Uniform { low: usize, high: usize, seed: u64 },
    /// `D^{(k)} = seq[(k − 1) mod len]`.
    Explicit(Vec<DelayDistribution>),
    /// `d_ij(k) = τ(k − 1) − 1` where the pattern is set, else 0.
    Lagged { pattern: Vec<bool>, tau: TauSchedule },
}

/// A sequence `D^{(1)}, D^{(2)}, …` of `n×n` delay distributions bounded by `L`.
#[derive(Debug, Clone, PartialEq)]
pub struct DelaySchedule {
    n: usize,
    bound: usize,
    rule: DelayRule,
}

impl DelaySchedule {
    pub fn constant(d: DelayDistribution) -> Self {
        Self { n: d.dim(), bound: d.bound(), rule: DelayRule::Constant(d) }
    }

    pub fn none(n: usize) -> Self {
        Self::constant(DelayDistribution::zeros(n, 0))
    }

    pub fn periodic_modulo(n: usize, moduli: Vec<usize>, bound: usize) -> Result<Self> {
        if moduli.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, found: moduli.len() });
        }
        if let Some(p) = moduli.iter().position(|&m| m > bound + 1) {
            return Err(Error::DelayExceedsBound {
                row: p / n,
                col: p % n,
                value: moduli[p] as i64 - 1,
                bound: bound as i64,
            });
        }
        Ok(Self { n, bound, rule: DelayRule::PeriodicModulo { moduli } })
    }

    pub fn uniform(n: usize, low: usize, high: usize, seed: u64) -> Result<Self> {
        if low > high {
            return Err(Error::invalid("uniform delays need low <= high"));
        }
        Ok(Self { n, bound: high, rule: DelayRule::Uniform { low, high, seed } })
    }

    pub fn explicit(sequence: Vec<DelayDistribution>) -> Result<Self> {
        let first = sequence.first().ok_or(Error::EmptySet)?;
        let (n, bound) = (first.dim(), first.bound());
        for d in &sequence {
            if d.dim() != n {
                return Err(Error::DimensionMismatch { expected: n, found: d.dim() });
            }
            if d.max_entry() > bound {
                return Err(Error::DelayExceedsBound { row: 0, col: 0, value: d.max_entry() as i64, bound: bound as i64 });
            }
        }
        let sequence = sequence.into_iter().map(|d| d.with_bound(bound)).collect::<Result<_>>()?;
        Ok(Self { n, bound, rule: DelayRule::Explicit(sequence) })
    }

    pub fn lagged(n: usize, pattern: Vec<bool>, tau: TauSchedule, bound: usize) -> Result<Self> {
        if pattern.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, found: pattern.len() });
        }
        let (lo, hi) = tau.range();
        if lo < 1 || hi > bound {
            return Err(Error::invalid(format!("tau must stay in [1, {bound}]")));
        }
        Ok(Self { n, bound, rule: DelayRule::Lagged { pattern, tau } })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bound(&self) -> usize {
        self.bound
    }

    pub fn rule(&self) -> &DelayRule {
        &self.rule
    }

    /// Seed of a stochastic schedule.
    pub fn seed(&self) -> Option<u64> {
        match &self.rule {
            DelayRule::Uniform { seed, .. } => Some(*seed),
            DelayRule::Lagged { tau: TauSchedule::Uniform { seed, .. }, .. } => Some(*seed),
            _ => None,
        }
    }

    /// `D^{(k)}` for `k ≥ 1`.
    pub fn at(&self, k: usize) -> Result<DelayDistribution> {
        let n = self.n;
        match &self.rule {
            DelayRule::Constant(d) => Ok(d.clone()),
            DelayRule::PeriodicModulo { moduli } => {
                let entries = moduli.iter().map(|&m| if m == 0 { 0 } else { k % m }).collect();
                DelayDistribution::new(n, self.bound, entries)
            }
            DelayRule::Uniform { low, high, seed } => {
                let mut entries = vec![0usize; n * n];
                uniform_at(*seed, k as u64, *low, *high, &mut entries);
                DelayDistribution::new(n, self.bound, entries)
            }
            DelayRule::Explicit(seq) => Ok(seq[(k.max(1) - 1) % seq.len()].clone()),
            DelayRule::Lagged { pattern, tau } => {
                let lag = tau.at(k.max(1) - 1) - 1;
                let entries = pattern.iter().map(|&p| if p { lag } else { 0 }).collect();
                DelayDistribution::new(n, self.bound, entries)
            }
        }
    }

    fn is_constant(&self) -> bool {
        matches!(self.rule, DelayRule::Constant(_))
    }
}

/// The choice of map `σ(k)` at each step `k ≥ 1`.
#[derive(Clone)]
pub enum SwitchSchedule {
    Constant(usize),
    /// `σ(k) = seq[(k − 1) mod len]`.
    Cycle(Vec<usize>),
    /// Uniform on `0..count`, a pure function of `(seed, k)`.
    Uniform { count: usize, seed: u64 },
    Custom { f: Arc<dyn Fn(usize) -> usize + Send + Sync>, description: String },
}

impl SwitchSchedule {
    pub fn at(&self, k: usize) -> usize {
        match self {
            SwitchSchedule::Constant(i) => *i,
            SwitchSchedule::Cycle(seq) => seq[(k.max(1) - 1) % seq.len()],
            SwitchSchedule::Uniform { count, seed } => {
                let mut v = [0usize];
                uniform_at(*seed, k as u64, 0, count.saturating_sub(1), &mut v);
                v[0]
            }
            SwitchSchedule::Custom { f, .. } => f(k),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            SwitchSchedule::Constant(i) => format!("constant {i}"),
            SwitchSchedule::Cycle(seq) => format!("cycle {seq:?}"),
            SwitchSchedule::Uniform { count, seed } => format!("uniform over {count} maps, seed {seed}"),
            SwitchSchedule::Custom { description, .. } => description.clone(),
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            SwitchSchedule::Uniform { seed, .. } => Some(*seed),
            _ => None,
        }
    }
}

impl fmt::Debug for SwitchSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SwitchSchedule({})", self.describe())
    }
}

/// Simulation settings.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOptions {
    pub divergence_bound: f64,
    /// Unlifted point `x*`; gaps are `d_max(state, E_L(x*))`.
    pub reference: Option<Vec<f64>>,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        Self { divergence_bound: DEFAULT_DIVERGENCE_BOUND, reference: None }
    }
}

/// Lifted states of one instance, with gaps to the reference point.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<LiftedState>,
    /// One entry per state when a reference was given, else empty.
    pub gaps: Vec<f64>,
    /// Step at which a coordinate first exceeded the divergence bound.
    pub diverged_at: Option<usize>,
    /// Seeds of the stochastic schedules involved.
    pub delay_seed: Option<u64>,
    pub switch_seed: Option<u64>,
}

impl Trajectory {
    pub fn terminal(&self) -> &LiftedState {
        self.states.last().expect("trajectory holds the initial state")
    }

    pub fn terminal_gap(&self) -> Option<f64> {
        self.gaps.last().copied()
    }
}

pub fn simulate_instance(
    set: &SwitchedSet,
    switch: &SwitchSchedule,
    delays: &DelaySchedule,
    x0: &LiftedState,
    steps: usize,
) -> Result<Trajectory> {
    simulate_instance_with(set, switch, delays, x0, steps, &SimulationOptions::default())
}

fn lifted_gap(state: &[f64], reference: &[f64]) -> f64 {
    let n = reference.len();
    state.chunks(n).map(|block| d_max(block, reference).expect("blocks have length n")).fold(0.0, f64::max)
}

pub fn simulate_instance_with(
    set: &SwitchedSet,
    switch: &SwitchSchedule,
    delays: &DelaySchedule,
    x0: &LiftedState,
    steps: usize,
    opts: &SimulationOptions,
) -> Result<Trajectory> {
    if steps == 0 {
        return Err(Error::invalid("steps must be at least 1"));
    }
    let n = set.dim();
    if delays.dim() != n || x0.n() != n {
        return Err(Error::DimensionMismatch { expected: n, found: if delays.dim() != n { delays.dim() } else { x0.n() } });
    }
    if x0.bound() != delays.bound() {
        return Err(Error::DimensionMismatch { expected: n * (delays.bound() + 1), found: x0.dim() });
    }
    if let Some(r) = &opts.reference {
        if r.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: r.len() });
        }
    }
    let gap_of = |s: &LiftedState| opts.reference.as_ref().map(|r| lifted_gap(s.as_slice(), r));

    let mut states = Vec::with_capacity(steps + 1);
    let mut gaps = Vec::new();
    gaps.extend(gap_of(x0));
    states.push(x0.clone());
    let mut cache: Vec<Option<DelayedMap>> = vec![None; set.len()];
    let mut diverged_at = None;
    for k in 1..=steps {
        let index = switch.at(k);
        if index >= set.len() {
            return Err(Error::ScheduleError { step: k, index, len: set.len() });
        }
        let fresh;
        let lifted = if delays.is_constant() {
            if cache[index].is_none() {
                cache[index] = Some(DelayedMap::new(set.maps[index].clone(), delays.at(k)?)?);
            }
            cache[index].as_ref().expect("just filled")
        } else {
            fresh = DelayedMap::new(set.maps[index].clone(), delays.at(k).map_err(|e| e.at_step(k))?)?;
            &fresh
        };
        let next = lifted.evaluate(&states[k - 1]).map_err(|e| e.at_step(k))?;
        gaps.extend(gap_of(&next));
        let blown = max_abs(next.as_slice()) > opts.divergence_bound;
        states.push(next);
        if blown {
            diverged_at = Some(k);
            break;
        }
    }
    Ok(Trajectory { states, gaps, diverged_at, delay_seed: delays.seed(), switch_seed: switch.seed() })
}

/// Gap sequence between two instances started from different points.
#[derive(Debug, Clone, PartialEq)]
pub struct ContractionEstimate {
    /// `g_k = d_max(𝓕^k(x⁰), 𝓕^k(y⁰))` over the lifted states.
    pub gaps: Vec<f64>,
    /// `exp` of the least-squares slope of `ln g_k` over the tail half of
    /// the steps where `g_k` is above rounding noise.
    pub rate: Option<f64>,
    pub diverged_at: Option<usize>,
}

/// Gaps below this fraction of the state magnitude are rounding noise.
const GAP_NOISE_FLOOR: f64 = 1e-13;

pub fn contraction_estimate(
    set: &SwitchedSet,
    switch: &SwitchSchedule,
    delays: &DelaySchedule,
    x0: &LiftedState,
    y0: &LiftedState,
    steps: usize,
) -> Result<ContractionEstimate> {
    if x0.dim() != y0.dim() {
        return Err(Error::DimensionMismatch { expected: x0.dim(), found: y0.dim() });
    }
    if x0 == y0 {
        return Err(Error::invalid("contraction needs two distinct initial states"));
    }
    let a = simulate_instance(set, switch, delays, x0, steps)?;
    let b = simulate_instance(set, switch, delays, y0, steps)?;
    let len = a.states.len().min(b.states.len());
    let mut scale = 1.0f64;
    let mut gaps = Vec::with_capacity(len);
    for (p, q) in a.states.iter().zip(&b.states).take(len) {
        scale = scale.max(max_abs(p.as_slice())).max(max_abs(q.as_slice()));
        gaps.push(d_max(p.as_slice(), q.as_slice())?);
    }
    let diverged_at = match (a.diverged_at, b.diverged_at) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, y) => x.or(y),
    };
    let resolvable = gaps.iter().position(|&g| !(g > GAP_NOISE_FLOOR * scale)).unwrap_or(gaps.len());
    let rate = tail_rate(&gaps[..resolvable]);
    Ok(ContractionEstimate { gaps, rate, diverged_at })
}

/// `exp(slope)` of a least-squares line through `(k, ln g_k)` on the last half.
fn tail_rate(gaps: &[f64]) -> Option<f64> {
    let start = gaps.len() / 2;
    let tail = &gaps[start..];
    if tail.len() < 2 {
        return None;
    }
    let m = tail.len() as f64;
    let mean_k = (start as f64) + (m - 1.0) / 2.0;
    let mean_y = tail.iter().map(|g| libm::log(*g)).sum::<f64>() / m;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, g) in tail.iter().enumerate() {
        let dk = (start + i) as f64 - mean_k;
        sxy += dk * (libm::log(*g) - mean_y);
        sxx += dk * dk;
    }
    Some(libm::exp(sxy / sxx))
}

/// Residuals `d_max(F(x*), x*)` for every map of a set.
#[derive(Debug, Clone, PartialEq)]
pub struct SharedFixedPointReport {
    pub shared: bool,
    pub residuals: Vec<f64>,
}

pub fn shared_fixed_point_check(set: &SwitchedSet, x_star: &StateVector, tol: f64) -> Result<SharedFixedPointReport> {
    let mut residuals = Vec::with_capacity(set.len());
    for map in &set.maps {
        let fx = map.evaluate(x_star)?;
        residuals.push(d_max(&fx, x_star)?);
    }
    Ok(SharedFixedPointReport { shared: residuals.iter().all(|&r| r <= tol), residuals })
}

/// Bounds the convergence rate of every delayed instance by
/// `max_{A ∈ RI(S)} ρ(A_L)`.
pub fn certify_switched(set: &SwitchedSet, bound: usize, tol: f64) -> Result<StabilityCertificate> {
    certify_switched_with(set, bound, tol, &PowerOptions::default(), DEFAULT_CLOSURE_CAP)
}

pub fn certify_switched_with(
    set: &SwitchedSet,
    bound: usize,
    tol: f64,
    opts: &PowerOptions,
    cap: usize,
) -> Result<StabilityCertificate> {
    check_tol(tol)?;
    let mut rho = 0.0f64;
    let mut rate = 0.0f64;
    let size = for_each_ri_member(&set.lipschitz, cap, |m, _| {
        let a = LipschitzMatrix::from_dense(m, set.provenance)?;
        rho = rho.max(spectral_radius_bounds(a.entries(), opts)?.rho);
        let al = crate::delay::max_delay_lipschitz(&a, bound)?;
        rate = rate.max(spectral_radius_bounds(al.entries(), opts)?.rho);
        Ok(())
    })?;
    Ok(StabilityCertificate {
        verdict: Verdict::classify(rate, tol),
        rho,
        convergence_rate: Some(rate),
        delay_bound: Some(bound),
        provenance: set.provenance,
        closure_size: Some(size),
        tol,
        power_tol: opts.tol,
    })
}

/// `E_L(x0)`, the default initial condition of a simulation.
pub fn initial_state(x0: &StateVector, delays: &DelaySchedule) -> LiftedState {
    extend_point(x0, delays.bound())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::lipschitz::lipschitz_linear;
    use crate::matrix::Matrix;
    use crate::models::{build_cgn, build_switched_control, build_switched_linear, cgn_fixed_point};
    use crate::spectral::spectral_radius_power;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn sv(x: &[f64]) -> StateVector {
        StateVector::from_slice(x).unwrap()
    }

    fn singleton(spec: &crate::models::CgnSpec) -> SwitchedSet {
        let net = build_cgn(spec).unwrap();
        SwitchedSet::new(vec![net.map], vec![net.lipschitz]).unwrap()
    }

    fn reference_run(delays: &DelaySchedule) -> Trajectory {
        let set = singleton(&catalog::cgn_delay_robust());
        let opts = SimulationOptions { reference: Some(catalog::ROBUST_FIXED_POINT.to_vec()), ..Default::default() };
        let start = initial_state(&sv(&[0.0, 0.0]), delays);
        simulate_instance_with(&set, &SwitchSchedule::Constant(0), delays, &start, 500, &opts).unwrap()
    }

    #[test]
    fn robust_cgn_converges_under_every_schedule() {
        for delays in [
            DelaySchedule::none(2),
            DelaySchedule::constant(catalog::constant_delays()),
            catalog::periodic_delays(),
            catalog::uniform_delays(catalog::UNIFORM_DELAY_SEED),
        ] {
            let t = reference_run(&delays);
            assert!(t.diverged_at.is_none());
            assert!(t.terminal_gap().unwrap() < 1e-2, "{:?}: {:?}", delays.rule(), t.terminal_gap());
        }
    }

    #[test]
    fn stochastic_runs_are_reproducible() {
        let a = reference_run(&catalog::uniform_delays(7));
        let b = reference_run(&catalog::uniform_delays(7));
        assert_eq!(a, b);
        assert_eq!(a.delay_seed, Some(7));
        let c = reference_run(&catalog::uniform_delays(8));
        assert_ne!(a.states[20], c.states[20]);
    }

    #[test]
    fn schedules_respect_the_bound() {
        let p = catalog::periodic_delays();
        assert_eq!(p.at(7).unwrap().to_rows(), vec![vec![2, 1], vec![1, 2]]);
        assert_eq!(p.at(30).unwrap().max_entry(), 0);
        for k in 1..200 {
            assert!(p.at(k).unwrap().max_entry() <= 5);
            assert!(catalog::uniform_delays(3).at(k).unwrap().max_entry() <= 10);
        }
        assert!(DelaySchedule::periodic_modulo(2, vec![5, 7, 6, 5], 5).is_err());
    }

    #[test]
    fn sensitive_cgn_destabilised_by_constant_delays() {
        let spec = catalog::cgn_delay_sensitive();
        let set = singleton(&spec);
        let opts = SimulationOptions { reference: Some(vec![0.0, 0.0]), ..Default::default() };
        let plain = DelaySchedule::none(2);
        let t = simulate_instance_with(&set, &SwitchSchedule::Constant(0), &plain, &initial_state(&sv(&[1.0, 1.0]), &plain), 500, &opts).unwrap();
        assert!(t.terminal_gap().unwrap() < 1e-3);
        let delayed = DelaySchedule::constant(catalog::constant_delays());
        let t = simulate_instance_with(&set, &SwitchSchedule::Constant(0), &delayed, &initial_state(&sv(&[1.0, 1.0]), &delayed), 500, &opts).unwrap();
        assert!(t.gaps[200..].iter().all(|&g| g > 0.1));
    }

    #[test]
    fn halving_map_contracts_at_one_half() {
        let half = NetworkMap::linear(Matrix::from_rows(&[[0.5]]).unwrap(), "half").unwrap();
        let set = SwitchedSet::new(vec![half], vec![lipschitz_linear(&Matrix::from_rows(&[[0.5]]).unwrap()).unwrap()]).unwrap();
        let d = DelaySchedule::none(1);
        let est = contraction_estimate(&set, &SwitchSchedule::Constant(0), &d, &initial_state(&sv(&[1.0]), &d), &initial_state(&sv(&[-1.0]), &d), 30).unwrap();
        for (k, g) in est.gaps.iter().enumerate() {
            assert_eq!(*g, 2.0 * libm::pow(0.5, k as f64));
        }
        assert_abs_diff_eq!(est.rate.unwrap(), 0.5, epsilon = 1e-12);
    }

    fn switched_cgn(with_inputs: bool) -> SwitchedSet {
        let (g, h) = catalog::switched_cgn_pair(with_inputs);
        let (g, h) = (build_cgn(&g).unwrap(), build_cgn(&h).unwrap());
        SwitchedSet::new(vec![g.map, h.map], vec![g.lipschitz, h.lipschitz]).unwrap()
    }

    #[test]
    fn switched_cgn_orbits_merge() {
        let set = switched_cgn(true);
        let d = DelaySchedule::none(2);
        let switch = SwitchSchedule::Cycle(vec![0, 0, 0, 1, 1, 1]);
        let est = contraction_estimate(&set, &switch, &d, &initial_state(&sv(&[2.0, 3.0]), &d), &initial_state(&sv(&[-2.0, -3.0]), &d), 1000).unwrap();
        assert!(est.gaps.iter().skip(200).all(|&g| g < 1e-6));
        assert!(est.rate.unwrap() <= 0.95 + 0.02, "{:?}", est.rate);
    }

    #[test]
    fn alternating_jordan_pair_diverges() {
        let (p, q) = catalog::jordan_pair(0.1);
        let set = SwitchedSet::new(
            vec![NetworkMap::linear(p.clone(), "P").unwrap(), NetworkMap::linear(q.clone(), "Q").unwrap()],
            vec![lipschitz_linear(&p).unwrap(), lipschitz_linear(&q).unwrap()],
        )
        .unwrap();
        let d = DelaySchedule::none(2);
        let est = contraction_estimate(&set, &SwitchSchedule::Cycle(vec![0, 1]), &d, &initial_state(&sv(&[1.0, 1.0]), &d), &initial_state(&sv(&[0.0, 0.0]), &d), 5000).unwrap();
        assert!(est.diverged_at.is_some());
        assert!(est.rate.unwrap() > 1.0);
    }

    #[test]
    fn schedule_out_of_range_is_an_error() {
        let set = singleton(&catalog::cgn_delay_robust());
        let d = DelaySchedule::none(2);
        let err = simulate_instance(&set, &SwitchSchedule::Cycle(vec![0, 3]), &d, &initial_state(&sv(&[0.0, 0.0]), &d), 5).unwrap_err();
        assert_eq!(err, Error::ScheduleError { step: 2, index: 3, len: 1 });
    }

    #[test]
    fn shared_fixed_points() {
        let zero = sv(&[0.0, 0.0]);
        assert!(shared_fixed_point_check(&switched_cgn(false), &zero, 1e-12).unwrap().shared);
        let report = shared_fixed_point_check(&switched_cgn(true), &zero, 1e-12).unwrap();
        assert!(!report.shared);
        assert_eq!(report.residuals[0], 1.0);
        let x = cgn_fixed_point(&catalog::cgn_delay_robust()).unwrap();
        assert!(shared_fixed_point_check(&singleton(&catalog::cgn_delay_robust()), &x, 1e-11).unwrap().shared);
    }

    #[test]
    fn certify_switched_reference_sets() {
        let rows = build_switched_linear(&catalog::switched_linear_rows()).unwrap();
        for l in [1, 5, 13, 40] {
            let c = certify_switched(&rows.set, l, 1e-8).unwrap();
            assert_eq!(c.verdict, Verdict::Stable);
            assert_eq!(c.closure_size, Some(2));
            assert_abs_diff_eq!(c.rho, 0.59, epsilon = 5e-3);
            assert!(c.convergence_rate.unwrap() < 1.0);
        }
        let control = build_switched_control(&catalog::switched_control()).unwrap();
        let c = certify_switched(&control.set, 2, 1e-8).unwrap();
        assert_eq!(c.verdict, Verdict::Stable);
        assert_eq!(c.closure_size, Some(4));
        assert_abs_diff_eq!(c.rho, 0.9106, epsilon = 1e-4);

        let bad = singleton(&catalog::cgn_delay_sensitive());
        assert_eq!(certify_switched(&bad, 3, 1e-8).unwrap().verdict, Verdict::NotIntrinsicallyStable);
    }

    #[test]
    fn singleton_certificate_equals_maximal_delay_radius() {
        let net = build_cgn(&catalog::cgn_delay_robust()).unwrap();
        let set = SwitchedSet::new(vec![net.map.clone()], vec![net.lipschitz.clone()]).unwrap();
        let c = certify_switched(&set, 4, 1e-8).unwrap();
        let al = crate::delay::max_delay_lipschitz(&net.lipschitz, 4).unwrap();
        let direct = spectral_radius_power(al.entries(), &PowerOptions::default()).unwrap();
        assert_eq!(c.convergence_rate.unwrap(), direct);
    }

    #[test]
    fn verified_set_rejects_understated_bounds() {
        let net = build_cgn(&catalog::cgn_delay_robust()).unwrap();
        let bx = [(-5.0, 5.0), (-5.0, 5.0)];
        assert!(SwitchedSet::verified(vec![net.map.clone()], vec![net.lipschitz.clone()], 2000, &bx, 1).is_ok());
        let half = net.lipschitz.scaled(0.5).unwrap();
        assert!(matches!(
            SwitchedSet::verified(vec![net.map], vec![half], 2000, &bx, 1),
            Err(Error::LipschitzViolation { member: 0, .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(20))]

        #[test]
        fn certified_switched_instances_converge(
            switch_seed in 0u64..1_000_000,
            delay_seed in 0u64..1_000_000,
            x0 in proptest::collection::vec(-10.0..10.0f64, 2),
        ) {
            let set = switched_cgn(false);
            let l = 6;
            prop_assert!(certify_switched(&set, l, 1e-8).unwrap().is_stable());
            let delays = DelaySchedule::uniform(2, 0, l, delay_seed).unwrap();
            let switch = SwitchSchedule::Uniform { count: 2, seed: switch_seed };
            let opts = SimulationOptions { reference: Some(vec![0.0, 0.0]), ..Default::default() };
            let t = simulate_instance_with(&set, &switch, &delays, &initial_state(&sv(&x0), &delays), 1500, &opts).unwrap();
            prop_assert!(t.terminal_gap().unwrap() < 1e-6, "{:?}", t.terminal_gap());
        }

        #[test]
        fn empirical_rate_within_certified_bound(
            switch_seed in 0u64..1_000_000,
            x0 in proptest::collection::vec(-5.0..5.0f64, 2),
        ) {
            let set = switched_cgn(true);
            let bound = certify_switched(&set, 0, 1e-8).unwrap().convergence_rate.unwrap();
            let d = DelaySchedule::none(2);
            let switch = SwitchSchedule::Uniform { count: 2, seed: switch_seed };
            let y0: Vec<f64> = x0.iter().map(|v| -v - 1.0).collect();
            let est = contraction_estimate(&set, &switch, &d, &initial_state(&sv(&x0), &d), &initial_state(&sv(&y0), &d), 600).unwrap();
            if let Some(rate) = est.rate {
                prop_assert!(rate <= bound + 0.05, "rate {} bound {}", rate, bound);
            }
        }

        #[test]
        fn reordering_the_set_keeps_the_bound(l in 0usize..8) {
            let rows = build_switched_linear(&catalog::switched_linear_rows()).unwrap();
            let a = certify_switched(&rows.set, l, 1e-8).unwrap();
            let b = certify_switched(&rows.set.permuted(&[2, 0, 3, 1]).unwrap(), l, 1e-8).unwrap();
            prop_assert!((a.convergence_rate.unwrap() - b.convergence_rate.unwrap()).abs() <= 1e-9);
        }
    }
}
