//! Turns a parsed [`RunConfig`] into core objects.

use std::ops::Range;

use intrinsic_core::delay::{extend_point, validate_delay_distribution, DelayDistribution, LiftedState};
use intrinsic_core::lipschitz::{lipschitz_linear, LipschitzMatrix};
use intrinsic_core::models::{
    build_cgn, build_lifted_linear, build_switched_control, build_switched_linear, cgn_fixed_point, constant_history,
    Activation, CgnSpec, LinearDelayedSpec, SwitchedControlSpec, SwitchedLinearSpec,
};
use intrinsic_core::network::{NetworkMap, StateVector};
use intrinsic_core::spectral::{PowerOptions, DEFAULT_CLOSURE_CAP};
use intrinsic_core::switched::{shared_fixed_point_check, DelaySchedule, SwitchSchedule, SwitchedSet, TauSchedule};
use intrinsic_core::certificate::DEFAULT_CERTIFICATE_TOL;
use intrinsic_core::Matrix;
use toml::Spanned;

use crate::config::{CgnSection, ConfigSource, DelaySection, MatrixSource, RunConfig, SimulationSection};
use crate::CliError;

/// Command-line values that take precedence over the configuration.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub steps: Option<usize>,
    pub delay_bound: Option<usize>,
    pub certificate_tol: Option<f64>,
    pub power_tol: Option<f64>,
    pub max_iter: Option<usize>,
}

/// A simulation ready to run.
#[derive(Debug, Clone)]
pub struct SimulationPlan {
    pub steps: usize,
    pub x0: LiftedState,
    pub y0: Option<LiftedState>,
    pub switch: SwitchSchedule,
    pub divergence_bound: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    /// Name of the model section.
    pub model: &'static str,
    /// Maps and their Lipschitz matrices; a single network is a singleton.
    pub set: SwitchedSet,
    /// Whether the model was declared as a switched family.
    pub switched: bool,
    /// Linear models run on the lifted state `(x^k, x^{k−1})`.
    pub lifted_linear: bool,
    pub delays: DelaySchedule,
    /// Delay bound used for the convergence rate.
    pub delay_bound: usize,
    /// Point that gaps are measured against, in the map's coordinates.
    pub reference: Option<Vec<f64>>,
    pub simulation: Option<SimulationPlan>,
    pub power: PowerOptions,
    pub certificate_tol: f64,
    pub closure_cap: usize,
}

impl Scenario {
    pub fn lipschitz(&self) -> LipschitzMatrix {
        LipschitzMatrix::from_dense(&self.set.lipschitz_set().members()[0], self.set.provenance())
            .expect("members are validated nonnegative")
    }
}

struct Builder<'a> {
    src: &'a ConfigSource,
}

impl Builder<'_> {
    fn matrix(&self, m: &Spanned<MatrixSource>, what: &str) -> Result<Matrix, CliError> {
        let rows = match m.get_ref() {
            MatrixSource::Inline(rows) => rows.clone(),
            MatrixSource::File { file } => self.read_csv(file, m.span(), what)?,
        };
        self.rows_to_matrix(&rows, m.span(), what)
    }

    fn rows_to_matrix(&self, rows: &[Vec<f64>], span: Range<usize>, what: &str) -> Result<Matrix, CliError> {
        Matrix::from_rows(rows).map_err(|e| self.src.error(span, format!("{what}: {e}")))
    }

    fn read_csv(&self, file: &str, span: Range<usize>, what: &str) -> Result<Vec<Vec<f64>>, CliError> {
        let path = self.src.resolve(file);
        if !path.exists() {
            return Err(self.src.error(span, format!("{what}: matrix file {} not found", path.display())));
        }
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .flexible(true)
            .from_path(&path)
            .map_err(|e| self.src.error(span.clone(), format!("{what}: {}: {e}", path.display())))?;
        let mut rows = Vec::new();
        for (r, record) in reader.records().enumerate() {
            let record = record.map_err(|e| self.src.error(span.clone(), format!("{what}: {}: {e}", path.display())))?;
            let row = record
                .iter()
                .map(|v| v.parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| self.src.error(span.clone(), format!("{what}: {} row {}: {e}", path.display(), r + 1)))?;
            rows.push(row);
        }
        Ok(rows)
    }

    fn cgn_spec(&self, s: &CgnSection, span: Range<usize>) -> Result<CgnSpec, CliError> {
        let w = self.matrix(&s.w, "w")?;
        let sigma = match s.activation.as_str() {
            "tanh" => Activation::Tanh,
            "logistic" => Activation::Logistic,
            other => return Err(self.src.error(span, format!("unknown activation {other:?}; use tanh or logistic"))),
        };
        let n = w.rows();
        let c = s.c.clone().unwrap_or_else(|| vec![0.0; n]);
        CgnSpec::new(w, s.epsilon, sigma, c).map_err(|e| self.src.error(span, format!("cgn: {e}")))
    }

    fn tau(&self, d: &Option<Spanned<DelaySection>>, seed: Option<u64>) -> Result<(TauSchedule, usize), CliError> {
        let Some(d) = d else { return Ok((TauSchedule::Constant(1), 1)) };
        let (sec, span) = (d.get_ref(), d.span());
        let need = |v: Option<usize>, key: &str| {
            v.ok_or_else(|| self.src.error(span.clone(), format!("delay kind {:?} needs `{key}`", sec.kind)))
        };
        let tau = match sec.kind.as_str() {
            "tau-constant" => TauSchedule::Constant(need(sec.tau, "tau")?),
            "tau-cycle" => TauSchedule::Cycle(sec.taus.clone().filter(|t| !t.is_empty()).ok_or_else(|| {
                self.src.error(span.clone(), "delay kind \"tau-cycle\" needs a non-empty `taus`")
            })?),
            "tau-uniform" => TauSchedule::Uniform {
                low: need(sec.low, "low")?,
                high: need(sec.high, "high")?,
                seed: seed.or(sec.seed).ok_or_else(|| self.missing_seed(span.clone()))?,
            },
            other => {
                return Err(self.src.error(
                    span,
                    format!("linear models take delay kinds tau-constant, tau-cycle or tau-uniform, not {other:?}"),
                ))
            }
        };
        let bound = match sec.bound {
            Some(b) => b,
            None => tau.range().1,
        };
        Ok((tau, bound))
    }

    fn missing_seed(&self, span: Range<usize>) -> CliError {
        self.src.error(span, "stochastic schedules need a seed (config `seed` or --seed)")
    }

    fn delay_schedule(&self, n: usize, d: &Option<Spanned<DelaySection>>, seed: Option<u64>) -> Result<DelaySchedule, CliError> {
        let Some(d) = d else { return Ok(DelaySchedule::none(n)) };
        let (sec, span) = (d.get_ref(), d.span());
        let err = |msg: String| self.src.error(span.clone(), msg);
        let bound = |default: Option<usize>| {
            sec.bound.or(default).ok_or_else(|| err(format!("delay kind {:?} needs `bound`", sec.kind)))
        };
        let distribution = |rows: &[Vec<i64>], bound: usize| -> Result<DelayDistribution, CliError> {
            if rows.len() != n {
                return Err(err(format!("delay matrix has {} rows, the network has {n} nodes", rows.len())));
            }
            validate_delay_distribution(rows, bound as i64).map_err(|e| err(format!("delay: {e}")))
        };
        let schedule = match sec.kind.as_str() {
            "none" => DelaySchedule::none(n),
            "constant" => {
                let rows = sec.d.as_ref().ok_or_else(|| err("delay kind \"constant\" needs `d`".into()))?;
                let max = rows.iter().flatten().copied().max().unwrap_or(0).max(0) as usize;
                DelaySchedule::constant(distribution(rows, bound(Some(max))?)?)
            }
            "periodic" => {
                let moduli = sec.moduli.as_ref().ok_or_else(|| err("delay kind \"periodic\" needs `moduli`".into()))?;
                if moduli.len() != n || moduli.iter().any(|r| r.len() != n) {
                    return Err(err(format!("`moduli` must be {n}x{n}")));
                }
                let max = moduli.iter().flatten().copied().max().unwrap_or(1).saturating_sub(1);
                DelaySchedule::periodic_modulo(n, moduli.concat(), bound(Some(max))?).map_err(|e| err(format!("delay: {e}")))?
            }
            "uniform" => {
                let low = sec.low.unwrap_or(0);
                let high = sec.high.or(sec.bound).ok_or_else(|| err("delay kind \"uniform\" needs `high`".into()))?;
                let seed = seed.or(sec.seed).ok_or_else(|| self.missing_seed(span.clone()))?;
                if sec.bound.is_some_and(|b| b != high) {
                    return Err(err("for uniform delays `bound` must equal `high`".into()));
                }
                DelaySchedule::uniform(n, low, high, seed).map_err(|e| err(format!("delay: {e}")))?
            }
            "explicit" => {
                let seq = sec.sequence.as_ref().filter(|s| !s.is_empty());
                let seq = seq.ok_or_else(|| err("delay kind \"explicit\" needs a non-empty `sequence`".into()))?;
                let max = seq.iter().flatten().flatten().copied().max().unwrap_or(0).max(0) as usize;
                let bound = bound(Some(max))?;
                let dists = seq.iter().map(|rows| distribution(rows, bound)).collect::<Result<Vec<_>, _>>()?;
                DelaySchedule::explicit(dists).map_err(|e| err(format!("delay: {e}")))?
            }
            other if other.starts_with("tau-") => {
                return Err(err(format!("delay kind {other:?} applies to linear delayed models only")))
            }
            other => {
                return Err(err(format!("unknown delay kind {other:?}; use none, constant, periodic, uniform or explicit")))
            }
        };
        Ok(schedule)
    }

    fn switch(&self, sim: &Spanned<SimulationSection>, count: usize, seed: Option<u64>) -> Result<SwitchSchedule, CliError> {
        let span = sim.span();
        let Some(s) = &sim.get_ref().switch else { return Ok(SwitchSchedule::Constant(0)) };
        let err = |msg: String| self.src.error(span.clone(), msg);
        let check = |i: usize| {
            if i < count {
                Ok(i)
            } else {
                Err(err(format!("switch index {i} is out of range for {count} maps")))
            }
        };
        Ok(match s.kind.as_str() {
            "constant" => SwitchSchedule::Constant(check(s.index.unwrap_or(0))?),
            "cycle" => {
                let cycle = s.cycle.clone().filter(|c| !c.is_empty());
                let cycle = cycle.ok_or_else(|| err("switch kind \"cycle\" needs a non-empty `cycle`".into()))?;
                for &i in &cycle {
                    check(i)?;
                }
                SwitchSchedule::Cycle(cycle)
            }
            "uniform" => SwitchSchedule::Uniform {
                count,
                seed: seed.or(s.seed).ok_or_else(|| self.missing_seed(span.clone()))?,
            },
            other => return Err(err(format!("unknown switch kind {other:?}; use constant, cycle or uniform"))),
        })
    }

    fn point(&self, v: &[f64], n: usize, what: &str, span: Range<usize>) -> Result<StateVector, CliError> {
        if v.len() != n {
            return Err(self.src.error(span, format!("`{what}` has {} entries, the model has {n}", v.len())));
        }
        StateVector::from_slice(v).map_err(|e| self.src.error(span, format!("`{what}`: {e}")))
    }
}

fn single(map: NetworkMap, lipschitz: LipschitzMatrix) -> Result<SwitchedSet, CliError> {
    Ok(SwitchedSet::new(vec![map], vec![lipschitz])?)
}

/// Builds the scenario described by `config`.
pub fn build(src: &ConfigSource, config: &RunConfig, o: &Overrides) -> Result<Scenario, CliError> {
    let b = Builder { src };
    let model = config.model_names()[0];
    let tolerances = config.tolerances.clone().unwrap_or_default();
    let mut power = PowerOptions::default();
    if let Some(t) = o.power_tol.or(tolerances.power_tol) {
        power.tol = t;
    }
    if let Some(m) = o.max_iter.or(tolerances.max_iter) {
        power.max_iter = m;
    }
    if !(power.tol.is_finite() && power.tol > 0.0) || power.max_iter == 0 {
        return Err(src.error_unanchored("power_tol must be positive and max_iter at least 1"));
    }
    let certificate_tol = o.certificate_tol.or(tolerances.certificate_tol).unwrap_or(DEFAULT_CERTIFICATE_TOL);
    let closure_cap = tolerances.closure_cap.unwrap_or(DEFAULT_CLOSURE_CAP);

    // `n` is the user-facing dimension; linear models run on 2n.
    let (set, switched, lifted_linear, delays, n, mut reference) = match model {
        "cgn" => {
            let sec = config.cgn.as_ref().expect("model present");
            let spec = b.cgn_spec(sec.get_ref(), sec.span())?;
            let net = build_cgn(&spec)?;
            let reference = cgn_fixed_point(&spec).ok().map(StateVector::into_inner);
            let n = spec.dim();
            (single(net.map, net.lipschitz)?, false, false, b.delay_schedule(n, &config.delay, o.seed)?, n, reference)
        }
        "switched_cgn" => {
            let sec = config.switched_cgn.as_ref().expect("model present");
            if sec.get_ref().members.is_empty() {
                return Err(src.error(sec.span(), "switched_cgn needs at least one member"));
            }
            let mut maps = Vec::new();
            let mut lips = Vec::new();
            let mut first = None;
            for (k, m) in sec.get_ref().members.iter().enumerate() {
                let spec = b.cgn_spec(m, m.w.span())?;
                if first.is_none() {
                    first = cgn_fixed_point(&spec).ok();
                }
                let net = build_cgn(&spec)?;
                maps.push(net.map.with_label(format!("member{}", k + 1)));
                lips.push(net.lipschitz);
            }
            let set = SwitchedSet::new(maps, lips).map_err(|e| src.error(sec.span(), format!("switched_cgn: {e}")))?;
            let n = set.dim();
            let reference = first
                .filter(|x| shared_fixed_point_check(&set, x, 1e-9).map(|r| r.shared).unwrap_or(false))
                .map(StateVector::into_inner);
            (set, true, false, b.delay_schedule(n, &config.delay, o.seed)?, n, reference)
        }
        "generic" => {
            let sec = config.generic.as_ref().expect("model present").get_ref();
            let m = b.matrix(&sec.matrix, "matrix")?;
            let lipschitz = match &sec.lipschitz {
                Some(l) => {
                    let dense = b.matrix(l, "lipschitz")?;
                    LipschitzMatrix::user_supplied(&dense).map_err(|e| src.error(l.span(), format!("lipschitz: {e}")))?
                }
                None => lipschitz_linear(&m).map_err(|e| src.error(sec.matrix.span(), format!("matrix: {e}")))?,
            };
            let n = m.rows();
            let map = NetworkMap::linear(m, "generic").map_err(|e| src.error(sec.matrix.span(), format!("matrix: {e}")))?;
            if lipschitz.dim() != n {
                return Err(src.error_unanchored(format!("lipschitz matrix is {0}x{0}, the map has {n} nodes", lipschitz.dim())));
            }
            (single(map, lipschitz)?, false, false, b.delay_schedule(n, &config.delay, o.seed)?, n, Some(vec![0.0; n]))
        }
        "linear_delayed" => {
            let sec = config.linear_delayed.as_ref().expect("model present");
            let (a, bm) = (b.matrix(&sec.get_ref().a, "a")?, b.matrix(&sec.get_ref().b, "b")?);
            let (tau, bound) = b.tau(&config.delay, o.seed)?;
            let spec = LinearDelayedSpec::new(a, bm, bound, tau).map_err(|e| src.error(sec.span(), format!("linear_delayed: {e}")))?;
            let n = spec.dim();
            let lifted = build_lifted_linear(&spec)?;
            (single(lifted.map, lifted.lipschitz)?, false, true, lifted.schedule, n, Some(vec![0.0; 2 * n]))
        }
        "switched_control" => {
            let sec = config.switched_control.as_ref().expect("model present");
            let s = sec.get_ref();
            let (a, bm) = (b.matrix(&s.a, "a")?, b.matrix(&s.b, "b")?);
            let (tau, bound) = b.tau(&config.delay, o.seed)?;
            let spec = SwitchedControlSpec::new(a, bm, s.q.clone(), s.c.get_ref().clone(), bound, tau)
                .map_err(|e| src.error(sec.span(), format!("switched_control: {e}")))?;
            let n = spec.a.rows();
            let family = build_switched_control(&spec)?;
            (family.set, true, true, family.schedule, n, Some(vec![0.0; 2 * n]))
        }
        "switched_linear" => {
            let sec = config.switched_linear.as_ref().expect("model present");
            let s = sec.get_ref();
            let a_set = s.a.iter().map(|m| b.matrix(m, "a")).collect::<Result<Vec<_>, _>>()?;
            let b_set = s.b.iter().map(|m| b.matrix(m, "b")).collect::<Result<Vec<_>, _>>()?;
            let (tau, bound) = b.tau(&config.delay, o.seed)?;
            let spec = SwitchedLinearSpec::new(a_set, b_set, bound, tau)
                .map_err(|e| src.error(sec.span(), format!("switched_linear: {e}")))?;
            let n = spec.a_set[0].rows();
            let family = build_switched_linear(&spec)?;
            (family.set, true, true, family.schedule, n, Some(vec![0.0; 2 * n]))
        }
        _ => unreachable!("model names come from MODEL_SECTIONS"),
    };

    let lift = |x: &StateVector| if lifted_linear { constant_history(x, delays.bound()) } else { extend_point(x, delays.bound()) };
    let simulation = match &config.simulation {
        None => None,
        Some(sim) => {
            let s = sim.get_ref();
            let steps = o.steps.unwrap_or(s.steps);
            if steps == 0 {
                return Err(src.error(sim.span(), "`steps` must be at least 1"));
            }
            let x0 = b.point(&s.x0, n, "x0", sim.span())?;
            let y0 = s.y0.as_ref().map(|y| b.point(y, n, "y0", sim.span())).transpose()?;
            if let Some(r) = &s.reference {
                let r = b.point(r, n, "reference", sim.span())?;
                reference = Some(if lifted_linear { constant_history(&r, 0).into_inner() } else { r.into_inner() });
            }
            Some(SimulationPlan {
                steps,
                x0: lift(&x0),
                y0: y0.as_ref().map(lift),
                switch: b.switch(sim, set.len(), o.seed)?,
                divergence_bound: s.divergence_bound,
            })
        }
    };

    let delay_bound = o.delay_bound.unwrap_or(delays.bound());
    Ok(Scenario {
        model,
        set,
        switched,
        lifted_linear,
        delays,
        delay_bound,
        reference,
        simulation,
        power,
        certificate_tol,
        closure_cap,
    })
}
