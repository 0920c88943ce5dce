//! Run configurations.
//!
//! A configuration is a TOML document with exactly one model section
//! (`[cgn]`, `[linear_delayed]`, `[switched_control]`, `[switched_linear]`,
//! `[switched_cgn]` or `[generic]`) and optional `[delay]`, `[simulation]`
//! and `[tolerances]` sections. Matrices are written inline as lists of rows
//! or loaded from a CSV file with `{ file = "w.csv" }`, resolved relative to
//! the configuration file.

use std::ops::Range;
use std::path::{Path, PathBuf};

use intrinsic_core::catalog;
use intrinsic_core::models::{CgnSpec, LinearDelayedSpec, SwitchedControlSpec, SwitchedLinearSpec};
use intrinsic_core::switched::TauSchedule;
use serde::{Deserialize, Serialize};
use toml::Spanned;

use crate::CliError;

/// A matrix given inline or by a sidecar CSV file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSource {
    Inline(Vec<Vec<f64>>),
    File { file: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CgnSection {
    pub w: Spanned<MatrixSource>,
    pub epsilon: f64,
    /// `tanh` or `logistic`.
    #[serde(default = "default_activation")]
    pub activation: String,
    /// External input; zero when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Vec<f64>>,
}

fn default_activation() -> String {
    "tanh".into()
}

/// `x^{k+1} = A x^k + B x^{k−τ(k)}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearDelayedSection {
    pub a: Spanned<MatrixSource>,
    pub b: Spanned<MatrixSource>,
}

/// `x^{k+1} = (A + c_σ qᵀ) x^k + B x^{k−τ(k)}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwitchedControlSection {
    pub a: Spanned<MatrixSource>,
    pub b: Spanned<MatrixSource>,
    pub q: Vec<f64>,
    /// One control direction per mode.
    pub c: Spanned<Vec<Vec<f64>>>,
}

/// `x^{k+1} = A_σ x^k + B_σ x^{k−τ(k)}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwitchedLinearSection {
    pub a: Vec<Spanned<MatrixSource>>,
    pub b: Vec<Spanned<MatrixSource>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwitchedCgnSection {
    pub members: Vec<CgnSection>,
}

/// The linear map `x ↦ M x`, optionally with a user-supplied Lipschitz matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenericSection {
    pub matrix: Spanned<MatrixSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<Spanned<MatrixSource>>,
}

/// Delay schedule. `kind` is one of `none`, `constant` (`d`), `periodic`
/// (`moduli`, `d_ij(k) = k mod m_ij`), `uniform` (`low`, `high`, `seed`),
/// `explicit` (`sequence`, cycled), or for linear models `tau-constant`
/// (`tau`), `tau-cycle` (`taus`) and `tau-uniform` (`low`, `high`, `seed`).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DelaySection {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<Vec<Vec<i64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub moduli: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sequence: Option<Vec<Vec<Vec<i64>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub low: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub high: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub taus: Option<Vec<usize>>,
}

/// Which map runs at each step: `constant` (`index`), `cycle` (`cycle`) or
/// `uniform` (`seed`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwitchSection {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cycle: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub steps: usize,
    /// Unlifted initial point; the history is filled with copies of it.
    pub x0: Vec<f64>,
    /// Second initial point for contraction estimates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y0: Option<Vec<f64>>,
    /// Point the gaps are measured against; found automatically when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub divergence_bound: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub switch: Option<SwitchSection>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TolerancesSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closure_cap: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cgn: Option<Spanned<CgnSection>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linear_delayed: Option<Spanned<LinearDelayedSection>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub switched_control: Option<Spanned<SwitchedControlSection>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub switched_linear: Option<Spanned<SwitchedLinearSection>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub switched_cgn: Option<Spanned<SwitchedCgnSection>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generic: Option<Spanned<GenericSection>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delay: Option<Spanned<DelaySection>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<Spanned<SimulationSection>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<TolerancesSection>,
}

/// The text a configuration was read from, for anchoring errors.
#[derive(Debug, Clone)]
pub struct ConfigSource {
    pub path: PathBuf,
    pub text: String,
}

impl ConfigSource {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Ok(Self { path: path.to_path_buf(), text })
    }

    pub fn line_of(&self, offset: usize) -> usize {
        self.text.as_bytes()[..offset.min(self.text.len())].iter().filter(|&&b| b == b'\n').count() + 1
    }

    /// A configuration error at the start of `span`; spans that do not come
    /// from this text (for example generated configs) carry no line.
    pub fn error(&self, span: Range<usize>, message: impl Into<String>) -> CliError {
        let line = (span.end > span.start && span.end <= self.text.len()).then(|| self.line_of(span.start));
        CliError::Config { path: self.path.clone(), line, message: message.into() }
    }

    pub fn error_unanchored(&self, message: impl Into<String>) -> CliError {
        CliError::Config { path: self.path.clone(), line: None, message: message.into() }
    }

    pub fn resolve(&self, file: &str) -> PathBuf {
        let p = Path::new(file);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.path.parent().unwrap_or(Path::new(".")).join(p)
        }
    }

    pub fn parse(&self) -> Result<RunConfig, CliError> {
        let config: RunConfig = toml::from_str(&self.text).map_err(|e| {
            let line = e.span().map(|s| self.line_of(s.start));
            CliError::Config { path: self.path.clone(), line, message: e.message().trim_end().to_string() }
        })?;
        let present = config.model_names();
        match present.len() {
            1 => Ok(config),
            0 => Err(self.error_unanchored(format!("no model section; expected one of {}", MODEL_SECTIONS.join(", ")))),
            _ => {
                let span = config.model_spans().into_iter().nth(1).unwrap_or(0..0);
                Err(self.error(span, format!("more than one model section: {}", present.join(", "))))
            }
        }
    }
}

pub const MODEL_SECTIONS: [&str; 6] =
    ["cgn", "linear_delayed", "switched_control", "switched_linear", "switched_cgn", "generic"];

impl RunConfig {
    fn model_spans(&self) -> Vec<Range<usize>> {
        let mut spans = vec![];
        spans.extend(self.cgn.as_ref().map(Spanned::span));
        spans.extend(self.linear_delayed.as_ref().map(Spanned::span));
        spans.extend(self.switched_control.as_ref().map(Spanned::span));
        spans.extend(self.switched_linear.as_ref().map(Spanned::span));
        spans.extend(self.switched_cgn.as_ref().map(Spanned::span));
        spans.extend(self.generic.as_ref().map(Spanned::span));
        spans.sort_by_key(|r| r.start);
        spans
    }

    /// Names of the model sections present.
    pub fn model_names(&self) -> Vec<&'static str> {
        let flags = [
            self.cgn.is_some(),
            self.linear_delayed.is_some(),
            self.switched_control.is_some(),
            self.switched_linear.is_some(),
            self.switched_cgn.is_some(),
            self.generic.is_some(),
        ];
        MODEL_SECTIONS.iter().zip(flags).filter(|(_, f)| *f).map(|(n, _)| *n).collect()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run configurations always serialize")
    }
}

pub fn load(path: &Path) -> Result<(ConfigSource, RunConfig), CliError> {
    let source = ConfigSource::read(path)?;
    let config = source.parse()?;
    Ok((source, config))
}

fn spanned<T>(value: T) -> Spanned<T> {
    Spanned::new(0..0, value)
}

fn inline(m: &intrinsic_core::Matrix) -> Spanned<MatrixSource> {
    spanned(MatrixSource::Inline(m.to_rows()))
}

fn cgn_section(spec: &CgnSpec) -> CgnSection {
    CgnSection {
        w: inline(&spec.w),
        epsilon: spec.epsilon,
        activation: spec.sigma.name().to_string(),
        c: spec.c.iter().any(|&v| v != 0.0).then(|| spec.c.clone()),
    }
}

fn tau_delay(tau: &TauSchedule, bound: usize) -> DelaySection {
    let mut d = DelaySection { bound: Some(bound), ..Default::default() };
    match tau {
        TauSchedule::Constant(t) => {
            d.kind = "tau-constant".into();
            d.tau = Some(*t);
        }
        TauSchedule::Cycle(seq) => {
            d.kind = "tau-cycle".into();
            d.taus = Some(seq.clone());
        }
        TauSchedule::Uniform { low, high, seed } => {
            d.kind = "tau-uniform".into();
            (d.low, d.high, d.seed) = (Some(*low), Some(*high), Some(*seed));
        }
    }
    d
}

fn linear_section(spec: &LinearDelayedSpec) -> LinearDelayedSection {
    LinearDelayedSection { a: inline(&spec.a), b: inline(&spec.b) }
}

fn control_section(spec: &SwitchedControlSpec) -> SwitchedControlSection {
    SwitchedControlSection { a: inline(&spec.a), b: inline(&spec.b), q: spec.q.clone(), c: spanned(spec.c_set.clone()) }
}

fn switched_linear_section(spec: &SwitchedLinearSpec) -> SwitchedLinearSection {
    SwitchedLinearSection { a: spec.a_set.iter().map(inline).collect(), b: spec.b_set.iter().map(inline).collect() }
}

fn simulation(steps: usize, x0: &[f64]) -> SimulationSection {
    SimulationSection { steps, x0: x0.to_vec(), y0: None, reference: None, divergence_bound: None, switch: None }
}

fn constant_delay_section() -> DelaySection {
    let d = catalog::constant_delays();
    DelaySection {
        kind: "constant".into(),
        bound: Some(d.bound()),
        d: Some(d.to_rows().iter().map(|r| r.iter().map(|&v| v as i64).collect()).collect()),
        ..Default::default()
    }
}

/// Names accepted by [`example`].
pub const EXAMPLE_NAMES: [&str; 9] = [
    "cgn-delay-sensitive",
    "cgn-delay-robust",
    "cgn-periodic",
    "cgn-uniform",
    "lifted-linear-robust",
    "lifted-linear-marginal",
    "switched-linear-rows",
    "switched-control",
    "switched-cgn",
];

/// A ready-to-run configuration for one of the reference systems.
pub fn example(name: &str) -> Option<RunConfig> {
    let mut config = RunConfig::default();
    match name {
        "cgn-delay-sensitive" => {
            config.cgn = Some(spanned(cgn_section(&catalog::cgn_delay_sensitive())));
            config.delay = Some(spanned(constant_delay_section()));
            config.simulation = Some(spanned(simulation(500, &[1.0, 1.0])));
        }
        "cgn-delay-robust" => {
            config.cgn = Some(spanned(cgn_section(&catalog::cgn_delay_robust())));
            config.delay = Some(spanned(constant_delay_section()));
            config.simulation = Some(spanned(simulation(500, &[0.0, 0.0])));
        }
        "cgn-periodic" => {
            config.cgn = Some(spanned(cgn_section(&catalog::cgn_delay_robust())));
            config.delay = Some(spanned(DelaySection {
                kind: "periodic".into(),
                bound: Some(5),
                moduli: Some(vec![vec![5, 6], vec![6, 5]]),
                ..Default::default()
            }));
            config.simulation = Some(spanned(simulation(500, &[0.0, 0.0])));
        }
        "cgn-uniform" => {
            config.cgn = Some(spanned(cgn_section(&catalog::cgn_delay_robust())));
            config.delay = Some(spanned(DelaySection {
                kind: "uniform".into(),
                low: Some(0),
                high: Some(10),
                seed: Some(catalog::UNIFORM_DELAY_SEED),
                ..Default::default()
            }));
            config.simulation = Some(spanned(simulation(500, &[0.0, 0.0])));
        }
        "lifted-linear-robust" | "lifted-linear-marginal" => {
            let spec =
                if name == "lifted-linear-robust" { catalog::lifted_linear_robust() } else { catalog::lifted_linear_marginal() };
            config.linear_delayed = Some(spanned(linear_section(&spec)));
            config.delay = Some(spanned(tau_delay(&spec.tau, spec.delay_bound)));
            config.simulation = Some(spanned(simulation(300, &[1.0, -1.0])));
        }
        "switched-linear-rows" => {
            let spec = catalog::switched_linear_rows();
            config.switched_linear = Some(spanned(switched_linear_section(&spec)));
            config.delay = Some(spanned(tau_delay(&spec.tau, spec.delay_bound)));
            let mut sim = simulation(300, &[1.0, -1.0]);
            sim.switch = Some(SwitchSection { kind: "uniform".into(), index: None, cycle: None, seed: Some(7) });
            config.simulation = Some(spanned(sim));
        }
        "switched-control" => {
            let spec = catalog::switched_control();
            config.switched_control = Some(spanned(control_section(&spec)));
            config.delay = Some(spanned(tau_delay(&spec.tau, spec.delay_bound)));
            let mut sim = simulation(400, &[1.0, -1.0]);
            sim.switch = Some(SwitchSection { kind: "cycle".into(), index: None, cycle: Some(vec![0, 1, 2]), seed: None });
            config.simulation = Some(spanned(sim));
        }
        "switched-cgn" => {
            let (g, h) = catalog::switched_cgn_pair(true);
            config.switched_cgn =
                Some(spanned(SwitchedCgnSection { members: vec![cgn_section(&g), cgn_section(&h)] }));
            let mut sim = simulation(1000, &[2.0, 3.0]);
            sim.y0 = Some(vec![-2.0, -3.0]);
            sim.switch =
                Some(SwitchSection { kind: "cycle".into(), index: None, cycle: Some(vec![0, 0, 0, 1, 1, 1]), seed: None });
            config.simulation = Some(spanned(sim));
        }
        _ => return None,
    }
    Some(config)
}
