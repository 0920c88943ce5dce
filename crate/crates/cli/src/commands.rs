//! The subcommands. Each writes a human-readable report to `out` and machine
//! data to files.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use intrinsic_core::catalog;
use intrinsic_core::certificate::{certify, StabilityCertificate, Verdict};
use intrinsic_core::lipschitz::LipschitzMatrix;
use intrinsic_core::spectral::{ri_closure_capped, spectral_radius_bounds, MatrixSet};
use intrinsic_core::switched::{
    certify_switched_with, contraction_estimate, simulate_instance_with, ContractionEstimate, SimulationOptions,
    Trajectory,
};
use intrinsic_core::network::DEFAULT_DIVERGENCE_BOUND;

use crate::scenario::{Scenario, SimulationPlan};
use crate::CliError;

/// Column order of trajectory files.
pub const TRAJECTORY_HEADER: [&str; 5] = ["step", "block", "component", "value", "gap_to_fixed_point"];

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::io(path, e)
}

fn stdout_err(e: std::io::Error) -> CliError {
    CliError::io("<stdout>", e)
}

pub fn certificate(s: &Scenario) -> Result<StabilityCertificate, CliError> {
    let cert = if s.switched {
        certify_switched_with(&s.set, s.delay_bound, s.certificate_tol, &s.power, s.closure_cap)?
    } else {
        certify(&s.lipschitz(), Some(s.delay_bound), s.certificate_tol, &s.power)?
    };
    Ok(cert)
}

fn describe_model(s: &Scenario) -> String {
    let dim = s.set.dim();
    let mut text = if s.lifted_linear {
        format!("{} ({} nodes, lifted to {dim})", s.model, dim / 2)
    } else {
        format!("{} ({dim} nodes)", s.model)
    };
    if s.switched {
        let _ = write!(text, ", {} maps", s.set.len());
    }
    text
}

/// Structured text for a certificate.
pub fn certificate_text(s: &Scenario, c: &StabilityCertificate) -> String {
    let mut t = String::new();
    let _ = writeln!(t, "model: {}", describe_model(s));
    let _ = writeln!(t, "lipschitz provenance: {}", c.provenance.name());
    if let Some(size) = c.closure_size {
        let _ = writeln!(t, "ri-closure size: {size}");
        let _ = writeln!(t, "ri-closure bound max rho(A): {:.12}", c.rho);
    } else {
        let _ = writeln!(t, "rho(A): {:.12}", c.rho);
    }
    let _ = writeln!(t, "delay bound L: {}", s.delay_bound);
    if let Some(rate) = c.convergence_rate {
        let label = if c.closure_size.is_some() { "ri-closure bound max rho(A_L)" } else { "rho(A_L)" };
        let _ = writeln!(t, "{label}: {rate:.12}");
    }
    let _ = writeln!(t, "certificate tol: {:e}", c.tol);
    let _ = writeln!(t, "power tol: {:e}", c.power_tol);
    let _ = writeln!(t, "verdict: {}", c.verdict);
    let note = match c.verdict {
        Verdict::Stable => format!(
            "stable for all L; at L = {} orbits contract at rate {:.6} per step",
            s.delay_bound,
            c.convergence_rate.unwrap_or(c.rho)
        ),
        Verdict::Marginal => "marginal: rho(A) is within tol of 1, intrinsic stability is undecided".into(),
        Verdict::NotIntrinsicallyStable => "not intrinsically stable; delay bound unknown".into(),
    };
    let _ = writeln!(t, "note: {note}");
    if c.is_heuristic() {
        let _ = writeln!(t, "note: the Lipschitz matrix was sampled, so this certificate is heuristic");
    }
    t
}

pub fn certify_cmd(s: &Scenario, out: &mut dyn Write) -> Result<Verdict, CliError> {
    let c = certificate(s)?;
    out.write_all(certificate_text(s, &c).as_bytes()).map_err(stdout_err)?;
    Ok(c.verdict)
}

fn run(s: &Scenario, plan: &SimulationPlan) -> Result<Trajectory, CliError> {
    let opts = SimulationOptions {
        divergence_bound: plan.divergence_bound.unwrap_or(DEFAULT_DIVERGENCE_BOUND),
        reference: s.reference.clone(),
    };
    Ok(simulate_instance_with(&s.set, &plan.switch, &s.delays, &plan.x0, plan.steps, &opts)?)
}

/// Writes one row per `(step, block, component)`, then `#` comments.
pub fn write_trajectory(path: &Path, t: &Trajectory) -> Result<(), CliError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    w.write_record(TRAJECTORY_HEADER)?;
    for (k, state) in t.states.iter().enumerate() {
        let gap = t.gaps.get(k).map(|g| format!("{g:?}")).unwrap_or_default();
        for l in 0..=state.bound() {
            for (i, v) in state.block(l).iter().enumerate() {
                w.write_record([k.to_string(), l.to_string(), i.to_string(), format!("{v:?}"), gap.clone()])?;
            }
        }
    }
    let mut inner = w.into_inner().map_err(|e| CliError::io(path, e.into_error()))?;
    if let Some(k) = t.diverged_at {
        writeln!(inner, "# diverged at step {k}").map_err(io_err(path))?;
    }
    inner.flush().map_err(io_err(path))
}

fn write_contraction(path: &Path, e: &ContractionEstimate) -> Result<(), CliError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    w.write_record(["step", "gap"])?;
    for (k, g) in e.gaps.iter().enumerate() {
        w.write_record([k.to_string(), format!("{g:?}")])?;
    }
    let mut inner = w.into_inner().map_err(|e| CliError::io(path, e.into_error()))?;
    if let Some(rate) = e.rate {
        writeln!(inner, "# fitted rate {rate}").map_err(io_err(path))?;
    }
    if let Some(k) = e.diverged_at {
        writeln!(inner, "# diverged at step {k}").map_err(io_err(path))?;
    }
    inner.flush().map_err(io_err(path))
}

fn simulation_text(s: &Scenario, plan: &SimulationPlan, t: &Trajectory) -> String {
    let mut text = String::new();
    let _ = writeln!(text, "model: {}", describe_model(s));
    let _ = writeln!(text, "switching: {}", plan.switch.describe());
    let _ = writeln!(text, "delay bound L: {}", s.delays.bound());
    if let Some(seed) = t.delay_seed {
        let _ = writeln!(text, "delay seed: {seed}");
    }
    if let Some(seed) = t.switch_seed {
        let _ = writeln!(text, "switch seed: {seed}");
    }
    let _ = writeln!(text, "steps run: {}", t.states.len() - 1);
    match (t.terminal_gap(), &s.reference) {
        (Some(g), Some(r)) => {
            let _ = writeln!(text, "reference point: {r:?}");
            let _ = writeln!(text, "final gap to reference: {g:.6e}");
        }
        _ => {
            let _ = writeln!(text, "reference point: none (no shared fixed point found)");
        }
    }
    match t.diverged_at {
        Some(k) => {
            let _ = writeln!(text, "diverged at step {k}");
        }
        None => {
            let _ = writeln!(text, "diverged: no");
        }
    }
    text
}

fn require_plan(s: &Scenario) -> Result<&SimulationPlan, CliError> {
    s.simulation.as_ref().ok_or_else(|| CliError::Config {
        path: PathBuf::from("<config>"),
        line: None,
        message: "no [simulation] section".into(),
    })
}

pub fn simulate_cmd(s: &Scenario, csv_path: &Path, out: &mut dyn Write) -> Result<(), CliError> {
    let plan = require_plan(s)?;
    let t = run(s, plan)?;
    write_trajectory(csv_path, &t)?;
    let mut text = simulation_text(s, plan, &t);
    if let Some(y0) = &plan.y0 {
        let e = contraction_estimate(&s.set, &plan.switch, &s.delays, &plan.x0, y0, plan.steps)?;
        append_contraction(&mut text, &e);
    }
    let _ = writeln!(text, "trajectory: {}", csv_path.display());
    out.write_all(text.as_bytes()).map_err(stdout_err)
}

fn append_contraction(text: &mut String, e: &ContractionEstimate) {
    let _ = writeln!(text, "final gap between orbits: {:.6e}", e.gaps.last().copied().unwrap_or(f64::NAN));
    match e.rate {
        Some(r) => {
            let _ = writeln!(text, "fitted contraction rate: {r:.6}");
        }
        None => {
            let _ = writeln!(text, "fitted contraction rate: unresolved (orbits merged to rounding level)");
        }
    }
}

fn radius(m: &intrinsic_core::Matrix, s: &Scenario) -> Result<f64, CliError> {
    let a = LipschitzMatrix::from_dense(m, s.set.provenance())?;
    Ok(spectral_radius_bounds(a.entries(), &s.power)?.rho)
}

/// Lists the set's Lipschitz matrices, then any closure members not in the set.
pub fn closure_text(s: &Scenario) -> Result<String, CliError> {
    let set: &MatrixSet = s.set.lipschitz_set();
    let closure = ri_closure_capped(set, s.closure_cap)?;
    let mut t = String::new();
    let members = set.members();
    let distinct = (0..members.len()).filter(|&i| !members[..i].iter().any(|m| m == &members[i])).count();
    let _ = writeln!(t, "set members: {} ({distinct} distinct)", members.len());
    let _ = writeln!(t, "ri-closure size: {}", closure.len());
    let added: Vec<usize> = (0..closure.len()).filter(|&i| !set.contains(&closure.members()[i])).collect();
    let _ = writeln!(t, "listed members: {}", members.len() + added.len());
    let _ = writeln!(t, "{:<24} {:<16} rho", "member", "origin");
    let mut bound = 0.0f64;
    for (i, (label, m)) in set.iter().enumerate() {
        let origin = match members[..i].iter().position(|x| x == m) {
            Some(j) => format!("same as {}", set.labels()[j]),
            None => "set".into(),
        };
        let r = radius(m, s)?;
        bound = bound.max(r);
        let _ = writeln!(t, "{label:<24} {origin:<16} {r:.6}");
    }
    for i in added {
        let r = radius(&closure.members()[i], s)?;
        bound = bound.max(r);
        let _ = writeln!(t, "{:<24} {:<16} {r:.6}", closure.labels()[i], "closure");
    }
    let _ = writeln!(t, "bound max rho over RI(S): {bound:.6}");
    Ok(t)
}

pub fn closure_cmd(s: &Scenario, out: &mut dyn Write) -> Result<(), CliError> {
    out.write_all(closure_text(s)?.as_bytes()).map_err(stdout_err)
}

fn fmt_bound(v: f64) -> String {
    if v >= 1e6 {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

/// Delay-bound comparison: this tool's row followed by published bounds for
/// the reference systems, kept as documentation and never recomputed.
pub fn comparison_text(c: &StabilityCertificate) -> String {
    let mut t = String::new();
    let ours = match c.verdict {
        Verdict::Stable => "∞".to_string(),
        Verdict::Marginal => "undecided (marginal)".to_string(),
        Verdict::NotIntrinsicallyStable => "not intrinsically stable; delay bound unknown".to_string(),
    };
    let _ = writeln!(t, "{:<44} max delay bound L", "method");
    let _ = writeln!(t, "{:<44} {ours}", "this tool (intrinsic stability)");
    let _ = writeln!(t);
    let _ = writeln!(t, "published delay-dependent bounds (documentation only, not recomputed):");
    let _ = writeln!(t, "  lifted-linear-robust:");
    for (method, bound) in catalog::LITERATURE_ROBUST_BOUNDS {
        let _ = writeln!(t, "    {method:<40} {}", fmt_bound(bound));
    }
    let _ = writeln!(t, "  lifted-linear-marginal:");
    let _ = writeln!(t, "    {:<40} {}", "delay-dependent LMI criterion E", fmt_bound(catalog::LITERATURE_MARGINAL_BOUND));
    let _ = writeln!(t, "  switched-linear-rows:");
    let _ = writeln!(t, "    {:<40} {}", "switched LMI criterion", catalog::LITERATURE_ROWS_BOUND);
    let _ = writeln!(t, "  switched-control:");
    let _ = writeln!(t, "    {:<40} {}", "switched LMI criterion", catalog::LITERATURE_CONTROL_BOUND);
    t
}

pub fn report_cmd(s: &Scenario, dir: &Path, out: &mut dyn Write) -> Result<Verdict, CliError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let c = certificate(s)?;
    let mut written = Vec::new();
    let mut summary = certificate_text(s, &c);
    let _ = writeln!(summary);
    summary.push_str(&comparison_text(&c));

    if let Some(plan) = &s.simulation {
        let t = run(s, plan)?;
        let path = dir.join("trajectory.csv");
        write_trajectory(&path, &t)?;
        written.push(path);
        let _ = writeln!(summary);
        summary.push_str(&simulation_text(s, plan, &t));
        if let Some(y0) = &plan.y0 {
            let e = contraction_estimate(&s.set, &plan.switch, &s.delays, &plan.x0, y0, plan.steps)?;
            append_contraction(&mut summary, &e);
            let path = dir.join("contraction.csv");
            write_contraction(&path, &e)?;
            written.push(path);
        }
    }
    let path = dir.join("report.txt");
    std::fs::write(&path, &summary).map_err(io_err(&path))?;
    written.insert(0, path);

    let mut text = certificate_text(s, &c);
    for p in &written {
        let _ = writeln!(text, "wrote: {}", p.display());
    }
    out.write_all(text.as_bytes()).map_err(stdout_err)?;
    Ok(c.verdict)
}
