//! Stability verdicts and certificates.

use core::fmt;

use crate::delay::max_delay_lipschitz;
use crate::error::{Error, Result};
use crate::lipschitz::{LipschitzMatrix, Provenance};
use crate::spectral::{spectral_radius_bounds, PowerOptions};

/// Half-width of the marginal band around 1. Wider than the power-method
/// tolerance so that a radius of exactly 1 is never misclassified by
/// iteration error.
pub const DEFAULT_CERTIFICATE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Stable,
    Marginal,
    NotIntrinsicallyStable,
}

impl Verdict {
    /// `ρ < 1 − tol` is stable, `ρ > 1 + tol` is not, anything between is marginal.
    pub fn classify(rho: f64, tol: f64) -> Verdict {
        if rho < 1.0 - tol {
            Verdict::Stable
        } else if rho > 1.0 + tol {
            Verdict::NotIntrinsicallyStable
        } else {
            Verdict::Marginal
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Stable => "stable",
            Verdict::Marginal => "marginal",
            Verdict::NotIntrinsicallyStable => "not-intrinsically-stable",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Outcome of a certification run.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityCertificate {
    pub verdict: Verdict,
    /// `ρ(A)`, or `max_{A ∈ RI(S)} ρ(A)` for switched sets.
    pub rho: f64,
    /// `ρ(A_L)` (or its maximum over `RI(S)`) when a delay bound was given.
    pub convergence_rate: Option<f64>,
    pub delay_bound: Option<usize>,
    pub provenance: Provenance,
    /// `|RI(S)|` for switched sets.
    pub closure_size: Option<u128>,
    pub tol: f64,
    pub power_tol: f64,
}

impl StabilityCertificate {
    /// True when the Lipschitz matrix was sampled rather than derived.
    pub fn is_heuristic(&self) -> bool {
        self.provenance.is_heuristic()
    }

    pub fn is_stable(&self) -> bool {
        self.verdict == Verdict::Stable
    }
}

pub(crate) fn check_tol(tol: f64) -> Result<()> {
    if tol.is_finite() && tol >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid("certificate tolerance must be finite and nonnegative"))
    }
}

/// Certifies a single network from its Lipschitz matrix. With `delay_bound =
/// Some(L)` the certificate also carries the convergence rate `ρ(A_L)`.
pub fn certify(
    a: &LipschitzMatrix,
    delay_bound: Option<usize>,
    tol: f64,
    opts: &PowerOptions,
) -> Result<StabilityCertificate> {
    check_tol(tol)?;
    let rho = spectral_radius_bounds(a.entries(), opts)?.rho;
    let convergence_rate = match delay_bound {
        Some(l) => Some(spectral_radius_bounds(max_delay_lipschitz(a, l)?.entries(), opts)?.rho),
        None => None,
    };
    Ok(StabilityCertificate {
        verdict: Verdict::classify(rho, tol),
        rho,
        convergence_rate,
        delay_bound,
        provenance: a.provenance(),
        closure_size: None,
        tol,
        power_tol: opts.tol,
    })
}
