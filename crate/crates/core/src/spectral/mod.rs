//! Spectral radius, row-independence closure and joint-spectral-radius bounds.

mod exact;
mod jsr;
mod power;

pub use exact::{characteristic_polynomial, polynomial_roots, spectral_radius_exact, EXACT_MAX_DIM};
pub use jsr::{
    for_each_ri_member, jsr_bruteforce, jsr_bruteforce_with, jsr_upper_bound_ri, jsr_upper_bound_ri_with, ri_closure,
    ri_closure_capped, ri_closure_size, JsrBounds, JsrMethod, MatrixSet, DEFAULT_CLOSURE_CAP, DEFAULT_PRODUCT_CAP,
};
pub use power::{spectral_radius_bounds, spectral_radius_power, PowerOptions, PowerResult};

use crate::certificate::{certify, StabilityCertificate};
use crate::error::Result;
use crate::lipschitz::LipschitzMatrix;

/// Classifies `ρ(A)` against 1 with the marginal band `[1 − tol, 1 + tol]`.
pub fn is_intrinsically_stable(a: &LipschitzMatrix, tol: f64) -> Result<StabilityCertificate> {
    certify(a, None, tol, &PowerOptions::default())
}
