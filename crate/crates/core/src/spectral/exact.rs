//! Spectral radius of a small matrix from its characteristic polynomial.
//!
//! Coefficients are sums of principal minors (determinants by cofactor
//! expansion); roots come from Aberth–Ehrlich iteration. Independent of the
//! power method and used to test it. A root of multiplicity `k` is only
//! resolved to about `ε^{1/k}` relative accuracy (`ε` the coefficient rounding),
//! so the oracle is meant for matrices with a simple dominant eigenvalue.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Largest dimension accepted by [`spectral_radius_exact`].
pub const EXACT_MAX_DIM: usize = 6;

/// `ρ(A)` for any real square matrix with `n ≤ 6`.
pub fn spectral_radius_exact(a: &Matrix) -> Result<f64> {
    let n = a.square_dim()?;
    if n > EXACT_MAX_DIM {
        return Err(Error::DimensionTooLarge { n, max: EXACT_MAX_DIM });
    }
    if n == 0 {
        return Ok(0.0);
    }
    let coeffs = characteristic_polynomial(a);
    Ok(polynomial_roots(&coeffs).iter().map(|z| modulus(*z)).fold(0.0, f64::max))
}

/// Coefficients of `det(λI − A)`, highest degree first (leading 1).
pub fn characteristic_polynomial(a: &Matrix) -> Vec<f64> {
    let n = a.rows();
    let mut coeffs = vec![0.0; n + 1];
    coeffs[0] = 1.0;
    let mut idx = Vec::with_capacity(n);
    for mask in 1u32..(1u32 << n) {
        idx.clear();
        idx.extend((0..n).filter(|&i| mask & (1 << i) != 0));
        let k = idx.len();
        let minor = determinant(a, &idx, &idx);
        // det(λI − A) = Σₖ (−1)ᵏ Eₖ λⁿ⁻ᵏ, Eₖ = sum of k×k principal minors.
        coeffs[k] += if k % 2 == 0 { minor } else { -minor };
    }
    coeffs
}

/// Determinant of the submatrix on `rows × cols` by Laplace expansion along the first row.
fn determinant(a: &Matrix, rows: &[usize], cols: &[usize]) -> f64 {
    match rows.len() {
        0 => 1.0,
        1 => a.get(rows[0], cols[0]),
        2 => a.get(rows[0], cols[0]) * a.get(rows[1], cols[1]) - a.get(rows[0], cols[1]) * a.get(rows[1], cols[0]),
        _ => {
            let mut sum = 0.0;
            let mut rest = Vec::with_capacity(cols.len() - 1);
            for (c, &col) in cols.iter().enumerate() {
                let entry = a.get(rows[0], col);
                if entry == 0.0 {
                    continue;
                }
                rest.clear();
                rest.extend(cols.iter().enumerate().filter(|&(k, _)| k != c).map(|(_, &x)| x));
                let sign = if c % 2 == 0 { 1.0 } else { -1.0 };
                sum += sign * entry * determinant(a, &rows[1..], &rest);
            }
            sum
        }
    }
}

fn modulus(z: Complex64) -> f64 {
    libm::hypot(z.re, z.im)
}

fn eval_with_derivative(coeffs: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &c in coeffs {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// All complex roots of a monic real polynomial (highest degree first).
pub fn polynomial_roots(coeffs: &[f64]) -> Vec<Complex64> {
    let deg = coeffs.len().saturating_sub(1);
    if deg == 0 {
        return Vec::new();
    }
    let lead = coeffs[0];
    let monic: Vec<f64> = coeffs.iter().map(|c| c / lead).collect();
    // Cauchy bound on root moduli.
    let radius = 1.0 + monic[1..].iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let mut z: Vec<Complex64> = (0..deg)
        .map(|k| {
            let theta = 2.0 * core::f64::consts::PI * (k as f64 + 0.25) / deg as f64;
            Complex64::new(radius * libm::cos(theta), radius * libm::sin(theta))
        })
        .collect();
    for _ in 0..2000 {
        let mut moved = 0.0f64;
        for i in 0..deg {
            let (p, dp) = eval_with_derivative(&monic, z[i]);
            if p == Complex64::new(0.0, 0.0) {
                continue;
            }
            let ratio = p / dp;
            let mut repulsion = Complex64::new(0.0, 0.0);
            for (j, zj) in z.iter().enumerate() {
                if j != i {
                    let d = z[i] - zj;
                    if d != Complex64::new(0.0, 0.0) {
                        repulsion += Complex64::new(1.0, 0.0) / d;
                    }
                }
            }
            let denom = Complex64::new(1.0, 0.0) - ratio * repulsion;
            let step = if denom == Complex64::new(0.0, 0.0) { ratio } else { ratio / denom };
            if !(step.re.is_finite() && step.im.is_finite()) {
                continue;
            }
            z[i] -= step;
            moved = moved.max(modulus(step) / (1.0 + modulus(z[i])));
        }
        if moved < 1e-15 {
            break;
        }
    }
    z
}
