//! The compressed three-dimensional phase
//! `φ(x,t;y) = ⟨x,y⟩ + t·y₁²/2 + ψ₂(t;y₂)` with
//! `ψ₂ = [(1 − ty₂)·log(1 − ty₂) + ty₂] / t`.

use crate::error::{Error, Result};
use crate::taylor::Taylor;

/// Below these thresholds ψ₂ is summed from its power series instead of the
/// closed form, which loses digits to cancellation (and is 0/0 at t = 0).
const SERIES_T: f64 = 1e-4;
const SERIES_Z: f64 = 1e-2;

pub(crate) fn check(t: f64, y: &[f64]) -> Result<()> {
    let gap = 1.0 - t * y[1];
    if gap > 0.0 {
        Ok(())
    } else {
        Err(Error::Singularity(format!("1 - t*y2 = {gap} <= 0 at t = {t}, y2 = {}", y[1])))
    }
}

/// ψ₂(t; y₂) = Σ_{j≥2} t^{j-1} y₂^j / (j(j-1)), truncated after `terms` terms.
pub fn psi2_series(t: f64, y2: f64, terms: usize) -> f64 {
    let z = t * y2;
    let mut zp = y2 * z; // y2 * z^{j-1} at j = 2
    let mut sum = 0.0;
    for j in 2..terms + 2 {
        let jf = j as f64;
        sum += zp / (jf * (jf - 1.0));
        zp *= z;
    }
    sum
}

pub fn psi2(t: f64, y2: f64) -> f64 {
    let z = t * y2;
    if t.abs() < SERIES_T || z.abs() < SERIES_Z {
        psi2_series(t, y2, 40)
    } else {
        ((1.0 - z) * (-z).ln_1p() + z) / t
    }
}

pub(crate) fn value(x: &[f64], t: f64, y: &[f64]) -> f64 {
    x[0] * y[0] + x[1] * y[1] + 0.5 * t * y[0] * y[0] + psi2(t, y[1])
}

/// `∂_y ψ(t; y)`.
pub(crate) fn grad_psi(t: f64, y: &[f64]) -> [f64; 2] {
    [t * y[0], -(-t * y[1]).ln_1p()]
}

pub(crate) fn grad_psi_taylor(t: Taylor, y: &[f64]) -> Vec<Taylor> {
    let one_minus = (t * -y[1]).add_scalar(1.0);
    vec![t * y[0], -one_minus.ln()]
}

pub(crate) fn hess_yy(t: f64, y: &[f64]) -> Vec<Vec<f64>> {
    vec![vec![t, 0.0], vec![0.0, t / (1.0 - t * y[1])]]
}

pub(crate) fn hess_yy_taylor(t: Taylor, y: &[f64]) -> Vec<Vec<Taylor>> {
    let zero = Taylor::constant(0.0, t.len());
    let one_minus = (t * -y[1]).add_scalar(1.0);
    vec![vec![t, zero], vec![zero, t / one_minus]]
}

/// `∂_t ∂_y φ`.
pub(crate) fn mixed_ty(t: f64, y: &[f64]) -> Vec<f64> {
    vec![y[0], y[1] / (1.0 - t * y[1])]
}

/// `∂²_yy ∂_t φ`.
pub(crate) fn hess_yy_dt(t: f64, y: &[f64]) -> Vec<Vec<f64>> {
    let g = 1.0 - t * y[1];
    vec![vec![1.0, 0.0], vec![0.0, 1.0 / (g * g)]]
}
