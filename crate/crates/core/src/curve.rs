//! Core curves `γ_{y,ω}(t) = Ψ(ω; t; y)`, defined implicitly by
//! `∂_y φ(Ψ(ω; t; y), t; y) = ω`.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::linalg;
use crate::phase::PhaseSpec;
use crate::taylor::Taylor;

pub const DEFAULT_TOL: f64 = 1e-10;
const MAX_ITER: usize = 50;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurvePoint {
    pub x: Vec<f64>,
    pub t: f64,
    pub residual: f64,
}

fn residual(phase: &PhaseSpec, omega: &[f64], x: &[f64], t: f64, y: &[f64]) -> Result<f64> {
    let g = phase.grad_y(x, t, y)?;
    Ok(linalg::dist(&g, omega))
}

/// Solves for `Ψ(ω; t; y)`. Translation-invariant phases use the explicit
/// formula `ω − ∂_y ψ(t; y)`; all others use damped Newton from `x = ω`.
pub fn solve_psi(phase: &PhaseSpec, omega: &[f64], t: f64, y: &[f64], tol: f64) -> Result<CurvePoint> {
    if !(tol > 0.0) {
        return Err(invalid("tolerance must be positive"));
    }
    if omega.len() != phase.m() {
        return Err(Error::Domain(format!("omega must have length {}", phase.m())));
    }
    if let Some(g) = phase.grad_psi(t, y)? {
        let x: Vec<f64> = omega.iter().zip(&g).map(|(w, d)| w - d).collect();
        let r = residual(phase, omega, &x, t, y)?;
        return Ok(CurvePoint { x, t, residual: r });
    }
    newton_psi(phase, omega, t, y, tol)
}

/// Newton iteration on `x ↦ ∂_y φ(x, t; y) − ω`, halving the step whenever the
/// residual fails to decrease.
pub fn newton_psi(phase: &PhaseSpec, omega: &[f64], t: f64, y: &[f64], tol: f64) -> Result<CurvePoint> {
    let m = phase.m();
    let mut x = omega.to_vec();
    let mut g = phase.grad_y(&x, t, y)?;
    let mut r = linalg::dist(&g, omega);
    for _ in 0..MAX_ITER {
        if r <= tol {
            return Ok(CurvePoint { x, t, residual: r });
        }
        let h = phase.hess_xy(&x, t, y)?;
        let jac: Vec<Vec<f64>> = (0..m).map(|j| (0..m).map(|i| h[i][j]).collect()).collect();
        let d = linalg::det(&jac);
        if d.abs() < 1e-12 {
            return Err(Error::SingularJacobian(d.abs()));
        }
        let f: Vec<f64> = g.iter().zip(omega).map(|(a, b)| a - b).collect();
        let step = linalg::solve(&jac, &f).ok_or(Error::SingularJacobian(d.abs()))?;
        let mut lambda = 1.0;
        loop {
            let cand: Vec<f64> = x.iter().zip(&step).map(|(a, s)| a - lambda * s).collect();
            let gc = phase.grad_y(&cand, t, y);
            if let Ok(gc) = gc {
                let rc = linalg::dist(&gc, omega);
                if rc < r || lambda < 1e-3 {
                    x = cand;
                    g = gc;
                    r = rc;
                    break;
                }
            } else if lambda < 1e-3 {
                return Err(Error::NoConvergence { iterations: MAX_ITER, residual: r });
            }
            lambda *= 0.5;
        }
    }
    if r <= tol {
        Ok(CurvePoint { x, t, residual: r })
    } else {
        Err(Error::NoConvergence { iterations: MAX_ITER, residual: r })
    }
}

/// The point `(γ_{y,ω}(t), t) ∈ R^n`.
pub fn curve_point(phase: &PhaseSpec, y: &[f64], omega: &[f64], t: f64) -> Result<Vec<f64>> {
    let mut p = solve_psi(phase, omega, t, y, DEFAULT_TOL)?.x;
    p.push(t);
    Ok(p)
}

/// Whether `point = (x, t)` lies in the open δ-tube about `Γ_{y,ω}`.
pub fn tube_membership(phase: &PhaseSpec, y: &[f64], omega: &[f64], delta: f64, point: &[f64]) -> Result<bool> {
    let m = phase.m();
    if point.len() != m + 1 {
        return Err(Error::Domain(format!("point must have length {}", m + 1)));
    }
    let t = point[m];
    let (a, b) = phase.t_interval();
    if t < a || t > b {
        return Err(invalid(format!("t = {t} outside I_phi = [{a}, {b}]")));
    }
    let c = solve_psi(phase, omega, t, y, DEFAULT_TOL)?;
    Ok(linalg::dist(&point[..m], &c.x) < delta)
}

/// Power series of `t ↦ Ψ(ω; t; y)` about `t = s` with `len` coefficients.
pub fn curve_taylor(phase: &PhaseSpec, omega: &[f64], s: f64, y: &[f64], len: usize) -> Result<Vec<Taylor>> {
    let tv = Taylor::variable(s, len);
    if let Some(g) = phase.grad_psi_taylor(tv, y) {
        phase.grad_psi(s, y)?;
        return Ok(omega.iter().zip(g).map(|(&w, gi)| (-gi).add_scalar(w)).collect());
    }
    let m = phase.m();
    let base = newton_psi(phase, omega, s, y, 1e-13)?;
    let h = phase.hess_xy(&base.x, s, y)?;
    let jac: Vec<Vec<f64>> = (0..m).map(|j| (0..m).map(|i| h[i][j]).collect()).collect();
    let mut x: Vec<Taylor> = base.x.iter().map(|&v| Taylor::constant(v, len)).collect();
    // Chord iteration with the Jacobian frozen at s gains one order per sweep.
    for _ in 0..len + 1 {
        let g = phase.grad_y_taylor(&x, tv, y);
        let f: Vec<Taylor> = g.into_iter().zip(omega).map(|(gi, &w)| gi.add_scalar(-w)).collect();
        let mut coeff_steps = vec![vec![0.0; len]; m];
        for k in 0..len {
            let rhs: Vec<f64> = f.iter().map(|fi| fi.coeff(k)).collect();
            let sol = linalg::solve(&jac, &rhs).ok_or(Error::SingularJacobian(0.0))?;
            for i in 0..m {
                coeff_steps[i][k] = sol[i];
            }
        }
        for i in 0..m {
            x[i] -= Taylor::from_coeffs(&coeff_steps[i]);
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::MultiPoly;
    use approx::assert_relative_eq;

    #[test]
    fn explicit_curves_of_builtins() {
        let cc = PhaseSpec::const_coeff(3);
        let p = solve_psi(&cc, &[0.1, 0.0], 0.2, &[0.5, 0.0], 1e-10).unwrap();
        assert_relative_eq!(p.x[0], -0.1, epsilon = 1e-15);
        assert_eq!(curve_point(&cc, &[1.0, 0.0], &[0.0, 0.0], 0.1).unwrap(), vec![-0.2, 0.0, 0.1]);
        let bs = PhaseSpec::bourgain_star(3).unwrap();
        let p = curve_point(&bs, &[0.0, 1.0], &[0.0, 0.0], 0.5).unwrap();
        assert_relative_eq!(p[0], -0.5);
        assert_relative_eq!(p[1], -0.25);
        let ce = PhaseSpec::counterexample();
        let p = solve_psi(&ce, &[1.0, 0.0], 0.2, &[0.6, 0.6], 1e-10).unwrap();
        assert_relative_eq!(p.x[0], 0.88, epsilon = 1e-15);
        assert_relative_eq!(p.x[1], 0.88f64.ln(), epsilon = 1e-15);
    }

    #[test]
    fn membership_examples() {
        let cc = PhaseSpec::const_coeff(3);
        assert!(!tube_membership(&cc, &[1.0, 0.0], &[0.0, 0.0], 0.01, &[-0.18, 0.0, 0.1]).unwrap());
        assert!(tube_membership(&cc, &[1.0, 0.0], &[0.0, 0.0], 1e-9, &[-0.2, 0.0, 0.1]).unwrap());
        assert!(tube_membership(&cc, &[1.0, 0.0], &[0.0, 0.0], 0.1, &[0.0, 0.0, 0.9]).is_err());
    }

    fn nonlinear_custom() -> PhaseSpec {
        // φ = x·y + 0.1 x₁² y₁ + t |y|² + 0.2 t x₂ y₂²
        let v = 5;
        let phi = MultiPoly::new(
            v,
            vec![
                (vec![1, 0, 0, 1, 0], 1.0),
                (vec![0, 1, 0, 0, 1], 1.0),
                (vec![2, 0, 0, 1, 0], 0.1),
                (vec![0, 0, 1, 2, 0], 1.0),
                (vec![0, 0, 1, 0, 2], 1.0),
                (vec![0, 1, 1, 0, 2], 0.2),
            ],
        )
        .unwrap();
        PhaseSpec::custom(3, phi).unwrap()
    }

    #[test]
    fn newton_matches_closed_form_and_jets() {
        let cc = PhaseSpec::const_coeff(3);
        let a = newton_psi(&cc, &[0.2, -0.1], 0.3, &[0.4, 0.2], 1e-12).unwrap();
        let b = solve_psi(&cc, &[0.2, -0.1], 0.3, &[0.4, 0.2], 1e-12).unwrap();
        assert!(linalg::dist(&a.x, &b.x) < 1e-10);

        let ph = nonlinear_custom();
        let (omega, y, s) = ([0.1, 0.2], [0.3, -0.2], 0.1);
        let jet = curve_taylor(&ph, &omega, s, &y, 6).unwrap();
        for &h in &[0.02, -0.03] {
            let exact = solve_psi(&ph, &omega, s + h, &y, 1e-14).unwrap();
            for i in 0..2 {
                assert!((jet[i].eval_offset(h) - exact.x[i]).abs() < 1e-9);
            }
        }
    }
}
