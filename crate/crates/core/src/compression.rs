//! The compressed counterexample family: centres `ω(y) = (y₁/y₂, log(y₁/y₂))`
//! send every core curve into the surface `M = {(u, log u, t)}`, and the
//! single-scale fan witness for the Bourgain phase.

use serde::Serialize;

use crate::curve::{curve_point, solve_psi};
use crate::error::{Error, Result};
use crate::exec;
use crate::fit::{fit_scaling, ScalingFit};
use crate::grid::{BoxN, Field, GridField};
use crate::maximal::{maximal, MaximalConfig, Operator, Region, Search, SeedRule};
use crate::phase::{PhaseKind, PhaseSpec};
use crate::sampling;

/// `Y_∘ = {y₁, y₂ ≥ 1/2, |y| ≤ 9/10}`.
pub fn in_compact_region(y: &[f64]) -> bool {
    y.len() == 2 && y[0] >= 0.5 && y[1] >= 0.5 && y[0] * y[0] + y[1] * y[1] <= 0.81
}

pub fn counterexample_omega(y: &[f64]) -> Result<[f64; 2]> {
    if !in_compact_region(y) {
        return Err(Error::Domain(format!("y = {y:?} lies outside Y_0")));
    }
    let r = y[0] / y[1];
    Ok([r, r.ln()])
}

/// Box `x₁ ∈ [0.2, 2]`, `x₂ ∈ [−1.5, 0.8]`, `t ∈ [−½, ½]`, which contains every
/// δ-tube of the compressed family for δ ≤ 1/16.
pub fn counterexample_box() -> BoxN {
    BoxN::new(vec![0.2, -1.5, -0.5], vec![2.0, 0.8, 0.5]).expect("static box")
}

const U_MIN: f64 = 0.01;
const U_MAX: f64 = 4.0;

fn newton_foot(a: f64, b: f64, mut u: f64) -> f64 {
    for _ in 0..40 {
        let l = u.ln();
        let g = (u - a) + (l - b) / u;
        let dg = 1.0 + (1.0 - l + b) / (u * u);
        let step = if dg > 0.0 { g / dg } else { g.signum() * 0.1 * u };
        let next = (u - step).clamp(U_MIN, U_MAX);
        if (next - u).abs() <= 1e-15 * u {
            return next;
        }
        u = next;
    }
    u
}

/// Euclidean distance in the `x`-plane to the curve `{(u, log u) : 1/100 ≤ u ≤ 4}`.
pub fn distance_to_curve(a: f64, b: f64) -> f64 {
    let d = |u: f64| ((u - a).powi(2) + (u.ln() - b).powi(2)).sqrt();
    let s1 = newton_foot(a, b, a.clamp(U_MIN, U_MAX));
    let s2 = newton_foot(a, b, b.exp().clamp(U_MIN, U_MAX));
    d(s1).min(d(s2)).min(d(U_MIN)).min(d(U_MAX))
}

/// Indicator of `N_δ M` inside [`counterexample_box`]. Because `M` is a
/// vertical cylinder the distance to it ignores `t`.
#[derive(Clone, Debug)]
pub struct SurfaceNeighborhood {
    pub delta: f64,
    pub bbox: BoxN,
}

impl SurfaceNeighborhood {
    pub fn new(delta: f64) -> Self {
        SurfaceNeighborhood { delta, bbox: counterexample_box() }
    }

    /// `|N_δ M ∩ box|`: the planar area, integrated column by column with
    /// the exact vertical extent of each column, times the `t`-length.
    pub fn measure(&self) -> f64 {
        let (a0, a1) = (self.bbox.lo[0], self.bbox.hi[0]);
        let (b0, b1) = (self.bbox.lo[1], self.bbox.hi[1]);
        let hc = self.delta / 32.0;
        let cols = ((a1 - a0) / hc).ceil() as usize;
        let hc = (a1 - a0) / cols as f64;
        let delta = self.delta;
        let lens = exec::map_indexed(cols, |i| {
            let a = a0 + (i as f64 + 0.5) * hc;
            let mid = a.clamp(U_MIN, U_MAX).ln();
            if distance_to_curve(a, mid) >= delta {
                return 0.0;
            }
            let reach = 2.0 * delta * (1.0 + 1.0 / (a * a)).sqrt() + delta;
            let edge = |dir: f64| {
                let mut out = reach;
                while distance_to_curve(a, mid + dir * out) < delta {
                    out *= 2.0;
                }
                crate::poly::bisect(|s| distance_to_curve(a, mid + dir * s) - delta, 0.0, out, -delta)
            };
            let hi = (mid + edge(1.0)).min(b1);
            let lo = (mid - edge(-1.0)).max(b0);
            (hi - lo).max(0.0)
        });
        lens.iter().sum::<f64>() * hc * (self.bbox.hi[2] - self.bbox.lo[2])
    }
}

impl Field for SurfaceNeighborhood {
    fn dim(&self) -> usize {
        3
    }
    fn value(&self, p: &[f64]) -> f64 {
        if self.bbox.contains(p) && distance_to_curve(p[0], p[1]) < self.delta {
            1.0
        } else {
            0.0
        }
    }
    fn lp_norm(&self, p: f64) -> Option<f64> {
        Some(if p.is_infinite() { 1.0 } else { self.measure().powf(1.0 / p) })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContainmentReport {
    pub samples: usize,
    pub max_surface_deviation: f64,
    pub max_closed_form_deviation: f64,
}

/// Samples `(t, y) ∈ (−ρ, ρ) × Y_∘`, solves for the curve point with centre
/// `ω(y)` and measures `|x₂ − log x₁|` and the gap to the explicit solution.
pub fn verify_surface_containment(samples: usize, seed: u64) -> Result<ContainmentReport> {
    use rand::Rng;
    let phase = PhaseSpec::counterexample();
    let rho = phase.rho();
    let mut rng = sampling::rng(seed);
    let mut pts = Vec::with_capacity(samples);
    while pts.len() < samples {
        let y = [rng.random_range(0.5..0.9), rng.random_range(0.5..0.9)];
        let t: f64 = rng.random_range(-rho..rho);
        if in_compact_region(&y) {
            pts.push((t, y));
        }
    }
    let devs = exec::try_map_slice(&pts, |(t, y)| -> Result<(f64, f64)> {
        let omega = counterexample_omega(y)?;
        let x = solve_psi(&phase, &omega, *t, y, 1e-12)?.x;
        let surface = (x[1] - x[0].ln()).abs();
        let x1 = y[0] / y[1] - t * y[0];
        let closed = (x[0] - x1).abs().max((x[1] - x1.ln()).abs());
        Ok((surface, closed))
    })?;
    Ok(ContainmentReport {
        samples,
        max_surface_deviation: devs.iter().map(|d| d.0).fold(0.0, f64::max),
        max_closed_form_deviation: devs.iter().map(|d| d.1).fold(0.0, f64::max),
    })
}

/// Largest distance to `M` among the cells of a multiplicity field that
/// carry at least one tube.
pub fn support_distance_to_surface(field: &GridField<u32>) -> f64 {
    let idx: Vec<usize> = field.values.iter().enumerate().filter(|(_, v)| **v > 0).map(|(i, _)| i).collect();
    exec::map_slice(&idx, |&i| {
        let c = field.center_of(i);
        distance_to_curve(c[0], c[1])
    })
    .into_iter()
    .fold(0.0, f64::max)
}

/// Measures `|N_δ M ∩ box|` along a δ-ladder and fits the exponent.
pub fn compression_volume_scan(deltas: &[f64]) -> Result<ScalingFit> {
    let pairs: Vec<(f64, f64)> = deltas.iter().map(|&d| (d, SurfaceNeighborhood::new(d).measure())).collect();
    fit_scaling(&pairs)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LowerBoundRow {
    pub delta: f64,
    pub p: f64,
    pub s: f64,
    pub maximal_norm: f64,
    pub field_norm: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LowerBoundLadder {
    pub p: f64,
    pub rows: Vec<LowerBoundRow>,
    pub fit: ScalingFit,
}

/// Maximal-function settings for the compressed family: directions on a
/// cell-centred lattice of `Y_∘` with spacing `min(δ, 2⁻⁷)` and centres
/// searched in a window of half-width δ around `ω(y)`.
pub fn compressed_config(delta: f64) -> MaximalConfig {
    MaximalConfig {
        outer_spacing: delta.min(1.0 / 128.0),
        region: Region::CounterexampleCompact,
        search: Search::Local { seed: SeedRule::CounterexampleOmega, window: delta, spacing: delta / 2.0 },
        t_samples: crate::tubes::DEFAULT_T_SAMPLES,
        section_samples: crate::tubes::DEFAULT_SECTION_SAMPLES,
    }
}

/// `‖K^δ χ_{N_δ M}‖_{L^s(Y_∘)} / ‖χ_{N_δ M}‖_{L^p}` across the ladder, one fit per `p`.
pub fn compression_lower_bound(deltas: &[f64], ps: &[f64], s: f64) -> Result<Vec<LowerBoundLadder>> {
    let phase = PhaseSpec::counterexample();
    let mut per_delta = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let g = SurfaceNeighborhood::new(delta);
        let k = maximal(Operator::Kakeya, &phase, delta, &g, &compressed_config(delta))?;
        per_delta.push((delta, k.ls_norm(s), g.measure()));
    }
    ps.iter()
        .map(|&p| {
            let rows: Vec<LowerBoundRow> = per_delta
                .iter()
                .map(|&(delta, num, meas)| {
                    let den = if p.is_infinite() { 1.0 } else { meas.powf(1.0 / p) };
                    LowerBoundRow { delta, p, s, maximal_norm: num, field_norm: den, ratio: num / den }
                })
                .collect();
            let fit = fit_scaling(&rows.iter().map(|r| (r.delta, r.ratio)).collect::<Vec<_>>())?;
            Ok(LowerBoundLadder { p, rows, fit })
        })
        .collect()
}

/// A smooth map `y ↦ ω(y)` on `R²`.
pub type OmegaMap<'a> = &'a (dyn Fn(&[f64; 2]) -> [f64; 2] + Sync);

/// Central difference with one Richardson step: `(4 D(h/2) − D(h)) / 3`.
pub fn richardson(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    let d = |h: f64| (f(x + h) - f(x - h)) / (2.0 * h);
    (4.0 * d(h / 2.0) - d(h)) / 3.0
}

pub const FD_STEP: f64 = 1e-5;

/// `[[∂₁ω₁, ∂₂ω₁], [∂₁ω₂, ∂₂ω₂]]` by Richardson-extrapolated differences.
pub fn omega_jacobian(omega: OmegaMap, y: &[f64; 2]) -> [[f64; 2]; 2] {
    let mut j = [[0.0; 2]; 2];
    for (i, row) in j.iter_mut().enumerate() {
        for (k, entry) in row.iter_mut().enumerate() {
            *entry = richardson(
                |s| {
                    let mut yy = *y;
                    yy[k] = s;
                    omega(&yy)[i]
                },
                y[k],
                FD_STEP,
            );
        }
    }
    j
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuadraticCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

/// Coefficients of `JΦ(y,t)·(1 − t y₂) = A t² + B t + C` for the curve map
/// `Φ(y,t) = (ω(y) − ∂_y ψ(t;y), t)` of the counterexample phase.
pub fn jacobian_coefficients(omega: OmegaMap, y: &[f64; 2]) -> QuadraticCoefficients {
    let j = omega_jacobian(omega, y);
    let jw = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    QuadraticCoefficients {
        a: 1.0 + y[1] * j[1][1],
        b: -(j[0][0] + j[1][1] + y[1] * jw),
        c: jw,
    }
}

/// `Φ(y, t)` for the counterexample phase.
pub fn curve_map(omega: OmegaMap, y: &[f64; 2], t: f64) -> [f64; 3] {
    let w = omega(y);
    [w[0] - t * y[0], w[1] + (-t * y[1]).ln_1p(), t]
}

/// `det DΦ(y, t)` by Richardson-extrapolated differences of [`curve_map`].
pub fn curve_map_jacobian(omega: OmegaMap, y: &[f64; 2], t: f64) -> f64 {
    let mut cols = [[0.0; 3]; 3];
    for (k, col) in cols.iter_mut().enumerate() {
        for (i, entry) in col.iter_mut().enumerate() {
            *entry = richardson(
                |s| {
                    let mut yy = *y;
                    let mut tt = t;
                    if k < 2 {
                        yy[k] = s;
                    } else {
                        tt = s;
                    }
                    curve_map(omega, &yy, tt)[i]
                },
                if k < 2 { y[k] } else { t },
                FD_STEP,
            );
        }
    }
    let rows: Vec<Vec<f64>> = (0..3).map(|i| (0..3).map(|k| cols[k][i]).collect()).collect();
    crate::linalg::det(&rows)
}

/// `|JΦ(y,t)·(1 − t y₂) − (A t² + B t + C)|`.
pub fn companion_residual(omega: OmegaMap, y: &[f64; 2], t: f64) -> f64 {
    let q = jacobian_coefficients(omega, y);
    let lhs = curve_map_jacobian(omega, y, t) * (1.0 - t * y[1]);
    (lhs - (q.a * t * t + q.b * t + q.c)).abs()
}

pub fn counterexample_omega_map(y: &[f64; 2]) -> [f64; 2] {
    let r = y[0] / y[1];
    [r, r.ln()]
}

/// A seeded random quadratic map `R² → R²` with coefficients in `[−½, ½]`.
pub fn random_polynomial_map(seed: u64) -> impl Fn(&[f64; 2]) -> [f64; 2] + Sync {
    use rand::Rng;
    let mut rng = sampling::rng(seed);
    let c: Vec<f64> = (0..12).map(|_| rng.random_range(-0.5..0.5)).collect();
    move |y: &[f64; 2]| {
        let m = [1.0, y[0], y[1], y[0] * y[0], y[0] * y[1], y[1] * y[1]];
        let a: f64 = m.iter().zip(&c[..6]).map(|(u, v)| u * v).sum();
        let b: f64 = m.iter().zip(&c[6..]).map(|(u, v)| u * v).sum();
        [a, b]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JacobianReport {
    pub samples: usize,
    pub max_abs_a: f64,
    pub max_abs_b: f64,
    pub max_abs_c: f64,
    pub max_companion_residual: f64,
}

/// Evaluates the coefficients and the companion identity on random
/// `(y, t) ∈ Y_∘ × (−ρ, ρ)`.
pub fn jacobian_scan(omega: OmegaMap, samples: usize, seed: u64) -> JacobianReport {
    use rand::Rng;
    let mut rng = sampling::rng(seed);
    let mut pts = Vec::with_capacity(samples);
    while pts.len() < samples {
        let y = [rng.random_range(0.5..0.9), rng.random_range(0.5..0.9)];
        let t: f64 = rng.random_range(-0.5..0.5);
        if in_compact_region(&y) {
            pts.push((y, t));
        }
    }
    let rows = exec::map_slice(&pts, |(y, t)| {
        let q = jacobian_coefficients(omega, y);
        (q.a.abs(), q.b.abs(), q.c.abs(), companion_residual(omega, y, *t))
    });
    let mx = |f: fn(&(f64, f64, f64, f64)) -> f64| rows.iter().map(f).fold(0.0, f64::max);
    JacobianReport {
        samples,
        max_abs_a: mx(|r| r.0),
        max_abs_b: mx(|r| r.1),
        max_abs_c: mx(|r| r.2),
        max_companion_residual: mx(|r| r.3),
    }
}

/// `|x₂ − t x₁ − (ω₂ − t ω₁ − t y₁)|` along the curve of the Bourgain phase
/// with direction `y` and centre `ω`, maximized over the given times.
pub fn fan_deviation(phase: &PhaseSpec, y: &[f64], omega: &[f64], fan_y1: f64, ts: &[f64]) -> Result<f64> {
    let c = omega[1];
    let mut worst: f64 = 0.0;
    for &t in ts {
        let p = curve_point(phase, y, omega, t)?;
        worst = worst.max((p[1] - t * p[0] - (c - t * fan_y1)).abs());
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FanReport {
    pub tubes: usize,
    pub samples_per_tube: usize,
    pub max_deviation: f64,
}

/// Tubes of the Bourgain phase with directions `(ȳ₁, y₂)`, `y₂` on the
/// δ-lattice, and centre `(0, c)` all lie in the plane-like surface
/// `x₂ − t x₁ = c − t ȳ₁`.
pub fn star_fan_witness(fan_y1: f64, c: f64, delta: f64, samples: usize) -> Result<FanReport> {
    let phase = PhaseSpec::bourgain_star(3)?;
    if phase.kind() != PhaseKind::BourgainStar {
        unreachable!();
    }
    let rho = phase.rho();
    let reach = (rho * rho - fan_y1 * fan_y1).max(0.0).sqrt();
    let k = (reach / delta).floor() as i64;
    let ys: Vec<Vec<f64>> = (-k..=k).map(|j| vec![fan_y1, j as f64 * delta]).collect();
    let ts = sampling::linspace(-rho, rho, samples.max(2));
    let devs = exec::try_map_slice(&ys, |y| fan_deviation(&phase, y, &[0.0, c], fan_y1, &ts))?;
    Ok(FanReport {
        tubes: ys.len(),
        samples_per_tube: ts.len(),
        max_deviation: devs.into_iter().fold(0.0, f64::max),
    })
}
