//! Discrete Kakeya and Nikodym maximal operators.
//!
//! `K^δ g(y)` is the largest tube average of `|g|` over the candidate centres
//! `ω` searched for the direction `y`; `N^δ g(ω)` swaps the roles. Because
//! the search is over a finite candidate set, every value returned here is a
//! lower bound for the continuum supremum.

use serde::{Deserialize, Serialize};

use crate::compression::{counterexample_omega, in_compact_region, SurfaceNeighborhood};
use crate::curve::solve_psi;
use crate::error::{invalid, Result};
use crate::exec;
use crate::grid::{BoxN, ConstantField, Field, GridField};
use crate::linalg;
use crate::phase::PhaseSpec;
use crate::sampling;
use crate::tubes::{tube_volume, DirectionCurves, TubeSampler, DEFAULT_SECTION_SAMPLES, DEFAULT_T_SAMPLES};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Operator {
    Kakeya,
    Nikodym,
}

/// Where the outer variable (y for Kakeya, ω for Nikodym) is sampled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    /// `B(0, ρ)`.
    Ball,
    /// `Y_∘ = {y₁, y₂ ≥ 1/2, |y| ≤ 9/10}`.
    CounterexampleCompact,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SeedRule {
    CounterexampleOmega,
    Fixed(Vec<f64>),
}

/// Candidate set for the inner supremum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Search {
    /// The lattice `spacing·Z^{n−1}` inside `B(0, ρ)`.
    Lattice { spacing: f64 },
    /// A seed point plus a cubic window of half-width `window` sampled at `spacing`.
    Local { seed: SeedRule, window: f64, spacing: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaximalConfig {
    pub outer_spacing: f64,
    pub region: Region,
    pub search: Search,
    pub t_samples: usize,
    pub section_samples: usize,
}

impl MaximalConfig {
    /// Outer lattice at spacing `δ`, inner lattice search at spacing `δ/2`.
    pub fn standard(delta: f64) -> Self {
        MaximalConfig {
            outer_spacing: delta,
            region: Region::Ball,
            search: Search::Lattice { spacing: delta / 2.0 },
            t_samples: DEFAULT_T_SAMPLES,
            section_samples: DEFAULT_SECTION_SAMPLES,
        }
    }
}

/// Cell-centred lattice on the outer region.
pub fn outer_lattice(phase: &PhaseSpec, region: Region, spacing: f64) -> Vec<Vec<f64>> {
    let m = phase.m();
    match region {
        Region::Ball => {
            let r = phase.rho();
            sampling::lattice_in_box(&vec![-r; m], &vec![r; m], spacing, |p| linalg::norm(p) <= r)
        }
        Region::CounterexampleCompact => sampling::lattice_in_box(&[0.5, 0.5], &[0.9, 0.9], spacing, in_compact_region),
    }
}

fn candidates(phase: &PhaseSpec, search: &Search, outer: &[f64]) -> Result<Vec<Vec<f64>>> {
    match search {
        Search::Lattice { spacing } => Ok(sampling::lattice_in_ball(phase.m(), phase.rho(), *spacing)),
        Search::Local { seed, window, spacing } => {
            let centre = match seed {
                SeedRule::CounterexampleOmega => counterexample_omega(outer)?.to_vec(),
                SeedRule::Fixed(v) => v.clone(),
            };
            let k = (window / spacing).floor() as i64;
            let m = phase.m();
            let side = (2 * k + 1) as usize;
            let mut out = Vec::with_capacity(side.pow(m as u32));
            for flat in 0..side.pow(m as u32) {
                let mut rem = flat;
                let mut p = centre.clone();
                for v in p.iter_mut().rev() {
                    *v += ((rem % side) as i64 - k) as f64 * spacing;
                    rem /= side;
                }
                out.push(p);
            }
            Ok(out)
        }
    }
}

/// Values of a maximal function on an outer lattice.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MaximalField {
    pub points: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    /// The maximizing inner variable at each point.
    pub argmax: Vec<Vec<f64>>,
    /// Measure represented by each outer lattice point.
    pub cell: f64,
}

impl MaximalField {
    pub fn ls_norm(&self, s: f64) -> f64 {
        if s.is_infinite() {
            return self.values.iter().fold(0.0, |a, &v| a.max(v.abs()));
        }
        let sum: f64 = self.values.iter().map(|v| v.abs().powf(s)).sum();
        (self.cell * sum).powf(1.0 / s)
    }

    pub fn region_measure(&self) -> f64 {
        self.cell * self.points.len() as f64
    }
}

/// Tube averages of `g` over all candidates, keeping the best.
pub fn maximal(op: Operator, phase: &PhaseSpec, delta: f64, g: &dyn Field, cfg: &MaximalConfig) -> Result<MaximalField> {
    let points = outer_lattice(phase, cfg.region, cfg.outer_spacing);
    if points.is_empty() {
        return Err(invalid("outer lattice is empty"));
    }
    let cell = cfg.outer_spacing.powi(phase.m() as i32);
    maximal_at(op, phase, delta, g, points, cell, cfg)
}

/// Evaluates the maximal function at arbitrary outer points, each carrying measure `cell`.
pub fn maximal_at(
    op: Operator,
    phase: &PhaseSpec,
    delta: f64,
    g: &dyn Field,
    points: Vec<Vec<f64>>,
    cell: f64,
    cfg: &MaximalConfig,
) -> Result<MaximalField> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid("delta must lie in (0, 1)"));
    }
    if g.dim() != phase.n() {
        return Err(invalid("field dimension must equal n"));
    }
    let sampler = TubeSampler::new(phase, delta, cfg.t_samples, cfg.section_samples);
    let best = exec::try_map_slice(&points, |outer| -> Result<(f64, Vec<f64>)> {
        let cands = candidates(phase, &cfg.search, outer)?;
        let mut best = (f64::NEG_INFINITY, Vec::new());
        match op {
            Operator::Kakeya => {
                let curves = DirectionCurves::new(phase, outer, &sampler.ts)?;
                for omega in cands {
                    let v = sampler.average(&curves.centres(&omega)?, g);
                    if v > best.0 {
                        best = (v, omega);
                    }
                }
            }
            Operator::Nikodym => {
                for y in cands {
                    let curves = DirectionCurves::new(phase, &y, &sampler.ts)?;
                    let v = sampler.average(&curves.centres(outer)?, g);
                    if v > best.0 {
                        best = (v, y);
                    }
                }
            }
        }
        Ok(best)
    })?;
    let (values, argmax) = best.into_iter().unzip();
    Ok(MaximalField { points, values, argmax, cell })
}

pub fn kakeya_maximal(phase: &PhaseSpec, delta: f64, g: &dyn Field, cfg: &MaximalConfig) -> Result<MaximalField> {
    maximal(Operator::Kakeya, phase, delta, g, cfg)
}

pub fn nikodym_maximal(phase: &PhaseSpec, delta: f64, g: &dyn Field, cfg: &MaximalConfig) -> Result<MaximalField> {
    maximal(Operator::Nikodym, phase, delta, g, cfg)
}

/// Indicator of a single δ-tube, evaluated through the curve solver.
pub struct TubeIndicator {
    pub phase: PhaseSpec,
    pub y: Vec<f64>,
    pub omega: Vec<f64>,
    pub delta: f64,
}

impl Field for TubeIndicator {
    fn dim(&self) -> usize {
        self.phase.n()
    }
    fn value(&self, p: &[f64]) -> f64 {
        let m = self.phase.m();
        let (a, b) = self.phase.t_interval();
        let t = p[m];
        if t < a || t > b {
            return 0.0;
        }
        match solve_psi(&self.phase, &self.omega, t, &self.y, 1e-12) {
            Ok(c) if linalg::dist(&p[..m], &c.x) < self.delta => 1.0,
            _ => 0.0,
        }
    }
    fn lp_norm(&self, p: f64) -> Option<f64> {
        Some(if p.is_infinite() { 1.0 } else { tube_volume(&self.phase, self.delta).powf(1.0 / p) })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TestSuite {
    ConstantOne,
    NeighborhoodOfSurface,
    SingleTube,
    RandomFields(u64),
}

/// Box containing every tube with direction and centre in `B(0, ρ)`.
pub fn ambient_box(phase: &PhaseSpec) -> Result<BoxN> {
    let m = phase.m();
    let r = phase.rho();
    let ts = sampling::linspace(-r, r, 33);
    let ys = sampling::lattice_in_ball(m, r, r / 4.0);
    let mut reach = 0.0f64;
    for y in &ys {
        let curves = DirectionCurves::new(phase, y, &ts)?;
        for c in curves.centres(&vec![0.0; m])? {
            reach = reach.max(c.iter().fold(0.0f64, |a, v| a.max(v.abs())));
        }
    }
    let half = r + reach * 1.25 + 0.1;
    let mut lo = vec![-half; m];
    let mut hi = vec![half; m];
    lo.push(-r);
    hi.push(r);
    BoxN::new(lo, hi)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormLowerBound {
    pub ratio: f64,
    pub numerator: f64,
    pub denominator: f64,
    pub suite_member: String,
}

/// `max_g ‖M^δ g‖_{L^s} / ‖g‖_{L^p}` over the suite: a certified lower bound
/// for the norm of the discrete operator.
pub fn operator_norm_lower(
    op: Operator,
    phase: &PhaseSpec,
    delta: f64,
    p: f64,
    s: f64,
    suite: &TestSuite,
    cfg: &MaximalConfig,
) -> Result<NormLowerBound> {
    if !(p >= 1.0 && s >= 1.0) {
        return Err(invalid("exponents must be >= 1"));
    }
    let eval = |name: String, g: &dyn Field, cfg: &MaximalConfig| -> Result<NormLowerBound> {
        let denom = g.lp_norm(p).ok_or_else(|| invalid("field has no norm"))?;
        let num = maximal(op, phase, delta, g, cfg)?.ls_norm(s);
        Ok(NormLowerBound { ratio: num / denom, numerator: num, denominator: denom, suite_member: name })
    };
    match suite {
        TestSuite::ConstantOne => {
            let g = ConstantField { value: 1.0, support: ambient_box(phase)? };
            eval("constant_one".into(), &g, cfg)
        }
        TestSuite::NeighborhoodOfSurface => {
            if phase.kind() != crate::phase::PhaseKind::Counterexample {
                return Err(invalid("the surface-neighbourhood suite is defined for the counterexample phase"));
            }
            let g = SurfaceNeighborhood::new(delta);
            eval("surface_neighbourhood".into(), &g, cfg)
        }
        TestSuite::SingleTube => {
            let m = phase.m();
            let g = TubeIndicator { phase: phase.clone(), y: vec![0.0; m], omega: vec![0.0; m], delta };
            eval("single_tube".into(), &g, cfg)
        }
        TestSuite::RandomFields(seed) => {
            use rand::Rng;
            let bbox = ambient_box(phase)?;
            let mut best: Option<NormLowerBound> = None;
            for k in 0..3u64 {
                let mut g: GridField<f64> = GridField::zeros(bbox.clone(), delta)?;
                let mut rng = sampling::rng(seed.wrapping_add(k));
                for v in g.values.iter_mut() {
                    *v = rng.random::<f64>().powi(4);
                }
                let r = eval(format!("random_{k}"), &g, cfg)?;
                if best.as_ref().is_none_or(|b| r.ratio > b.ratio) {
                    best = Some(r);
                }
            }
            Ok(best.unwrap())
        }
    }
}
