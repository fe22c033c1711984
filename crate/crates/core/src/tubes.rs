//! Curved δ-tubes, separated tube families and multiplicity rasterization.

use serde::{Deserialize, Serialize};

use crate::compression::{counterexample_omega, in_compact_region};
use crate::curve::{solve_psi, DEFAULT_TOL};
use crate::error::{invalid, Error, Result};
use crate::exec;
use crate::grid::{BoxN, Field, GridField};
use crate::phase::PhaseSpec;
use crate::sampling;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tube {
    pub y: Vec<f64>,
    pub omega: Vec<f64>,
    pub delta: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Separation {
    Direction,
    Centre,
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CentreRule {
    FixedZero,
    CounterexampleOmega,
    RandomSeeded(u64),
}

#[derive(Clone, Debug)]
pub struct TubeFamily {
    pub phase: PhaseSpec,
    pub delta: f64,
    pub tubes: Vec<Tube>,
    pub separation: Separation,
}

/// Volume of the unit ball in `R^m`.
pub fn unit_ball_volume(m: usize) -> f64 {
    match m {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(m - 2) * 2.0 * std::f64::consts::PI / m as f64,
    }
}

/// Exact volume of a δ-tube: every t-slice is a ball of radius δ in `x`.
pub fn tube_volume(phase: &PhaseSpec, delta: f64) -> f64 {
    unit_ball_volume(phase.m()) * delta.powi(phase.m() as i32) * 2.0 * phase.rho()
}

/// Lattice of spacing `2δ` on the direction region: `Y_∘` for the
/// counterexample rule and `Y_φ = B(0, ρ)` otherwise.
fn direction_lattice(phase: &PhaseSpec, delta: f64, rule: CentreRule) -> Vec<Vec<f64>> {
    match rule {
        CentreRule::CounterexampleOmega => {
            sampling::lattice_in_box(&[0.5, 0.5], &[0.9, 0.9], 2.0 * delta, in_compact_region)
        }
        _ => sampling::lattice_in_ball(phase.m(), phase.rho(), 2.0 * delta),
    }
}

pub fn build_family(phase: &PhaseSpec, delta: f64, separation: Separation, rule: CentreRule) -> Result<TubeFamily> {
    if !(delta > 0.0 && delta <= 0.25) {
        return Err(invalid(format!("delta must lie in (0, 1/4], got {delta}")));
    }
    if rule == CentreRule::CounterexampleOmega && phase.m() != 2 {
        return Err(invalid("the counterexample centre rule needs n = 3"));
    }
    let m = phase.m();
    let mut rng = match rule {
        CentreRule::RandomSeeded(s) => Some(sampling::rng(s)),
        _ => None,
    };
    let mut free = |anchor: &[f64]| -> Vec<f64> {
        match (&mut rng, rule) {
            (Some(r), _) => sampling::random_ball(r, m, phase.rho()),
            (None, CentreRule::CounterexampleOmega) => counterexample_omega(anchor).expect("lattice lies in Y_0").to_vec(),
            _ => vec![0.0; m],
        }
    };
    let tubes: Vec<Tube> = match separation {
        Separation::Direction | Separation::None => direction_lattice(phase, delta, rule)
            .into_iter()
            .map(|y| {
                let omega = free(&y);
                Tube { y, omega, delta }
            })
            .collect(),
        Separation::Centre => {
            if rule == CentreRule::CounterexampleOmega {
                return Err(invalid("centre-separated families take their directions from FixedZero or RandomSeeded"));
            }
            sampling::lattice_in_ball(m, phase.rho(), 2.0 * delta)
                .into_iter()
                .map(|omega| {
                    let y = free(&omega);
                    Tube { y, omega, delta }
                })
                .collect()
        }
    };
    if tubes.is_empty() {
        return Err(Error::EmptyFamily(format!("no lattice point of spacing {} in the domain", 2.0 * delta)));
    }
    Ok(TubeFamily { phase: phase.clone(), delta, tubes, separation })
}

impl TubeFamily {
    pub fn len(&self) -> usize {
        self.tubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tubes.is_empty()
    }

    /// Checks the separation invariant; returns the smallest pairwise gap.
    pub fn min_gap(&self) -> f64 {
        let key = |t: &Tube| match self.separation {
            Separation::Centre => t.omega.clone(),
            _ => t.y.clone(),
        };
        let mut best = f64::INFINITY;
        for i in 0..self.tubes.len() {
            for j in 0..i {
                best = best.min(crate::linalg::dist(&key(&self.tubes[i]), &key(&self.tubes[j])));
            }
        }
        best
    }

    pub fn subfamily(&self, keep: impl Fn(&Tube) -> bool) -> TubeFamily {
        TubeFamily {
            phase: self.phase.clone(),
            delta: self.delta,
            tubes: self.tubes.iter().filter(|t| keep(t)).cloned().collect(),
            separation: self.separation,
        }
    }
}

/// Core-curve centres of one direction at a fixed list of times. For
/// translation-invariant phases `∂_y ψ(t; y)` is cached so that each new
/// centre costs only a subtraction.
pub struct DirectionCurves<'a> {
    phase: &'a PhaseSpec,
    y: Vec<f64>,
    ts: Vec<f64>,
    offsets: Option<Vec<Vec<f64>>>,
}

impl<'a> DirectionCurves<'a> {
    pub fn new(phase: &'a PhaseSpec, y: &[f64], ts: &[f64]) -> Result<Self> {
        let offsets = if phase.is_translation_invariant() {
            Some(ts.iter().map(|&t| phase.grad_psi(t, y).map(|g| g.unwrap())).collect::<Result<Vec<_>>>()?)
        } else {
            None
        };
        Ok(DirectionCurves { phase, y: y.to_vec(), ts: ts.to_vec(), offsets })
    }

    pub fn ts(&self) -> &[f64] {
        &self.ts
    }

    /// `γ_{y,ω}(t)` for every stored `t`.
    pub fn centres(&self, omega: &[f64]) -> Result<Vec<Vec<f64>>> {
        match &self.offsets {
            Some(off) => Ok(off.iter().map(|g| omega.iter().zip(g).map(|(w, d)| w - d).collect()).collect()),
            None => self
                .ts
                .iter()
                .map(|&t| solve_psi(self.phase, omega, t, &self.y, DEFAULT_TOL).map(|c| c.x))
                .collect(),
        }
    }
}

/// Sample layout for tube averages: midpoint times on `I_φ` and
/// cross-section offsets in the ball of radius δ.
#[derive(Clone, Debug)]
pub struct TubeSampler {
    pub ts: Vec<f64>,
    pub offsets: Vec<Vec<f64>>,
}

pub const DEFAULT_T_SAMPLES: usize = 64;
pub const DEFAULT_SECTION_SAMPLES: usize = 16;

impl TubeSampler {
    pub fn new(phase: &PhaseSpec, delta: f64, t_samples: usize, section_samples: usize) -> Self {
        let (a, b) = phase.t_interval();
        TubeSampler {
            ts: sampling::midpoints(a, b, t_samples),
            offsets: sampling::cross_section(section_samples, phase.m(), delta),
        }
    }

    pub fn standard(phase: &PhaseSpec, delta: f64) -> Self {
        Self::new(phase, delta, DEFAULT_T_SAMPLES, DEFAULT_SECTION_SAMPLES)
    }

    /// Mean of `|g|` over the samples of the tube with the given core centres.
    pub fn average(&self, centres: &[Vec<f64>], g: &dyn Field) -> f64 {
        self.mean_of(centres, |p| g.value(p).abs())
    }

    /// Fraction of samples of the tube satisfying `inside`.
    pub fn fraction(&self, centres: &[Vec<f64>], inside: impl Fn(&[f64]) -> bool) -> f64 {
        self.mean_of(centres, |p| if inside(p) { 1.0 } else { 0.0 })
    }

    fn mean_of(&self, centres: &[Vec<f64>], f: impl Fn(&[f64]) -> f64) -> f64 {
        let m = centres.first().map_or(0, Vec::len);
        let mut p = vec![0.0; m + 1];
        let mut acc = 0.0;
        for (c, &t) in centres.iter().zip(&self.ts) {
            p[m] = t;
            for off in &self.offsets {
                for k in 0..m {
                    p[k] = c[k] + off[k];
                }
                acc += f(&p);
            }
        }
        acc / (centres.len() * self.offsets.len()) as f64
    }
}

/// Smallest box containing every tube of the family (padded by δ).
pub fn family_bounding_box(family: &TubeFamily, t_samples: usize) -> Result<BoxN> {
    let phase = &family.phase;
    let m = phase.m();
    let (a, b) = phase.t_interval();
    let ts = sampling::linspace(a, b, t_samples.max(2));
    let per_tube = exec::try_map_slice(&family.tubes, |tube| {
        DirectionCurves::new(phase, &tube.y, &ts)?.centres(&tube.omega)
    })?;
    let mut lo = vec![f64::INFINITY; m];
    let mut hi = vec![f64::NEG_INFINITY; m];
    for cs in &per_tube {
        for c in cs {
            for k in 0..m {
                lo[k] = lo[k].min(c[k]);
                hi[k] = hi[k].max(c[k]);
            }
        }
    }
    let pad = 2.0 * family.delta;
    let mut lo: Vec<f64> = lo.into_iter().map(|v| v - pad).collect();
    let mut hi: Vec<f64> = hi.into_iter().map(|v| v + pad).collect();
    lo.push(a);
    hi.push(b);
    BoxN::new(lo, hi)
}

/// Counts, at each lattice cell centre, how many tubes contain it.
pub fn rasterize_multiplicity(family: &TubeFamily, h: f64, bbox: Option<BoxN>) -> Result<GridField<u32>> {
    let delta = family.delta;
    if !(h > 0.0 && h <= delta / 2.0 + 1e-15) {
        return Err(invalid(format!("grid spacing h = {h} must satisfy 0 < h <= delta/2 = {}", delta / 2.0)));
    }
    let phase = &family.phase;
    let m = phase.m();
    let bbox = match bbox {
        Some(b) => b,
        None => family_bounding_box(family, 257)?,
    };
    if bbox.dim() != m + 1 {
        return Err(invalid("rasterization box must have dimension n"));
    }
    let mut grid: GridField<u32> = GridField::zeros(bbox, h)?;
    let nt = grid.shape[m];
    let ts: Vec<f64> = (0..nt).map(|i| grid.center(m, i)).collect();
    let centres: Vec<Vec<Vec<f64>>> = exec::try_map_slice(&family.tubes, |tube| {
        DirectionCurves::new(phase, &tube.y, &ts)?.centres(&tube.omega)
    })?;
    let strides = grid.strides();
    let slab = strides[0];
    let geom = SlabGeometry { lo: grid.bbox.lo.clone(), h, shape: grid.shape.clone(), strides, delta };
    exec::for_each_chunk_mut(&mut grid.values, slab, |i0, chunk| {
        let x0 = geom.lo[0] + (i0 as f64 + 0.5) * h;
        for tube in &centres {
            for (it, c) in tube.iter().enumerate() {
                let d0 = x0 - c[0];
                let r2 = delta * delta - d0 * d0;
                if r2 <= 0.0 {
                    continue;
                }
                geom.stamp(chunk, c, 1, r2, it, 0);
            }
        }
    });
    Ok(grid)
}

struct SlabGeometry {
    lo: Vec<f64>,
    h: f64,
    shape: Vec<usize>,
    strides: Vec<usize>,
    delta: f64,
}

impl SlabGeometry {
    /// Increments every cell of the slab whose x-coordinates `axis..m` lie
    /// within the remaining squared radius `r2` of the centre `c`.
    fn stamp(&self, chunk: &mut [u32], c: &[f64], axis: usize, r2: f64, it: usize, base: usize) {
        let m = c.len();
        if axis == m {
            chunk[base + it] += 1;
            return;
        }
        let r = r2.sqrt().min(self.delta);
        let lo_i = (((c[axis] - r - self.lo[axis]) / self.h) - 0.5).ceil().max(0.0) as usize;
        let hi_f = ((c[axis] + r - self.lo[axis]) / self.h) - 0.5;
        if hi_f < 0.0 {
            return;
        }
        let hi_i = (hi_f.floor() as usize).min(self.shape[axis] - 1);
        for i in lo_i..=hi_i {
            let xc = self.lo[axis] + (i as f64 + 0.5) * self.h;
            let d = xc - c[axis];
            let rest = r2 - d * d;
            if rest > 0.0 {
                self.stamp(chunk, c, axis + 1, rest, it, base + i * self.strides[axis]);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_volumes() {
        assert!((unit_ball_volume(2) - std::f64::consts::PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 / 3.0 * std::f64::consts::PI).abs() < 1e-14);
    }

    #[test]
    fn single_tube_support_matches_volume() {
        let phase = PhaseSpec::const_coeff(3);
        let delta = 0.0625;
        let family = TubeFamily {
            phase: phase.clone(),
            delta,
            tubes: vec![Tube { y: vec![0.2, -0.1], omega: vec![0.0, 0.0], delta }],
            separation: Separation::None,
        };
        let g = rasterize_multiplicity(&family, delta / 4.0, None).unwrap();
        assert_eq!(g.max_value(), 1.0);
        let ratio = g.union_measure() / tube_volume(&phase, delta);
        assert!((ratio - 1.0).abs() < 0.05, "ratio {ratio}");
    }

    #[test]
    fn families_are_separated() {
        let phase = PhaseSpec::const_coeff(3);
        let f = build_family(&phase, 0.125, Separation::Direction, CentreRule::FixedZero).unwrap();
        assert!(f.min_gap() > 0.125);
        assert!(f.len() as f64 <= 0.125f64.powi(-2));
        let c = build_family(&phase, 0.125, Separation::Centre, CentreRule::RandomSeeded(3)).unwrap();
        assert!(c.min_gap() > 0.125);
        assert!(build_family(&phase, 0.5, Separation::Direction, CentreRule::FixedZero).is_err());
    }
}
