//! Grains: neighbourhoods of zero sets intersected with a ball, tube
//! occupancy and Wongkew-type volume scaling.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::exec;
use crate::fit::{fit_scaling, ScalingFit};
use crate::grid::BoxN;
use crate::linalg;
use crate::poly::MultiPoly;
use crate::sampling;
use crate::tubes::{DirectionCurves, TubeFamily, TubeSampler, Tube};

/// Gradients below this norm are clamped in the membership proxy.
pub const GRADIENT_FLOOR: f64 = 1e-6;

/// A defining function of a grain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GrainFunction {
    Poly(MultiPoly),
    /// `x₂ − log x₁`, defined for `x₁ > 0`.
    LogSurface,
}

impl GrainFunction {
    fn value_and_gradient(&self, p: &[f64]) -> (f64, Vec<f64>) {
        match self {
            GrainFunction::Poly(q) => {
                let g = q.gradient().iter().map(|d| d.eval(p)).collect();
                (q.eval(p), g)
            }
            GrainFunction::LogSurface => {
                let mut g = vec![0.0; p.len()];
                if p[0] <= 0.0 {
                    return (f64::INFINITY, g);
                }
                g[0] = -1.0 / p[0];
                g[1] = 1.0;
                (p[1] - p[0].ln(), g)
            }
        }
    }

    fn vars(&self) -> Option<usize> {
        match self {
            GrainFunction::Poly(q) => Some(q.vars),
            GrainFunction::LogSurface => None,
        }
    }
}

/// `N_δ Z(P₁,…,P_m) ∩ B(centre, ρ)` with the first-order distance proxy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grain {
    pub functions: Vec<GrainFunction>,
    pub delta: f64,
    pub rho: f64,
    pub center: Vec<f64>,
}

impl Grain {
    pub fn new(functions: Vec<GrainFunction>, delta: f64, rho: f64, center: Vec<f64>) -> Result<Self> {
        let n = center.len();
        if functions.len() > n {
            return Err(invalid(format!("codimension {} exceeds the dimension {n}", functions.len())));
        }
        if functions.iter().any(|f| f.vars().is_some_and(|v| v != n)) {
            return Err(invalid("every polynomial must have one variable per coordinate"));
        }
        if functions.iter().any(|f| matches!(f, GrainFunction::LogSurface)) && n < 2 {
            return Err(invalid("the log surface needs at least two coordinates"));
        }
        if !(delta > 0.0 && delta <= rho) {
            return Err(invalid(format!("need 0 < delta <= rho, got delta = {delta}, rho = {rho}")));
        }
        Ok(Grain { functions, delta, rho, center })
    }

    pub fn codim(&self) -> usize {
        self.functions.len()
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// `|P_j(p)| ≤ δ · max(|∇P_j(p)|, g_min)` for every `j`, ignoring the ball.
    pub fn near_zero_set(&self, p: &[f64]) -> bool {
        self.functions.iter().all(|f| {
            let (v, g) = f.value_and_gradient(p);
            v.abs() <= self.delta * linalg::norm(&g).max(GRADIENT_FLOOR)
        })
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        linalg::dist(p, &self.center) <= self.rho && self.near_zero_set(p)
    }

    /// Smallest Gram determinant of the normalized gradients over `samples`
    /// points of the zero set, found by Gauss–Newton projection of random
    /// points of the ball. `None` if no projection converged.
    pub fn transversality(&self, samples: usize, seed: u64) -> Option<f64> {
        let mut rng = sampling::rng(seed);
        let starts: Vec<Vec<f64>> = (0..samples * 4)
            .map(|_| {
                let off = sampling::random_ball(&mut rng, self.dim(), self.rho);
                self.center.iter().zip(off).map(|(c, o)| c + o).collect()
            })
            .collect();
        let grams: Vec<f64> = starts.iter().filter_map(|s| self.project(s)).map(|p| self.gram(&p)).take(samples).collect();
        (!grams.is_empty()).then(|| grams.into_iter().fold(f64::INFINITY, f64::min))
    }

    fn gram(&self, p: &[f64]) -> f64 {
        let rows: Vec<Vec<f64>> = self
            .functions
            .iter()
            .map(|f| {
                let g = f.value_and_gradient(p).1;
                let n = linalg::norm(&g).max(GRADIENT_FLOOR);
                g.iter().map(|v| v / n).collect()
            })
            .collect();
        let m = rows.len();
        let j = DMatrix::from_fn(m, self.dim(), |i, k| rows[i][k]);
        (&j * j.transpose()).determinant()
    }

    fn project(&self, start: &[f64]) -> Option<Vec<f64>> {
        let mut x = start.to_vec();
        let m = self.codim();
        for _ in 0..50 {
            let vg: Vec<(f64, Vec<f64>)> = self.functions.iter().map(|f| f.value_and_gradient(&x)).collect();
            let r: Vec<f64> = vg.iter().map(|v| v.0).collect();
            if r.iter().any(|v| !v.is_finite()) {
                return None;
            }
            if linalg::norm(&r) < 1e-13 {
                return (linalg::dist(&x, &self.center) <= self.rho).then_some(x);
            }
            let j = DMatrix::from_fn(m, self.dim(), |i, k| vg[i].1[k]);
            let jjt = &j * j.transpose();
            let lam = jjt.lu().solve(&nalgebra::DVector::from_column_slice(&r))?;
            let step = j.transpose() * lam;
            for (xi, s) in x.iter_mut().zip(step.iter()) {
                *xi -= s;
            }
        }
        None
    }
}

/// Fraction of the tube's `(t, cross-section)` samples inside the grain.
pub fn tube_grain_fraction(family: &TubeFamily, tube: &Tube, grain: &Grain, sampler: &TubeSampler) -> Result<f64> {
    if sampler.ts.len() < 64 {
        return Err(invalid(format!("need at least 64 t-samples, got {}", sampler.ts.len())));
    }
    let curves = DirectionCurves::new(&family.phase, &tube.y, &sampler.ts)?;
    let centres = curves.centres(&tube.omega)?;
    Ok(sampler.fraction(&centres, |p| grain.contains(p)))
}

/// Occupancy fractions of every tube of the family, in family order.
pub fn family_fractions(family: &TubeFamily, grain: &Grain, sampler: &TubeSampler) -> Result<Vec<f64>> {
    if grain.dim() != family.phase.n() {
        return Err(invalid(format!("grain lives in R^{} but the family in R^{}", grain.dim(), family.phase.n())));
    }
    exec::try_map_slice(&family.tubes, |t| tube_grain_fraction(family, t, grain, sampler))
}

/// `#{T : |T ∩ G| ≥ λ |T|}` from precomputed fractions.
pub fn count_concentrated(fractions: &[f64], lambda: f64) -> usize {
    fractions.iter().filter(|&&f| f >= lambda).count()
}

pub fn nonconcentration_count(family: &TubeFamily, grain: &Grain, lambda: f64, sampler: &TubeSampler) -> Result<usize> {
    Ok(count_concentrated(&family_fractions(family, grain, sampler)?, lambda))
}

/// The grain around the surface `x₂ = log x₁` used by the compressed family.
pub fn log_surface_grain(delta: f64) -> Result<Grain> {
    Grain::new(vec![GrainFunction::LogSurface], delta, 2.0, vec![1.0, -0.3, 0.0])
}

/// `{⟨v, x⟩ = c}` with `v` normalized.
pub fn hyperplane(v: &[f64], c: f64) -> Result<MultiPoly> {
    let n = linalg::norm(v);
    if n == 0.0 {
        return Err(invalid("hyperplane normal must be nonzero"));
    }
    let k = v.len();
    let mut terms: Vec<(Vec<u32>, f64)> = (0..k)
        .map(|i| {
            let mut e = vec![0; k];
            e[i] = 1;
            (e, v[i] / n)
        })
        .collect();
    terms.push((vec![0; k], -c / n));
    MultiPoly::new(k, terms)
}

/// `|x|² − r²`.
pub fn sphere(n: usize, r: f64) -> Result<MultiPoly> {
    let mut terms: Vec<(Vec<u32>, f64)> = (0..n)
        .map(|i| {
            let mut e = vec![0; n];
            e[i] = 2;
            (e, 1.0)
        })
        .collect();
    terms.push((vec![0; n], -r * r));
    MultiPoly::new(n, terms)
}

/// Circle `x₁² + x₂² = r², x₃ = 0` in `R³`.
pub fn circle(r: f64) -> Result<Vec<MultiPoly>> {
    Ok(vec![
        MultiPoly::new(3, vec![(vec![2, 0, 0], 1.0), (vec![0, 2, 0], 1.0), (vec![0, 0, 0], -r * r)])?,
        MultiPoly::new(3, vec![(vec![0, 0, 1], 1.0)])?,
    ])
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VolumeRow {
    pub delta: f64,
    pub h: f64,
    pub measure: f64,
}

/// Grid measure (spacing `h`) of `{x ∈ box : |P_j(x)| ≤ δ max(|∇P_j|, g_min) ∀j}`.
pub fn neighborhood_measure(polys: &[MultiPoly], delta: f64, bbox: &BoxN, h: f64) -> Result<f64> {
    let n = bbox.dim();
    if polys.iter().any(|p| p.vars != n) {
        return Err(invalid("polynomials must have one variable per box coordinate"));
    }
    let shape: Vec<usize> = bbox.lo.iter().zip(&bbox.hi).map(|(a, b)| ((b - a) / h).round().max(1.0) as usize).collect();
    let cells: u128 = shape.iter().map(|&s| s as u128).product();
    let budget = crate::grid::cell_budget();
    if cells > budget as u128 {
        return Err(crate::error::Error::Budget { cells, budget });
    }
    let steps: Vec<f64> = (0..n).map(|k| (bbox.hi[k] - bbox.lo[k]) / shape[k] as f64).collect();
    let grads: Vec<Vec<MultiPoly>> = polys.iter().map(MultiPoly::gradient).collect();
    let inner: usize = shape[1..].iter().product();
    let counts = exec::map_indexed(shape[0], |i0| {
        let mut p = vec![0.0; n];
        p[0] = bbox.lo[0] + (i0 as f64 + 0.5) * steps[0];
        let mut count = 0u64;
        for flat in 0..inner {
            let mut rem = flat;
            for k in (1..n).rev() {
                p[k] = bbox.lo[k] + ((rem % shape[k]) as f64 + 0.5) * steps[k];
                rem /= shape[k];
            }
            let inside = polys.iter().zip(&grads).all(|(q, g)| {
                let gn = g.iter().map(|d| d.eval(&p).powi(2)).sum::<f64>().sqrt();
                q.eval(&p).abs() <= delta * gn.max(GRADIENT_FLOOR)
            });
            count += inside as u64;
        }
        count
    });
    let cell: f64 = steps.iter().product();
    Ok(counts.iter().sum::<u64>() as f64 * cell)
}

/// Neighbourhood measures along the ladder with `h = δ / refine`, and the
/// fitted exponent of `measure ∝ δ^slope`.
pub fn neighborhood_volume_fit(polys: &[MultiPoly], deltas: &[f64], bbox: &BoxN, refine: f64) -> Result<(Vec<VolumeRow>, ScalingFit)> {
    let rows = deltas
        .iter()
        .map(|&d| {
            let h = d / refine;
            Ok(VolumeRow { delta: d, h, measure: neighborhood_measure(polys, d, bbox, h)? })
        })
        .collect::<Result<Vec<_>>>()?;
    let fit = fit_scaling(&rows.iter().map(|r| (r.delta, r.measure)).collect::<Vec<_>>())?;
    Ok((rows, fit))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase::PhaseSpec;
    use crate::tubes::{build_family, CentreRule, Separation};

    fn sphere_grain() -> Grain {
        Grain::new(vec![GrainFunction::Poly(sphere(3, 0.5).unwrap())], 0.05, 1.0, vec![0.0; 3]).unwrap()
    }

    #[test]
    fn membership_examples() {
        let g = sphere_grain();
        assert!(g.contains(&[0.5, 0.0, 0.0]));
        assert!(!g.contains(&[0.0, 0.0, 0.0]));
        let x3 = MultiPoly::new(3, vec![(vec![0, 0, 1], 1.0)]).unwrap();
        let plane = Grain::new(vec![GrainFunction::Poly(x3)], 0.05, 1.0, vec![0.0; 3]).unwrap();
        for z in [-0.06, -0.05, -0.049, 0.0, 0.05, 0.051] {
            assert_eq!(plane.contains(&[0.1, 0.2, z]), z.abs() <= 0.05);
        }
    }

    #[test]
    fn hyperplane_proxy_is_exact() {
        let v = [0.48, 0.36, 0.8];
        let g = Grain::new(vec![GrainFunction::Poly(hyperplane(&v, 0.05).unwrap())], 0.03, 1.0, vec![0.0; 3]).unwrap();
        let mut rng = sampling::rng(3);
        for _ in 0..500 {
            let p = sampling::random_ball(&mut rng, 3, 0.9);
            assert_eq!(g.contains(&p), (linalg::dot(&v, &p) - 0.05).abs() <= 0.03);
        }
    }

    #[test]
    fn transversality_of_circle() {
        let g = Grain::new(circle(0.5).unwrap().into_iter().map(GrainFunction::Poly).collect(), 0.05, 1.0, vec![0.0; 3]).unwrap();
        let gram = g.transversality(20, 1).unwrap();
        assert!(gram > 1e-8, "{gram}");
    }

    #[test]
    fn far_grain_and_large_lambda() {
        let phase = PhaseSpec::const_coeff(3);
        let fam = build_family(&phase, 0.125, Separation::Direction, CentreRule::FixedZero).unwrap();
        let s = TubeSampler::standard(&phase, 0.125);
        let far = Grain::new(vec![GrainFunction::Poly(hyperplane(&[1.0, 0.0, 0.0], 5.0).unwrap())], 0.1, 1.0, vec![5.0, 0.0, 0.0]).unwrap();
        assert!(family_fractions(&fam, &far, &s).unwrap().iter().all(|&f| f == 0.0));
        let fr = family_fractions(&fam, &sphere_grain(), &s).unwrap();
        assert_eq!(count_concentrated(&fr, 1.01), 0);
        assert!(count_concentrated(&fr, 0.1) >= count_concentrated(&fr, 0.5));
    }
}
