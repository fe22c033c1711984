//! Sublevel-set measures, the van der Corput bound, the polynomial
//! derivative floor and κ-fits under least-squares adversaries.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::fit::log_log_line;
use crate::hypothesis::{default_minor, minor_index_pairs};
use crate::linalg;
use crate::phase::PhaseSpec;
use crate::poly::{bisect, UniPoly};
use crate::sampling;
use crate::taylor::Taylor;

/// `(cell volume) · #{cells with |F| < σ}` for values sampled at cell centres.
pub fn sublevel_measure(values: &[f64], cell_volume: f64, sigma: f64) -> f64 {
    values.iter().filter(|v| v.abs() < sigma).count() as f64 * cell_volume
}

/// Grid measure of `{t ∈ [a, b] : |F(t)| < σ}` on `cells` midpoints.
pub fn sublevel_measure_1d(f: impl Fn(f64) -> f64, a: f64, b: f64, cells: usize, sigma: f64) -> f64 {
    let vals: Vec<f64> = sampling::midpoints(a, b, cells).into_iter().map(f).collect();
    sublevel_measure(&vals, (b - a) / cells as f64, sigma)
}

/// A real-analytic function given through its power series.
pub type JetFunction<'a> = &'a (dyn Fn(Taylor) -> Taylor + Sync);

fn deriv(u: JetFunction, j: usize, t: f64) -> f64 {
    u(Taylor::variable(t, j + 1)).derivative(j)
}

/// Roots of `u^(j) − c` on `[a, b]`, assuming `u^(k)` has no zeros there.
/// Each level splits the interval at the roots of the next derivative, on
/// whose pieces the current one is monotone.
fn descent_roots(u: JetFunction, j: usize, k: usize, c: f64, a: f64, b: f64) -> Vec<f64> {
    if j >= k {
        return Vec::new();
    }
    let mut knots = vec![a];
    knots.extend(descent_roots(u, j + 1, k, 0.0, a, b));
    knots.push(b);
    let g = |t: f64| deriv(u, j, t) - c;
    let mut roots: Vec<f64> = Vec::new();
    for w in knots.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let (glo, ghi) = (g(lo), g(hi));
        let r = if glo == 0.0 {
            Some(lo)
        } else if ghi == 0.0 {
            Some(hi)
        } else if glo.signum() != ghi.signum() {
            Some(bisect(g, lo, hi, glo))
        } else {
            None
        };
        if let Some(r) = r {
            if roots.last().is_none_or(|&l| r > l) {
                roots.push(r);
            }
        }
    }
    roots
}

/// Measure of `{t ∈ [a, b] : |u(t)| < σ}` for `u` with `u^(k)` of one sign,
/// computed from the exact crossing points of `u = ±σ`.
pub fn sublevel_measure_exact(u: JetFunction, k: usize, a: f64, b: f64, sigma: f64) -> f64 {
    let mut knots = vec![a, b];
    knots.extend(descent_roots(u, 0, k, sigma, a, b));
    knots.extend(descent_roots(u, 0, k, -sigma, a, b));
    knots.sort_by(f64::total_cmp);
    knots
        .windows(2)
        .filter(|w| w[1] > w[0] && deriv(u, 0, 0.5 * (w[0] + w[1])).abs() < sigma)
        .map(|w| w[1] - w[0])
        .sum()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VanDerCorputReport {
    pub k: usize,
    pub ratios: Vec<(f64, f64, f64)>,
    pub worst_ratio: f64,
    /// `max/min` of the ratios across the ladder.
    pub spread: f64,
}

/// Checks `u^(k) ≥ 1` on a grid of `check_points` points and returns
/// `|{|u| < σ}| / σ^{1/k}` along the ladder.
pub fn van_der_corput_check(
    u: JetFunction,
    k: usize,
    interval: (f64, f64),
    sigmas: &[f64],
    check_points: usize,
) -> Result<VanDerCorputReport> {
    let (a, b) = interval;
    if k == 0 || !(b > a) {
        return Err(crate::error::invalid("need k ≥ 1 and a nonempty interval"));
    }
    for t in sampling::linspace(a, b, check_points.max(2)) {
        let dk = deriv(u, k, t);
        if !(dk >= 1.0 - 1e-12) {
            return Err(Error::Precondition(format!("u^({k})({t}) = {dk} < 1")));
        }
    }
    let ratios: Vec<(f64, f64, f64)> = sigmas
        .iter()
        .map(|&s| {
            let m = sublevel_measure_exact(u, k, a, b, s);
            (s, m, m / s.powf(1.0 / k as f64))
        })
        .collect();
    let worst = ratios.iter().map(|r| r.2).fold(0.0, f64::max);
    let least = ratios.iter().map(|r| r.2).fold(f64::INFINITY, f64::min);
    Ok(VanDerCorputReport { k, ratios, worst_ratio: worst, spread: worst / least })
}

/// `c_d` for `d = 0..=20`: every `P` of degree `≤ d` and `s ∈ [−1, 1]` admit a
/// `k` with `min_{[−1,1]} |P^(k)| ≥ c_d (Σᵢ |P^(i)(s)|²)^{1/2}`. Half the
/// smallest ratio seen over 10⁴ random polynomials per degree, made
/// nonincreasing in `d`
/// (`cargo run --example floor_constants`).
pub const FLOOR_CONSTANTS: [f64; 21] = [
    0.5, 0.1622, 0.1088, 0.1014, 0.1011, 0.1011, 0.09286, 0.09286, 0.09286, 0.09286, 0.09286, 0.09286, 0.09286,
    0.09286, 0.09286, 0.09286, 0.09286, 0.09286, 0.09286, 0.09286, 0.09286,
];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DerivativeFloor {
    pub k: usize,
    pub floor: f64,
    /// `(Σᵢ |P^(i)(s)|²)^{1/2}`.
    pub jet_norm: f64,
    pub constant: f64,
}

impl DerivativeFloor {
    pub fn holds(&self) -> bool {
        self.floor >= self.constant * self.jet_norm * (1.0 - 1e-12)
    }
}

/// The order `k` maximizing `min_{[−1,1]} |P^(k)|` and that minimum.
pub fn poly_derivative_floor(p: &UniPoly, s: f64) -> Result<DerivativeFloor> {
    if p.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    let d = p.degree();
    if d > 20 {
        return Err(crate::error::invalid(format!("degree {d} exceeds 20")));
    }
    let mut best = (0, -1.0);
    let mut q = p.clone();
    let mut jet = 0.0;
    for k in 0..=d {
        let floor = q.min_abs_on(-1.0, 1.0);
        if floor > best.1 {
            best = (k, floor);
        }
        jet += q.eval(s).powi(2);
        q = q.derivative();
    }
    Ok(DerivativeFloor { k: best.0, floor: best.1, jet_norm: jet.sqrt(), constant: FLOOR_CONSTANTS[d] })
}

/// Random polynomial of degree `≤ d` with coefficients in `[−1, 1]`, about
/// half of them zeroed.
pub fn random_poly(rng: &mut sampling::SeededRng, d: usize) -> UniPoly {
    use rand::Rng;
    loop {
        let c: Vec<f64> = (0..=d).map(|_| if rng.random_bool(0.5) { rng.random_range(-1.0..1.0) } else { 0.0 }).collect();
        let p = UniPoly::new(c);
        if !p.is_zero() {
            return p;
        }
    }
}

/// Smallest `floor / jet_norm` over `samples` random `(P, s)` of degree `≤ d`.
pub fn floor_ratio_minimum(d: usize, samples: usize, seed: u64) -> f64 {
    use rand::Rng;
    let mut rng = sampling::rng(seed ^ (d as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let cases: Vec<(UniPoly, f64)> = (0..samples).map(|_| (random_poly(&mut rng, d), rng.random_range(-1.0..1.0))).collect();
    exec::map_slice(&cases, |(p, s)| {
        let f = poly_derivative_floor(p, *s).expect("nonzero");
        f.floor / f.jet_norm
    })
    .into_iter()
    .fold(f64::INFINITY, f64::min)
}

/// Minimizer of `Σ_t |f(t) − Σ_j μ_j g_j(t)|²` with relative ridge `1e−12`.
pub fn adversarial_mu(f: &[f64], g: &[Vec<f64>]) -> Vec<f64> {
    if g.is_empty() {
        return Vec::new();
    }
    let a = DMatrix::from_fn(f.len(), g.len(), |i, j| g[j][i]);
    linalg::ridge_normal_equations(&a, &DVector::from_column_slice(f), 1e-12).as_slice().to_vec()
}

/// `(f(t; y), [g_j(t; y)])`.
pub type EnsembleFn = Arc<dyn Fn(f64, &[f64]) -> Result<(f64, Vec<f64>)> + Send + Sync>;

/// A target `f` and competitors `g_j` over `t ∈ I` and sampled `y`.
#[derive(Clone)]
pub struct Ensemble {
    pub name: String,
    pub t_interval: (f64, f64),
    pub y_points: Vec<Vec<f64>>,
    /// Measure of the `y`-region the points sample.
    pub y_volume: f64,
    pub eval: EnsembleFn,
}

impl std::fmt::Debug for Ensemble {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Ensemble").field("name", &self.name).field("y_points", &self.y_points.len()).finish()
    }
}

fn line_ensemble(name: &str, y_samples: usize, eval: EnsembleFn) -> Ensemble {
    Ensemble {
        name: name.into(),
        t_interval: (-1.0, 1.0),
        y_points: sampling::midpoints(-1.0, 1.0, y_samples).into_iter().map(|y| vec![y]).collect(),
        y_volume: 2.0,
        eval,
    }
}

/// `f = t²`, `g = t y` on `[−1, 1]²`.
pub fn square_vs_linear(y_samples: usize) -> Ensemble {
    line_ensemble("t2_vs_ty", y_samples, Arc::new(|t, y| Ok((t * t, vec![t * y[0]]))))
}

/// `f = t²`, `g = t²y² + t y³` on `[−1, 1]²`, which has no uniform slice estimate.
pub fn degenerate_slice(y_samples: usize) -> Ensemble {
    line_ensemble(
        "t2_vs_t2y2_ty3",
        y_samples,
        Arc::new(|t, y| {
            let y = y[0];
            Ok((t * t, vec![t * t * y * y + t * y * y * y]))
        }),
    )
}

/// `f = 1` against the minors of `∂²_yy φ(0, t; y)`, for `y` in `B(0, ρ)`.
pub fn minor_ensemble(phase: &PhaseSpec, y_samples: usize) -> Result<Ensemble> {
    let idx = default_minor(phase)?;
    let p = phase.clone();
    let rho = phase.rho();
    let m = phase.m();
    let vol = crate::tubes::unit_ball_volume(m) * rho.powi(m as i32);
    Ok(Ensemble {
        name: format!("{:?}_minors", phase.kind()),
        t_interval: phase.t_interval(),
        y_points: sampling::halton_ball(y_samples, m, rho),
        y_volume: vol,
        eval: Arc::new(move |t, y| {
            let h = p.hess_yy(&vec![0.0; p.m()], t, y)?;
            let minors = minor_index_pairs(&idx, &idx)
                .iter()
                .map(|(a, b)| {
                    let sub: Vec<Vec<f64>> = a.iter().map(|&i| b.iter().map(|&j| h[i][j]).collect()).collect();
                    linalg::det(&sub)
                })
                .collect();
            Ok((1.0, minors))
        }),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SublevelMode {
    Averaged,
    Slice,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SublevelConfig {
    pub sigmas: Vec<f64>,
    pub t_cells: usize,
    pub mode: SublevelMode,
    /// Relative step of the coordinate perturbations of the least-squares μ tried in slice mode.
    pub mu_step: f64,
    /// Constants also tried as μ in both modes, alone on each coordinate and on all at once.
    pub mu_grid: Vec<f64>,
}

/// `{−4, −3.75, …, 4}`.
pub fn default_mu_grid() -> Vec<f64> {
    (-16..=16).map(|k| k as f64 * 0.25).collect()
}

impl SublevelConfig {
    pub fn standard(mode: SublevelMode) -> Self {
        SublevelConfig { sigmas: (2..=20).map(|k| 2f64.powi(-k)).collect(), t_cells: 1 << 15, mode, mu_step: 0.25, mu_grid: default_mu_grid() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SublevelProfile {
    pub ensemble: String,
    pub mode: SublevelMode,
    pub sigmas: Vec<f64>,
    pub measures: Vec<f64>,
    pub fitted_kappa: f64,
    pub fitted_c: f64,
    pub max_log_residual: f64,
    /// Ladder entries whose measure spans at least [`MIN_RESOLVED_CELLS`] cells.
    pub resolved_points: usize,
    pub non_power_law: bool,
    /// Whether some σ < 1 already captures the whole domain.
    pub saturated: bool,
}

/// Candidate μ vectors at one `y`: the least-squares choice, its coordinate
/// perturbations in slice mode, and the constant grid.
fn candidates(mu: &[f64], cfg: &SublevelConfig) -> Vec<Vec<f64>> {
    let mut cands = vec![mu.to_vec()];
    if cfg.mode == SublevelMode::Slice {
        for j in 0..mu.len() {
            let h = cfg.mu_step * mu[j].abs().max(1.0);
            for sgn in [-1.0, 1.0] {
                let mut c = mu.to_vec();
                c[j] += sgn * h;
                cands.push(c);
            }
        }
    }
    for &c in &cfg.mu_grid {
        cands.push(vec![c; mu.len()]);
        if mu.len() > 1 {
            for j in 0..mu.len() {
                let mut e = vec![0.0; mu.len()];
                e[j] = c;
                cands.push(e);
            }
        }
    }
    cands
}

/// For each σ, the largest count of grid points with `|F| < σ` over the candidate μ at one `y`.
fn slice_counts(ens: &Ensemble, y: &[f64], ts: &[f64], cfg: &SublevelConfig) -> Result<Vec<usize>> {
    let mut f = Vec::with_capacity(ts.len());
    let mut g: Vec<Vec<f64>> = Vec::new();
    for &t in ts {
        let (fv, gv) = (ens.eval)(t, y)?;
        if g.is_empty() {
            g = vec![Vec::with_capacity(ts.len()); gv.len()];
        }
        f.push(fv);
        for (col, v) in g.iter_mut().zip(gv) {
            col.push(v);
        }
    }
    let mu = adversarial_mu(&f, &g);
    let mut order: Vec<usize> = (0..cfg.sigmas.len()).collect();
    order.sort_by(|&a, &b| cfg.sigmas[a].total_cmp(&cfg.sigmas[b]));
    let sorted: Vec<f64> = order.iter().map(|&i| cfg.sigmas[i]).collect();
    let mut best = vec![0usize; cfg.sigmas.len()];
    let mut hist = vec![0usize; sorted.len() + 1];
    for c in candidates(&mu, cfg) {
        hist.iter_mut().for_each(|h| *h = 0);
        for i in 0..ts.len() {
            let v = (f[i] - c.iter().zip(&g).map(|(m, col)| m * col[i]).sum::<f64>()).abs();
            hist[sorted.partition_point(|&s| s <= v)] += 1;
        }
        let mut acc = 0;
        for (k, &i) in order.iter().enumerate() {
            acc += hist[k];
            best[i] = best[i].max(acc);
        }
    }
    Ok(best)
}

/// Runs the sublevel experiment. At each `y` the adversary keeps, for every σ,
/// the best of the least-squares μ(y), the constant grid and (in slice mode)
/// a small neighbourhood of the least-squares choice. Averaged mode integrates
/// over `y`; slice mode takes the supremum.
pub fn kappa_experiment(ens: &Ensemble, cfg: &SublevelConfig) -> Result<SublevelProfile> {
    let (a, b) = ens.t_interval;
    let ts = sampling::midpoints(a, b, cfg.t_cells);
    let cell = (b - a) / cfg.t_cells as f64;
    let per_y = exec::try_map_slice(&ens.y_points, |y| {
        Ok::<_, Error>(slice_counts(ens, y, &ts, cfg)?.into_iter().map(|n| n as f64 * cell).collect::<Vec<f64>>())
    })?;
    let ny = ens.y_points.len().max(1) as f64;
    let measures: Vec<f64> = (0..cfg.sigmas.len())
        .map(|i| match cfg.mode {
            SublevelMode::Averaged => per_y.iter().map(|m| m[i]).sum::<f64>() * ens.y_volume / ny,
            SublevelMode::Slice => per_y.iter().map(|m| m[i]).fold(0.0, f64::max),
        })
        .collect();
    profile(ens, cfg, measures, b - a)
}

/// Measures below this many grid cells are too coarse to enter the fit.
pub const MIN_RESOLVED_CELLS: f64 = 16.0;

fn profile(ens: &Ensemble, cfg: &SublevelConfig, measures: Vec<f64>, t_len: f64) -> Result<SublevelProfile> {
    let (full, cell) = match cfg.mode {
        SublevelMode::Averaged => (t_len * ens.y_volume, t_len * ens.y_volume / cfg.t_cells as f64),
        SublevelMode::Slice => (t_len, t_len / cfg.t_cells as f64),
    };
    let pairs: Vec<(f64, f64)> = cfg
        .sigmas
        .iter()
        .copied()
        .zip(measures.iter().copied())
        .filter(|p| p.1 >= MIN_RESOLVED_CELLS * cell)
        .collect();
    let (kappa, intercept, res) = if pairs.len() >= 3 { log_log_line(&pairs)? } else { (0.0, f64::NEG_INFINITY, f64::INFINITY) };
    Ok(SublevelProfile {
        ensemble: ens.name.clone(),
        mode: cfg.mode,
        sigmas: cfg.sigmas.clone(),
        saturated: cfg.sigmas.iter().zip(&measures).any(|(&s, &m)| s < 1.0 && m >= full * (1.0 - 1e-12)),
        measures,
        fitted_kappa: kappa,
        fitted_c: intercept.exp(),
        max_log_residual: res,
        resolved_points: pairs.len(),
        non_power_law: res > 0.5,
    })
}

fn count_below(sorted: &[f64], sigma: f64) -> usize {
    sorted.partition_point(|&v| v < sigma)
}

/// The averaged measure with a fixed `μ` in place of the adversary.
pub fn fixed_mu_measures(ens: &Ensemble, mu: &[f64], sigmas: &[f64], t_cells: usize) -> Result<Vec<f64>> {
    let (a, b) = ens.t_interval;
    let ts = sampling::midpoints(a, b, t_cells);
    let cell = (b - a) / t_cells as f64;
    let per_y = exec::try_map_slice(&ens.y_points, |y| {
        let mut v = Vec::with_capacity(ts.len());
        for &t in &ts {
            let (f, g) = (ens.eval)(t, y)?;
            v.push((f - mu.iter().zip(&g).map(|(m, gv)| m * gv).sum::<f64>()).abs());
        }
        v.sort_by(f64::total_cmp);
        Ok::<_, Error>(sigmas.iter().map(|&s| count_below(&v, s) as f64 * cell).collect::<Vec<_>>())
    })?;
    let ny = ens.y_points.len().max(1) as f64;
    Ok((0..sigmas.len()).map(|i| per_y.iter().map(|m| m[i]).sum::<f64>() * ens.y_volume / ny).collect())
}
