//! Quadrature for the rescaled oscillatory operators
//!
//! `S^λ f(x, t) = ∫ e^{i φ^λ(x,t;y)} a^λ(x,t;y) f(y) dy`, with
//! `φ^λ(x,t;y) = λ φ(x/λ, t/λ; y)` and `a^λ(x,t;y) = a(x/λ, t/λ; y)`.
//!
//! The amplitude is a tensor product, so its `(x, t)` factor leaves the
//! integral. For translation-invariant phases the kernel is
//! `e^{i⟨x,y⟩} e^{iλψ(t/λ;y)}`, and each `t`-slice reduces to one
//! contraction per `y`-axis against the matrix `e^{i x_k y_k}`. Other phases
//! are summed point by point.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exec;
use crate::fit::{fit_scaling, ScalingFit};
use crate::phase::PhaseSpec;
use crate::sampling;

/// `(1 − s²)⁴` on `|s| < 1`, zero outside.
pub fn bump(s: f64) -> f64 {
    let u = 1.0 - s * s;
    if u > 0.0 {
        u.powi(4)
    } else {
        0.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum AmplitudeSpec {
    TensorBump,
    /// The tensor bump times a radial bump of the given radius about `center` in `y`.
    CapRestricted { center: Vec<f64>, radius: f64 },
}

impl AmplitudeSpec {
    /// Factor depending on one spatial coordinate `s = x_k/λ` or `t/λ`.
    fn spatial(&self, s: f64, rho: f64) -> f64 {
        bump(s / rho)
    }

    fn frequency(&self, y: &[f64], rho: f64) -> f64 {
        let base: f64 = y.iter().map(|&v| bump(v / rho)).product();
        match self {
            AmplitudeSpec::TensorBump => base,
            AmplitudeSpec::CapRestricted { center, radius } => {
                let d = crate::linalg::dist(y, center);
                base * bump(d / radius)
            }
        }
    }

    fn validate(&self, m: usize, rho: f64) -> Result<()> {
        if let AmplitudeSpec::CapRestricted { center, radius } = self {
            if center.len() != m || !(*radius > 0.0 && *radius <= rho) {
                return Err(invalid("cap amplitude needs a centre in R^{n-1} and 0 < radius <= rho"));
            }
        }
        Ok(())
    }
}

/// Trapezoid nodes on `[−ρ, ρ]^m` with equal spacing per axis.
#[derive(Clone, Debug, PartialEq)]
pub struct YGrid {
    pub m: usize,
    pub axis: Vec<f64>,
    pub weights: Vec<f64>,
    pub spacing: f64,
}

impl YGrid {
    /// The coarsest grid on `[−ρ, ρ]^m` with spacing at most `max_spacing`.
    pub fn new(m: usize, rho: f64, max_spacing: f64) -> Self {
        let cells = (2.0 * rho / max_spacing).ceil() as usize;
        let spacing = 2.0 * rho / cells as f64;
        let axis = sampling::linspace(-rho, rho, cells + 1);
        let weights = (0..=cells).map(|i| if i == 0 || i == cells { 0.5 * spacing } else { spacing }).collect();
        YGrid { m, axis, weights, spacing }
    }

    /// Grid at `refine` times the density of the Nyquist limit `1/(8λ)`.
    pub fn for_lambda(m: usize, rho: f64, lambda: f64, refine: f64) -> Self {
        Self::new(m, rho, 1.0 / (8.0 * lambda * refine))
    }

    pub fn len(&self) -> usize {
        self.axis.len().pow(self.m as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.axis.is_empty()
    }

    /// Node `flat` in row-major order and its weight.
    pub fn node(&self, flat: usize, y: &mut [f64]) -> f64 {
        let k = self.axis.len();
        let mut rem = flat;
        let mut w = 1.0;
        for d in (0..self.m).rev() {
            let i = rem % k;
            rem /= k;
            y[d] = self.axis[i];
            w *= self.weights[i];
        }
        w
    }

    pub fn values(&self, f: impl Fn(&[f64]) -> Complex64) -> Vec<Complex64> {
        let mut y = vec![0.0; self.m];
        (0..self.len())
            .map(|i| {
                self.node(i, &mut y);
                f(&y)
            })
            .collect()
    }

    /// `(Σ w |f|^q)^{1/q}`; `q = ∞` gives the max.
    pub fn lq_norm(&self, f: &[Complex64], q: f64) -> f64 {
        if q.is_infinite() {
            return f.iter().map(|v| v.norm()).fold(0.0, f64::max);
        }
        let mut y = vec![0.0; self.m];
        let s: f64 = f.iter().enumerate().map(|(i, v)| self.node(i, &mut y) * v.norm().powf(q)).sum();
        s.powf(1.0 / q)
    }
}

/// Spatial lattice `(1/2)ℤ` restricted to `[−λρ, λρ]` on every axis.
pub fn spatial_axis(lambda: f64, rho: f64, spacing: f64) -> Vec<f64> {
    let k = (lambda * rho / spacing + 1e-9).floor() as i64;
    (-k..=k).map(|i| i as f64 * spacing).collect()
}

pub const SPATIAL_SPACING: f64 = 0.5;

/// Complex field on the lattice `t × x₁ × … × x_{n−1}` (row-major, `t` slowest).
#[derive(Clone, Debug, PartialEq)]
pub struct OscField {
    pub lambda: f64,
    pub axis: Vec<f64>,
    pub m: usize,
    pub values: Vec<Complex64>,
    pub y_spacing: f64,
    /// `‖a‖_∞ · Σ w |f|`, an upper bound for every value.
    pub bound: f64,
}

impl OscField {
    pub fn cell_volume(&self) -> f64 {
        let h = if self.axis.len() > 1 { self.axis[1] - self.axis[0] } else { 1.0 };
        h.powi(self.m as i32 + 1)
    }

    pub fn lq_norm(&self, q: f64) -> f64 {
        if q.is_infinite() {
            return self.max_abs();
        }
        (self.values.iter().map(|v| v.norm().powf(q)).sum::<f64>() * self.cell_volume()).powf(1.0 / q)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn respects_bound(&self) -> bool {
        self.values.iter().all(|v| v.norm() <= self.bound * (1.0 + 1e-12) + 1e-300)
    }
}

/// Which kernel the quadrature evaluates.
#[derive(Clone, Copy, Debug)]
pub enum Kernel<'a> {
    Phase(&'a PhaseSpec),
    /// `φ = ⟨x, y⟩`, the plain inverse transform.
    Free,
    /// `φ ≡ 0`: only the amplitude.
    Trivial,
}

fn check_lambda(lambda: f64, grid: &YGrid) -> Result<()> {
    if !(4.0..=64.0).contains(&lambda) {
        return Err(invalid(format!("lambda must lie in [4, 64], got {lambda}")));
    }
    let limit = 1.0 / (8.0 * lambda);
    if grid.spacing > limit * (1.0 + 1e-12) {
        return Err(Error::Nyquist { spacing: grid.spacing, lambda, limit });
    }
    Ok(())
}

/// Largest number of (point, node) pairs evaluated by direct summation.
pub const DIRECT_BUDGET: u128 = 4_000_000_000;

/// Evaluates `S^λ f` on the spatial lattice from values of `f` at the grid nodes.
pub fn apply_extension(
    kernel: Kernel,
    amplitude: &AmplitudeSpec,
    rho: f64,
    lambda: f64,
    grid: &YGrid,
    f: &[Complex64],
    spatial_spacing: f64,
) -> Result<OscField> {
    check_lambda(lambda, grid)?;
    let m = grid.m;
    if let Kernel::Phase(p) = kernel {
        if p.m() != m || (p.rho() - rho).abs() > 1e-15 {
            return Err(invalid("grid dimension or radius does not match the phase"));
        }
    }
    if f.len() != grid.len() {
        return Err(invalid(format!("f has {} values, grid has {} nodes", f.len(), grid.len())));
    }
    amplitude.validate(m, rho)?;
    let axis = spatial_axis(lambda, rho, spatial_spacing);
    let nx = axis.len();
    let mut y = vec![0.0; m];
    let amp_y: Vec<f64> = (0..grid.len())
        .map(|i| {
            let w = grid.node(i, &mut y);
            w * amplitude.frequency(&y, rho)
        })
        .collect();
    let bound = amp_y.iter().zip(f).map(|(a, v)| a * v.norm()).sum::<f64>();
    let spatial: Vec<f64> = axis.iter().map(|&s| amplitude.spatial(s / lambda, rho)).collect();
    let slice_len = nx.pow(m as u32);
    let slices: Vec<Vec<Complex64>> = match kernel {
        Kernel::Trivial => {
            let total: Complex64 = amp_y.iter().zip(f).map(|(a, v)| v * *a).sum();
            (0..nx).map(|_| vec![total; slice_len]).collect()
        }
        _ if kernel_separable(kernel) => {
            let ny = grid.axis.len();
            let e: Vec<Complex64> =
                axis.iter().flat_map(|&x| grid.axis.iter().map(move |&yk| Complex64::from_polar(1.0, x * yk))).collect();
            let zero = vec![0.0; m];
            exec::try_map_slice(&axis, |&t| -> Result<Vec<Complex64>> {
                let mut yv = vec![0.0; m];
                let mut data = Vec::with_capacity(grid.len());
                for (i, (a, fv)) in amp_y.iter().zip(f).enumerate() {
                    grid.node(i, &mut yv);
                    let ph = match kernel {
                        Kernel::Phase(p) if *a != 0.0 && *fv != Complex64::new(0.0, 0.0) => {
                            lambda * p.value(&zero, t / lambda, &yv)?
                        }
                        _ => 0.0,
                    };
                    data.push(fv * Complex64::from_polar(*a, ph));
                }
                let mut shape = vec![ny; m];
                for ax in 0..m {
                    data = contract_axis(&data, &shape, ax, &e, nx);
                    shape[ax] = nx;
                }
                Ok(data)
            })?
        }
        Kernel::Phase(p) => {
            let pairs = (slice_len * nx) as u128 * grid.len() as u128;
            if pairs > DIRECT_BUDGET {
                return Err(Error::Budget { cells: pairs, budget: DIRECT_BUDGET as u64 });
            }
            let nodes: Vec<(Vec<f64>, f64, Complex64)> = (0..grid.len())
                .filter(|&i| amp_y[i] != 0.0)
                .map(|i| {
                    let mut yv = vec![0.0; m];
                    grid.node(i, &mut yv);
                    (yv, amp_y[i], f[i])
                })
                .collect();
            exec::try_map_slice(&axis, |&t| -> Result<Vec<Complex64>> {
                let mut x = vec![0.0; m];
                (0..slice_len)
                    .map(|flat| {
                        let mut rem = flat;
                        for d in (0..m).rev() {
                            x[d] = axis[rem % nx] / lambda;
                            rem /= nx;
                        }
                        let mut acc = Complex64::new(0.0, 0.0);
                        for (yv, a, fv) in &nodes {
                            acc += fv * Complex64::from_polar(*a, lambda * p.value(&x, t / lambda, yv)?);
                        }
                        Ok(acc)
                    })
                    .collect()
            })?
        }
        Kernel::Free => unreachable!("the free kernel is separable"),
    };
    let mut values = Vec::with_capacity(nx * slice_len);
    let cutoff = !matches!(kernel, Kernel::Free);
    for (ti, slice) in slices.into_iter().enumerate() {
        for (flat, v) in slice.into_iter().enumerate() {
            let mut rem = flat;
            let mut a = 1.0;
            if cutoff {
                a = spatial[ti];
                for _ in 0..m {
                    a *= spatial[rem % nx];
                    rem /= nx;
                }
            }
            values.push(v * a);
        }
    }
    Ok(OscField { lambda, axis, m, values, y_spacing: grid.spacing, bound })
}

fn kernel_separable(kernel: Kernel) -> bool {
    match kernel {
        Kernel::Free => true,
        Kernel::Phase(p) => p.is_translation_invariant(),
        Kernel::Trivial => false,
    }
}

/// `U^λ` takes the frequency-side data `f̂` directly; the quadrature is the
/// same as for [`apply_extension`].
pub fn apply_propagator(
    kernel: Kernel,
    amplitude: &AmplitudeSpec,
    rho: f64,
    lambda: f64,
    grid: &YGrid,
    fhat: &[Complex64],
    spatial_spacing: f64,
) -> Result<OscField> {
    apply_extension(kernel, amplitude, rho, lambda, grid, fhat, spatial_spacing)
}

/// `out[.., x, ..] = Σ_y e[x][y] data[.., y, ..]` along `axis`.
fn contract_axis(data: &[Complex64], shape: &[usize], axis: usize, e: &[Complex64], nx: usize) -> Vec<Complex64> {
    let ny = shape[axis];
    let outer: usize = shape[..axis].iter().product();
    let inner: usize = shape[axis + 1..].iter().product();
    let mut out = vec![Complex64::new(0.0, 0.0); outer * nx * inner];
    for o in 0..outer {
        for xi in 0..nx {
            let row = &e[xi * ny..(xi + 1) * ny];
            let dst = &mut out[(o * nx + xi) * inner..(o * nx + xi + 1) * inner];
            for (yi, &c) in row.iter().enumerate() {
                let src = &data[(o * ny + yi) * inner..(o * ny + yi + 1) * inner];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += c * s;
                }
            }
        }
    }
    out
}

/// Test inputs on the frequency side.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum TestFunction {
    ConstantOne,
    /// Smooth cap of the given radius about a centre.
    Cap { center: Vec<f64>, radius: f64 },
    /// Random signs, constant on blocks of side `block`.
    RandomSigns { seed: u64, block: f64 },
}

impl TestFunction {
    pub fn eval(&self, y: &[f64]) -> f64 {
        match self {
            TestFunction::ConstantOne => 1.0,
            TestFunction::Cap { center, radius } => bump(crate::linalg::dist(y, center) / radius),
            TestFunction::RandomSigns { seed, block } => {
                let mut h = *seed ^ 0x9e37_79b9_7f4a_7c15;
                for &v in y {
                    let k = (v / block).floor() as i64 as u64;
                    h = (h ^ k).wrapping_mul(0xbf58_476d_1ce4_e5b9);
                    h ^= h >> 31;
                }
                if h & 1 == 0 {
                    1.0
                } else {
                    -1.0
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TestSuite {
    ConstantOne,
    CapFunctions,
    RandomSigns(u64),
}

impl TestSuite {
    pub fn members(&self, m: usize, rho: f64) -> Vec<TestFunction> {
        match self {
            TestSuite::ConstantOne => vec![TestFunction::ConstantOne],
            TestSuite::CapFunctions => {
                let r = rho / 4.0;
                let mut centres = vec![vec![0.0; m]];
                for k in 0..m {
                    let mut c = vec![0.0; m];
                    c[k] = rho / 2.0;
                    centres.push(c);
                }
                centres.push(vec![-rho / 2.0; m]);
                centres.into_iter().map(|center| TestFunction::Cap { center, radius: r }).collect()
            }
            TestSuite::RandomSigns(seed) => {
                (0..4).map(|k| TestFunction::RandomSigns { seed: seed.wrapping_add(k), block: rho / 8.0 }).collect()
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OscMode {
    /// `‖S^λ f‖_{L^q} / ‖f‖`.
    Hormander,
    /// `‖U^λ f‖_{L^q} / ‖f‖_{L^q}` with `f` the inverse transform of `f̂`.
    LocalSmoothing,
}

/// Norm used for the input in Hörmander mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum InputNorm {
    L2,
    LInf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OscConfig {
    pub q: f64,
    pub lambdas: Vec<f64>,
    pub suite: TestSuite,
    pub mode: OscMode,
    pub input_norm: InputNorm,
    pub amplitude: AmplitudeSpec,
    /// Y-grid density relative to the `1/(8λ)` limit.
    pub refine: f64,
    pub spatial_spacing: f64,
    /// Run the grid-doubling gate for `λ ≤ 32` before the ladder.
    pub gate: bool,
}

impl OscConfig {
    pub fn standard(q: f64, suite: TestSuite, input_norm: InputNorm) -> Self {
        OscConfig {
            q,
            lambdas: vec![8.0, 16.0, 32.0],
            suite,
            mode: OscMode::Hormander,
            input_norm,
            amplitude: AmplitudeSpec::TensorBump,
            refine: 1.0,
            spatial_spacing: SPATIAL_SPACING,
            gate: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OscRow {
    pub lambda: f64,
    pub q: f64,
    pub norm_ratio: f64,
    pub best_member: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OscReport {
    pub rows: Vec<OscRow>,
    pub fit: ScalingFit,
    pub gate_changes: Vec<(f64, f64)>,
}

/// Quadrature gate threshold on the change under grid doubling.
pub const GATE_TOL: f64 = 1e-6;

/// Largest change of the field under doubling of the `y`-grid density,
/// relative to the field's maximum, for `f ≡ 1`.
pub fn quadrature_gate(phase: &PhaseSpec, amplitude: &AmplitudeSpec, lambda: f64, refine: f64, spacing: f64) -> Result<f64> {
    let rho = phase.rho();
    let eval = |r: f64| -> Result<OscField> {
        let grid = YGrid::for_lambda(phase.m(), rho, lambda, r);
        let f = grid.values(|_| Complex64::new(1.0, 0.0));
        apply_extension(Kernel::Phase(phase), amplitude, rho, lambda, &grid, &f, spacing)
    };
    let (a, b) = (eval(refine)?, eval(2.0 * refine)?);
    let scale = a.max_abs().max(f64::MIN_POSITIVE);
    Ok(a.values.iter().zip(&b.values).map(|(u, v)| (u - v).norm()).fold(0.0, f64::max) / scale)
}

/// Ratio of norms along the λ-ladder, maximized over the suite, and the fitted slope.
pub fn norm_scaling_experiment(phase: &PhaseSpec, cfg: &OscConfig) -> Result<OscReport> {
    if !(2.0..=6.0).contains(&cfg.q) {
        return Err(invalid(format!("q must lie in [2, 6], got {}", cfg.q)));
    }
    if cfg.lambdas.iter().any(|&l| !(8.0..=64.0).contains(&l)) {
        return Err(invalid("lambda ladder must lie in [8, 64]"));
    }
    let rho = phase.rho();
    let m = phase.m();
    let mut gate_changes = Vec::new();
    if cfg.gate {
        for &lambda in cfg.lambdas.iter().filter(|&&l| l <= 32.0) {
            let change = quadrature_gate(phase, &cfg.amplitude, lambda, cfg.refine, cfg.spatial_spacing)?;
            gate_changes.push((lambda, change));
            if change >= GATE_TOL {
                return Err(Error::QuadratureGate(change));
            }
        }
    }
    let members = cfg.suite.members(m, rho);
    let mut rows = Vec::with_capacity(cfg.lambdas.len());
    for &lambda in &cfg.lambdas {
        let grid = YGrid::for_lambda(m, rho, lambda, cfg.refine);
        let mut best = (0usize, 0.0f64);
        for (k, member) in members.iter().enumerate() {
            let f = grid.values(|y| Complex64::new(member.eval(y), 0.0));
            if f.iter().all(|v| v.norm() == 0.0) {
                continue;
            }
            let field = apply_propagator(Kernel::Phase(phase), &cfg.amplitude, rho, lambda, &grid, &f, cfg.spatial_spacing)?;
            let den = match cfg.mode {
                OscMode::Hormander => match cfg.input_norm {
                    InputNorm::L2 => grid.lq_norm(&f, 2.0),
                    InputNorm::LInf => grid.lq_norm(&f, f64::INFINITY),
                },
                OscMode::LocalSmoothing => {
                    let free = apply_extension(Kernel::Free, &cfg.amplitude, rho, lambda, &grid, &f, cfg.spatial_spacing)?;
                    initial_slice_norm(&free, cfg.q)
                }
            };
            let ratio = field.lq_norm(cfg.q) / den;
            if ratio > best.1 {
                best = (k, ratio);
            }
        }
        rows.push(OscRow { lambda, q: cfg.q, norm_ratio: best.1, best_member: best.0 });
    }
    let fit = fit_scaling(&rows.iter().map(|r| (r.lambda, r.norm_ratio)).collect::<Vec<_>>())?;
    Ok(OscReport { rows, fit, gate_changes })
}

/// `L^q` norm of the `t = 0` slice of a field.
fn initial_slice_norm(field: &OscField, q: f64) -> f64 {
    let nx = field.axis.len();
    let slice = nx.pow(field.m as u32);
    let t0 = nx / 2;
    let vals = &field.values[t0 * slice..(t0 + 1) * slice];
    let h = if nx > 1 { field.axis[1] - field.axis[0] } else { 1.0 };
    (vals.iter().map(|v| v.norm().powf(q)).sum::<f64>() * h.powi(field.m as i32)).powf(1.0 / q)
}
