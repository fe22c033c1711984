//! Phase functions `φ(x, t; y)` on `𝔻ⁿ_ρ = B(0,ρ) × (−ρ,ρ) × B(0,ρ)`.
//!
//! Coordinates follow one convention everywhere: `x ∈ R^{n−1}`, `t ∈ R`,
//! `y ∈ R^{n−1}`. Polynomial phases (every builtin except the compressed
//! example) are stored as a [`MultiPoly`] in the variables
//! `(x₁ … x_{n−1}, t, y₁ … y_{n−1})` with all needed partial derivatives
//! precomputed, so every derivative reported here is exact.

pub mod counterexample;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg;
use crate::poly::MultiPoly;
use crate::sampling;
use crate::taylor::Taylor;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum PhaseKind {
    ConstCoeff,
    BourgainStar,
    Counterexample,
    TranslationInvariantPoly,
    Custom,
}

impl FromStr for PhaseKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let key: String = s.chars().filter(|c| *c != '_' && *c != '-').flat_map(char::to_lowercase).collect();
        Ok(match key.as_str() {
            "constcoeff" | "const" => PhaseKind::ConstCoeff,
            "bourgainstar" | "bourgain" | "star" => PhaseKind::BourgainStar,
            "counterexample" => PhaseKind::Counterexample,
            "translationinvariantpoly" | "translationinvariant" => PhaseKind::TranslationInvariantPoly,
            "custom" => PhaseKind::Custom,
            _ => return Err(Error::Config(format!("unknown phase kind `{s}`"))),
        })
    }
}

impl fmt::Display for PhaseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl<'de> Deserialize<'de> for PhaseKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

pub const DEFAULT_RHO: f64 = 0.5;

/// Exact derivatives of a polynomial phase.
#[derive(Clone, Debug)]
struct PolyPhase {
    phi: MultiPoly,
    dy: Vec<MultiPoly>,
    dyy: Vec<Vec<MultiPoly>>,
    dxy: Vec<Vec<MultiPoly>>,
    dty: Vec<MultiPoly>,
    /// `dyyz[k]` is `∂²_yy ∂_{z_k} φ` for `z = (x, t)`.
    dyyz: Vec<Vec<Vec<MultiPoly>>>,
    /// `∂_y ψ(t; y)` in the variables `(t, y)` for translation-invariant phases.
    grad_psi: Option<Vec<MultiPoly>>,
}

impl PolyPhase {
    fn new(n: usize, phi: MultiPoly, psi: Option<&MultiPoly>) -> Self {
        let m = n - 1;
        let yi = |j: usize| n + j;
        let dy: Vec<MultiPoly> = (0..m).map(|j| phi.partial(yi(j))).collect();
        let dyy: Vec<Vec<MultiPoly>> =
            (0..m).map(|j| (0..m).map(|k| dy[j].partial(yi(k))).collect()).collect();
        let dxy = (0..m).map(|i| (0..m).map(|j| dy[j].partial(i)).collect()).collect();
        let dty = (0..m).map(|j| dy[j].partial(m)).collect();
        let dyyz = (0..n)
            .map(|k| dyy.iter().map(|row| row.iter().map(|p| p.partial(k)).collect()).collect())
            .collect();
        let grad_psi = psi.map(|p| (0..m).map(|j| p.partial(1 + j)).collect());
        PolyPhase { phi, dy, dyy, dxy, dty, dyyz, grad_psi }
    }
}

#[derive(Clone, Debug)]
enum Repr {
    Poly(Box<PolyPhase>),
    Counterexample,
}

/// A phase function with its kind tag, dimension and domain radius.
#[derive(Clone, Debug)]
pub struct PhaseSpec {
    kind: PhaseKind,
    n: usize,
    rho: f64,
    params: serde_json::Value,
    repr: Repr,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPhase {
    kind: PhaseKind,
    n: usize,
    #[serde(default = "empty_params")]
    params: serde_json::Value,
    #[serde(default = "default_rho")]
    rho: f64,
}

fn empty_params() -> serde_json::Value {
    serde_json::json!({})
}

fn default_rho() -> f64 {
    DEFAULT_RHO
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NoParams {}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PsiParams {
    psi: MultiPoly,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PhiParams {
    phi: MultiPoly,
}

impl Serialize for PhaseSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RawPhase { kind: self.kind, n: self.n, params: self.params.clone(), rho: self.rho }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for PhaseSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawPhase::deserialize(d)?;
        PhaseSpec::from_parts(raw.kind, raw.n, raw.params, raw.rho).map_err(serde::de::Error::custom)
    }
}

fn bilinear_xy(n: usize) -> MultiPoly {
    let v = 2 * n - 1;
    let mut p = MultiPoly::zero(v);
    for j in 0..n - 1 {
        p = p.add(&MultiPoly::var(v, j).mul(&MultiPoly::var(v, n + j)));
    }
    p
}

/// Lifts `ψ(t; y)` (variables `(t, y)`) to the full variable list `(x, t, y)`.
fn lift_psi(n: usize, psi: &MultiPoly) -> MultiPoly {
    let v = 2 * n - 1;
    let terms = psi
        .terms
        .iter()
        .map(|t| {
            let mut exps = vec![0; n - 1];
            exps.extend_from_slice(&t.exps);
            (exps, t.coef)
        })
        .collect();
    MultiPoly::new(v, terms).expect("lifted polynomial is well formed")
}

fn const_coeff_psi(n: usize) -> MultiPoly {
    let terms = (0..n - 1)
        .map(|j| {
            let mut e = vec![0; n];
            e[0] = 1;
            e[1 + j] = 2;
            (e, 1.0)
        })
        .collect();
    MultiPoly::new(n, terms).unwrap()
}

/// `½⟨A(t)y, y⟩` with `A(t)` block diagonal in blocks `[[0, t], [t, t²]]`.
fn bourgain_psi(n: usize) -> MultiPoly {
    let mut terms = Vec::new();
    for b in 0..(n - 1) / 2 {
        let (i, j) = (1 + 2 * b, 2 + 2 * b);
        let mut e = vec![0; n];
        e[0] = 1;
        e[i] = 1;
        e[j] = 1;
        terms.push((e, 1.0));
        let mut e = vec![0; n];
        e[0] = 2;
        e[j] = 2;
        terms.push((e, 0.5));
    }
    MultiPoly::new(n, terms).unwrap()
}

impl PhaseSpec {
    pub fn from_parts(kind: PhaseKind, n: usize, params: serde_json::Value, rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(Error::Config(format!("rho must lie in (0, 1], got {rho}")));
        }
        if !(2..=5).contains(&n) {
            return Err(Error::Config(format!("dimension n must lie in 2..=5, got {n}")));
        }
        let no_params = |p: &serde_json::Value| -> Result<()> {
            serde_json::from_value::<NoParams>(p.clone()).map_err(|e| Error::Config(format!("{kind} params: {e}")))?;
            Ok(())
        };
        let poly = |psi: MultiPoly| -> Repr {
            let phi = bilinear_xy(n).add(&lift_psi(n, &psi));
            Repr::Poly(Box::new(PolyPhase::new(n, phi, Some(&psi))))
        };
        let repr = match kind {
            PhaseKind::ConstCoeff => {
                no_params(&params)?;
                poly(const_coeff_psi(n))
            }
            PhaseKind::BourgainStar => {
                no_params(&params)?;
                if n % 2 == 0 {
                    return Err(Error::Config(format!("BourgainStar needs odd n, got {n}")));
                }
                poly(bourgain_psi(n))
            }
            PhaseKind::Counterexample => {
                no_params(&params)?;
                if n != 3 {
                    return Err(Error::Config(format!("Counterexample is defined for n = 3 only, got {n}")));
                }
                Repr::Counterexample
            }
            PhaseKind::TranslationInvariantPoly => {
                let p: PsiParams = serde_json::from_value(params.clone())
                    .map_err(|e| Error::Config(format!("TranslationInvariantPoly params: {e}")))?;
                p.psi.validate().map_err(|e| Error::Config(e.to_string()))?;
                if p.psi.vars != n {
                    return Err(Error::Config(format!(
                        "psi must have n = {n} variables (t, y1..y{}), got {}",
                        n - 1,
                        p.psi.vars
                    )));
                }
                if p.psi.terms.iter().any(|t| t.exps[0] == 0) {
                    return Err(Error::Config("psi(0; y) must vanish: every term needs a positive power of t".into()));
                }
                poly(p.psi.simplified())
            }
            PhaseKind::Custom => {
                let p: PhiParams =
                    serde_json::from_value(params.clone()).map_err(|e| Error::Config(format!("Custom params: {e}")))?;
                p.phi.validate().map_err(|e| Error::Config(e.to_string()))?;
                if p.phi.vars != 2 * n - 1 {
                    return Err(Error::Config(format!(
                        "phi must have 2n - 1 = {} variables (x, t, y), got {}",
                        2 * n - 1,
                        p.phi.vars
                    )));
                }
                Repr::Poly(Box::new(PolyPhase::new(n, p.phi.simplified(), None)))
            }
        };
        Ok(PhaseSpec { kind, n, rho, params, repr })
    }

    pub fn const_coeff(n: usize) -> Self {
        Self::from_parts(PhaseKind::ConstCoeff, n, empty_params(), DEFAULT_RHO).expect("valid builtin")
    }

    pub fn bourgain_star(n: usize) -> Result<Self> {
        Self::from_parts(PhaseKind::BourgainStar, n, empty_params(), DEFAULT_RHO)
    }

    pub fn counterexample() -> Self {
        Self::from_parts(PhaseKind::Counterexample, 3, empty_params(), DEFAULT_RHO).expect("valid builtin")
    }

    pub fn translation_invariant(n: usize, psi: MultiPoly) -> Result<Self> {
        Self::from_parts(PhaseKind::TranslationInvariantPoly, n, serde_json::json!({ "psi": psi }), DEFAULT_RHO)
    }

    pub fn custom(n: usize, phi: MultiPoly) -> Result<Self> {
        Self::from_parts(PhaseKind::Custom, n, serde_json::json!({ "phi": phi }), DEFAULT_RHO)
    }

    /// Builtin phase by kind name with default parameters (n = 3).
    pub fn builtin(name: &str) -> Result<Self> {
        match name.parse::<PhaseKind>()? {
            PhaseKind::ConstCoeff => Ok(Self::const_coeff(3)),
            PhaseKind::BourgainStar => Self::bourgain_star(3),
            PhaseKind::Counterexample => Ok(Self::counterexample()),
            k => Err(Error::Config(format!("{k} needs explicit params; supply a phase JSON object"))),
        }
    }

    pub fn with_rho(self, rho: f64) -> Result<Self> {
        Self::from_parts(self.kind, self.n, self.params, rho)
    }

    pub fn kind(&self) -> PhaseKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Dimension of `x`, `y` and `ω`.
    pub fn m(&self) -> usize {
        self.n - 1
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn params(&self) -> &serde_json::Value {
        &self.params
    }

    /// The phase polynomial in `(x, t, y)`, when the phase is polynomial.
    pub fn polynomial(&self) -> Option<&MultiPoly> {
        match &self.repr {
            Repr::Poly(p) => Some(&p.phi),
            Repr::Counterexample => None,
        }
    }

    /// Whether `φ − ⟨x,y⟩` is a function of `(t, y)` only.
    pub fn is_translation_invariant(&self) -> bool {
        match &self.repr {
            Repr::Counterexample => true,
            Repr::Poly(p) => p.grad_psi.is_some(),
        }
    }

    /// `I_φ = [−ρ, ρ]`.
    pub fn t_interval(&self) -> (f64, f64) {
        (-self.rho, self.rho)
    }

    fn check(&self, x: &[f64], t: f64, y: &[f64]) -> Result<()> {
        let m = self.m();
        if x.len() != m || y.len() != m {
            return Err(Error::Domain(format!(
                "expected x and y of length {m}, got {} and {}",
                x.len(),
                y.len()
            )));
        }
        if !t.is_finite() || x.iter().chain(y).any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite coordinate".into()));
        }
        if let Repr::Counterexample = self.repr {
            counterexample::check(t, y)?;
        }
        Ok(())
    }

    fn point(&self, x: &[f64], t: f64, y: &[f64]) -> Vec<f64> {
        let mut z = Vec::with_capacity(2 * self.n - 1);
        z.extend_from_slice(x);
        z.push(t);
        z.extend_from_slice(y);
        z
    }

    pub fn value(&self, x: &[f64], t: f64, y: &[f64]) -> Result<f64> {
        self.check(x, t, y)?;
        Ok(match &self.repr {
            Repr::Poly(p) => p.phi.eval(&self.point(x, t, y)),
            Repr::Counterexample => counterexample::value(x, t, y),
        })
    }

    /// `∂_y φ(x, t; y)`.
    pub fn grad_y(&self, x: &[f64], t: f64, y: &[f64]) -> Result<Vec<f64>> {
        self.check(x, t, y)?;
        Ok(match &self.repr {
            Repr::Poly(p) => {
                let z = self.point(x, t, y);
                p.dy.iter().map(|q| q.eval(&z)).collect()
            }
            Repr::Counterexample => {
                let g = counterexample::grad_psi(t, y);
                vec![x[0] + g[0], x[1] + g[1]]
            }
        })
    }

    pub fn hess_yy(&self, x: &[f64], t: f64, y: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.check(x, t, y)?;
        Ok(match &self.repr {
            Repr::Poly(p) => {
                let z = self.point(x, t, y);
                eval_matrix(&p.dyy, &z)
            }
            Repr::Counterexample => counterexample::hess_yy(t, y),
        })
    }

    /// `H[i][j] = ∂²φ / ∂x_i ∂y_j`.
    pub fn hess_xy(&self, x: &[f64], t: f64, y: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.check(x, t, y)?;
        Ok(match &self.repr {
            Repr::Poly(p) => eval_matrix(&p.dxy, &self.point(x, t, y)),
            Repr::Counterexample => vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        })
    }

    /// `∂_t ∂_y φ`.
    pub fn mixed_ty(&self, x: &[f64], t: f64, y: &[f64]) -> Result<Vec<f64>> {
        self.check(x, t, y)?;
        Ok(match &self.repr {
            Repr::Poly(p) => {
                let z = self.point(x, t, y);
                p.dty.iter().map(|q| q.eval(&z)).collect()
            }
            Repr::Counterexample => counterexample::mixed_ty(t, y),
        })
    }

    /// `∂²_yy ∂_{z_k} φ` where `z = (x₁ … x_{n−1}, t)`.
    pub fn hess_yy_dz(&self, k: usize, x: &[f64], t: f64, y: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.check(x, t, y)?;
        Ok(match &self.repr {
            Repr::Poly(p) => eval_matrix(&p.dyyz[k], &self.point(x, t, y)),
            Repr::Counterexample => {
                if k == self.m() {
                    counterexample::hess_yy_dt(t, y)
                } else {
                    vec![vec![0.0; 2]; 2]
                }
            }
        })
    }

    /// `∂_y ψ(t; y)` for translation-invariant phases.
    pub fn grad_psi(&self, t: f64, y: &[f64]) -> Result<Option<Vec<f64>>> {
        self.check(&vec![0.0; self.m()], t, y)?;
        Ok(match &self.repr {
            Repr::Counterexample => Some(counterexample::grad_psi(t, y).to_vec()),
            Repr::Poly(p) => p.grad_psi.as_ref().map(|g| {
                let mut z = vec![t];
                z.extend_from_slice(y);
                g.iter().map(|q| q.eval(&z)).collect()
            }),
        })
    }

    /// Power series of `∂_y ψ(t; y)` in `t`, for translation-invariant phases.
    pub fn grad_psi_taylor(&self, t: Taylor, y: &[f64]) -> Option<Vec<Taylor>> {
        match &self.repr {
            Repr::Counterexample => Some(counterexample::grad_psi_taylor(t, y)),
            Repr::Poly(p) => p.grad_psi.as_ref().map(|g| {
                let mut z = vec![t];
                z.extend(y.iter().map(|&v| Taylor::constant(v, t.len())));
                g.iter().map(|q| q.eval_taylor(&z)).collect()
            }),
        }
    }

    fn taylor_point(&self, x: &[Taylor], t: Taylor, y: &[f64]) -> Vec<Taylor> {
        let mut z = x.to_vec();
        z.push(t);
        z.extend(y.iter().map(|&v| Taylor::constant(v, t.len())));
        z
    }

    /// `∂_y φ(x(t), t; y)` as power series in `t`.
    pub fn grad_y_taylor(&self, x: &[Taylor], t: Taylor, y: &[f64]) -> Vec<Taylor> {
        match &self.repr {
            Repr::Poly(p) => {
                let z = self.taylor_point(x, t, y);
                p.dy.iter().map(|q| q.eval_taylor(&z)).collect()
            }
            Repr::Counterexample => {
                let g = counterexample::grad_psi_taylor(t, y);
                vec![x[0] + g[0], x[1] + g[1]]
            }
        }
    }

    /// `∂²_yy φ(x(t), t; y)` as power series in `t`.
    pub fn hess_yy_taylor(&self, x: &[Taylor], t: Taylor, y: &[f64]) -> Vec<Vec<Taylor>> {
        match &self.repr {
            Repr::Poly(p) => {
                let z = self.taylor_point(x, t, y);
                p.dyy.iter().map(|row| row.iter().map(|q| q.eval_taylor(&z)).collect()).collect()
            }
            Repr::Counterexample => counterexample::hess_yy_taylor(t, y),
        }
    }

    pub fn jet(&self, x: &[f64], t: f64, y: &[f64]) -> Result<PhaseJet> {
        Ok(PhaseJet {
            value: self.value(x, t, y)?,
            grad_y: self.grad_y(x, t, y)?,
            hess_yy: self.hess_yy(x, t, y)?,
            hess_xy: self.hess_xy(x, t, y)?,
            gauss: self.gauss_map(x, t, y)?,
        })
    }

    /// Unnormalized Gauss map: the wedge of the vectors `∂_{y_j} ∂_{(x,t)} φ`.
    pub fn gauss_raw(&self, x: &[f64], t: f64, y: &[f64]) -> Result<Vec<f64>> {
        let hxy = self.hess_xy(x, t, y)?;
        let hty = self.mixed_ty(x, t, y)?;
        let m = self.m();
        let rows: Vec<Vec<f64>> = (0..m)
            .map(|j| {
                let mut r: Vec<f64> = (0..m).map(|i| hxy[i][j]).collect();
                r.push(hty[j]);
                r
            })
            .collect();
        Ok(linalg::wedge(&rows))
    }

    /// The unit normal `G(x, t; y)`, oriented so its last coordinate is nonnegative.
    pub fn gauss_map(&self, x: &[f64], t: f64, y: &[f64]) -> Result<Vec<f64>> {
        let g0 = self.gauss_raw(x, t, y)?;
        let nrm = linalg::norm(&g0);
        if nrm < 1e-12 {
            return Err(Error::Degenerate(format!("|G0| = {nrm:e} at t = {t}")));
        }
        let sign = if *g0.last().unwrap() < 0.0 { -1.0 } else { 1.0 };
        Ok(g0.into_iter().map(|v| sign * v / nrm).collect())
    }

    /// The matrix `∂²_yy ⟨∂_{(x,t)} φ(x,t;y), G(x,t;y₀)⟩` at `y = y₀`.
    pub fn curvature_form(&self, x: &[f64], t: f64, y0: &[f64]) -> Result<Vec<Vec<f64>>> {
        let g = self.gauss_map(x, t, y0)?;
        let m = self.m();
        let mut out = vec![vec![0.0; m]; m];
        for (k, &gk) in g.iter().enumerate() {
            if gk == 0.0 {
                continue;
            }
            let h = self.hess_yy_dz(k, x, t, y0)?;
            for i in 0..m {
                for j in 0..m {
                    out[i][j] += gk * h[i][j];
                }
            }
        }
        Ok(out)
    }

    /// Deterministic sample points `(x, t, y)` filling `𝔻ⁿ_ρ`.
    pub fn domain_samples(&self, count: usize, seed: u64) -> Vec<(Vec<f64>, f64, Vec<f64>)> {
        let m = self.m();
        let dim = 2 * m + 1;
        let offset = seed.wrapping_mul(0x9E37_79B9) % 1_000_003;
        let mut out = Vec::with_capacity(count);
        let mut i = offset;
        while out.len() < count {
            let u: Vec<f64> = sampling::halton(i, dim).into_iter().map(|v| 2.0 * v - 1.0).collect();
            i += 1;
            let (xs, rest) = u.split_at(m);
            let (ts, ys) = rest.split_at(1);
            if linalg::norm(xs) > 1.0 || linalg::norm(ys) > 1.0 {
                continue;
            }
            let r = self.rho;
            out.push((xs.iter().map(|v| v * r).collect(), ts[0] * r, ys.iter().map(|v| v * r).collect()));
        }
        out
    }

    pub fn verify_nondegeneracy(&self, samples: usize, seed: u64) -> Result<NondegeneracyReport> {
        if samples == 0 {
            return Err(invalid("samples must be >= 1"));
        }
        let pts = self.domain_samples(samples, seed);
        let vals = crate::exec::try_map_slice(&pts, |(x, t, y)| -> Result<(f64, f64)> {
            let h1 = linalg::det(&self.hess_xy(x, *t, y)?).abs();
            let h2 = linalg::det(&self.curvature_form(x, *t, y)?).abs();
            Ok((h1, h2))
        })?;
        let min_h1 = vals.iter().map(|v| v.0).fold(f64::INFINITY, f64::min);
        let min_h2 = vals.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
        Ok(NondegeneracyReport {
            samples,
            min_det_hess_xy: min_h1,
            min_det_curvature: min_h2,
            h1_ok: min_h1 > 1e-8,
            h2_ok: min_h2 > 1e-8,
        })
    }
}

fn eval_matrix(ps: &[Vec<MultiPoly>], z: &[f64]) -> Vec<Vec<f64>> {
    ps.iter().map(|row| row.iter().map(|q| q.eval(z)).collect()).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseJet {
    pub value: f64,
    pub grad_y: Vec<f64>,
    pub hess_yy: Vec<Vec<f64>>,
    pub hess_xy: Vec<Vec<f64>>,
    pub gauss: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NondegeneracyReport {
    pub samples: usize,
    pub min_det_hess_xy: f64,
    pub min_det_curvature: f64,
    pub h1_ok: bool,
    pub h2_ok: bool,
}
