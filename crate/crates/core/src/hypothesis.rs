//! Kakeya and Nikodym non-compression checkers.
//!
//! Both hypotheses ask whether a distinguished minor of `∂²_yy φ` is a
//! linear combination of its sub-minors as functions of `t`. Dependence is
//! decided twice, once by a least-squares residual on a Chebyshev grid and
//! once by the rank of Taylor coefficient matrices, and the two answers are
//! compared.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::exec;
use crate::exponents::exponent_table;
use crate::family::{taylor_rank, FunctionFamily};
use crate::linalg;
use crate::phase::PhaseSpec;
use crate::sampling;
use crate::taylor::{Taylor, MAX_LEN};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Hypothesis {
    KakeyaI,
    NikodymII,
    WeakI,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Holds,
    Fails,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl Verdict {
    pub fn from_fraction(frac: f64) -> Verdict {
        if frac < 0.01 {
            Verdict::Holds
        } else if frac > 0.99 {
            Verdict::Fails
        } else {
            Verdict::Inconclusive
        }
    }
}

/// A sample at which the distinguished minor was found to be dependent,
/// with the coefficients that realize the dependence.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub point: Vec<f64>,
    pub mu: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub hypothesis: Hypothesis,
    pub verdict: Verdict,
    pub exceptional_fraction: f64,
    pub rank: Option<usize>,
    pub rank_constant: Option<bool>,
    pub samples: usize,
    pub seed: u64,
    #[serde(skip)]
    pub per_sample_residuals: Vec<f64>,
    /// Samples where the residual test and the Taylor-rank test disagree.
    #[serde(skip)]
    pub method_disagreements: usize,
    #[serde(skip)]
    pub rank_converged: Option<bool>,
    #[serde(skip)]
    pub witness: Option<Witness>,
}

fn subsets(set: &[usize], k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    if set.len() < k {
        return vec![];
    }
    let mut out: Vec<Vec<usize>> = subsets(&set[1..], k - 1)
        .into_iter()
        .map(|mut s| {
            s.insert(0, set[0]);
            s
        })
        .collect();
    out.extend(subsets(&set[1..], k));
    out
}

/// `(α, β)` followed by every other pair `(α′, β′) ⊆ α × β` with
/// `0 < |α′| = |β′|`, smallest minors first.
pub fn minor_index_pairs(alpha: &[usize], beta: &[usize]) -> Vec<(Vec<usize>, Vec<usize>)> {
    let mut out = vec![(alpha.to_vec(), beta.to_vec())];
    for k in 1..=alpha.len().min(beta.len()) {
        for a in subsets(alpha, k) {
            for b in subsets(beta, k) {
                if (a.as_slice(), b.as_slice()) != (alpha, beta) {
                    out.push((a.clone(), b));
                }
            }
        }
    }
    out
}

/// Determinant of a small matrix of power series by cofactor expansion.
pub fn det_taylor(m: &[Vec<Taylor>]) -> Taylor {
    match m.len() {
        0 => Taylor::constant(1.0, MAX_LEN),
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        n => {
            let mut acc = m[0][0] * 0.0;
            for j in 0..n {
                let sub: Vec<Vec<Taylor>> = m[1..]
                    .iter()
                    .map(|row| row.iter().enumerate().filter(|(c, _)| *c != j).map(|(_, v)| *v).collect())
                    .collect();
                let term = m[0][j] * det_taylor(&sub);
                acc = if j % 2 == 0 { acc + term } else { acc - term };
            }
            acc
        }
    }
}

fn label(a: &[usize], b: &[usize]) -> String {
    let f = |s: &[usize]| s.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(",");
    format!("[{}|{}]", f(a), f(b))
}

type HessJet = Arc<dyn Fn(f64, usize) -> Result<Vec<Vec<Taylor>>> + Send + Sync>;

/// The minors `det [H(t)]_{α′,β′}` as a function family, distinguished minor first.
pub fn minor_family(hess: HessJet, alpha: &[usize], beta: &[usize]) -> FunctionFamily {
    let pairs = minor_index_pairs(alpha, beta);
    let labels = pairs.iter().map(|(a, b)| label(a, b)).collect();
    FunctionFamily::new(
        labels,
        Arc::new(move |s, len| {
            let h = hess(s, len)?;
            Ok(pairs
                .iter()
                .map(|(a, b)| {
                    let sub: Vec<Vec<Taylor>> = a.iter().map(|&i| b.iter().map(|&j| h[i][j]).collect()).collect();
                    det_taylor(&sub)
                })
                .collect())
        }),
    )
}

/// Default distinguished index set `{1, …, d_crit(n)}`.
pub fn default_minor(phase: &PhaseSpec) -> Result<Vec<usize>> {
    let d = exponent_table(phase.n())?.d_crit.min(phase.m());
    Ok((0..d).collect())
}

fn check_minor(phase: &PhaseSpec, idx: &[usize]) -> Result<()> {
    let m = phase.m();
    if idx.is_empty() || idx.iter().any(|&i| i >= m) {
        return Err(invalid(format!("minor indices {idx:?} out of range for m = {m}")));
    }
    Ok(())
}

/// Minors of `∂²_yy φ(0, t; y)` as functions of `t`.
pub fn kakeya_family(phase: &PhaseSpec, y: &[f64], alpha: &[usize], beta: &[usize]) -> Result<FunctionFamily> {
    check_minor(phase, alpha)?;
    check_minor(phase, beta)?;
    let p = phase.clone();
    let y = y.to_vec();
    phase.hess_yy(&vec![0.0; phase.m()], 0.0, &y)?;
    let hess: HessJet = Arc::new(move |s, len| {
        p.hess_yy(&vec![0.0; p.m()], s, &y)?;
        let x = vec![Taylor::constant(0.0, len); p.m()];
        Ok(p.hess_yy_taylor(&x, Taylor::variable(s, len), &y))
    });
    Ok(minor_family(hess, alpha, beta))
}

/// Minors of `∂²_yy φ(Ψ(ω; t; y), t; y)` as functions of `t`.
pub fn nikodym_family(phase: &PhaseSpec, omega: &[f64], y: &[f64], alpha: &[usize], beta: &[usize]) -> Result<FunctionFamily> {
    check_minor(phase, alpha)?;
    check_minor(phase, beta)?;
    let p = phase.clone();
    let (omega, y) = (omega.to_vec(), y.to_vec());
    let hess: HessJet = Arc::new(move |s, len| {
        let x = crate::curve::curve_taylor(&p, &omega, s, &y, len)?;
        Ok(p.hess_yy_taylor(&x, Taylor::variable(s, len), &y))
    });
    Ok(minor_family(hess, alpha, beta))
}

/// Outcome of testing whether `target` lies in the span of `basis`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpanTest {
    pub relative_residual: f64,
    pub mu: Vec<f64>,
}

/// Least squares of `target` against the columns on a common grid;
/// the residual is relative to `|target|`.
pub fn span_test(target: &[f64], columns: &[Vec<f64>]) -> SpanTest {
    let rows = target.len();
    let a = DMatrix::from_fn(rows, columns.len(), |i, j| columns[j][i]);
    let b = DVector::from_column_slice(target);
    let (mu, r) = linalg::lstsq(&a, &b);
    let norm = b.norm();
    SpanTest { relative_residual: if norm > 0.0 { r / norm } else { 0.0 }, mu: mu.as_slice().to_vec() }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KakeyaConfig {
    pub y_samples: usize,
    pub t_points: usize,
    pub tol: f64,
    pub seed: u64,
    pub alpha: Option<Vec<usize>>,
    pub beta: Option<Vec<usize>>,
}

impl Default for KakeyaConfig {
    fn default() -> Self {
        KakeyaConfig { y_samples: 10_000, t_points: 257, tol: 1e-8, seed: 0, alpha: None, beta: None }
    }
}

struct Dependence {
    residual: f64,
    dependent: bool,
    rank_dependent: bool,
    mu: Vec<f64>,
}

fn dependence_at(fam: &FunctionFamily, ts: &[f64], tol: f64) -> Result<Dependence> {
    let k = fam.len();
    let mut cols = vec![Vec::with_capacity(ts.len()); k];
    for &t in ts {
        for (c, v) in cols.iter_mut().zip(fam.values(t)?) {
            c.push(v);
        }
    }
    let test = span_test(&cols[0], &cols[1..]);
    let mid = 0.5 * (ts[0] + ts[ts.len() - 1]);
    let d = (2 * (k + 1)).min(MAX_LEN - 1);
    let all = taylor_rank(fam, mid, d, tol)?;
    let rest = taylor_rank(&fam.select(&(1..k).collect::<Vec<_>>()), mid, d, tol)?;
    Ok(Dependence {
        residual: test.relative_residual,
        dependent: test.relative_residual < tol,
        rank_dependent: all == rest,
        mu: test.mu,
    })
}

fn require_translation_invariant(phase: &PhaseSpec) -> Result<()> {
    if !phase.is_translation_invariant() {
        return Err(Error::Precondition(format!("{:?} phase is not translation-invariant", phase.kind())));
    }
    Ok(())
}

fn kakeya_report(
    hypothesis: Hypothesis,
    phase: &PhaseSpec,
    ys: &[Vec<f64>],
    cfg: &KakeyaConfig,
) -> Result<HypothesisReport> {
    require_translation_invariant(phase)?;
    let default = default_minor(phase)?;
    let alpha = cfg.alpha.clone().unwrap_or_else(|| default.clone());
    let beta = cfg.beta.clone().unwrap_or(default);
    let (a, b) = phase.t_interval();
    let ts = sampling::chebyshev(a, b, cfg.t_points.max(2));
    let deps = exec::try_map_slice(ys, |y| dependence_at(&kakeya_family(phase, y, &alpha, &beta)?, &ts, cfg.tol))?;
    let exceptional = deps.iter().filter(|d| d.dependent).count();
    let frac = exceptional as f64 / ys.len().max(1) as f64;
    let witness = ys.iter().zip(&deps).find(|(_, d)| d.dependent).map(|(y, d)| Witness { point: y.clone(), mu: d.mu.clone() });
    Ok(HypothesisReport {
        hypothesis,
        verdict: Verdict::from_fraction(frac),
        exceptional_fraction: frac,
        rank: None,
        rank_constant: None,
        samples: ys.len(),
        seed: cfg.seed,
        per_sample_residuals: deps.iter().map(|d| d.residual).collect(),
        method_disagreements: deps.iter().filter(|d| d.dependent != d.rank_dependent).count(),
        rank_converged: None,
        witness,
    })
}

/// Hypothesis I: the fraction of sampled `y ∈ B(0, ρ)` at which the
/// distinguished minor of `∂²_yy φ(0, ·; y)` is a combination of the others.
pub fn check_hypothesis_i(phase: &PhaseSpec, cfg: &KakeyaConfig) -> Result<HypothesisReport> {
    let mut rng = sampling::rng(cfg.seed);
    let ys: Vec<Vec<f64>> = (0..cfg.y_samples).map(|_| sampling::random_ball(&mut rng, phase.m(), phase.rho())).collect();
    kakeya_report(Hypothesis::KakeyaI, phase, &ys, cfg)
}

/// The weak form of Hypothesis I, tested at `y = 0` only.
pub fn check_weak_hypothesis_i(phase: &PhaseSpec, cfg: &KakeyaConfig) -> Result<HypothesisReport> {
    kakeya_report(Hypothesis::WeakI, phase, &[vec![0.0; phase.m()]], cfg)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NikodymConfig {
    /// Degree of the Taylor truncations in part a).
    pub d: usize,
    /// Rows of the derivative matrix in part b); defaults to `2(k + 1)` for `k` minors.
    pub rows: Option<usize>,
    pub samples: usize,
    pub t_points: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for NikodymConfig {
    fn default() -> Self {
        NikodymConfig { d: 4, rows: None, samples: 2_000, t_points: 257, tol: 1e-8, seed: 0 }
    }
}

/// Evaluates `Σ c_k (t − s)^k`.
fn eval_shifted(c: &[f64], s: f64, t: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ck| acc * (t - s) + ck)
}

struct NikodymSample {
    residual: f64,
    exceptional: bool,
    rank: usize,
    rank_doubled: usize,
}

/// Hypothesis II for the sub-minor family of `phase` at the default
/// distinguished minor.
pub fn check_hypothesis_ii(phase: &PhaseSpec, cfg: &NikodymConfig) -> Result<HypothesisReport> {
    let idx = default_minor(phase)?;
    let builder = |omega: &[f64], y: &[f64]| nikodym_family(phase, omega, y, &idx, &idx);
    check_hypothesis_ii_with(&builder, phase.m(), phase.rho(), cfg)
}

/// Hypothesis II for an arbitrary family builder `(ω, y) ↦ family`. The first
/// sample is `(ω, y, s) = 0`; the rest are drawn from `B(0,ρ)² × (−ρ, ρ)`.
pub fn check_hypothesis_ii_with(
    builder: &(dyn Fn(&[f64], &[f64]) -> Result<FunctionFamily> + Sync),
    m: usize,
    rho: f64,
    cfg: &NikodymConfig,
) -> Result<HypothesisReport> {
    use rand::Rng;
    if cfg.d < 2 {
        return Err(invalid(format!("truncation degree d = {} must be at least 2", cfg.d)));
    }
    if cfg.samples == 0 {
        return Err(invalid("need at least one sample"));
    }
    let mut rng = sampling::rng(cfg.seed);
    let mut pts = vec![(vec![0.0; m], vec![0.0; m], 0.0)];
    while pts.len() < cfg.samples {
        let omega = sampling::random_ball(&mut rng, m, rho);
        let y = sampling::random_ball(&mut rng, m, rho);
        pts.push((omega, y, rng.random_range(-rho..rho)));
    }
    let ts = sampling::chebyshev(-rho, rho, cfg.t_points.max(2));
    let rows_cfg = cfg.rows;
    if let Some(r) = rows_cfg {
        if r <= cfg.d || 2 * r > MAX_LEN {
            return Err(invalid(format!("rows = {r} must exceed d = {} and be at most {}", cfg.d, MAX_LEN / 2)));
        }
    }
    if cfg.d + 1 > MAX_LEN {
        return Err(invalid(format!("d = {} exceeds the supported jet length", cfg.d)));
    }
    let results = exec::try_map_slice(&pts, |(omega, y, s)| -> Result<NikodymSample> {
        let fam = builder(omega, y)?;
        let k = fam.len();
        let rows = rows_cfg.unwrap_or(2 * (k + 1)).max(cfg.d + 1).min(MAX_LEN / 2);
        let jets = fam.jets(*s, cfg.d + 1)?;
        let cols: Vec<Vec<f64>> = jets.iter().map(|j| ts.iter().map(|&t| eval_shifted(j.coeffs(), *s, t)).collect()).collect();
        let test = span_test(&vec![1.0; ts.len()], &cols);
        Ok(NikodymSample {
            residual: test.relative_residual,
            exceptional: test.relative_residual < cfg.tol,
            rank: taylor_rank(&fam, *s, rows - 1, cfg.tol)?,
            rank_doubled: taylor_rank(&fam, *s, 2 * rows - 1, cfg.tol)?,
        })
    })?;
    let frac = results.iter().filter(|r| r.exceptional).count() as f64 / results.len() as f64;
    let r0 = results[0].rank;
    let constant = results.iter().all(|r| r.rank == r0);
    let verdict = match Verdict::from_fraction(frac) {
        Verdict::Holds if !constant => Verdict::Fails,
        v => v,
    };
    Ok(HypothesisReport {
        hypothesis: Hypothesis::NikodymII,
        verdict,
        exceptional_fraction: frac,
        rank: constant.then_some(r0),
        rank_constant: Some(constant),
        samples: results.len(),
        seed: cfg.seed,
        per_sample_residuals: results.iter().map(|r| r.residual).collect(),
        method_disagreements: 0,
        rank_converged: Some(results.iter().all(|r| r.rank == r.rank_doubled)),
        witness: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn quick(seed: u64) -> KakeyaConfig {
        KakeyaConfig { y_samples: 200, seed, ..Default::default() }
    }

    #[test]
    fn index_pairs_for_two_by_two() {
        let p = minor_index_pairs(&[0, 1], &[0, 1]);
        assert_eq!(p.len(), 5);
        assert_eq!(p[0], (vec![0, 1], vec![0, 1]));
        assert_eq!(p[2], (vec![0], vec![1]));
        assert_eq!(minor_index_pairs(&[0, 1, 2], &[0, 1, 2]).len(), 1 + 9 + 9);
    }

    #[test]
    fn taylor_determinant_matches_plain() {
        let t = Taylor::variable(0.3, 4);
        let m = vec![vec![t, t * t, Taylor::constant(1.0, 4)], vec![t.sin(), t, t], vec![t * 2.0, t.exp(), t * t]];
        let plain: Vec<Vec<f64>> = m.iter().map(|r| r.iter().map(|v| v.value()).collect()).collect();
        assert_relative_eq!(det_taylor(&m).value(), linalg::det(&plain), epsilon = 1e-14);
    }

    #[test]
    fn builtin_kakeya_verdicts() {
        let cc = check_hypothesis_i(&PhaseSpec::const_coeff(3), &quick(1)).unwrap();
        assert_eq!(cc.verdict, Verdict::Holds);
        let bs = check_hypothesis_i(&PhaseSpec::bourgain_star(3).unwrap(), &quick(1)).unwrap();
        assert_eq!(bs.verdict, Verdict::Fails);
        let ce = PhaseSpec::counterexample();
        let rep = check_hypothesis_i(&ce, &quick(1)).unwrap();
        assert_eq!(rep.verdict, Verdict::Fails);
        assert_eq!(rep.method_disagreements, 0);
        let w = rep.witness.unwrap();
        let y2 = w.point[1];
        for (got, want) in w.mu.iter().zip([-1.0 / y2, 0.0, 0.0, 1.0 / y2]) {
            assert_relative_eq!(*got, want, epsilon = 1e-6 * want.abs().max(1.0));
        }
        let weak = check_weak_hypothesis_i(&ce, &quick(1)).unwrap();
        assert_eq!(weak.verdict, Verdict::Holds);
    }

    #[test]
    fn nikodym_injected_constant_fails() {
        let phase = PhaseSpec::const_coeff(3);
        let one = FunctionFamily::from_members(vec![("one".to_string(), |t: Taylor| Taylor::constant(1.0, t.len()))]);
        let builder = |omega: &[f64], y: &[f64]| Ok(nikodym_family(&phase, omega, y, &[0, 1], &[0, 1])?.concat(&one));
        let cfg = NikodymConfig { samples: 20, ..Default::default() };
        let rep = check_hypothesis_ii_with(&builder, 2, 0.5, &cfg).unwrap();
        assert_eq!(rep.verdict, Verdict::Fails);
        assert_eq!(rep.exceptional_fraction, 1.0);
    }

    #[test]
    fn nikodym_builtins_hold_with_rank_two() {
        let cfg = NikodymConfig { samples: 50, ..Default::default() };
        for phase in [PhaseSpec::const_coeff(3), PhaseSpec::bourgain_star(3).unwrap()] {
            let rep = check_hypothesis_ii(&phase, &cfg).unwrap();
            assert_eq!(rep.verdict, Verdict::Holds, "{:?}", phase.kind());
            assert_eq!(rep.rank, Some(2));
            assert_eq!(rep.rank_converged, Some(true));
        }
    }
}
