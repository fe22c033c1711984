use anyhow::{anyhow, bail, Result};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use kakeya_lab::compression::{
    compressed_config, compression_lower_bound, compression_volume_scan, counterexample_box, counterexample_omega_map,
    jacobian_scan, random_polynomial_map, star_fan_witness, verify_surface_containment,
};
use kakeya_lab::exponents::exponent_table;
use kakeya_lab::fit::fit_scaling;
use kakeya_lab::grain::{circle, family_fractions, hyperplane, log_surface_grain, neighborhood_volume_fit, sphere, Grain, GrainFunction};
use kakeya_lab::grid::BoxN;
use kakeya_lab::hypothesis::{
    check_hypothesis_i, check_hypothesis_ii, check_weak_hypothesis_i, HypothesisReport, KakeyaConfig, NikodymConfig,
    Verdict,
};
use kakeya_lab::maximal::{operator_norm_lower, MaximalConfig, Operator, Search, TestSuite};
use kakeya_lab::oscillatory::{
    norm_scaling_experiment, AmplitudeSpec, InputNorm, OscConfig, OscMode, TestSuite as OscSuite, SPATIAL_SPACING,
};
use kakeya_lab::phase::{PhaseKind, PhaseSpec};
use kakeya_lab::poly::MultiPoly;
use kakeya_lab::sublevel::{
    default_mu_grid, degenerate_slice, kappa_experiment, minor_ensemble, square_vs_linear, SublevelConfig, SublevelMode,
};
use kakeya_lab::tubes::{build_family, CentreRule, Separation, TubeSampler};

use crate::output::num;
use crate::{Command, Context, Outcome};

pub fn dispatch(cmd: Command, ctx: Context) -> Result<Outcome> {
    match cmd {
        Command::PhaseInfo => phase_info(ctx),
        Command::HypothesisCheck => hypothesis(ctx),
        Command::MaximalNorm => maximal_norm(ctx, Operator::Kakeya),
        Command::NikodymNorm => maximal_norm(ctx, Operator::Nikodym),
        Command::Sublevel => sublevel(ctx),
        Command::Counterexample => counterexample(ctx),
        Command::GrainCount => grain_count(ctx),
        Command::Wongkew => wongkew(ctx),
        Command::Oscillatory => oscillatory(ctx),
    }
}

fn finish(mut ctx: Context, name: &str, summary: Value, inconclusive: bool) -> Result<Outcome> {
    ctx.out.json(name, &summary)?;
    Ok(Outcome { summary, files: ctx.out.files().to_vec(), inconclusive })
}

fn phase_or(ctx: &Context, default: fn() -> PhaseSpec) -> PhaseSpec {
    ctx.phase.clone().unwrap_or_else(default)
}

fn required_seed(ctx: &Context, what: &str) -> Result<u64> {
    ctx.seed.ok_or_else(|| anyhow!("config error: {what} is randomized and needs a seed (config `seed` or --seed)"))
}

fn dyadic(from: i32, to: i32) -> Vec<f64> {
    (from..=to).map(|k| 2f64.powi(-k)).collect()
}

// ---------------------------------------------------------------- phase-info

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct PhaseInfoKnobs {
    samples: usize,
}

impl Default for PhaseInfoKnobs {
    fn default() -> Self {
        PhaseInfoKnobs { samples: 1000 }
    }
}

fn phase_info(ctx: Context) -> Result<Outcome> {
    let k: PhaseInfoKnobs = ctx.loaded.knobs()?;
    let phase = phase_or(&ctx, || PhaseSpec::const_coeff(3));
    let seed = ctx.seed.unwrap_or(0);
    let e = exponent_table(phase.n())?;
    let nd = phase.verify_nondegeneracy(k.samples.max(1), seed)?;
    let m = phase.m();
    let jet = phase.jet(&vec![0.0; m], 0.0, &vec![0.0; m])?;
    let exps = [
        ("p_crit", e.p_crit),
        ("q_crit", e.q_crit),
        ("d_crit", e.d_crit as f64),
        ("m_crit", e.m_crit as f64),
        ("beta_at_p_crit", e.beta(e.p_crit)),
        ("s_at_p_crit", e.s(e.p_crit)),
        ("alpha_h_at_2", e.alpha_h(2.0)),
        ("alpha_h_at_q_crit", e.alpha_h(e.q_crit)),
        ("alpha_ls_at_q_crit", e.alpha_ls(e.q_crit)),
    ];
    let mut rows: Vec<Vec<String>> = exps.iter().map(|(n, v)| vec![n.to_string(), num(*v)]).collect();
    rows.push(vec!["min_det_hess_xy".into(), num(nd.min_det_hess_xy)]);
    rows.push(vec!["min_det_curvature".into(), num(nd.min_det_curvature)]);
    let mut ctx = ctx;
    ctx.out.csv("phase_info", &["quantity", "value"], &rows)?;
    let exponents: serde_json::Map<String, Value> = exps.iter().map(|(n, v)| (n.to_string(), json!(v))).collect();
    let summary = json!({
        "subcommand": "phase-info",
        "phase": phase,
        "n": e.n,
        "exponents": exponents,
        "nondegeneracy": nd,
        "jet_at_origin": jet,
        "seed": seed,
    });
    finish(ctx, "phase_info", summary, false)
}

// ---------------------------------------------------------------- hypothesis-check

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
enum HypothesisChoice {
    KakeyaI,
    WeakI,
    NikodymII,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct HypothesisKnobs {
    hypotheses: Option<Vec<HypothesisChoice>>,
    y_samples: usize,
    t_points: usize,
    tol: f64,
    d: usize,
    rows: Option<usize>,
    nikodym_samples: usize,
}

impl Default for HypothesisKnobs {
    fn default() -> Self {
        let k = KakeyaConfig::default();
        let n = NikodymConfig::default();
        HypothesisKnobs {
            hypotheses: None,
            y_samples: k.y_samples,
            t_points: k.t_points,
            tol: k.tol,
            d: n.d,
            rows: n.rows,
            nikodym_samples: n.samples,
        }
    }
}

fn hypothesis(ctx: Context) -> Result<Outcome> {
    let k: HypothesisKnobs = ctx.loaded.knobs()?;
    let phase = phase_or(&ctx, || PhaseSpec::const_coeff(3));
    let seed = ctx.seed.unwrap_or(0);
    let which = k.hypotheses.clone().unwrap_or_else(|| {
        if phase.is_translation_invariant() {
            vec![HypothesisChoice::WeakI, HypothesisChoice::KakeyaI, HypothesisChoice::NikodymII]
        } else {
            vec![HypothesisChoice::NikodymII]
        }
    });
    let kc = KakeyaConfig { y_samples: k.y_samples, t_points: k.t_points, tol: k.tol, seed, ..Default::default() };
    let nc = NikodymConfig { d: k.d, rows: k.rows, samples: k.nikodym_samples, t_points: k.t_points, tol: k.tol, seed };
    let reports: Vec<HypothesisReport> = which
        .iter()
        .map(|h| match h {
            HypothesisChoice::KakeyaI => check_hypothesis_i(&phase, &kc),
            HypothesisChoice::WeakI => check_weak_hypothesis_i(&phase, &kc),
            HypothesisChoice::NikodymII => check_hypothesis_ii(&phase, &nc),
        })
        .collect::<kakeya_lab::error::Result<_>>()?;
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            vec![
                format!("{:?}", r.hypothesis),
                r.verdict.to_string(),
                num(r.exceptional_fraction),
                r.rank.map_or(String::new(), |v| v.to_string()),
                r.rank_constant.map_or(String::new(), |v| v.to_string()),
                r.samples.to_string(),
                r.seed.to_string(),
            ]
        })
        .collect();
    let mut ctx = ctx;
    ctx.out.csv(
        "hypothesis_check",
        &["hypothesis", "verdict", "exceptional_fraction", "rank", "rank_constant", "samples", "seed"],
        &rows,
    )?;
    let inconclusive = reports.iter().any(|r| r.verdict == Verdict::Inconclusive);
    let summary = json!({
        "subcommand": "hypothesis-check",
        "phase": phase,
        "reports": reports,
    });
    finish(ctx, "hypothesis_check", summary, inconclusive)
}

// ---------------------------------------------------------------- maximal-norm / nikodym-norm

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
enum SuiteChoice {
    ConstantOne,
    NeighborhoodOfSurface,
    SingleTube,
    RandomFields,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct NormKnobs {
    deltas: Vec<f64>,
    ps: Vec<f64>,
    s: f64,
    suite: Option<SuiteChoice>,
    /// Outer lattice spacing as a multiple of δ.
    outer_factor: f64,
    /// Inner search spacing as a multiple of δ.
    search_factor: f64,
    t_samples: usize,
    section_samples: usize,
}

impl Default for NormKnobs {
    fn default() -> Self {
        NormKnobs {
            deltas: dyadic(2, 4),
            ps: vec![2.0],
            s: 1.0,
            suite: None,
            outer_factor: 1.0,
            search_factor: 0.5,
            t_samples: kakeya_lab::tubes::DEFAULT_T_SAMPLES,
            section_samples: kakeya_lab::tubes::DEFAULT_SECTION_SAMPLES,
        }
    }
}

fn maximal_norm(ctx: Context, op: Operator) -> Result<Outcome> {
    let k: NormKnobs = ctx.loaded.knobs()?;
    let phase = phase_or(&ctx, || PhaseSpec::const_coeff(3));
    let counter = phase.kind() == PhaseKind::Counterexample;
    let choice = k.suite.unwrap_or(if counter && op == Operator::Kakeya {
        SuiteChoice::NeighborhoodOfSurface
    } else {
        SuiteChoice::ConstantOne
    });
    let suite = match choice {
        SuiteChoice::ConstantOne => TestSuite::ConstantOne,
        SuiteChoice::NeighborhoodOfSurface => TestSuite::NeighborhoodOfSurface,
        SuiteChoice::SingleTube => TestSuite::SingleTube,
        SuiteChoice::RandomFields => TestSuite::RandomFields(required_seed(&ctx, "the RandomFields suite")?),
    };
    if k.ps.is_empty() || k.deltas.len() < 3 {
        bail!("config error: need at least one p and three deltas");
    }
    let cfg_for = |delta: f64| -> MaximalConfig {
        if counter && op == Operator::Kakeya && choice == SuiteChoice::NeighborhoodOfSurface {
            let mut c = compressed_config(delta);
            c.t_samples = k.t_samples;
            c.section_samples = k.section_samples;
            c
        } else {
            MaximalConfig {
                outer_spacing: k.outer_factor * delta,
                search: Search::Lattice { spacing: k.search_factor * delta },
                t_samples: k.t_samples,
                section_samples: k.section_samples,
                ..MaximalConfig::standard(delta)
            }
        }
    };
    let mut ladders = Vec::new();
    let mut rows = Vec::new();
    for &p in &k.ps {
        let bounds = k
            .deltas
            .iter()
            .map(|&d| operator_norm_lower(op, &phase, d, p, k.s, &suite, &cfg_for(d)))
            .collect::<kakeya_lab::error::Result<Vec<_>>>()?;
        let fit = fit_scaling(&k.deltas.iter().zip(&bounds).map(|(&d, b)| (d, b.ratio)).collect::<Vec<_>>())?;
        for (&d, b) in k.deltas.iter().zip(&bounds) {
            rows.push(vec![num(d), num(p), num(k.s), num(b.ratio), num(fit.slope)]);
        }
        ladders.push(json!({ "p": p, "s": k.s, "bounds": bounds, "fit": fit }));
    }
    let name = if op == Operator::Kakeya { "maximal_norm" } else { "nikodym_norm" };
    let mut ctx = ctx;
    ctx.out.csv(name, &["delta", "p", "s", "norm_lower", "fitted_slope"], &rows)?;
    let summary = json!({
        "subcommand": name.replace('_', "-"),
        "phase": phase,
        "operator": op,
        "suite": format!("{suite:?}"),
        "ladders": ladders,
    });
    finish(ctx, name, summary, false)
}

// ---------------------------------------------------------------- sublevel

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
enum EnsembleChoice {
    SquareVsLinear,
    DegenerateSlice,
    Minors,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct SublevelKnobs {
    ensemble: EnsembleChoice,
    mode: SublevelMode,
    sigmas: Option<Vec<f64>>,
    t_cells: Option<usize>,
    y_samples: usize,
    mu_step: Option<f64>,
    mu_grid: Option<Vec<f64>>,
}

impl Default for SublevelKnobs {
    fn default() -> Self {
        SublevelKnobs {
            ensemble: EnsembleChoice::SquareVsLinear,
            mode: SublevelMode::Averaged,
            sigmas: None,
            t_cells: None,
            y_samples: 512,
            mu_step: None,
            mu_grid: None,
        }
    }
}

fn sublevel(ctx: Context) -> Result<Outcome> {
    let k: SublevelKnobs = ctx.loaded.knobs()?;
    let ens = match k.ensemble {
        EnsembleChoice::SquareVsLinear => square_vs_linear(k.y_samples),
        EnsembleChoice::DegenerateSlice => degenerate_slice(k.y_samples),
        EnsembleChoice::Minors => minor_ensemble(&phase_or(&ctx, || PhaseSpec::const_coeff(3)), k.y_samples)?,
    };
    let base = SublevelConfig::standard(k.mode);
    let cfg = SublevelConfig {
        sigmas: k.sigmas.clone().unwrap_or(base.sigmas),
        t_cells: k.t_cells.unwrap_or(base.t_cells),
        mode: k.mode,
        mu_step: k.mu_step.unwrap_or(base.mu_step),
        mu_grid: k.mu_grid.clone().unwrap_or_else(default_mu_grid),
    };
    if cfg.sigmas.is_empty() || cfg.t_cells < 2 {
        bail!("config error: need a nonempty sigma ladder and t_cells >= 2");
    }
    let prof = kappa_experiment(&ens, &cfg)?;
    let mode = format!("{:?}", prof.mode);
    let rows: Vec<Vec<String>> = prof
        .sigmas
        .iter()
        .zip(&prof.measures)
        .map(|(&s, &m)| vec![num(s), num(m), mode.clone(), prof.ensemble.clone()])
        .collect();
    let mut ctx = ctx;
    ctx.out.csv("sublevel", &["sigma", "measure", "mode", "ensemble_id"], &rows)?;
    let summary = json!({
        "subcommand": "sublevel",
        "config": cfg,
        "profile": prof,
    });
    finish(ctx, "sublevel", summary, false)
}

// ---------------------------------------------------------------- counterexample

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct CounterexampleKnobs {
    samples: usize,
    jacobian_samples: usize,
    deltas: Vec<f64>,
    ps: Vec<f64>,
    s: f64,
    volume_deltas: Vec<f64>,
    fan_y1: f64,
    fan_c: f64,
    fan_delta: f64,
    fan_samples: usize,
}

impl Default for CounterexampleKnobs {
    fn default() -> Self {
        CounterexampleKnobs {
            samples: 10_000,
            jacobian_samples: 1_000,
            deltas: dyadic(4, 8),
            ps: vec![2.0, 3.0],
            s: 1.0,
            volume_deltas: dyadic(4, 8),
            fan_y1: 0.2,
            fan_c: 0.1,
            fan_delta: 1.0 / 16.0,
            fan_samples: 65,
        }
    }
}

fn identity_map(y: &[f64; 2]) -> [f64; 2] {
    *y
}

fn counterexample(ctx: Context) -> Result<Outcome> {
    let k: CounterexampleKnobs = ctx.loaded.knobs()?;
    if let Some(p) = &ctx.phase {
        if p.kind() != PhaseKind::Counterexample {
            bail!("config error: the counterexample subcommand only runs the counterexample phase");
        }
    }
    let seed = ctx.seed.unwrap_or(0);
    let containment = verify_surface_containment(k.samples, seed)?;
    let poly = random_polynomial_map(seed);
    let jac = json!({
        "counterexample": jacobian_scan(&counterexample_omega_map, k.jacobian_samples, seed),
        "identity": jacobian_scan(&identity_map, k.jacobian_samples, seed),
        "random_polynomial": jacobian_scan(&poly, k.jacobian_samples, seed),
    });
    let ladders = compression_lower_bound(&k.deltas, &k.ps, k.s)?;
    let volume = compression_volume_scan(&k.volume_deltas)?;
    let fan = star_fan_witness(k.fan_y1, k.fan_c, k.fan_delta, k.fan_samples)?;
    let mut rows = Vec::new();
    for l in &ladders {
        for r in &l.rows {
            rows.push(vec![num(r.delta), num(r.p), num(r.s), num(r.ratio), num(l.fit.slope)]);
        }
    }
    let vol_rows: Vec<Vec<String>> = volume.points.iter().map(|(d, m)| vec![num(*d), num(*m)]).collect();
    let mut ctx = ctx;
    ctx.out.csv("counterexample_lower_bound", &["delta", "p", "s", "norm_lower", "fitted_slope"], &rows)?;
    ctx.out.csv("counterexample_volume", &["delta", "measure"], &vol_rows)?;
    let summary = json!({
        "subcommand": "counterexample",
        "seed": seed,
        "box": counterexample_box(),
        "max_surface_deviation": containment.max_surface_deviation,
        "containment": containment,
        "jacobian": jac,
        "lower_bound": ladders.iter().map(|l| json!({ "p": l.p, "s": k.s, "fit": l.fit })).collect::<Vec<_>>(),
        "volume_fit": volume,
        "fan": fan,
    });
    finish(ctx, "counterexample", summary, false)
}

// ---------------------------------------------------------------- grain-count

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "kind", deny_unknown_fields)]
enum GrainChoice {
    /// `x₂ = log x₁`, the surface carrying the compressed family.
    LogSurface,
    Hyperplane {
        normal: Vec<f64>,
        offset: f64,
        #[serde(default)]
        center: Option<Vec<f64>>,
        #[serde(default = "unit")]
        rho: f64,
    },
    Polys {
        polys: Vec<MultiPoly>,
        #[serde(default)]
        center: Option<Vec<f64>>,
        #[serde(default = "unit")]
        rho: f64,
    },
}

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
enum CentreChoice {
    FixedZero,
    CounterexampleOmega,
    Random,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct GrainKnobs {
    deltas: Vec<f64>,
    lambda: f64,
    grain: Option<GrainChoice>,
    /// Grain thickness as a multiple of the tube δ.
    grain_factor: f64,
    separation: Separation,
    centres: Option<CentreChoice>,
    t_samples: usize,
    section_samples: usize,
}

impl Default for GrainKnobs {
    fn default() -> Self {
        GrainKnobs {
            deltas: dyadic(4, 7),
            lambda: 0.5,
            grain: None,
            grain_factor: 1.0,
            separation: Separation::Direction,
            centres: None,
            t_samples: kakeya_lab::tubes::DEFAULT_T_SAMPLES,
            section_samples: kakeya_lab::tubes::DEFAULT_SECTION_SAMPLES,
        }
    }
}

fn build_grain(choice: &GrainChoice, delta: f64, n: usize) -> Result<Grain> {
    let g = match choice {
        GrainChoice::LogSurface => log_surface_grain(delta)?,
        GrainChoice::Hyperplane { normal, offset, center, rho } => Grain::new(
            vec![GrainFunction::Poly(hyperplane(normal, *offset)?)],
            delta,
            *rho,
            center.clone().unwrap_or_else(|| vec![0.0; n]),
        )?,
        GrainChoice::Polys { polys, center, rho } => Grain::new(
            polys.iter().cloned().map(GrainFunction::Poly).collect(),
            delta,
            *rho,
            center.clone().unwrap_or_else(|| vec![0.0; n]),
        )?,
    };
    Ok(g)
}

fn grain_count(ctx: Context) -> Result<Outcome> {
    let k: GrainKnobs = ctx.loaded.knobs()?;
    let phase = phase_or(&ctx, PhaseSpec::counterexample);
    let counter = phase.kind() == PhaseKind::Counterexample;
    let grain = k.grain.clone().unwrap_or(if counter {
        GrainChoice::LogSurface
    } else {
        GrainChoice::Hyperplane { normal: vec![0.48, 0.36, 0.8], offset: 0.05, center: None, rho: 1.0 }
    });
    let rule = match k.centres.unwrap_or(if counter { CentreChoice::CounterexampleOmega } else { CentreChoice::FixedZero }) {
        CentreChoice::FixedZero => CentreRule::FixedZero,
        CentreChoice::CounterexampleOmega => CentreRule::CounterexampleOmega,
        CentreChoice::Random => CentreRule::RandomSeeded(required_seed(&ctx, "random tube centres")?),
    };
    if !(k.lambda > 0.0) {
        bail!("config error: lambda must be positive");
    }
    let mut rows = Vec::new();
    let mut per_delta = Vec::new();
    for &delta in &k.deltas {
        let fam = build_family(&phase, delta, k.separation, rule)?;
        let g = build_grain(&grain, k.grain_factor * delta, phase.n())?;
        let sampler = TubeSampler::new(&phase, delta, k.t_samples, k.section_samples);
        let fr = family_fractions(&fam, &g, &sampler)?;
        let count = kakeya_lab::grain::count_concentrated(&fr, k.lambda);
        let frac = count as f64 / fam.len() as f64;
        let mean = fr.iter().sum::<f64>() / fr.len() as f64;
        rows.push(vec![num(delta), fam.len().to_string(), count.to_string(), num(frac), num(mean)]);
        per_delta.push(json!({ "delta": delta, "family": fam.len(), "count": count, "fraction": frac, "mean_occupancy": mean }));
    }
    let mut ctx = ctx;
    ctx.out.csv("grain_count", &["delta", "family_size", "count", "count_fraction", "mean_occupancy"], &rows)?;
    let summary = json!({
        "subcommand": "grain-count",
        "phase": phase,
        "grain": grain,
        "lambda": k.lambda,
        "grain_factor": k.grain_factor,
        "separation": k.separation,
        "rows": per_delta,
    });
    finish(ctx, "grain_count", summary, false)
}

// ---------------------------------------------------------------- wongkew

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "kind", deny_unknown_fields)]
enum VarietyChoice {
    Sphere {
        #[serde(default = "half")]
        r: f64,
    },
    Circle {
        #[serde(default = "half")]
        r: f64,
    },
    Polys {
        polys: Vec<MultiPoly>,
        codim: usize,
    },
}

fn half() -> f64 {
    0.5
}

impl VarietyChoice {
    fn polys(&self) -> Result<Vec<MultiPoly>> {
        Ok(match self {
            VarietyChoice::Sphere { r } => vec![sphere(3, *r)?],
            VarietyChoice::Circle { r } => circle(*r)?,
            VarietyChoice::Polys { polys, .. } => polys.clone(),
        })
    }

    fn codim(&self) -> usize {
        match self {
            VarietyChoice::Sphere { .. } => 1,
            VarietyChoice::Circle { .. } => 2,
            VarietyChoice::Polys { codim, .. } => *codim,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct WongkewKnobs {
    variety: VarietyChoice,
    deltas: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    /// Grid spacing is δ / refine.
    refine: f64,
}

impl Default for WongkewKnobs {
    fn default() -> Self {
        WongkewKnobs {
            variety: VarietyChoice::Sphere { r: 0.5 },
            deltas: dyadic(3, 6),
            lo: vec![-0.6; 3],
            hi: vec![0.6; 3],
            refine: 4.0,
        }
    }
}

fn wongkew(ctx: Context) -> Result<Outcome> {
    let k: WongkewKnobs = ctx.loaded.knobs()?;
    let bbox = BoxN::new(k.lo.clone(), k.hi.clone())?;
    let (rows, fit) = neighborhood_volume_fit(&k.variety.polys()?, &k.deltas, &bbox, k.refine)?;
    let csv_rows: Vec<Vec<String>> = rows.iter().map(|r| vec![num(r.delta), num(r.h), num(r.measure)]).collect();
    let mut ctx = ctx;
    ctx.out.csv("wongkew", &["delta", "h", "measure"], &csv_rows)?;
    let summary = json!({
        "subcommand": "wongkew",
        "variety": k.variety,
        "codim": k.variety.codim(),
        "box": bbox,
        "rows": rows,
        "fit": fit,
    });
    finish(ctx, "wongkew", summary, false)
}

// ---------------------------------------------------------------- oscillatory

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
enum OscSuiteChoice {
    ConstantOne,
    CapFunctions,
    RandomSigns,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct OscKnobs {
    q: f64,
    lambdas: Vec<f64>,
    suite: OscSuiteChoice,
    mode: OscMode,
    input_norm: InputNorm,
    amplitude: AmplitudeSpec,
    refine: f64,
    spatial_spacing: f64,
    gate: bool,
    /// Domain radius imposed on the phase; `null` keeps the phase's own.
    rho: Option<f64>,
}

impl Default for OscKnobs {
    fn default() -> Self {
        OscKnobs {
            q: 4.0,
            lambdas: vec![8.0, 16.0, 32.0],
            suite: OscSuiteChoice::ConstantOne,
            mode: OscMode::Hormander,
            input_norm: InputNorm::L2,
            amplitude: AmplitudeSpec::TensorBump,
            refine: 1.0,
            spatial_spacing: SPATIAL_SPACING,
            gate: true,
            rho: Some(1.0),
        }
    }
}

fn oscillatory(ctx: Context) -> Result<Outcome> {
    let k: OscKnobs = ctx.loaded.knobs()?;
    let mut phase = phase_or(&ctx, || PhaseSpec::const_coeff(3));
    if let Some(r) = k.rho {
        phase = phase.with_rho(r)?;
    }
    let suite = match k.suite {
        OscSuiteChoice::ConstantOne => OscSuite::ConstantOne,
        OscSuiteChoice::CapFunctions => OscSuite::CapFunctions,
        OscSuiteChoice::RandomSigns => OscSuite::RandomSigns(required_seed(&ctx, "the RandomSigns suite")?),
    };
    let cfg = OscConfig {
        q: k.q,
        lambdas: k.lambdas.clone(),
        suite,
        mode: k.mode,
        input_norm: k.input_norm,
        amplitude: k.amplitude.clone(),
        refine: k.refine,
        spatial_spacing: k.spatial_spacing,
        gate: k.gate,
    };
    let rep = norm_scaling_experiment(&phase, &cfg)?;
    let rows: Vec<Vec<String>> = rep.rows.iter().map(|r| vec![num(r.lambda), num(r.q), num(r.norm_ratio)]).collect();
    let mut ctx = ctx;
    ctx.out.csv("oscillatory", &["lambda", "q", "norm_ratio"], &rows)?;
    let summary = json!({
        "subcommand": "oscillatory",
        "phase": phase,
        "config": cfg,
        "rows": rep.rows,
        "fit": rep.fit,
        "gate_changes": rep.gate_changes,
    });
    finish(ctx, "oscillatory", summary, false)
}
