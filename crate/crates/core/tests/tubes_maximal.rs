use proptest::prelude::*;
use rand::Rng;

use kakeya_lab::fit::fit_scaling;
use kakeya_lab::grid::{BoxN, ConstantField, Field, FnField, GridField};
use kakeya_lab::maximal::{
    ambient_box, kakeya_maximal, maximal_at, nikodym_maximal, operator_norm_lower, MaximalConfig, Operator, Search,
    TestSuite,
};
use kakeya_lab::phase::PhaseSpec;
use kakeya_lab::sampling;
use kakeya_lab::tubes::{
    build_family, rasterize_multiplicity, tube_volume, CentreRule, DirectionCurves, Separation, Tube, TubeFamily,
    TubeSampler,
};

const DELTA: f64 = 0.125;

fn coarse_cfg() -> MaximalConfig {
    let mut cfg = MaximalConfig::standard(DELTA);
    cfg.outer_spacing = 0.25;
    cfg.search = Search::Lattice { spacing: 0.25 };
    cfg.t_samples = 16;
    cfg.section_samples = 8;
    cfg
}

fn random_field(phase: &PhaseSpec, seed: u64) -> GridField<f64> {
    let mut g: GridField<f64> = GridField::zeros(ambient_box(phase).unwrap(), DELTA).unwrap();
    let mut rng = sampling::rng(seed);
    for v in g.values.iter_mut() {
        *v = rng.random::<f64>();
    }
    g
}

struct Sum<'a>(&'a dyn Field, &'a dyn Field);

impl Field for Sum<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn value(&self, p: &[f64]) -> f64 {
        self.0.value(p) + self.1.value(p)
    }
}

struct Scaled<'a>(&'a dyn Field, f64);

impl Field for Scaled<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn value(&self, p: &[f64]) -> f64 {
        self.0.value(p) * self.1
    }
}

fn builtin(kind: usize) -> PhaseSpec {
    match kind {
        0 => PhaseSpec::const_coeff(3),
        _ => PhaseSpec::bourgain_star(3).unwrap(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn sublinear_monotone_and_homogeneous(kind in 0usize..2, nik in any::<bool>(), s1 in 0u64..1000, s2 in 0u64..1000, c in 0.1f64..10.0) {
        let phase = builtin(kind);
        let op = if nik { Operator::Nikodym } else { Operator::Kakeya };
        let cfg = coarse_cfg();
        let run = |g: &dyn Field| kakeya_lab::maximal::maximal(op, &phase, DELTA, g, &cfg).unwrap().values;
        let (g1, g2) = (random_field(&phase, s1), random_field(&phase, s2));
        let sum = Sum(&g1, &g2);
        let (a, b, ab) = (run(&g1), run(&g2), run(&sum));
        let scaled = run(&Scaled(&g1, c));
        for i in 0..a.len() {
            prop_assert!(ab[i] <= a[i] + b[i] + 1e-12);
            prop_assert!(ab[i] >= a[i] - 1e-12);
            prop_assert!((scaled[i] - c * a[i]).abs() <= 1e-12 * scaled[i].abs().max(1.0));
        }
    }
}

#[test]
fn constant_and_zero_inputs() {
    for phase in [builtin(0), builtin(1)] {
        let cfg = coarse_cfg();
        let one = ConstantField { value: 1.0, support: ambient_box(&phase).unwrap() };
        assert!(kakeya_maximal(&phase, DELTA, &one, &cfg).unwrap().values.iter().all(|&v| v == 1.0));
        assert!(nikodym_maximal(&phase, DELTA, &one, &cfg).unwrap().values.iter().all(|&v| v == 1.0));
        let far = FnField { dim: 3, f: |p: &[f64]| if p[0] > 5.0 { 1.0 } else { 0.0 } };
        assert!(nikodym_maximal(&phase, DELTA, &far, &cfg).unwrap().values.iter().all(|&v| v == 0.0));
    }
}

#[test]
fn duality_inequality_for_lattice_tubes() {
    let phase = builtin(1);
    let cfg = coarse_cfg();
    let g = random_field(&phase, 77);
    let k = kakeya_maximal(&phase, DELTA, &g, &cfg).unwrap();
    let centres = sampling::lattice_in_ball(2, phase.rho(), 0.25);
    let sampler = TubeSampler::new(&phase, DELTA, cfg.t_samples, cfg.section_samples);
    let vol = tube_volume(&phase, DELTA);
    let (mut lhs, mut rhs) = (0.0, 0.0);
    for (i, y) in k.points.iter().enumerate() {
        let curves = DirectionCurves::new(&phase, y, &sampler.ts).unwrap();
        let omega = &centres[i % centres.len()];
        let avg = sampler.average(&curves.centres(omega).unwrap(), &g);
        assert!(avg <= k.values[i] + 1e-12);
        lhs += vol * avg;
        rhs += vol * k.values[i];
    }
    assert!(lhs <= rhs);
}

#[test]
fn single_tube_is_recovered_and_bounded() {
    let phase = builtin(0);
    let g = kakeya_lab::maximal::TubeIndicator { phase: phase.clone(), y: vec![0.25, 0.0], omega: vec![0.0, 0.0], delta: DELTA };
    let mut cfg = MaximalConfig::standard(DELTA);
    cfg.search = Search::Lattice { spacing: 0.125 };
    let n = maximal_at(Operator::Nikodym, &phase, DELTA, &g, vec![vec![0.0, 0.0]], 1.0, &cfg).unwrap();
    assert!(n.values[0] >= 0.9);
    let r = operator_norm_lower(Operator::Kakeya, &phase, DELTA, f64::INFINITY, f64::INFINITY, &TestSuite::SingleTube, &coarse_cfg())
        .unwrap();
    assert!(r.ratio <= 1.0);
}

#[test]
fn constant_one_ratio_is_independent_of_delta() {
    let phase = builtin(0);
    let ratio = |delta: f64| {
        let mut cfg = MaximalConfig::standard(delta);
        cfg.outer_spacing = 0.125;
        cfg.search = Search::Lattice { spacing: 0.25 };
        cfg.t_samples = 8;
        cfg.section_samples = 4;
        operator_norm_lower(Operator::Kakeya, &phase, delta, 2.0, 1.0, &TestSuite::ConstantOne, &cfg).unwrap().ratio
    };
    let (a, b) = (ratio(0.125), ratio(0.0625));
    assert!((a - b).abs() < 1e-12 * a, "{a} {b}");
}

fn vertical_family(delta: f64) -> TubeFamily {
    build_family(&builtin(0), delta, Separation::Centre, CentreRule::FixedZero).unwrap()
}

#[test]
fn disjoint_tubes_union_equals_sum() {
    let delta = 0.0625;
    let fam = vertical_family(delta);
    let h = delta / 4.0;
    let whole = rasterize_multiplicity(&fam, h, None).unwrap();
    assert_eq!(whole.max_value(), 1.0);
    let bbox = whole.bbox.clone();
    let mut sum = 0.0;
    for t in &fam.tubes {
        let single = TubeFamily { tubes: vec![t.clone()], ..fam.clone() };
        let g = rasterize_multiplicity(&single, h, Some(bbox.clone())).unwrap();
        sum += g.union_measure();
        let exact = tube_volume(&fam.phase, delta);
        assert!(g.union_measure() > 0.5 * exact && g.union_measure() < 2.0 * exact);
    }
    assert!((whole.union_measure() - sum).abs() <= 0.01 * sum);
}

#[test]
fn union_is_subadditive_and_multiplicity_monotone() {
    let phase = builtin(1);
    let delta = 0.125;
    let fam = build_family(&phase, delta, Separation::Direction, CentreRule::RandomSeeded(5)).unwrap();
    let h = delta / 4.0;
    let full = rasterize_multiplicity(&fam, h, None).unwrap();
    let half = fam.subfamily(|t: &Tube| t.y[0] < 0.0);
    let part = rasterize_multiplicity(&half, h, Some(full.bbox.clone())).unwrap();
    assert!(part.values.iter().zip(&full.values).all(|(a, b)| a <= b));
    let mut sum = 0.0;
    for t in &fam.tubes {
        let single = TubeFamily { tubes: vec![t.clone()], ..fam.clone() };
        sum += rasterize_multiplicity(&single, h, Some(full.bbox.clone())).unwrap().union_measure();
    }
    assert!(full.union_measure() <= sum + 1e-12);
}

#[test]
fn unit_box_measures() {
    let b = BoxN::new(vec![0.0; 3], vec![1.0; 3]).unwrap();
    let mut g: GridField<f64> = GridField::zeros(b, 0.1).unwrap();
    g.fill(|_| 2.0);
    assert!((g.union_measure() - 1.0).abs() < 1e-9);
    assert!((g.lp(2.0) - 2.0).abs() < 1e-9);
}

#[test]
fn fit_examples() {
    let f = fit_scaling(&[(1.0, 1.0), (2.0, 4.0), (4.0, 16.0)]).unwrap();
    assert!((f.slope - 2.0).abs() < 1e-12);
    let pairs: Vec<(f64, f64)> = (4..=8).map(|k| 2f64.powi(-k)).map(|d| (d, d.powf(-0.5))).collect();
    assert!((fit_scaling(&pairs).unwrap().slope + 0.5).abs() < 1e-12);
}
