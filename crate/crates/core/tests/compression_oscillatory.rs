use num_complex::Complex64;
use proptest::prelude::*;

use kakeya_lab::compression::{
    companion_residual, compression_volume_scan, counterexample_omega_map, jacobian_scan, random_polynomial_map,
    verify_surface_containment,
};
use kakeya_lab::oscillatory::{
    apply_extension, apply_propagator, bump, norm_scaling_experiment, AmplitudeSpec, InputNorm, Kernel, OscConfig,
    TestSuite, YGrid,
};
use kakeya_lab::phase::PhaseSpec;

#[test]
fn compressed_curves_stay_on_the_log_surface() {
    let r = verify_surface_containment(2000, 3).unwrap();
    assert!(r.max_surface_deviation <= 1e-9, "{r:?}");
    assert!(r.max_closed_form_deviation <= 1e-9, "{r:?}");
}

#[test]
fn jacobian_coefficients_vanish_for_the_compressed_centres() {
    let rep = jacobian_scan(&counterexample_omega_map, 300, 5);
    assert!(rep.max_abs_a <= 1e-6 && rep.max_abs_b <= 1e-6 && rep.max_abs_c <= 1e-6, "{rep:?}");
    assert!(rep.max_companion_residual <= 1e-6);
}

#[test]
fn companion_identity_for_unrelated_maps() {
    let affine = |y: &[f64; 2]| [0.3 * y[0] - y[1], 2.0 + 0.7 * y[1]];
    let trig = |y: &[f64; 2]| [y[0].sin() + y[1], (y[0] * y[1]).cos()];
    let quad = random_polynomial_map(41);
    for omega in [&affine as &(dyn Fn(&[f64; 2]) -> [f64; 2] + Sync), &trig, &quad] {
        let rep = jacobian_scan(omega, 200, 8);
        assert!(rep.max_companion_residual <= 1e-6, "{rep:?}");
        // The map is not compressing: the coefficients do not all vanish.
        assert!(rep.max_abs_a.max(rep.max_abs_b).max(rep.max_abs_c) > 1e-3);
    }
    assert!(companion_residual(&affine, &[0.6, 0.55], 0.3) <= 1e-6);
}

#[test]
fn surface_neighbourhood_volume_is_linear_in_delta() {
    let deltas: Vec<f64> = (4..=8).map(|k| 2f64.powi(-k)).collect();
    let fit = compression_volume_scan(&deltas).unwrap();
    assert!((fit.slope - 1.0).abs() <= 0.1, "{fit:?}");
}

const RHO: f64 = 0.5;
const LAMBDA: f64 = 4.0;

fn grid() -> YGrid {
    YGrid::for_lambda(2, RHO, LAMBDA, 1.0)
}

#[test]
fn point_mass_input_gives_the_amplitude() {
    let g = grid();
    let phase = PhaseSpec::bourgain_star(3).unwrap();
    let hit = g.len() / 2 + 3;
    let mut y0 = vec![0.0; 2];
    let w = g.node(hit, &mut y0);
    let mut f = vec![Complex64::new(0.0, 0.0); g.len()];
    f[hit] = Complex64::new(0.0, 2.0);
    let s = apply_propagator(Kernel::Phase(&phase), &AmplitudeSpec::TensorBump, RHO, LAMBDA, &g, &f, 0.5).unwrap();
    let freq: f64 = y0.iter().map(|v| bump(v / RHO)).product();
    let nx = s.axis.len();
    for (flat, v) in s.values.iter().enumerate() {
        let (t, x1, x2) = (s.axis[flat / (nx * nx)], s.axis[(flat / nx) % nx], s.axis[flat % nx]);
        let space = [t, x1, x2].iter().map(|c| bump(c / (LAMBDA * RHO))).product::<f64>();
        let expect = 2.0 * w * freq * space;
        assert!((v.norm() - expect).abs() <= 1e-12 * expect.max(1e-12));
    }
}

#[test]
fn propagator_at_time_zero_is_the_plain_fourier_extension() {
    let g = grid();
    let f = g.values(|y| Complex64::new((3.0 * y[0]).cos(), y[1] - y[0] * y[0]));
    let cc = PhaseSpec::const_coeff(3);
    let amp = AmplitudeSpec::TensorBump;
    let u = apply_propagator(Kernel::Phase(&cc), &amp, RHO, LAMBDA, &g, &f, 0.5).unwrap();
    let free = apply_extension(Kernel::Free, &amp, RHO, LAMBDA, &g, &f, 0.5).unwrap();
    let nx = u.axis.len();
    let t0 = nx / 2;
    assert_eq!(u.axis[t0], 0.0);
    for i in 0..nx * nx {
        let (x1, x2) = (u.axis[i / nx], u.axis[i % nx]);
        let cut = bump(x1 / (LAMBDA * RHO)) * bump(x2 / (LAMBDA * RHO));
        let a = u.values[t0 * nx * nx + i];
        let b = free.values[t0 * nx * nx + i] * cut;
        assert!((a - b).norm() < 1e-10, "x = ({x1}, {x2})");
    }
}

#[test]
fn ladder_ratios_are_positive_and_q_is_checked() {
    let phase = PhaseSpec::const_coeff(3);
    let mut cfg = OscConfig::standard(2.0, TestSuite::CapFunctions, InputNorm::L2);
    cfg.lambdas = vec![8.0, 12.0, 16.0];
    cfg.gate = false;
    let rep = norm_scaling_experiment(&phase, &cfg).unwrap();
    assert!(rep.rows.iter().all(|r| r.norm_ratio.is_finite() && r.norm_ratio > 0.0));
    cfg.q = 7.0;
    assert!(norm_scaling_experiment(&phase, &cfg).is_err());
}

fn input(coeffs: &[f64], g: &YGrid) -> Vec<Complex64> {
    g.values(|y| {
        Complex64::new(coeffs[0] + coeffs[1] * y[0] + coeffs[2] * y[1] * y[1], coeffs[3] * (5.0 * y[0] * y[1]).sin())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn pointwise_bound_holds(kind in 0usize..3, c in prop::array::uniform4(-2.0f64..2.0)) {
        let g = grid();
        let phase = match kind {
            0 => PhaseSpec::const_coeff(3),
            1 => PhaseSpec::bourgain_star(3).unwrap(),
            _ => PhaseSpec::custom(3, PhaseSpec::const_coeff(3).polynomial().unwrap().clone()).unwrap(),
        };
        let f = input(&c, &g);
        let s = apply_extension(Kernel::Phase(&phase), &AmplitudeSpec::TensorBump, RHO, LAMBDA, &g, &f, 0.5).unwrap();
        let l1 = g.lq_norm(&f, 1.0);
        prop_assert!(s.values.iter().all(|v| v.norm() <= l1 * (1.0 + 1e-12)));
        prop_assert!(s.respects_bound());
    }

    #[test]
    fn extension_is_linear(c1 in prop::array::uniform4(-2.0f64..2.0), c2 in prop::array::uniform4(-2.0f64..2.0)) {
        let g = grid();
        let phase = PhaseSpec::bourgain_star(3).unwrap();
        let (f1, f2) = (input(&c1, &g), input(&c2, &g));
        let sum: Vec<Complex64> = f1.iter().zip(&f2).map(|(a, b)| a + b).collect();
        let run = |f: &[Complex64]| {
            apply_extension(Kernel::Phase(&phase), &AmplitudeSpec::TensorBump, RHO, LAMBDA, &g, f, 0.5).unwrap().values
        };
        let (a, b, s) = (run(&f1), run(&f2), run(&sum));
        for i in 0..s.len() {
            prop_assert!((s[i] - a[i] - b[i]).norm() < 1e-12);
        }
    }
}

#[test]
fn rasterized_compressed_family_hugs_the_surface() {
    use kakeya_lab::compression::support_distance_to_surface;
    use kakeya_lab::tubes::{build_family, rasterize_multiplicity, CentreRule, Separation};
    let delta = 0.0625;
    let fam = build_family(&PhaseSpec::counterexample(), delta, Separation::Direction, CentreRule::CounterexampleOmega).unwrap();
    assert!(!fam.is_empty());
    let field = rasterize_multiplicity(&fam, delta / 4.0, None).unwrap();
    let d = support_distance_to_surface(&field);
    assert!(d <= 2.0 * delta, "{d}");
}
