use approx::assert_relative_eq;
use proptest::prelude::*;

use kakeya_lab::curve::{curve_point, newton_psi, solve_psi, tube_membership};
use kakeya_lab::exponents::exponent_table;
use kakeya_lab::linalg;
use kakeya_lab::phase::PhaseSpec;

fn builtins() -> Vec<PhaseSpec> {
    vec![PhaseSpec::const_coeff(3), PhaseSpec::bourgain_star(3).unwrap(), PhaseSpec::counterexample()]
}

fn central(f: impl Fn(f64) -> f64, h: f64) -> f64 {
    (f(h) - f(-h)) / (2.0 * h)
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

#[test]
fn analytic_derivatives_match_finite_differences() {
    let h = 1e-5;
    for phase in builtins() {
        let m = phase.m();
        for (x, t, y) in phase.domain_samples(1000, 11) {
            let jet = phase.jet(&x, t, &y).unwrap();
            for i in 0..m {
                let shift = |v: &[f64], e: f64| {
                    let mut w = v.to_vec();
                    w[i] += e;
                    w
                };
                let fd = central(|e| phase.value(&x, t, &shift(&y, e)).unwrap(), h);
                assert!(close(jet.grad_y[i], fd, 1e-6), "{:?} grad_y", phase.kind());
                for j in 0..m {
                    let fd = central(|e| phase.grad_y(&x, t, &shift(&y, e)).unwrap()[j], h);
                    assert!(close(jet.hess_yy[j][i], fd, 1e-6), "{:?} hess_yy", phase.kind());
                    let fd = central(|e| phase.grad_y(&shift(&x, e), t, &y).unwrap()[j], h);
                    assert!(close(jet.hess_xy[i][j], fd, 1e-6), "{:?} hess_xy", phase.kind());
                }
            }
        }
    }
}

#[test]
fn gauss_map_examples() {
    let cc = PhaseSpec::const_coeff(3);
    let g = cc.gauss_map(&[0.0, 0.0], 0.0, &[0.0, 0.0]).unwrap();
    assert_relative_eq!(g[2].abs(), 1.0, epsilon = 1e-14);
    let g = cc.gauss_map(&[0.0, 0.0], 0.0, &[0.5, 0.0]).unwrap();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let sign = g[2].signum();
    assert_relative_eq!(g[0] * sign, -s, epsilon = 1e-12);
    assert_relative_eq!(g[1], 0.0, epsilon = 1e-12);
    assert_relative_eq!(g[2] * sign, s, epsilon = 1e-12);
    for phase in builtins() {
        for (x, t, y) in phase.domain_samples(200, 3) {
            assert_relative_eq!(linalg::norm(&phase.gauss_map(&x, t, &y).unwrap()), 1.0, epsilon = 1e-12);
        }
    }
}

#[test]
fn nondegeneracy_of_builtins() {
    for phase in builtins() {
        let r = phase.verify_nondegeneracy(500, 1).unwrap();
        assert!(r.h1_ok, "{:?}", phase.kind());
    }
    let cc = PhaseSpec::const_coeff(3).verify_nondegeneracy(200, 2).unwrap();
    assert_relative_eq!(cc.min_det_hess_xy, 1.0, epsilon = 1e-12);
    assert!(cc.min_det_curvature >= 2.0 - 1e-12 && cc.min_det_curvature <= 4.0);
    let cc = PhaseSpec::const_coeff(3);
    for (x, t, y) in cc.domain_samples(50, 9) {
        let k = cc.curvature_form(&x, t, &y).unwrap();
        let det = k[0][0] * k[1][1] - k[0][1] * k[1][0];
        assert_relative_eq!(det, 4.0 / (1.0 + 4.0 * linalg::dot(&y, &y)), epsilon = 1e-10);
    }
    assert!(PhaseSpec::counterexample().verify_nondegeneracy(500, 4).unwrap().h2_ok);
}

#[test]
fn exponent_values_in_three_dimensions() {
    let e = exponent_table(3).unwrap();
    assert_eq!((e.p_crit, e.q_crit, e.d_crit, e.m_crit), (2.0, 4.0, 2, 1));
    assert_eq!(e.beta(2.0), 0.5);
    assert_eq!(e.s(2.0), 4.0);
    assert_eq!(e.alpha_h(2.0), 0.5);
    assert_eq!(e.alpha_h(4.0), 0.0);
    assert_eq!(e.alpha_ls(4.0), 0.5);
    assert_eq!(e.beta(1.5), 1.0);
    assert_eq!(e.s(1.5), 6.0);
    for n in 2..9 {
        let e = exponent_table(n).unwrap();
        let eps = 1e-9;
        assert!((e.beta(e.p_crit - eps) - e.beta(e.p_crit + eps)).abs() < 1e-8);
    }
}

#[test]
fn curve_examples() {
    let cc = PhaseSpec::const_coeff(3);
    let c = solve_psi(&cc, &[0.1, 0.0], 0.2, &[0.5, 0.0], 1e-10).unwrap();
    assert_relative_eq!(c.x[0], -0.1, epsilon = 1e-14);
    let p = curve_point(&cc, &[1.0, 0.0], &[0.0, 0.0], 0.1).unwrap();
    assert_relative_eq!(p[0], -0.2, epsilon = 1e-14);
    assert!(!tube_membership(&cc, &[1.0, 0.0], &[0.0, 0.0], 0.01, &[-0.18, 0.0, 0.1]).unwrap());

    let bs = PhaseSpec::bourgain_star(3).unwrap();
    let p = curve_point(&bs, &[0.0, 1.0], &[0.0, 0.0], 0.5).unwrap();
    assert_relative_eq!(p[0], -0.5, epsilon = 1e-14);
    assert_relative_eq!(p[1], -0.25, epsilon = 1e-14);

    let ce = PhaseSpec::counterexample();
    let p = curve_point(&ce, &[0.6, 0.6], &[1.0, 0.0], 0.2).unwrap();
    assert_relative_eq!(p[0], 0.88, epsilon = 1e-12);
    assert_relative_eq!(p[1], 0.88f64.ln(), epsilon = 1e-12);
}

#[test]
fn newton_agrees_with_closed_forms() {
    for phase in builtins() {
        for (x, t, y) in phase.domain_samples(100, 5) {
            let closed = solve_psi(&phase, &x, t, &y, 1e-12).unwrap();
            let newton = newton_psi(&phase, &x, t, &y, 1e-12).unwrap();
            assert!(linalg::dist(&closed.x, &newton.x) < 1e-10, "{:?}", phase.kind());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn translation_property(
        kind in 0usize..3,
        a in prop::array::uniform2(-0.4f64..0.4),
        b in prop::array::uniform2(-0.4f64..0.4),
        t in -0.5f64..0.5,
        y in prop::array::uniform2(0.5f64..0.63),
    ) {
        let phase = &builtins()[kind];
        let p = curve_point(phase, &y, &a, t).unwrap();
        let q = curve_point(phase, &y, &b, t).unwrap();
        for i in 0..2 {
            prop_assert!(((p[i] - q[i]) - (a[i] - b[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn returned_points_solve_the_defining_equation(
        kind in 0usize..3,
        w in prop::array::uniform2(-0.4f64..0.4),
        t in -0.5f64..0.5,
        y in prop::array::uniform2(0.5f64..0.63),
    ) {
        let phase = &builtins()[kind];
        let c = solve_psi(phase, &w, t, &y, 1e-10).unwrap();
        let g = phase.grad_y(&c.x, t, &y).unwrap();
        prop_assert!(linalg::dist(&g, &w) <= 1e-10);
    }

    #[test]
    fn core_curve_points_are_members(
        w in prop::array::uniform2(-0.4f64..0.4),
        t in -0.5f64..0.5,
        y in prop::array::uniform2(-0.35f64..0.35),
        delta in 1e-6f64..0.5,
    ) {
        let phase = PhaseSpec::bourgain_star(3).unwrap();
        let p = curve_point(&phase, &y, &w, t).unwrap();
        prop_assert!(tube_membership(&phase, &y, &w, delta, &p).unwrap());
    }
}
