use magtunnel::agmon::{action_forms, agmon_distance, free_distance, free_distance_quadrature, ACTION_FORMS_TOL};
use magtunnel::hopping::{hopping_line_integral, hopping_reduced_integral};
use magtunnel::radial::{solve_radial, RadialGrid};
use magtunnel::tail::match_normalization;
use magtunnel::PotentialSpec;
use proptest::prelude::*;

fn spec() -> impl Strategy<Value = PotentialSpec> {
    (0.5f64..2.0, 0.5f64..1.5, -2.0f64..-0.2, 1.2f64..3.0)
        .prop_map(|(b, a, v0, ratio)| PotentialSpec::bump(b, ratio * a, a, v0).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn support_is_exact(s in spec(), t in 1.0f64..10.0) {
        prop_assert_eq!(s.single_well(s.a * t), 0.0);
        prop_assert_eq!(s.double_well(s.l + s.a * t, 0.0), 0.0);
    }

    #[test]
    fn wells_are_radial(s in spec(), rho in 0.0f64..1.0, th in 0.0f64..std::f64::consts::TAU) {
        let r = rho * s.a;
        let v = s.double_well(s.l + r * th.cos(), r * th.sin());
        prop_assert!((v - s.single_well(r)).abs() < 1e-14);
        let w = s.double_well(-s.l + r * th.cos(), r * th.sin());
        prop_assert!((w - s.single_well(r)).abs() < 1e-14);
    }

    #[test]
    fn distance_is_additive(s in spec(), x in 0.0f64..1.0, y in 0.0f64..1.0) {
        let (r1, r3) = (0.0, 2.0 * s.l);
        let r2 = r3 * x.min(y).max(1e-3);
        let whole = agmon_distance(&s, r1, r3).unwrap();
        let parts = agmon_distance(&s, r1, r2).unwrap() + agmon_distance(&s, r2, r3).unwrap();
        prop_assert!((whole - parts).abs() < 1e-11 * whole.max(1.0));
    }

    #[test]
    fn free_distance_closed_form_matches_quadrature(s in spec(), x in 0.0f64..1.0) {
        let r = 3.0 * s.l * x;
        let q = free_distance_quadrature(&s, r).unwrap();
        prop_assert!((q - free_distance(&s, r)).abs() < 1e-12 * q.max(1.0));
    }

    #[test]
    fn action_sandwich(s in spec()) {
        let f = action_forms(&s).unwrap();
        prop_assert!(f.max_disagreement() < ACTION_FORMS_TOL);
        let full = agmon_distance(&s, 0.0, 2.0 * s.l).unwrap();
        let split = agmon_distance(&s, 0.0, 2.0 * s.l - s.a).unwrap() + agmon_distance(&s, 0.0, s.a).unwrap();
        prop_assert!(f.line_form <= full + ACTION_FORMS_TOL);
        prop_assert!(f.line_form >= split - ACTION_FORMS_TOL);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    // -h^2 (r u')'/r + (B^2 r^2/4 - mu) u = 0 outside the support
    #[test]
    fn tail_solves_exterior_equation(hi in 0usize..3, x in 0.05f64..1.0) {
        let s = PotentialSpec::canonical();
        let h = [0.2, 0.1, 0.05][hi];
        let st = solve_radial(&s, h, &RadialGrid::default()).unwrap();
        let m = match_normalization(&st, &s).unwrap();
        let r = s.a + x * (2.0 * s.l - s.a);
        let d = 1e-2 * h;
        let u = m.value(r).unwrap();
        let du = |t: f64| m.derivative(t).unwrap().ratio(u);
        let up = du(r);
        let upp = (8.0 * (du(r + d) - du(r - d)) - (du(r + 2.0 * d) - du(r - 2.0 * d))) / (12.0 * d);
        let kin = -h * h * (upp + up / r);
        let pot = 0.25 * s.b * s.b * r * r - st.mu_h;
        let res = (kin + pot).abs() / (kin.abs() + pot.abs() + st.mu_h.abs());
        prop_assert!(res < 1e-6, "r={r} h={h} res={res:e}");
    }

    #[test]
    fn line_and_reduced_hopping_agree(s in spec(), h in 0.2f64..0.6) {
        prop_assume!(s.l > 1.5 * s.a);
        let st = match solve_radial(&s, h, &RadialGrid::default()) {
            Ok(st) => st,
            Err(_) => return Ok(()),
        };
        let m = match match_normalization(&st, &s) {
            Ok(m) => m,
            Err(_) => return Ok(()),
        };
        let line = hopping_line_integral(&m).unwrap();
        let red = hopping_reduced_integral(&m).unwrap();
        let rel = (line.modulus().ratio(red.abs()) - 1.0).abs();
        prop_assert!(rel < 1e-6, "{s:?} h={h} rel={rel:e}");
    }
}

#[test]
fn alpha_approaches_its_expansion() {
    let s = PotentialSpec::canonical();
    let mut prev = f64::INFINITY;
    for h in [0.1, 0.05, 0.025, 0.0125] {
        let st = solve_radial(&s, h, &RadialGrid::default()).unwrap();
        let m = match_normalization(&st, &s).unwrap();
        let diff = (m.alpha - (s.v0.abs() / (2.0 * s.b * h) + m.nu)).abs();
        assert!(diff < prev, "h={h}: {diff} not below {prev}");
        prev = diff;
    }
    assert!(prev < 0.01);
}

#[test]
fn level_spacing_approaches_harmonic() {
    // second m = 0 level: mu1 - mu -> 2 h omega
    let s = PotentialSpec::canonical();
    let mut prev = f64::INFINITY;
    for h in [0.1, 0.05, 0.025, 0.0125] {
        let st = solve_radial(&s, h, &RadialGrid::default()).unwrap();
        let rel = ((st.mu_h1 - st.mu_h) / (2.0 * h * s.omega()) - 1.0).abs();
        assert!(rel < prev, "h={h}: {rel}");
        prev = rel;
    }
    assert!(prev < 0.02);
}
