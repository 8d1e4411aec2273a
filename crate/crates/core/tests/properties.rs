use bachflow::bachforms::{closed_form_bach, evolution_identities, soliton_residual};
use bachflow::curvature::{bach_oracle, CurvatureBundle};
use bachflow::flow::{integrate_reduced, FlowOptions};
use bachflow::grid::{random_frame, random_orthogonal, rng};
use bachflow::nilalg::{BracketTensor, Mat4, TriBracket, Vec4};
use bachflow::{MetricSpec, SolitonSolution};
use proptest::prelude::*;

fn slice_point() -> impl Strategy<Value = TriBracket> {
    (0.05f64..2.0, -2.0f64..2.0, 0.05f64..2.0).prop_map(|(a, b, c)| TriBracket::unchecked(a, b, c))
}

fn frame() -> impl Strategy<Value = Mat4> {
    any::<u64>().prop_map(|s| random_frame(&mut rng(s), 0.4))
}

fn orthogonal() -> impl Strategy<Value = Mat4> {
    any::<u64>().prop_map(|s| random_orthogonal(&mut rng(s)))
}

fn vec4() -> impl Strategy<Value = Vec4> {
    prop::array::uniform4(-2.0f64..2.0).prop_map(Vec4::from)
}

fn spd() -> impl Strategy<Value = MetricSpec> {
    frame().prop_map(|h| MetricSpec::from_frame(&h).unwrap())
}

fn rel(x: f64, scale: f64) -> f64 {
    x / scale.max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gl_action_is_a_group_action(p in slice_point(), h1 in frame(), h2 in frame()) {
        let mu = p.embed();
        let lhs = mu.gl_action(&(h1 * h2)).unwrap();
        let rhs = mu.gl_action(&h2).unwrap().gl_action(&h1).unwrap();
        prop_assert!(rel(lhs.max_abs_diff(&rhs), lhs.max_abs()) < 1e-12);
        let back = mu.gl_action(&h1).unwrap().gl_action(&h1.try_inverse().unwrap()).unwrap();
        prop_assert!(back.max_abs_diff(&mu) < 1e-12);
    }

    #[test]
    fn gl_action_preserves_lie_and_nilpotent(p in slice_point(), h in frame()) {
        let nu = p.embed().gl_action(&h).unwrap();
        prop_assert!(nu.validate().is_ok());
    }

    #[test]
    fn pi_is_the_derivative_of_the_action(p in slice_point(), s in any::<u64>()) {
        let a = random_frame(&mut rng(s), 1.0) - Mat4::identity();
        let mu = p.embed();
        let eps = 1e-4;
        let plus = mu.gl_action(&(Mat4::identity() + a * eps)).unwrap();
        let minus = mu.gl_action(&(Mat4::identity() - a * eps)).unwrap();
        // Richardson on the central difference removes the eps^2 term
        let plus2 = mu.gl_action(&(Mat4::identity() + a * (2.0 * eps))).unwrap();
        let minus2 = mu.gl_action(&(Mat4::identity() - a * (2.0 * eps))).unwrap();
        let d1 = plus.sub(&minus).scale(1.0 / (2.0 * eps));
        let d2 = plus2.sub(&minus2).scale(1.0 / (4.0 * eps));
        let fd = d1.scale(4.0 / 3.0).sub(&d2.scale(1.0 / 3.0));
        prop_assert!(fd.max_abs_diff(&mu.pi_rep(&a)) < 1e-7);
    }

    #[test]
    fn norm_is_orthogonally_invariant(p in slice_point(), k in orthogonal()) {
        let mu = p.embed();
        let nu = mu.gl_action(&k).unwrap();
        prop_assert!((nu.norm_sq() - mu.norm_sq()).abs() < 1e-12 * mu.norm_sq().max(1.0));
    }

    #[test]
    fn group_law_is_associative(p in slice_point(), x in vec4(), y in vec4(), z in vec4()) {
        let mu = p.embed();
        let lhs = mu.group_multiply(&mu.group_multiply(&x, &y), &z);
        let rhs = mu.group_multiply(&x, &mu.group_multiply(&y, &z));
        prop_assert!((lhs - rhs).amax() < 1e-11);
        prop_assert!(mu.group_multiply(&x, &(-x)).amax() < 1e-14);
    }

    #[test]
    fn closed_form_scales_with_fourth_power(p in slice_point(), k in 0.1f64..3.0) {
        let b = closed_form_bach(&p).matrix();
        let bk = closed_form_bach(&p.scale(k)).matrix();
        prop_assert!(rel((bk - b * k.powi(4)).amax(), bk.amax()) < 1e-12);
        prop_assert!(closed_form_bach(&p).trace().abs() < 1e-12 * b.amax().max(1.0));
    }

    #[test]
    fn evolution_identity_and_inequalities(p in slice_point()) {
        let e = evolution_identities(&p);
        let n = p.norm_sq();
        prop_assert!(e.identity_residual.abs() < 1e-12 * n.powi(2).max(1.0) / p.a.min(p.c).min(1.0));
        prop_assert!(e.norm_slack >= -1e-12 * n.powi(3).max(1.0));
    }

    #[test]
    fn soliton_scaling_covariance(k in 0.2f64..3.0) {
        let s = SolitonSolution::new(k, k, -7.0 / 12.0 * k.powi(4), -7.0 / 6.0 * k.powi(4));
        prop_assert!(soliton_residual(&s) < 1e-10 * k.powi(4));
        prop_assert!((s.lambda - 35.0 / 24.0 * k.powi(4)).abs() < 1e-12 * k.powi(4));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn bach_is_trace_free_and_symmetric_for_any_metric(p in slice_point(), g in spd()) {
        let o = bach_oracle(&p.embed(), &g);
        let scale = o.bilinear.amax().max(1.0);
        prop_assert!(o.endomorphism.trace().abs() < 1e-9 * scale);
        prop_assert!((o.bilinear - o.bilinear.transpose()).amax() < 1e-9 * scale);
    }

    #[test]
    fn bach_conformal_weight(p in slice_point(), g in spd(), rho in 0.2f64..5.0) {
        let mu = p.embed();
        let b = bach_oracle(&mu, &g).bilinear;
        let bs = bach_oracle(&mu, &g.scaled(rho).unwrap()).bilinear;
        prop_assert!(rel((bs * rho - b).amax(), b.amax()) < 1e-9);
    }

    #[test]
    fn bach_is_orthogonally_equivariant(p in slice_point(), k in orthogonal()) {
        let mu = p.embed();
        let b = bach_oracle(&mu, &MetricSpec::identity()).endomorphism;
        let bk = bach_oracle(&mu.gl_action(&k).unwrap(), &MetricSpec::identity()).endomorphism;
        prop_assert!(rel((bk - k * b * k.transpose()).amax(), b.amax()) < 1e-9);
    }

    #[test]
    fn isometric_pairs_have_equal_invariants(p in slice_point(), h in frame()) {
        // (mu, <h., h.>) is isometric to (h.mu, identity) through x -> h x
        let mu = p.embed();
        let g = MetricSpec::from_frame(&h).unwrap();
        let lhs = CurvatureBundle::compute(&mu, &g);
        let rhs = CurvatureBundle::compute(&mu.gl_action(&h).unwrap(), &MetricSpec::identity());
        prop_assert!((lhs.scalar - rhs.scalar).abs() < 1e-10 * lhs.scalar.abs().max(1.0));
        prop_assert!((lhs.bach_norm() - rhs.bach_norm()).abs() < 1e-9 * lhs.bach_norm().max(1.0));
        let pulled = h.try_inverse().unwrap() * rhs.bach_endo * h;
        prop_assert!(rel((pulled - lhs.bach_endo).amax(), lhs.bach_endo.amax()) < 1e-9);
    }

    #[test]
    fn json_round_trip(p in slice_point(), h in frame()) {
        let mu = p.embed().gl_action(&h).unwrap();
        let text = serde_json::to_string(&mu).unwrap();
        let back: BracketTensor = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, mu);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn halving_tolerance_changes_terminal_state_little(p in slice_point()) {
        let tol = 1e-8;
        let coarse = FlowOptions { rtol: tol, atol: tol, ..Default::default() };
        let fine = FlowOptions { rtol: tol / 2.0, atol: tol / 2.0, ..Default::default() };
        let a = integrate_reduced(&p, 5.0, &coarse).unwrap().last().monitors;
        let b = integrate_reduced(&p, 5.0, &fine).unwrap().last().monitors;
        let d = (a.a - b.a).abs().max((a.b - b.b).abs()).max((a.c - b.c).abs());
        prop_assert!(d < 10.0 * tol, "difference {d:e}");
    }

    #[test]
    fn reduced_flow_stays_in_slice_with_monotone_norm(p in slice_point()) {
        let tr = integrate_reduced(&p, 20.0, &FlowOptions::default()).unwrap();
        let inv = tr.invariants();
        prop_assert!(inv.ok, "{:?}", inv);
        prop_assert!(tr.samples.iter().all(|s| s.monitors.a > 0.0 && s.monitors.c > 0.0));
    }
}
