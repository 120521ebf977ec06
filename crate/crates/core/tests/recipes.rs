use overlap_core::gradflow::integrate;
use overlap_core::minima::on_minima;
use overlap_core::recipes::{
    certify_two_point, one_point_samples, recipe_a_sample, recipe_b_run, replay_recipe_b, trace_back_search,
    verify_one_point, verify_two_point, RecipeBConfig, RecipeBMode, TraceConfig,
};
use overlap_core::{Activation, GFConfig, LabError, Params, Sample};
use proptest::prelude::*;

fn fig1() -> (Params, Sample, Sample) {
    (Params::scalar(0.922, 2.868), Sample::scalar(1.0, 1.0), Sample::scalar(12.307, 1.4))
}

#[test]
fn sigmoid_two_point_instance() {
    let (th, s1, s2) = fig1();
    let r = verify_two_point(&th, &s1, &s2, &Activation::Sigmoid, 1e-4, 0.05, &GFConfig::default()).unwrap();
    assert!(r.verdict);
    assert!(r.self_losses.0 < 1e-10 && r.self_losses.1 < 1e-10);
    assert!(r.cross_losses.0 < 1e-4 && r.cross_losses.1 < 1e-4);
    assert!(r.separation > 0.05);
}

#[test]
fn softplus_one_point_instance() {
    let th = Params::scalar(0.3, 1.0);
    let act = Activation::Softplus;
    let ss = one_point_samples(&th, &[0.6, 1.0, 1.4, 1.8], &act).unwrap();
    let r = verify_one_point(&th, &ss, &act, 1e-4, &GFConfig::default()).unwrap();
    assert!(r.max_limit_error < 1e-4);
    assert!(r.common_limit.dist_sup(&Params::scalar(0.3, -1.0)) < 1e-12);
    assert!(r.min_pairwise_angle > 1e-2);
    assert!(r.degenerate.is_none());
}

#[test]
fn exp_trace_back_recovers_start() {
    let th = Params::scalar(0.5, 1.0);
    let act = Activation::Exp;
    let s1 = recipe_a_sample(&th, &Params::scalar(1.0, 2.0)).unwrap();
    let s2 = recipe_a_sample(&th, &Params::scalar(0.2, 1.5)).unwrap();
    let cfg = GFConfig::default();
    let l1 = integrate(&th, &s1, &act, &cfg).unwrap().limit.unwrap();
    let l2 = integrate(&th, &s2, &act, &cfg).unwrap().limit.unwrap();
    let r = trace_back_search(&l1, &l2, &s1, &s2, &act, &TraceConfig::default()).unwrap();
    assert!(r.theta0.dist_sup(&th) < 1e-3, "{:?}", r.theta0);
}

#[test]
fn sigmoid_trace_back_recovers_start() {
    let (th, s1, s2) = fig1();
    let act = Activation::Sigmoid;
    let cfg = GFConfig::default();
    let l1 = integrate(&th, &s1, &act, &cfg).unwrap().limit.unwrap();
    let l2 = integrate(&th, &s2, &act, &cfg).unwrap().limit.unwrap();
    let r = trace_back_search(&l1, &l2, &s1, &s2, &act, &TraceConfig::default()).unwrap();
    assert!(r.theta0.dist_sup(&th) < 0.05, "{:?}", r.theta0);
}

#[test]
fn chain_of_three_is_certified_and_replayable() {
    let st = recipe_b_run(&Params::scalar(1.0, 1.0), 3, &RecipeBConfig::default()).unwrap();
    let act = Activation::piecewise(st.sigma_n.clone());
    for &(i, j) in &st.pairings {
        assert!(on_minima(&st.targets[i - 1], &st.samples[j - 1], &act, 1e-8));
    }
    for &(i, j) in &st.pairings {
        assert!(st.limits[i - 1].dist_sup(&st.limits[j - 1]) > 1e-2);
    }
    let json = st.to_json();
    let (again, same) = replay_recipe_b(&json).unwrap();
    assert!(same);
    assert_eq!(again.to_json(), json);
}

#[test]
fn constructed_exp_segments_give_a_two_point_instance() {
    let th = Params::scalar(1.0, 1.0);
    let st = recipe_b_run(&th, 2, &RecipeBConfig::default()).unwrap();
    assert_eq!(st.pairings, vec![(1, 2), (2, 1)]);
    let act = Activation::piecewise(st.sigma_n.clone());
    let (s1, s2) = (&st.samples[0], &st.samples[1]);
    let r =
        certify_two_point(&th, s1, s2, &act, (&st.targets[0], &st.targets[1]), 1e-6, 1e-8, 1e-2, &GFConfig::default())
            .unwrap();
    assert!(r.verdict);
}

#[test]
fn undersized_third_input_violates_step_c() {
    let mut cfg = RecipeBConfig::default();
    cfg.x_overrides.insert(3, 0.5);
    match recipe_b_run(&Params::scalar(1.0, 1.0), 3, &cfg) {
        Err(LabError::ConstraintFailure { step: 3, detail }) => assert!(detail.contains("step (c)"), "{detail}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn ball_narrower_than_the_distinctness_margin() {
    let cfg = RecipeBConfig { mode: RecipeBMode::Ball { radius: 0.005, m: 6 }, ..RecipeBConfig::default() };
    let st = recipe_b_run(&Params::scalar(1.0, 1.0), 2, &cfg).unwrap();
    assert_eq!(st.targets.len(), 8);
    for t in &st.targets[2..] {
        assert!(t.dist_sup(&st.targets[1]) <= 0.005 + 1e-15);
        assert!(t.dist_sup(&st.targets[0]) > 2e-2);
    }
    for &(i, j) in &st.pairings {
        assert!(i == 1 || j == 1, "{i},{j}");
    }
}

#[test]
fn recipe_a_rejects_mirror_target_with_shift() {
    let r = recipe_a_sample(&Params::scalar(1.0, 2.0), &Params::scalar(1.5, -2.0));
    assert!(matches!(r, Err(LabError::UnreachableTarget(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn recipe_a_round_trip(
        w0 in -1.0..1.0f64, a0 in 0.3..2.0f64, dw in 0.05..1.0f64, da in 0.1..1.5f64, up in any::<bool>(), neg in any::<bool>(),
    ) {
        let sgn = if neg { -1.0 } else { 1.0 };
        let th = Params::scalar(w0, sgn * a0);
        let target = Params::scalar(w0 + if up { dw } else { -dw }, sgn * (a0 + da));
        let s = recipe_a_sample(&th, &target).unwrap();
        let tr = integrate(&th, &s, &Activation::Exp, &GFConfig::default()).unwrap();
        let lim = tr.limit.unwrap();
        prop_assert!(lim.dist_sup(&target) < 1e-6, "{lim:?} vs {target:?}");
    }

    #[test]
    fn one_point_limit_is_the_mirror(
        sig in any::<bool>(), w0 in -1.5..1.5f64, a0 in 0.3..2.0f64, neg in any::<bool>(), x in 0.2..2.0f64, xneg in any::<bool>(),
    ) {
        let act = if sig { Activation::Sigmoid } else { Activation::Softplus };
        let th = Params::scalar(w0, if neg { -a0 } else { a0 });
        let x = if xneg { -x } else { x };
        let s = &one_point_samples(&th, &[x], &act).unwrap()[0];
        let lim = integrate(&th, s, &act, &GFConfig::default()).unwrap().limit.unwrap();
        prop_assert!(lim.dist_sup(&Params::scalar(th.w1(), -th.a)) < 1e-6);
    }
}
