use overlap_core::gradflow::{conserved_residual, grad, integrate, loss, parabola_residual};
use overlap_core::limits::predict_limit;
use overlap_core::minima::on_minima;
use overlap_core::{Activation, GFConfig, Params, Sample, Status};
use proptest::prelude::*;

fn smooth_acts() -> impl Strategy<Value = Activation> {
    prop_oneof![Just(Activation::Exp), Just(Activation::Sigmoid), Just(Activation::Softplus)]
}

fn magnitude(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    (lo..hi, any::<bool>()).prop_map(|(v, neg)| if neg { -v } else { v })
}

// Residual r = aσ(xw) − y with the activation written out by hand.
fn residual_oracle(act: &Activation, w: f64, a: f64, x: f64, y: f64) -> f64 {
    let z = x * w;
    let s = match act {
        Activation::Exp => z.exp(),
        Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
        Activation::Softplus => z.exp().ln_1p(),
        Activation::Gaussian => (-z * z).exp(),
        _ => unreachable!(),
    };
    a * s - y
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gradient_matches_central_differences(
        act in prop_oneof![smooth_acts(), Just(Activation::Gaussian)],
        w in -2.0..2.0f64, a in -2.0..2.0f64, x in -1.5..1.5f64, y in -2.0..2.0f64,
    ) {
        let g = grad(&Params::scalar(w, a), &Sample::scalar(x, y), &act).unwrap();
        let l = |w: f64, a: f64| residual_oracle(&act, w, a, x, y).powi(2);
        let hw = 1e-6 * w.abs().max(1.0);
        let ha = 1e-6 * a.abs().max(1.0);
        let fd = [(l(w + hw, a) - l(w - hw, a)) / (2.0 * hw), (l(w, a + ha) - l(w, a - ha)) / (2.0 * ha)];
        for (an, nu) in g.iter().zip(fd) {
            prop_assert!((an - nu).abs() <= 1e-6 * an.abs().max(1.0), "{an} vs {nu}");
        }
    }

    #[test]
    fn flows_conserve_and_match_the_oracle(
        act in smooth_acts(),
        w0 in -1.0..1.0f64, a0 in magnitude(0.5, 2.0), x in magnitude(0.3, 1.5), y in magnitude(0.2, 2.0),
    ) {
        let theta0 = Params::scalar(w0, a0);
        let s = Sample::scalar(x, y);
        let tr = integrate(&theta0, &s, &act, &GFConfig::default()).unwrap();
        prop_assert_eq!(tr.status, Status::Converged);
        prop_assert!(conserved_residual(&tr, &s, &act).unwrap() < 1e-6);
        if act == Activation::Exp {
            prop_assert!(parabola_residual(&tr, &s).unwrap() < 1e-8);
        }
        let lim = tr.limit.clone().unwrap();
        let pred = predict_limit(&theta0, &s, &act).unwrap();
        prop_assert!(lim.dist_sup(&pred) < 1e-6, "{lim:?} vs {pred:?}");
        prop_assert!(on_minima(&lim, &s, &act, 1e-10));
        prop_assert!(on_minima(&pred, &s, &act, 1e-10));
    }

    #[test]
    fn loss_never_increases(act in smooth_acts(), w0 in -1.0..1.0f64, a0 in magnitude(0.5, 2.0), x in magnitude(0.3, 1.5), y in -2.0..2.0f64) {
        let s = Sample::scalar(x, y);
        let tr = integrate(&Params::scalar(w0, a0), &s, &act, &GFConfig::default()).unwrap();
        for pair in tr.states.windows(2) {
            prop_assert!(pair[1].loss <= pair[0].loss * (1.0 + 1e-9) + 1e-15);
        }
        prop_assert!(loss(tr.limit.as_ref().unwrap(), &s, &act).unwrap() < 1e-10);
    }
}

#[test]
fn zero_input_moves_only_the_output_weight() {
    let s = Sample::scalar(0.0, 3.0);
    let tr = integrate(&Params::scalar(0.7, -1.0), &s, &Activation::Sigmoid, &GFConfig::default()).unwrap();
    let lim = tr.limit.unwrap();
    assert_eq!(lim.w1(), 0.7);
    assert!((lim.a - 6.0).abs() < 1e-9);
}
