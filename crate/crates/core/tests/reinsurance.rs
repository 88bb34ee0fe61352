mod common;

use common::*;
use epirisk::distributions::DistributionId;
use epirisk::reinsurance::{
    evaluate_trigger, expected_payout_mc, expected_shortfall, payout, payout_samples, ComponentLaw,
    ExceedanceRule, TriggerState, Variant,
};
use proptest::prelude::*;

fn uniform_law() -> ComponentLaw {
    ComponentLaw::Fitted {
        law: pv(
            DistributionId::Beta4,
            &[("alpha1", 1.0), ("alpha2", 1.0), ("a", 0.0), ("b", 0.004)],
        ),
    }
}

#[test]
fn linear_contract_hand_cases() {
    let spec = linear_scalar_contract();
    spec.validate().unwrap();
    assert_eq!(payout(&spec, &[0.0005]).unwrap().amount, 0.0);
    let mid = payout(&spec, &[0.002]).unwrap();
    assert!((mid.amount - 2.0e6).abs() < 1e-6 && mid.triggered && !mid.capped);
    let top = payout(&spec, &[0.01]).unwrap();
    assert!(top.capped && (top.amount - 3.0e6).abs() < 1e-6);
    assert_eq!(payout(&spec, &[0.003]).unwrap().amount, spec.loss(&[0.003]));
    assert_eq!(
        evaluate_trigger(&spec, &[0.001 - 1e-12]).unwrap(),
        TriggerState::NotTriggered
    );
    assert_eq!(
        evaluate_trigger(&spec, &[0.003]).unwrap(),
        TriggerState::CapExceeded
    );
    assert_eq!(
        payout(&spec, &[0.1, 0.2]).unwrap_err().code(),
        "reinsurance.shape_mismatch"
    );
}

#[test]
fn any_component_caps_on_one_coordinate() {
    let knots = vec![(0.0, 0.0), (1.0, 1.0)];
    let spec = contract(
        Variant::VectorBarrier,
        ExceedanceRule::AnyComponent,
        &[
            ("speed.location", 0.1, 0.2, knots.clone()),
            ("death.location", 0.1, 0.2, knots),
        ],
    );
    assert_eq!(
        evaluate_trigger(&spec, &[0.5, 0.0]).unwrap(),
        TriggerState::CapExceeded
    );
    let all = spec_with_rule(&spec, ExceedanceRule::AllComponents);
    assert_eq!(
        evaluate_trigger(&all, &[0.5, 0.0]).unwrap(),
        TriggerState::NotTriggered
    );
    assert_eq!(
        evaluate_trigger(&all, &[0.5, 0.15]).unwrap(),
        TriggerState::Triggered
    );
}

fn spec_with_rule(
    spec: &epirisk::reinsurance::ContractSpec,
    rule: ExceedanceRule,
) -> epirisk::reinsurance::ContractSpec {
    let mut s = spec.clone();
    s.exceedance_rule = rule;
    s
}

#[test]
fn uniform_theta_matches_closed_form() {
    let spec = linear_scalar_contract();
    let est = expected_payout_mc(&spec, &[uniform_law()], 100_000, 7).unwrap();
    assert!(
        (est.estimate - 1.75e6).abs() <= 3.0 * est.std_error,
        "{est:?}"
    );
}

#[test]
fn point_mass_is_exact() {
    let spec = linear_scalar_contract();
    let est =
        expected_payout_mc(&spec, &[ComponentLaw::PointMass { value: 0.002 }], 1000, 1).unwrap();
    assert_eq!(est.estimate, payout(&spec, &[0.002]).unwrap().amount);
    assert_eq!(est.std_error, 0.0);
}

#[test]
fn draws_do_not_depend_on_worker_count() {
    let spec = linear_scalar_contract();
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| payout_samples(&spec, &[uniform_law()], 50_000, 99).unwrap())
    };
    let one = run(1);
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&one), bits(&run(4)));
    assert_eq!(bits(&one), bits(&run(7)));
}

#[test]
fn std_error_falls_as_inverse_root_n() {
    let spec = linear_scalar_contract();
    let se = |n, r: u64| {
        expected_payout_mc(&spec, &[uniform_law()], n, 1000 + r)
            .unwrap()
            .std_error
    };
    let (mut double, mut quad) = (0.0, 0.0);
    for r in 0..50 {
        let base = se(2000, r);
        double += base / se(4000, r + 100);
        quad += base / se(8000, r + 200);
    }
    let (double, quad) = (double / 50.0, quad / 50.0);
    assert!((double / 2f64.sqrt() - 1.0).abs() < 0.2, "{double}");
    assert!((quad / 2.0 - 1.0).abs() < 0.2, "{quad}");
}

#[test]
fn shortfall_hand_cases() {
    let xs: Vec<f64> = (1..=100).map(f64::from).collect();
    assert_eq!(expected_shortfall(&xs, 0.95).unwrap(), 98.0);
    assert_eq!(expected_shortfall(&xs, 0.99).unwrap(), 100.0);
    assert_eq!(expected_shortfall(&xs, 0.0).unwrap(), 50.5);
    assert_eq!(expected_shortfall(&[4.25; 37], 0.9).unwrap(), 4.25);
    assert_eq!(
        expected_shortfall(&[], 0.9).unwrap_err().code(),
        "reinsurance.empty_samples"
    );
}

#[test]
fn contract_json_round_trip() {
    let spec = linear_scalar_contract();
    let text = serde_json::to_string(&spec).unwrap();
    let back: epirisk::reinsurance::ContractSpec = serde_json::from_str(&text).unwrap();
    assert_eq!(back, spec);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    for key in [
        "variant",
        "exceedance_rule",
        "trigger",
        "barrier",
        "loss_map",
        "currency",
    ] {
        assert!(v.get(key).is_some(), "{key}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn payout_is_monotone_and_bounded(seed in any::<u64>()) {
        let (spec, lo, hi) = random_contract_case(seed);
        spec.validate().unwrap();
        let cap = spec.loss(&spec.barrier_levels());
        let a = payout(&spec, &lo).unwrap();
        let b = payout(&spec, &hi).unwrap();
        prop_assert!(a.amount <= b.amount);
        for p in [&a, &b] {
            prop_assert!(p.amount >= 0.0 && p.amount <= cap);
            prop_assert!(p.triggered || p.amount == 0.0);
            prop_assert!(!p.capped || p.amount == cap);
        }
    }

    #[test]
    fn payout_ignores_excess_over_barrier(seed in any::<u64>()) {
        let (spec, _, theta) = random_contract_case(seed);
        if evaluate_trigger(&spec, &theta).unwrap() != TriggerState::NotTriggered {
            let clipped: Vec<f64> = theta.iter().zip(spec.barrier_levels()).map(|(t, b)| t.min(b)).collect();
            prop_assert_eq!(payout(&spec, &theta).unwrap().amount, payout(&spec, &clipped).unwrap().amount);
        }
    }

    #[test]
    fn shortfall_rises_with_level(xs in prop::collection::vec(0.0..1e9f64, 1..300), a in 0.0..0.999f64, b in 0.0..0.999f64) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let es_lo = expected_shortfall(&xs, lo).unwrap();
        prop_assert!(es_lo <= expected_shortfall(&xs, hi).unwrap() * (1.0 + 1e-12));
        prop_assert!(es_lo >= mean * (1.0 - 1e-12));
    }
}
