mod common;

use circulant_lab::capacity::{
    estimate_capacity_curve, estimate_capacity_lb, per_trial_chain, tail_probability,
    theoretical_floor,
};
use circulant_lab::channel::{ChannelRealization, PowerProfile};
use circulant_lab::rng::Streams;
use circulant_lab::LabError;

const E_E1_ONE: f64 = 0.596_347_362_323_193_9;

#[test]
fn flat_limit_oracle_agrees_with_closed_form() {
    assert!((common::flat_limit_rate() - E_E1_ONE).abs() < 1e-9);
}

#[test]
fn flat_profile_approaches_exponential_limit() {
    let est = estimate_capacity_lb(
        &PowerProfile::flat(1024).unwrap(),
        1.0,
        4000,
        &Streams::new(1, "flat"),
    )
    .unwrap();
    let oracle = common::flat_limit_rate();
    assert!(
        (est.mean_rate - oracle).abs() <= 3.0 * est.ci_radius,
        "{est:?} vs {oracle}"
    );
}

#[test]
fn delta_profile_is_deterministic() {
    let est = estimate_capacity_lb(
        &PowerProfile::delta(8).unwrap(),
        1.0,
        100,
        &Streams::new(7, "d"),
    )
    .unwrap();
    assert!((est.mean_rate - 2f64.ln()).abs() < 1e-15);
    assert!(est.ci_radius < 1e-12);
}

#[test]
fn small_snr_is_linear() {
    let p = 1e-6;
    for profile in [
        PowerProfile::flat(64).unwrap(),
        PowerProfile::geometric(32, 0.5).unwrap(),
    ] {
        let est = estimate_capacity_lb(&profile, p, 500, &Streams::new(3, "small")).unwrap();
        // E|lambda|^2 = 1 so the rate sits just below P
        assert!(
            est.mean_rate <= p * 1.05 && est.mean_rate > 0.9 * p,
            "{}",
            est.mean_rate
        );
    }
}

#[test]
fn rate_is_monotone_in_snr() {
    let curve = estimate_capacity_curve(
        &PowerProfile::sparse(32, 3).unwrap(),
        &[0.5, 1.0, 2.0, 4.0],
        1000,
        &Streams::new(5, "mono"),
    )
    .unwrap();
    for w in curve.windows(2) {
        assert!(w[1].mean_rate >= w[0].mean_rate);
    }
}

#[test]
fn cyclic_shift_leaves_rate_unchanged() {
    let profile = PowerProfile::geometric(48, 0.8).unwrap();
    let a = estimate_capacity_lb(&profile, 1.0, 3000, &Streams::new(10, "a")).unwrap();
    let b = estimate_capacity_lb(&profile.rotated(17), 1.0, 3000, &Streams::new(11, "b")).unwrap();
    let combined = (a.ci_radius.powi(2) + b.ci_radius.powi(2)).sqrt();
    assert!((a.mean_rate - b.mean_rate).abs() <= 3.0 * combined);
}

#[test]
fn per_trial_chain_holds_for_every_draw() {
    let streams = Streams::new(12, "chain");
    let profiles = [
        PowerProfile::flat(16).unwrap(),
        PowerProfile::sparse(16, 2).unwrap(),
        PowerProfile::geometric(16, 0.3).unwrap(),
    ];
    for (i, profile) in profiles.iter().enumerate() {
        for t in 0..200 {
            let mut rng = streams.stream((i * 1000 + t) as u64);
            let real = ChannelRealization::sample(profile.clone(), &mut rng).unwrap();
            for eps in [0.1, 0.5, 1.0, 2.0] {
                let (rate, bound) = per_trial_chain(real.eigenvalues(), 1.5, eps).unwrap();
                assert!(rate >= bound);
            }
        }
    }
}

#[test]
fn tail_probability_examples() {
    let s = Streams::new(4, "tail");
    let delta = tail_probability(&PowerProfile::delta(8).unwrap(), 0.5, 200, &s).unwrap();
    assert_eq!(delta.probability, 1.0);
    let flat = tail_probability(&PowerProfile::flat(1024).unwrap(), 0.5, 20_000, &s).unwrap();
    assert!((flat.probability - (-0.25f64).exp()).abs() <= 3.0 * flat.ci_radius.max(1e-3));
    let far = tail_probability(&PowerProfile::flat(50).unwrap(), 10.0, 500, &s).unwrap();
    assert_eq!(far.probability, 0.0);
    assert!(matches!(
        tail_probability(&PowerProfile::flat(4).unwrap(), 0.0, 10, &s),
        Err(LabError::Precondition(_))
    ));
}

#[test]
fn floor_sits_below_estimate() {
    let floor = theoretical_floor(1.0, 1.0).unwrap();
    assert!((floor - 0.5 * 1.25f64.ln()).abs() < 1e-15);
    let est = estimate_capacity_lb(
        &PowerProfile::sparse(64, 1).unwrap(),
        1.0,
        100,
        &Streams::new(1, "f"),
    )
    .unwrap();
    assert!(est.mean_rate > floor);
}
