use circulant_lab::capacity::{mutual_info_flat, per_trial_chain};
use circulant_lab::channel::{eigenvalues, PhaseVector, PowerProfile};
use circulant_lab::delocalisation::{is_in_s4, WeightVector};
use circulant_lab::fourier_bessel::density_bound_five;
use circulant_lab::histogram::DensityHistogram;
use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::TAU;

fn profile_and_phases() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1usize..40).prop_flat_map(|n| {
        (
            prop::collection::vec(0.0f64..1.0, n)
                .prop_filter("nonzero", |v| v.iter().any(|x| *x > 1e-3)),
            prop::collection::vec(0.0f64..TAU, n),
        )
    })
}

proptest! {
    #[test]
    fn parseval_holds((raw, angles) in profile_and_phases()) {
        let profile = PowerProfile::normalized(raw).unwrap();
        let lambda = eigenvalues(&profile, &PhaseVector::new(angles).unwrap()).unwrap();
        let energy: f64 = lambda.iter().map(|l| l.norm_sqr()).sum();
        prop_assert!((energy - profile.len() as f64).abs() <= 1e-9 * profile.len() as f64);
    }

    #[test]
    fn rate_bounds_its_chain_floor((raw, angles) in profile_and_phases(), snr in 0.01f64..100.0, eps in 0.01f64..3.0) {
        let profile = PowerProfile::normalized(raw).unwrap();
        let lambda = eigenvalues(&profile, &PhaseVector::new(angles).unwrap()).unwrap();
        let (rate, bound) = per_trial_chain(&lambda, snr, eps).unwrap();
        prop_assert!(rate >= bound);
        prop_assert!(rate >= 0.0);
        // ln(1 + x) <= x and sum |lambda_k|^2 = N
        prop_assert!(mutual_info_flat(&lambda, snr) <= snr * lambda.len() as f64 * (1.0 + 1e-12));
    }

    #[test]
    fn s4_is_permutation_invariant(raw in prop::collection::vec(0.01f64..1.0, 5..15), eps0 in 0.01f64..0.9, rot in 0usize..15) {
        let w = WeightVector::normalized(raw.clone()).unwrap();
        let mut shifted = raw;
        let k = rot % shifted.len();
        shifted.rotate_left(k);
        let v = WeightVector::normalized(shifted).unwrap();
        prop_assert_eq!(is_in_s4(&w, eps0), is_in_s4(&v, eps0));
    }

    #[test]
    fn phi_decreases_in_each_b(b in prop::array::uniform5(0.05f64..20.0), k in 0usize..5, f in 1.01f64..10.0) {
        let base = density_bound_five(b).unwrap().phi;
        let mut up = b;
        up[k] *= f;
        prop_assert!(density_bound_five(up).unwrap().phi < base);
    }

    #[test]
    fn histogram_counts_add_up(points in prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 1..300)) {
        let mut h = DensityHistogram::new(vec![-1.0, -1.0], vec![0.25, 0.25], vec![8, 8]).unwrap();
        for (x, y) in &points {
            h.add(&[*x, *y]);
        }
        prop_assert_eq!(h.counts().iter().sum::<u64>() + h.outside(), points.len() as u64);
        prop_assert_eq!(h.total(), points.len() as u64);
    }

    #[test]
    fn unimodular_spectrum_gives_ln_one_plus_p(n in 1usize..64, snr in 0.01f64..50.0) {
        let lambda = vec![Complex64::new(0.0, 1.0); n];
        let r = mutual_info_flat(&lambda, snr) / n as f64;
        prop_assert!((r - snr.ln_1p()).abs() < 1e-12);
    }
}
