use circulant_lab::clt::{
    covariance_sum, estimator_floor, gaussian_density, lindeberg_directions,
    lindeberg_moment_bound, lindeberg_sum, mc_covariance, supnorm_of_sampler, supnorm_to_gaussian,
    GaussianTarget, MomentBound, TriangularArraySpec, Window,
};
use circulant_lab::rng::{Streams, SubRng};
use circulant_lab::sampling::{BaseLaw, PointSampler};
use circulant_lab::LabError;
use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use std::f64::consts::PI;

#[test]
fn circle_covariance_is_half_identity() {
    for n in [1, 7, 100] {
        let spec = TriangularArraySpec::circle_flat(n).unwrap();
        assert_eq!(covariance_sum(&spec), DMatrix::identity(2, 2) * 0.5);
    }
    let spec = TriangularArraySpec::circle(vec![0.6, 0.8]).unwrap();
    let (cov, se) = mc_covariance(&spec, 400_000, &Streams::new(1, "cov")).unwrap();
    let exact = covariance_sum(&spec);
    for i in 0..4 {
        assert!((cov[i] - exact[i]).abs() <= 3.0 * se[i], "{cov} vs {exact}");
    }
}

#[test]
fn weighted_cube_covariance_is_direct_sum() {
    let a = vec![0.6, 0.0, 0.8];
    let spec = TriangularArraySpec::new(
        BaseLaw::UniformCube {
            dim: 2,
            half_width: 1.0,
        },
        a.clone(),
        None,
    )
    .unwrap();
    let per = 1.0 / 3.0;
    let want: f64 = a.iter().map(|x| x * x * per).sum();
    let got = covariance_sum(&spec);
    assert!((got[(0, 0)] - want).abs() < 1e-15 && got[(0, 1)] == 0.0);
    let single =
        TriangularArraySpec::new(BaseLaw::Gaussian { dim: 1, std: 2.0 }, vec![1.0], None).unwrap();
    assert_eq!(covariance_sum(&single)[(0, 0)], 4.0);
}

#[test]
fn lindeberg_vanishes_for_flat_rows() {
    let spec = TriangularArraySpec::circle_flat(200).unwrap();
    for theta in lindeberg_directions(2) {
        assert_eq!(
            lindeberg_sum(&spec, 0.1, &theta, 10_000, &Streams::new(2, "l")).unwrap(),
            0.0
        );
        assert_eq!(
            lindeberg_sum(&spec, 10.0, &theta, 10_000, &Streams::new(2, "l")).unwrap(),
            0.0
        );
    }
    assert_eq!(lindeberg_directions(2).len(), 8);
}

#[test]
fn lindeberg_matches_circle_quadrature() {
    // weights e_1: E[cos^2 t 1{|cos t| > eps}] over a uniform angle
    let mut a = vec![0.0; 4];
    a[0] = 1.0;
    let spec = TriangularArraySpec::circle(a).unwrap();
    let eps = 0.1;
    let got = lindeberg_sum(&spec, eps, &[1.0, 0.0], 1_000_000, &Streams::new(3, "q")).unwrap();
    let m = 200_000;
    let oracle: f64 = (0..m)
        .map(|i| {
            let c = (2.0 * PI * (i as f64 + 0.5) / m as f64).cos();
            if c.abs() > eps {
                c * c
            } else {
                0.0
            }
        })
        .sum::<f64>()
        / m as f64;
    assert!((got - oracle).abs() < 3e-3, "{got} vs {oracle}");
}

#[test]
fn lindeberg_respects_moment_bound() {
    let law = BaseLaw::UniformCube {
        dim: 1,
        half_width: 3f64.sqrt(),
    };
    // E|X|^3 = 3^(3/2) / 4 for the unit-variance uniform law
    let moment = MomentBound {
        eta: 1.0,
        bound: 3f64.powf(1.5) / 4.0,
    };
    for n in [4, 16, 64] {
        let spec =
            TriangularArraySpec::new(law.clone(), vec![1.0 / (n as f64).sqrt(); n], Some(moment))
                .unwrap();
        for eps in [0.05, 0.2] {
            let mc = lindeberg_sum(&spec, eps, &[1.0], 200_000, &Streams::new(4, "m")).unwrap();
            let bound = lindeberg_moment_bound(&spec, eps, &[1.0]).unwrap();
            assert!(mc <= bound * 1.02 + 1e-4, "n={n} eps={eps}: {mc} > {bound}");
        }
    }
}

#[test]
fn gaussian_density_examples() {
    let half = GaussianTarget::isotropic(2, 0.5).unwrap();
    assert!((gaussian_density(&half, &[0.0, 0.0]).unwrap() - 1.0 / PI).abs() < 1e-15);
    assert!((gaussian_density(&half, &[1.0, 0.0]).unwrap() - (-1.0f64).exp() / PI).abs() < 1e-15);
    let one = GaussianTarget::isotropic(1, 1.0).unwrap();
    assert!((gaussian_density(&one, &[0.0]).unwrap() - 0.398_942_280_401_432_7).abs() < 1e-15);
    assert!(matches!(
        GaussianTarget::new(DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0])),
        Err(LabError::Domain(_))
    ));
}

#[test]
fn supnorm_decreases_with_n() {
    let target = GaussianTarget::isotropic(2, 0.5).unwrap();
    let window = Window::standard(&target);
    let d: Vec<f64> = [8, 64, 512]
        .iter()
        .map(|&n| {
            let spec = TriangularArraySpec::circle_flat(n).unwrap();
            supnorm_to_gaussian(
                &spec,
                &target,
                1_000_000,
                &window,
                16,
                &Streams::new(5, &format!("n{n}")),
            )
            .unwrap()
            .distance
        })
        .collect();
    assert!(d[0] > d[1] && d[1] > d[2], "{d:?}");
}

struct GaussianSampler(f64);

impl PointSampler for GaussianSampler {
    fn dim(&self) -> usize {
        2
    }

    fn draw(&self, rng: &mut SubRng, out: &mut [f64]) {
        for v in out.iter_mut() {
            let z: f64 = StandardNormal.sample(rng);
            *v = self.0 * z;
        }
    }
}

#[test]
fn exact_gaussian_sits_at_the_estimator_floor() {
    let target = GaussianTarget::isotropic(2, 0.5).unwrap();
    let window = Window::standard(&target);
    let samples = 1_000_000;
    let floor = estimator_floor(&target, samples, &window, 16).unwrap();
    let got = supnorm_of_sampler(
        &GaussianSampler(0.5f64.sqrt()),
        &target,
        samples,
        &window,
        16,
        &Streams::new(6, "g"),
    )
    .unwrap();
    assert!(
        got.distance <= 2.0 * floor,
        "{} vs floor {floor}",
        got.distance
    );
}

#[test]
fn supnorm_is_rotation_invariant() {
    // rotating every phase by the same angle rotates the sum
    struct Rotated(circulant_lab::sampling::WeightedSum, f64);
    impl PointSampler for Rotated {
        fn dim(&self) -> usize {
            2
        }
        fn draw(&self, rng: &mut SubRng, out: &mut [f64]) {
            self.0.draw(rng, out);
            let (s, c) = self.1.sin_cos();
            let (x, y) = (out[0], out[1]);
            out[0] = c * x - s * y;
            out[1] = s * x + c * y;
        }
    }
    let target = GaussianTarget::isotropic(2, 0.5).unwrap();
    let window = Window::standard(&target);
    let spec = TriangularArraySpec::circle_flat(16).unwrap();
    let a = supnorm_of_sampler(
        &spec.row_sampler(),
        &target,
        1_000_000,
        &window,
        16,
        &Streams::new(7, "a"),
    )
    .unwrap();
    let b = supnorm_of_sampler(
        &Rotated(spec.row_sampler(), 0.7),
        &target,
        1_000_000,
        &window,
        16,
        &Streams::new(7, "b"),
    )
    .unwrap();
    let combined = (a.max_std_error.powi(2) + b.max_std_error.powi(2)).sqrt();
    assert!(
        (a.distance - b.distance).abs() <= 3.0 * combined,
        "{} vs {}",
        a.distance,
        b.distance
    );
}

#[test]
fn too_few_samples_is_a_resolution_error() {
    let target = GaussianTarget::isotropic(2, 0.5).unwrap();
    let spec = TriangularArraySpec::circle_flat(8).unwrap();
    assert!(matches!(
        supnorm_to_gaussian(
            &spec,
            &target,
            500,
            &Window::standard(&target),
            16,
            &Streams::new(1, "r")
        ),
        Err(LabError::Resolution(_))
    ));
}
