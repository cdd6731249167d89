//! Numerical checks of the local central limit theorem for triangular arrays
//! `X_{n,m} = a_m Y_m` with i.i.d. centered `Y_m`.
//!
//! The hypotheses that can be evaluated (covariance sum, Lindeberg sums) are
//! computed directly; the conclusion is checked by comparing a histogram of
//! the row sum with the limiting Gaussian density in sup norm.

use nalgebra::{DMatrix, DVector};

use crate::delocalisation::UNIT_SPHERE_TOL;
use crate::error::{LabError, Result};
use crate::histogram::{DensityHistogram, MIN_RELIABLE_COUNT};
use crate::rng::{fold_chunks, Streams};
use crate::sampling::{BaseLaw, PointSampler, WeightedSum};

/// Certified moment bound `E|Y|^{2 + eta} <= M`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentBound {
    pub eta: f64,
    pub bound: f64,
}

/// One row of a triangular array: `X_m = a_m Y_m`, `m = 1..n`.
#[derive(Clone, Debug, PartialEq)]
pub struct TriangularArraySpec {
    law: BaseLaw,
    coefficients: Vec<f64>,
    moment: Option<MomentBound>,
}

impl TriangularArraySpec {
    pub fn new(law: BaseLaw, coefficients: Vec<f64>, moment: Option<MomentBound>) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(LabError::InvalidDimension(
                "triangular array row is empty".into(),
            ));
        }
        if law.dim() == 0 {
            return Err(LabError::InvalidDimension(
                "dimension must be positive".into(),
            ));
        }
        if let Some(m) = moment {
            if !(m.eta > 0.0 && m.bound > 0.0) {
                return Err(LabError::Precondition(format!(
                    "bad moment certificate {m:?}"
                )));
            }
        }
        Ok(TriangularArraySpec {
            law,
            coefficients,
            moment,
        })
    }

    /// Circle variables with the given real weights. `|Y| = 1`, so
    /// `E|<theta, Y>|^{2 + eta} <= |theta|^{2 + eta}` for every `eta`; the
    /// certificate is recorded with `eta = 1`, `M = 1`.
    pub fn circle(coefficients: Vec<f64>) -> Result<Self> {
        TriangularArraySpec::new(
            BaseLaw::Circle,
            coefficients,
            Some(MomentBound {
                eta: 1.0,
                bound: 1.0,
            }),
        )
    }

    /// `n` circle variables with flat weights `1 / sqrt(n)`.
    pub fn circle_flat(n: usize) -> Result<Self> {
        TriangularArraySpec::circle(vec![(n as f64).sqrt().recip(); n])
    }

    pub fn dim(&self) -> usize {
        self.law.dim()
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn law(&self) -> &BaseLaw {
        &self.law
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn moment(&self) -> Option<MomentBound> {
        self.moment
    }

    /// Analytic covariance `C_{n,m} = a_m^2 Var(Y) I_d`.
    pub fn element_covariance(&self, m: usize) -> DMatrix<f64> {
        let a = self.coefficients[m];
        DMatrix::identity(self.dim(), self.dim()) * (a * a * self.law.variance())
    }

    /// `gamma_n = max_m |a_m|`.
    pub fn max_coefficient(&self) -> f64 {
        self.coefficients.iter().fold(0.0, |m, a| m.max(a.abs()))
    }

    /// Sampler of the row sum `S_n = sum_m X_m`.
    pub fn row_sampler(&self) -> WeightedSum {
        WeightedSum::new(self.coefficients.clone(), self.law.clone())
    }
}

/// `sum_m C_{n,m}`.
///
/// Every element covariance is a multiple of the identity, so the sum is
/// `Var(Y) * sum_m a_m^2 * I`; a unit-norm weight vector gives exactly
/// `Var(Y) * I`.
pub fn covariance_sum(spec: &TriangularArraySpec) -> DMatrix<f64> {
    let d = spec.dim();
    let energy: f64 = spec.coefficients.iter().map(|a| a * a).sum();
    let energy = if (energy - 1.0).abs() <= UNIT_SPHERE_TOL {
        1.0
    } else {
        energy
    };
    DMatrix::identity(d, d) * (energy * spec.law.variance())
}

/// Monte Carlo covariance of the row sum with per-entry standard errors.
pub fn mc_covariance(
    spec: &TriangularArraySpec,
    samples: usize,
    streams: &Streams,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if samples < 2 {
        return Err(LabError::Precondition("need at least two samples".into()));
    }
    let d = spec.dim();
    let sampler = spec.row_sampler();
    // Accumulate first, second and fourth-order cross moments per chunk; the
    // partial sums are merged in chunk order so the result is reproducible.
    let partial = crate::rng::map_chunks(streams, samples, |rng, len| {
        let mut s1 = vec![0.0; d];
        let mut s2 = vec![0.0; d * d];
        let mut s4 = vec![0.0; d * d];
        let mut p = vec![0.0; d];
        for _ in 0..len {
            sampler.draw(rng, &mut p);
            for i in 0..d {
                s1[i] += p[i];
                for j in 0..d {
                    let v = p[i] * p[j];
                    s2[i * d + j] += v;
                    s4[i * d + j] += v * v;
                }
            }
        }
        (s1, s2, s4)
    });
    let mut s1 = vec![0.0; d];
    let mut s2 = vec![0.0; d * d];
    let mut s4 = vec![0.0; d * d];
    for (a, b, c) in partial {
        s1.iter_mut().zip(a).for_each(|(x, y)| *x += y);
        s2.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        s4.iter_mut().zip(c).for_each(|(x, y)| *x += y);
    }
    let n = samples as f64;
    let mean: Vec<f64> = s1.iter().map(|v| v / n).collect();
    let cov = DMatrix::from_fn(d, d, |i, j| s2[i * d + j] / n - mean[i] * mean[j]);
    // The centering correction is O(1/n); the error of the mean of the
    // products dominates.
    let se = DMatrix::from_fn(d, d, |i, j| {
        let m2 = s2[i * d + j] / n;
        let m4 = s4[i * d + j] / n;
        ((m4 - m2 * m2).max(0.0) / n).sqrt()
    });
    Ok((cov, se))
}

/// Directions used for the Lindeberg check: `+-1` in one dimension, eight
/// unit vectors at 45 degree spacing in the plane.
pub fn lindeberg_directions(dim: usize) -> Vec<Vec<f64>> {
    match dim {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..8)
            .map(|k| {
                let t = k as f64 * std::f64::consts::FRAC_PI_4;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        _ => (0..dim)
            .flat_map(|k| {
                [1.0, -1.0].map(|s| {
                    let mut v = vec![0.0; dim];
                    v[k] = s;
                    v
                })
            })
            .collect(),
    }
}

/// Monte Carlo estimate of
/// `sum_m E[<theta, X_m>^2 1{|<theta, X_m>| > eps}]`.
///
/// One set of `samples` draws of `Y` serves every element: the projections
/// `t = <theta, Y>` are sorted by magnitude so each element's truncated second
/// moment is a prefix sum.
pub fn lindeberg_sum(
    spec: &TriangularArraySpec,
    epsilon: f64,
    theta: &[f64],
    samples: usize,
    streams: &Streams,
) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(LabError::Precondition(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    if theta.len() != spec.dim() {
        return Err(LabError::DimensionMismatch {
            expected: spec.dim(),
            actual: theta.len(),
        });
    }
    if samples == 0 {
        return Err(LabError::Precondition("need at least one sample".into()));
    }
    let d = spec.dim();
    let law = spec.law().clone();
    let mut proj: Vec<f64> = crate::rng::map_chunks(streams, samples, |rng, len| {
        let mut y = vec![0.0; d];
        (0..len)
            .map(|_| {
                law.draw(rng, &mut y);
                y.iter().zip(theta).map(|(a, b)| a * b).sum::<f64>().abs()
            })
            .collect::<Vec<f64>>()
    })
    .concat();
    proj.sort_by(|a, b| b.total_cmp(a));
    // tail[i] = sum of t^2 over the i largest projections.
    let mut tail = Vec::with_capacity(proj.len() + 1);
    tail.push(0.0);
    for t in &proj {
        tail.push(tail.last().unwrap() + t * t);
    }
    let n = samples as f64;
    let mut total = 0.0;
    for &a in spec.coefficients() {
        let a = a.abs();
        if a == 0.0 {
            continue;
        }
        let cut = epsilon / a;
        let k = proj.partition_point(|t| *t > cut);
        total += a * a * tail[k] / n;
    }
    Ok(total)
}

/// The moment-based upper bound `M |theta|^{2+eta} gamma^eta / eps^eta` on
/// the Lindeberg sum, for unit-norm coefficient rows.
pub fn lindeberg_moment_bound(
    spec: &TriangularArraySpec,
    epsilon: f64,
    theta: &[f64],
) -> Option<f64> {
    let m = spec.moment()?;
    let norm = theta.iter().map(|t| t * t).sum::<f64>().sqrt();
    Some(
        m.bound * norm.powf(2.0 + m.eta) * spec.max_coefficient().powf(m.eta) / epsilon.powf(m.eta),
    )
}

/// Centered Gaussian law `N(0, C)` with a positive-definite covariance.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianTarget {
    covariance: DMatrix<f64>,
    inverse: DMatrix<f64>,
    determinant: f64,
}

impl GaussianTarget {
    pub fn new(covariance: DMatrix<f64>) -> Result<Self> {
        if !covariance.is_square() || covariance.nrows() == 0 {
            return Err(LabError::Domain(
                "covariance must be a nonempty square matrix".into(),
            ));
        }
        let asym = (&covariance - covariance.transpose()).abs().max();
        if asym > 1e-12 * covariance.abs().max().max(1.0) {
            return Err(LabError::Domain("covariance must be symmetric".into()));
        }
        let chol = covariance
            .clone()
            .cholesky()
            .ok_or_else(|| LabError::Domain("covariance is not positive definite".into()))?;
        let determinant = chol.l().diagonal().product().powi(2);
        if !(determinant > 0.0) {
            return Err(LabError::Domain("covariance is singular".into()));
        }
        Ok(GaussianTarget {
            inverse: chol.inverse(),
            covariance,
            determinant,
        })
    }

    /// `s * I_d`.
    pub fn isotropic(dim: usize, variance: f64) -> Result<Self> {
        GaussianTarget::new(DMatrix::identity(dim, dim) * variance)
    }

    pub fn dim(&self) -> usize {
        self.covariance.nrows()
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn determinant(&self) -> f64 {
        self.determinant
    }

    /// Per-axis standard deviations.
    pub fn std_devs(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|k| self.covariance[(k, k)].sqrt())
            .collect()
    }

    pub fn peak_density(&self) -> f64 {
        (std::f64::consts::TAU).powf(-(self.dim() as f64) / 2.0) / self.determinant.sqrt()
    }
}

/// `(2 pi)^{-d/2} det(C)^{-1/2} exp(-x^T C^{-1} x / 2)`.
pub fn gaussian_density(target: &GaussianTarget, x: &[f64]) -> Result<f64> {
    if x.len() != target.dim() {
        return Err(LabError::DimensionMismatch {
            expected: target.dim(),
            actual: x.len(),
        });
    }
    let v = DVector::from_column_slice(x);
    let q = v.dot(&(&target.inverse * &v));
    Ok(target.peak_density() * (-0.5 * q).exp())
}

/// Axis-aligned box `[lo, hi]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Window {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Window {
    /// `[-4 sigma_k, 4 sigma_k]` per axis.
    pub fn standard(target: &GaussianTarget) -> Window {
        let s = target.std_devs();
        Window {
            lo: s.iter().map(|v| -4.0 * v).collect(),
            hi: s.iter().map(|v| 4.0 * v).collect(),
        }
    }
}

/// Default number of bins per axis for the sup-norm comparison.
pub const DEFAULT_SUPNORM_BINS: usize = 16;

/// Sup-norm distance between a histogram and the Gaussian density.
#[derive(Clone, Debug, PartialEq)]
pub struct SupnormResult {
    pub distance: f64,
    /// Center of the bin realising the distance.
    pub at: Vec<f64>,
    /// Standard error of the histogram height at that bin.
    pub std_error: f64,
    /// Largest standard error over all bins.
    pub max_std_error: f64,
    pub samples: usize,
    pub bin_widths: Vec<f64>,
}

fn supnorm_grid(target: &GaussianTarget, window: &Window, bins: usize) -> Result<DensityHistogram> {
    let d = target.dim();
    if window.lo.len() != d || window.hi.len() != d {
        return Err(LabError::DimensionMismatch {
            expected: d,
            actual: window.lo.len(),
        });
    }
    if d > 2 {
        return Err(LabError::UnsupportedDimension(d));
    }
    for (k, s) in target.std_devs().iter().enumerate() {
        if window.lo[k] > -4.0 * s || window.hi[k] < 4.0 * s {
            return Err(LabError::Precondition(format!(
                "window must cover 4 standard deviations on axis {k}"
            )));
        }
    }
    if bins == 0 {
        return Err(LabError::Configuration(
            "need at least one bin per axis".into(),
        ));
    }
    let widths: Vec<f64> = window
        .lo
        .iter()
        .zip(&window.hi)
        .map(|(l, h)| (h - l) / bins as f64)
        .collect();
    DensityHistogram::new(window.lo.clone(), widths, vec![bins; d])
}

/// Sup-norm distance of any sampler's histogram to `g_C`.
pub fn supnorm_of_sampler(
    sampler: &dyn PointSampler,
    target: &GaussianTarget,
    samples: usize,
    window: &Window,
    bins: usize,
    streams: &Streams,
) -> Result<SupnormResult> {
    if sampler.dim() != target.dim() {
        return Err(LabError::DimensionMismatch {
            expected: target.dim(),
            actual: sampler.dim(),
        });
    }
    let template = supnorm_grid(target, window, bins)?;
    // Reliability is judged at the bin where the target is tallest.
    let peak_expected = (0..template.counts().len())
        .map(|i| gaussian_density(target, &template.center(i)).unwrap_or(0.0))
        .fold(0.0, f64::max)
        * template.bin_volume()
        * samples as f64;
    if peak_expected < MIN_RELIABLE_COUNT {
        return Err(LabError::Resolution(format!(
            "expected count {peak_expected:.1} in the central bin is below {MIN_RELIABLE_COUNT}"
        )));
    }
    let d = target.dim();
    let hist = fold_chunks(
        streams,
        samples,
        || template.empty_like(),
        |acc, rng, len| {
            let mut p = vec![0.0; d];
            for _ in 0..len {
                sampler.draw(rng, &mut p);
                acc.add(&p);
            }
        },
        |mut a, b| {
            a.merge(&b).expect("identical geometry");
            a
        },
    );
    let mut best = (0.0f64, 0usize);
    let mut max_se = 0.0f64;
    for i in 0..hist.counts().len() {
        let g = gaussian_density(target, &hist.center(i))?;
        let diff = (hist.density(i) - g).abs();
        max_se = max_se.max(hist.std_error(i));
        if diff > best.0 {
            best = (diff, i);
        }
    }
    Ok(SupnormResult {
        distance: best.0,
        at: hist.center(best.1),
        std_error: hist.std_error(best.1),
        max_std_error: max_se,
        samples,
        bin_widths: hist.widths().to_vec(),
    })
}

/// `max over bins |f_hat(bin) - g_C(bin center)|` for the row sum of `spec`.
pub fn supnorm_to_gaussian(
    spec: &TriangularArraySpec,
    target: &GaussianTarget,
    samples: usize,
    window: &Window,
    bins: usize,
    streams: &Streams,
) -> Result<SupnormResult> {
    supnorm_of_sampler(&spec.row_sampler(), target, samples, window, bins, streams)
}

/// Distance an exact sampler of `g_C` would typically show on this grid: the
/// largest gap between a bin average of `g_C` and its center value, plus three
/// binomial standard errors at the tallest bin.
pub fn estimator_floor(
    target: &GaussianTarget,
    samples: usize,
    window: &Window,
    bins: usize,
) -> Result<f64> {
    let grid = supnorm_grid(target, window, bins)?;
    let d = target.dim();
    // 5-point Gauss–Legendre in every axis of the bin.
    const NODES: [f64; 5] = [
        -0.906_179_845_938_664,
        -0.538_469_310_105_683,
        0.0,
        0.538_469_310_105_683,
        0.906_179_845_938_664,
    ];
    const WEIGHTS: [f64; 5] = [
        0.236_926_885_056_189,
        0.478_628_670_499_366,
        0.568_888_888_888_889,
        0.478_628_670_499_366,
        0.236_926_885_056_189,
    ];
    let mut bias = 0.0f64;
    let mut peak = 0.0f64;
    for i in 0..grid.counts().len() {
        let c = grid.center(i);
        let center_value = gaussian_density(target, &c)?;
        peak = peak.max(center_value);
        let mut avg = 0.0;
        let points = 5usize.pow(d as u32);
        for q in 0..points {
            let mut x = c.clone();
            let mut w = 1.0;
            let mut rem = q;
            for k in 0..d {
                let j = rem % 5;
                rem /= 5;
                x[k] += 0.5 * grid.widths()[k] * NODES[j];
                w *= 0.5 * WEIGHTS[j];
            }
            avg += w * gaussian_density(target, &x)?;
        }
        bias = bias.max((avg - center_value).abs());
    }
    let vol = grid.bin_volume();
    let p = peak * vol;
    let se = (p * (1.0 - p) / samples as f64).sqrt() / vol;
    Ok(bias + 3.0 * se)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_density_examples() {
        let half = GaussianTarget::isotropic(2, 0.5).unwrap();
        assert!(
            (gaussian_density(&half, &[0.0, 0.0]).unwrap() - std::f64::consts::FRAC_1_PI).abs()
                < 1e-15
        );
        let e = gaussian_density(&half, &[1.0, 0.0]).unwrap();
        assert!((e - std::f64::consts::FRAC_1_PI * (-1f64).exp()).abs() < 1e-15);
        let one = GaussianTarget::isotropic(1, 1.0).unwrap();
        assert!((gaussian_density(&one, &[0.0]).unwrap() - 0.398_942_280_401_432_7).abs() < 1e-15);
        assert!(gaussian_density(&one, &[0.0, 1.0]).is_err());
    }

    #[test]
    fn singular_covariance_is_rejected() {
        assert!(matches!(
            GaussianTarget::new(DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0])),
            Err(LabError::Domain(_))
        ));
        assert!(GaussianTarget::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0])).is_err());
    }

    #[test]
    fn covariance_sum_examples() {
        let single = TriangularArraySpec::new(
            BaseLaw::UniformCube {
                dim: 2,
                half_width: 3f64.sqrt(),
            },
            vec![1.0],
            None,
        )
        .unwrap();
        assert_eq!(covariance_sum(&single), single.element_covariance(0));
        let circle = TriangularArraySpec::circle(vec![0.6, 0.8]).unwrap();
        let c = covariance_sum(&circle);
        assert!((c - DMatrix::identity(2, 2) * 0.5).abs().max() < 1e-15);
    }

    #[test]
    fn lindeberg_vanishes_for_large_epsilon_and_fine_rows() {
        let s = Streams::new(3, "lb");
        let spec = TriangularArraySpec::circle_flat(400).unwrap();
        // |<theta, a X>| <= 1/20 < eps.
        for theta in lindeberg_directions(2) {
            assert_eq!(lindeberg_sum(&spec, 0.06, &theta, 5000, &s).unwrap(), 0.0);
        }
        let spec = TriangularArraySpec::circle(vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(
            lindeberg_sum(&spec, 10.0, &[1.0, 0.0], 5000, &s).unwrap(),
            0.0
        );
        assert!(lindeberg_sum(&spec, 0.0, &[1.0, 0.0], 10, &s).is_err());
    }

    #[test]
    fn supnorm_preconditions() {
        let target = GaussianTarget::isotropic(2, 0.5).unwrap();
        let spec = TriangularArraySpec::circle_flat(8).unwrap();
        let s = Streams::new(1, "sn");
        let narrow = Window {
            lo: vec![-1.0, -1.0],
            hi: vec![1.0, 1.0],
        };
        assert!(matches!(
            supnorm_to_gaussian(&spec, &target, 1000, &narrow, 16, &s),
            Err(LabError::Precondition(_))
        ));
        assert!(matches!(
            supnorm_to_gaussian(&spec, &target, 1000, &Window::standard(&target), 16, &s),
            Err(LabError::Resolution(_))
        ));
    }
}
