//! Random circulant channels under independent uniform tap phases.
//!
//! The channel acts on length-`N` complex signals by cyclic convolution with
//! the taps `alpha_m * X_m`, where `X_m = exp(i * angle_m)`. Its eigenvectors
//! are the exponentials `e_k[m] = exp(2 pi i k m / N)` with eigenvalues
//!
//! ```text
//! lambda_k = sum_m alpha_m X_m exp(-2 pi i k m / N),   k = 0, ..., N - 1.
//! ```
//!
//! Index `k = 0` here plays the role of `k = N` in a one-based numbering.

use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::{Fft, FftPlanner};

use crate::error::{LabError, Result};

/// Tolerance on `sum alpha_m^2 - 1` for a profile to count as unit-norm.
pub const UNIT_NORM_TOL: f64 = 1e-12;

/// Nonnegative tap magnitudes `alpha_0, ..., alpha_{N-1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerProfile {
    coefficients: Vec<f64>,
}

impl PowerProfile {
    pub fn new(coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(LabError::InvalidDimension(
                "profile must have at least one tap".into(),
            ));
        }
        if let Some(bad) = coefficients.iter().find(|a| !(a.is_finite() && **a >= 0.0)) {
            return Err(LabError::Domain(format!(
                "profile coefficients must be finite and nonnegative, got {bad}"
            )));
        }
        Ok(PowerProfile { coefficients })
    }

    /// Profile rescaled to unit l2 norm.
    pub fn normalized(coefficients: Vec<f64>) -> Result<Self> {
        let p = PowerProfile::new(coefficients)?;
        let norm = p.energy().sqrt();
        if norm == 0.0 {
            return Err(LabError::Domain(
                "cannot normalise an all-zero profile".into(),
            ));
        }
        Ok(PowerProfile {
            coefficients: p.coefficients.iter().map(|a| a / norm).collect(),
        })
    }

    /// `alpha = e_0`.
    pub fn delta(n: usize) -> Result<Self> {
        check_len(n)?;
        let mut c = vec![0.0; n];
        c[0] = 1.0;
        PowerProfile::new(c)
    }

    /// `alpha_m = 1 / sqrt(N)`.
    pub fn flat(n: usize) -> Result<Self> {
        check_len(n)?;
        PowerProfile::new(vec![(n as f64).sqrt().recip(); n])
    }

    /// `alpha_m` proportional to `rho^m`, normalised.
    pub fn geometric(n: usize, rho: f64) -> Result<Self> {
        check_len(n)?;
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(LabError::Domain(format!(
                "geometric ratio must be positive, got {rho}"
            )));
        }
        PowerProfile::normalized((0..n).map(|m| rho.powi(m as i32)).collect())
    }

    /// `k` equal taps in the first `k` positions, normalised.
    pub fn sparse(n: usize, k: usize) -> Result<Self> {
        check_len(n)?;
        if k == 0 || k > n {
            return Err(LabError::Domain(format!(
                "sparse profile needs 1 <= k <= {n}, got {k}"
            )));
        }
        let mut c = vec![0.0; n];
        c[..k].fill((k as f64).sqrt().recip());
        PowerProfile::new(c)
    }

    /// Resolves a preset name: `delta`, `flat`, `geometric(rho)` or `sparse(k)`.
    pub fn preset(spec: &str, n: usize) -> Result<Self> {
        let spec = spec.trim();
        let arg = |prefix: &str| -> Option<&str> {
            spec.strip_prefix(prefix)
                .and_then(|rest| rest.strip_prefix('('))
                .and_then(|rest| rest.strip_suffix(')'))
                .map(str::trim)
        };
        match spec {
            "delta" => PowerProfile::delta(n),
            "flat" => PowerProfile::flat(n),
            _ => {
                if let Some(rho) = arg("geometric") {
                    let rho = rho.parse::<f64>().map_err(|_| {
                        LabError::parse("profile", format!("bad ratio in `{spec}`"))
                    })?;
                    PowerProfile::geometric(n, rho)
                } else if let Some(k) = arg("sparse") {
                    let k = k.parse::<usize>().map_err(|_| {
                        LabError::parse("profile", format!("bad tap count in `{spec}`"))
                    })?;
                    PowerProfile::sparse(n, k)
                } else {
                    Err(LabError::parse(
                        "profile",
                        format!("unknown profile preset `{spec}`"),
                    ))
                }
            }
        }
    }

    /// Parses a JSON array of nonnegative reals.
    pub fn from_json(text: &str) -> Result<Self> {
        let coefficients: Vec<f64> =
            serde_json::from_str(text).map_err(|e| LabError::parse("profile", e.to_string()))?;
        PowerProfile::new(coefficients)
    }

    /// Random unit-norm profile with `|Gaussian|` magnitudes.
    pub fn random_dense<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        check_len(n)?;
        PowerProfile::normalized(
            (0..n)
                .map(|_| rng.sample::<f64, _>(StandardNormal).abs() + f64::MIN_POSITIVE)
                .collect(),
        )
    }

    /// Random unit-norm profile with `k` nonzero taps at random positions.
    pub fn random_sparse<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<Self> {
        check_len(n)?;
        if k == 0 || k > n {
            return Err(LabError::Domain(format!(
                "sparse profile needs 1 <= k <= {n}, got {k}"
            )));
        }
        let mut c = vec![0.0; n];
        for pos in rand::seq::index::sample(rng, n, k) {
            c[pos] = 0.1 + rng.gen::<f64>();
        }
        PowerProfile::normalized(c)
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// `sum alpha_m^2`.
    pub fn energy(&self) -> f64 {
        self.coefficients.iter().map(|a| a * a).sum()
    }

    pub fn is_unit_norm(&self) -> bool {
        (self.energy() - 1.0).abs() <= UNIT_NORM_TOL
    }

    /// Cyclic shift by `shift` positions.
    pub fn rotated(&self, shift: usize) -> PowerProfile {
        let mut c = self.coefficients.clone();
        let n = c.len();
        c.rotate_right(shift % n);
        PowerProfile { coefficients: c }
    }
}

fn check_len(n: usize) -> Result<()> {
    if n == 0 {
        Err(LabError::InvalidDimension(
            "channel length must be at least 1".into(),
        ))
    } else {
        Ok(())
    }
}

/// Tap phases stored as angles in `[0, 2 pi)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseVector {
    angles: Vec<f64>,
}

impl PhaseVector {
    pub fn new(angles: Vec<f64>) -> Result<Self> {
        if let Some(a) = angles.iter().find(|a| !(**a >= 0.0 && **a < TAU)) {
            return Err(LabError::Domain(format!("phase {a} outside [0, 2pi)")));
        }
        Ok(PhaseVector { angles })
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    /// `X_m = exp(i angle_m)`.
    pub fn unit_phasors(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.angles.iter().map(|&a| Complex64::from_polar(1.0, a))
    }

    /// Every phase advanced by `theta`, wrapped back into `[0, 2 pi)`.
    pub fn rotated(&self, theta: f64) -> PhaseVector {
        PhaseVector {
            angles: self.angles.iter().map(|a| wrap_angle(a + theta)).collect(),
        }
    }
}

fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Draws `n` i.i.d. uniform phases from `rng`.
pub fn sample_phases<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<PhaseVector> {
    check_len(n)?;
    Ok(PhaseVector {
        angles: (0..n).map(|_| wrap_angle(rng.gen::<f64>() * TAU)).collect(),
    })
}

/// Complex baseband signal of length `N`.
#[derive(Clone, Debug, PartialEq)]
pub struct Signal {
    pub samples: Vec<Complex64>,
}

impl Signal {
    pub fn new(samples: Vec<Complex64>) -> Self {
        Signal { samples }
    }

    pub fn zeros(n: usize) -> Self {
        Signal {
            samples: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    /// The exponential `e_k[m] = exp(2 pi i k m / N)`.
    pub fn exponential(n: usize, k: usize) -> Self {
        Signal {
            samples: (0..n)
                .map(|m| Complex64::from_polar(1.0, TAU * ((k * m) % n) as f64 / n as f64))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// `n` i.i.d. circularly symmetric complex Gaussians with `E|w|^2 = 1`.
pub fn sample_awgn<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Signal> {
    check_len(n)?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Ok(Signal {
        samples: (0..n)
            .map(|_| {
                Complex64::new(
                    s * rng.sample::<f64, _>(StandardNormal),
                    s * rng.sample::<f64, _>(StandardNormal),
                )
            })
            .collect(),
    })
}

/// Reusable forward/inverse transforms for one channel length.
#[derive(Clone)]
pub struct EigenSolver {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
}

impl EigenSolver {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        EigenSolver {
            forward,
            inverse,
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
        }
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.len() == 0
    }

    /// Writes `lambda_0 .. lambda_{N-1}` into `out`.
    pub fn eigenvalues_into(
        &mut self,
        profile: &PowerProfile,
        phases: &PhaseVector,
        out: &mut Vec<Complex64>,
    ) -> Result<()> {
        let n = self.len();
        if profile.len() != n {
            return Err(LabError::DimensionMismatch {
                expected: n,
                actual: profile.len(),
            });
        }
        if phases.len() != n {
            return Err(LabError::DimensionMismatch {
                expected: n,
                actual: phases.len(),
            });
        }
        out.clear();
        out.extend(
            profile
                .coefficients()
                .iter()
                .zip(phases.angles())
                .map(|(&a, &t)| Complex64::from_polar(a, t)),
        );
        self.forward.process_with_scratch(out, &mut self.scratch);
        Ok(())
    }

    fn forward(&mut self, buf: &mut [Complex64]) {
        self.forward.process_with_scratch(buf, &mut self.scratch);
    }

    fn inverse(&mut self, buf: &mut [Complex64]) {
        self.inverse.process_with_scratch(buf, &mut self.scratch);
    }
}

/// Eigenvalues `lambda_k`, `k = 0 .. N - 1`, of the circulant channel.
pub fn eigenvalues(profile: &PowerProfile, phases: &PhaseVector) -> Result<Vec<Complex64>> {
    if profile.len() != phases.len() {
        return Err(LabError::DimensionMismatch {
            expected: profile.len(),
            actual: phases.len(),
        });
    }
    let mut out = Vec::with_capacity(profile.len());
    EigenSolver::new(profile.len()).eigenvalues_into(profile, phases, &mut out)?;
    Ok(out)
}

/// One draw of the channel: profile, phases and the resulting eigenvalues.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelRealization {
    profile: PowerProfile,
    phases: PhaseVector,
    eigenvalues: Vec<Complex64>,
}

impl ChannelRealization {
    pub fn new(profile: PowerProfile, phases: PhaseVector) -> Result<Self> {
        let eigenvalues = eigenvalues(&profile, &phases)?;
        Ok(ChannelRealization {
            profile,
            phases,
            eigenvalues,
        })
    }

    pub fn sample<R: Rng + ?Sized>(profile: PowerProfile, rng: &mut R) -> Result<Self> {
        let phases = sample_phases(profile.len(), rng)?;
        ChannelRealization::new(profile, phases)
    }

    pub fn len(&self) -> usize {
        self.profile.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profile.is_empty()
    }

    pub fn profile(&self) -> &PowerProfile {
        &self.profile
    }

    pub fn phases(&self) -> &PhaseVector {
        &self.phases
    }

    pub fn eigenvalues(&self) -> &[Complex64] {
        &self.eigenvalues
    }

    /// Complex taps `alpha_m X_m`.
    pub fn taps(&self) -> Vec<Complex64> {
        self.profile
            .coefficients()
            .iter()
            .zip(self.phases.angles())
            .map(|(&a, &t)| Complex64::from_polar(a, t))
            .collect()
    }

    /// Relative deviation of `sum |lambda_k|^2` from `N sum alpha_m^2`.
    pub fn parseval_residual(&self) -> f64 {
        let lhs: f64 = self.eigenvalues.iter().map(|l| l.norm_sqr()).sum();
        let rhs = self.len() as f64 * self.profile.energy();
        if rhs == 0.0 {
            lhs
        } else {
            (lhs - rhs).abs() / rhs
        }
    }
}

/// `y[n] = sum_m alpha_m X_m x[(n - m) mod N] + w[n]`.
pub fn apply_channel(real: &ChannelRealization, input: &Signal, noise: &Signal) -> Result<Signal> {
    let n = real.len();
    for len in [input.len(), noise.len()] {
        if len != n {
            return Err(LabError::DimensionMismatch {
                expected: n,
                actual: len,
            });
        }
    }
    let mut solver = EigenSolver::new(n);
    let mut buf = input.samples.clone();
    solver.forward(&mut buf);
    for (b, l) in buf.iter_mut().zip(real.eigenvalues()) {
        *b *= l;
    }
    solver.inverse(&mut buf);
    let scale = 1.0 / n as f64;
    Ok(Signal {
        samples: buf
            .iter()
            .zip(&noise.samples)
            .map(|(y, w)| y * scale + w)
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Streams;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn presets() {
        assert!(PowerProfile::delta(4).unwrap().is_unit_norm());
        assert!(PowerProfile::flat(7).unwrap().is_unit_norm());
        assert!(PowerProfile::preset("geometric(0.5)", 9)
            .unwrap()
            .is_unit_norm());
        let s = PowerProfile::preset("sparse(3)", 8).unwrap();
        assert!(s.is_unit_norm());
        assert_eq!(s.coefficients().iter().filter(|a| **a > 0.0).count(), 3);
        assert!(PowerProfile::preset("sparse(9)", 8).is_err());
        assert!(PowerProfile::preset("bogus", 8).is_err());
        let j = PowerProfile::from_json("[0.6, 0.8, 0]").unwrap();
        assert!(j.is_unit_norm());
        assert!(PowerProfile::from_json("[1, -1]").is_err());
        assert!(PowerProfile::from_json("[]").is_err());
    }

    #[test]
    fn sample_phases_range_and_errors() {
        let mut rng = Streams::new(3, "phases").stream(0);
        let p = sample_phases(3, &mut rng).unwrap();
        assert_eq!(p.len(), 3);
        assert!(p.angles().iter().all(|a| (0.0..TAU).contains(a)));
        assert!(matches!(
            sample_phases(0, &mut rng),
            Err(LabError::InvalidDimension(_))
        ));
        assert!(sample_awgn(0, &mut rng).is_err());
    }

    #[test]
    fn delta_profile_passes_phase_through() {
        let profile = PowerProfile::new(vec![1.0, 0.0]).unwrap();
        let phases = PhaseVector::new(vec![0.0, 1.234]).unwrap();
        let l = eigenvalues(&profile, &phases).unwrap();
        assert!((l[0] - c(1.0, 0.0)).norm() < 1e-15);
        assert!((l[1] - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn two_tap_eigenvalues() {
        let a = std::f64::consts::FRAC_1_SQRT_2;
        let profile = PowerProfile::new(vec![a, a]).unwrap();
        let phases = PhaseVector::new(vec![0.0, 0.0]).unwrap();
        let l = eigenvalues(&profile, &phases).unwrap();
        assert!((l[0] - c(2f64.sqrt(), 0.0)).norm() < 1e-15);
        assert!(l[1].norm() < 1e-15);
    }

    #[test]
    fn length_mismatch_is_reported() {
        let profile = PowerProfile::flat(3).unwrap();
        let phases = PhaseVector::new(vec![0.0; 2]).unwrap();
        assert!(matches!(
            eigenvalues(&profile, &phases),
            Err(LabError::DimensionMismatch { .. })
        ));
        let real =
            ChannelRealization::new(profile, PhaseVector::new(vec![0.0; 3]).unwrap()).unwrap();
        assert!(apply_channel(&real, &Signal::zeros(2), &Signal::zeros(3)).is_err());
        assert!(apply_channel(&real, &Signal::zeros(3), &Signal::zeros(4)).is_err());
    }

    #[test]
    fn identity_and_delay_channels() {
        let n = 6;
        let x = Signal::new((0..n).map(|k| c(k as f64, 1.0 - k as f64)).collect());
        let id = ChannelRealization::new(
            PowerProfile::delta(n).unwrap(),
            PhaseVector::new(vec![0.0; n]).unwrap(),
        )
        .unwrap();
        let y = apply_channel(&id, &x, &Signal::zeros(n)).unwrap();
        for (a, b) in y.samples.iter().zip(&x.samples) {
            assert!((a - b).norm() < 1e-12);
        }

        let theta = 0.7;
        let mut alpha = vec![0.0; n];
        alpha[1] = 1.0;
        let mut angles = vec![0.0; n];
        angles[1] = theta;
        let delay = ChannelRealization::new(
            PowerProfile::new(alpha).unwrap(),
            PhaseVector::new(angles).unwrap(),
        )
        .unwrap();
        let y = apply_channel(&delay, &x, &Signal::zeros(n)).unwrap();
        let rot = Complex64::from_polar(1.0, theta);
        for k in 0..n {
            assert!((y.samples[k] - rot * x.samples[(k + n - 1) % n]).norm() < 1e-12);
        }
    }

    #[test]
    fn awgn_is_reproducible() {
        let s = Streams::new(42, "awgn");
        let a = sample_awgn(1, &mut s.stream(0)).unwrap();
        let b = sample_awgn(1, &mut s.stream(0)).unwrap();
        assert_eq!(a, b);
    }
}
