//! Ergodic mutual information of the random circulant channel with an
//! isotropic Gaussian input `Q = P I_N`, and the explicit positivity floor.
//!
//! All rates are in nats.

use num_complex::Complex64;

use crate::channel::{sample_phases, EigenSolver, PowerProfile};
use crate::error::{LabError, Result};
use crate::rng::{map_trials, map_trials_with, Streams};
use crate::stats::{mean_and_sd, proportion_se, Z95};

/// Default number of Monte Carlo channel draws.
pub const DEFAULT_TRIALS: usize = 10_000;

/// Header of the capacity CSV rows.
pub const CSV_HEADER: &str = "profile_name,N,P,trials,mean_rate,ci_radius,seed";

/// Monte Carlo estimate of `E[log det(I + P |H|^2)] / N`.
#[derive(Clone, Debug, PartialEq)]
pub struct CapacityEstimate {
    pub snr: f64,
    pub n: usize,
    pub trials: usize,
    /// Nats per channel use.
    pub mean_rate: f64,
    /// 95% normal-approximation half-width.
    pub ci_radius: f64,
}

impl CapacityEstimate {
    pub fn csv_row(&self, profile_name: &str, seed: u64) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            profile_name, self.n, self.snr, self.trials, self.mean_rate, self.ci_radius, seed
        )
    }
}

/// Estimate of `P(|lambda| >= epsilon)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TailEstimate {
    pub epsilon: f64,
    pub probability: f64,
    pub ci_radius: f64,
}

/// `sum_k ln(1 + P |lambda_k|^2)`.
pub fn mutual_info_flat(eigenvalues: &[Complex64], snr: f64) -> f64 {
    eigenvalues
        .iter()
        .map(|l| (snr * l.norm_sqr()).ln_1p())
        .sum()
}

/// `ln(1 + P eps^2) * tail`.
pub fn epsilon_lower_bound(snr: f64, epsilon: f64, tail: f64) -> Result<f64> {
    if !(snr > 0.0 && epsilon > 0.0) {
        return Err(LabError::Precondition(format!(
            "snr and epsilon must be positive, got P={snr}, eps={epsilon}"
        )));
    }
    if !(0.0..=1.0).contains(&tail) {
        return Err(LabError::Precondition(format!(
            "tail probability {tail} outside [0, 1]"
        )));
    }
    Ok((snr * epsilon * epsilon).ln_1p() * tail)
}

/// `ln(1 + P / (4 B^2)) / 2`, the floor obtained with `eps = 1 / (2B)` and
/// `P(|lambda| < eps) <= B eps`.
pub fn theoretical_floor(snr: f64, b: f64) -> Result<f64> {
    if !(snr > 0.0 && b > 0.0) {
        return Err(LabError::Precondition(format!(
            "snr and concentration constant must be positive, got P={snr}, B={b}"
        )));
    }
    Ok(0.5 * (snr / (4.0 * b * b)).ln_1p())
}

/// Per-realization rate `mutual_info_flat / N` and the matching one-term
/// bound `ln(1 + P eps^2) * 1{|lambda_0| >= eps}`; the first always dominates.
pub fn per_trial_chain(eigenvalues: &[Complex64], snr: f64, epsilon: f64) -> Result<(f64, f64)> {
    let n = eigenvalues.len() as f64;
    let rate = mutual_info_flat(eigenvalues, snr) / n;
    let mean_indicator = eigenvalues.iter().filter(|l| l.norm() >= epsilon).count() as f64 / n;
    Ok((rate, epsilon_lower_bound(snr, epsilon, mean_indicator)?))
}

fn check_unit(profile: &PowerProfile) -> Result<()> {
    if profile.is_unit_norm() {
        Ok(())
    } else {
        Err(LabError::Precondition(format!(
            "profile must have unit l2 norm, has energy {}",
            profile.energy()
        )))
    }
}

/// Capacity estimates for several SNRs sharing the same channel draws.
///
/// Trial `i` uses substream `i` of `streams`, so the result is independent of
/// scheduling and the curve is monotone in `P` draw by draw.
pub fn estimate_capacity_curve(
    profile: &PowerProfile,
    snrs: &[f64],
    trials: usize,
    streams: &Streams,
) -> Result<Vec<CapacityEstimate>> {
    check_unit(profile)?;
    if trials < 2 {
        return Err(LabError::Precondition(format!(
            "need at least 2 trials, got {trials}"
        )));
    }
    if let Some(p) = snrs.iter().find(|p| !(**p > 0.0 && p.is_finite())) {
        return Err(LabError::Precondition(format!(
            "snr must be positive, got {p}"
        )));
    }
    let n = profile.len();
    let per_trial: Vec<Result<Vec<f64>>> = map_trials_with(
        streams,
        trials,
        || (EigenSolver::new(n), Vec::with_capacity(n)),
        |(solver, lambda), rng, _| {
            let phases = sample_phases(n, rng)?;
            solver.eigenvalues_into(profile, &phases, lambda)?;
            Ok(snrs
                .iter()
                .map(|&p| mutual_info_flat(lambda, p) / n as f64)
                .collect())
        },
    );
    let per_trial: Vec<Vec<f64>> = per_trial.into_iter().collect::<Result<_>>()?;
    Ok(snrs
        .iter()
        .enumerate()
        .map(|(j, &snr)| {
            let rates: Vec<f64> = per_trial.iter().map(|r| r[j]).collect();
            let (mean, sd) = mean_and_sd(&rates);
            CapacityEstimate {
                snr,
                n,
                trials,
                mean_rate: mean,
                ci_radius: Z95 * sd / (trials as f64).sqrt(),
            }
        })
        .collect())
}

/// Monte Carlo lower bound on `C_N / N` with `Q = P I_N`.
pub fn estimate_capacity_lb(
    profile: &PowerProfile,
    snr: f64,
    trials: usize,
    streams: &Streams,
) -> Result<CapacityEstimate> {
    let mut curve = estimate_capacity_curve(profile, &[snr], trials, streams)?;
    Ok(curve.remove(0))
}

/// Fraction of draws with `|lambda_0| >= epsilon`.
pub fn tail_probability(
    profile: &PowerProfile,
    epsilon: f64,
    trials: usize,
    streams: &Streams,
) -> Result<TailEstimate> {
    check_unit(profile)?;
    if !(epsilon > 0.0) {
        return Err(LabError::Precondition(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    if trials == 0 {
        return Err(LabError::Precondition("need at least one trial".into()));
    }
    // lambda_0 = sum_m alpha_m X_m needs no transform.
    let hits: Vec<Result<bool>> = map_trials(streams, trials, |rng, _| {
        let phases = sample_phases(profile.len(), rng)?;
        let lambda0: Complex64 = profile
            .coefficients()
            .iter()
            .zip(phases.unit_phasors())
            .map(|(a, x)| x * a)
            .sum();
        Ok(lambda0.norm() >= epsilon)
    });
    let mut count = 0u64;
    for h in hits {
        count += h? as u64;
    }
    Ok(TailEstimate {
        epsilon,
        probability: count as f64 / trials as f64,
        ci_radius: Z95 * proportion_se(count, trials as u64),
    })
}
