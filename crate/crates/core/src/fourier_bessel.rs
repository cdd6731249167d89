//! The Bessel function `J_0`, its `sqrt(r)` envelope, and the Fourier-side
//! density bound for sums of five scaled circle variables.
//!
//! The uniform law on the circle of radius `r` has Fourier transform
//! `x -> J_0(r |x|)`. Since `|J_0(r)| <= min(1, K / sqrt(r))`, the product of
//! five such transforms is integrable and bounds the density of the sum.

use std::f64::consts::{FRAC_PI_4, PI, TAU};

use crate::error::{LabError, Result};
use crate::quadrature::{integrate, integrate_to_infinity};

/// `sqrt(2 / pi)`, the asymptotic amplitude of `sqrt(r) J_0(r)`.
pub const ASYMPTOTIC_AMPLITUDE: f64 = 0.797_884_560_802_865_4;

/// Argument above which the Hankel expansion replaces the power series.
const SERIES_CUTOFF: f64 = 12.0;

/// Bessel function of the first kind of order zero.
///
/// Power series below `r = 12`, Hankel asymptotic expansion above; absolute
/// error stays below `1e-10` on `[0, 1e4]`.
pub fn bessel_j0(r: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(LabError::Domain(format!("J0 requires r >= 0, got {r}")));
    }
    Ok(if r < SERIES_CUTOFF {
        j0_series(r)
    } else {
        j0_hankel(r)
    })
}

fn j0_series(r: f64) -> f64 {
    let q = 0.25 * r * r;
    let mut term = 1.0;
    let mut sum = 1.0;
    for m in 1..200 {
        term *= -q / (m * m) as f64;
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-300) && term.abs() < 1e-20 {
            break;
        }
    }
    sum
}

fn j0_hankel(r: f64) -> f64 {
    // a_k / r^k with a_k = a_{k-1} * (-(2k - 1)^2) / (8k); P collects the even
    // terms with alternating signs, Q the odd ones.
    let mut p = 1.0;
    let mut q = 0.0;
    let mut c = 1.0f64;
    let mut prev = f64::INFINITY;
    for k in 1..100 {
        let odd = (2 * k - 1) as f64;
        c *= -(odd * odd) / (8.0 * k as f64 * r);
        if c.abs() >= prev || c.abs() < 1e-18 {
            break;
        }
        prev = c.abs();
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += sign * c;
        } else {
            q += sign * c;
        }
    }
    let chi = r - FRAC_PI_4;
    (2.0 / (PI * r)).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// Fourier transform of the uniform law on the circle of radius `radius`,
/// evaluated at `x`: `J_0(radius * |x|)`.
pub fn fourier_uniform_circle(radius: f64, x: [f64; 2]) -> Result<f64> {
    if !(radius > 0.0) {
        return Err(LabError::Domain(format!(
            "circle radius must be positive, got {radius}"
        )));
    }
    bessel_j0(radius * x[0].hypot(x[1]))
}

/// Numerical value of `sup_r sqrt(r) |J_0(r)|` over a searched range.
#[derive(Clone, Debug, PartialEq)]
pub struct BesselEnvelope {
    /// `max(grid maximum, sqrt(2 / pi))`.
    pub constant: f64,
    /// Largest value of `sqrt(r) |J_0(r)|` found on `(0, r_max]`.
    pub grid_max: f64,
    pub argmax: f64,
    pub r_max: f64,
}

fn envelope(r: f64) -> f64 {
    r.sqrt() * j0_any(r).abs()
}

fn j0_any(r: f64) -> f64 {
    if r < SERIES_CUTOFF {
        j0_series(r)
    } else {
        j0_hankel(r)
    }
}

/// Maximises `sqrt(r) |J_0(r)|` on a uniform grid of `resolution` points in
/// `(0, r_max]`, polishing every local maximum by golden-section search.
///
/// The supremum is only approached as `r -> inf`, so the reported constant is
/// never below the asymptotic amplitude `sqrt(2 / pi)`.
pub fn envelope_constant(r_max: f64, resolution: usize) -> Result<BesselEnvelope> {
    if !(r_max >= 100.0 && r_max.is_finite()) {
        return Err(LabError::Precondition(format!(
            "r_max must be at least 100, got {r_max}"
        )));
    }
    if resolution < 3 {
        return Err(LabError::Precondition(
            "envelope grid needs at least 3 points".into(),
        ));
    }
    let h = r_max / resolution as f64;
    let values: Vec<f64> = (1..=resolution).map(|i| envelope(i as f64 * h)).collect();
    let (mut best, mut argmax) = (0.0f64, h);
    for i in 0..values.len() {
        let left = if i == 0 { 0.0 } else { values[i - 1] };
        let right = values.get(i + 1).copied().unwrap_or(0.0);
        if values[i] >= left && values[i] >= right {
            let lo = (i as f64) * h;
            let hi = ((i + 2) as f64 * h).min(r_max);
            let (r, v) = golden_max(envelope, lo.max(1e-12), hi);
            if v > best {
                best = v;
                argmax = r;
            }
        }
    }
    Ok(BesselEnvelope {
        constant: best.max(ASYMPTOTIC_AMPLITUDE),
        grid_max: best,
        argmax,
        r_max,
    })
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
        if (b - a).abs() < 1e-13 * b.abs().max(1.0) {
            break;
        }
    }
    let r = 0.5 * (a + b);
    let (fa, fb, fr) = (f(a), f(b), f(r));
    [(a, fa), (b, fb), (r, fr)]
        .into_iter()
        .fold((r, fr), |best, cur| if cur.1 > best.1 { cur } else { best })
}

/// Density bound `phi(b_1..b_5)` for `a_1 X_1 + ... + a_5 X_5` with `|a_k| >= b_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct FiveTermBound {
    pub b: [f64; 5],
    /// Bessel envelope constant used in the bound.
    pub envelope: f64,
    /// Bound on the density, probability per unit area.
    pub phi: f64,
}

/// `phi = (2 pi)^-2 * integral over R^2 of prod_k min(1, K / sqrt(b_k |x|))`
/// with `K = sqrt(2 / pi)`.
pub fn density_bound_five(b: [f64; 5]) -> Result<FiveTermBound> {
    density_bound_five_with(b, ASYMPTOTIC_AMPLITUDE)
}

/// [`density_bound_five`] with an explicit envelope constant `k`.
///
/// Equal `b` use the closed form `5 K^4 / (4 pi b^2)`; otherwise the radial
/// integral is evaluated by adaptive quadrature split where each factor
/// leaves the plateau (`|x| = K^2 / b_k`).
pub fn density_bound_five_with(b: [f64; 5], k: f64) -> Result<FiveTermBound> {
    if let Some(bad) = b.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(LabError::Domain(format!(
            "five-term bounds need b_k > 0, got {bad}"
        )));
    }
    if !(k > 0.0) {
        return Err(LabError::Domain(format!(
            "envelope constant must be positive, got {k}"
        )));
    }
    let phi = if b.iter().all(|v| *v == b[0]) {
        5.0 * k.powi(4) / (4.0 * PI * b[0] * b[0])
    } else {
        // the integrand is symmetric in b; a canonical order makes phi exactly so
        let mut sorted = b;
        sorted.sort_by(f64::total_cmp);
        let integrand = |rho: f64| -> f64 {
            rho * sorted
                .iter()
                .map(|bk| {
                    let arg = bk * rho;
                    if arg <= k * k {
                        1.0
                    } else {
                        k / arg.sqrt()
                    }
                })
                .product::<f64>()
        };
        let mut breaks: Vec<f64> = b.iter().map(|bk| k * k / bk).collect();
        breaks.sort_by(f64::total_cmp);
        let last = breaks[4];
        let inner = integrate(integrand, 0.0, last, &breaks[..4], 1e-12, 0.0)?;
        let tail = integrate_to_infinity(integrand, last, 1e-12, 0.0)?;
        (inner.value + tail.value) / TAU
    };
    Ok(FiveTermBound {
        b,
        envelope: k,
        phi,
    })
}

/// `integral over {R <= |x| <= 2R} of |J_0(|x|)|^5 dx`, the shell mass that
/// controls `L^5` integrability of the circle's Fourier transform.
pub fn l5_shell_integral(radius: f64) -> Result<f64> {
    if !(radius > 0.0) {
        return Err(LabError::Domain(format!(
            "shell radius must be positive, got {radius}"
        )));
    }
    let (lo, hi) = (radius, 2.0 * radius);
    let step = FRAC_PI_4;
    let breaks: Vec<f64> = (1..)
        .map(|i| lo + i as f64 * step)
        .take_while(|x| *x < hi)
        .collect();
    let q = integrate(
        |rho: f64| rho * j0_any(rho).abs().powi(5),
        lo,
        hi,
        &breaks,
        1e-9,
        0.0,
    )?;
    Ok(TAU * q.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn special_values() {
        assert_eq!(bessel_j0(0.0).unwrap(), 1.0);
        assert!((bessel_j0(1.0).unwrap() - 0.765_197_686_557_966_6).abs() < 1e-12);
        assert!(bessel_j0(2.404_825_557_695_773).unwrap().abs() < 1e-12);
        assert!(matches!(bessel_j0(-1.0), Err(LabError::Domain(_))));
    }

    #[test]
    fn series_and_hankel_agree_at_the_cutoff() {
        for r in [11.5, 12.0, 12.5, 14.0] {
            assert!((j0_series(r) - j0_hankel(r)).abs() < 1e-11, "r = {r}");
        }
    }

    #[test]
    fn fourier_transform_is_radial() {
        assert_eq!(fourier_uniform_circle(1.0, [0.0, 0.0]).unwrap(), 1.0);
        let a = fourier_uniform_circle(2.0, [0.5, 0.0]).unwrap();
        assert!((a - bessel_j0(1.0).unwrap()).abs() < 1e-15);
        assert_eq!(
            fourier_uniform_circle(1.0, [3.0, 4.0]).unwrap(),
            fourier_uniform_circle(1.0, [5.0, 0.0]).unwrap()
        );
        assert!(fourier_uniform_circle(0.0, [1.0, 0.0]).is_err());
    }

    #[test]
    fn envelope_examples() {
        let env = envelope_constant(1e4, 200_000).unwrap();
        assert!((env.constant - ASYMPTOTIC_AMPLITUDE).abs() < 1e-3);
        assert!(env.constant >= ASYMPTOTIC_AMPLITUDE - 1e-6);
        assert!(env.grid_max <= ASYMPTOTIC_AMPLITUDE);
        assert!(bessel_j0(1.0).unwrap() < env.constant);
        assert!(envelope(1e-8) < 1e-3);
        assert!(envelope_constant(50.0, 1000).is_err());
    }

    #[test]
    fn five_term_closed_form_and_scaling() {
        let one = density_bound_five([1.0; 5]).unwrap().phi;
        assert!((one - 0.1613).abs() < 1e-4);
        let two = density_bound_five([2.0; 5]).unwrap().phi;
        assert!((two - one / 4.0).abs() < 1e-15);
        let big = density_bound_five([1.0, 1.0, 1.0, 1.0, 1e6]).unwrap().phi;
        assert!(big <= one);
        assert!(density_bound_five([1.0, 1.0, 0.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn quadrature_path_matches_closed_form_near_equal_b() {
        let closed = density_bound_five([1.0; 5]).unwrap().phi;
        let nudged = density_bound_five([1.0, 1.0, 1.0, 1.0, 1.0 + 1e-12])
            .unwrap()
            .phi;
        assert!((closed - nudged).abs() < 1e-9 * closed);
    }
}
