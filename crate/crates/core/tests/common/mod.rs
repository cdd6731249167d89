#![allow(dead_code)]

use num_complex::Complex64;
use std::f64::consts::PI;

/// `lambda_k = v_k^H H v_k / N` from the explicit circulant matrix with first
/// column `taps`, plus the residual `max_k |H v_k - lambda_k v_k|`.
pub fn dense_circulant_eigenvalues(taps: &[Complex64]) -> (Vec<Complex64>, f64) {
    let n = taps.len();
    let h = |j: usize, l: usize| taps[(j + n - l) % n];
    let mut out = Vec::with_capacity(n);
    let mut residual = 0.0f64;
    for k in 0..n {
        let v: Vec<Complex64> = (0..n)
            .map(|j| Complex64::from_polar(1.0, 2.0 * PI * ((j * k) % n) as f64 / n as f64))
            .collect();
        let hv: Vec<Complex64> = (0..n)
            .map(|j| (0..n).map(|l| h(j, l) * v[l]).sum())
            .collect();
        let lambda: Complex64 = v
            .iter()
            .zip(&hv)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            / n as f64;
        for j in 0..n {
            residual = residual.max((hv[j] - lambda * v[j]).norm());
        }
        out.push(lambda);
    }
    (out, residual)
}

/// `P(|X_1 + X_2| <= t)` by midpoint integration of the radial law
/// `2 / (pi sqrt(4 - r^2))` on `[0, t]`, `t < 2`.
pub fn two_fold_ball_mass(t: f64) -> f64 {
    // substitute r = 2 sin(u) to remove the edge singularity
    let umax = (t / 2.0).asin();
    let steps = 20_000;
    let du = umax / steps as f64;
    (0..steps)
        .map(|i| {
            let u = (i as f64 + 0.5) * du;
            let r = 2.0 * u.sin();
            2.0 / (PI * (4.0 - r * r).sqrt()) * 2.0 * u.cos() * du
        })
        .sum()
}

/// `J_0(r) = (1/pi) int_0^pi cos(r sin t) dt` by the composite trapezoid rule,
/// which is spectrally accurate for this periodic integrand.
pub fn j0_trapezoid(r: f64) -> f64 {
    let m = 4 * (r.abs() as usize) + 200;
    let h = PI / m as f64;
    let mut s = 0.5 * (1.0 + (r * PI.sin()).cos());
    for i in 1..m {
        s += (r * (i as f64 * h).sin()).cos();
    }
    s * h / PI
}

/// Power series `sum (-1)^m (r/2)^(2m) / (m!)^2`, fine for small `r`.
pub fn j0_series(r: f64) -> f64 {
    let q = -(r * r) / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for m in 1..60 {
        term *= q / (m as f64 * m as f64);
        sum += term;
    }
    sum
}

/// `int_0^inf ln(1 + t) e^-t dt` by midpoint quadrature on `[0, 60]`.
pub fn flat_limit_rate() -> f64 {
    let steps = 400_000;
    let upper = 60.0;
    let h = upper / steps as f64;
    (0..steps)
        .map(|i| {
            let t = (i as f64 + 0.5) * h;
            (1.0 + t).ln() * (-t).exp() * h
        })
        .sum()
}

/// Exhaustive `S_4` membership: every 4-coordinate projection has squared norm
/// at most `1 - eps0`.
pub fn s4_brute_force(a: &[f64], eps0: f64) -> bool {
    let n = a.len();
    if n < 5 {
        return false;
    }
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                for l in k + 1..n {
                    if a[i] * a[i] + a[j] * a[j] + a[k] * a[k] + a[l] * a[l] > 1.0 - eps0 {
                        return false;
                    }
                }
            }
        }
    }
    true
}
