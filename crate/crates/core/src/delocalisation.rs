//! Lévy concentration of weighted sums of circle variables.
//!
//! For `S = sum_k a_k X_k` with `X_k` i.i.d. uniform on the unit circle and a
//! unit weight vector `a`, the concentration function
//! `C_eps(S) = sup_z P(|S - z| <= eps)` is estimated by brute force: draw
//! samples, then search the shift `z` on a coarse grid followed by a refined
//! grid around the best coarse cells. The verifiers in this module compare
//! those estimates against linear (`B eps`) and quadratic (`B eps^2`) laws and
//! against histogram density estimates.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{LabError, Result};
use crate::histogram::{DensityHistogram, MIN_RELIABLE_COUNT};
use crate::rng::{fold_chunks, map_chunks, Streams, SubRng};
use crate::sampling::{circle_point, BaseLaw, PointSampler, WeightedSum};
use crate::stats::{proportion_se, Z95};

/// Tolerance on `sum a_k^2 - 1`.
pub const UNIT_SPHERE_TOL: f64 = 1e-12;

/// Header of the experiment CSV rows.
pub const CSV_HEADER: &str =
    "experiment,N,epsilon0,epsilon,estimate,ci,argmax_x,argmax_y,samples,seed";

/// Real weight vector on the unit sphere `S^{N-1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightVector {
    weights: Vec<f64>,
}

impl WeightVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(LabError::InvalidDimension("weight vector is empty".into()));
        }
        let norm2: f64 = weights.iter().map(|a| a * a).sum();
        if !((norm2 - 1.0).abs() <= UNIT_SPHERE_TOL) {
            return Err(LabError::Precondition(format!(
                "weights must have unit l2 norm, got squared norm {norm2}"
            )));
        }
        Ok(WeightVector { weights })
    }

    pub fn normalized(weights: Vec<f64>) -> Result<Self> {
        let norm = weights.iter().map(|a| a * a).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(LabError::Precondition(
                "cannot normalise a zero weight vector".into(),
            ));
        }
        WeightVector::new(weights.into_iter().map(|a| a / norm).collect())
    }

    /// `a_k = 1 / sqrt(N)`.
    pub fn flat(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(LabError::InvalidDimension("weight vector is empty".into()));
        }
        WeightVector::normalized(vec![1.0; n])
    }

    /// Uniform draw from the unit sphere.
    pub fn random_unit<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        if n == 0 {
            return Err(LabError::InvalidDimension("weight vector is empty".into()));
        }
        loop {
            let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            if v.iter().any(|x: &f64| *x != 0.0) {
                return WeightVector::normalized(v);
            }
        }
    }

    /// Uniform draw from `S^{N-1}` conditioned on lying in `S_{4, eps0}`,
    /// by rejection.
    pub fn random_in_s4<R: Rng + ?Sized>(n: usize, epsilon0: f64, rng: &mut R) -> Result<Self> {
        if n < 5 {
            return Err(LabError::Precondition(format!(
                "S4 requires N >= 5, got {n}"
            )));
        }
        for _ in 0..100_000 {
            let w = WeightVector::random_unit(n, rng)?;
            if w.is_in_s4(epsilon0) {
                return Ok(w);
            }
        }
        Err(LabError::Precondition(format!(
            "rejection sampling found no S4 vector for N={n}, eps0={epsilon0}"
        )))
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Membership in `S_{4, eps0}`: `N >= 5` and every projection onto four
    /// coordinates has squared norm at most `1 - eps0`. The worst projection
    /// keeps the four largest squared weights.
    pub fn is_in_s4(&self, epsilon0: f64) -> bool {
        if self.len() < 5 {
            return false;
        }
        let mut sq: Vec<f64> = self.weights.iter().map(|a| a * a).collect();
        sq.sort_by(|a, b| b.total_cmp(a));
        sq[..4].iter().sum::<f64>() <= 1.0 - epsilon0
    }
}

/// `is_in_s4` as a free function.
pub fn is_in_s4(weights: &WeightVector, epsilon0: f64) -> bool {
    weights.is_in_s4(epsilon0)
}

/// Sampler of `sum_k a_k X_k` in R^2.
pub fn weighted_circle_sum_sampler(weights: &WeightVector) -> WeightedSum {
    WeightedSum::new(weights.weights().to_vec(), BaseLaw::Circle)
}

/// Estimate of `C_eps` together with the shift attaining the empirical maximum.
#[derive(Clone, Debug, PartialEq)]
pub struct ConcentrationEstimate {
    pub epsilon: f64,
    pub value: f64,
    pub argmax_shift: [f64; 2],
    /// Binomial standard error of `value` at the selected shift.
    pub std_error: f64,
    /// `Z95 * std_error`.
    pub ci_radius: f64,
    pub samples: usize,
}

impl ConcentrationEstimate {
    pub fn csv_row(&self, experiment: &str, n: usize, epsilon0: Option<f64>, seed: u64) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            experiment,
            n,
            epsilon0.map(|e| e.to_string()).unwrap_or_default(),
            self.epsilon,
            self.value,
            self.ci_radius,
            self.argmax_shift[0],
            self.argmax_shift[1],
            self.samples,
            seed
        )
    }
}

/// Grid parameters of the shift search.
#[derive(Clone, Debug, PartialEq)]
pub struct SearchSpec {
    /// Coarse spacing as a fraction of `eps`.
    pub coarse_factor: f64,
    /// Refined spacing as a fraction of `eps`.
    pub refine_factor: f64,
    /// Number of best coarse points whose neighbourhoods are refined.
    pub candidates: usize,
    /// Radius of the disk searched, before adding `eps`; the sampler's support
    /// radius when `None`.
    pub support_radius: Option<f64>,
    /// Fraction of the sample held out from the search and used only to count
    /// the ball at the selected shift. Zero reports the in-sample maximum,
    /// which is biased upward by the search.
    pub holdout_fraction: f64,
}

impl Default for SearchSpec {
    fn default() -> Self {
        SearchSpec {
            coarse_factor: 0.5,
            refine_factor: 0.1,
            candidates: 4,
            support_radius: None,
            holdout_fraction: 0.5,
        }
    }
}

const MAX_GRID_POINTS: f64 = 2e8;

/// Draws `samples` points from a planar sampler, chunk by chunk.
pub fn draw_points(
    sampler: &dyn PointSampler,
    samples: usize,
    streams: &Streams,
) -> Result<Vec<[f64; 2]>> {
    if sampler.dim() != 2 {
        return Err(LabError::Configuration(format!(
            "planar sampler required, got dimension {}",
            sampler.dim()
        )));
    }
    let chunks = map_chunks(streams, samples, |rng, len| {
        let mut out = Vec::with_capacity(len);
        let mut p = [0.0; 2];
        for _ in 0..len {
            sampler.draw(rng, &mut p);
            out.push(p);
        }
        out
    });
    Ok(chunks.concat())
}

/// Points bucketed into square cells of side `eps` for closed-ball counting.
struct BallCounter {
    points: Vec<[f64; 2]>,
    starts: Vec<usize>,
    origin: [f64; 2],
    cell: f64,
    nx: usize,
    ny: usize,
    eps2: f64,
}

impl BallCounter {
    fn new(points: &[[f64; 2]], lo: [f64; 2], hi: [f64; 2], eps: f64) -> Result<Self> {
        let nx = ((hi[0] - lo[0]) / eps).floor() as usize + 1;
        let ny = ((hi[1] - lo[1]) / eps).floor() as usize + 1;
        if (nx as f64) * (ny as f64) > MAX_GRID_POINTS {
            return Err(LabError::Configuration(format!(
                "ball-count index of {nx}x{ny} cells is too large for eps={eps}"
            )));
        }
        let cell_of = |p: &[f64; 2]| {
            let ix = (((p[0] - lo[0]) / eps) as usize).min(nx - 1);
            let iy = (((p[1] - lo[1]) / eps) as usize).min(ny - 1);
            iy * nx + ix
        };
        let mut starts = vec![0usize; nx * ny + 1];
        for p in points {
            starts[cell_of(p) + 1] += 1;
        }
        for i in 0..nx * ny {
            starts[i + 1] += starts[i];
        }
        let mut fill = starts.clone();
        let mut sorted = vec![[0.0; 2]; points.len()];
        for p in points {
            let c = cell_of(p);
            sorted[fill[c]] = *p;
            fill[c] += 1;
        }
        Ok(BallCounter {
            points: sorted,
            starts,
            origin: lo,
            cell: eps,
            nx,
            ny,
            eps2: eps * eps,
        })
    }

    /// Number of points with `|p - z| <= eps`.
    fn count(&self, z: [f64; 2]) -> usize {
        let range = |c: f64, o: f64, n: usize| {
            let lo = ((c - self.cell - o) / self.cell).floor();
            let hi = ((c + self.cell - o) / self.cell).floor();
            if hi < 0.0 || lo > (n - 1) as f64 {
                return None;
            }
            Some((lo.max(0.0) as usize, (hi as usize).min(n - 1)))
        };
        let (Some((x0, x1)), Some((y0, y1))) = (
            range(z[0], self.origin[0], self.nx),
            range(z[1], self.origin[1], self.ny),
        ) else {
            return 0;
        };
        let mut total = 0;
        for iy in y0..=y1 {
            let row = iy * self.nx;
            let slice = &self.points[self.starts[row + x0]..self.starts[row + x1 + 1]];
            total += slice
                .iter()
                .filter(|p| {
                    let dx = p[0] - z[0];
                    let dy = p[1] - z[1];
                    dx * dx + dy * dy <= self.eps2
                })
                .count();
        }
        total
    }
}

/// Estimates `C_eps` from a fixed sample cloud.
///
/// Stage one evaluates the closed-ball frequency on a grid of spacing
/// `coarse_factor * eps` over the disk of radius `support + eps`; stage two
/// evaluates a grid of spacing `refine_factor * eps` around each of the best
/// `candidates` coarse points. The search runs on the leading part of the
/// sample; the reported value is the closed-ball frequency at the selected
/// shift over the held-out tail (or the in-sample maximum when nothing is
/// held out). `argmax_shift` is a maximiser candidate, not a certified one.
pub fn levy_concentration_of_points(
    points: &[[f64; 2]],
    epsilon: f64,
    support_radius: f64,
    search: &SearchSpec,
) -> Result<ConcentrationEstimate> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(LabError::Precondition(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    if points.len() < 1000 {
        return Err(LabError::Precondition(format!(
            "need at least 1000 samples, got {}",
            points.len()
        )));
    }
    let valid = |f: f64| f > 0.0 && f.is_finite();
    if !valid(search.coarse_factor) || !valid(search.refine_factor) || search.candidates == 0 {
        return Err(LabError::Configuration(format!(
            "degenerate search grid {search:?}"
        )));
    }
    if search.refine_factor > search.coarse_factor {
        return Err(LabError::Configuration(
            "refined spacing must not exceed the coarse spacing".into(),
        ));
    }
    if !(0.0..1.0).contains(&search.holdout_fraction) {
        return Err(LabError::Configuration(format!(
            "holdout fraction {} outside [0, 1)",
            search.holdout_fraction
        )));
    }
    let held = (points.len() as f64 * search.holdout_fraction).round() as usize;
    let (points, holdout) = points.split_at(points.len() - held);
    if points.is_empty() {
        return Err(LabError::Configuration(
            "holdout leaves no search sample".into(),
        ));
    }
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in points {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    if !(lo[0].is_finite() && lo[1].is_finite() && hi[0].is_finite() && hi[1].is_finite()) {
        return Err(LabError::Domain(
            "sample cloud contains non-finite points".into(),
        ));
    }
    let counter = BallCounter::new(points, lo, hi, epsilon)?;

    let disk = support_radius + epsilon;
    let spacing = search.coarse_factor * epsilon;
    // Shifts farther than eps from every sample see an empty ball, so the
    // coarse grid only needs the sample bounding box grown by eps.
    let gx0 = ((lo[0] - epsilon).max(-disk) / spacing).floor() as i64;
    let gx1 = ((hi[0] + epsilon).min(disk) / spacing).ceil() as i64;
    let gy0 = ((lo[1] - epsilon).max(-disk) / spacing).floor() as i64;
    let gy1 = ((hi[1] + epsilon).min(disk) / spacing).ceil() as i64;
    if gx1 < gx0 || gy1 < gy0 {
        return Err(LabError::Configuration(
            "search disk misses the sample cloud".into(),
        ));
    }
    let cols = (gx1 - gx0 + 1) as f64;
    let rows = (gy1 - gy0 + 1) as f64;
    if cols * rows > MAX_GRID_POINTS {
        return Err(LabError::Configuration(format!(
            "coarse grid of {cols}x{rows} points is too large"
        )));
    }

    let keep = search.candidates;
    let best_rows: Vec<Vec<(usize, i64, i64)>> = (gy0..=gy1)
        .into_par_iter()
        .map(|j| {
            let mut best: Vec<(usize, i64, i64)> = Vec::with_capacity(keep + 1);
            for i in gx0..=gx1 {
                let z = [i as f64 * spacing, j as f64 * spacing];
                if z[0].hypot(z[1]) > disk {
                    continue;
                }
                let c = counter.count(z);
                if c > 0 {
                    push_best(&mut best, (c, i, j), keep);
                }
            }
            best
        })
        .collect();
    let mut coarse: Vec<(usize, i64, i64)> = Vec::with_capacity(keep + 1);
    for row in best_rows {
        for entry in row {
            push_best(&mut coarse, entry, keep);
        }
    }

    let fine = search.refine_factor * epsilon;
    let steps = (spacing / fine).ceil() as i64;
    let mut best = (0usize, [0.0, 0.0]);
    for &(c, i, j) in &coarse {
        let center = [i as f64 * spacing, j as f64 * spacing];
        if c > best.0 {
            best = (c, center);
        }
        for dj in -steps..=steps {
            for di in -steps..=steps {
                let z = [center[0] + di as f64 * fine, center[1] + dj as f64 * fine];
                let c = counter.count(z);
                if c > best.0 {
                    best = (c, z);
                }
            }
        }
    }

    let (hits, n) = if holdout.is_empty() {
        (best.0, points.len())
    } else {
        let z = best.1;
        let eps2 = epsilon * epsilon;
        let hits = holdout
            .iter()
            .filter(|p| (p[0] - z[0]).powi(2) + (p[1] - z[1]).powi(2) <= eps2)
            .count();
        (hits, holdout.len())
    };
    let se = proportion_se(hits as u64, n as u64);
    Ok(ConcentrationEstimate {
        epsilon,
        value: hits as f64 / n as f64,
        argmax_shift: best.1,
        std_error: se,
        ci_radius: Z95 * se,
        samples: points.len() + holdout.len(),
    })
}

// Keeps the `keep` largest counts; ties prefer the lexicographically smaller
// grid index so the outcome is independent of visiting order.
fn push_best(best: &mut Vec<(usize, i64, i64)>, entry: (usize, i64, i64), keep: usize) {
    best.push(entry);
    best.sort_by(|a, b| b.0.cmp(&a.0).then((a.2, a.1).cmp(&(b.2, b.1))));
    best.truncate(keep);
}

/// Draws `samples` points and estimates `C_eps`.
pub fn levy_concentration(
    sampler: &dyn PointSampler,
    epsilon: f64,
    samples: usize,
    search: &SearchSpec,
    streams: &Streams,
) -> Result<ConcentrationEstimate> {
    if samples < 1000 {
        return Err(LabError::Precondition(format!(
            "need at least 1000 samples, got {samples}"
        )));
    }
    let points = draw_points(sampler, samples, streams)?;
    let radius = search.support_radius.unwrap_or(sampler.support_radius());
    levy_concentration_of_points(&points, epsilon, radius, search)
}

/// Estimates `C_eps` for every `eps` in `eps_grid` from one shared sample cloud.
pub fn levy_concentration_grid(
    sampler: &dyn PointSampler,
    eps_grid: &[f64],
    samples: usize,
    search: &SearchSpec,
    streams: &Streams,
) -> Result<Vec<ConcentrationEstimate>> {
    if eps_grid.is_empty() {
        return Err(LabError::Precondition("epsilon grid is empty".into()));
    }
    if samples < 1000 {
        return Err(LabError::Precondition(format!(
            "need at least 1000 samples, got {samples}"
        )));
    }
    let points = draw_points(sampler, samples, streams)?;
    let radius = search.support_radius.unwrap_or(sampler.support_radius());
    eps_grid
        .iter()
        .map(|&eps| levy_concentration_of_points(&points, eps, radius, search))
        .collect()
}

/// Ratio `C_eps(S) / C_eps(X)` for one `eps`.
#[derive(Clone, Debug, PartialEq)]
pub struct BnRatio {
    pub epsilon: f64,
    pub ratio: f64,
    pub sum: ConcentrationEstimate,
    pub single: ConcentrationEstimate,
}

/// Compares the concentration of `S = sum a_k X_k` with that of a single
/// circle variable, both estimated with the same substreams.
pub fn verify_bn_bound(
    weights: &WeightVector,
    eps_grid: &[f64],
    samples: usize,
    streams: &Streams,
) -> Result<Vec<BnRatio>> {
    let search = SearchSpec::default();
    let sum = levy_concentration_grid(
        &weighted_circle_sum_sampler(weights),
        eps_grid,
        samples,
        &search,
        streams,
    )?;
    let single_sampler = WeightedSum::new(vec![1.0], BaseLaw::Circle);
    let single = levy_concentration_grid(&single_sampler, eps_grid, samples, &search, streams)?;
    Ok(sum
        .into_iter()
        .zip(single)
        .map(|(s, x)| BnRatio {
            epsilon: s.epsilon,
            ratio: s.value / x.value,
            sum: s,
            single: x,
        })
        .collect())
}

/// Largest `C_eps / eps^2` over an epsilon grid.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticBound {
    /// The empirical constant `B`.
    pub max_ratio: f64,
    pub ci_radius: f64,
    pub argmax_epsilon: f64,
    pub estimates: Vec<ConcentrationEstimate>,
}

impl QuadraticBound {
    /// `(eps, C_eps / eps^2)` pairs.
    pub fn ratios(&self) -> Vec<(f64, f64)> {
        self.estimates
            .iter()
            .map(|e| (e.epsilon, e.value / (e.epsilon * e.epsilon)))
            .collect()
    }
}

/// Measures `max_eps C_eps(S) / eps^2` for weights in `S_{4, eps0}`.
pub fn verify_quadratic_bound(
    weights: &WeightVector,
    epsilon0: f64,
    eps_grid: &[f64],
    samples: usize,
    streams: &Streams,
) -> Result<QuadraticBound> {
    if !(epsilon0 > 0.0 && epsilon0 < 1.0) {
        return Err(LabError::Precondition(format!(
            "eps0 must lie in (0, 1), got {epsilon0}"
        )));
    }
    if !weights.is_in_s4(epsilon0) {
        return Err(LabError::Precondition(format!(
            "weights are not in S4 with eps0={epsilon0}"
        )));
    }
    if let Some(e) = eps_grid.iter().find(|e| !(**e > 0.0 && **e <= 0.3)) {
        return Err(LabError::Precondition(format!(
            "epsilon {e} outside (0, 0.3]"
        )));
    }
    let estimates = levy_concentration_grid(
        &weighted_circle_sum_sampler(weights),
        eps_grid,
        samples,
        &SearchSpec::default(),
        streams,
    )?;
    let best = estimates
        .iter()
        .max_by(|a, b| {
            (a.value / (a.epsilon * a.epsilon)).total_cmp(&(b.value / (b.epsilon * b.epsilon)))
        })
        .cloned()
        .ok_or_else(|| LabError::Precondition("epsilon grid is empty".into()))?;
    let e2 = best.epsilon * best.epsilon;
    Ok(QuadraticBound {
        max_ratio: best.value / e2,
        ci_radius: best.ci_radius / e2,
        argmax_epsilon: best.epsilon,
        estimates,
    })
}

/// Empirical `P(|S| <= eps)` for a ball centred at the origin.
#[derive(Clone, Debug, PartialEq)]
pub struct SmallBall {
    pub epsilon: f64,
    pub probability: f64,
    pub std_error: f64,
}

/// `P(|S| <= eps)` for every radius in `radii`, from one pass over the samples.
pub fn small_ball_probabilities(
    sampler: &dyn PointSampler,
    radii: &[f64],
    samples: usize,
    streams: &Streams,
) -> Result<Vec<SmallBall>> {
    if samples == 0 {
        return Err(LabError::Precondition("need at least one sample".into()));
    }
    let r2: Vec<f64> = radii.iter().map(|r| r * r).collect();
    let d = sampler.dim();
    let counts = fold_chunks(
        streams,
        samples,
        || vec![0u64; r2.len()],
        |acc, rng, len| {
            let mut p = vec![0.0; d];
            for _ in 0..len {
                sampler.draw(rng, &mut p);
                let n2: f64 = p.iter().map(|x| x * x).sum();
                for (c, r) in acc.iter_mut().zip(&r2) {
                    *c += (n2 <= *r) as u64;
                }
            }
        },
        |mut a, b| {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
            a
        },
    );
    Ok(radii
        .iter()
        .zip(counts)
        .map(|(&eps, c)| SmallBall {
            epsilon: eps,
            probability: c as f64 / samples as f64,
            std_error: proportion_se(c, samples as u64),
        })
        .collect())
}

/// Linear small-ball law for `S = (X_1 + X_2 + X_3 + X_4) / 2`.
#[derive(Clone, Debug, PartialEq)]
pub struct SharpnessReport {
    /// `min_eps P(|S| <= eps) / eps`.
    pub min_ratio: f64,
    pub ci_radius: f64,
    pub argmin_epsilon: f64,
    pub balls: Vec<SmallBall>,
}

/// The four-term sum `(X_1 + ... + X_4) / 2`, whose weights put all their
/// mass on four coordinates.
pub fn four_term_sampler() -> WeightedSum {
    WeightedSum::new(vec![0.5; 4], BaseLaw::Circle)
}

/// Measures `min_eps P(|S| <= eps) / eps` for `S = (X_1 + ... + X_4) / 2`.
pub fn sharpness_check(
    eps_grid: &[f64],
    samples: usize,
    streams: &Streams,
) -> Result<SharpnessReport> {
    if eps_grid.is_empty() {
        return Err(LabError::Precondition("epsilon grid is empty".into()));
    }
    if let Some(e) = eps_grid.iter().find(|e| !(**e > 0.0 && **e <= 0.2)) {
        return Err(LabError::Precondition(format!(
            "epsilon {e} outside (0, 0.2]"
        )));
    }
    let balls = small_ball_probabilities(&four_term_sampler(), eps_grid, samples, streams)?;
    let worst = balls
        .iter()
        .min_by(|a, b| (a.probability / a.epsilon).total_cmp(&(b.probability / b.epsilon)))
        .cloned()
        .expect("grid is nonempty");
    Ok(SharpnessReport {
        min_ratio: worst.probability / worst.epsilon,
        ci_radius: Z95 * worst.std_error / worst.epsilon,
        argmin_epsilon: worst.epsilon,
        balls,
    })
}

/// Density of `X_1 + X_2 + X_3` on a thin annulus.
#[derive(Clone, Debug, PartialEq)]
pub struct AnnulusDensity {
    pub radius: f64,
    pub width: f64,
    pub count: u64,
    pub density: f64,
    pub std_error: f64,
    /// `density / |ln|1 - r||`.
    pub log_ratio: f64,
    /// Density on the four quadrant sectors of the annulus.
    pub sector_density: [f64; 4],
    pub sector_std_error: [f64; 4],
}

/// Default annulus width as a fraction of the distance to the unit circle.
pub const ANNULUS_WIDTH_FACTOR: f64 = 0.2;

/// Histogram density of `X_1 + X_2 + X_3` on annuli `[r - w/2, r + w/2]`
/// with `w = width_factor * |1 - r|`, divided by `|ln|1 - r||`.
pub fn threefold_log_singularity(
    radius_grid: &[f64],
    samples: usize,
    width_factor: f64,
    streams: &Streams,
) -> Result<Vec<AnnulusDensity>> {
    if samples < 10_000_000 {
        return Err(LabError::Precondition(format!(
            "need at least 1e7 samples, got {samples}"
        )));
    }
    if !(width_factor > 0.0 && width_factor < 2.0) {
        return Err(LabError::Configuration(format!(
            "bad annulus width factor {width_factor}"
        )));
    }
    let mut shells = Vec::with_capacity(radius_grid.len());
    for &r in radius_grid {
        let inside = r > 0.0 && r < 3.0 && r != 1.0;
        if !inside {
            return Err(LabError::Precondition(format!(
                "radius {r} outside (0,1) U (1,3)"
            )));
        }
        let w = width_factor * (1.0 - r).abs();
        let w = w.min(2.0 * (3.0 - r)).min(2.0 * r);
        shells.push((r, w, (r - 0.5 * w).powi(2), (r + 0.5 * w).powi(2)));
    }
    let sampler = WeightedSum::new(vec![1.0; 3], BaseLaw::Circle);
    let counts = fold_chunks(
        streams,
        samples,
        || vec![[0u64; 4]; shells.len()],
        |acc, rng, len| {
            let mut p = [0.0; 2];
            for _ in 0..len {
                sampler.draw(rng, &mut p);
                let n2 = p[0] * p[0] + p[1] * p[1];
                for (c, s) in acc.iter_mut().zip(&shells) {
                    if n2 >= s.2 && n2 < s.3 {
                        let q = (p[1] < 0.0) as usize * 2 + (p[0] < 0.0) as usize;
                        c[q] += 1;
                    }
                }
            }
        },
        |mut a, b| {
            for (x, y) in a.iter_mut().zip(b) {
                for q in 0..4 {
                    x[q] += y[q];
                }
            }
            a
        },
    );
    let n = samples as f64;
    shells
        .iter()
        .zip(counts)
        .map(|(&(r, w, _, _), c)| {
            let count: u64 = c.iter().sum();
            if (count as f64) < MIN_RELIABLE_COUNT {
                return Err(LabError::Resolution(format!(
                    "annulus at r={r} holds {count} samples (< {MIN_RELIABLE_COUNT})"
                )));
            }
            let area = std::f64::consts::PI * ((r + 0.5 * w).powi(2) - (r - 0.5 * w).powi(2));
            let density = count as f64 / (n * area);
            let mut sector_density = [0.0; 4];
            let mut sector_std_error = [0.0; 4];
            for q in 0..4 {
                sector_density[q] = c[q] as f64 / (n * area / 4.0);
                sector_std_error[q] = proportion_se(c[q], samples as u64) / (area / 4.0);
            }
            Ok(AnnulusDensity {
                radius: r,
                width: w,
                count,
                density,
                std_error: proportion_se(count, samples as u64) / area,
                log_ratio: density / (1.0 - r).abs().ln().abs(),
                sector_density,
                sector_std_error,
            })
        })
        .collect()
}

/// Histogram of `samples` draws with the rule-of-thumb bin width
/// `diameter * samples^(-1/(d+2))`, where the diameter is the largest side of
/// the sample bounding box.
///
/// The sample stream is replayed twice: once for the bounding box, once for
/// the counts.
pub fn estimate_density(
    sampler: &dyn PointSampler,
    samples: usize,
    streams: &Streams,
) -> Result<DensityHistogram> {
    let d = sampler.dim();
    if d > 3 {
        return Err(LabError::UnsupportedDimension(d));
    }
    if samples == 0 {
        return Err(LabError::Precondition("need at least one sample".into()));
    }
    let (lo, hi) = fold_chunks(
        streams,
        samples,
        || (vec![f64::INFINITY; d], vec![f64::NEG_INFINITY; d]),
        |acc, rng, len| {
            let mut p = vec![0.0; d];
            for _ in 0..len {
                sampler.draw(rng, &mut p);
                for k in 0..d {
                    acc.0[k] = acc.0[k].min(p[k]);
                    acc.1[k] = acc.1[k].max(p[k]);
                }
            }
        },
        |mut a, b| {
            for k in 0..d {
                a.0[k] = a.0[k].min(b.0[k]);
                a.1[k] = a.1[k].max(b.1[k]);
            }
            a
        },
    );
    let diameter = lo
        .iter()
        .zip(&hi)
        .map(|(l, h)| h - l)
        .fold(0.0f64, f64::max);
    if !(diameter > 0.0 && diameter.is_finite()) {
        return Err(LabError::Resolution("samples do not spread out".into()));
    }
    let width = DensityHistogram::rule_width(diameter, samples as u64, d);
    // Grow the box by half a bin so the extreme samples land inside.
    let lo: Vec<f64> = lo.iter().map(|v| v - 0.5 * width).collect();
    let hi: Vec<f64> = hi.iter().map(|v| v + 0.5 * width).collect();
    let template = DensityHistogram::covering(&lo, &hi, width)?;
    histogram_on_grid(sampler, samples, &template, streams)
}

/// Counts `samples` draws into an empty copy of `template`.
pub fn histogram_on_grid(
    sampler: &dyn PointSampler,
    samples: usize,
    template: &DensityHistogram,
    streams: &Streams,
) -> Result<DensityHistogram> {
    let d = sampler.dim();
    if template.dim() != d {
        return Err(LabError::DimensionMismatch {
            expected: template.dim(),
            actual: d,
        });
    }
    let empty = template.empty_like();
    let hist = fold_chunks(
        streams,
        samples,
        || empty.clone(),
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
    Ok(hist)
}

/// Certified constants of an i.i.d. family `X_k` in R^d: density bound `K`,
/// covariance entry bound `L`, determinant floor `delta`, and moment bound
/// `E|X|^{2+eta} <= M`.
#[derive(Clone, Debug, PartialEq)]
pub struct MultidimFamily {
    pub law: BaseLaw,
    pub density_bound: f64,
    pub covariance_bound: f64,
    pub determinant_floor: f64,
    pub moment_bound: f64,
    pub eta: f64,
}

impl MultidimFamily {
    /// Uniform law on `[-h, h]^d` with its exact constants (`eta = 1`).
    pub fn uniform_cube(dim: usize, half_width: f64) -> Self {
        let law = BaseLaw::UniformCube { dim, half_width };
        let var = law.variance();
        let radius = law.support_radius();
        MultidimFamily {
            density_bound: law.density_bound().unwrap_or(f64::INFINITY),
            covariance_bound: var,
            determinant_floor: var.powi(dim as i32),
            moment_bound: radius.powi(3),
            eta: 1.0,
            law,
        }
    }
}

/// Peak of the weighted-sum density next to the per-variable bound `K`.
#[derive(Clone, Debug, PartialEq)]
pub struct MultidimReport {
    pub dim: usize,
    pub max_density: f64,
    pub std_error: f64,
    pub peak_center: Vec<f64>,
    pub density_bound: f64,
    /// `max_density / K`, the empirical constant `C`.
    pub ratio: f64,
    pub bin_width: f64,
}

/// Histogram estimate of `sup f` for `sum_k a_k X_k` in the certified family.
pub fn verify_multidim_bound(
    family: &MultidimFamily,
    weights: &WeightVector,
    samples: usize,
    streams: &Streams,
) -> Result<MultidimReport> {
    let d = family.law.dim();
    if d > 3 {
        return Err(LabError::UnsupportedDimension(d));
    }
    if d == 0 {
        return Err(LabError::InvalidDimension(
            "dimension must be positive".into(),
        ));
    }
    let positive = [
        family.density_bound,
        family.covariance_bound,
        family.determinant_floor,
        family.moment_bound,
        family.eta,
    ];
    if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(LabError::Precondition(format!(
            "family constants must be positive: {family:?}"
        )));
    }
    let sampler = WeightedSum::new(weights.weights().to_vec(), family.law.clone());
    let hist = estimate_density(&sampler, samples, streams)?;
    let peak = hist.peak();
    Ok(MultidimReport {
        dim: d,
        max_density: peak.density,
        std_error: peak.std_error,
        peak_center: peak.center,
        density_bound: family.density_bound,
        ratio: peak.density / family.density_bound,
        bin_width: hist.widths()[0],
    })
}

/// Planar sampler for `a X + Y` with `X` on the unit circle and `Y` uniform on
/// a square; used to check that adding a circle term never raises the density.
#[derive(Clone, Debug)]
pub struct CirclePlusSquare {
    pub scale: f64,
    pub half_width: f64,
}

impl PointSampler for CirclePlusSquare {
    fn dim(&self) -> usize {
        2
    }

    fn support_radius(&self) -> f64 {
        self.scale.abs() + self.half_width * std::f64::consts::SQRT_2
    }

    fn draw(&self, rng: &mut SubRng, out: &mut [f64]) {
        let [x, y] = circle_point(rng);
        out[0] = self.scale * x + (2.0 * rng.gen::<f64>() - 1.0) * self.half_width;
        out[1] = self.scale * y + (2.0 * rng.gen::<f64>() - 1.0) * self.half_width;
    }
}

/// `a Y + b` for an inner sampler `Y`.
#[derive(Clone, Debug)]
pub struct Affine<S> {
    pub inner: S,
    pub scale: f64,
    pub shift: Vec<f64>,
}

impl<S: PointSampler> PointSampler for Affine<S> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn support_radius(&self) -> f64 {
        self.scale.abs() * self.inner.support_radius()
            + self.shift.iter().map(|b| b * b).sum::<f64>().sqrt()
    }

    fn draw(&self, rng: &mut SubRng, out: &mut [f64]) {
        self.inner.draw(rng, out);
        for (o, b) in out.iter_mut().zip(&self.shift) {
            *o = self.scale * *o + b;
        }
    }
}
