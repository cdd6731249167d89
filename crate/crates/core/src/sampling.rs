//! Random variables used as building blocks: the uniform law on the unit
//! circle and a few bounded-density laws, plus the sampler trait shared by the
//! estimators.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::rng::SubRng;

/// Uniform point on the unit circle, as `(cos, sin)`.
///
/// Uses the squaring trick on a uniform point of the disk, so the angle is
/// exactly uniform and no trigonometric call is needed.
#[inline]
pub fn circle_point<R: Rng + ?Sized>(rng: &mut R) -> [f64; 2] {
    const SCALE: f64 = 1.0 / (1u64 << 31) as f64;
    loop {
        let bits = rng.next_u64();
        let x = ((bits >> 32) as f64 + 0.5) * SCALE - 1.0;
        let y = ((bits & 0xffff_ffff) as f64 + 0.5) * SCALE - 1.0;
        let s = x * x + y * y;
        if s <= 1.0 {
            let inv = 1.0 / s;
            return [(x * x - y * y) * inv, 2.0 * x * y * inv];
        }
    }
}

/// Centered base laws with an analytically known covariance and density bound.
#[derive(Clone, Debug, PartialEq)]
pub enum BaseLaw {
    /// Uniform on the unit circle of R^2 (no density; covariance I/2).
    Circle,
    /// Uniform on `[-h, h]^dim`.
    UniformCube { dim: usize, half_width: f64 },
    /// Standard Gaussian scaled by `std` in every coordinate.
    Gaussian { dim: usize, std: f64 },
}

impl BaseLaw {
    pub fn dim(&self) -> usize {
        match self {
            BaseLaw::Circle => 2,
            BaseLaw::UniformCube { dim, .. } | BaseLaw::Gaussian { dim, .. } => *dim,
        }
    }

    /// Per-coordinate variance; all laws here have isotropic covariance.
    pub fn variance(&self) -> f64 {
        match self {
            BaseLaw::Circle => 0.5,
            BaseLaw::UniformCube { half_width, .. } => half_width * half_width / 3.0,
            BaseLaw::Gaussian { std, .. } => std * std,
        }
    }

    /// Supremum of the density, `None` when the law is singular.
    pub fn density_bound(&self) -> Option<f64> {
        match self {
            BaseLaw::Circle => None,
            BaseLaw::UniformCube { dim, half_width } => {
                Some((2.0 * half_width).powi(*dim as i32).recip())
            }
            BaseLaw::Gaussian { dim, std } => {
                Some((2.0 * std::f64::consts::PI * std * std).powf(-(*dim as f64) / 2.0))
            }
        }
    }

    /// Radius of a ball containing the support, infinite for the Gaussian.
    pub fn support_radius(&self) -> f64 {
        match self {
            BaseLaw::Circle => 1.0,
            BaseLaw::UniformCube { dim, half_width } => half_width * (*dim as f64).sqrt(),
            BaseLaw::Gaussian { .. } => f64::INFINITY,
        }
    }

    #[inline]
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match self {
            BaseLaw::Circle => out.copy_from_slice(&circle_point(rng)),
            BaseLaw::UniformCube { half_width, .. } => {
                for v in out.iter_mut() {
                    *v = (2.0 * rng.gen::<f64>() - 1.0) * half_width;
                }
            }
            BaseLaw::Gaussian { std, .. } => {
                for v in out.iter_mut() {
                    *v = std * rng.sample::<f64, _>(StandardNormal);
                }
            }
        }
    }
}

/// Source of i.i.d. random vectors in R^d.
pub trait PointSampler: Sync {
    fn dim(&self) -> usize;

    /// Writes one draw into `out` (length `dim()`).
    fn draw(&self, rng: &mut SubRng, out: &mut [f64]);

    /// Radius of a centered ball containing every draw.
    fn support_radius(&self) -> f64 {
        f64::INFINITY
    }
}

/// `sum_k a_k Y_k` with `Y_k` i.i.d. copies of a base law.
#[derive(Clone, Debug)]
pub struct WeightedSum {
    weights: Vec<f64>,
    law: BaseLaw,
}

impl WeightedSum {
    pub fn new(weights: Vec<f64>, law: BaseLaw) -> Self {
        WeightedSum { weights, law }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn law(&self) -> &BaseLaw {
        &self.law
    }
}

impl PointSampler for WeightedSum {
    fn dim(&self) -> usize {
        self.law.dim()
    }

    fn support_radius(&self) -> f64 {
        self.weights.iter().map(|a| a.abs()).sum::<f64>() * self.law.support_radius()
    }

    fn draw(&self, rng: &mut SubRng, out: &mut [f64]) {
        out.fill(0.0);
        if self.law == BaseLaw::Circle {
            let (mut sx, mut sy) = (0.0, 0.0);
            for &a in &self.weights {
                let [x, y] = circle_point(rng);
                sx += a * x;
                sy += a * y;
            }
            out[0] = sx;
            out[1] = sy;
            return;
        }
        let mut term = [0.0f64; 3];
        let d = self.dim();
        for &a in &self.weights {
            self.law.draw(rng, &mut term[..d]);
            for (o, t) in out.iter_mut().zip(&term[..d]) {
                *o += a * t;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Streams;

    #[test]
    fn circle_points_have_unit_modulus_and_uniform_angle() {
        let mut rng = Streams::new(1, "circle").stream(0);
        let n = 200_000;
        let mut quadrant = [0usize; 8];
        for _ in 0..n {
            let [x, y] = circle_point(&mut rng);
            assert!(((x * x + y * y) - 1.0).abs() < 1e-12);
            let angle = y.atan2(x).rem_euclid(std::f64::consts::TAU);
            quadrant[(angle / std::f64::consts::TAU * 8.0) as usize % 8] += 1;
        }
        let expected = n as f64 / 8.0;
        let sd = (expected * (1.0 - 1.0 / 8.0)).sqrt();
        for c in quadrant {
            assert!((c as f64 - expected).abs() < 5.0 * sd, "{quadrant:?}");
        }
    }

    #[test]
    fn base_law_moments() {
        let law = BaseLaw::UniformCube {
            dim: 1,
            half_width: 3f64.sqrt(),
        };
        assert!((law.variance() - 1.0).abs() < 1e-15);
        assert!((law.density_bound().unwrap() - 1.0 / (2.0 * 3f64.sqrt())).abs() < 1e-15);
        assert_eq!(BaseLaw::Circle.density_bound(), None);
    }
}
