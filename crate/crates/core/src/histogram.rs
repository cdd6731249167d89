//! Rectangular-grid histogram density estimates in one to three dimensions.

use crate::error::{LabError, Result};

/// Bins whose expected count falls below this are considered unreliable.
pub const MIN_RELIABLE_COUNT: f64 = 100.0;

/// Binned density estimate on a regular grid.
///
/// Samples falling outside the grid are counted in `outside`, so
/// `counts.sum() + outside == total` always holds.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityHistogram {
    origin: Vec<f64>,
    widths: Vec<f64>,
    bins: Vec<usize>,
    counts: Vec<u64>,
    outside: u64,
    total: u64,
}

/// Location and height of the tallest bin.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityPeak {
    pub density: f64,
    pub std_error: f64,
    pub center: Vec<f64>,
    pub count: u64,
}

impl DensityHistogram {
    pub fn new(origin: Vec<f64>, widths: Vec<f64>, bins: Vec<usize>) -> Result<Self> {
        let d = origin.len();
        if d == 0 || widths.len() != d || bins.len() != d {
            return Err(LabError::Configuration(
                "histogram origin, widths and bins must share a dimension".into(),
            ));
        }
        if d > 3 {
            return Err(LabError::UnsupportedDimension(d));
        }
        if widths.iter().any(|w| !(w.is_finite() && *w > 0.0)) || bins.contains(&0) {
            return Err(LabError::Configuration(
                "histogram bins must have positive width and count".into(),
            ));
        }
        let cells: usize = bins.iter().product();
        if cells > 50_000_000 {
            return Err(LabError::Configuration(format!(
                "histogram with {cells} bins is too large"
            )));
        }
        Ok(DensityHistogram {
            origin,
            widths,
            bins,
            counts: vec![0; cells],
            outside: 0,
            total: 0,
        })
    }

    /// Grid of cubic bins of side `width` covering the box `[lo, hi]`.
    pub fn covering(lo: &[f64], hi: &[f64], width: f64) -> Result<Self> {
        let bins: Vec<usize> = lo
            .iter()
            .zip(hi)
            .map(|(l, h)| (((h - l) / width).ceil() as usize).max(1))
            .collect();
        DensityHistogram::new(lo.to_vec(), vec![width; lo.len()], bins)
    }

    /// Bin side `diameter * samples^(-1/(d+2))`, the MSE-optimal rate.
    pub fn rule_width(diameter: f64, samples: u64, dim: usize) -> f64 {
        diameter * (samples as f64).powf(-1.0 / (dim as f64 + 2.0))
    }

    /// Empty histogram with the same grid.
    pub fn empty_like(&self) -> DensityHistogram {
        DensityHistogram {
            origin: self.origin.clone(),
            widths: self.widths.clone(),
            bins: self.bins.clone(),
            counts: vec![0; self.counts.len()],
            outside: 0,
            total: 0,
        }
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn dim(&self) -> usize {
        self.origin.len()
    }

    pub fn bins(&self) -> &[usize] {
        &self.bins
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn outside(&self) -> u64 {
        self.outside
    }

    pub fn bin_volume(&self) -> f64 {
        self.widths.iter().product()
    }

    pub fn index_of(&self, x: &[f64]) -> Option<usize> {
        let mut idx = 0usize;
        for k in (0..self.dim()).rev() {
            let t = (x[k] - self.origin[k]) / self.widths[k];
            if !(t >= 0.0) {
                return None;
            }
            let b = t as usize;
            if b >= self.bins[k] {
                return None;
            }
            idx = idx * self.bins[k] + b;
        }
        Some(idx)
    }

    pub fn add(&mut self, x: &[f64]) {
        self.total += 1;
        match self.index_of(x) {
            Some(i) => self.counts[i] += 1,
            None => self.outside += 1,
        }
    }

    /// Adds the counts of a histogram with identical geometry.
    pub fn merge(&mut self, other: &DensityHistogram) -> Result<()> {
        if self.origin != other.origin || self.widths != other.widths || self.bins != other.bins {
            return Err(LabError::Configuration(
                "cannot merge histograms with different grids".into(),
            ));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.outside += other.outside;
        self.total += other.total;
        Ok(())
    }

    pub fn center(&self, index: usize) -> Vec<f64> {
        let mut rem = index;
        (0..self.dim())
            .map(|k| {
                let b = rem % self.bins[k];
                rem /= self.bins[k];
                self.origin[k] + (b as f64 + 0.5) * self.widths[k]
            })
            .collect()
    }

    pub fn density(&self, index: usize) -> f64 {
        self.counts[index] as f64 / (self.total as f64 * self.bin_volume())
    }

    /// Binomial standard error of `density(index)`.
    pub fn std_error(&self, index: usize) -> f64 {
        let n = self.total as f64;
        let p = self.counts[index] as f64 / n;
        (p * (1.0 - p) / n).sqrt() / self.bin_volume()
    }

    /// Integral of the estimated density over the grid, i.e. the in-grid fraction.
    pub fn integral(&self) -> f64 {
        (0..self.counts.len())
            .map(|i| self.density(i) * self.bin_volume())
            .sum()
    }

    /// Tallest bin; ties resolve to the lowest index.
    pub fn peak(&self) -> DensityPeak {
        let (index, &count) = self
            .counts
            .iter()
            .enumerate()
            .fold(
                (0, &0u64),
                |best, cur| if cur.1 > best.1 { cur } else { best },
            );
        DensityPeak {
            density: self.density(index),
            std_error: self.std_error(index),
            center: self.center(index),
            count,
        }
    }

    /// Indices whose observed count is below [`MIN_RELIABLE_COUNT`].
    pub fn unreliable_bins(&self) -> Vec<usize> {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| (c as f64) < MIN_RELIABLE_COUNT)
            .map(|(i, _)| i)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_and_integral() {
        let mut h = DensityHistogram::new(vec![0.0, 0.0], vec![0.5, 0.5], vec![2, 2]).unwrap();
        for p in [[0.1, 0.1], [0.6, 0.1], [0.6, 0.9], [0.9, 0.9], [2.0, 0.0]] {
            h.add(&p);
        }
        assert_eq!(h.total(), 5);
        assert_eq!(h.outside(), 1);
        assert_eq!(h.counts().iter().sum::<u64>() + h.outside(), h.total());
        assert!((h.integral() - 0.8).abs() < 1e-12);
        let peak = h.peak();
        assert_eq!(peak.count, 2);
        assert_eq!(peak.center, vec![0.75, 0.75]);
    }

    #[test]
    fn index_center_round_trip() {
        let h = DensityHistogram::new(vec![-1.0, 2.0, 0.0], vec![0.1, 0.2, 0.3], vec![3, 4, 5])
            .unwrap();
        for i in 0..60 {
            assert_eq!(h.index_of(&h.center(i)), Some(i));
        }
    }

    #[test]
    fn rejects_bad_geometry() {
        assert!(DensityHistogram::new(vec![0.0], vec![0.0], vec![3]).is_err());
        assert!(matches!(
            DensityHistogram::new(vec![0.0; 4], vec![1.0; 4], vec![1; 4]),
            Err(LabError::UnsupportedDimension(4))
        ));
        let a = DensityHistogram::new(vec![0.0], vec![1.0], vec![3]).unwrap();
        let mut b = DensityHistogram::new(vec![0.0], vec![0.5], vec![3]).unwrap();
        assert!(b.merge(&a).is_err());
    }

    #[test]
    fn rule_width_rate() {
        let h = DensityHistogram::rule_width(10.0, 10_000, 2);
        assert!((h - 1.0).abs() < 1e-12);
    }
}
