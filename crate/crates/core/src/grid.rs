//! The geometric ε sample grid on which every "for ε small" statement is
//! checked.

use serde::{Deserialize, Serialize};

use crate::error::GridError;

/// Geometric sample grid `ε_i = eps_max·(eps_min/eps_max)^(i/(count−1))`.
///
/// Samples are strictly decreasing; the *tail* is the `⌈tail_fraction·count⌉`
/// smallest samples, i.e. the last indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsGrid {
    eps_max: f64,
    eps_min: f64,
    count: usize,
    tail_fraction: f64,
    samples: Vec<f64>,
}

impl Default for EpsGrid {
    fn default() -> Self {
        Self::new(0.5, 1e-9, 64, 0.25).expect("default grid is valid")
    }
}

impl EpsGrid {
    pub fn new(
        eps_max: f64,
        eps_min: f64,
        count: usize,
        tail_fraction: f64,
    ) -> Result<Self, GridError> {
        if !(eps_max > 0.0 && eps_max <= 1.0) {
            return Err(GridError::EpsMax(eps_max));
        }
        if !(eps_min > 0.0 && eps_min < eps_max) {
            return Err(GridError::EpsMin { eps_min, eps_max });
        }
        if count < 2 {
            return Err(GridError::Count(count));
        }
        if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
            return Err(GridError::TailFraction(tail_fraction));
        }
        let ratio = eps_min / eps_max;
        let last = (count - 1) as f64;
        let mut samples: Vec<f64> = (0..count)
            .map(|i| eps_max * ratio.powf(i as f64 / last))
            .collect();
        samples[0] = eps_max;
        samples[count - 1] = eps_min;
        let grid = Self {
            eps_max,
            eps_min,
            count,
            tail_fraction,
            samples,
        };
        if grid.tail_len() < 2 {
            return Err(GridError::TailTooShort(grid.tail_len()));
        }
        Ok(grid)
    }

    /// A grid over explicit sample points (sorted into decreasing order).
    /// Used to evaluate nets at a handful of chosen ε.
    pub fn from_samples(mut samples: Vec<f64>, tail_fraction: f64) -> Result<Self, GridError> {
        samples.sort_by(|a, b| b.total_cmp(a));
        samples.dedup();
        if samples.len() < 2 {
            return Err(GridError::Count(samples.len()));
        }
        if let Some(bad) = samples.iter().find(|e| !(**e > 0.0 && **e <= 1.0)) {
            return Err(GridError::EpsMax(*bad));
        }
        if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
            return Err(GridError::TailFraction(tail_fraction));
        }
        let grid = Self {
            eps_max: samples[0],
            eps_min: *samples.last().unwrap(),
            count: samples.len(),
            tail_fraction,
            samples,
        };
        if grid.tail_len() < 1 {
            return Err(GridError::TailTooShort(0));
        }
        Ok(grid)
    }

    pub fn eps_max(&self) -> f64 {
        self.eps_max
    }

    pub fn eps_min(&self) -> f64 {
        self.eps_min
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn tail_fraction(&self) -> f64 {
        self.tail_fraction
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn tail_len(&self) -> usize {
        ((self.tail_fraction * self.count as f64).ceil() as usize).clamp(1, self.count)
    }

    /// The smallest samples, in decreasing order.
    pub fn tail(&self) -> &[f64] {
        &self.samples[self.count - self.tail_len()..]
    }

    /// Grid indices `{0, ¼, ½, ¾, 1}·(count−1)` used for human-readable tables.
    pub fn representative_indices(&self) -> [usize; 5] {
        let last = self.count - 1;
        [0, last / 4, last / 2, (3 * last) / 4, last]
    }
}
