//! Axis-aligned rectangles and regular grids on them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed rectangle [lo, hi] = Π_ℓ [lo_ℓ, hi_ℓ].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Interval {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(Error::arg(format!(
                "interval bounds must be non-empty and of equal length, got {} and {}",
                lo.len(),
                hi.len()
            )));
        }
        for (l, (&a, &b)) in lo.iter().zip(&hi).enumerate() {
            if !(a.is_finite() && b.is_finite()) || a < 0.0 || b < a {
                return Err(Error::arg(format!("axis {l}: need 0 <= lo <= hi, got [{a}, {b}]")));
            }
        }
        Ok(Interval { lo, hi })
    }

    /// The cube [lo, hi]^N.
    pub fn cube(n: usize, lo: f64, hi: f64) -> Result<Self> {
        Interval::new(vec![lo; n], vec![hi; n])
    }

    pub fn n_dims(&self) -> usize {
        self.lo.len()
    }

    pub fn side(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }

    pub fn diameter(&self) -> f64 {
        (0..self.n_dims()).map(|l| self.side(l).powi(2)).sum::<f64>().sqrt()
    }

    pub fn volume(&self) -> f64 {
        (0..self.n_dims()).map(|l| self.side(l)).product()
    }

    pub fn contains(&self, t: &[f64]) -> bool {
        t.len() == self.n_dims() && t.iter().zip(self.lo.iter().zip(&self.hi)).all(|(&x, (&a, &b))| a <= x && x <= b)
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    /// True when every lower bound is strictly positive.
    pub fn is_positive(&self) -> bool {
        self.lo.iter().all(|&a| a > 0.0)
    }
}

/// Regular grid with `counts[ℓ]` points along axis ℓ, endpoints included.
///
/// Points are flattened in row-major order: the last axis varies fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub interval: Interval,
    pub counts: Vec<usize>,
}

impl Grid {
    pub fn new(interval: Interval, counts: Vec<usize>) -> Result<Self> {
        if counts.len() != interval.n_dims() {
            return Err(Error::arg(format!(
                "grid has {} counts for a {}-dimensional interval",
                counts.len(),
                interval.n_dims()
            )));
        }
        for (l, &c) in counts.iter().enumerate() {
            if c == 0 {
                return Err(Error::arg(format!("axis {l}: grid count must be positive")));
            }
            if c == 1 && interval.side(l) > 0.0 {
                return Err(Error::arg(format!("axis {l}: a single grid point needs a degenerate side")));
            }
            if c > 1 && interval.side(l) == 0.0 {
                return Err(Error::arg(format!("axis {l}: degenerate side cannot carry {c} points")));
            }
        }
        Ok(Grid { interval, counts })
    }

    /// Shorthand for `Grid::new(Interval::new(lo, hi)?, counts)`.
    pub fn uniform(lo: &[f64], hi: &[f64], counts: &[usize]) -> Result<Self> {
        Grid::new(Interval::new(lo.to_vec(), hi.to_vec())?, counts.to_vec())
    }

    pub fn n_dims(&self) -> usize {
        self.counts.len()
    }

    pub fn n_points(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        let c = self.counts[axis];
        if c <= 1 {
            0.0
        } else {
            self.interval.side(axis) / (c - 1) as f64
        }
    }

    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        let c = self.counts[axis];
        if i + 1 == c {
            self.interval.hi[axis]
        } else {
            self.interval.lo[axis] + i as f64 * self.spacing(axis)
        }
    }

    pub fn axis_coords(&self, axis: usize) -> Vec<f64> {
        (0..self.counts[axis]).map(|i| self.coord(axis, i)).collect()
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.n_dims()];
        for l in (0..self.n_dims()).rev() {
            idx[l] = flat % self.counts[l];
            flat /= self.counts[l];
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.counts).fold(0, |acc, (&i, &c)| acc * c + i)
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat).iter().enumerate().map(|(l, &i)| self.coord(l, i)).collect()
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.n_points()).map(|k| self.point(k)).collect()
    }

    /// Volume of one grid cell; for a single-point axis the factor is 1.
    pub fn cell_volume(&self) -> f64 {
        (0..self.n_dims()).map(|l| if self.counts[l] > 1 { self.spacing(l) } else { 1.0 }).product()
    }

    /// Number of cells per axis (points minus one).
    pub fn cell_counts(&self) -> Vec<usize> {
        self.counts.iter().map(|&c| c.saturating_sub(1)).collect()
    }
}
