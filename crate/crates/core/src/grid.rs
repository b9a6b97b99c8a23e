//! Uniform quadrature grids.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Default number of points per axis.
pub const DEFAULT_POINTS: usize = 1024;

/// Largest resolution the convergence loop will try.
pub const MAX_POINTS: usize = 8192;

/// A uniform grid `start + i * step`, `i = 0..len`.
///
/// Grids built with [`Grid::symmetric`] are mirror-exact: `point(len - 1 - i)`
/// is bitwise `-point(i)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    start: f64,
    step: f64,
    len: usize,
    symmetric: bool,
}

impl Grid {
    pub fn new(start: f64, step: f64, len: usize) -> Result<Self> {
        if !(step > 0.0 && step.is_finite() && start.is_finite()) {
            return Err(invalid(format!("grid step must be positive, got {step}")));
        }
        if len < 2 {
            return Err(invalid("a grid needs at least two points"));
        }
        Ok(Self { start, step, len, symmetric: false })
    }

    /// `points` equally spaced values covering `[-half_width, half_width]`.
    pub fn symmetric(half_width: f64, points: usize) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(invalid(format!("grid half-width must be positive, got {half_width}")));
        }
        let mut grid = Self::new(-half_width, 2.0 * half_width / (points.max(2) - 1) as f64, points)?;
        grid.symmetric = true;
        Ok(grid)
    }

    /// Recover a uniform grid from explicit points.
    pub fn from_points(points: &[f64]) -> Result<Self> {
        if points.len() < 2 {
            return Err(invalid("a grid needs at least two points"));
        }
        let step = (points[points.len() - 1] - points[0]) / (points.len() - 1) as f64;
        for (i, w) in points.windows(2).enumerate() {
            if !(w[1] > w[0]) {
                return Err(invalid(format!("grid not strictly increasing at index {i}")));
            }
            if ((w[1] - w[0]) - step).abs() > 1e-9 * step.max(1.0) {
                return Err(invalid(format!("grid not uniform at index {i}")));
            }
        }
        let mut grid = Self::new(points[0], step, points.len())?;
        grid.symmetric = (points[0] + points[points.len() - 1]).abs() <= 1e-12 * step;
        Ok(grid)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn start(&self) -> f64 {
        self.point(0)
    }

    pub fn end(&self) -> f64 {
        self.point(self.len - 1)
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn point(&self, i: usize) -> f64 {
        if self.symmetric && 2 * i >= self.len {
            -(self.start + (self.len - 1 - i) as f64 * self.step)
        } else {
            self.start + i as f64 * self.step
        }
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.len).map(move |i| self.point(i))
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.points().collect()
    }

    /// Trapezoid weight of node `i`.
    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        if i == 0 || i + 1 == self.len {
            0.5 * self.step
        } else {
            self.step
        }
    }

    pub fn trapezoid(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.len);
        let inner: f64 = values.iter().sum();
        self.step * (inner - 0.5 * (values[0] + values[self.len - 1]))
    }

    /// Same span, different resolution.
    pub fn resampled(&self, points: usize) -> Result<Self> {
        if self.symmetric {
            Self::symmetric(self.end(), points)
        } else {
            let step = (self.end() - self.start) / (points.max(2) - 1) as f64;
            Self::new(self.start, step, points)
        }
    }
}

/// How to lay out the evaluation grid for a state: points per axis and the
/// half-width of the symmetric window (`None` picks it from the state).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub points: usize,
    pub half_width: Option<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { points: DEFAULT_POINTS, half_width: None }
    }
}

impl GridSpec {
    pub fn with_points(points: usize) -> Self {
        Self { points, half_width: None }
    }

    pub fn with_half_width(mut self, half_width: f64) -> Self {
        self.half_width = Some(half_width);
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_grid_is_mirror_exact() {
        let g = Grid::symmetric(7.3, 101).unwrap();
        for i in 0..g.len() {
            assert_eq!(g.point(i), -g.point(g.len() - 1 - i));
        }
        assert_eq!(g.point(50), 0.0);
        assert_eq!(g.end(), 7.3);
    }

    #[test]
    fn from_points_rejects_non_monotone() {
        assert!(Grid::from_points(&[0.0, 1.0, 0.5]).is_err());
        assert!(Grid::from_points(&[0.0, 1.0, 3.0]).is_err());
        let g = Grid::from_points(&[-1.3, 0.0, 1.3]).unwrap();
        assert!(g.is_symmetric());
    }

    #[test]
    fn trapezoid_is_exact_for_linear() {
        let g = Grid::new(0.0, 0.25, 9).unwrap();
        let v: Vec<f64> = g.points().map(|x| 3.0 * x + 1.0).collect();
        assert!((g.trapezoid(&v) - 8.0).abs() < 1e-14);
        let w: f64 = (0..g.len()).map(|i| g.weight(i)).sum();
        assert!((w - 2.0).abs() < 1e-14);
    }
}
