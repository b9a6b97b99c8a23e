//! Differential entropy and moments of gridded densities, with a
//! resolution-doubling convergence loop.

use serde::{Deserialize, Serialize};

use crate::distributions::{GriddedDensity1D, DENSITY_FLOOR};
use crate::error::{invalid, Error, Result};
use crate::grid::MAX_POINTS;

/// Entropy change on one grid doubling below which an estimate counts as
/// converged (nats).
pub const CONVERGENCE_TOL: f64 = 1e-4;

/// An entropy value in nats with its resolution and, when a companion
/// resolution was evaluated, the change between the two.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyEstimate {
    pub value: f64,
    pub grid_points: usize,
    pub refinement_delta: Option<f64>,
}

impl EntropyEstimate {
    pub fn converged(&self) -> bool {
        self.refinement_delta.is_some_and(|d| d < CONVERGENCE_TOL)
    }
}

fn entropy_value(d: &GriddedDensity1D) -> Result<f64> {
    let integral = d.integral();
    if (integral - 1.0).abs() > 1e-6 {
        return Err(invalid(format!("density not normalized: integral {integral}")));
    }
    let g = d.grid();
    let h: f64 = d
        .density()
        .iter()
        .enumerate()
        .filter(|(_, &p)| p >= DENSITY_FLOOR)
        .map(|(i, &p)| g.weight(i) * p * p.ln())
        .sum();
    Ok(-h)
}

/// `H = −Σ w_i ρ_i ln ρ_i` with trapezoid weights and `0 ln 0 = 0`.
pub fn differential_entropy(d: &GriddedDensity1D) -> Result<EntropyEstimate> {
    Ok(EntropyEstimate { value: entropy_value(d)?, grid_points: d.len(), refinement_delta: None })
}

/// Entropy of `d` with the change relative to a companion density at another
/// resolution recorded as `refinement_delta`.
pub fn differential_entropy_refined(d: &GriddedDensity1D, companion: &GriddedDensity1D) -> Result<EntropyEstimate> {
    let value = entropy_value(d)?;
    let other = entropy_value(companion)?;
    Ok(EntropyEstimate { value, grid_points: d.len(), refinement_delta: Some((value - other).abs()) })
}

/// `∫ x² ρ − (∫ x ρ)²`.
pub fn variance(d: &GriddedDensity1D) -> f64 {
    let g = d.grid();
    let (mut m1, mut m2) = (0.0, 0.0);
    for (i, (x, &p)) in g.points().zip(d.density()).enumerate() {
        let w = g.weight(i) * p;
        m1 += w * x;
        m2 += w * x * x;
    }
    m2 - m1 * m1
}

/// Doubles the resolution from `start_points` until a value changes by less
/// than [`CONVERGENCE_TOL`], up to `cap` points.
pub(crate) fn converge(mut value_at: impl FnMut(usize) -> Result<f64>, start_points: usize, cap: usize) -> Result<EntropyEstimate> {
    if start_points < 2 || start_points > cap {
        return Err(invalid(format!("start resolution {start_points} outside [2, {cap}]")));
    }
    let mut points = start_points;
    let mut coarse = value_at(points)?;
    loop {
        let next = 2 * points;
        if next > cap {
            return Err(Error::Convergence { points, coarse: f64::NAN, fine: coarse });
        }
        let fine = value_at(next)?;
        let delta = (fine - coarse).abs();
        if delta < CONVERGENCE_TOL {
            return Ok(EntropyEstimate { value: fine, grid_points: next, refinement_delta: Some(delta) });
        }
        if 2 * next > cap {
            return Err(Error::Convergence { points: next, coarse, fine });
        }
        points = next;
        coarse = fine;
    }
}

/// Entropy of `producer(n)` for `n = start_points, 2·start_points, …` until
/// consecutive values agree within [`CONVERGENCE_TOL`]; fails with a
/// convergence error carrying the last two values once 8192 points are
/// reached.
pub fn converged_entropy(
    mut producer: impl FnMut(usize) -> Result<GriddedDensity1D>,
    start_points: usize,
) -> Result<EntropyEstimate> {
    converge(|n| entropy_value(&producer(n)?), start_points, MAX_POINTS)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use std::f64::consts::PI;

    fn gaussian(points: usize, sigma: f64, half_width: f64) -> GriddedDensity1D {
        let g = Grid::symmetric(half_width, points).unwrap();
        GriddedDensity1D::from_fn(g, |x| (-x * x / (2.0 * sigma * sigma)).exp()).unwrap()
    }

    #[test]
    fn gaussian_entropy_and_variance() {
        let d = gaussian(1024, 1.0, 10.0);
        let h = differential_entropy(&d).unwrap();
        assert!((h.value - 0.5 * (2.0 * PI * std::f64::consts::E).ln()).abs() < 1e-4);
        assert_eq!(h.refinement_delta, None);
        let d2 = gaussian(1024, 2f64.sqrt(), 14.0);
        assert!((variance(&d2) - 2.0).abs() < 1e-6);
    }

    #[test]
    fn uniform_entropy() {
        let g = Grid::symmetric(1.0, 1001).unwrap();
        let g = Grid::new(0.0, g.step(), g.len()).unwrap();
        let d = GriddedDensity1D::normalized(g, vec![0.5; 1001]).unwrap();
        assert!((differential_entropy(&d).unwrap().value - 2f64.ln()).abs() < 1e-6);
    }

    #[test]
    fn unnormalized_input_is_rejected() {
        let g = Grid::symmetric(10.0, 64).unwrap();
        let d = GriddedDensity1D::new(g, vec![1.0; 64]).unwrap();
        assert!(matches!(differential_entropy(&d), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn gaussian_converges_early() {
        let est = converged_entropy(|n| Ok(gaussian(n, 1.0, 10.0)), 128).unwrap();
        assert!(est.grid_points <= 1024);
        assert!(est.converged());
        assert!((est.value - 0.5 * (2.0 * PI * std::f64::consts::E).ln()).abs() < 1e-4);
    }

    #[test]
    fn needle_fails_to_converge() {
        let err = converged_entropy(|n| Ok(gaussian(n + 1, 1e-3, 10.0)), 128).unwrap_err();
        assert!(matches!(err, Error::Convergence { .. }));
    }
}
