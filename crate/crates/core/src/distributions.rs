//! Quadrature distributions sampled on uniform grids.
//!
//! [`joint_density`] gives the joint distribution of the rotated quadratures
//! `(r1, r2)`; [`mode_marginals`] and [`combo_marginal`] reduce it to the
//! single-mode distributions `R_j` and to the distribution of
//! `u = a1 r1 ± a2 r2`.

use std::f64::consts::FRAC_PI_2;

use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fock::HermiteTable;
use crate::grid::Grid;
use crate::states::{PureState, TwoModeState};

/// Largest tolerated normalization defect of a sampled joint density.
pub const JOINT_COVERAGE_LIMIT: f64 = 1e-4;

/// Largest tolerated normalization defect of a line-integrated marginal.
pub const COMBO_COVERAGE_LIMIT: f64 = 1e-3;

/// Densities below this are treated as exact zeros.
pub const DENSITY_FLOOR: f64 = 1e-300;

/// A probability density on a uniform 1D grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GriddedDensity1D {
    grid: Grid,
    density: Vec<f64>,
    defect: f64,
}

impl GriddedDensity1D {
    /// Wraps samples as given. `defect` is their trapezoid integral minus one.
    pub fn new(grid: Grid, density: Vec<f64>) -> Result<Self> {
        if density.len() != grid.len() {
            return Err(invalid(format!("{} samples for a {}-point grid", density.len(), grid.len())));
        }
        if let Some(v) = density.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(invalid(format!("density sample {v} is negative or not finite")));
        }
        let defect = grid.trapezoid(&density) - 1.0;
        Ok(Self { grid, density, defect })
    }

    /// Rescales to unit integral, keeping the pre-normalization defect.
    pub fn normalized(grid: Grid, density: Vec<f64>) -> Result<Self> {
        let mut d = Self::new(grid, density)?;
        let total = d.defect + 1.0;
        if !(total > 0.0) {
            return Err(invalid("density integrates to zero"));
        }
        d.density.iter_mut().for_each(|v| *v /= total);
        Ok(d)
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let density = grid.points().map(f).collect();
        Self::normalized(grid, density)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    /// Integral minus one before normalization.
    pub fn defect(&self) -> f64 {
        self.defect
    }

    pub fn integral(&self) -> f64 {
        self.grid.trapezoid(&self.density)
    }

    pub fn len(&self) -> usize {
        self.density.len()
    }

    pub fn is_empty(&self) -> bool {
        self.density.is_empty()
    }

    pub fn mean(&self) -> f64 {
        let xs: Vec<f64> = self.grid.points().zip(&self.density).map(|(x, p)| x * p).collect();
        self.grid.trapezoid(&xs)
    }

    /// The density of `-x`.
    pub fn reflected(&self) -> Self {
        let grid = Grid::new(-self.grid.end(), self.grid.step(), self.grid.len()).expect("valid grid");
        Self { grid, density: self.density.iter().rev().copied().collect(), defect: self.defect }
    }
}

/// A probability density on the product of two uniform grids,
/// `density[[i, j]]` at `(grid1[i], grid2[j])`.
#[derive(Debug, Clone, PartialEq)]
pub struct GriddedDensity2D {
    grid1: Grid,
    grid2: Grid,
    density: Array2<f64>,
    defect: f64,
}

fn trapezoid_2d(g1: &Grid, g2: &Grid, d: ArrayView2<'_, f64>) -> f64 {
    let mut total = 0.0;
    for (i, row) in d.axis_iter(Axis(0)).enumerate() {
        let inner: f64 = row.iter().sum::<f64>() - 0.5 * (row[0] + row[row.len() - 1]);
        total += g1.weight(i) * inner * g2.step();
    }
    total
}

impl GriddedDensity2D {
    pub fn new(grid1: Grid, grid2: Grid, density: Array2<f64>) -> Result<Self> {
        if density.dim() != (grid1.len(), grid2.len()) {
            return Err(invalid(format!(
                "density shape {:?} does not match grids ({}, {})",
                density.dim(),
                grid1.len(),
                grid2.len()
            )));
        }
        if let Some(v) = density.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(invalid(format!("density sample {v} is negative or not finite")));
        }
        let defect = trapezoid_2d(&grid1, &grid2, density.view()) - 1.0;
        Ok(Self { grid1, grid2, density, defect })
    }

    pub fn normalized(grid1: Grid, grid2: Grid, density: Array2<f64>) -> Result<Self> {
        let mut d = Self::new(grid1, grid2, density)?;
        let total = d.defect + 1.0;
        if !(total > 0.0) {
            return Err(invalid("density integrates to zero"));
        }
        d.density.mapv_inplace(|v| v / total);
        Ok(d)
    }

    pub fn grid1(&self) -> &Grid {
        &self.grid1
    }

    pub fn grid2(&self) -> &Grid {
        &self.grid2
    }

    pub fn density(&self) -> ArrayView2<'_, f64> {
        self.density.view()
    }

    pub fn defect(&self) -> f64 {
        self.defect
    }

    pub fn integral(&self) -> f64 {
        trapezoid_2d(&self.grid1, &self.grid2, self.density.view())
    }

    /// Swap the roles of the two modes.
    pub fn transposed(&self) -> Self {
        Self {
            grid1: self.grid2,
            grid2: self.grid1,
            density: self.density.t().as_standard_layout().into_owned(),
            defect: self.defect,
        }
    }
}

/// Which global pairing a test uses: `Plus` measures `(r₊, s₋)`, `Minus`
/// measures `(r₋, s₊)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn opposite(self) -> Self {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }
}

/// Local rotation angles, local squeezing weights and the pairing.
///
/// The tests measure `r' = a1 r1 ± a2 r2` and `s' = s1/a1 ∓ s2/a2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSettings {
    pub theta1: f64,
    pub theta2: f64,
    pub a1: f64,
    pub a2: f64,
    pub sign: Sign,
}

impl MeasurementSettings {
    pub fn new(theta1: f64, theta2: f64, a1: f64, a2: f64, sign: Sign) -> Result<Self> {
        if !(a1 > 0.0 && a2 > 0.0 && a1.is_finite() && a2.is_finite()) {
            return Err(invalid(format!("squeezing weights must be positive, got ({a1}, {a2})")));
        }
        if !(theta1.is_finite() && theta2.is_finite()) {
            return Err(invalid("angles must be finite"));
        }
        Ok(Self { theta1, theta2, a1, a2, sign })
    }

    /// No squeezing.
    pub fn rotated(theta1: f64, theta2: f64, sign: Sign) -> Self {
        Self { theta1, theta2, a1: 1.0, a2: 1.0, sign }
    }

    /// Angles at which the joint distribution of `(s1, s2)` is measured.
    pub fn conjugate_angles(&self) -> (f64, f64) {
        (self.theta1 + FRAC_PI_2, self.theta2 + FRAC_PI_2)
    }
}

/// Unnormalized `|Ψ_θ(r1, r2)|²` of a pure state on the grid product.
pub(crate) fn pure_density(state: &PureState, theta1: f64, theta2: f64, g1: &Grid, g2: &Grid) -> Array2<f64> {
    match state {
        PureState::Fock(s) => {
            let (n1, n2) = s.cutoffs();
            let t1 = HermiteTable::for_grid(n1, g1);
            let t2 = if g1 == g2 && n1 == n2 { t1.clone() } else { HermiteTable::for_grid(n2, g2) };
            let (re, im) = s.rotated(theta1, theta2).wavefunction_parts(&t1, &t2);
            let mut d = re;
            d.zip_mut_with(&im, |a, b| *a = *a * *a + b * b);
            d
        }
        PureState::Analytic(s) => {
            let r = s.rotated(theta1, theta2);
            let xs = g1.to_vec();
            let ys = g2.to_vec();
            Array2::from_shape_fn((xs.len(), ys.len()), |(i, j)| r.density(xs[i], ys[j]))
        }
    }
}

fn covered(g1: &Grid, g2: &Grid, d: Array2<f64>) -> Result<GriddedDensity2D> {
    let raw = GriddedDensity2D::new(*g1, *g2, d)?;
    if raw.defect.abs() > JOINT_COVERAGE_LIMIT {
        return Err(Error::GridCoverage { defect: raw.defect.abs(), limit: JOINT_COVERAGE_LIMIT });
    }
    let total = raw.defect + 1.0;
    let mut out = raw;
    out.density.mapv_inplace(|v| v / total);
    Ok(out)
}

/// Joint density of the quadratures `(r1, r2)` at angles `(θ1, θ2)`.
///
/// Pure states use the rotated wavefunction; ensembles the weighted sum of
/// their members' densities. Each sampled density must integrate to one
/// within [`JOINT_COVERAGE_LIMIT`] before renormalization.
pub fn joint_density(
    state: &TwoModeState,
    theta1: f64,
    theta2: f64,
    grid1: &Grid,
    grid2: &Grid,
) -> Result<GriddedDensity2D> {
    match state {
        TwoModeState::Pure(p) => covered(grid1, grid2, pure_density(p, theta1, theta2, grid1, grid2)),
        TwoModeState::Mixed(e) => {
            let mut acc = Array2::<f64>::zeros((grid1.len(), grid2.len()));
            let mut defect: f64 = 0.0;
            for (w, member) in e.members() {
                let d = covered(grid1, grid2, pure_density(member, theta1, theta2, grid1, grid2))?;
                defect = defect.max(d.defect.abs());
                acc.scaled_add(*w, &d.density);
            }
            let mut out = GriddedDensity2D::normalized(*grid1, *grid2, acc)?;
            out.defect = defect;
            Ok(out)
        }
    }
}

/// Single-mode marginals `(R1, R2)` by trapezoid integration over the other
/// axis.
pub fn mode_marginals(joint: &GriddedDensity2D) -> (GriddedDensity1D, GriddedDensity1D) {
    let (g1, g2) = (joint.grid1, joint.grid2);
    let d = joint.density.view();
    let first: Vec<f64> = d
        .axis_iter(Axis(0))
        .map(|row| (row.iter().sum::<f64>() - 0.5 * (row[0] + row[row.len() - 1])) * g2.step())
        .collect();
    let mut second = vec![0.0; g2.len()];
    for (i, row) in d.axis_iter(Axis(0)).enumerate() {
        let w = g1.weight(i);
        for (acc, v) in second.iter_mut().zip(row.iter()) {
            *acc += w * v;
        }
    }
    (
        GriddedDensity1D::normalized(g1, first).expect("marginal of a valid density"),
        GriddedDensity1D::normalized(g2, second).expect("marginal of a valid density"),
    )
}

/// Density of `u = a1 r1 ± a2 r2`:
/// `R(u) = (1/a2) ∫ P(t, (u − a1 t)/(±a2)) dt`.
///
/// The integral runs over the nodes of the axis whose scaled step `a_j h_j` is
/// coarser; the other axis is interpolated linearly (bilinear interpolation
/// restricted to the integration line). The output grid spans the image of
/// the joint support with step equal to the finer scaled step, so that when
/// the two scaled steps are commensurate every sample lands on a node and no
/// interpolation happens at all.
pub fn combo_marginal(joint: &GriddedDensity2D, a1: f64, a2: f64, sign: Sign) -> Result<GriddedDensity1D> {
    if !(a1 > 0.0 && a2 > 0.0 && a1.is_finite() && a2.is_finite()) {
        return Err(invalid(format!("squeezing weights must be positive, got ({a1}, {a2})")));
    }
    let s = sign.factor();
    let (g1, g2) = (joint.grid1, joint.grid2);
    let transposed;
    // (integration grid, its coefficient, interpolated grid, its signed coefficient, density view)
    let (gt, at, gs, asg, view) = if a1 * g1.step() >= a2 * g2.step() {
        (g1, a1, g2, s * a2, joint.density.view())
    } else {
        transposed = joint.density.t().as_standard_layout().into_owned();
        (g2, s * a2, g1, a1, transposed.view())
    };

    let du = asg.abs() * gs.step();
    let corners = [
        at * gt.start() + asg * gs.start(),
        at * gt.start() + asg * gs.end(),
        at * gt.end() + asg * gs.start(),
        at * gt.end() + asg * gs.end(),
    ];
    let umin = corners.iter().copied().fold(f64::INFINITY, f64::min);
    let umax = corners.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let nu = ((umax - umin) / du - 1e-9).ceil() as usize + 1;
    let ns = gs.len() as i64;
    let dir: i64 = if asg > 0.0 { 1 } else { -1 };

    let mut out = vec![0.0; nu];
    for (i, row) in view.axis_iter(Axis(0)).enumerate() {
        let t = gt.point(i);
        let w = gt.weight(i) / asg.abs();
        // Fractional index of s(u_k) advances by exactly `dir` per output node.
        let f0 = ((umin - at * t) / asg - gs.start()) / gs.step();
        let mut base = f0.floor();
        let mut frac = f0 - base;
        if frac < 1e-9 {
            frac = 0.0;
        } else if frac > 1.0 - 1e-9 {
            frac = 0.0;
            base += 1.0;
        }
        let base = base as i64;
        let node = |j: i64| if (0..ns).contains(&j) { row[j as usize] } else { 0.0 };
        // Output nodes whose interpolation stencil touches the row.
        let (klo, khi) = if dir > 0 { (-1 - base, ns - 1 - base) } else { (base - ns + 1, base + 1) };
        let klo = klo.max(0) as usize;
        let khi = (khi.min(nu as i64 - 1)).max(-1);
        if khi < klo as i64 {
            continue;
        }
        for (k, acc) in out.iter_mut().enumerate().take(khi as usize + 1).skip(klo) {
            let j = base + dir * k as i64;
            let v = if frac == 0.0 { node(j) } else { (1.0 - frac) * node(j) + frac * node(j + 1) };
            *acc += w * v;
        }
    }

    let grid = Grid::new(umin, du, nu)?;
    let raw = GriddedDensity1D::new(grid, out)?;
    if raw.defect.abs() > COMBO_COVERAGE_LIMIT {
        return Err(Error::GridCoverage { defect: raw.defect.abs(), limit: COMBO_COVERAGE_LIMIT });
    }
    GriddedDensity1D::normalized(grid, raw.density)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::FockState2;
    use std::f64::consts::PI;

    fn vacuum_joint(points: usize) -> GriddedDensity2D {
        let g = Grid::symmetric(10.0, points).unwrap();
        joint_density(&FockState2::vacuum().into(), 0.0, 0.0, &g, &g).unwrap()
    }

    fn var(d: &GriddedDensity1D) -> f64 {
        let m = d.mean();
        let v: Vec<f64> = d.grid().points().zip(d.density()).map(|(x, p)| (x - m).powi(2) * p).collect();
        d.grid().trapezoid(&v)
    }

    #[test]
    fn vacuum_joint_is_gaussian() {
        let j = vacuum_joint(129);
        let g = j.grid1().to_vec();
        for i in (0..g.len()).step_by(7) {
            for k in (0..g.len()).step_by(11) {
                let expect = (-(g[i] * g[i] + g[k] * g[k])).exp() / PI;
                assert!((j.density()[[i, k]] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn vacuum_marginals_have_half_variance() {
        let (r1, r2) = mode_marginals(&vacuum_joint(256));
        assert!((var(&r1) - 0.5).abs() < 1e-10);
        assert!((var(&r2) - 0.5).abs() < 1e-10);
    }

    #[test]
    fn combo_of_vacuum_scales() {
        let j = vacuum_joint(256);
        let plus = combo_marginal(&j, 1.0, 1.0, Sign::Plus).unwrap();
        assert_eq!(plus.len(), 511);
        assert!((var(&plus) - 1.0).abs() < 1e-10);
        let wide = combo_marginal(&j, 2.0, 2.0, Sign::Minus).unwrap();
        assert!((var(&wide) - 4.0).abs() < 1e-9);
        let mixed = combo_marginal(&j, 0.5, 2.0, Sign::Plus).unwrap();
        assert!((var(&mixed) - (0.25 + 4.0) / 2.0).abs() < 1e-9);
        // Incommensurate weights exercise the interpolation path.
        let odd = combo_marginal(&j, 1.0, 0.77, Sign::Minus).unwrap();
        let fine = combo_marginal(&vacuum_joint(1024), 1.0, 0.77, Sign::Minus).unwrap();
        let (e_odd, e_fine) = (var(&odd) - 0.79645, var(&fine) - 0.79645);
        // Linear interpolation error is second order in the step.
        assert!(e_fine.abs() < 1e-4 && e_fine.abs() < e_odd.abs() / 10.0);
    }

    #[test]
    fn rejects_bad_weights_and_coverage() {
        let j = vacuum_joint(64);
        assert!(combo_marginal(&j, 0.0, 1.0, Sign::Plus).is_err());
        let g = Grid::symmetric(1.0, 64).unwrap();
        assert!(matches!(
            joint_density(&FockState2::vacuum().into(), 0.0, 0.0, &g, &g),
            Err(Error::GridCoverage { .. })
        ));
    }

    #[test]
    fn normalization_records_defect() {
        let g = Grid::new(0.0, 0.5, 5).unwrap();
        let d = GriddedDensity1D::normalized(g, vec![1.0; 5]).unwrap();
        assert!((d.defect() - 1.0).abs() < 1e-15);
        assert!((d.integral() - 1.0).abs() < 1e-15);
        assert!(GriddedDensity1D::new(g, vec![-1.0; 5]).is_err());
    }
}
