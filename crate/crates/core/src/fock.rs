//! Truncated Fock-basis states of one and two modes.
//!
//! A two-mode pure state is the coefficient matrix `C[n, m]` of
//! `Σ C[n, m] |n, m⟩`. Its position wavefunction is
//! `Ψ(r1, r2) = Σ C[n, m] φ_n(r1) φ_m(r2)` with the Hermite functions `φ_n`
//! tabulated by [`hermite_basis`]. Rotating mode `j` by `θ_j`
//! (`C[n, m] → C[n, m] e^{-i n θ1} e^{-i m θ2}`) turns the position
//! wavefunction into the wavefunction of the rotated quadratures
//! `r_j = cos θ_j x_j + sin θ_j p_j`.

use std::f64::consts::PI;

use ndarray::{s, Array2, ArrayView2};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::Grid;

/// Default discarded-probability bound for truncated expansions.
pub const DEFAULT_TAIL_TOL: f64 = 1e-10;

/// Default hard cap on the photon-number cutoff.
pub const DEFAULT_FOCK_CAP: usize = 512;

/// One of the two modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    First,
    Second,
}

/// Normalized single-mode amplitudes `c_n`, `n = 0..=cutoff`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeCoefficients {
    coeffs: Vec<Complex64>,
}

impl ModeCoefficients {
    /// Normalizes `coeffs`; fails on an empty or zero vector.
    pub fn new(coeffs: Vec<Complex64>) -> Result<Self> {
        let norm = coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>();
        if coeffs.is_empty() || !(norm > 0.0 && norm.is_finite()) {
            return Err(invalid("mode coefficients must have a finite, nonzero norm"));
        }
        let scale = norm.sqrt().recip();
        Ok(Self { coeffs: coeffs.into_iter().map(|c| c * scale).collect() })
    }

    pub fn cutoff(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn mean_photons(&self) -> f64 {
        self.coeffs.iter().enumerate().map(|(n, c)| n as f64 * c.norm_sqr()).sum()
    }
}

/// Coherent-state amplitudes `e^{-|α|²/2} αⁿ/√n!`, truncated at the smallest
/// cutoff whose discarded probability is below `tail_tol`, then renormalized.
pub fn coherent_coefficients(alpha: Complex64, tail_tol: f64) -> Result<ModeCoefficients> {
    coherent_coefficients_with_cap(alpha, tail_tol, DEFAULT_FOCK_CAP)
}

pub fn coherent_coefficients_with_cap(
    alpha: Complex64,
    tail_tol: f64,
    cap: usize,
) -> Result<ModeCoefficients> {
    if !(tail_tol > 0.0 && tail_tol <= 1e-4) {
        return Err(invalid(format!("tail tolerance must lie in (0, 1e-4], got {tail_tol}")));
    }
    let mean = alpha.norm_sqr();
    if !mean.is_finite() {
        return Err(invalid("coherent amplitude must be finite"));
    }
    let mut coeffs = vec![Complex64::new((-0.5 * mean).exp(), 0.0)];
    let mut kept = coeffs[0].norm_sqr();
    while 1.0 - kept >= tail_tol {
        let n = coeffs.len();
        if n > cap || coeffs[n - 1] == Complex64::new(0.0, 0.0) {
            return Err(Error::Capacity { cap, mean_photons: mean });
        }
        let next = coeffs[n - 1] * alpha / (n as f64).sqrt();
        kept += next.norm_sqr();
        coeffs.push(next);
    }
    ModeCoefficients::new(coeffs)
}

/// Hermite functions `φ_n(x)`, `n = 0..=n_max`, on a set of quadrature points.
#[derive(Debug, Clone)]
pub struct HermiteTable {
    points: Vec<f64>,
    values: Array2<f64>,
}

impl HermiteTable {
    pub fn n_max(&self) -> usize {
        self.values.nrows() - 1
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// `values[[n, i]] = φ_n(points[i])`.
    pub fn values(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }

    pub fn value(&self, n: usize, i: usize) -> f64 {
        self.values[[n, i]]
    }

    /// Table on a uniform grid, skipping the symmetry validation of
    /// [`hermite_basis`].
    pub fn for_grid(n_max: usize, grid: &Grid) -> Self {
        Self::tabulate(n_max, grid.to_vec())
    }

    fn tabulate(n_max: usize, points: Vec<f64>) -> Self {
        let g = points.len();
        let mut values = Array2::<f64>::zeros((n_max + 1, g));
        let norm0 = PI.powf(-0.25);
        for (i, &x) in points.iter().enumerate() {
            let mut prev = 0.0;
            let mut cur = norm0 * (-0.5 * x * x).exp();
            values[[0, i]] = cur;
            for n in 0..n_max {
                let nf = n as f64;
                let next = (2.0 / (nf + 1.0)).sqrt() * x * cur - (nf / (nf + 1.0)).sqrt() * prev;
                prev = cur;
                cur = next;
                values[[n + 1, i]] = cur;
            }
        }
        Self { points, values }
    }

    /// Trapezoid weights of the (possibly non-uniform) table points.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        trapezoid_weights(&self.points)
    }
}

pub(crate) fn trapezoid_weights(points: &[f64]) -> Vec<f64> {
    let g = points.len();
    let mut w = vec![0.0; g];
    for i in 0..g.saturating_sub(1) {
        let h = 0.5 * (points[i + 1] - points[i]);
        w[i] += h;
        w[i + 1] += h;
    }
    w
}

/// Tabulates `φ_n` on `points` with the three-term recurrence
/// `φ_{n+1} = √(2/(n+1)) x φ_n − √(n/(n+1)) φ_{n−1}`, `φ_0 = π^{-1/4} e^{-x²/2}`.
///
/// The points must be strictly increasing and symmetric about zero.
pub fn hermite_basis(n_max: usize, points: &[f64]) -> Result<HermiteTable> {
    if points.is_empty() {
        return Err(invalid("empty quadrature grid"));
    }
    if let Some(i) = points.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(invalid(format!("quadrature grid not strictly increasing at index {i}")));
    }
    let g = points.len();
    let scale = points[g - 1].abs().max(1.0);
    if (0..g).any(|i| (points[i] + points[g - 1 - i]).abs() > 1e-12 * scale) {
        return Err(invalid("quadrature grid must be symmetric about zero"));
    }
    Ok(HermiteTable::tabulate(n_max, points.to_vec()))
}

/// A normalized two-mode pure state in a truncated Fock basis.
#[derive(Debug, Clone, PartialEq)]
pub struct FockState2 {
    coeffs: Array2<Complex64>,
}

impl FockState2 {
    /// Normalizes the coefficient matrix `C[n, m]`.
    pub fn new(coeffs: Array2<Complex64>) -> Result<Self> {
        if coeffs.nrows() == 0 || coeffs.ncols() == 0 {
            return Err(invalid("coefficient matrix must be at least 1x1"));
        }
        let norm = coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(invalid("coefficient matrix must have a finite, nonzero norm"));
        }
        let scale = norm.sqrt().recip();
        Ok(Self { coeffs: coeffs.mapv(|c| c * scale) })
    }

    /// Sparse constructor: `(n, m, amplitude)` triples.
    pub fn from_entries(dims: (usize, usize), entries: &[(usize, usize, Complex64)]) -> Result<Self> {
        let mut c = Array2::zeros(dims);
        for &(n, m, a) in entries {
            if n >= dims.0 || m >= dims.1 {
                return Err(invalid(format!("entry ({n}, {m}) outside dims {dims:?}")));
            }
            c[[n, m]] += a;
        }
        Self::new(c)
    }

    pub fn product(first: &ModeCoefficients, second: &ModeCoefficients) -> Self {
        let (a, b) = (first.coeffs(), second.coeffs());
        let coeffs = Array2::from_shape_fn((a.len(), b.len()), |(n, m)| a[n] * b[m]);
        Self { coeffs }
    }

    pub fn vacuum() -> Self {
        Self { coeffs: Array2::from_elem((1, 1), Complex64::new(1.0, 0.0)) }
    }

    pub fn coeffs(&self) -> ArrayView2<'_, Complex64> {
        self.coeffs.view()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.coeffs.dim()
    }

    /// Largest photon number represented in each mode.
    pub fn cutoffs(&self) -> (usize, usize) {
        let (a, b) = self.dims();
        (a - 1, b - 1)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// `⟨self|other⟩`, zero-padding the smaller truncation.
    pub fn inner(&self, other: &Self) -> Complex64 {
        let (a, b) = self.dims();
        let (c, d) = other.dims();
        let mut acc = Complex64::new(0.0, 0.0);
        for n in 0..a.min(c) {
            for m in 0..b.min(d) {
                acc += self.coeffs[[n, m]].conj() * other.coeffs[[n, m]];
            }
        }
        acc
    }

    /// Photon-number distribution of one mode.
    pub fn populations(&self, mode: Mode) -> Vec<f64> {
        let axis = match mode {
            Mode::First => ndarray::Axis(1),
            Mode::Second => ndarray::Axis(0),
        };
        self.coeffs.mapv(|c| c.norm_sqr()).sum_axis(axis).to_vec()
    }

    pub fn mean_photons(&self, mode: Mode) -> f64 {
        self.populations(mode).iter().enumerate().map(|(n, p)| n as f64 * p).sum()
    }

    /// See [`rotate_modes`].
    pub fn rotated(&self, theta1: f64, theta2: f64) -> Self {
        let (a, b) = self.dims();
        let p1: Vec<Complex64> = (0..a).map(|n| Complex64::from_polar(1.0, -(n as f64) * theta1)).collect();
        let p2: Vec<Complex64> = (0..b).map(|m| Complex64::from_polar(1.0, -(m as f64) * theta2)).collect();
        let coeffs = Array2::from_shape_fn((a, b), |(n, m)| self.coeffs[[n, m]] * p1[n] * p2[m]);
        Self { coeffs }
    }

    /// Factor a product state into its two modes, if it is one.
    pub fn factorize(&self, tol: f64) -> Option<(ModeCoefficients, ModeCoefficients)> {
        let (mut best, mut at) = (0.0, (0, 0));
        for ((n, m), c) in self.coeffs.indexed_iter() {
            if c.norm() > best {
                best = c.norm();
                at = (n, m);
            }
        }
        let pivot = self.coeffs[at];
        let first: Vec<Complex64> = self.coeffs.column(at.1).to_vec();
        let second: Vec<Complex64> = self.coeffs.row(at.0).iter().map(|c| c / pivot).collect();
        let (a, b) = self.dims();
        for n in 0..a {
            for m in 0..b {
                if (first[n] * second[m] - self.coeffs[[n, m]]).norm() > tol {
                    return None;
                }
            }
        }
        Some((ModeCoefficients::new(first).ok()?, ModeCoefficients::new(second).ok()?))
    }

    /// Position wavefunction with no normalization check.
    pub(crate) fn wavefunction_parts(&self, t1: &HermiteTable, t2: &HermiteTable) -> (Array2<f64>, Array2<f64>) {
        let (a, b) = self.dims();
        let phi1 = t1.values.slice(s![..a, ..]);
        let phi2 = t2.values.slice(s![..b, ..]);
        let c_re = self.coeffs.mapv(|c| c.re);
        let c_im = self.coeffs.mapv(|c| c.im);
        let re = phi1.t().dot(&c_re.dot(&phi2));
        let im = phi1.t().dot(&c_im.dot(&phi2));
        (re, im)
    }
}

/// Applies the local phase rotations `C[n, m] → C[n, m] e^{-i n θ1} e^{-i m θ2}`.
///
/// The position wavefunction of the result is the joint wavefunction of the
/// quadratures `r_j = cos θ_j x_j + sin θ_j p_j` of the input.
pub fn rotate_modes(state: &FockState2, theta1: f64, theta2: f64) -> FockState2 {
    state.rotated(theta1, theta2)
}

/// Complex-conjugates the amplitudes of one mode.
///
/// For product states only the selected factor is conjugated, which realizes
/// the partial transposition on that mode. Any other pure state has its whole
/// coefficient matrix conjugated.
pub fn conjugate_mode(state: &FockState2, mode: Mode) -> FockState2 {
    if let Some((first, second)) = state.factorize(1e-12) {
        let conj = |m: &ModeCoefficients| {
            ModeCoefficients { coeffs: m.coeffs().iter().map(|c| c.conj()).collect() }
        };
        match mode {
            Mode::First => FockState2::product(&conj(&first), &second),
            Mode::Second => FockState2::product(&first, &conj(&second)),
        }
    } else {
        FockState2 { coeffs: state.coeffs.mapv(|c| c.conj()) }
    }
}

/// `Ψ(r1, r2) = Σ C[n, m] φ_n(r1) φ_m(r2)` on the product of the table grids.
///
/// Fails with a grid-coverage error when the trapezoid norm of `Ψ` misses 1 by
/// more than 1e-6.
pub fn position_wavefunction(
    state: &FockState2,
    table1: &HermiteTable,
    table2: &HermiteTable,
) -> Result<Array2<Complex64>> {
    let (n1, n2) = state.cutoffs();
    if table1.n_max() < n1 || table2.n_max() < n2 {
        return Err(invalid(format!(
            "Hermite tables up to ({}, {}) do not cover cutoffs ({n1}, {n2})",
            table1.n_max(),
            table2.n_max()
        )));
    }
    let (re, im) = state.wavefunction_parts(table1, table2);
    let (w1, w2) = (table1.trapezoid_weights(), table2.trapezoid_weights());
    let mut norm = 0.0;
    for i in 0..w1.len() {
        for j in 0..w2.len() {
            norm += w1[i] * w2[j] * (re[[i, j]].powi(2) + im[[i, j]].powi(2));
        }
    }
    let defect = (norm - 1.0).abs();
    if defect > 1e-6 {
        return Err(Error::GridCoverage { defect, limit: 1e-6 });
    }
    Ok(Array2::from_shape_fn(re.dim(), |ij| Complex64::new(re[ij], im[ij])))
}

fn standard_complex(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Substream generator: `seed` selects the experiment, `stream` the sample.
pub fn sample_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Haar-random pure state on photon numbers `0..=d` in each mode:
/// `(d + 1)²` independent standard complex normals, normalized.
pub fn random_haar_state(d: usize, seed: u64) -> Result<FockState2> {
    random_haar_state_stream(d, seed, 0)
}

pub fn random_haar_state_stream(d: usize, seed: u64, stream: u64) -> Result<FockState2> {
    if d < 1 {
        return Err(invalid("random states need a cutoff of at least 1"));
    }
    let mut rng = sample_rng(seed, stream);
    let coeffs = Array2::from_shape_simple_fn((d + 1, d + 1), || standard_complex(&mut rng));
    FockState2::new(coeffs)
}

/// Product of two independent Haar-random single-mode states with cutoffs
/// `d1` and `d2`.
pub fn random_product_state(d1: usize, d2: usize, seed: u64, stream: u64) -> Result<FockState2> {
    let mut rng = sample_rng(seed, stream);
    let first = ModeCoefficients::new((0..=d1).map(|_| standard_complex(&mut rng)).collect())?;
    let second = ModeCoefficients::new((0..=d2).map(|_| standard_complex(&mut rng)).collect())?;
    Ok(FockState2::product(&first, &second))
}
