//! Closed-form two-mode wavefunctions of the form
//! `(c0 + c·r) exp(-½ rᵀ M r)` with complex symmetric `M` (`Re M > 0`).
//!
//! This family is closed under local quadrature rotations: the fractional
//! Fourier kernel `Σ φ_n(x) φ_n(y) e^{-inθ} ∝ exp(i cot θ (x² + y²)/2 − i x y / sin θ)`
//! maps a Gaussian times a degree-one polynomial to another one, so rotated
//! wavefunctions and their densities stay exact at every angle.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;

use crate::error::{invalid, Result};

/// A normalized pure state `N (c0 + c·r) exp(-½ rᵀ M r)`, defined up to a
/// global phase.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticPureState {
    quad: Matrix2<Complex64>,
    constant: Complex64,
    linear: Vector2<Complex64>,
    scale: f64,
}

fn real_sym_eigen(a: &Matrix2<f64>) -> (f64, f64) {
    let tr = a[(0, 0)] + a[(1, 1)];
    let det = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)];
    let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
    (0.5 * tr - disc, 0.5 * tr + disc)
}

impl AnalyticPureState {
    pub fn new(quad: Matrix2<Complex64>, constant: Complex64, linear: Vector2<Complex64>) -> Result<Self> {
        if (quad[(0, 1)] - quad[(1, 0)]).norm() > 1e-12 * quad.norm().max(1.0) {
            return Err(invalid("Gaussian exponent matrix must be symmetric"));
        }
        let re = quad.map(|z| z.re);
        let (lo, _) = real_sym_eigen(&re);
        if !(lo > 0.0) {
            return Err(invalid("Gaussian exponent must have a positive-definite real part"));
        }
        let mut state = Self { quad, constant, linear, scale: 1.0 };
        let norm = state.unscaled_norm_sqr();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(invalid("polynomial prefactor must be nonzero"));
        }
        state.scale = norm.sqrt().recip();
        Ok(state)
    }

    /// `∫ |c0 + c·r|² exp(-rᵀ Re(M) r) dr = π/√det A (|c0|² + cᵀ (2A)⁻¹ c̄)`.
    fn unscaled_norm_sqr(&self) -> f64 {
        let a = self.quad.map(|z| z.re);
        let det = a.determinant();
        let cov = (a * 2.0).try_inverse().expect("positive-definite");
        let c = &self.linear;
        let mut second = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                second += (c[i] * c[j].conj()).re * cov[(i, j)];
            }
        }
        PI / det.sqrt() * (self.constant.norm_sqr() + second)
    }

    pub fn quad(&self) -> &Matrix2<Complex64> {
        &self.quad
    }

    pub fn linear(&self) -> &Vector2<Complex64> {
        &self.linear
    }

    pub fn constant(&self) -> Complex64 {
        self.constant
    }

    /// Normalization factor applied to the unnormalized form.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn position_wavefunction(&self, r1: f64, r2: f64) -> Complex64 {
        let m = &self.quad;
        let expo = m[(0, 0)] * r1 * r1 + m[(0, 1)] * (2.0 * r1 * r2) + m[(1, 1)] * r2 * r2;
        (self.constant + self.linear[0] * r1 + self.linear[1] * r2) * (-0.5 * expo).exp() * self.scale
    }

    /// Momentum-space wavefunction (the state rotated by π/2 in both modes).
    pub fn momentum_wavefunction(&self, s1: f64, s2: f64) -> Complex64 {
        self.rotated(FRAC_PI_2, FRAC_PI_2).position_wavefunction(s1, s2)
    }

    /// `|Ψ(r1, r2)|²`, evaluated without complex exponentials.
    pub fn density(&self, r1: f64, r2: f64) -> f64 {
        let (a11, a12, a22) = (self.quad[(0, 0)].re, self.quad[(0, 1)].re, self.quad[(1, 1)].re);
        let poly = self.constant + self.linear[0] * r1 + self.linear[1] * r2;
        poly.norm_sqr() * (-(a11 * r1 * r1 + 2.0 * a12 * r1 * r2 + a22 * r2 * r2)).exp() * self.scale * self.scale
    }

    /// The state with mode `j` rotated by `θ_j`, i.e. the joint wavefunction
    /// of `cos θ_j x_j + sin θ_j p_j`. Same convention as
    /// [`crate::fock::rotate_modes`].
    pub fn rotated(&self, theta1: f64, theta2: f64) -> Self {
        let t1 = theta1.rem_euclid(2.0 * PI);
        let t2 = theta2.rem_euclid(2.0 * PI);
        if t1 == 0.0 && t2 == 0.0 {
            return self.clone();
        }
        // Split each angle so that neither step has a vanishing sine.
        let split = |t: f64| if t.cos().abs() > 0.5 { FRAC_PI_2 } else { 0.5 * t };
        let (s1, s2) = (split(t1), split(t2));
        self.kernel_step(s1, s2).kernel_step(t1 - s1, t2 - s2)
    }

    /// One application of the fractional Fourier kernel; both sines must be
    /// bounded away from zero.
    fn kernel_step(&self, theta1: f64, theta2: f64) -> Self {
        let i = Complex64::i();
        let kd = [i / theta1.tan(), i / theta2.tan()];
        let ed = [-i / theta1.sin(), -i / theta2.sin()];
        let k = Matrix2::new(kd[0], Complex64::default(), Complex64::default(), kd[1]);
        let e = Matrix2::new(ed[0], Complex64::default(), Complex64::default(), ed[1]);
        let q_inv = (self.quad - k).try_inverse().expect("Re Q = Re M is positive definite");
        let quad = -(k + e * q_inv * e);
        let quad = (quad + quad.transpose()) * Complex64::new(0.5, 0.0);
        let linear = e * q_inv * self.linear;
        let mut out = Self { quad, constant: self.constant, linear, scale: 1.0 };
        out.scale = out.unscaled_norm_sqr().sqrt().recip();
        out
    }

    /// Largest standard deviation of the Gaussian envelope over a few
    /// rotation angles; used to size default grids.
    pub fn envelope_width(&self) -> f64 {
        [0.0, FRAC_PI_4, FRAC_PI_2, 3.0 * FRAC_PI_4]
            .iter()
            .flat_map(|&a| [(a, a), (a, 0.0)])
            .map(|(a, b)| {
                let r = self.rotated(a, b);
                let (lo, _) = real_sym_eigen(&r.quad.map(|z| z.re));
                (0.5 / lo).sqrt()
            })
            .fold(0.0, f64::max)
    }
}

/// The non-Gaussian state
/// `η(r1, r2) = (r1 + r2)/√(π σ₋ σ₊³) exp(-(r1 + r2)²/4σ₊²) exp(-(r1 − r2)²/4σ₋²)`.
pub fn eta(sigma_plus: f64, sigma_minus: f64) -> Result<AnalyticPureState> {
    if !(sigma_plus > 0.0 && sigma_minus > 0.0 && sigma_plus.is_finite() && sigma_minus.is_finite()) {
        return Err(invalid(format!(
            "eta widths must be positive, got sigma+ = {sigma_plus}, sigma- = {sigma_minus}"
        )));
    }
    let p = 0.25 / (sigma_plus * sigma_plus);
    let m = 0.25 / (sigma_minus * sigma_minus);
    let diag = Complex64::new(2.0 * (p + m), 0.0);
    let off = Complex64::new(2.0 * (p - m), 0.0);
    let one = Complex64::new(1.0, 0.0);
    AnalyticPureState::new(Matrix2::new(diag, off, off, diag), Complex64::default(), Vector2::new(one, one))
}
