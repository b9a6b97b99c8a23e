//! The states analyzed by the toolkit and the containers that hold them.

use ndarray::Array2;
use num_complex::Complex64;

use crate::analytic::{self, AnalyticPureState};
use crate::error::{invalid, Error, Result};
use crate::fock::{coherent_coefficients, FockState2, DEFAULT_FOCK_CAP};

/// A pure two-mode state in either representation.
#[derive(Debug, Clone, PartialEq)]
pub enum PureState {
    Fock(FockState2),
    Analytic(AnalyticPureState),
}

/// Convex mixture `ρ = Σ λ_k |ψ_k⟩⟨ψ_k|`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    members: Vec<(f64, PureState)>,
}

impl Ensemble {
    /// Weights must be nonnegative and sum to one within 1e-12.
    pub fn new(members: Vec<(f64, PureState)>) -> Result<Self> {
        if members.is_empty() {
            return Err(invalid("an ensemble needs at least one member"));
        }
        if let Some((w, _)) = members.iter().find(|(w, _)| !(*w >= 0.0 && w.is_finite())) {
            return Err(invalid(format!("ensemble weight {w} is negative or not finite")));
        }
        let total: f64 = members.iter().map(|(w, _)| w).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(invalid(format!("ensemble weights sum to {total}, not 1")));
        }
        Ok(Self { members })
    }

    pub fn members(&self) -> &[(f64, PureState)] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Any state the criteria accept.
#[derive(Debug, Clone, PartialEq)]
pub enum TwoModeState {
    Pure(PureState),
    Mixed(Ensemble),
}

impl From<FockState2> for TwoModeState {
    fn from(s: FockState2) -> Self {
        TwoModeState::Pure(PureState::Fock(s))
    }
}

impl From<AnalyticPureState> for TwoModeState {
    fn from(s: AnalyticPureState) -> Self {
        TwoModeState::Pure(PureState::Analytic(s))
    }
}

impl From<Ensemble> for TwoModeState {
    fn from(e: Ensemble) -> Self {
        TwoModeState::Mixed(e)
    }
}

impl From<PureState> for TwoModeState {
    fn from(s: PureState) -> Self {
        TwoModeState::Pure(s)
    }
}

impl PureState {
    /// Half-width of the default symmetric grid.
    pub fn default_half_width(&self) -> f64 {
        match self {
            PureState::Fock(s) => {
                let (a, b) = s.cutoffs();
                let n = a.max(b) as f64;
                (4.0 * (2.0 * n + 1.0).sqrt()).max(10.0)
            }
            PureState::Analytic(s) => (10.0 * s.envelope_width()).max(10.0),
        }
    }
}

impl TwoModeState {
    /// The pure state, if this is one (a one-member ensemble counts).
    pub fn as_pure(&self) -> Option<&PureState> {
        match self {
            TwoModeState::Pure(p) => Some(p),
            TwoModeState::Mixed(e) if e.len() == 1 => Some(&e.members()[0].1),
            TwoModeState::Mixed(_) => None,
        }
    }

    /// `max(10, 4√(2N + 1))` for Fock cutoff `N`; ten envelope widths for
    /// analytic states; the widest member for ensembles.
    pub fn default_half_width(&self) -> f64 {
        match self {
            TwoModeState::Pure(p) => p.default_half_width(),
            TwoModeState::Mixed(e) => e.members().iter().map(|(_, p)| p.default_half_width()).fold(0.0, f64::max),
        }
    }
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// See [`analytic::eta`].
pub fn eta_state(sigma_plus: f64, sigma_minus: f64) -> Result<AnalyticPureState> {
    analytic::eta(sigma_plus, sigma_minus)
}

/// `(|N, 0⟩ + |0, N⟩)/√2`.
pub fn noon_state(n: usize) -> Result<FockState2> {
    if n < 1 {
        return Err(invalid("N00N states need N >= 1"));
    }
    if n > DEFAULT_FOCK_CAP {
        return Err(Error::Capacity { cap: DEFAULT_FOCK_CAP, mean_photons: n as f64 / 2.0 });
    }
    let a = c(std::f64::consts::FRAC_1_SQRT_2);
    FockState2::from_entries((n + 1, n + 1), &[(n, 0, a), (0, n, a)])
}

/// `|0,0⟩/√2 + |2,0⟩/2 + |0,2⟩/2`.
pub fn phi_state() -> FockState2 {
    FockState2::from_entries(
        (3, 3),
        &[(0, 0, c(std::f64::consts::FRAC_1_SQRT_2)), (2, 0, c(0.5)), (0, 2, c(0.5))],
    )
    .expect("fixed coefficients")
}

/// Two-mode squeezed vacuum `Σ tanhⁿ r / cosh r |n, n⟩`, truncated where the
/// discarded probability `tanh^{2(N+1)} r` drops below `tail_tol`.
pub fn two_mode_squeezed(r: f64, tail_tol: f64) -> Result<FockState2> {
    if !(r >= 0.0 && r.is_finite()) {
        return Err(invalid(format!("squeezing must be nonnegative, got {r}")));
    }
    if !(tail_tol > 0.0 && tail_tol <= 1e-4) {
        return Err(invalid(format!("tail tolerance must lie in (0, 1e-4], got {tail_tol}")));
    }
    let t = r.tanh();
    let mut cutoff = 0;
    while t.powi(2 * (cutoff as i32 + 1)) >= tail_tol {
        cutoff += 1;
        if cutoff > DEFAULT_FOCK_CAP {
            return Err(Error::Capacity { cap: DEFAULT_FOCK_CAP, mean_photons: r.sinh().powi(2) });
        }
    }
    let coeffs = Array2::from_shape_fn((cutoff + 1, cutoff + 1), |(n, m)| {
        if n == m {
            c(t.powi(n as i32) / r.cosh())
        } else {
            Complex64::default()
        }
    });
    FockState2::new(coeffs)
}

/// The dephased cat state
/// `ρ ∝ |α,α⟩⟨α,α| + |−α,−α⟩⟨−α,−α| − (1−p)(|α,α⟩⟨−α,−α| + h.c.)`
/// diagonalized into its two orthonormal components
/// `|e±⟩ ∝ |α,α⟩ ± |−α,−α⟩` with weights
/// `λ+ = p(1+κ)/Z`, `λ− = (2−p)(1−κ)/Z`, `Z = 2(1 − (1−p)κ)`, `κ = e^{−4α²}`.
/// Components with zero weight are dropped; `α = 0` is the vacuum.
pub fn cat_ensemble(alpha: f64, p: f64, tail_tol: f64) -> Result<Ensemble> {
    if !(0.0..=1.0).contains(&p) {
        return Err(invalid(format!("dephasing parameter must lie in [0, 1], got {p}")));
    }
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(invalid(format!("cat amplitude must be nonnegative, got {alpha}")));
    }
    if alpha == 0.0 {
        return Ensemble::new(vec![(1.0, PureState::Fock(FockState2::vacuum()))]);
    }
    let coh = coherent_coefficients(c(alpha), tail_tol)?;
    let a = coh.coeffs();
    let n = a.len();
    // c_n(−α) = (−1)ⁿ c_n(α): the even/odd total-photon sectors separate.
    let sector = |parity: usize| {
        Array2::from_shape_fn((n, n), |(i, j)| if (i + j) % 2 == parity { a[i] * a[j] * 2.0 } else { Complex64::default() })
    };
    let one_minus_kappa = -(-4.0 * alpha * alpha).exp_m1();
    let kappa = 1.0 - one_minus_kappa;
    let z = 2.0 * (one_minus_kappa + p * kappa);
    let w_even = p * (1.0 + kappa) / z;
    let w_odd = (2.0 - p) * one_minus_kappa / z;
    let mut members = Vec::new();
    for (w, parity) in [(w_even, 0), (w_odd, 1)] {
        if w > 0.0 {
            members.push((w, PureState::Fock(FockState2::new(sector(parity))?)));
        }
    }
    let total: f64 = members.iter().map(|(w, _)| w).sum();
    for m in &mut members {
        m.0 /= total;
    }
    Ensemble::new(members)
}
