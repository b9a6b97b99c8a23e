//! # cvsep-core
//!
//! Separability tests for two-mode continuous-variable states.
//!
//! States are simulated exactly (truncated Fock expansions, closed-form
//! Gaussian-polynomial wavefunctions, or convex mixtures of either), their
//! rotated-quadrature distributions are sampled on uniform grids, and the
//! resulting marginals feed four separability tests:
//!
//! | Test | Statistic | Separable states satisfy |
//! |------|-----------|--------------------------|
//! | strong entropic (pure states) | H[R±] + H[S∓] | ≥ ½ ln Σᵢⱼ exp(2H[Rᵢ] + 2H[Sⱼ] + 2 ln(aᵢ/aⱼ)) |
//! | weak entropic | H[R±] + H[S∓] | ≥ ln 2πe |
//! | MGVT variance product | σ± δ∓ | ≥ 1 |
//! | Simon PPT | covariance-matrix invariant | ≥ ¼ (det A + det B) |
//!
//! Units: ħ = 1, `[x, p] = i`, vacuum quadrature variance ½. Entropies are in
//! nats, angles in radians.
//!
//! ```
//! use cvsep_core::{criteria::Evaluator, states, GridSpec, MeasurementSettings, Sign};
//!
//! let state = states::noon_state(1).unwrap().into();
//! let mut eval = Evaluator::new(&state, GridSpec::with_points(256)).unwrap();
//! let report = eval.strong(&MeasurementSettings::rotated(0.0, 0.0, Sign::Plus)).unwrap();
//! assert!(report.violated);
//! ```

pub mod analytic;
pub mod criteria;
pub mod distributions;
pub mod entropy;
pub mod error;
pub mod experiments;
pub mod fock;
pub mod grid;
pub mod states;

pub use analytic::AnalyticPureState;
pub use criteria::{Criterion, CriterionReport, Evaluator, ScanOptions, ScanResult};
pub use distributions::{
    combo_marginal, joint_density, mode_marginals, GriddedDensity1D, GriddedDensity2D,
    MeasurementSettings, Sign,
};
pub use entropy::{converged_entropy, differential_entropy, variance, EntropyEstimate};
pub use error::{Error, Result};
pub use fock::{FockState2, HermiteTable, Mode, ModeCoefficients};
pub use grid::{Grid, GridSpec};
pub use states::{Ensemble, PureState, TwoModeState};

/// ln 2πe, the state-independent bound of the weak entropic test.
pub const LN_2_PI_E: f64 = 2.837_877_066_409_345_5;

/// ln πe, the single-mode entropic uncertainty bound.
pub const LN_PI_E: f64 = 2.144_729_885_849_4;

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
