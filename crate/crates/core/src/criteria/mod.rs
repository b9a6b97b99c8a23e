//! The separability tests.
//!
//! All four tests go through an [`Evaluator`], which owns the grid layout for
//! one state and caches joint densities and marginal statistics across
//! settings. The free functions are one-shot conveniences on the default
//! grid.

mod scan;
mod simon;

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::rc::Rc;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::distributions::{combo_marginal, joint_density, mode_marginals, GriddedDensity2D, MeasurementSettings, Sign};
use crate::entropy::{converge, differential_entropy, variance, EntropyEstimate};
use crate::error::{invalid, Error, Result};
use crate::fock::Mode;
use crate::grid::{Grid, GridSpec, MAX_POINTS};
use crate::states::TwoModeState;
use crate::{LN_2_PI_E, LN_PI_E};

pub use scan::{ScanFailure, ScanOptions, ScanResult};
pub use simon::{simon_invariant, symplectic_eigenvalues};

/// Margins within this band of zero never count as violations.
pub const DEAD_BAND: f64 = 1e-6;

/// Slack allowed in the variance and uncertainty bounds on entropy sums.
pub const BOUND_TOL: f64 = 1e-4;

/// Joint densities at or below this resolution stay cached.
const JOINT_CACHE_POINTS: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Strong,
    Weak,
    Mgvt,
    Simon,
}

impl Criterion {
    pub const ALL: [Criterion; 4] = [Criterion::Strong, Criterion::Weak, Criterion::Mgvt, Criterion::Simon];

    pub fn name(self) -> &'static str {
        match self {
            Criterion::Strong => "strong",
            Criterion::Weak => "weak",
            Criterion::Mgvt => "mgvt",
            Criterion::Simon => "simon",
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Criterion::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| invalid(format!("unknown criterion `{s}` (expected strong, weak, mgvt or simon)")))
    }
}

/// Outcome of one test at one setting.
///
/// `margin = rhs − lhs`; the state is certified entangled iff
/// `margin > DEAD_BAND`. Entropic verdicts of "violated" are only issued after
/// every entropy involved has converged under grid doubling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub criterion: Criterion,
    pub settings: Option<MeasurementSettings>,
    pub lhs: f64,
    pub rhs: f64,
    pub violated: bool,
    pub margin: f64,
    pub entropies: BTreeMap<String, EntropyEstimate>,
    pub variances: BTreeMap<String, f64>,
    /// Result of [`sandwich_check`] for entropic tests.
    pub sandwich_ok: Option<bool>,
}

impl CriterionReport {
    /// False only for a violation whose entropies did not all converge.
    pub fn certified(&self) -> bool {
        !self.violated || self.entropies.values().all(EntropyEstimate::converged)
    }

    fn new(criterion: Criterion, settings: Option<MeasurementSettings>, lhs: f64, rhs: f64) -> Self {
        let margin = rhs - lhs;
        Self {
            criterion,
            settings,
            lhs,
            rhs,
            violated: margin > DEAD_BAND,
            margin,
            entropies: BTreeMap::new(),
            variances: BTreeMap::new(),
            sandwich_ok: None,
        }
    }
}

/// `ln(2πe σδ) ≥ H[R] + H[S] − 1e−4`, where `σ², δ²` are the variances of the
/// two distributions whose entropies sum to `entropy_sum`.
pub fn sandwich_check(entropy_sum: f64, var_r: f64, var_s: f64) -> bool {
    LN_2_PI_E + 0.5 * (var_r * var_s).ln() >= entropy_sum - BOUND_TOL
}

/// Angle reduced to `[0, π)`; `flipped` records whether the quadrature was
/// negated in the reduction.
#[derive(Debug, Clone, Copy)]
struct Canon {
    key: u64,
    angle: f64,
    flipped: bool,
}

const ANGLE_KEY_SCALE: f64 = 4_294_967_296.0;

fn canonical(theta: f64) -> Canon {
    let t = theta.rem_euclid(2.0 * PI);
    let (mut angle, mut flipped) = if t >= PI { (t - PI, true) } else { (t, false) };
    let mut key = (angle / PI * ANGLE_KEY_SCALE).round() as u64;
    if key >= ANGLE_KEY_SCALE as u64 {
        key = 0;
        angle = 0.0;
        flipped = !flipped;
    }
    Canon { key, angle, flipped }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Kind {
    Mode(Mode),
    Combo { a1: u64, a2: u64, plus: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct StatKey {
    points: usize,
    t1: u64,
    t2: u64,
    kind: Kind,
}

type JointKey = (usize, u64, u64);

/// A marginal of the joint distribution at `(theta1, theta2)`.
#[derive(Debug, Clone, Copy)]
struct Quantity {
    theta1: f64,
    theta2: f64,
    kind: QuantityKind,
}

#[derive(Debug, Clone, Copy)]
enum QuantityKind {
    Mode(Mode),
    Combo { a1: f64, a2: f64, sign: Sign },
}

impl Quantity {
    fn mode(theta1: f64, theta2: f64, mode: Mode) -> Self {
        Self { theta1, theta2, kind: QuantityKind::Mode(mode) }
    }

    fn combo(theta1: f64, theta2: f64, a1: f64, a2: f64, sign: Sign) -> Self {
        Self { theta1, theta2, kind: QuantityKind::Combo { a1, a2, sign } }
    }

    /// `r' = a1 r1 ± a2 r2` and its partner `s' = s1/a1 ∓ s2/a2`.
    fn global_pair(s: &MeasurementSettings) -> (Self, Self) {
        let (c1, c2) = s.conjugate_angles();
        (
            Self::combo(s.theta1, s.theta2, s.a1, s.a2, s.sign),
            Self::combo(c1, c2, 1.0 / s.a1, 1.0 / s.a2, s.sign.opposite()),
        )
    }
}

#[derive(Debug, Clone, Copy)]
struct Stats {
    entropy: f64,
    variance: f64,
}

/// Evaluates the tests for one state on a fixed grid layout.
///
/// Joint densities are cached per canonical angle pair; since quadratures at
/// `θ + π` are reflections of those at `θ`, a π/4 scan needs 16 joints no
/// matter how many sign pairings and squeezing weights are tried.
pub struct Evaluator<'s> {
    state: &'s TwoModeState,
    points: usize,
    half_width: f64,
    joints: HashMap<JointKey, Rc<GriddedDensity2D>>,
    spill: Option<(JointKey, Rc<GriddedDensity2D>)>,
    stats: HashMap<StatKey, Stats>,
}

impl<'s> Evaluator<'s> {
    pub fn new(state: &'s TwoModeState, spec: GridSpec) -> Result<Self> {
        if spec.points < 16 || spec.points > MAX_POINTS {
            return Err(invalid(format!("grid points {} outside [16, {MAX_POINTS}]", spec.points)));
        }
        let half_width = spec.half_width.unwrap_or_else(|| state.default_half_width());
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(invalid(format!("grid half-width must be positive, got {half_width}")));
        }
        Ok(Self {
            state,
            points: spec.points,
            half_width,
            joints: HashMap::new(),
            spill: None,
            stats: HashMap::new(),
        })
    }

    pub fn state(&self) -> &TwoModeState {
        self.state
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn grid(&self, points: usize) -> Grid {
        Grid::symmetric(self.half_width, points).expect("validated grid layout")
    }

    fn joint(&mut self, points: usize, c1: Canon, c2: Canon) -> Result<Rc<GriddedDensity2D>> {
        let key = (points, c1.key, c2.key);
        if let Some(j) = self.joints.get(&key) {
            return Ok(Rc::clone(j));
        }
        if let Some((k, j)) = &self.spill {
            if *k == key {
                return Ok(Rc::clone(j));
            }
        }
        let g = self.grid(points);
        let j = Rc::new(joint_density(self.state, c1.angle, c2.angle, &g, &g)?);
        if points <= JOINT_CACHE_POINTS.max(self.points) {
            self.joints.insert(key, Rc::clone(&j));
        } else {
            self.spill = Some((key, Rc::clone(&j)));
        }
        Ok(j)
    }

    fn stats(&mut self, points: usize, q: &Quantity) -> Result<Stats> {
        let c1 = canonical(q.theta1);
        let c2 = canonical(q.theta2);
        // Reflecting one quadrature flips the sign pairing of the combination.
        let reflect = c1.flipped != c2.flipped;
        let kind = match q.kind {
            QuantityKind::Mode(m) => Kind::Mode(m),
            QuantityKind::Combo { a1, a2, sign } => {
                let sign = if reflect { sign.opposite() } else { sign };
                Kind::Combo { a1: a1.to_bits(), a2: a2.to_bits(), plus: sign == Sign::Plus }
            }
        };
        let key = StatKey { points, t1: c1.key, t2: c2.key, kind };
        if let Some(s) = self.stats.get(&key) {
            return Ok(*s);
        }
        let joint = self.joint(points, c1, c2)?;
        let density = match kind {
            Kind::Mode(m) => {
                let (r1, r2) = mode_marginals(&joint);
                match m {
                    Mode::First => r1,
                    Mode::Second => r2,
                }
            }
            Kind::Combo { a1, a2, plus } => combo_marginal(
                &joint,
                f64::from_bits(a1),
                f64::from_bits(a2),
                if plus { Sign::Plus } else { Sign::Minus },
            )?,
        };
        let s = Stats { entropy: differential_entropy(&density)?.value, variance: variance(&density) };
        self.stats.insert(key, s);
        Ok(s)
    }

    /// Entropy at the base resolution, or, with `certify`, converged under
    /// grid doubling starting from half the base resolution.
    fn entropy(&mut self, q: &Quantity, certify: bool) -> Result<EntropyEstimate> {
        if certify {
            let start = self.points / 2;
            converge(|n| Ok(self.stats(n, q)?.entropy), start, MAX_POINTS)
        } else {
            let s = self.stats(self.points, q)?;
            Ok(EntropyEstimate { value: s.entropy, grid_points: self.points, refinement_delta: None })
        }
    }

    fn variance(&mut self, q: &Quantity) -> Result<f64> {
        Ok(self.stats(self.points, q)?.variance)
    }

    /// Checks the single-mode uncertainty bound on every conjugate pair in
    /// `pairs`.
    fn check_uncertainty(&self, entropies: &BTreeMap<String, EntropyEstimate>, pairs: &[(&str, &str)]) -> Result<()> {
        for (r, s) in pairs {
            let sum = entropies[*r].value + entropies[*s].value;
            if sum < LN_PI_E - BOUND_TOL {
                return Err(Error::NumericalConsistency(format!(
                    "{r} + {s} = {sum} breaks the single-mode uncertainty bound ln(πe)"
                )));
            }
        }
        Ok(())
    }

    fn entropic(&mut self, criterion: Criterion, s: &MeasurementSettings) -> Result<CriterionReport> {
        let s = MeasurementSettings::new(s.theta1, s.theta2, s.a1, s.a2, s.sign)?;
        if criterion == Criterion::Strong && self.state.as_pure().is_none() {
            return Err(Error::UnsupportedState(
                "the strong entropic test applies to pure states only".into(),
            ));
        }
        let (r, sq) = Quantity::global_pair(&s);
        let (c1, c2) = s.conjugate_angles();
        let r_name = format!("H[R{}]", s.sign.symbol());
        let s_name = format!("H[S{}]", s.sign.opposite().symbol());
        let mut named = vec![(r_name.clone(), r), (s_name.clone(), sq)];
        if criterion == Criterion::Strong {
            named.extend([
                ("H[R1]".to_string(), Quantity::mode(s.theta1, s.theta2, Mode::First)),
                ("H[R2]".to_string(), Quantity::mode(s.theta1, s.theta2, Mode::Second)),
                ("H[S1]".to_string(), Quantity::mode(c1, c2, Mode::First)),
                ("H[S2]".to_string(), Quantity::mode(c1, c2, Mode::Second)),
            ]);
        }

        let mut certify = false;
        loop {
            let mut entropies = BTreeMap::new();
            for (name, q) in &named {
                entropies.insert(name.clone(), self.entropy(q, certify)?);
            }
            let lhs = entropies[&r_name].value + entropies[&s_name].value;
            let rhs = match criterion {
                Criterion::Strong => {
                    let h = |k: &str| entropies[k].value;
                    let a = [s.a1, s.a2];
                    let hr = [h("H[R1]"), h("H[R2]")];
                    let hs = [h("H[S1]"), h("H[S2]")];
                    strong_bound(&hr, &hs, &a)
                }
                _ => LN_2_PI_E,
            };
            let mut report = CriterionReport::new(criterion, Some(s), lhs, rhs);
            if report.violated && !certify {
                certify = true;
                continue;
            }
            let var_r = self.variance(&r)?;
            let var_s = self.variance(&sq)?;
            report.variances.insert(format!("Var[R{}]", s.sign.symbol()), var_r);
            report.variances.insert(format!("Var[S{}]", s.sign.opposite().symbol()), var_s);
            report.sandwich_ok = Some(sandwich_check(lhs, var_r, var_s));
            if criterion == Criterion::Strong {
                self.check_uncertainty(&entropies, &[("H[R1]", "H[S1]"), ("H[R2]", "H[S2]")])?;
            }
            report.entropies = entropies;
            return Ok(report);
        }
    }

    /// Strong (pure-state) entropic test at the given settings.
    pub fn strong(&mut self, s: &MeasurementSettings) -> Result<CriterionReport> {
        self.entropic(Criterion::Strong, s)
    }

    /// Weak entropic test `H[R±'] + H[S∓'] ≥ ln 2πe`.
    pub fn weak(&mut self, s: &MeasurementSettings) -> Result<CriterionReport> {
        self.entropic(Criterion::Weak, s)
    }

    /// Variance-product test `σ± δ∓ ≥ 1` with `σ², δ²` the variances of the
    /// global combinations.
    pub fn mgvt(&mut self, s: &MeasurementSettings) -> Result<CriterionReport> {
        let s = MeasurementSettings::new(s.theta1, s.theta2, s.a1, s.a2, s.sign)?;
        let (r, sq) = Quantity::global_pair(&s);
        let var_r = self.variance(&r)?;
        let var_s = self.variance(&sq)?;
        let mut report = CriterionReport::new(Criterion::Mgvt, Some(s), (var_r * var_s).sqrt(), 1.0);
        report.variances.insert(format!("Var[R{}]", s.sign.symbol()), var_r);
        report.variances.insert(format!("Var[S{}]", s.sign.opposite().symbol()), var_s);
        Ok(report)
    }

    /// Simon's PPT test on the covariance matrix reconstructed from rotated
    /// quadrature variances.
    pub fn simon(&mut self) -> Result<CriterionReport> {
        let v = self.covariance_matrix()?;
        let (lhs, rhs) = simon_invariant(&v);
        let mut report = CriterionReport::new(Criterion::Simon, None, lhs, rhs);
        const LABELS: [&str; 4] = ["x1", "p1", "x2", "p2"];
        for i in 0..4 {
            for j in i..4 {
                report.variances.insert(format!("cov[{},{}]", LABELS[i], LABELS[j]), v[(i, j)]);
            }
        }
        Ok(report)
    }

    /// Symmetrized covariance matrix of `(x1, p1, x2, p2)`.
    ///
    /// Local blocks come from variances at 0, π/2 and π/4; cross terms from
    /// `Cov(q1, q2) = (Var(q1 + q2) − Var(q1 − q2)) / 4` at angle pairs in
    /// `{0, π/2}²`. Fails if the result violates the uncertainty principle.
    pub fn covariance_matrix(&mut self) -> Result<nalgebra::Matrix4<f64>> {
        let q = FRAC_PI_2;
        let d = std::f64::consts::FRAC_PI_4;
        let mut v = nalgebra::Matrix4::zeros();
        for (m, off) in [(Mode::First, 0), (Mode::Second, 2)] {
            let vx = self.variance(&Quantity::mode(0.0, 0.0, m))?;
            let vp = self.variance(&Quantity::mode(q, q, m))?;
            let vd = self.variance(&Quantity::mode(d, d, m))?;
            v[(off, off)] = vx;
            v[(off + 1, off + 1)] = vp;
            let c = vd - 0.5 * (vx + vp);
            v[(off, off + 1)] = c;
            v[(off + 1, off)] = c;
        }
        for (i, t1) in [0.0, q].into_iter().enumerate() {
            for (j, t2) in [0.0, q].into_iter().enumerate() {
                let plus = self.variance(&Quantity::combo(t1, t2, 1.0, 1.0, Sign::Plus))?;
                let minus = self.variance(&Quantity::combo(t1, t2, 1.0, 1.0, Sign::Minus))?;
                let c = 0.25 * (plus - minus);
                v[(i, 2 + j)] = c;
                v[(2 + j, i)] = c;
            }
        }
        let (nu_minus, _) = symplectic_eigenvalues(&v);
        if !(nu_minus >= 0.5 - DEAD_BAND) {
            return Err(Error::NumericalConsistency(format!(
                "reconstructed covariance matrix is unphysical: smallest symplectic eigenvalue {nu_minus}"
            )));
        }
        Ok(v)
    }

    pub fn evaluate(&mut self, criterion: Criterion, s: &MeasurementSettings) -> Result<CriterionReport> {
        match criterion {
            Criterion::Strong => self.strong(s),
            Criterion::Weak => self.weak(s),
            Criterion::Mgvt => self.mgvt(s),
            Criterion::Simon => self.simon(),
        }
    }
}

/// `½ ln Σᵢⱼ exp(2H[Rᵢ] + 2H[Sⱼ] + 2 ln(aᵢ/aⱼ))`.
fn strong_bound(hr: &[f64; 2], hs: &[f64; 2], a: &[f64; 2]) -> f64 {
    let terms: Vec<f64> = (0..2)
        .flat_map(|i| (0..2).map(move |j| 2.0 * hr[i] + 2.0 * hs[j] + 2.0 * (a[i] / a[j]).ln()))
        .collect();
    let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    0.5 * (m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln())
}

fn default_evaluator(state: &TwoModeState) -> Result<Evaluator<'_>> {
    Evaluator::new(state, GridSpec::default())
}

/// [`Evaluator::weak`] on the default grid.
pub fn weak_entropic_test(state: &TwoModeState, settings: &MeasurementSettings) -> Result<CriterionReport> {
    default_evaluator(state)?.weak(settings)
}

/// [`Evaluator::strong`] on the default grid.
pub fn strong_entropic_test(state: &TwoModeState, settings: &MeasurementSettings) -> Result<CriterionReport> {
    default_evaluator(state)?.strong(settings)
}

/// [`Evaluator::mgvt`] on the default grid.
pub fn mgvt_test(state: &TwoModeState, settings: &MeasurementSettings) -> Result<CriterionReport> {
    default_evaluator(state)?.mgvt(settings)
}

/// [`Evaluator::simon`] on the default grid.
pub fn simon_ppt_test(state: &TwoModeState) -> Result<CriterionReport> {
    default_evaluator(state)?.simon()
}

/// [`Evaluator::scan`] on the default grid.
pub fn scan_settings(state: &TwoModeState, options: &ScanOptions) -> Result<ScanResult> {
    default_evaluator(state)?.scan(options)
}
