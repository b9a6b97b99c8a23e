use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{Criterion, CriterionReport, Evaluator};
use crate::distributions::{MeasurementSettings, Sign};
use crate::error::{invalid, Error, Result};

/// Which tests to run and over which settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanOptions {
    pub criteria: Vec<Criterion>,
    /// Angle spacing in radians; must divide π.
    pub theta_step: f64,
    /// Local squeezing weights tried for each mode (entropic tests only).
    pub a_values: Vec<f64>,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self { criteria: Criterion::ALL.to_vec(), theta_step: PI / 4.0, a_values: vec![1.0] }
    }
}

impl ScanOptions {
    pub fn new(criteria: &[Criterion]) -> Self {
        Self { criteria: criteria.to_vec(), ..Self::default() }
    }

    pub fn with_theta_step(mut self, step: f64) -> Self {
        self.theta_step = step;
        self
    }

    pub fn with_a_values(mut self, a: &[f64]) -> Self {
        self.a_values = a.to_vec();
        self
    }

    /// Number of angle points per mode in `[0, π)`.
    pub fn angle_count(&self) -> Result<usize> {
        let s = self.theta_step;
        if !(s > 0.0 && s <= PI) {
            return Err(invalid(format!("theta step {s} outside (0, π]")));
        }
        let m = (PI / s).round();
        if (m * s - PI).abs() > 1e-9 * PI {
            return Err(invalid(format!("theta step {s} does not divide π")));
        }
        Ok(m as usize)
    }

    /// The angles `kπ/m` scanned for each mode.
    pub fn angles(&self) -> Result<Vec<f64>> {
        let m = self.angle_count()?;
        Ok((0..m).map(|k| k as f64 * PI / m as f64).collect())
    }
}

/// A scan point whose evaluation failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanFailure {
    pub criterion: Criterion,
    pub settings: Option<MeasurementSettings>,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    /// Largest-margin report per criterion; ties keep the earliest setting.
    pub best: BTreeMap<Criterion, CriterionReport>,
    /// Every successful evaluation, in scan order.
    pub grid: Vec<CriterionReport>,
    pub failures: Vec<ScanFailure>,
}

impl ScanResult {
    /// Whether any setting certified a violation of `criterion`.
    pub fn detected(&self, criterion: Criterion) -> bool {
        self.best.get(&criterion).is_some_and(|r| r.violated)
    }

    pub fn violations(&self, criterion: Criterion) -> impl Iterator<Item = &CriterionReport> {
        self.grid.iter().filter(move |r| r.criterion == criterion && r.violated)
    }

    /// Reports of `criterion` whose margin is within `tol` of the best one.
    pub fn near_best(&self, criterion: Criterion, tol: f64) -> Vec<&CriterionReport> {
        let Some(best) = self.best.get(&criterion) else { return Vec::new() };
        self.grid.iter().filter(|r| r.criterion == criterion && r.margin >= best.margin - tol).collect()
    }

    fn record(&mut self, outcome: Result<CriterionReport>, criterion: Criterion, settings: Option<MeasurementSettings>) {
        match outcome {
            Ok(r) => {
                let better = self.best.get(&criterion).is_none_or(|b| r.margin > b.margin);
                if better {
                    self.best.insert(criterion, r.clone());
                }
                self.grid.push(r);
            }
            Err(e) => {
                log::warn!("{criterion} failed at {settings:?}: {e}");
                self.failures.push(ScanFailure { criterion, settings, error: e.to_string() });
            }
        }
    }
}

impl Evaluator<'_> {
    /// Evaluates the requested tests over `θ1, θ2 ∈ [0, π)` on the step grid,
    /// both sign pairings and every `(a1, a2)` drawn from `a_values`.
    ///
    /// Iteration order is lexicographic in `(θ1, θ2, sign, a1, a2)`. The
    /// variance test is evaluated at `a1 = a2 = 1` only and Simon's test once.
    /// Failures at individual points are recorded and skipped.
    pub fn scan(&mut self, options: &ScanOptions) -> Result<ScanResult> {
        let angles = options.angles()?;
        if options.a_values.is_empty() {
            return Err(invalid("a_values is empty"));
        }
        if let Some(a) = options.a_values.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
            return Err(invalid(format!("squeezing weight {a} is not positive")));
        }
        let wants = |c| options.criteria.contains(&c);
        if wants(Criterion::Strong) && self.state().as_pure().is_none() {
            return Err(Error::UnsupportedState("the strong entropic test applies to pure states only".into()));
        }

        let mut out = ScanResult { best: BTreeMap::new(), grid: Vec::new(), failures: Vec::new() };
        for &t1 in &angles {
            for &t2 in &angles {
                for sign in [Sign::Plus, Sign::Minus] {
                    for &a1 in &options.a_values {
                        for &a2 in &options.a_values {
                            let s = MeasurementSettings { theta1: t1, theta2: t2, a1, a2, sign };
                            for c in [Criterion::Strong, Criterion::Weak] {
                                if wants(c) {
                                    let r = self.evaluate(c, &s);
                                    out.record(r, c, Some(s));
                                }
                            }
                        }
                    }
                    if wants(Criterion::Mgvt) {
                        let s = MeasurementSettings::rotated(t1, t2, sign);
                        let r = self.mgvt(&s);
                        out.record(r, Criterion::Mgvt, Some(s));
                    }
                }
            }
        }
        if wants(Criterion::Simon) {
            let r = self.simon();
            out.record(r, Criterion::Simon, None);
        }
        Ok(out)
    }
}
