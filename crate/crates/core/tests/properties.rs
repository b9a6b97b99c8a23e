//! Property tests for the distribution and entropy machinery.

use cvsep_core::fock::{random_haar_state_stream, random_product_state};
use cvsep_core::{
    combo_marginal, differential_entropy, joint_density, mode_marginals, variance, Ensemble, Grid, GridSpec,
    GriddedDensity1D, MeasurementSettings, PureState, Sign, TwoModeState,
};
use cvsep_core::criteria::Evaluator;
use proptest::prelude::*;

fn grid() -> Grid {
    Grid::symmetric(12.0, 256).unwrap()
}

fn entropy(d: &GriddedDensity1D) -> f64 {
    differential_entropy(d).unwrap().value
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Rotations are unitary.
    #[test]
    fn rotation_preserves_norm(d in 1usize..5, seed in any::<u64>(), t1 in -7.0f64..7.0, t2 in -7.0f64..7.0) {
        let s = random_haar_state_stream(d, seed, 0).unwrap();
        prop_assert!((s.rotated(t1, t2).norm_sqr() - 1.0).abs() < 1e-12);
        let back = s.rotated(t1, t2).rotated(-t1, -t2);
        prop_assert!((back.inner(&s).norm() - 1.0).abs() < 1e-12);
    }

    /// For independent modes the distribution of r1 + r2 is the convolution
    /// of the single-mode marginals, so the entropy power inequality holds.
    #[test]
    fn product_states_obey_entropy_power(d1 in 0usize..4, d2 in 0usize..4, seed in any::<u64>(),
                                         t1 in 0.0f64..3.14, t2 in 0.0f64..3.14, minus in any::<bool>()) {
        let st: TwoModeState = random_product_state(d1, d2, seed, 1).unwrap().into();
        let g = grid();
        let j = joint_density(&st, t1, t2, &g, &g).unwrap();
        let (r1, r2) = mode_marginals(&j);
        let sign = if minus { Sign::Minus } else { Sign::Plus };
        let sum = combo_marginal(&j, 1.0, 1.0, sign).unwrap();
        let lhs = (2.0 * entropy(&sum)).exp();
        let rhs = (2.0 * entropy(&r1)).exp() + (2.0 * entropy(&r2)).exp();
        prop_assert!(lhs >= rhs * (1.0 - 1e-6), "{lhs} < {rhs}");
        // Explicit convolution on the shared step.
        let other = if minus { r2.reflected() } else { r2.clone() };
        let h = g.step();
        let n = g.len();
        let conv: Vec<f64> = (0..2 * n - 1).map(|k| {
            let lo = k.saturating_sub(n - 1);
            let hi = k.min(n - 1);
            (lo..=hi).map(|i| r1.density()[i] * other.density()[k - i]).sum::<f64>() * h
        }).collect();
        let err = conv.iter().zip(sum.density()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        prop_assert!(err < 1e-6, "convolution mismatch {err}");
    }

    /// Entropy is invariant under x → −x and shifts by ln a under x → a x.
    #[test]
    fn reflection_and_scaling(d in 1usize..4, seed in any::<u64>(), t in 0.0f64..3.14, a in 0.3f64..3.0) {
        let st: TwoModeState = random_haar_state_stream(d, seed, 2).unwrap().into();
        let g = grid();
        let j = joint_density(&st, t, 0.5, &g, &g).unwrap();
        let r = combo_marginal(&j, 1.0, 1.0, Sign::Plus).unwrap();
        prop_assert!((entropy(&r) - entropy(&r.reflected())).abs() < 1e-12);
        let scaled = combo_marginal(&j, a, a, Sign::Plus).unwrap();
        prop_assert!((entropy(&scaled) - entropy(&r) - a.ln()).abs() < 1e-9);
        prop_assert!((variance(&scaled) - a * a * variance(&r)).abs() < 1e-9 * a * a);
    }

    /// Entropy of a mixture is at least the weighted mean of the entropies.
    #[test]
    fn mixture_entropy_is_concave(seed in any::<u64>(), w in 0.05f64..0.95, t in 0.0f64..3.14) {
        let a = PureState::Fock(random_haar_state_stream(2, seed, 3).unwrap());
        let b = PureState::Fock(random_haar_state_stream(2, seed, 4).unwrap());
        let g = grid();
        let h = |st: TwoModeState| {
            let j = joint_density(&st, t, t, &g, &g).unwrap();
            entropy(&combo_marginal(&j, 1.0, 1.0, Sign::Minus).unwrap())
        };
        let mixed = h(Ensemble::new(vec![(w, a.clone()), (1.0 - w, b.clone())]).unwrap().into());
        let avg = w * h(a.into()) + (1.0 - w) * h(b.into());
        prop_assert!(mixed >= avg - 1e-9, "{mixed} < {avg}");
    }

    /// Equal local squeezing leaves the weak-test statistic unchanged.
    #[test]
    fn equal_squeezing_invariance(seed in any::<u64>(), t1 in 0.0f64..3.14, t2 in 0.0f64..3.14, a in 0.3f64..3.0) {
        let st: TwoModeState = random_haar_state_stream(2, seed, 5).unwrap().into();
        let mut ev = Evaluator::new(&st, GridSpec::with_points(128)).unwrap();
        let base = ev.weak(&MeasurementSettings::rotated(t1, t2, Sign::Plus)).unwrap();
        let sq = ev.weak(&MeasurementSettings::new(t1, t2, a, a, Sign::Plus).unwrap()).unwrap();
        prop_assert!((base.lhs - sq.lhs).abs() < 1e-9);
    }
}
