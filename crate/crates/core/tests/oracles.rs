//! Checks against independent reference computations.

use std::f64::consts::{FRAC_PI_2, PI};

use cvsep_core::analytic::AnalyticPureState;
use cvsep_core::criteria::{Criterion, Evaluator, ScanOptions};
use cvsep_core::fock::{
    coherent_coefficients, conjugate_mode, random_haar_state_stream, random_product_state, DEFAULT_TAIL_TOL,
};
use cvsep_core::states::{cat_ensemble, eta_state, noon_state};
use cvsep_core::{
    joint_density, mode_marginals, FockState2, Grid, GridSpec, MeasurementSettings, Mode, PureState, Sign,
    TwoModeState, EULER_GAMMA,
};
use nalgebra::{DMatrix, Matrix2, Vector2};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Schmidt entropy `−Σ λ ln λ` of a two-mode coefficient matrix.
fn entanglement_entropy(m: DMatrix<Complex64>) -> f64 {
    let s = m.svd(false, false).singular_values;
    let norm: f64 = s.iter().map(|x| x * x).sum();
    s.iter().map(|x| x * x / norm).filter(|p| *p > 0.0).map(|p| -p * p.ln()).sum()
}

#[test]
fn haar_second_moment() {
    // E|C00|² = 1/9 for nine coefficients.
    let n = 10_000;
    let xs: Vec<f64> =
        (0..n).map(|i| random_haar_state_stream(2, 5, i).unwrap().coeffs()[[0, 0]].norm_sqr()).collect();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let se = (var / n as f64).sqrt();
    assert!((mean - 1.0 / 9.0).abs() < 3.0 * se, "{mean} ± {se}");
}

#[test]
fn haar_entanglement_matches_box_muller_sampler() {
    let n = 2000;
    let mut ours: Vec<f64> = (0..n)
        .map(|i| {
            let s = random_haar_state_stream(2, 9, i).unwrap();
            entanglement_entropy(DMatrix::from_fn(3, 3, |a, b| s.coeffs()[[a, b]]))
        })
        .collect();
    // Independent Gaussian source: Box-Muller on a different generator.
    let mut rng = ChaCha8Rng::seed_from_u64(0xfeed);
    let mut normal = || {
        let (u1, u2): (f64, f64) = (rng.random::<f64>().max(f64::MIN_POSITIVE), rng.random());
        (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
    };
    let mut theirs: Vec<f64> = (0..n)
        .map(|_| entanglement_entropy(DMatrix::from_fn(3, 3, |_, _| Complex64::new(normal(), normal()))))
        .collect();
    ours.sort_by(f64::total_cmp);
    theirs.sort_by(f64::total_cmp);
    // Two-sample Kolmogorov-Smirnov statistic.
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < ours.len() && j < theirs.len() {
        if ours[i] <= theirs[j] {
            i += 1;
        } else {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / n as f64).abs());
    }
    // Critical value at the 0.1% level.
    let crit = 1.95 * (2.0 / n as f64).sqrt();
    assert!(d < crit, "KS statistic {d} >= {crit}");
}

#[test]
fn coherent_marginal_mean() {
    let alpha = 0.8;
    let coh = coherent_coefficients(c(alpha), DEFAULT_TAIL_TOL).unwrap();
    let vac = cvsep_core::ModeCoefficients::new(vec![c(1.0)]).unwrap();
    let st: TwoModeState = FockState2::product(&coh, &vac).into();
    let g = Grid::symmetric(10.0, 512).unwrap();
    for theta in [0.0, 0.4, FRAC_PI_2, 2.0] {
        let (r1, r2) = mode_marginals(&joint_density(&st, theta, 0.3, &g, &g).unwrap());
        let expect = 2f64.sqrt() * alpha * f64::cos(theta);
        assert!((r1.mean() - expect).abs() < 1e-9, "θ={theta}: {} vs {expect}", r1.mean());
        assert!(r2.mean().abs() < 1e-12);
    }
}

#[test]
fn conjugation_reverses_rotation() {
    let g = Grid::symmetric(10.0, 128).unwrap();
    let (t1, t2) = (0.7, -1.1);
    let ent = random_haar_state_stream(2, 3, 0).unwrap();
    let conj = conjugate_mode(&ent, Mode::Second);
    let a = joint_density(&conj.into(), t1, t2, &g, &g).unwrap();
    let b = joint_density(&ent.into(), -t1, -t2, &g, &g).unwrap();
    let diff = (&a.density() - &b.density()).iter().fold(0.0f64, |m, x| m.max(x.abs()));
    assert!(diff < 1e-12, "{diff}");

    // Partial transposition of a product state flips only the chosen angle.
    let prod = random_product_state(2, 3, 4, 0).unwrap();
    let pt = conjugate_mode(&prod, Mode::Second);
    let a = joint_density(&pt.into(), t1, t2, &g, &g).unwrap();
    let b = joint_density(&prod.into(), t1, -t2, &g, &g).unwrap();
    let diff = (&a.density() - &b.density()).iter().fold(0.0f64, |m, x| m.max(x.abs()));
    assert!(diff < 1e-12, "{diff}");
}

#[test]
fn eta_momentum_matches_direct_fourier_transform() {
    let (sp, sm) = (1.3, 0.6);
    let eta = eta_state(sp, sm).unwrap();
    let n = 256;
    let x = Grid::symmetric(9.0, n).unwrap().to_vec();
    let h = x[1] - x[0];
    let psi: Vec<Vec<Complex64>> =
        x.iter().map(|&a| x.iter().map(|&b| eta.position_wavefunction(a, b)).collect()).collect();
    let ps = [-1.7, -0.4, 0.0, 0.9, 2.1];
    // Separable transform: first along x2, then along x1.
    let kernel = |p: f64| x.iter().map(|&xi| Complex64::from_polar(h / (2.0 * PI).sqrt(), -p * xi)).collect::<Vec<_>>();
    let mut max_err: f64 = 0.0;
    let mut phase = None;
    for &p1 in &ps {
        let k1 = kernel(p1);
        for &p2 in &ps {
            let k2 = kernel(p2);
            let inner: Vec<Complex64> = psi.iter().map(|row| row.iter().zip(&k2).map(|(a, k)| a * k).sum()).collect();
            let dft: Complex64 = inner.iter().zip(&k1).map(|(a, k)| a * k).sum();
            let analytic = eta.momentum_wavefunction(p1, p2);
            // Agreement up to one global phase.
            let ph = *phase.get_or_insert_with(|| if analytic.norm() > 1e-8 { dft / analytic } else { c(1.0) });
            max_err = max_err.max((dft - ph * analytic).norm());
        }
    }
    assert!(max_err < 1e-4, "{max_err}");
}

#[test]
fn cat_ensemble_reproduces_density_matrix() {
    for (alpha, p) in [(0.7, 0.0), (1.0, 0.3), (1.2, 1.0)] {
        let ens = cat_ensemble(alpha, p, 1e-12).unwrap();
        let coh = coherent_coefficients(c(alpha), 1e-12).unwrap();
        let a = coh.coeffs();
        let d = a.len();
        let plus = DMatrix::from_fn(d * d, 1, |k, _| a[k / d] * a[k % d]);
        let minus = DMatrix::from_fn(d * d, 1, |k, _| {
            let s = if (k / d + k % d) % 2 == 0 { 1.0 } else { -1.0 };
            a[k / d] * a[k % d] * s
        });
        let mut rho = &plus * plus.adjoint() + &minus * minus.adjoint()
            - (&plus * minus.adjoint() + &minus * plus.adjoint()) * c(1.0 - p);
        let tr: Complex64 = rho.trace();
        rho /= tr;
        let mut rebuilt = DMatrix::<Complex64>::zeros(d * d, d * d);
        let mut weights = Vec::new();
        for (w, member) in ens.members() {
            let PureState::Fock(f) = member else { panic!("cat members are Fock states") };
            let v = DMatrix::from_fn(d * d, 1, |k, _| {
                let (n, m) = (k / d, k % d);
                if n < f.dims().0 && m < f.dims().1 {
                    f.coeffs()[[n, m]]
                } else {
                    c(0.0)
                }
            });
            rebuilt += &v * v.adjoint() * c(*w);
            weights.push(*w);
        }
        let err = (&rho - &rebuilt).iter().fold(0.0f64, |m, z| m.max(z.norm()));
        assert!(err < 1e-10, "α={alpha} p={p}: {err}");
        // Nonzero spectrum of the reference matrix equals the ensemble weights.
        let herm = DMatrix::from_fn(d * d, d * d, |i, j| rho[(i, j)].re);
        let mut eig: Vec<f64> = herm.symmetric_eigenvalues().iter().copied().filter(|e| *e > 1e-9).collect();
        eig.sort_by(f64::total_cmp);
        weights.sort_by(f64::total_cmp);
        assert_eq!(eig.len(), weights.len());
        for (e, w) in eig.iter().zip(&weights) {
            assert!((e - w).abs() < 1e-9);
        }
    }
}

#[test]
fn analytic_and_fock_noon_one_agree() {
    let analytic = AnalyticPureState::new(Matrix2::identity().map(c), c(0.0), Vector2::new(c(1.0), c(1.0))).unwrap();
    let fock: TwoModeState = noon_state(1).unwrap().into();
    let analytic: TwoModeState = analytic.into();
    let g = Grid::symmetric(8.0, 96).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..6 {
        let (t1, t2) = (rng.random_range(-PI..PI), rng.random_range(-PI..PI));
        let a = joint_density(&analytic, t1, t2, &g, &g).unwrap();
        let b = joint_density(&fock, t1, t2, &g, &g).unwrap();
        let diff = (&a.density() - &b.density()).iter().fold(0.0f64, |m, x| m.max(x.abs()));
        assert!(diff < 1e-10, "({t1}, {t2}): {diff}");
    }
}

#[test]
fn eta_sandwich_gap_is_constant() {
    // ln(2πe σδ) − H sum = ln(√3 e^{1−γ} / 2) for the (R+, S−) pairing.
    let expect = (3f64.sqrt() * (1.0 - EULER_GAMMA).exp() / 2.0).ln();
    for ratio in [0.5, 1.0, 1.5] {
        let st: TwoModeState = eta_state(1.0 / f64::sqrt(ratio), ratio.sqrt()).unwrap().into();
        let mut ev = Evaluator::new(&st, GridSpec::default()).unwrap();
        let s = MeasurementSettings::rotated(0.0, 0.0, Sign::Plus);
        let w = ev.weak(&s).unwrap();
        let m = ev.mgvt(&s).unwrap();
        let gap = cvsep_core::LN_2_PI_E + m.lhs.ln() - w.lhs;
        assert!((gap - expect).abs() < 1e-4, "ratio {ratio}: {gap} vs {expect}");
        assert_eq!(w.sandwich_ok, Some(true));
    }
    let noon: TwoModeState = noon_state(3).unwrap().into();
    let w = Evaluator::new(&noon, GridSpec::default()).unwrap().weak(&MeasurementSettings::rotated(0.0, 0.0, Sign::Plus)).unwrap();
    assert_eq!(w.sandwich_ok, Some(true));
}

#[test]
fn scans_respect_test_hierarchy() {
    // Weak violation implies strong violation; variance violation implies weak.
    for i in 0..12 {
        let st: TwoModeState = random_haar_state_stream(1 + i as usize % 3, 21, i).unwrap().into();
        let mut ev = Evaluator::new(&st, GridSpec::with_points(256)).unwrap();
        let scan = ev.scan(&ScanOptions::new(&[Criterion::Strong, Criterion::Weak, Criterion::Mgvt])).unwrap();
        let find = |c: Criterion, s: &MeasurementSettings| {
            scan.grid.iter().find(|r| r.criterion == c && r.settings.as_ref() == Some(s)).unwrap()
        };
        for r in &scan.grid {
            let s = r.settings.unwrap();
            match r.criterion {
                Criterion::Weak if r.violated => assert!(find(Criterion::Strong, &s).violated),
                Criterion::Mgvt if r.violated => assert!(find(Criterion::Weak, &s).violated),
                _ => {}
            }
            assert!(r.certified());
        }
    }
}

#[test]
fn noon_two_is_caught_at_the_reported_angles() {
    let st: TwoModeState = noon_state(2).unwrap().into();
    let mut ev = Evaluator::new(&st, GridSpec::with_points(512)).unwrap();
    let scan = ev.scan(&ScanOptions::new(&[Criterion::Strong])).unwrap();
    let hit = scan.violations(Criterion::Strong).any(|r| {
        let s = r.settings.unwrap();
        s.theta1 == 0.0 && (s.theta2 - FRAC_PI_2).abs() < 1e-12
    });
    assert!(hit);
}

#[test]
fn separable_vacuum_is_clean_under_squeezing() {
    let st: TwoModeState = FockState2::vacuum().into();
    let mut ev = Evaluator::new(&st, GridSpec::with_points(256)).unwrap();
    let scan = ev.scan(&ScanOptions::default().with_a_values(&[0.5, 1.0, 2.0])).unwrap();
    assert!(scan.failures.is_empty());
    assert!(scan.grid.iter().all(|r| !r.violated));
}
