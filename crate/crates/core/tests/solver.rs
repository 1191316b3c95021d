use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sigmak_core::cones::{mu_plus, CurvatureFunction};
use sigmak_core::conformal::{eigen_rel, schouten_conformal, ConformalFactor, MetricField};
use sigmak_core::expr::Expr;
use sigmak_core::solver::*;
use sigmak_core::Error;

fn grid(kind: GridKind, intervals: usize, n: usize) -> Arc<RadialGrid> {
    Arc::new(RadialGrid::new(kind, intervals, n).unwrap())
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// `exp(a cos θ + b cos²θ)` as a closure and as an expression in the
/// polar angle `θ`.
fn zonal_profile(a: f64, b: f64, angle: Expr) -> (impl Fn(f64) -> f64, Expr) {
    let c = angle.cos();
    let e = (Expr::c(a) * c.clone() + Expr::c(b) * c.clone() * c).exp();
    (move |t: f64| (a * t.cos() + b * t.cos().powi(2)).exp(), e)
}

fn chart_eigs(g: &MetricField, u: &Expr, x: &[f64]) -> Vec<f64> {
    let f = ConformalFactor::new(g.n, u.clone());
    let a = schouten_conformal(g, &f, x).unwrap();
    let gu = g.metric_at(x).unwrap() * f.value(x).powf(4.0 / (g.n as f64 - 2.0));
    eigen_rel(&a, &gu).unwrap().into_vec()
}

#[test]
fn zonal_eigenvalues_match_general_chart() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..12 {
        let n = 3 + case % 3;
        let a = rng.gen_range(-0.5..0.5);
        let b = rng.gen_range(-0.3..0.3);
        let gr = grid(GridKind::Uniform, 48, n);
        let (u, _) = zonal_profile(a, b, Expr::x(0));
        let profile = RadialProfile::from_fn(gr.clone(), u);
        let polar = MetricField::sphere_polar(n).unwrap();
        let (_, expr) = zonal_profile(a, b, Expr::x(0));
        for j in (1..gr.len() - 1).step_by(7) {
            let mut x = vec![PI / 2.0; n];
            x[0] = gr.theta[j];
            x[n - 1] = 0.3;
            let want = chart_eigs(&polar, &expr, &x);
            let got = radial_schouten_eigs(&profile, j).unwrap().into_vec();
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() < 1e-6, "n={n} j={j}: {got:?} vs {want:?}");
            }
        }
        // the pole, seen from normal coordinates just off the origin
        let normal = MetricField::sphere_normal(n).unwrap();
        let (_, expr) = zonal_profile(a, b, Expr::radius(&vec![0.0; n]));
        let mut x = vec![0.0; n];
        x[0] = 1e-4;
        let want = chart_eigs(&normal, &expr, &x);
        let got = radial_schouten_eigs(&profile, 0).unwrap().into_vec();
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-6, "pole n={n}: {got:?} vs {want:?}");
        }
    }
}

#[test]
fn constant_residuals() {
    for n in [3, 4, 5] {
        let f = CurvatureFunction::sigma_root(n, 2).unwrap();
        let gr = grid(GridKind::Chebyshev, 16, n);
        let smax = 4.0 / (n as f64 - 2.0);
        for s in [0.0, 0.3 * smax, 0.9 * smax] {
            let one = RadialProfile::constant(gr.clone(), 1.0);
            let psi = vec![1.0; gr.len()];
            assert!(max_abs(&residual_fs(&one, &f, s, &psi).unwrap()) < 1e-13);
            let c: f64 = 1.3;
            let r = residual_fs(&RadialProfile::constant(gr.clone(), c), &f, s, &psi).unwrap();
            let want = c.powf(-smax) - c.powf(-s);
            assert!(r.iter().all(|v| (v - want).abs() < 1e-12));
        }
        let psi: Vec<f64> = gr.theta.iter().map(|t| 1.0 + 0.1 * t.cos()).collect();
        let r = residual_fs(&RadialProfile::constant(gr.clone(), 1.0), &f, 1.0, &psi).unwrap();
        for (v, p) in r.iter().zip(&psi) {
            assert!((v - (1.0 - p)).abs() < 1e-13);
        }
    }
}

#[test]
fn infeasible_start_exits_the_cone() {
    let n = 4;
    let f = CurvatureFunction::sigma_root(n, 2).unwrap();
    let gr = grid(GridKind::Uniform, 16, n);
    let p = RadialProblem::new(f, gr.clone()).unwrap();
    let spike: Vec<f64> = gr
        .theta
        .iter()
        .map(|t| 1.0 + 5.0 * (-(t * t) * 20.0).exp())
        .collect();
    let err = p.residual(&Family::Fs { s: 1.0 }, &spike).unwrap_err();
    assert!(matches!(err, Error::ConeExit { .. }), "{err:?}");
    assert!(newton_solve(
        &p,
        &Family::Fs { s: 1.0 },
        &spike,
        &NewtonOptions::default()
    )
    .is_err());
}

#[test]
fn constant_start_needs_no_iterations() {
    for n in [3, 4] {
        for k in 2..=n {
            let f = CurvatureFunction::sigma_root(n, k).unwrap();
            let gr = grid(GridKind::Uniform, 24, n);
            let p = RadialProblem::new(f, gr.clone()).unwrap();
            for s in [0.0, 1.0 / (n as f64 - 2.0), 3.9 / (n as f64 - 2.0)] {
                let out = newton_solve(
                    &p,
                    &Family::Fs { s },
                    &vec![1.0; gr.len()],
                    &NewtonOptions::default(),
                )
                .unwrap();
                assert_eq!(out.iterations, 0);
            }
        }
    }
}

fn perturbed_start_then_continue(n: usize, k: usize, kind: GridKind, intervals: usize) {
    let f = CurvatureFunction::sigma_root(n, k).unwrap();
    assert!(mu_plus(&f.cone).unwrap() <= 1.0 + 1e-9);
    let gr = grid(kind, intervals, n);
    let p = RadialProblem::new(f, gr.clone()).unwrap();
    let opts = NewtonOptions::default();
    let s0 = 2.0 / (n as f64 - 2.0);
    let start = RadialProfile::from_fn(gr.clone(), |t| 1.0 + 0.2 * t.cos());
    let first = ContinuationState::solve(&p, Family::Fs { s: s0 }, &start, &opts).unwrap();
    assert!(first.residual_norm < 1e-10);
    assert!(
        first.profile.values.iter().all(|u| (u - 1.0).abs() < 1e-8),
        "n={n} k={k}"
    );
    let states = newton_continuation(&p, first, &[Schedule::s_path(n, 20)], &opts).unwrap();
    assert_eq!(states.last().unwrap().family, Family::Fs { s: 0.0 });
    for st in &states {
        assert!(st.residual_norm <= opts.tol);
        assert!(st.margins.min_cone_margin.unwrap() > 0.0);
        assert!(st.margins.min_ricci_margin >= 0.0);
        assert!(st.profile.values.iter().all(|u| (u - 1.0).abs() < 1e-8));
    }
}

#[test]
fn newton_basin_and_continuation_three_dimensions() {
    for k in [2, 3] {
        perturbed_start_then_continue(3, k, GridKind::Uniform, 32);
        perturbed_start_then_continue(3, k, GridKind::Chebyshev, 32);
    }
}

#[test]
fn newton_basin_and_continuation_four_dimensions() {
    for k in [2, 3, 4] {
        perturbed_start_then_continue(4, k, GridKind::Uniform, 32);
    }
}

#[test]
fn cone_homotopy_leg_tracks_constant_solutions() {
    let n = 4;
    let f = CurvatureFunction::sigma_root(n, 2).unwrap();
    let gr = grid(GridKind::Uniform, 16, n);
    let p = RadialProblem::new(f, gr.clone()).unwrap();
    let opts = NewtonOptions::default();
    let c0 = Family::Gt { t: 0.0 }.constant_solution(n).unwrap();
    let start = ContinuationState::at(
        &p,
        Family::Gt { t: 0.0 },
        RadialProfile::constant(gr.clone(), c0),
    )
    .unwrap();
    let states =
        newton_continuation(&p, start, &[Schedule::t_path(PathKind::Gt, 10)], &opts).unwrap();
    for st in &states {
        let c = st.family.constant_solution(n).unwrap();
        assert!(st.profile.values.iter().all(|u| (u - c).abs() < 1e-8 * c));
    }
    assert!((states.last().unwrap().profile.values[3] - 1.0).abs() < 1e-8);
}

#[test]
fn semilinear_leg_and_band() {
    let n = 3;
    let f = CurvatureFunction::sigma_root(n, 2).unwrap();
    let gr = grid(GridKind::Uniform, 16, n);
    let p = RadialProblem::new(f, gr.clone()).unwrap();
    let opts = NewtonOptions::default();
    let start = ContinuationState::at(
        &p,
        Family::Ht { t: 0.0 },
        RadialProfile::constant(gr.clone(), 1.0),
    )
    .unwrap();
    assert!(start.residual_norm < 1e-11);
    let states =
        newton_continuation(&p, start, &[Schedule::t_path(PathKind::Ht, 10)], &opts).unwrap();
    let last = states.last().unwrap();
    let c1 = Family::Ht { t: 1.0 }.constant_solution(n).unwrap();
    assert!(last
        .profile
        .values
        .iter()
        .all(|u| (u - c1).abs() < 1e-8 * c1));
    let report = apriori_margins(&states, DEFAULT_MARGIN_FLOOR);
    let (lo, hi) = report.semilinear_band.unwrap();
    assert!(lo > 0.1 && hi < 10.0, "{lo} {hi}");
    assert!(report.min_cone_margin.is_none());
}

#[test]
fn failed_leg_reports_last_good_state() {
    let n = 4;
    let f = CurvatureFunction::sigma_root(n, 2).unwrap();
    let gr = grid(GridKind::Uniform, 16, n);
    let p = RadialProblem::new(f, gr.clone()).unwrap();
    let opts = NewtonOptions {
        max_iter: 0,
        ..Default::default()
    };
    let start = ContinuationState::at(
        &p,
        Family::Fs { s: 1.0 },
        RadialProfile::constant(gr.clone(), 1.0),
    )
    .unwrap();
    // a forcing that the constant no longer solves, with no iterations allowed
    let p = p.with_forcing(|t| 1.0 + 0.1 * t.cos());
    let err = newton_continuation(
        &p,
        start.clone(),
        &[Schedule::uniform(PathKind::Fs, 1.0, 0.5, 2)],
        &opts,
    )
    .unwrap_err();
    assert!(matches!(err.reason, Error::Continuation(_)));
    assert_eq!(err.states.len(), 1);
    assert!(err.last_good.is_some());
    let bad = ContinuationState {
        residual_norm: 1.0,
        ..start
    };
    assert!(newton_continuation(&p, bad, &[], &opts).is_err());
}

#[test]
fn margin_report_on_constant_path_and_spike() {
    let n = 4;
    let f = CurvatureFunction::sigma_root(n, 2).unwrap();
    let gr = grid(GridKind::Uniform, 16, n);
    let p = RadialProblem::new(f, gr.clone()).unwrap();
    let one = ContinuationState::at(
        &p,
        Family::Fs { s: 1.0 },
        RadialProfile::constant(gr.clone(), 1.0),
    )
    .unwrap();
    let r = apriori_margins(&[one.clone(), one.clone()], DEFAULT_MARGIN_FLOOR);
    assert_eq!(r.max_abs_ln_u, 0.0);
    assert!(r.warnings.is_empty());
    assert!(one.margins.is_finite());
    let spiked = RadialProfile::from_fn(gr.clone(), |t| 1e-4 + (-(t * t) * 4.0).exp());
    let mut st = one.clone();
    st.margins = MarginRecord::measure(&p, &Family::Ht { t: 0.5 }, &spiked.values).unwrap();
    st.profile = spiked;
    let r = apriori_margins(&[one, st], DEFAULT_MARGIN_FLOOR);
    assert!(!r.warnings.is_empty());
}

#[test]
fn degree_checkpoints() {
    for n in [3, 4, 5] {
        let gr = grid(GridKind::Uniform, 32, n);
        let one = RadialProfile::constant(gr.clone(), 1.0);
        assert!(max_abs(&ht_residual(&one, 0.0).unwrap()) < 1e-11);
        let spec = linearized_h0_spectrum(&gr, 4).unwrap();
        assert!((spec.eigenvalues[0] + 2.0).abs() < 1e-6);
        assert_eq!(spec.nonpositive_count, 1);
        assert!(spec.lowest_spread < 1e-8);
        assert!((spec.eigenvalues[1] - n as f64).abs() < 1e-6);

        // G₀ against H₁ after rescaling
        let f = CurvatureFunction::sigma_root(n, 2).unwrap();
        let p = RadialProblem::new(f, gr.clone()).unwrap();
        let kappa = h1_rescaling(n);
        let nf = n as f64;
        let u =
            RadialProfile::from_fn(gr.clone(), |t| 1.0 + 0.1 * t.cos() + 0.05 * (2.0 * t).cos());
        let g0 = p.residual(&Family::Gt { t: 0.0 }, &u.values).unwrap();
        let scaled =
            RadialProfile::new(gr.clone(), u.values.iter().map(|v| kappa * v).collect()).unwrap();
        let h1 = ht_residual(&scaled, 1.0).unwrap();
        for ((g, h), v) in g0.iter().zip(&h1).zip(&u.values) {
            let want = 4.0 / (nf - 2.0) * v.powf(-(nf + 2.0) / (nf - 2.0)) * h / kappa;
            assert!((g - want).abs() < 1e-12 * (1.0 + g.abs()), "{g} vs {want}");
        }
    }
}

#[test]
fn chebyshev_spectrum_is_close() {
    let gr = grid(GridKind::Chebyshev, 40, 4);
    let spec = linearized_h0_spectrum(&gr, 3).unwrap();
    assert!(
        (spec.eigenvalues[0] + 2.0).abs() < 1e-6,
        "{:?}",
        spec.eigenvalues
    );
    assert!(
        (spec.eigenvalues[1] - 4.0).abs() < 1e-6,
        "{:?}",
        spec.eigenvalues
    );
}

#[test]
fn manufactured_solution_converges_with_resolution() {
    let n = 4;
    let s = 1.0;
    let f = CurvatureFunction::sigma_root(n, 2).unwrap();
    let exact = |t: f64| (0.3 * t.cos()).exp();
    let d1 = |t: f64| -0.3 * t.sin() * exact(t);
    let d2 = |t: f64| (-0.3 * t.cos() + 0.09 * t.sin().powi(2)) * exact(t);
    let psi = |t: f64| {
        let pole = t == 0.0 || t == PI;
        let (r, q) = zonal_eigenvalues(n, t, pole, exact(t), d1(t), d2(t));
        let mut l = vec![q; n];
        l[0] = r;
        f.eval(&l).unwrap() * exact(t).powf(s)
    };
    let errors: Vec<f64> = [4, 8, 16]
        .iter()
        .map(|&m| {
            let gr = grid(GridKind::Uniform, m, n);
            let p = RadialProblem::new(f, gr.clone()).unwrap().with_forcing(psi);
            let u: Vec<f64> = gr.theta.iter().map(|&t| exact(t)).collect();
            max_abs(&p.residual(&Family::Fs { s }, &u).unwrap())
        })
        .collect();
    assert!(errors[0] / errors[1] >= 4.0, "{errors:?}");
    assert!(
        errors[1] / errors[2] >= 4.0 || errors[2] < 1e-12,
        "{errors:?}"
    );
}

#[test]
fn profile_text_output() {
    let gr = grid(GridKind::Uniform, 4, 3);
    let p = RadialProfile::constant(gr, 2.0);
    let mut buf = Vec::new();
    p.write_text(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), 6);
    assert!(text.lines().nth(1).unwrap().starts_with("0.0"));
}
