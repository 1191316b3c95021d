use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sigmak_core::barriers::{
    barrier_sweep_sub, barrier_sweep_super, chi_coefficients_sub, chi_coefficients_super,
    gershgorin_pairing, radial_chi, subsolution_eval, subsolution_jet, super_chi_gap,
    supersolution_eval, supersolution_jet, suph_barrier_check, suph_comparison, Background,
    BarrierSweepConfig, RadialTest, SuperParams,
};
use sigmak_core::cones::ConeSpec;
use sigmak_core::conformal::MetricField;
use sigmak_core::Error;

fn random_symmetric(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-scale..scale));
    (&a + a.transpose()) * 0.5
}

#[test]
fn pairing_bound_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in 2..=6 {
        for _ in 0..200 {
            let m = random_symmetric(&mut rng, n, 2.0);
            let eps = 10f64.powf(rng.gen_range(-6.0..0.0));
            let mt = &m + random_symmetric(&mut rng, n, eps);
            let p = gershgorin_pairing(&m, &mt).unwrap();
            assert!(p.within_bound, "{p:?}");
            assert!(p.total_deviation <= p.row_sum_bound * (1.0 + 1e-10) + 1e-14);
        }
    }
}

#[test]
fn pairing_rejects_nonsymmetric_input() {
    let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
    assert!(gershgorin_pairing(&m, &m).is_err());
}

#[test]
fn sub_closed_forms_match_radial_derivatives() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..200 {
        let n = rng.gen_range(3..=8);
        let delta = rng.gen_range(0.001..0.249);
        let a = n as f64 - 2.0 - 2.0 * delta;
        let r = rng.gen_range(0.01..0.99 * a);
        let (c1, c2) = chi_coefficients_sub(n, delta, r).unwrap();
        let (g1, g2) = radial_chi(n, r, &subsolution_jet(n, delta, r).unwrap());
        assert!((c1 - g1).abs() < 1e-11 * c1.abs().max(1.0));
        assert!((c2 - g2).abs() < 1e-11 * c2.abs().max(1.0));
        assert!(c1 > 0.0);
    }
}

#[test]
fn sub_log_derivative_identity_and_small_delta_comparison() {
    for &r in &[1e-3, 0.1, 0.7, 1.3] {
        let (v, w) = subsolution_eval(5, 0.2, r).unwrap();
        assert_eq!(w + 2.6 / r - 1.0, 0.0);
        let v0 = r.powf(-3.0) * r.exp();
        // r^{2δ} < 1 below r = 1
        assert_eq!(v < v0, r < 1.0);
    }
}

#[test]
fn super_closed_forms_match_radial_derivatives() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..200 {
        let n = rng.gen_range(3..=8);
        let p = SuperParams {
            mu: rng.gen_range(1.05..1.95),
            delta: rng.gen_range(0.05..0.95),
            eps: rng.gen_range(0.0..0.99),
        };
        let r = 10f64.powf(rng.gen_range(-4.0..-0.5));
        let (c1, c2) = chi_coefficients_super(n, &p, r).unwrap();
        let (g1, g2) = radial_chi(n, r, &supersolution_jet(n, &p, r).unwrap());
        let scale = c1.abs().max(c2.abs());
        assert!((c1 - g1).abs() < 1e-9 * scale, "{p:?} r={r} {c1} {g1}");
        assert!((c2 - g2).abs() < 1e-9 * scale, "{p:?} r={r} {c2} {g2}");
        let gap = super_chi_gap(n, &p, r).unwrap();
        assert!((c2 - (p.mu + 1.0) * c1 - gap).abs() < 1e-9 * scale);
        assert!(gap < 0.0);
    }
}

#[test]
fn supersolution_endpoints() {
    let p0 = SuperParams {
        mu: 1.5,
        delta: 0.5,
        eps: 0.0,
    };
    let v = supersolution_eval(4, &p0, 1e-8).unwrap();
    assert!((v - (1.0 - 1e-4f64).powi(4)).abs() < 1e-12);
    let p = SuperParams {
        mu: 1.5,
        delta: 0.5,
        eps: 0.9,
    };
    let (r1, r2) = (1e-6, 1e-4);
    let slope = (supersolution_eval(5, &p, r2).unwrap().ln()
        - supersolution_eval(5, &p, r1).unwrap().ln())
        / (r2.ln() - r1.ln());
    assert!((slope + 3.0).abs() < 0.05, "slope {slope}");
    assert!(supersolution_eval(
        4,
        &SuperParams {
            mu: 1.5,
            delta: 0.5,
            eps: 0.0
        },
        1.5
    )
    .is_err());
}

fn sub_cfg(n: usize, k: usize, background: Background) -> BarrierSweepConfig {
    let mut cfg = BarrierSweepConfig::new(n, ConeSpec::gamma_k(n, k).unwrap());
    cfg.background = background;
    cfg
}

#[test]
fn sub_sweep_passes_when_mu_plus_at_most_one() {
    for (n, k) in [(4, 2), (3, 2)] {
        let rep = barrier_sweep_sub(&sub_cfg(n, k, Background::Flat)).unwrap();
        assert!(rep.pass, "n={n} k={k}");
        assert!(rep.r1().unwrap() >= 1e-2);
        assert!(rep.worst_margin() < 0.0);
    }
    let rep = barrier_sweep_sub(&sub_cfg(4, 2, Background::SphereNormal)).unwrap();
    assert!(rep.pass);
}

#[test]
fn sub_sweep_negative_control_fails_at_small_radius() {
    let rep = barrier_sweep_sub(&sub_cfg(4, 1, Background::Flat)).unwrap();
    assert!(!rep.pass);
    assert!(rep
        .cases
        .iter()
        .all(|c| c.offending_r.iter().any(|&r| r < 1e-3)));
}

#[test]
fn super_sweep_passes_and_is_eps_uniform() {
    let cone = ConeSpec::gamma_k(4, 1).unwrap();
    let mut cfg = BarrierSweepConfig::new(4, cone);
    cfg.background = Background::Flat;
    cfg.mus = vec![1.5];
    cfg.deltas = vec![0.25, 0.5];
    let rep = barrier_sweep_super(&cfg).unwrap();
    assert!(
        rep.pass,
        "{:?}",
        rep.cases
            .iter()
            .map(|c| (c.delta, c.eps, c.r1))
            .collect::<Vec<_>>()
    );
    assert!(rep.worst_margin() > 0.0);
}

#[test]
fn super_sweep_rejects_cones_with_small_mu_plus() {
    let mut cfg = BarrierSweepConfig::new(4, ConeSpec::gamma_k(4, 2).unwrap());
    cfg.mus = vec![1.2];
    cfg.deltas = vec![0.5];
    assert!(matches!(barrier_sweep_super(&cfg), Err(Error::Config(_))));
    let mut cfg = BarrierSweepConfig::new(5, ConeSpec::gamma_k(5, 2).unwrap());
    cfg.mus = vec![1.6];
    assert!(matches!(barrier_sweep_super(&cfg), Err(Error::Config(_))));
}

#[test]
fn sub_sweep_rejects_large_delta() {
    let mut cfg = sub_cfg(4, 2, Background::Flat);
    cfg.deltas = vec![0.3];
    assert!(matches!(barrier_sweep_sub(&cfg), Err(Error::Config(_))));
}

#[test]
fn suph_flat_matches_closed_form() {
    for n in 3..=6 {
        let g = MetricField::flat(n).unwrap();
        let rep = suph_barrier_check(&g, 1.0, 0.1, 1e-4, 24, &RadialTest::defaults(n)).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!(rep.flat_closed_form_error.unwrap() < 1e-8);
        let fund = &rep.ratios[0];
        assert!(fund.superharmonic && fund.ratio_increasing);
        assert!((fund.scaled_inner_value - 1.0).abs() < 1e-9);
        assert!(rep.ratios[1].scaled_inner_value < 1e-3);
    }
}

#[test]
fn suph_on_sphere_chart() {
    let g = MetricField::sphere_normal(4).unwrap();
    let rep = suph_barrier_check(&g, 1.0, 0.1, 1e-3, 24, &RadialTest::defaults(4)).unwrap();
    assert!(rep.pass, "{rep:?}");
    assert!(suph_comparison(4, 1.0, 0.1, 0.1).abs() < 1e-12);
}
