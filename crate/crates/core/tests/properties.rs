use std::sync::Arc;

use proptest::prelude::*;
use sigmak_core::barriers::{chi_coefficients_sub, gershgorin_pairing};
use sigmak_core::bubbles::{bubble_verify, Bubble};
use sigmak_core::comparison::{hawking_bound, model_ball_volume, ModelSpace};
use sigmak_core::cones::*;
use sigmak_core::conformal::DerivativeMode;
use sigmak_core::solver::{
    newton_solve, radial_schouten_eigs, Family, GridKind, NewtonOptions, RadialGrid, RadialProblem,
    RadialProfile,
};

fn lambda_strategy(n: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-3.0..3.0f64, n)
}

/// A point of `Γ_k`, pushed inside along the diagonal when needed.
fn inside(mut l: Vec<f64>, k: usize) -> Vec<f64> {
    while !gamma_k_member(&l, k) {
        for v in l.iter_mut() {
            *v += 0.5;
        }
    }
    l
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn membership_is_permutation_invariant(l in lambda_strategy(6), k in 1usize..=6, seed in any::<u64>()) {
        let mut p = l.clone();
        let len = p.len();
        let mut s = seed;
        for i in (1..len).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            p.swap(i, (s >> 33) as usize % (i + 1));
        }
        prop_assert_eq!(gamma_k_member(&l, k), gamma_k_member(&p, k));
    }

    #[test]
    fn curvature_function_is_concave(a in lambda_strategy(5), b in lambda_strategy(5), k in 1usize..=5) {
        let f = CurvatureFunction::sigma_root(5, k).unwrap();
        let (a, b) = (inside(a, k), inside(b, k));
        let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
        let lhs = f.eval(&mid).unwrap();
        let rhs = 0.5 * (f.eval(&a).unwrap() + f.eval(&b).unwrap());
        prop_assert!(lhs >= rhs - 1e-12 * (1.0 + rhs.abs()));
    }

    #[test]
    fn margin_is_homogeneous(l in lambda_strategy(4), k in 1usize..=4, t in 0.01..100.0f64) {
        let cone = ConeSpec::gamma_k(4, k).unwrap();
        let m = cone_margin(&l, &cone);
        let scaled: Vec<f64> = l.iter().map(|v| v * t).collect();
        let ms = cone_margin(&scaled, &cone);
        prop_assert!((ms - t * m).abs() <= 1e-9 * (1.0 + (t * m).abs()));
    }

    #[test]
    fn homotopy_cone_endpoints(l in lambda_strategy(5), k in 1usize..=5) {
        let one = ConeSpec::homotopy(5, k, 1.0).unwrap();
        let zero = ConeSpec::homotopy(5, k, 0.0).unwrap();
        prop_assert_eq!(one.contains(&l), gamma_k_member(&l, k));
        prop_assert_eq!(zero.contains(&l), l.iter().sum::<f64>() > 0.0);
    }

    #[test]
    fn bubble_is_round_everywhere(
        a in 0.1..10.0f64,
        p in proptest::collection::vec(-5.0..5.0f64, 3),
        x in proptest::collection::vec(-10.0..10.0f64, 3),
    ) {
        let f = CurvatureFunction::sigma_root(3, 2).unwrap();
        let b = Bubble::new(a, p).unwrap();
        let r = bubble_verify(&f, &b, &[x], DerivativeMode::Analytic).unwrap();
        prop_assert!(r.max_eigen_deviation < 1e-6, "{:?}", r);
    }

    #[test]
    fn hawking_bound_monotone(alpha in 0.0..3.0f64, c0 in 0.1..5.0f64, d in 0.01..1.0f64) {
        prop_assume!(c0 > alpha + 1e-3);
        let base = hawking_bound(alpha, c0).unwrap();
        prop_assert!(hawking_bound(alpha, c0 + d).unwrap() < base);
        if alpha + d < c0 {
            prop_assert!(hawking_bound(alpha + d, c0).unwrap() > base);
        }
    }

    #[test]
    fn model_volume_monotone(n in 2usize..7, alpha in 0.0..2.0f64, r in 0.05..3.0f64, d in 0.01..0.5f64) {
        let m = ModelSpace::new(n, alpha).unwrap();
        let v = model_ball_volume(&m, r).unwrap();
        prop_assert!(model_ball_volume(&m, r + d).unwrap() > v);
        prop_assert!(model_ball_volume(&ModelSpace::new(n, alpha + d).unwrap(), r).unwrap() > v);
    }

    #[test]
    fn sub_chi_identity(n in 3usize..9, delta in 1e-3..0.25f64, r in 1e-2..1.0f64) {
        let a = n as f64 - 2.0 - 2.0 * delta;
        prop_assume!(r < 0.99 * a);
        let (c1, c2) = chi_coefficients_sub(n, delta, r).unwrap();
        let want = 2.0 / ((n as f64 - 2.0) * r);
        prop_assert!(((c2 - 2.0 * c1) - want).abs() <= 1e-12 * want.abs().max((c2).abs()));
    }

    #[test]
    fn gershgorin_bound_holds(n in 2usize..7, seed in any::<u64>(), scale in 1e-6..1.0f64) {
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        let mut m = nalgebra::DMatrix::from_fn(n, n, |_, _| next());
        m = &m + m.transpose();
        let mut d = nalgebra::DMatrix::from_fn(n, n, |_, _| scale * next());
        d = &d + d.transpose();
        let p = gershgorin_pairing(&m, &(&m + &d)).unwrap();
        prop_assert!(p.within_bound);
    }

    #[test]
    fn zonal_eigenvalues_scale_with_the_factor(c in 0.2..5.0f64, amp in -0.3..0.3f64, n in 3usize..6) {
        let g = Arc::new(RadialGrid::new(GridKind::Uniform, 16, n).unwrap());
        let base = RadialProfile::from_fn(g.clone(), |t| 1.0 + amp * t.cos());
        let scaled = RadialProfile::from_fn(g, |t| c * (1.0 + amp * t.cos()));
        let factor = c.powf(-4.0 / (n as f64 - 2.0));
        for j in [0, 5, 16] {
            let a = radial_schouten_eigs(&base, j).unwrap().scaled(factor);
            let b = radial_schouten_eigs(&scaled, j).unwrap();
            for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
                prop_assert!((x - y).abs() <= 1e-10 * (1.0 + x.abs()));
            }
        }
    }

    #[test]
    fn constant_solution_is_a_fixed_point(frac in 0.0..0.999f64, n in 3usize..6, k in 1usize..=3) {
        prop_assume!(k <= n);
        let f = CurvatureFunction::sigma_root(n, k).unwrap();
        let g = Arc::new(RadialGrid::new(GridKind::Chebyshev, 12, n).unwrap());
        let p = RadialProblem::new(f, g.clone()).unwrap();
        let s = frac * 4.0 / (n as f64 - 2.0);
        let out = newton_solve(&p, &Family::Fs { s }, &vec![1.0; g.len()], &NewtonOptions::default()).unwrap();
        prop_assert_eq!(out.iterations, 0);
    }
}

#[test]
fn mu_plus_decreases_in_k() {
    for n in 3..=10 {
        let mus: Vec<f64> = (1..=n)
            .map(|k| mu_plus(&ConeSpec::gamma_k(n, k).unwrap()).unwrap())
            .collect();
        assert!(mus.windows(2).all(|w| w[1] < w[0]), "n={n}: {mus:?}");
    }
}

#[test]
fn concavity_on_ten_thousand_pairs() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    for k in 1..=4 {
        let f = CurvatureFunction::sigma_root(4, k).unwrap();
        for _ in 0..2500 {
            let a = inside((0..4).map(|_| rng.gen_range(-3.0..3.0)).collect(), k);
            let b = inside((0..4).map(|_| rng.gen_range(-3.0..3.0)).collect(), k);
            let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
            let rhs = 0.5 * (f.eval(&a).unwrap() + f.eval(&b).unwrap());
            assert!(f.eval(&mid).unwrap() >= rhs - 1e-12 * (1.0 + rhs));
        }
    }
}

#[test]
fn homotopy_endpoints_on_ten_thousand_samples() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
    for _ in 0..10_000 {
        let n = rng.gen_range(3..=6);
        let k = rng.gen_range(1..=n);
        let l: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        assert_eq!(
            ConeSpec::homotopy(n, k, 1.0).unwrap().contains(&l),
            gamma_k_member(&l, k)
        );
        assert_eq!(
            ConeSpec::homotopy(n, k, 0.0).unwrap().contains(&l),
            l.iter().sum::<f64>() > 0.0
        );
    }
}
