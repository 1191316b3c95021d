//! Elementary symmetric functions, Gårding cones and the curvature
//! functions `f = κ σ_k^{1/k}` defined on them, together with the cone
//! homotopy `Γ_t = {λ : tλ + (1-t)σ₁(λ)e ∈ Γ}` joining `(f, Γ)` to
//! `(σ₁, Γ₁)`.
//!
//! Only the `σ_k` family and its homotopies are provided. A new cone kind
//! needs a membership test in [`ConeSpec::contains`] and an evaluation rule
//! in [`CurvatureFunction::eval_unchecked`]; margins and `μ⁺` are derived
//! from membership alone.

use serde::{Deserialize, Serialize};

use crate::error::{arg, domain, Error, Result};

/// All elementary symmetric functions `σ_0..=σ_k` of `λ`.
///
/// Uses the prefix-polynomial recurrence `E_j ← E_j + λ_i E_{j-1}`, which is
/// `O(nk)` and never enumerates subsets.
pub fn elementary_symmetric(lambda: &[f64], k: usize) -> Vec<f64> {
    let mut e = vec![0.0; k + 1];
    e[0] = 1.0;
    for (i, &l) in lambda.iter().enumerate() {
        for j in (1..=k.min(i + 1)).rev() {
            e[j] += l * e[j - 1];
        }
    }
    e
}

/// `σ_k(λ)` for `1 ≤ k ≤ n`.
pub fn sigma_k(lambda: &[f64], k: usize) -> Result<f64> {
    if k == 0 || k > lambda.len() {
        return arg(format!("k = {k} outside 1..={}", lambda.len()));
    }
    Ok(elementary_symmetric(lambda, k)[k])
}

/// `λ ∈ Γ_k` iff `σ_j(λ) > 0` for `j = 1..=k`.
pub fn gamma_k_member(lambda: &[f64], k: usize) -> bool {
    if k == 0 || k > lambda.len() {
        return false;
    }
    elementary_symmetric(lambda, k)[1..]
        .iter()
        .all(|&s| s > 0.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConeKind {
    GammaK {
        k: usize,
    },
    /// `Γ_t` built over `Γ_k`.
    Homotopy {
        k: usize,
        t: f64,
    },
}

/// An open, convex, symmetric cone with vertex at the origin in `ℝⁿ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeSpec {
    pub n: usize,
    pub kind: ConeKind,
}

impl ConeSpec {
    pub fn gamma_k(n: usize, k: usize) -> Result<Self> {
        if n < 3 {
            return arg(format!("dimension n = {n} must be at least 3"));
        }
        if k == 0 || k > n {
            return arg(format!("k = {k} outside 1..={n}"));
        }
        Ok(ConeSpec {
            n,
            kind: ConeKind::GammaK { k },
        })
    }

    pub fn homotopy(n: usize, k: usize, t: f64) -> Result<Self> {
        let base = Self::gamma_k(n, k)?;
        if !(0.0..=1.0).contains(&t) {
            return arg(format!("homotopy parameter t = {t} outside [0, 1]"));
        }
        Ok(ConeSpec {
            n: base.n,
            kind: ConeKind::Homotopy { k, t },
        })
    }

    /// The `k` of the underlying `Γ_k`.
    pub fn base_k(&self) -> usize {
        match self.kind {
            ConeKind::GammaK { k } | ConeKind::Homotopy { k, .. } => k,
        }
    }

    /// The homotopy parameter, `1` for a plain `Γ_k`.
    pub fn t(&self) -> f64 {
        match self.kind {
            ConeKind::GammaK { .. } => 1.0,
            ConeKind::Homotopy { t, .. } => t,
        }
    }

    /// Point of the base cone that `λ` is mapped to.
    fn to_base(&self, lambda: &[f64]) -> Vec<f64> {
        match self.kind {
            ConeKind::GammaK { .. } => lambda.to_vec(),
            ConeKind::Homotopy { t, .. } => homotopy_point(lambda, t),
        }
    }

    pub fn contains(&self, lambda: &[f64]) -> bool {
        lambda.len() == self.n && gamma_k_member(&self.to_base(lambda), self.base_k())
    }
}

/// `tλ + (1-t)σ₁(λ)e`.
pub fn homotopy_point(lambda: &[f64], t: f64) -> Vec<f64> {
    let s1: f64 = lambda.iter().sum();
    lambda.iter().map(|l| t * l + (1.0 - t) * s1).collect()
}

const MARGIN_REL_TOL: f64 = 1e-12;

/// Diagonal-ray margin `sup{t : λ - t·e ∈ Γ}`.
///
/// Positive inside `Γ`, zero on `∂Γ`, negative outside `Γ̄`. Because
/// `Γ_n ⊂ Γ ⊂ {σ₁ > 0}`, the supremum always lies in `[min λ, max λ]`, so
/// the bisection is bracketed for every input.
pub fn cone_margin(lambda: &[f64], cone: &ConeSpec) -> f64 {
    let lo0 = lambda.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi0 = lambda.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if lo0 == hi0 {
        return lo0;
    }
    let scale = lo0.abs().max(hi0.abs());
    let shifted = |t: f64| lambda.iter().map(|l| l - t).collect::<Vec<_>>();
    let (mut lo, mut hi) = (lo0, hi0);
    // `lo` may sit on the boundary of the positive orthant; step just below
    if !cone.contains(&shifted(lo)) {
        lo -= scale * 1e-15;
        if !cone.contains(&shifted(lo)) {
            return lo;
        }
    }
    while hi - lo > MARGIN_REL_TOL * scale * 0.1 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if cone.contains(&shifted(mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `μ⁺_Γ`: the unique `μ ∈ [0, n-1]` with `(-μ, 1, …, 1) ∈ ∂Γ`.
pub fn mu_plus(cone: &ConeSpec) -> Result<f64> {
    let n = cone.n;
    let ray = |mu: f64| {
        let mut v = vec![1.0; n];
        v[0] = -mu;
        v
    };
    let (mut lo, mut hi) = (-1.0, (n - 1) as f64);
    if !cone.contains(&ray(lo)) || cone.contains(&ray(hi)) {
        return Err(Error::BrokenCone(format!(
            "membership of (-μ, 1, …, 1) does not switch on [{lo}, {hi}]"
        )));
    }
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if cone.contains(&ray(mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi)).clamp(0.0, (n - 1) as f64))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum CurvatureKind {
    SigmaRoot {
        k: usize,
    },
    /// `f_t(λ) = f(tλ + (1-t)σ₁(λ)e)` for the base `σ_k` root.
    Homotopy {
        k: usize,
        t: f64,
    },
}

/// A concave, degree-one homogeneous curvature function on a cone, scaled
/// so the base function equals one at `(1/2, …, 1/2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvatureFunction {
    pub cone: ConeSpec,
    pub kind: CurvatureKind,
    /// normalization of the base `σ_k^{1/k}`
    pub kappa: f64,
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl CurvatureFunction {
    /// Normalized `σ_k^{1/k}` on `Γ_k ⊂ ℝⁿ`.
    pub fn sigma_root(n: usize, k: usize) -> Result<Self> {
        let cone = ConeSpec::gamma_k(n, k)?;
        // σ_k(e/2) = C(n,k) 2^{-k}
        let kappa = 2.0 / binomial(n, k).powf(1.0 / k as f64);
        Ok(CurvatureFunction {
            cone,
            kind: CurvatureKind::SigmaRoot { k },
            kappa,
        })
    }

    /// `f_t` on `Γ_t`, keeping the base normalization.
    pub fn homotopy(&self, t: f64) -> Result<Self> {
        let k = self.cone.base_k();
        Ok(CurvatureFunction {
            cone: ConeSpec::homotopy(self.cone.n, k, t)?,
            kind: CurvatureKind::Homotopy { k, t },
            kappa: self.kappa,
        })
    }

    pub fn n(&self) -> usize {
        self.cone.n
    }

    /// Evaluates without the membership check; meaningful on `Γ̄`.
    pub fn eval_unchecked(&self, lambda: &[f64]) -> f64 {
        match self.kind {
            CurvatureKind::SigmaRoot { k } => {
                let s = elementary_symmetric(lambda, k)[k];
                self.kappa * s.max(0.0).powf(1.0 / k as f64)
            }
            CurvatureKind::Homotopy { k, t } => {
                let p = homotopy_point(lambda, t);
                let s = elementary_symmetric(&p, k)[k];
                self.kappa * s.max(0.0).powf(1.0 / k as f64)
            }
        }
    }

    /// `f(λ)` for `λ ∈ Γ`.
    pub fn eval(&self, lambda: &[f64]) -> Result<f64> {
        if lambda.len() != self.n() {
            return arg(format!(
                "expected {} eigenvalues, got {}",
                self.n(),
                lambda.len()
            ));
        }
        if !self.cone.contains(lambda) {
            return domain(format!("{lambda:?} is not in the cone"));
        }
        Ok(self.eval_unchecked(lambda))
    }
}

/// `f_t(λ) = f(tλ + (1-t)σ₁(λ)e)` for `λ ∈ Γ_t`.
pub fn homotopy_ft(f: &CurvatureFunction, t: f64, lambda: &[f64]) -> Result<f64> {
    f.homotopy(t)?.eval(lambda)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_sigma(l: &[f64], k: usize) -> f64 {
        let n = l.len();
        (0u32..(1 << n))
            .filter(|m| m.count_ones() as usize == k)
            .map(|m| {
                (0..n)
                    .filter(|i| m & (1 << i) != 0)
                    .map(|i| l[i])
                    .product::<f64>()
            })
            .sum()
    }

    #[test]
    fn sigma_small_cases() {
        assert_eq!(sigma_k(&[1.0, 1.0, 1.0], 2).unwrap(), 3.0);
        assert_eq!(sigma_k(&[1.0, 2.0, 3.0], 3).unwrap(), 6.0);
        let l = [2.0, -1.0, 4.0, 0.5];
        let expected = brute_sigma(&l, 2);
        assert_eq!(expected, 4.5);
        assert!((sigma_k(&l, 2).unwrap() - expected).abs() < 1e-14);
        assert!(matches!(sigma_k(&l, 0), Err(Error::Argument(_))));
        assert!(matches!(sigma_k(&l, 5), Err(Error::Argument(_))));
    }

    #[test]
    fn sigma_matches_enumeration_for_larger_n() {
        let l: Vec<f64> = (0..14)
            .map(|i| ((i * 37 % 11) as f64 - 5.0) / 3.0)
            .collect();
        for k in 1..=14 {
            let a = sigma_k(&l, k).unwrap();
            let b = brute_sigma(&l, k);
            assert!(
                (a - b).abs() <= 1e-10 * b.abs().max(1.0),
                "k={k}: {a} vs {b}"
            );
        }
    }

    #[test]
    fn gamma_k_membership_examples() {
        for n in 3..=8 {
            for k in 1..=n {
                assert!(gamma_k_member(&vec![1.0; n], k));
                assert!(!gamma_k_member(&vec![0.0; n], k));
                let mu = (n - k) as f64 / k as f64 + 0.01;
                let mut v = vec![1.0; n];
                v[0] = -mu;
                assert!(!gamma_k_member(&v, k));
            }
        }
    }

    #[test]
    fn margin_examples() {
        let g3 = ConeSpec::gamma_k(3, 3).unwrap();
        assert!((cone_margin(&[1.0, 1.0, 1.0], &g3) - 1.0).abs() < 1e-12);
        let g1 = ConeSpec::gamma_k(3, 1).unwrap();
        assert!((cone_margin(&[3.0, 1.0, 1.0], &g1) - 5.0 / 3.0).abs() < 1e-11);
        // boundary point of Γ_2 in n = 4: (-1, 1, 1, 1)
        let g2 = ConeSpec::gamma_k(4, 2).unwrap();
        assert!(cone_margin(&[-1.0, 1.0, 1.0, 1.0], &g2).abs() < 1e-10);
        assert!(cone_margin(&[-1.5, 1.0, 1.0, 1.0], &g2) < 0.0);
    }

    #[test]
    fn mu_plus_examples() {
        for n in 3..=6 {
            assert!(mu_plus(&ConeSpec::gamma_k(n, n).unwrap()).unwrap().abs() < 1e-10);
            let m1 = mu_plus(&ConeSpec::gamma_k(n, 1).unwrap()).unwrap();
            assert!((m1 - (n - 1) as f64).abs() < 1e-10);
        }
    }

    #[test]
    fn normalization_and_homotopy_endpoints() {
        let f = CurvatureFunction::sigma_root(4, 2).unwrap();
        assert!((f.eval(&[0.5; 4]).unwrap() - 1.0).abs() < 1e-15);
        let raw = sigma_k(&[0.5; 4], 2).unwrap().sqrt();
        assert!((raw - 1.5f64.sqrt()).abs() < 1e-15);
        let l = [0.9, 0.2, -0.1, 0.4];
        assert!((homotopy_ft(&f, 1.0, &l).unwrap() - f.eval(&l).unwrap()).abs() < 1e-15);
        let s1: f64 = l.iter().sum();
        let fe = f.eval(&[1.0; 4]).unwrap();
        assert!((homotopy_ft(&f, 0.0, &l).unwrap() - s1 * fe).abs() < 1e-14);
        // t = 1/2 at (1,0,0,0) is f((1/2)λ + (1/2)e) by direct substitution
        let l = [1.0, 0.0, 0.0, 0.0];
        let direct = f.eval(&[1.0, 0.5, 0.5, 0.5]).unwrap();
        assert!((homotopy_ft(&f, 0.5, &l).unwrap() - direct).abs() < 1e-15);
    }

    #[test]
    fn outside_cone_is_domain_error() {
        let f = CurvatureFunction::sigma_root(3, 2).unwrap();
        assert!(matches!(f.eval(&[-2.0, 1.0, 1.0]), Err(Error::Domain(_))));
    }
}
