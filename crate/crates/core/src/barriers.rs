//! Radial barriers near a point and their numerical certification.
//!
//! * [`gershgorin_pairing`] measures how far the spectrum of a symmetric
//!   matrix moves under a perturbation.
//! * The sub-solution `r^{-(n-2-2δ)} e^r` has Schouten eigenvalues strictly
//!   outside `Γ̄` near the origin when `μ⁺_Γ ≤ 1` ([`barrier_sweep_sub`]).
//! * The super-solution `(ε r^{1-μ} + 1 - r^δ)^{(n-2)/(μ-1)}` has them strictly
//!   inside `Γ` when `1 < μ < min(μ⁺_Γ, 2)` ([`barrier_sweep_super`]).
//! * [`suph_barrier_check`] evaluates the conformal Laplacian of the
//!   comparison function `r^{2-n} - K r^{5/2-n}` on a punctured ball.
//!
//! For a radial factor `v(r)` on a flat chart the Schouten form of
//! `v^{4/(n-2)} g` is `χ₁ Id - χ₂ x̂⊗x̂`. On a curved background the sweeps
//! measure the remainder between the full eigenvalues and this model.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cones::{cone_margin, mu_plus, ConeSpec};
use crate::conformal::{
    eigen_rel, laplacian, scalar_curvature, schouten_conformal_parts, ConformalFactor, MetricField,
};
use crate::error::{arg, domain, Error, Result};
use crate::expr::Expr;

/// Spectral pairing of `M` and `M̃` with the deviation it achieves.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pairing {
    /// `permutation[i]` is the index (ascending order) of the eigenvalue of
    /// `M̃` paired with the `i`-th smallest eigenvalue of `M`
    pub permutation: Vec<usize>,
    pub total_deviation: f64,
    /// `max |M - M̃|` entrywise
    pub perturbation: f64,
    /// Row-sum bound `Σ_ij |(Qᵀ(M̃ - M)Q)_ij|` in the eigenbasis of `M`
    pub row_sum_bound: f64,
    /// `n² · max |M - M̃|`
    pub bound: f64,
    pub within_bound: bool,
}

impl Pairing {
    /// `total_deviation / max|M - M̃|`, or zero for equal inputs.
    pub fn measured_constant(&self) -> f64 {
        if self.perturbation > 0.0 {
            self.total_deviation / self.perturbation
        } else {
            0.0
        }
    }
}

fn check_symmetric(m: &DMatrix<f64>, name: &str) -> Result<()> {
    if !m.is_square() {
        return arg(format!("{name} is not square"));
    }
    let scale = m.amax().max(1.0);
    if (m - m.transpose()).amax() > 1e-12 * scale {
        return arg(format!("{name} is not symmetric"));
    }
    Ok(())
}

/// Pairs the eigenvalues of two symmetric matrices and bounds the total
/// deviation by `n² max|M - M̃|`.
///
/// Ascending order is paired with ascending order, which minimises
/// `Σ |λ_i(M) - λ_σ(i)(M̃)|` over all permutations.
pub fn gershgorin_pairing(m: &DMatrix<f64>, mt: &DMatrix<f64>) -> Result<Pairing> {
    check_symmetric(m, "M")?;
    check_symmetric(mt, "M̃")?;
    if m.shape() != mt.shape() {
        return arg("matrices differ in size".to_string());
    }
    let n = m.nrows();
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let q = &eig.eigenvectors;
    let rotated = q.transpose() * (mt - m) * q;
    let row_sum_bound = rotated.iter().map(|v| v.abs()).sum();
    let mut lam: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut lam_t: Vec<f64> = SymmetricEigen::new(mt.clone())
        .eigenvalues
        .iter()
        .copied()
        .collect();
    lam.sort_by(f64::total_cmp);
    lam_t.sort_by(f64::total_cmp);
    let total_deviation = lam.iter().zip(&lam_t).map(|(a, b)| (a - b).abs()).sum();
    let perturbation = (m - mt).amax();
    let bound = (n * n) as f64 * perturbation;
    Ok(Pairing {
        permutation: (0..n).collect(),
        total_deviation,
        perturbation,
        row_sum_bound,
        bound,
        within_bound: total_deviation <= bound * (1.0 + 1e-12) + 1e-14,
    })
}

/// Radial data `(v, v'/v, v''/v)` of a factor at radius `r`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadialJet {
    pub value: f64,
    pub log_derivative: f64,
    pub second_ratio: f64,
}

/// `(χ₁, χ₂)` of `χ₁ Id - χ₂ x̂⊗x̂`, the flat Schouten form of `v^{4/(n-2)} δ`.
pub fn radial_chi(n: usize, r: f64, jet: &RadialJet) -> (f64, f64) {
    let m = n as f64 - 2.0;
    let w = jet.log_derivative;
    let chi1 = -(2.0 / m) * w / r - (2.0 / (m * m)) * w * w;
    let chi2 = (2.0 / m) * (jet.second_ratio - w / r) - (2.0 * n as f64 / (m * m)) * w * w;
    (chi1, chi2)
}

fn check_dim(n: usize) -> Result<()> {
    if n < 3 {
        return arg(format!("dimension n = {n} must be at least 3"));
    }
    Ok(())
}

fn check_sub(n: usize, delta: f64, r: f64) -> Result<()> {
    check_dim(n)?;
    if !(delta > 0.0 && delta < 0.25) {
        return arg(format!("δ = {delta} must lie in (0, 1/4)"));
    }
    if !(r > 0.0) {
        return domain(format!("radius r = {r} must be positive"));
    }
    Ok(())
}

/// `v(r) = r^{-(n-2-2δ)} e^r` and `∂_r ln v = -(n-2-2δ)/r + 1`.
pub fn subsolution_eval(n: usize, delta: f64, r: f64) -> Result<(f64, f64)> {
    let j = subsolution_jet(n, delta, r)?;
    Ok((j.value, j.log_derivative))
}

pub fn subsolution_jet(n: usize, delta: f64, r: f64) -> Result<RadialJet> {
    check_sub(n, delta, r)?;
    let a = n as f64 - 2.0 - 2.0 * delta;
    let w = 1.0 - a / r;
    Ok(RadialJet {
        value: r.powf(-a) * r.exp(),
        log_derivative: w,
        second_ratio: a / (r * r) + w * w,
    })
}

/// Closed-form `(χ₁, χ₂)` for the sub-solution, `a = n-2-2δ`:
/// `χ₁ = 2(a-r)(2δ+r) / ((n-2)² r²)`,
/// `χ₂ = 2(4δa + (3a-2δ)r - 2r²) / ((n-2)² r²)`.
pub fn chi_coefficients_sub(n: usize, delta: f64, r: f64) -> Result<(f64, f64)> {
    check_sub(n, delta, r)?;
    let a = n as f64 - 2.0 - 2.0 * delta;
    if r >= a {
        return domain(format!("r = {r} must be below n-2-2δ = {a}"));
    }
    let c = 2.0 / ((n as f64 - 2.0).powi(2) * r * r);
    let chi1 = c * (a - r) * (2.0 * delta + r);
    let chi2 = c * (4.0 * delta * a + (3.0 * a - 2.0 * delta) * r - 2.0 * r * r);
    Ok((chi1, chi2))
}

/// Parameters of the super-solution `(ε r^{1-μ} + 1 - r^δ)^{(n-2)/(μ-1)}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuperParams {
    pub mu: f64,
    pub delta: f64,
    pub eps: f64,
}

impl SuperParams {
    fn check(&self, n: usize) -> Result<()> {
        check_dim(n)?;
        if !(self.mu > 1.0 && self.mu < 2.0) {
            return arg(format!("μ = {} must lie in (1, 2)", self.mu));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return arg(format!("δ = {} must lie in (0, 1)", self.delta));
        }
        if !(self.eps >= 0.0 && self.eps < 1.0) {
            return arg(format!("ε = {} must lie in [0, 1)", self.eps));
        }
        Ok(())
    }

    fn base(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return domain(format!("radius r = {r} must be positive"));
        }
        let b = self.eps * r.powf(1.0 - self.mu) + 1.0 - r.powf(self.delta);
        if !(b > 0.0) {
            return domain(format!(
                "base ε r^(1-μ) + 1 - r^δ = {b} is not positive at r = {r}"
            ));
        }
        Ok(b)
    }
}

pub fn supersolution_eval(n: usize, p: &SuperParams, r: f64) -> Result<f64> {
    Ok(supersolution_jet(n, p, r)?.value)
}

pub fn supersolution_jet(n: usize, p: &SuperParams, r: f64) -> Result<RadialJet> {
    p.check(n)?;
    let b = p.base(r)?;
    let SuperParams { mu, delta, eps } = *p;
    let db = eps * (1.0 - mu) * r.powf(-mu) - delta * r.powf(delta - 1.0);
    let ddb =
        eps * (1.0 - mu) * (-mu) * r.powf(-mu - 1.0) - delta * (delta - 1.0) * r.powf(delta - 2.0);
    let q = (n as f64 - 2.0) / (mu - 1.0);
    let lb = db / b;
    Ok(RadialJet {
        value: b.powf(q),
        log_derivative: q * lb,
        second_ratio: q * ddb / b + q * (q - 1.0) * lb * lb,
    })
}

/// Closed-form `(χ₁, χ₂)` for the super-solution.
pub fn chi_coefficients_super(n: usize, p: &SuperParams, r: f64) -> Result<(f64, f64)> {
    p.check(n)?;
    let b = p.base(r)?;
    let SuperParams { mu, delta, eps } = *p;
    let m1 = mu - 1.0;
    let rd = r.powf(delta);
    let re = r.powf(1.0 - mu);
    let c = 2.0 / (m1 * m1 * r * r * b * b);
    let chi1 = c * (eps * m1 * re + delta * rd) * (m1 - (m1 + delta) * rd);
    let chi2 = c
        * (eps * m1 * m1 * (mu + 1.0) * re
            - eps * m1 * ((mu + delta).powi(2) - 1.0) * re * rd
            - delta * (delta - 2.0) * m1 * rd
            - 2.0 * delta * (mu + delta - 1.0) * rd * rd);
    Ok((chi1, chi2))
}

/// `χ₂ - (μ+1)χ₁ = -2δ(μ-1+δ) / ((μ-1) r^{2-δ} B)`.
pub fn super_chi_gap(n: usize, p: &SuperParams, r: f64) -> Result<f64> {
    p.check(n)?;
    let b = p.base(r)?;
    let SuperParams { mu, delta, .. } = *p;
    Ok(-2.0 * delta * (mu - 1.0 + delta) / ((mu - 1.0) * r.powf(2.0 - delta) * b))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Background {
    Flat,
    SphereNormal,
}

impl Background {
    pub fn metric(&self, n: usize) -> Result<MetricField> {
        match self {
            Background::Flat => MetricField::flat(n),
            Background::SphereNormal => MetricField::sphere_normal(n),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BarrierSweepConfig {
    pub n: usize,
    pub cone: ConeSpec,
    pub deltas: Vec<f64>,
    /// Super-solution exponents; ignored by the sub-solution sweep
    pub mus: Vec<f64>,
    /// Super-solution scales; ignored by the sub-solution sweep
    pub epsilons: Vec<f64>,
    pub r_min: f64,
    /// First trial radius of the dyadic descent
    pub r_start: f64,
    /// The descent stops once the trial radius drops below this floor
    pub r_floor: f64,
    pub r_nodes: usize,
    pub directions: usize,
    pub background: Background,
    /// Margins must clear zero by this amount
    pub tolerance: f64,
}

impl BarrierSweepConfig {
    pub fn new(n: usize, cone: ConeSpec) -> Self {
        BarrierSweepConfig {
            n,
            cone,
            deltas: vec![0.01, 0.05, 0.1, 0.2],
            mus: Vec::new(),
            epsilons: vec![1e-3, 0.1, 0.9],
            r_min: 1e-4,
            r_start: 0.5,
            r_floor: 1e-3,
            r_nodes: 64,
            directions: 8,
            background: Background::SphereNormal,
            tolerance: 0.0,
        }
    }

    /// `count` exponents evenly inside `(1, min(μ⁺, 2))`.
    pub fn default_mus(cone: &ConeSpec, count: usize) -> Result<Vec<f64>> {
        let top = mu_plus(cone)?.min(2.0);
        Ok((1..=count)
            .map(|j| 1.0 + (top - 1.0) * j as f64 / (count + 1) as f64)
            .collect())
    }

    fn check_common(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.n < 3 {
            return bad(format!("dimension n = {} must be at least 3", self.n));
        }
        if self.cone.n != self.n {
            return bad(format!(
                "cone dimension {} differs from n = {}",
                self.cone.n, self.n
            ));
        }
        if !(self.r_min > 0.0 && self.r_floor > self.r_min && self.r_start >= self.r_floor) {
            return bad(format!(
                "radii must satisfy 0 < r_min < r_floor <= r_start (got {}, {}, {})",
                self.r_min, self.r_floor, self.r_start
            ));
        }
        if self.r_nodes < 2 || self.directions == 0 {
            return bad("need at least 2 radial nodes and 1 direction".to_string());
        }
        if !(self.tolerance >= 0.0) {
            return bad(format!("tolerance {} must be nonnegative", self.tolerance));
        }
        if self.deltas.is_empty() {
            return bad("δ grid is empty".to_string());
        }
        Ok(())
    }

    pub fn validate_sub(&self) -> Result<()> {
        self.check_common()?;
        if let Some(d) = self.deltas.iter().find(|d| !(**d > 0.0 && **d < 0.25)) {
            return Err(Error::Config(format!("δ = {d} must lie in (0, 1/4)")));
        }
        let a_min = self.n as f64 - 2.0 - 2.0 * self.deltas.iter().cloned().fold(0.0, f64::max);
        if self.r_start >= a_min {
            return Err(Error::Config(format!(
                "r_start must stay below n-2-2δ = {a_min}"
            )));
        }
        Ok(())
    }

    pub fn validate_super(&self) -> Result<f64> {
        self.check_common()?;
        let mp = mu_plus(&self.cone)?;
        if mp <= 1.0 {
            return Err(Error::Config(format!(
                "super-solution sweep needs μ⁺ > 1, cone has μ⁺ = {mp}"
            )));
        }
        let top = mp.min(2.0);
        if self.mus.is_empty() || self.epsilons.is_empty() {
            return Err(Error::Config("μ and ε grids must be nonempty".to_string()));
        }
        if let Some(m) = self.mus.iter().find(|m| !(**m > 1.0 && **m < top)) {
            return Err(Error::Config(format!("μ = {m} must lie in (1, {top})")));
        }
        if let Some(d) = self.deltas.iter().find(|d| !(**d > 0.0 && **d < 1.0)) {
            return Err(Error::Config(format!("δ = {d} must lie in (0, 1)")));
        }
        if let Some(e) = self.epsilons.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
            return Err(Error::Config(format!("ε = {e} must lie in (0, 1)")));
        }
        Ok(mp)
    }

    fn r_grid(&self, r1: f64) -> Vec<f64> {
        let (lo, hi) = (self.r_min.ln(), r1.ln());
        (1..=self.r_nodes)
            .map(|i| (lo + (hi - lo) * i as f64 / self.r_nodes as f64).exp())
            .collect()
    }
}

/// Deterministic unit directions: the first coordinate axis, the diagonal,
/// then a quasi-random spread.
pub fn sample_directions(n: usize, count: usize) -> Vec<Vec<f64>> {
    let golden = 0.5 * (1.0 + 5f64.sqrt());
    (0..count)
        .map(|j| {
            let v: Vec<f64> = match j {
                0 => (0..n).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect(),
                1 => vec![1.0; n],
                _ => (0..n)
                    .map(|i| (((j * n + i) as f64 * golden).fract() - 0.5) + 0.1 * (i as f64).cos())
                    .collect(),
            };
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.into_iter().map(|x| x / norm).collect()
        })
        .collect()
}

/// One evaluated sample: full eigenvalues against the radial model.
#[derive(Clone, Debug)]
struct Sample {
    margin: f64,
    /// remainder / (v^{-4/(n-2)} (1 + r|w| + r²w²))
    remainder_constant: f64,
    /// remainder / (χ₁ v^{-4/(n-2)})
    relative_remainder: f64,
}

fn evaluate(
    g: &MetricField,
    u: &ConformalFactor,
    cone: &ConeSpec,
    x: &[f64],
    r: f64,
    jet: &RadialJet,
) -> Result<Sample> {
    let n = g.n;
    let mj = g.jet(x)?;
    let fj = u.jet(x)?;
    let a = schouten_conformal_parts(g, &mj, &fj)?;
    let gu = &mj.g * fj.u.powf(4.0 / (n as f64 - 2.0));
    let lam = eigen_rel(&a, &gu)?;
    let (chi1, chi2) = radial_chi(n, r, jet);
    let s = jet.value.powf(-4.0 / (n as f64 - 2.0));
    let mut model = vec![chi1 * s; n];
    model[0] = (chi1 - chi2) * s;
    model.sort_by(f64::total_cmp);
    // Σ|λ - λ_model| over the sorted pairing
    let remainder: f64 = lam
        .as_slice()
        .iter()
        .zip(&model)
        .map(|(a, b)| (a - b).abs())
        .sum();
    let rw = r * jet.log_derivative.abs();
    Ok(Sample {
        margin: cone_margin(lam.as_slice(), cone),
        remainder_constant: remainder / (s * (1.0 + rw + rw * rw)),
        relative_remainder: remainder / (chi1.abs() * s),
    })
}

/// One row of a sweep table: the worst sample over directions at one radius.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub k: usize,
    pub delta: f64,
    pub mu: Option<f64>,
    pub eps: Option<f64>,
    pub r: f64,
    pub margin: f64,
    pub pass: bool,
}

/// Outcome of the dyadic descent for one parameter combination.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCase {
    pub delta: f64,
    pub mu: Option<f64>,
    pub eps: Option<f64>,
    /// Largest trial radius whose full grid passed
    pub r1: Option<f64>,
    /// Worst margin on the certified grid, or on the last failing grid
    pub worst_margin: f64,
    pub max_remainder_constant: f64,
    pub max_relative_remainder: f64,
    /// Radii of the last failing grid that violated the sign condition
    pub offending_r: Vec<f64>,
    pub pass: bool,
    pub rows: Vec<SweepRow>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepKind {
    Sub,
    Super,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub kind: SweepKind,
    pub n: usize,
    pub k: usize,
    pub mu_plus: f64,
    pub background: Background,
    pub cases: Vec<SweepCase>,
    pub pass: bool,
}

impl SweepReport {
    /// Smallest certified `r₁` over all cases.
    pub fn r1(&self) -> Option<f64> {
        self.cases
            .iter()
            .map(|c| c.r1)
            .try_fold(f64::INFINITY, |m, r| r.map(|r| m.min(r)))
    }

    pub fn worst_margin(&self) -> f64 {
        let pick = |m: f64| if self.kind == SweepKind::Sub { -m } else { m };
        self.cases
            .iter()
            .map(|c| c.worst_margin)
            .min_by(|a, b| pick(*a).total_cmp(&pick(*b)))
            .unwrap_or(f64::NAN)
    }

    pub fn rows(&self) -> impl Iterator<Item = &SweepRow> {
        self.cases.iter().flat_map(|c| c.rows.iter())
    }
}

struct CaseSpec {
    delta: f64,
    mu: Option<f64>,
    eps: Option<f64>,
    factor: ConformalFactor,
    jet: Box<dyn Fn(f64) -> Result<RadialJet> + Send + Sync>,
    /// Extra pointwise condition, e.g. the sign of `χ₂ - (μ+1)χ₁`
    extra: Box<dyn Fn(f64) -> Result<bool> + Send + Sync>,
}

fn run_case(
    cfg: &BarrierSweepConfig,
    kind: SweepKind,
    g: &MetricField,
    spec: &CaseSpec,
) -> Result<SweepCase> {
    let dirs = sample_directions(cfg.n, cfg.directions);
    let k = cfg.cone.base_k();
    let ok = |m: f64| match kind {
        SweepKind::Sub => m < -cfg.tolerance,
        SweepKind::Super => m > cfg.tolerance,
    };
    let worse = |a: f64, b: f64| match kind {
        SweepKind::Sub => a.max(b),
        SweepKind::Super => a.min(b),
    };
    let mut r1 = cfg.r_start;
    loop {
        let mut rows = Vec::with_capacity(cfg.r_nodes);
        let (mut rc, mut rr) = (0.0f64, 0.0f64);
        let mut offending = Vec::new();
        let mut worst = match kind {
            SweepKind::Sub => f64::NEG_INFINITY,
            SweepKind::Super => f64::INFINITY,
        };
        // largest radii first: a failing grid usually fails there
        for &r in cfg.r_grid(r1).iter().rev() {
            let jet = (spec.jet)(r)?;
            let extra = (spec.extra)(r)?;
            let mut m_r = match kind {
                SweepKind::Sub => f64::NEG_INFINITY,
                SweepKind::Super => f64::INFINITY,
            };
            for d in &dirs {
                let x: Vec<f64> = d.iter().map(|v| v * r).collect();
                let s = evaluate(g, &spec.factor, &cfg.cone, &x, r, &jet)?;
                m_r = worse(m_r, s.margin);
                rc = rc.max(s.remainder_constant);
                rr = rr.max(s.relative_remainder);
            }
            worst = worse(worst, m_r);
            let pass = ok(m_r) && extra;
            if !pass {
                offending.push(r);
            }
            rows.push(SweepRow {
                n: cfg.n,
                k,
                delta: spec.delta,
                mu: spec.mu,
                eps: spec.eps,
                r,
                margin: m_r,
                pass,
            });
            if !pass && r1 * 0.5 >= cfg.r_floor {
                break;
            }
        }
        rows.reverse();
        let pass = offending.is_empty();
        if pass || r1 * 0.5 < cfg.r_floor {
            return Ok(SweepCase {
                delta: spec.delta,
                mu: spec.mu,
                eps: spec.eps,
                r1: pass.then_some(r1),
                worst_margin: worst,
                max_remainder_constant: rc,
                max_relative_remainder: rr,
                offending_r: offending,
                pass,
                rows,
            });
        }
        r1 *= 0.5;
    }
}

fn run_cases(
    cfg: &BarrierSweepConfig,
    kind: SweepKind,
    mu_plus: f64,
    specs: Vec<CaseSpec>,
) -> Result<SweepReport> {
    let g = cfg.background.metric(cfg.n)?;
    let cases = specs
        .par_iter()
        .map(|s| run_case(cfg, kind, &g, s))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepReport {
        kind,
        n: cfg.n,
        k: cfg.cone.base_k(),
        mu_plus,
        background: cfg.background,
        pass: cases.iter().all(|c| c.pass),
        cases,
    })
}

/// Factor `r^{-a} e^r` as a field on the chart.
fn subsolution_factor(n: usize, delta: f64) -> ConformalFactor {
    let a = n as f64 - 2.0 - 2.0 * delta;
    let r = Expr::radius(&vec![0.0; n]);
    ConformalFactor::new(n, r.clone().pow(-a) * r.exp())
}

fn supersolution_factor(n: usize, p: &SuperParams) -> ConformalFactor {
    let r = Expr::radius(&vec![0.0; n]);
    let base = Expr::c(p.eps) * r.clone().pow(1.0 - p.mu) + Expr::c(1.0) - r.pow(p.delta);
    ConformalFactor::new(n, base.pow((n as f64 - 2.0) / (p.mu - 1.0)))
}

/// Certifies that the sub-solution's Schouten eigenvalues lie strictly
/// outside `Γ̄` on a punctured ball, for every `δ` in the grid.
///
/// Cones with `μ⁺ > 1` are accepted so that the expected failure can be
/// observed.
pub fn barrier_sweep_sub(cfg: &BarrierSweepConfig) -> Result<SweepReport> {
    cfg.validate_sub()?;
    let mp = mu_plus(&cfg.cone)?;
    let n = cfg.n;
    let specs = cfg
        .deltas
        .iter()
        .map(|&delta| CaseSpec {
            delta,
            mu: None,
            eps: None,
            factor: subsolution_factor(n, delta),
            jet: Box::new(move |r| subsolution_jet(n, delta, r)),
            extra: Box::new(move |r| {
                let (c1, c2) = chi_coefficients_sub(n, delta, r)?;
                Ok(c1 > 0.0 && c2 - 2.0 * c1 > 0.0)
            }),
        })
        .collect();
    run_cases(cfg, SweepKind::Sub, mp, specs)
}

/// Certifies that the super-solution's Schouten eigenvalues lie strictly
/// inside `Γ` and that `χ₂ - (μ+1)χ₁ < 0`, over the `(μ, δ, ε)` grid.
pub fn barrier_sweep_super(cfg: &BarrierSweepConfig) -> Result<SweepReport> {
    let mp = cfg.validate_super()?;
    let n = cfg.n;
    let mut specs = Vec::new();
    for &mu in &cfg.mus {
        for &delta in &cfg.deltas {
            for &eps in &cfg.epsilons {
                let p = SuperParams { mu, delta, eps };
                specs.push(CaseSpec {
                    delta,
                    mu: Some(mu),
                    eps: Some(eps),
                    factor: supersolution_factor(n, &p),
                    jet: Box::new(move |r| supersolution_jet(n, &p, r)),
                    extra: Box::new(move |r| Ok(super_chi_gap(n, &p, r)? < 0.0)),
                });
            }
        }
    }
    run_cases(cfg, SweepKind::Super, mp, specs)
}

/// `c(n) = (n-2) / (4(n-1))`, the conformal Laplacian coefficient.
pub fn conformal_laplacian_coefficient(n: usize) -> f64 {
    (n as f64 - 2.0) / (4.0 * (n as f64 - 1.0))
}

/// `G = r^{2-n} - K r^{5/2-n} - (δ^{2-n} - K δ^{5/2-n})`, vanishing at `r = δ`.
pub fn suph_comparison(n: usize, k: f64, delta: f64, r: f64) -> f64 {
    let nf = n as f64;
    let h = |s: f64| s.powf(2.0 - nf) - k * s.powf(2.5 - nf);
    h(r) - h(delta)
}

/// `Δ G` on a flat chart, `K (n - 5/2)/2 · r^{1/2-n}`.
pub fn suph_flat_laplacian(n: usize, k: f64, r: f64) -> f64 {
    let nf = n as f64;
    k * (nf - 2.5) / 2.0 * r.powf(0.5 - nf)
}

/// A radial test function `w` for the monotone-ratio check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialTest {
    pub name: String,
    pub expr: Expr,
}

impl RadialTest {
    /// `r^{2-n}`, `1`, `1 + r^{2-n}` and `2 - r²`.
    pub fn defaults(n: usize) -> Vec<RadialTest> {
        let o = vec![0.0; n];
        let fund = Expr::radius(&o).pow(2.0 - n as f64);
        vec![
            RadialTest {
                name: "fundamental".into(),
                expr: fund.clone(),
            },
            RadialTest {
                name: "constant".into(),
                expr: Expr::c(1.0),
            },
            RadialTest {
                name: "fundamental+1".into(),
                expr: fund + Expr::c(1.0),
            },
            RadialTest {
                name: "2-r^2".into(),
                expr: Expr::c(2.0) - Expr::dist_sq(&o),
            },
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioCheck {
    pub name: String,
    /// `max r² L_g w / |w|` over the grid; the check applies when this is `≤ 0`
    pub max_scaled_laplacian: f64,
    pub superharmonic: bool,
    /// `G⁻¹ w` nondecreasing in `r` along the grid
    pub ratio_increasing: bool,
    /// `r^{n-2} w` at the innermost radius
    pub scaled_inner_value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuphReport {
    pub n: usize,
    pub k: f64,
    pub delta: f64,
    pub min_conformal_laplacian: f64,
    pub min_g: f64,
    /// Largest relative deviation from the flat closed form (flat charts only)
    pub flat_closed_form_error: Option<f64>,
    pub ratios: Vec<RatioCheck>,
    pub pass: bool,
}

/// Evaluates `L_g G = Δ_g G - c(n) R_g G` on the annulus
/// `r_inner ≤ |x| < δ` of a normal chart centred at the origin.
pub fn suph_barrier_check(
    g: &MetricField,
    k: f64,
    delta: f64,
    r_inner: f64,
    nodes: usize,
    tests: &[RadialTest],
) -> Result<SuphReport> {
    let n = g.n;
    if !(k > 0.0 && delta > 0.0 && r_inner > 0.0 && r_inner < delta && nodes >= 2) {
        return arg(format!(
            "need K > 0 and 0 < r_inner < δ (got K = {k}, δ = {delta}, r_inner = {r_inner})"
        ));
    }
    let nf = n as f64;
    let o = vec![0.0; n];
    let shift = delta.powf(2.0 - nf) - k * delta.powf(2.5 - nf);
    let rr = Expr::radius(&o);
    let gexpr = rr.clone().pow(2.0 - nf) - Expr::c(k) * rr.pow(2.5 - nf) - Expr::c(shift);
    let gfield = ConformalFactor::new(n, gexpr);
    let cn = conformal_laplacian_coefficient(n);
    let dirs = sample_directions(n, 4);
    // stop just short of δ, where G vanishes
    let radii: Vec<f64> = (0..nodes)
        .map(|i| (r_inner.ln() + (delta.ln() - r_inner.ln()) * i as f64 / nodes as f64).exp())
        .collect();
    let flat = matches!(g.kind, crate::conformal::MetricKind::Flat);
    let (mut min_l, mut min_g, mut flat_err) = (f64::INFINITY, f64::INFINITY, 0.0f64);
    let conf_lap = |field: &ConformalFactor, x: &[f64]| -> Result<f64> {
        Ok(laplacian(g, field, x)? - cn * scalar_curvature(g, x)? * field.value(x))
    };
    for &r in &radii {
        for d in &dirs {
            let x: Vec<f64> = d.iter().map(|v| v * r).collect();
            let l = conf_lap(&gfield, &x)?;
            min_l = min_l.min(l);
            if flat {
                let exact = suph_flat_laplacian(n, k, r);
                flat_err = flat_err.max((l - exact).abs() / exact.abs());
            }
        }
        min_g = min_g.min(suph_comparison(n, k, delta, r));
    }
    let mut ratios = Vec::new();
    for t in tests {
        let w = ConformalFactor::new(n, t.expr.clone());
        let mut max_lw = f64::NEG_INFINITY;
        let mut inc = true;
        let mut prev = f64::NEG_INFINITY;
        for &r in &radii {
            let x: Vec<f64> = dirs[0].iter().map(|v| v * r).collect();
            max_lw = max_lw.max(conf_lap(&w, &x)? * r * r / w.value(&x).abs());
            let ratio = w.value(&x) / suph_comparison(n, k, delta, r);
            if ratio < prev * (1.0 - 1e-12) {
                inc = false;
            }
            prev = ratio;
        }
        let x0: Vec<f64> = dirs[0].iter().map(|v| v * radii[0]).collect();
        ratios.push(RatioCheck {
            name: t.name.clone(),
            max_scaled_laplacian: max_lw,
            superharmonic: max_lw <= 1e-8,
            ratio_increasing: inc,
            scaled_inner_value: radii[0].powf(nf - 2.0) * w.value(&x0),
        });
    }
    let pass = min_l >= 0.0
        && min_g >= 0.0
        && ratios
            .iter()
            .all(|c| !c.superharmonic || c.ratio_increasing);
    Ok(SuphReport {
        n,
        k,
        delta,
        min_conformal_laplacian: min_l,
        min_g,
        flat_closed_form_error: flat.then_some(flat_err),
        ratios,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairing_examples() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]);
        let p = gershgorin_pairing(&m, &m).unwrap();
        assert_eq!(p.total_deviation, 0.0);
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 3.0]);
        let mt = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.1, 3.0]);
        let p = gershgorin_pairing(&m, &mt).unwrap();
        let shift = 1.01f64.sqrt() - 1.0;
        assert!((p.total_deviation - 2.0 * shift).abs() < 1e-14);
        assert!(p.total_deviation <= 0.2 && p.within_bound);
    }

    #[test]
    fn subsolution_values() {
        let (v, w) = subsolution_eval(4, 0.1, 1.0).unwrap();
        assert!((v - std::f64::consts::E).abs() < 1e-15);
        assert!((w + 1.8 - 1.0).abs() < 1e-15);
        assert!(subsolution_eval(4, 0.1, 0.0).is_err());
        assert!(subsolution_eval(4, 0.3, 1.0).is_err());
    }

    #[test]
    fn sub_chi_examples() {
        let (c1, c2) = chi_coefficients_sub(4, 0.1, 0.01).unwrap();
        assert!((c1 - 1879.5).abs() < 1e-9);
        assert!((c2 - 2.0 * c1 - 100.0).abs() < 1e-9);
        assert!(chi_coefficients_sub(4, 0.1, 1.8).is_err());
    }

    #[test]
    fn supersolution_example() {
        let p = SuperParams {
            mu: 1.5,
            delta: 0.5,
            eps: 0.1,
        };
        let v = supersolution_eval(5, &p, 0.01).unwrap();
        assert!((v - 1.9f64.powi(6)).abs() < 1e-10);
        assert!((1.9f64.powi(6) - 47.045881).abs() < 1e-6);
    }

    #[test]
    fn directions_are_unit() {
        for d in sample_directions(5, 8) {
            assert!((d.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-14);
        }
    }
}
