use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::RadialGrid;
use crate::barriers::conformal_laplacian_coefficient;
use crate::cones::{cone_margin, CurvatureFunction};
use crate::conformal::EigenvalueVector;
use crate::error::{arg, domain, Error, Result};

/// Nodal values of a zonal conformal factor `u(θ)` on the round sphere.
#[derive(Clone, Debug)]
pub struct RadialProfile {
    pub grid: Arc<RadialGrid>,
    pub values: Vec<f64>,
}

impl RadialProfile {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return arg(format!("{} values for {} nodes", values.len(), grid.len()));
        }
        Ok(RadialProfile { grid, values })
    }

    pub fn from_fn(grid: Arc<RadialGrid>, u: impl Fn(f64) -> f64) -> Self {
        let values = grid.theta.iter().map(|&t| u(t)).collect();
        RadialProfile { grid, values }
    }

    pub fn constant(grid: Arc<RadialGrid>, c: f64) -> Self {
        Self::from_fn(grid, |_| c)
    }

    pub fn n(&self) -> usize {
        self.grid.n
    }

    pub fn theta(&self) -> &[f64] {
        &self.grid.theta
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `(u', u'')` at every node.
    pub fn derivatives(&self) -> (Vec<f64>, Vec<f64>) {
        derivatives(&self.grid, &self.values)
    }

    /// Two-column `θ u` text, one node per line.
    pub fn write_text(&self, mut w: impl std::io::Write) -> std::io::Result<()> {
        writeln!(w, "# theta u")?;
        for (t, u) in self.theta().iter().zip(&self.values) {
            writeln!(w, "{t:.17e} {u:.17e}")?;
        }
        Ok(())
    }
}

pub(crate) fn derivatives(grid: &RadialGrid, u: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let v = DVector::from_column_slice(u);
    let d1 = &grid.d1 * &v;
    let d2 = &grid.d2 * &v;
    (d1.iter().copied().collect(), d2.iter().copied().collect())
}

/// Radial and tangential Schouten eigenvalues of `u^{4/(n-2)} g_{𝕊ⁿ}`
/// relative to that metric, from `u`, `u'`, `u''` at polar angle `θ`.
///
/// At a pole `cot θ · u'` is replaced by its limit `u''`.
pub fn zonal_eigenvalues(
    n: usize,
    theta: f64,
    pole: bool,
    u: f64,
    du: f64,
    ddu: f64,
) -> (f64, f64) {
    let m = n as f64 - 2.0;
    let q = du / u;
    let tangential = if pole {
        ddu
    } else {
        theta.cos() / theta.sin() * du
    };
    let scale = u.powf(-4.0 / m);
    let radial = -(2.0 / m) * ddu / u + (2.0 * (n as f64 - 1.0) / (m * m)) * q * q + 0.5;
    let tang = -(2.0 / m) * tangential / u - (2.0 / (m * m)) * q * q + 0.5;
    (radial * scale, tang * scale)
}

fn spread(n: usize, radial: f64, tangential: f64) -> Vec<f64> {
    let mut l = vec![tangential; n];
    l[0] = radial;
    l
}

/// All `n` eigenvalues of `A_{g_u}` relative to `g_u` at node `j`.
pub fn radial_schouten_eigs(profile: &RadialProfile, j: usize) -> Result<EigenvalueVector> {
    let g = &profile.grid;
    if j >= g.len() {
        return arg(format!("node {j} out of range"));
    }
    let u = profile.values[j];
    if !(u > 0.0) {
        return domain(format!("u = {u} is not positive at node {j}"));
    }
    let (d1, d2) = profile.derivatives();
    let (r, t) = zonal_eigenvalues(g.n, g.theta[j], g.is_pole(j), u, d1[j], d2[j]);
    Ok(EigenvalueVector::from_unsorted(spread(g.n, r, t)))
}

/// Smallest eigenvalue of `Ric_{g_u}` relative to `g_u`, from the Schouten
/// eigenvalues via `Ric = (n-2)A + σ₁(A) g`.
pub fn ricci_floor(n: usize, radial: f64, tangential: f64) -> f64 {
    let s1 = radial + (n as f64 - 1.0) * tangential;
    (n as f64 - 2.0) * radial.min(tangential) + s1
}

/// The equation families along the degree path.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    /// `f(λ(A_{g_u})) = ψ u^{-s}`
    Fs { s: f64 },
    /// `f_t(λ(A_{g_u})) = u^{-2/(n-2)}` on `Γ_t`
    Gt { t: f64 },
    /// `-Δu + [(1-t) + t c(n) R] u = [(1-t) ⨍u² + t] u^{p_t}`
    Ht { t: f64 },
}

impl Family {
    /// Subcritical exponent, where the family has one.
    pub fn s(&self, n: usize) -> Option<f64> {
        match *self {
            Family::Fs { s } => Some(s),
            Family::Gt { .. } => Some(2.0 / (n as f64 - 2.0)),
            Family::Ht { .. } => None,
        }
    }

    pub fn t(&self) -> Option<f64> {
        match *self {
            Family::Fs { .. } => Some(1.0),
            Family::Gt { t } | Family::Ht { t } => Some(t),
        }
    }

    pub fn uses_cone(&self) -> bool {
        !matches!(self, Family::Ht { .. })
    }

    /// Constant solution on the round sphere with `ψ ≡ 1`.
    pub fn constant_solution(&self, n: usize) -> Result<f64> {
        let nf = n as f64;
        match *self {
            Family::Fs { s } => {
                if (s - 4.0 / (nf - 2.0)).abs() < 1e-14 {
                    return domain("every constant solves the critical-exponent limit".to_string());
                }
                Ok(1.0)
            }
            Family::Gt { t } => Ok((t + (1.0 - t) * nf).powf((nf - 2.0) / 2.0)),
            Family::Ht { t } => ht_constant(n, t),
        }
    }
}

/// `u^{p-1} = (n(n-2)/4)` at `t = 1`; a bracketed root of the scalar
/// constant-solution equation otherwise.
fn ht_constant(n: usize, t: f64) -> Result<f64> {
    let nf = n as f64;
    let cr = conformal_laplacian_coefficient(n) * nf * (nf - 1.0);
    let p = nf / (nf - 2.0);
    let pt = (1.0 - t) + t * p;
    let lin = (1.0 - t) + t * cr;
    let h = |c: f64| lin * c - ((1.0 - t) * c * c + t) * c.powf(pt);
    if t == 1.0 {
        return Ok(cr.powf(1.0 / (p - 1.0)));
    }
    if t == 0.0 {
        return Ok(1.0);
    }
    // h > 0 near zero and h < 0 for large c
    let (mut lo, mut hi) = (1e-6, 1.0);
    while h(hi) > 0.0 {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::Numerical("no constant solution bracket".into()));
        }
    }
    while hi - lo > 1e-15 * hi {
        let mid = 0.5 * (lo + hi);
        if h(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Coefficient `κ` with `G₀[u] = (4/(n-2)) u^{-(n+2)/(n-2)} κ⁻¹ H₁[κu]`.
pub fn h1_rescaling(n: usize) -> f64 {
    let nf = n as f64;
    let p = nf / (nf - 2.0);
    ((nf - 2.0) / 4.0).powf(1.0 / (p - 1.0))
}

/// A radial equation on the round `𝕊ⁿ` with forcing `ψ`.
#[derive(Clone, Debug)]
pub struct RadialProblem {
    pub f: CurvatureFunction,
    pub grid: Arc<RadialGrid>,
    pub psi: Vec<f64>,
}

/// Per-node data of a profile under a family.
#[derive(Clone, Debug)]
pub struct NodeData {
    pub radial: Vec<f64>,
    pub tangential: Vec<f64>,
    /// `None` for families without a cone
    pub cone_margin: Option<Vec<f64>>,
}

/// Slack, relative to the eigenvalue scale `u^{-4/(n-2)}`, under which a node
/// on the closure of the cone is accepted.
const CLOSURE_SLACK: f64 = 1e-9;

impl RadialProblem {
    pub fn new(f: CurvatureFunction, grid: Arc<RadialGrid>) -> Result<Self> {
        if f.n() != grid.n {
            return arg(format!(
                "curvature function for n = {}, grid for n = {}",
                f.n(),
                grid.n
            ));
        }
        let psi = vec![1.0; grid.len()];
        Ok(RadialProblem { f, grid, psi })
    }

    pub fn with_forcing(mut self, psi: impl Fn(f64) -> f64) -> Self {
        self.psi = self.grid.theta.iter().map(|&t| psi(t)).collect();
        self
    }

    pub fn n(&self) -> usize {
        self.grid.n
    }

    pub fn curvature(&self, family: &Family) -> Result<CurvatureFunction> {
        match *family {
            Family::Fs { .. } | Family::Ht { .. } => Ok(self.f),
            Family::Gt { t } => self.f.homotopy(t),
        }
    }

    pub fn node_data(&self, family: &Family, u: &[f64]) -> Result<NodeData> {
        let g = &self.grid;
        let n = g.n;
        if let Some(j) = u.iter().position(|v| !(*v > 0.0)) {
            return domain(format!("u = {} is not positive at node {j}", u[j]));
        }
        let (d1, d2) = derivatives(g, u);
        let (mut radial, mut tangential) =
            (Vec::with_capacity(u.len()), Vec::with_capacity(u.len()));
        for j in 0..u.len() {
            let (r, t) = zonal_eigenvalues(n, g.theta[j], g.is_pole(j), u[j], d1[j], d2[j]);
            radial.push(r);
            tangential.push(t);
        }
        let cone_margin = if family.uses_cone() {
            let cone = self.curvature(family)?.cone;
            Some(
                radial
                    .iter()
                    .zip(&tangential)
                    .map(|(&r, &t)| cone_margin(&spread(n, r, t), &cone))
                    .collect(),
            )
        } else {
            None
        };
        Ok(NodeData {
            radial,
            tangential,
            cone_margin,
        })
    }

    /// Nodewise residual; nodes must lie strictly inside the cone.
    pub fn residual(&self, family: &Family, u: &[f64]) -> Result<Vec<f64>> {
        self.residual_with(family, u, false)
    }

    /// As [`residual`](Self::residual), additionally accepting nodes on the
    /// boundary of the cone up to round-off.
    pub fn residual_closure(&self, family: &Family, u: &[f64]) -> Result<Vec<f64>> {
        self.residual_with(family, u, true)
    }

    fn residual_with(&self, family: &Family, u: &[f64], closure: bool) -> Result<Vec<f64>> {
        if u.len() != self.grid.len() {
            return arg(format!("{} values for {} nodes", u.len(), self.grid.len()));
        }
        match *family {
            Family::Ht { t } => ht_residual_values(&self.grid, u, t),
            Family::Fs { .. } | Family::Gt { .. } => {
                let s = family.s(self.n()).unwrap_or(0.0);
                let f = self.curvature(family)?;
                if let Some(j) = u.iter().position(|v| !(*v > 0.0)) {
                    return domain(format!("u = {} is not positive at node {j}", u[j]));
                }
                let (d1, d2) = derivatives(&self.grid, u);
                (0..u.len())
                    .map(|j| self.pointwise(&f, s, j, [u[j], d1[j], d2[j]], closure))
                    .collect()
            }
        }
    }

    /// Residual at node `j` from its jet `[u, u', u'']`.
    fn pointwise(
        &self,
        f: &CurvatureFunction,
        s: f64,
        j: usize,
        jet: [f64; 3],
        closure: bool,
    ) -> Result<f64> {
        let g = &self.grid;
        let n = g.n;
        let [u, du, ddu] = jet;
        if !(u > 0.0) {
            return domain(format!("u = {u} is not positive at node {j}"));
        }
        let (r, t) = zonal_eigenvalues(n, g.theta[j], g.is_pole(j), u, du, ddu);
        let lambda = spread(n, r, t);
        let m = cone_margin(&lambda, &f.cone);
        let slack = if closure {
            CLOSURE_SLACK * u.powf(-4.0 / (n as f64 - 2.0))
        } else {
            0.0
        };
        if !(m > 0.0 || (closure && m >= -slack)) {
            return Err(Error::ConeExit { node: j, margin: m });
        }
        Ok(f.eval_unchecked(&lambda) - self.psi[j] * u.powf(-s))
    }

    /// Jacobian of a cone-family residual, `diag(a) + diag(b) D1 + diag(c) D2`,
    /// with the nodewise partials `(a, b, c)` taken by forward differences in
    /// `(u, u', u'')`; a step that leaves the cone is taken backwards instead.
    ///
    /// Differencing the jet rather than the nodal values keeps the step's
    /// effect on the eigenvalues independent of the grid spacing.
    pub fn cone_jacobian(&self, family: &Family, u: &[f64], h_rel: f64) -> Result<DMatrix<f64>> {
        if !family.uses_cone() {
            return arg(format!("{family:?} has no cone"));
        }
        let s = family.s(self.n()).unwrap_or(0.0);
        let f = self.curvature(family)?;
        let (d1, d2) = derivatives(&self.grid, u);
        let m = u.len();
        let partials: Vec<Result<[f64; 3]>> = (0..m)
            .into_par_iter()
            .map(|j| {
                let jet = [u[j], d1[j], d2[j]];
                let base = self.pointwise(&f, s, j, jet, true)?;
                let mut out = [0.0; 3];
                for (c, slot) in out.iter_mut().enumerate() {
                    let h = h_rel * (1.0 + jet[c].abs());
                    let mut last = None;
                    for sign in [1.0, -1.0] {
                        let mut moved = jet;
                        moved[c] += sign * h;
                        match self.pointwise(&f, s, j, moved, true) {
                            Ok(v) => {
                                *slot = (v - base) / (sign * h);
                                last = None;
                                break;
                            }
                            Err(e) => last = Some(e),
                        }
                    }
                    if let Some(e) = last {
                        return Err(e);
                    }
                }
                Ok(out)
            })
            .collect();
        let mut jac = DMatrix::zeros(m, m);
        for (i, p) in partials.into_iter().enumerate() {
            let [a, b, c] = p?;
            for j in 0..m {
                jac[(i, j)] = b * self.grid.d1[(i, j)] + c * self.grid.d2[(i, j)];
            }
            jac[(i, i)] += a;
        }
        Ok(jac)
    }
}

/// `f(λ(A_{g_u})) - ψ u^{-s}` at every node of `profile`.
pub fn residual_fs(
    profile: &RadialProfile,
    f: &CurvatureFunction,
    s: f64,
    psi: &[f64],
) -> Result<Vec<f64>> {
    let p = RadialProblem {
        f: *f,
        grid: profile.grid.clone(),
        psi: psi.to_vec(),
    };
    if psi.len() != profile.values.len() {
        return arg(format!(
            "{} forcing values for {} nodes",
            psi.len(),
            profile.values.len()
        ));
    }
    p.residual(&Family::Fs { s }, &profile.values)
}

/// `H_t[u]` at every node of `profile`.
pub fn ht_residual(profile: &RadialProfile, t: f64) -> Result<Vec<f64>> {
    ht_residual_values(&profile.grid, &profile.values, t)
}

fn ht_residual_values(grid: &RadialGrid, u: &[f64], t: f64) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&t) {
        return arg(format!("t = {t} outside [0, 1]"));
    }
    if let Some(j) = u.iter().position(|v| !(*v > 0.0)) {
        return domain(format!("u = {} is not positive at node {j}", u[j]));
    }
    let n = grid.n;
    let nf = n as f64;
    let r = nf * (nf - 1.0);
    let p = nf / (nf - 2.0);
    let pt = (1.0 - t) + t * p;
    let lin = (1.0 - t) + t * conformal_laplacian_coefficient(n) * r;
    let sq: Vec<f64> = u.iter().map(|v| v * v).collect();
    let coef = (1.0 - t) * grid.mean(&sq) + t;
    let lap = &grid.lap * DVector::from_column_slice(u);
    Ok(u.iter()
        .zip(lap.iter())
        .map(|(&v, &l)| -l + lin * v - coef * v.powf(pt))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::grid::GridKind;

    #[test]
    fn constant_profiles() {
        for n in 3..=5 {
            let g = Arc::new(RadialGrid::new(GridKind::Uniform, 16, n).unwrap());
            let p = RadialProfile::constant(g.clone(), 1.0);
            let e = radial_schouten_eigs(&p, 3).unwrap();
            assert!(e.as_slice().iter().all(|l| (l - 0.5).abs() < 1e-12));
            let c: f64 = 1.7;
            let p = RadialProfile::constant(g, c);
            let e = radial_schouten_eigs(&p, 0).unwrap();
            let expect = 0.5 * c.powf(-4.0 / (n as f64 - 2.0));
            assert!(e.as_slice().iter().all(|l| (l - expect).abs() < 1e-12));
        }
    }

    #[test]
    fn cone_jacobian_matches_column_differences() {
        let f = crate::cones::CurvatureFunction::sigma_root(4, 2).unwrap();
        let g = Arc::new(RadialGrid::new(GridKind::Uniform, 12, 4).unwrap());
        let p = RadialProblem::new(f, g.clone()).unwrap();
        let fam = Family::Fs { s: 0.5 };
        let u: Vec<f64> = g.theta.iter().map(|t| 1.0 + 0.1 * t.cos()).collect();
        let jac = p.cone_jacobian(&fam, &u, 1e-7).unwrap();
        let h = 1e-6;
        for j in 0..u.len() {
            let (mut up, mut dn) = (u.clone(), u.clone());
            up[j] += h;
            dn[j] -= h;
            let (rp, rm) = (
                p.residual(&fam, &up).unwrap(),
                p.residual(&fam, &dn).unwrap(),
            );
            for i in 0..u.len() {
                let col = (rp[i] - rm[i]) / (2.0 * h);
                assert!(
                    (jac[(i, j)] - col).abs() < 1e-4 * (1.0 + col.abs()),
                    "({i},{j})"
                );
            }
        }
    }

    #[test]
    fn ht_constants_solve_their_equations() {
        for n in 3..=5 {
            let g = Arc::new(RadialGrid::new(GridKind::Uniform, 8, n).unwrap());
            for t in [0.0, 0.3, 0.8, 1.0] {
                let c = Family::Ht { t }.constant_solution(n).unwrap();
                let r = ht_residual(&RadialProfile::constant(g.clone(), c), t).unwrap();
                assert!(
                    r.iter().all(|v| v.abs() < 1e-10 * c.max(1.0)),
                    "n={n} t={t} {r:?}"
                );
            }
        }
    }

    #[test]
    fn nonpositive_profile_is_rejected() {
        let g = Arc::new(RadialGrid::new(GridKind::Uniform, 8, 3).unwrap());
        let p = RadialProfile::from_fn(g, |t| t.cos());
        assert!(radial_schouten_eigs(&p, 8).is_err());
        assert!(ht_residual(&p, 0.5).is_err());
    }
}
