use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::radial::{ricci_floor, Family, RadialProblem, RadialProfile};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NewtonOptions {
    /// acceptance threshold on the max-norm of the residual
    pub tol: f64,
    pub max_iter: usize,
    /// relative finite-difference step
    pub fd_step: f64,
    /// smallest damping factor tried before giving up
    pub min_damping: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            tol: 1e-10,
            max_iter: 50,
            fd_step: 1e-7,
            min_damping: 1e-6,
        }
    }
}

#[derive(Clone, Debug)]
pub struct NewtonOutcome {
    pub values: Vec<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Forward-difference Jacobian by columns.
fn column_jacobian(
    problem: &RadialProblem,
    family: &Family,
    u: &[f64],
    r0: &[f64],
    h_rel: f64,
) -> Result<DMatrix<f64>> {
    let m = u.len();
    let cols: Vec<Result<Vec<f64>>> = (0..m)
        .into_par_iter()
        .map(|j| {
            let h = h_rel * (1.0 + u[j].abs());
            let mut last = None;
            for sign in [1.0, -1.0] {
                let mut v = u.to_vec();
                v[j] += sign * h;
                match problem.residual_closure(family, &v) {
                    Ok(r) => {
                        return Ok(r
                            .iter()
                            .zip(r0)
                            .map(|(a, b)| (a - b) / (sign * h))
                            .collect())
                    }
                    Err(e) => last = Some(e),
                }
            }
            Err(last.expect("two attempts"))
        })
        .collect();
    let mut jac = DMatrix::zeros(m, m);
    for (j, col) in cols.into_iter().enumerate() {
        jac.set_column(j, &DVector::from_vec(col?));
    }
    Ok(jac)
}

/// Damped Newton iteration for `family` on `problem` from `start`.
///
/// The starting point may sit on the boundary of the cone; every later
/// iterate must lie strictly inside it.
pub fn newton_solve(
    problem: &RadialProblem,
    family: &Family,
    start: &[f64],
    opts: &NewtonOptions,
) -> Result<NewtonOutcome> {
    let mut u = start.to_vec();
    let mut r = problem.residual_closure(family, &u)?;
    let mut norm = max_norm(&r);
    let mut iterations = 0;
    while norm > opts.tol {
        if iterations == opts.max_iter {
            return Err(Error::Numerical(format!(
                "Newton did not converge in {} iterations (residual {norm:e})",
                opts.max_iter
            )));
        }
        let jac = if family.uses_cone() {
            problem.cone_jacobian(family, &u, opts.fd_step)?
        } else {
            column_jacobian(problem, family, &u, &r, opts.fd_step)?
        };
        let step = jac
            .lu()
            .solve(&DVector::from_column_slice(&r))
            .ok_or_else(|| Error::Numerical("singular Jacobian".into()))?;
        let mut alpha = 1.0;
        loop {
            let trial: Vec<f64> = u
                .iter()
                .zip(step.iter())
                .map(|(a, d)| a - alpha * d)
                .collect();
            if let Ok(rt) = problem.residual(family, &trial) {
                let nt = max_norm(&rt);
                if nt <= (1.0 - 1e-4 * alpha) * norm {
                    u = trial;
                    r = rt;
                    norm = nt;
                    break;
                }
            }
            alpha *= 0.5;
            if alpha < opts.min_damping {
                return Err(Error::Numerical(format!(
                    "line search stalled at residual {norm:e}"
                )));
            }
        }
        iterations += 1;
    }
    Ok(NewtonOutcome {
        values: u,
        residual_norm: norm,
        iterations,
    })
}

/// Extremes of a profile along with the geometric margins the a-priori
/// estimates control.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginRecord {
    /// `None` for families without a cone
    pub min_cone_margin: Option<f64>,
    pub min_u: f64,
    pub max_u: f64,
    pub max_abs_ln_u: f64,
    /// `max |(ln u)'|`
    pub c1_ln_u: f64,
    /// `max |(ln u)''|`
    pub c2_ln_u: f64,
    /// smallest Ricci eigenvalue of `g_u` relative to `g_u`
    pub min_ricci_margin: f64,
}

impl MarginRecord {
    pub fn measure(problem: &RadialProblem, family: &Family, u: &[f64]) -> Result<Self> {
        let data = problem.node_data(family, u)?;
        let ln: Vec<f64> = u.iter().map(|v| v.ln()).collect();
        let (d1, d2) = super::radial::derivatives(&problem.grid, &ln);
        let n = problem.n();
        Ok(MarginRecord {
            min_cone_margin: data
                .cone_margin
                .map(|m| m.into_iter().fold(f64::INFINITY, f64::min)),
            min_u: u.iter().cloned().fold(f64::INFINITY, f64::min),
            max_u: u.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            max_abs_ln_u: max_norm(&ln),
            c1_ln_u: max_norm(&d1),
            c2_ln_u: max_norm(&d2),
            min_ricci_margin: data
                .radial
                .iter()
                .zip(&data.tangential)
                .map(|(&r, &t)| ricci_floor(n, r, t))
                .fold(f64::INFINITY, f64::min),
        })
    }

    pub fn is_finite(&self) -> bool {
        [
            self.min_u,
            self.max_u,
            self.max_abs_ln_u,
            self.c1_ln_u,
            self.c2_ln_u,
            self.min_ricci_margin,
        ]
        .iter()
        .chain(self.min_cone_margin.iter())
        .all(|v| v.is_finite())
    }
}

/// An accepted point on a continuation path.
#[derive(Clone, Debug)]
pub struct ContinuationState {
    pub family: Family,
    pub profile: RadialProfile,
    pub residual_norm: f64,
    pub iterations: usize,
    pub margins: MarginRecord,
}

impl ContinuationState {
    /// Evaluates `profile` under `family` without iterating.
    pub fn at(problem: &RadialProblem, family: Family, profile: RadialProfile) -> Result<Self> {
        let r = problem.residual_closure(&family, &profile.values)?;
        let margins = MarginRecord::measure(problem, &family, &profile.values)?;
        Ok(ContinuationState {
            family,
            residual_norm: max_norm(&r),
            iterations: 0,
            margins,
            profile,
        })
    }

    /// Solves `family` from `profile` and records the result.
    pub fn solve(
        problem: &RadialProblem,
        family: Family,
        profile: &RadialProfile,
        opts: &NewtonOptions,
    ) -> Result<Self> {
        let out = newton_solve(problem, &family, &profile.values, opts)?;
        let margins = MarginRecord::measure(problem, &family, &out.values)?;
        if let Some(m) = margins.min_cone_margin {
            if !(m > 0.0) {
                let node = problem
                    .node_data(&family, &out.values)?
                    .cone_margin
                    .and_then(|v| v.iter().position(|x| !(*x > 0.0)))
                    .unwrap_or(0);
                return Err(Error::ConeExit { node, margin: m });
            }
        }
        Ok(ContinuationState {
            family,
            profile: RadialProfile::new(profile.grid.clone(), out.values)?,
            residual_norm: out.residual_norm,
            iterations: out.iterations,
            margins,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathKind {
    Fs,
    Gt,
    Ht,
}

impl PathKind {
    pub fn family(self, value: f64) -> Family {
        match self {
            PathKind::Fs => Family::Fs { s: value },
            PathKind::Gt => Family::Gt { t: value },
            PathKind::Ht => Family::Ht { t: value },
        }
    }
}

/// Parameter values visited in order by one leg of a continuation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub kind: PathKind,
    pub values: Vec<f64>,
}

impl Schedule {
    pub fn uniform(kind: PathKind, from: f64, to: f64, steps: usize) -> Self {
        let values = (0..=steps)
            .map(|i| from + (to - from) * i as f64 / steps.max(1) as f64)
            .collect();
        Schedule { kind, values }
    }

    /// `s` from `2/(n-2)` down to zero.
    pub fn s_path(n: usize, steps: usize) -> Self {
        Self::uniform(PathKind::Fs, 2.0 / (n as f64 - 2.0), 0.0, steps)
    }

    /// `t` from zero to one.
    pub fn t_path(kind: PathKind, steps: usize) -> Self {
        Self::uniform(kind, 0.0, 1.0, steps)
    }
}

/// Smallest parameter increment tried before a leg is abandoned.
pub const MIN_STEP: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct ContinuationFailure {
    pub reason: Error,
    /// family whose solve failed
    pub at: Option<Family>,
    pub last_good: Option<ContinuationState>,
    /// states accepted before the failure
    pub states: Vec<ContinuationState>,
}

impl std::fmt::Display for ContinuationFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.at {
            Some(fam) => write!(f, "{} at {fam:?}", self.reason),
            None => write!(f, "{}", self.reason),
        }
    }
}

impl std::error::Error for ContinuationFailure {}

impl From<ContinuationFailure> for Error {
    fn from(f: ContinuationFailure) -> Self {
        Error::Continuation(f.to_string())
    }
}

/// Walks `schedules` from `start`, solving at each parameter value and
/// halving the increment after a rejected step.
///
/// The returned sequence begins with `start`; every further entry is an
/// accepted state with residual at most `opts.tol` and positive cone margin.
pub fn newton_continuation(
    problem: &RadialProblem,
    start: ContinuationState,
    schedules: &[Schedule],
    opts: &NewtonOptions,
) -> std::result::Result<Vec<ContinuationState>, Box<ContinuationFailure>> {
    let fail = |reason: Error, at: Option<Family>, states: Vec<ContinuationState>| {
        Box::new(ContinuationFailure {
            reason,
            at,
            last_good: states.last().cloned(),
            states,
        })
    };
    if !(start.residual_norm <= opts.tol) {
        let reason = Error::Continuation(format!(
            "start residual {:e} exceeds {:e}",
            start.residual_norm, opts.tol
        ));
        return Err(fail(reason, Some(start.family), vec![]));
    }
    let mut states = vec![start];
    for sched in schedules {
        let Some(&first) = sched.values.first() else {
            continue;
        };
        let mut current = states.last().expect("nonempty").clone();
        let family = sched.kind.family(first);
        if current.family != family {
            match ContinuationState::solve(problem, family, &current.profile, opts) {
                Ok(st) => {
                    current = st.clone();
                    states.push(st);
                }
                Err(e) => return Err(fail(e, Some(family), states)),
            }
        }
        let mut param = first;
        for &target in &sched.values[1..] {
            let mut step = target - param;
            while param != target {
                let next = if (target - param).abs() <= step.abs() {
                    target
                } else {
                    param + step
                };
                let family = sched.kind.family(next);
                match ContinuationState::solve(problem, family, &current.profile, opts) {
                    Ok(st) => {
                        param = next;
                        current = st.clone();
                        states.push(st);
                        step *= 2.0;
                    }
                    Err(e) => {
                        step *= 0.5;
                        if step.abs() < MIN_STEP {
                            let reason = Error::Continuation(format!(
                                "step underflow below {MIN_STEP:e}: {e}"
                            ));
                            return Err(fail(reason, Some(family), states));
                        }
                    }
                }
            }
        }
    }
    Ok(states)
}
