use serde::{Deserialize, Serialize};

use super::newton::ContinuationState;
use super::radial::Family;

/// Margin level below which a state is flagged as approaching blow-up.
pub const DEFAULT_MARGIN_FLOOR: f64 = 1e-3;

/// Path summary of the quantities the a-priori estimates bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginReport {
    pub states: usize,
    pub max_abs_ln_u: f64,
    pub max_c1_ln_u: f64,
    pub max_c2_ln_u: f64,
    pub min_cone_margin: Option<f64>,
    pub min_ricci_margin: f64,
    /// range of `σ^{1/(p_t-1)} u` over semilinear states with `t > 0`,
    /// where `σ = (1-t)⨍u² + t`
    pub semilinear_band: Option<(f64, f64)>,
    pub warnings: Vec<String>,
}

pub fn apriori_margins(states: &[ContinuationState], floor: f64) -> MarginReport {
    let mut r = MarginReport {
        states: states.len(),
        max_abs_ln_u: 0.0,
        max_c1_ln_u: 0.0,
        max_c2_ln_u: 0.0,
        min_cone_margin: None,
        min_ricci_margin: f64::INFINITY,
        semilinear_band: None,
        warnings: vec![],
    };
    for (i, st) in states.iter().enumerate() {
        let m = &st.margins;
        r.max_abs_ln_u = r.max_abs_ln_u.max(m.max_abs_ln_u);
        r.max_c1_ln_u = r.max_c1_ln_u.max(m.c1_ln_u);
        r.max_c2_ln_u = r.max_c2_ln_u.max(m.c2_ln_u);
        r.min_ricci_margin = r.min_ricci_margin.min(m.min_ricci_margin);
        if let Some(c) = m.min_cone_margin {
            r.min_cone_margin = Some(r.min_cone_margin.map_or(c, |x| x.min(c)));
            if c < floor {
                r.warnings.push(format!(
                    "state {i} ({:?}): cone margin {c:e} below floor {floor:e}",
                    st.family
                ));
            }
        }
        if m.min_u < floor {
            r.warnings.push(format!(
                "state {i} ({:?}): min u {:e} below floor {floor:e}",
                st.family, m.min_u
            ));
        }
        if let Family::Ht { t } = st.family {
            if t > 0.0 {
                let grid = &st.profile.grid;
                let n = grid.n as f64;
                let pt = 1.0 + t * (n / (n - 2.0) - 1.0);
                let sq: Vec<f64> = st.profile.values.iter().map(|v| v * v).collect();
                let sigma = (1.0 - t) * grid.mean(&sq) + t;
                let f = sigma.powf(1.0 / (pt - 1.0));
                let (lo, hi) = (f * m.min_u, f * m.max_u);
                r.semilinear_band = Some(match r.semilinear_band {
                    None => (lo, hi),
                    Some((a, b)) => (a.min(lo), b.max(hi)),
                });
            }
        }
    }
    if states.is_empty() {
        r.min_ricci_margin = f64::NAN;
    }
    r
}

/// One line of a solve transcript.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranscriptRow {
    pub step: usize,
    pub s: Option<f64>,
    pub t: Option<f64>,
    pub residual: f64,
    pub min_u: f64,
    pub max_u: f64,
    pub cone_margin: Option<f64>,
}

pub fn transcript(states: &[ContinuationState]) -> Vec<TranscriptRow> {
    states
        .iter()
        .enumerate()
        .map(|(step, st)| TranscriptRow {
            step,
            s: st.family.s(st.profile.n()),
            t: st.family.t(),
            residual: st.residual_norm,
            min_u: st.margins.min_u,
            max_u: st.margins.max_u,
            cone_margin: st.margins.min_cone_margin,
        })
        .collect()
}
