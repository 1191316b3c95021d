//! Campaign files.
//!
//! A campaign file is TOML with optional top-level `out` and `seed` keys and
//! one `[[campaign]]` table per campaign. Each campaign names a `command`,
//! the dimensions and cone indices it covers, and an optional parameter table
//! for that command. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sigmak_core::barriers::Background;
use sigmak_core::solver::GridKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Command {
    #[serde(rename = "cones mu-plus")]
    MuPlus,
    #[serde(rename = "verify bubble")]
    Bubble,
    #[serde(rename = "verify barrier-sub")]
    BarrierSub,
    #[serde(rename = "verify barrier-super")]
    BarrierSuper,
    #[serde(rename = "verify gershgorin")]
    Gershgorin,
    #[serde(rename = "verify suph")]
    Suph,
    #[serde(rename = "compare hawking")]
    Hawking,
    #[serde(rename = "compare bishop-gromov")]
    BishopGromov,
    #[serde(rename = "solve radial")]
    SolveRadial,
    #[serde(rename = "solve homotopy")]
    SolveHomotopy,
}

impl Command {
    pub const ALL: [Command; 10] = [
        Command::MuPlus,
        Command::Bubble,
        Command::BarrierSub,
        Command::BarrierSuper,
        Command::Gershgorin,
        Command::Suph,
        Command::Hawking,
        Command::BishopGromov,
        Command::SolveRadial,
        Command::SolveHomotopy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::MuPlus => "cones mu-plus",
            Command::Bubble => "verify bubble",
            Command::BarrierSub => "verify barrier-sub",
            Command::BarrierSuper => "verify barrier-super",
            Command::Gershgorin => "verify gershgorin",
            Command::Suph => "verify suph",
            Command::Hawking => "compare hawking",
            Command::BishopGromov => "compare bishop-gromov",
            Command::SolveRadial => "solve radial",
            Command::SolveHomotopy => "solve homotopy",
        }
    }

    /// Smallest dimension the command accepts.
    fn min_dim(self) -> usize {
        match self {
            Command::Gershgorin | Command::Hawking => 1,
            Command::BishopGromov => 2,
            _ => 3,
        }
    }

    fn uses_cones(self) -> bool {
        matches!(
            self,
            Command::MuPlus
                | Command::Bubble
                | Command::BarrierSub
                | Command::BarrierSuper
                | Command::SolveRadial
                | Command::SolveHomotopy
        )
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    /// Report directory, relative to the working directory
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    #[serde(default, rename = "campaign")]
    pub campaigns: Vec<Campaign>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Campaign {
    pub id: String,
    pub command: Command,
    #[serde(default)]
    pub dims: Vec<usize>,
    /// Cone indices `k`; empty means every `k ≤ n` the command accepts
    #[serde(default)]
    pub cones: Vec<usize>,
    /// Overrides the command's default assertion tolerance
    pub tolerance: Option<f64>,
    /// Campaigns meant as negative controls set this to `false`
    #[serde(default = "yes")]
    pub expect_pass: bool,
    #[serde(default)]
    pub bubble: BubbleParams,
    #[serde(default)]
    pub sweep: SweepParams,
    #[serde(default)]
    pub gershgorin: GershgorinParams,
    #[serde(default)]
    pub suph: SuphParams,
    #[serde(default)]
    pub hawking: HawkingParams,
    #[serde(default)]
    pub bishop_gromov: BishopGromovParams,
    #[serde(default)]
    pub solver: SolverParams,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Derivatives {
    Analytic,
    FiniteDifference,
    Both,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BubbleParams {
    pub bubbles: usize,
    pub samples: usize,
    pub a_min: f64,
    pub a_max: f64,
    /// centres are drawn from the cube `[-p_box, p_box]ⁿ`
    pub p_box: f64,
    pub derivatives: Derivatives,
    pub fd_step: f64,
}

impl Default for BubbleParams {
    fn default() -> Self {
        BubbleParams {
            bubbles: 20,
            samples: 10,
            a_min: 0.1,
            a_max: 10.0,
            p_box: 5.0,
            derivatives: Derivatives::Both,
            fd_step: 1e-4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepParams {
    pub deltas: Vec<f64>,
    /// Empty means three exponents spread inside `(1, min(μ⁺, 2))`
    pub mus: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub r_min: f64,
    pub r_start: f64,
    pub r_floor: f64,
    pub r_nodes: usize,
    pub directions: usize,
    pub background: Background,
}

impl Default for SweepParams {
    fn default() -> Self {
        SweepParams {
            deltas: vec![0.01, 0.05, 0.1, 0.2],
            mus: Vec::new(),
            epsilons: vec![1e-3, 0.1, 0.9],
            r_min: 1e-4,
            r_start: 0.5,
            r_floor: 1e-3,
            r_nodes: 64,
            directions: 8,
            background: Background::SphereNormal,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GershgorinParams {
    pub pairs: usize,
    /// perturbation sizes are drawn log-uniformly from `[10^lo, 10^hi]`
    pub log10_scale: (f64, f64),
}

impl Default for GershgorinParams {
    fn default() -> Self {
        GershgorinParams {
            pairs: 1000,
            log10_scale: (-8.0, 0.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SuphParams {
    /// coefficient of the `r^{5/2-n}` correction
    pub k: f64,
    pub delta: f64,
    pub r_inner: f64,
    pub nodes: usize,
    pub background: Background,
}

impl Default for SuphParams {
    fn default() -> Self {
        SuphParams {
            k: 1.0,
            delta: 0.1,
            r_inner: 1e-3,
            nodes: 24,
            background: Background::SphereNormal,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HawkingParams {
    pub alphas: Vec<f64>,
    pub c0s: Vec<f64>,
    /// radii of the Euclidean and hyperbolic equality balls
    pub ball_radii: Vec<f64>,
}

impl Default for HawkingParams {
    fn default() -> Self {
        HawkingParams {
            alphas: vec![0.0, 0.5, 1.0],
            c0s: vec![1.5, 2.0, 3.0, 5.0],
            ball_radii: vec![0.2, 1.0, 3.7],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VolumeSource {
    /// the unit round sphere
    Sphere,
    /// the model space itself
    Model,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BishopGromovParams {
    /// model spaces have `Ric ≥ -(n-1)α²`
    pub alpha: f64,
    pub sources: Vec<VolumeSource>,
    pub radii: Vec<f64>,
}

impl Default for BishopGromovParams {
    fn default() -> Self {
        BishopGromovParams {
            alpha: 0.0,
            sources: vec![VolumeSource::Sphere, VolumeSource::Model],
            radii: vec![0.1, 0.25, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HomotopyPath {
    Gt,
    Ht,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverParams {
    pub grid: GridKind,
    pub nodes: usize,
    /// start profile `1 + amplitude·cos θ`
    pub amplitude: f64,
    pub steps: usize,
    pub newton_tol: f64,
    pub max_iter: usize,
    pub path: HomotopyPath,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            grid: GridKind::Uniform,
            nodes: 64,
            amplitude: 0.2,
            steps: 20,
            newton_tol: 1e-10,
            max_iter: 50,
            path: HomotopyPath::Gt,
        }
    }
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

impl CampaignConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| ConfigError(format!("{}: {}", path.display(), e.0)))
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: CampaignConfig = toml::from_str(text).map_err(|e| ConfigError(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut seen = std::collections::BTreeSet::new();
        for (i, c) in self.campaigns.iter().enumerate() {
            let at = |msg: String| ConfigError(format!("campaign[{i}] ({}): {msg}", c.id));
            if c.id.is_empty()
                || !c
                    .id
                    .chars()
                    .all(|ch| ch.is_ascii_alphanumeric() || "-_.".contains(ch))
            {
                return Err(at("id must be nonempty and use only [A-Za-z0-9._-]".into()));
            }
            if !seen.insert(c.id.as_str()) {
                return Err(at("duplicate id".into()));
            }
            if c.dims.is_empty() && c.command != Command::Hawking {
                return Err(at("field `dims` must list at least one dimension".into()));
            }
            if let Some(&n) = c.dims.iter().find(|&&n| n < c.command.min_dim()) {
                return Err(at(format!(
                    "field `dims`: n = {n} is below {} for {}",
                    c.command.min_dim(),
                    c.command.name()
                )));
            }
            if c.command.uses_cones() {
                let nmax = c.dims.iter().copied().max().unwrap_or(0);
                if let Some(&k) = c.cones.iter().find(|&&k| k == 0 || k > nmax) {
                    return Err(at(format!("field `cones`: k = {k} is outside 1..={nmax}")));
                }
            } else if !c.cones.is_empty() {
                return Err(at(format!(
                    "field `cones` is not used by {}",
                    c.command.name()
                )));
            }
            if let Some(t) = c.tolerance {
                if !(t > 0.0 && t.is_finite()) {
                    return Err(at(format!("field `tolerance` = {t} must be positive")));
                }
            }
            c.check_params().map_err(at)?;
        }
        Ok(())
    }
}

impl Campaign {
    fn check_params(&self) -> Result<(), String> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(format!("field `{name}` = {v} must be positive"))
            }
        };
        match self.command {
            Command::Bubble => {
                let b = &self.bubble;
                positive("bubble.a_min", b.a_min)?;
                positive("bubble.fd_step", b.fd_step)?;
                positive("bubble.p_box", b.p_box)?;
                if !(b.a_max >= b.a_min) {
                    return Err("field `bubble.a_max` must be at least `bubble.a_min`".into());
                }
                if b.bubbles == 0 || b.samples == 0 {
                    return Err(
                        "fields `bubble.bubbles` and `bubble.samples` must be positive".into(),
                    );
                }
            }
            Command::Gershgorin => {
                let (lo, hi) = self.gershgorin.log10_scale;
                if !(lo <= hi && hi <= 2.0) {
                    return Err(
                        "field `gershgorin.log10_scale` must be [lo, hi] with lo <= hi <= 2".into(),
                    );
                }
            }
            Command::Suph => {
                let s = &self.suph;
                positive("suph.k", s.k)?;
                positive("suph.r_inner", s.r_inner)?;
                if !(s.delta > s.r_inner) {
                    return Err("field `suph.delta` must exceed `suph.r_inner`".into());
                }
            }
            Command::Hawking => {
                let h = &self.hawking;
                if let Some(a) = h.alphas.iter().find(|a| !(**a >= 0.0)) {
                    return Err(format!("field `hawking.alphas`: {a} must be nonnegative"));
                }
                for &c in &h.c0s {
                    positive("hawking.c0s", c)?;
                }
                for &r in &h.ball_radii {
                    positive("hawking.ball_radii", r)?;
                }
            }
            Command::BishopGromov => {
                let b = &self.bishop_gromov;
                if !(b.alpha >= 0.0) {
                    return Err("field `bishop_gromov.alpha` must be nonnegative".into());
                }
                if b.radii.len() < 2
                    || b.radii.windows(2).any(|w| !(w[1] > w[0]))
                    || !(b.radii[0] > 0.0)
                {
                    return Err("field `bishop_gromov.radii` must be at least two increasing positive radii".into());
                }
                if b.sources.contains(&VolumeSource::Sphere)
                    && b.radii.last().is_some_and(|r| *r >= std::f64::consts::PI)
                {
                    return Err(
                        "field `bishop_gromov.radii` must stay below π for the sphere".into(),
                    );
                }
            }
            Command::SolveRadial | Command::SolveHomotopy => {
                let s = &self.solver;
                positive("solver.newton_tol", s.newton_tol)?;
                if s.nodes < 4 || s.steps == 0 || s.max_iter == 0 {
                    return Err("fields `solver.nodes` >= 4, `solver.steps` and `solver.max_iter` >= 1 required".into());
                }
                if !(s.amplitude.abs() < 1.0) {
                    return Err("field `solver.amplitude` must lie in (-1, 1)".into());
                }
            }
            Command::MuPlus | Command::BarrierSub | Command::BarrierSuper => {}
        }
        Ok(())
    }

    /// `(n, k)` pairs the campaign covers.
    pub fn cone_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for &n in &self.dims {
            if self.cones.is_empty() {
                out.extend((1..=n).map(|k| (n, k)));
            } else {
                out.extend(self.cones.iter().filter(|&&k| k <= n).map(|&k| (n, k)));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_campaign_parses() {
        let cfg = CampaignConfig::parse(
            r#"
            seed = 3
            [[campaign]]
            id = "mu"
            command = "cones mu-plus"
            dims = [3, 4]
            "#,
        )
        .unwrap();
        assert_eq!(cfg.campaigns[0].command, Command::MuPlus);
        assert_eq!(cfg.campaigns[0].cone_pairs().len(), 7);
    }

    #[test]
    fn unknown_field_names_the_line() {
        let err = CampaignConfig::parse(
            "[[campaign]]\nid = \"x\"\ncommand = \"cones mu-plus\"\ndims = [3]\nbogus = 1\n",
        )
        .unwrap_err();
        assert!(err.0.contains("bogus") && err.0.contains("line 5"), "{err}");
    }

    #[test]
    fn cone_index_is_checked() {
        let err = CampaignConfig::parse(
            "[[campaign]]\nid = \"x\"\ncommand = \"solve radial\"\ndims = [3]\ncones = [4]\n",
        )
        .unwrap_err();
        assert!(err.0.contains("cones"), "{err}");
    }

    #[test]
    fn every_command_name_round_trips() {
        for c in Command::ALL {
            let text = format!(
                "[[campaign]]\nid = \"x\"\ncommand = \"{}\"\ndims = [3]\n",
                c.name()
            );
            assert_eq!(
                CampaignConfig::parse(&text).unwrap().campaigns[0].command,
                c
            );
        }
    }
}
