//! Campaign runner behind the `sigmak` binary.
//!
//! A campaign file lists campaigns; each runs one command over its
//! dimensions and cones, writes `<id>.csv` and `<id>.json` into the output
//! directory, and the run ends with `summary.json` merging them all.

pub mod campaigns;
pub mod config;
pub mod report;

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

pub use campaigns::Misconfigured;
use config::CampaignConfig;
use report::{CampaignReport, Summary};

pub const EXIT_PASS: u8 = 0;
pub const EXIT_FAIL: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

pub fn exit_code(summary: &Summary) -> u8 {
    if summary.pass {
        EXIT_PASS
    } else {
        EXIT_FAIL
    }
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub out: PathBuf,
    pub seed: u64,
    /// worker threads; `None` leaves the choice to the pool
    pub jobs: Option<usize>,
}

#[derive(Debug)]
pub struct RunResult {
    pub reports: Vec<CampaignReport>,
    pub summary: Summary,
}

#[derive(Debug)]
pub enum RunError {
    Config(String),
    Io(std::io::Error),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(m) => write!(f, "{m}"),
            RunError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e)
    }
}

/// Runs every campaign in `cfg` and writes the reports under `opts.out`.
pub fn run(cfg: &CampaignConfig, opts: &RunOptions) -> Result<RunResult, RunError> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = opts.jobs {
        pool = pool.num_threads(j);
    }
    let pool = pool
        .build()
        .map_err(|e| RunError::Config(format!("worker pool: {e}")))?;
    let outcomes: Vec<_> = pool.install(|| {
        cfg.campaigns
            .par_iter()
            .map(|c| {
                let t = Instant::now();
                let r = campaigns::run(c, opts.seed);
                (r, t.elapsed().as_secs_f64())
            })
            .collect()
    });

    std::fs::create_dir_all(&opts.out)?;
    let mut reports = Vec::with_capacity(outcomes.len());
    for (c, (outcome, secs)) in cfg.campaigns.iter().zip(outcomes) {
        let outcome =
            outcome.map_err(|m| RunError::Config(format!("campaign {}: {}", c.id, m.0)))?;
        let header = format!(
            "sigmak {} | {} | {} | seed {} | {}",
            env!("CARGO_PKG_VERSION"),
            c.id,
            c.command.name(),
            opts.seed,
            report::timestamp()
        );
        outcome
            .table
            .write(&opts.out.join(format!("{}.csv", c.id)), &header)?;
        for (name, text) in &outcome.attachments {
            std::fs::write(opts.out.join(name), text)?;
        }
        let rep = CampaignReport::new(&c.id, c.command.name(), c.expect_pass, outcome.tally, secs);
        write_json(&opts.out.join(format!("{}.json", c.id)), &rep)?;
        reports.push(rep);
    }
    let summary = report::merge(&reports).expect("reports share the current schema");
    write_json(&opts.out.join("summary.json"), &summary)?;
    Ok(RunResult { reports, summary })
}

pub fn write_json(path: &Path, value: &impl serde::Serialize) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
    text.push('\n');
    std::fs::write(path, text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn synthetic(id: usize, pass: bool, expect_pass: bool) -> CampaignReport {
        let mut t = report::Tally::default();
        t.check(
            || format!("item of {id}"),
            pass,
            if pass { 1.0 } else { -1.0 },
        );
        CampaignReport::new(&format!("c{id}"), "cones mu-plus", expect_pass, t, 0.0)
    }

    proptest! {
        #[test]
        fn exit_code_contract(outcomes in proptest::collection::vec((any::<bool>(), any::<bool>()), 0..12)) {
            let reports: Vec<CampaignReport> = outcomes
                .iter()
                .enumerate()
                .map(|(i, &(pass, expect))| synthetic(i, pass, expect))
                .collect();
            let s = report::merge(&reports).unwrap();
            let all_as_expected = outcomes.iter().all(|(p, e)| p == e);
            prop_assert_eq!(exit_code(&s), if all_as_expected { EXIT_PASS } else { EXIT_FAIL });
            let named: Vec<String> = outcomes
                .iter()
                .enumerate()
                .filter(|(_, (p, e))| p != e)
                .map(|(i, _)| format!("c{i}"))
                .collect();
            prop_assert_eq!(s.failed_campaigns, named);
        }
    }
}
