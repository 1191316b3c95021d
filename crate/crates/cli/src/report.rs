use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// A CSV table whose cells are already formatted.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Table {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn extend(&mut self, other: Table) {
        self.rows.extend(other.rows);
    }

    /// Writes one `#` header line carrying `header`, then the body.
    pub fn write(&self, path: &Path, header: &str) -> std::io::Result<()> {
        let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(file, "# {header}")?;
        let mut w = csv::Writer::from_writer(file);
        w.write_record(&self.columns)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Shortest round-trip form, so equal values always print alike.
pub fn num(v: f64) -> String {
    format!("{v:e}")
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub fn flag(b: bool) -> String {
    b.to_string()
}

pub fn timestamp() -> String {
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!("generated at unix time {secs}")
}

/// Running count of assertions for one campaign.
///
/// A margin is positive when its assertion holds with room to spare.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Tally {
    pub assertions: usize,
    pub failed: Vec<String>,
    pub worst_margin: Option<f64>,
}

impl Tally {
    pub fn check(&mut self, item: impl FnOnce() -> String, pass: bool, margin: f64) {
        self.assertions += 1;
        if !pass {
            self.failed.push(item());
        }
        if margin.is_nan() {
            return;
        }
        self.worst_margin = Some(self.worst_margin.map_or(margin, |m| m.min(margin)));
    }

    pub fn fail(&mut self, item: String) {
        self.assertions += 1;
        self.failed.push(item);
    }

    pub fn absorb(&mut self, other: Tally) {
        self.assertions += other.assertions;
        self.failed.extend(other.failed);
        if let Some(m) = other.worst_margin {
            self.worst_margin = Some(self.worst_margin.map_or(m, |w| w.min(m)));
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub schema_version: u32,
    pub id: String,
    pub command: String,
    /// whether the assertions came out as the campaign expected
    pub pass: bool,
    pub expect_pass: bool,
    pub assertions: usize,
    pub failures: usize,
    pub worst_margin: Option<f64>,
    pub runtime_s: f64,
    pub failed_items: Vec<String>,
}

impl CampaignReport {
    pub fn new(id: &str, command: &str, expect_pass: bool, tally: Tally, runtime_s: f64) -> Self {
        let failures = tally.failed.len();
        CampaignReport {
            schema_version: SCHEMA_VERSION,
            id: id.to_string(),
            command: command.to_string(),
            pass: (failures == 0) == expect_pass,
            expect_pass,
            assertions: tally.assertions,
            failures,
            worst_margin: tally.worst_margin,
            runtime_s,
            failed_items: tally.failed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub pass: bool,
    pub campaigns: usize,
    pub passed: usize,
    pub failed: usize,
    pub assertions: usize,
    pub assertion_failures: usize,
    pub failed_campaigns: Vec<String>,
    pub worst_margin: Option<f64>,
    pub runtime_s: f64,
}

#[derive(Debug)]
pub struct SchemaMismatch {
    pub id: String,
    pub found: u32,
}

impl std::fmt::Display for SchemaMismatch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "report {} has schema version {}, expected {SCHEMA_VERSION}",
            self.id, self.found
        )
    }
}

impl std::error::Error for SchemaMismatch {}

/// Aggregates campaign reports. An empty list gives a passing, empty summary.
pub fn merge(reports: &[CampaignReport]) -> Result<Summary, SchemaMismatch> {
    if let Some(r) = reports.iter().find(|r| r.schema_version != SCHEMA_VERSION) {
        return Err(SchemaMismatch {
            id: r.id.clone(),
            found: r.schema_version,
        });
    }
    let failed_campaigns: Vec<String> = reports
        .iter()
        .filter(|r| !r.pass)
        .map(|r| r.id.clone())
        .collect();
    Ok(Summary {
        schema_version: SCHEMA_VERSION,
        pass: failed_campaigns.is_empty(),
        campaigns: reports.len(),
        passed: reports.len() - failed_campaigns.len(),
        failed: failed_campaigns.len(),
        assertions: reports.iter().map(|r| r.assertions).sum(),
        assertion_failures: reports.iter().map(|r| r.failures).sum(),
        worst_margin: reports
            .iter()
            .filter_map(|r| r.worst_margin)
            .reduce(f64::min),
        runtime_s: reports.iter().map(|r| r.runtime_s).sum(),
        failed_campaigns,
    })
}
