use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;
use sigmak_cli::config::CampaignConfig;
use sigmak_cli::report::{self, CampaignReport};
use sigmak_cli::{exit_code, run, write_json, RunError, RunOptions, EXIT_FAIL, EXIT_USAGE};

#[derive(Parser, Debug)]
#[command(version, about = "Runs sigmak verification campaigns and solves")]
#[command(args_conflicts_with_subcommands = true)]
struct Cli {
    #[command(subcommand)]
    command: Option<Sub>,
    /// campaign file (TOML)
    #[arg(long)]
    config: Option<PathBuf>,
    /// report directory; overrides `out` in the campaign file
    #[arg(long)]
    out: Option<PathBuf>,
    /// worker threads
    #[arg(long)]
    jobs: Option<usize>,
    /// overrides `seed` in the campaign file
    #[arg(long)]
    seed: Option<u64>,
    /// print the campaigns in the file and exit
    #[arg(long)]
    list: bool,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Merge campaign reports into one summary
    Merge {
        reports: Vec<PathBuf>,
        /// write the summary here instead of standard output
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

/// Prints a one-line JSON object on stderr and returns `code`.
fn bail(code: u8, status: &str, detail: serde_json::Value) -> ExitCode {
    eprintln!(
        "{}",
        json!({ "status": status, "exit_code": code, "detail": detail })
    );
    ExitCode::from(code)
}

fn usage(message: String) -> ExitCode {
    eprintln!("error: {message}");
    bail(EXIT_USAGE, "usage-error", json!({ "message": message }))
}

fn merge(paths: &[PathBuf], output: Option<PathBuf>) -> ExitCode {
    let mut reports = Vec::with_capacity(paths.len());
    for p in paths {
        let parsed = std::fs::read_to_string(p)
            .map_err(|e| e.to_string())
            .and_then(|t| serde_json::from_str::<CampaignReport>(&t).map_err(|e| e.to_string()));
        match parsed {
            Ok(r) => reports.push(r),
            Err(e) => return usage(format!("{}: {e}", p.display())),
        }
    }
    let summary = match report::merge(&reports) {
        Ok(s) => s,
        Err(e) => return usage(e.to_string()),
    };
    match output {
        Some(path) => {
            if let Err(e) = write_json(&path, &summary) {
                return usage(format!("{}: {e}", path.display()));
            }
        }
        None => println!(
            "{}",
            serde_json::to_string_pretty(&summary).expect("summary serialises")
        ),
    }
    if summary.pass {
        ExitCode::SUCCESS
    } else {
        bail(
            EXIT_FAIL,
            "fail",
            json!({ "failed_campaigns": summary.failed_campaigns }),
        )
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return bail(
                EXIT_USAGE,
                "usage-error",
                json!({ "message": e.kind().to_string() }),
            );
        }
    };
    if let Some(Sub::Merge { reports, output }) = cli.command {
        return merge(&reports, output);
    }
    let Some(path) = cli.config else {
        return usage("one of --config or the merge subcommand is required".into());
    };
    let cfg = match CampaignConfig::load(&path) {
        Ok(c) => c,
        Err(e) => return usage(e.0),
    };
    if cli.list {
        for c in &cfg.campaigns {
            let dims: Vec<String> = c.dims.iter().map(|n| n.to_string()).collect();
            println!("{}\t{}\tn = {}", c.id, c.command.name(), dims.join(","));
        }
        return ExitCode::SUCCESS;
    }
    if cli.jobs == Some(0) {
        return usage("--jobs must be at least 1".into());
    }
    let opts = RunOptions {
        out: cli
            .out
            .or(cfg.out.clone())
            .unwrap_or_else(|| PathBuf::from("reports")),
        seed: cli.seed.or(cfg.seed).unwrap_or(0),
        jobs: cli.jobs,
    };
    let result = match run(&cfg, &opts) {
        Ok(r) => r,
        Err(RunError::Config(m)) => return usage(m),
        Err(RunError::Io(e)) => return usage(format!("{}: {e}", opts.out.display())),
    };
    for r in &result.reports {
        println!(
            "{} {:<24} {:<22} {:>6} assertions {:>4} failed  worst margin {:>10}  {:.2}s",
            if r.pass { "PASS" } else { "FAIL" },
            r.id,
            r.command,
            r.assertions,
            r.failures,
            r.worst_margin
                .map(|m| format!("{m:.3e}"))
                .unwrap_or_default(),
            r.runtime_s
        );
    }
    let code = exit_code(&result.summary);
    if code == 0 {
        return ExitCode::SUCCESS;
    }
    let failures: Vec<_> = result
        .reports
        .iter()
        .filter(|r| !r.pass)
        .map(|r| json!({ "id": r.id, "failed_items": r.failed_items.iter().take(5).collect::<Vec<_>>() }))
        .collect();
    bail(code, "fail", json!({ "failed_campaigns": failures }))
}
