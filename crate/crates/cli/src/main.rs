//! `runoff`: run-off simulations, self-sufficiency solves, contribution-rate
//! tables, reliance metrics and gilt-yield fits from a JSON config.

mod commands;
mod config;
mod error;
mod svg;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use runoff_core::regression::{BenefitsRegime, RecordFilter, YField};
use runoff_core::sfs::Condition;

use crate::commands::GroupBy;
use crate::config::{Format, RunConfig};
use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "runoff",
    version,
    about = "Pension scheme run-off and self-sufficiency toolkit"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// JSON run configuration; every field is optional.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `master_seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides `n_paths`.
    #[arg(long, global = true)]
    paths: Option<usize>,
    /// Overrides `output_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides `format`.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate an ensemble and write failure curves, path summaries and a chart.
    Simulate,
    /// Find the smallest initial assets that pass the self-sufficiency test.
    SfsSolve {
        /// benefit_payment, funding_ratio or both; default solves the first two separately.
        #[arg(long)]
        condition: Option<String>,
        /// Search bracket in £bn, as `LOW:HIGH`.
        #[arg(long)]
        bracket: Option<String>,
    },
    /// R² between funding ratios and final assets.
    Predictiveness,
    /// FSC sensitivity tables and DRC arithmetic.
    Rates,
    /// Reliance statuses for inputs in a CSV or JSON file.
    Metrics {
        #[arg(long)]
        input: PathBuf,
    },
    /// Regress a valuation quantity on the gilt yield.
    Fit {
        /// Valuation CSV; defaults to the bundled dataset.
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// fsc, ln_tp, tp_liabilities, sfs_liabilities or assets.
        #[arg(long, default_value = "fsc")]
        y: String,
        #[arg(long, value_enum, default_value = "regime-source")]
        group_by: GroupBy,
        /// Keep one benefits regime: pre2022 or post2022.
        #[arg(long)]
        regime: Option<String>,
        /// Keep one source, for example `valuation` or `monitoring`.
        #[arg(long)]
        source: Option<String>,
        #[arg(long)]
        from: Option<String>,
        #[arg(long)]
        to: Option<String>,
    },
    /// Run the full reproduction suite into one directory.
    Report,
}

fn load_config(g: &Global) -> CliResult<RunConfig> {
    let mut cfg = match &g.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = g.seed {
        cfg.master_seed = s;
    }
    if let Some(n) = g.paths {
        cfg.n_paths = n;
    }
    if let Some(out) = &g.out {
        cfg.output_dir = out.clone();
    }
    if let Some(f) = g.format {
        cfg.format = f;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn parse_bracket(s: &str) -> CliResult<(f64, f64)> {
    let bad = || CliError::Validation(format!("--bracket `{s}` must look like LOW:HIGH"));
    let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
    Ok((
        lo.trim().parse().map_err(|_| bad())?,
        hi.trim().parse().map_err(|_| bad())?,
    ))
}

fn run(cli: Cli) -> CliResult<Vec<PathBuf>> {
    let mut cfg = load_config(&cli.global)?;
    match cli.command {
        Command::Simulate => commands::simulate(&cfg),
        Command::SfsSolve { condition, bracket } => {
            if let Some(c) = condition {
                cfg.solver.condition = Some(c.parse::<Condition>()?);
            }
            if let Some(b) = bracket {
                (
                    cfg.solver.bracket_low_gbp_bn,
                    cfg.solver.bracket_high_gbp_bn,
                ) = parse_bracket(&b)?;
            }
            cfg.validate()?;
            commands::sfs_solve(&cfg)
        }
        Command::Predictiveness => commands::predictiveness(&cfg),
        Command::Rates => commands::rates(&cfg),
        Command::Metrics { input } => commands::metrics(&cfg, &input),
        Command::Fit {
            dataset,
            y,
            group_by,
            regime,
            source,
            from,
            to,
        } => {
            let y: YField = y.parse()?;
            let filter = RecordFilter {
                benefits_regime: regime
                    .map(|r| r.parse::<BenefitsRegime>())
                    .transpose()
                    .map_err(|e| CliError::Validation(e.to_string()))?,
                source,
                date_from: from,
                date_to: to,
            };
            commands::fit(&cfg, dataset.as_deref(), y, group_by, &filter)
        }
        Command::Report => commands::report(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("runoff: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
