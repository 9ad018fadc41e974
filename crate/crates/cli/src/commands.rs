//! One function per subcommand. Each returns the files it wrote.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use runoff_core::cashflow::DiscountRate;
use runoff_core::datasets;
use runoff_core::rates::{
    drc_rate_amortized, drc_rate_naive, effective_equity_allocation, fsc_sensitivity,
    FSC_PRE_WEIGHT, TP_PRE_WEIGHT,
};
use runoff_core::regression::{
    correlation_report, ols_fit, read_valuations, RecordFilter, ValuationRecord, YField,
};
use runoff_core::reliance::{
    affordable_risk_capacity, read_reliance_csv, reliance_report, RelianceInputs,
    AFFRC_PAYROLL_FRACTION, AFFRC_YEARS,
};
use runoff_core::runoff::{simulate_ensemble, Ensemble, RunoffConfig};
use runoff_core::scenarios;
use runoff_core::sfs::{
    benefit_payment_failure_curve, evaluate_sfs, fr_escape_fraction, fr_final_asset_correlation,
    funding_ratio_failure_curve, solve_required_assets, Condition, SfsSpec, SolverRun,
};

use crate::config::{Format, RunConfig, DDR_COMPONENTS};
use crate::error::{CliError, CliResult};
use crate::svg::{Chart, Series, Style, PALETTE};
use crate::table::{ensure_dir, write_file, Cell, Table};

pub const SOLVE_HEADER: [&str; 5] = [
    "which_condition",
    "required_assets_gbp_bn",
    "bp_failure_final",
    "fr_failure_max",
    "fr_ever_breach",
];

pub fn failure_curves_table(ens: &Ensemble, spec: &SfsSpec) -> Table {
    let bp = benefit_payment_failure_curve(ens);
    let fr: std::collections::BTreeMap<usize, f64> =
        funding_ratio_failure_curve(ens, spec).into_iter().collect();
    let mut t = Table::new(&["year", "bp_failure", "fr_failure"]);
    for (year, b) in bp {
        t.push(vec![year.into(), b.into(), fr.get(&year).copied().into()]);
    }
    t
}

fn paths_table(ens: &Ensemble) -> Table {
    let mut t = Table::new(&[
        "path_index",
        "exhaustion_year",
        "final_assets_gbp_bn",
        "shortfall_gbp_bn",
        "min_funding_ratio",
    ]);
    for (i, p) in ens.paths.iter().enumerate() {
        let min_fr = p.funding_ratio_by_year[1..]
            .iter()
            .flatten()
            .copied()
            .reduce(f64::min);
        t.push(vec![
            i.into(),
            p.exhaustion_year.into(),
            p.final_assets.into(),
            p.shortfall.into(),
            min_fr.into(),
        ]);
    }
    t
}

fn summary_table(ens: &Ensemble, spec: &SfsSpec) -> CliResult<Table> {
    let v = evaluate_sfs(ens, spec)?;
    let mut t = Table::new(&["quantity", "value"]);
    let rows: [(&str, Cell); 9] = [
        ("n_paths", ens.n_paths.into()),
        ("master_seed", ens.master_seed.into()),
        ("horizon_years", ens.horizon().into()),
        (
            "starting_assets_gbp_bn",
            ens.config.starting_assets().into(),
        ),
        ("bp_failure_final", v.bp_failure_final.into()),
        ("fr_failure_max", v.fr_failure_max.into()),
        ("fr_ever_breach", v.fr_ever_breach.into()),
        ("benefit_payment_pass", v.benefit_payment_pass.into()),
        ("funding_ratio_pass", v.funding_ratio_pass.into()),
    ];
    for (k, c) in rows {
        t.push(vec![k.into(), c]);
    }
    Ok(t)
}

fn curve_series(ens: &Ensemble, spec: &SfsSpec, name: &str, color: &'static str) -> [Series; 2] {
    let bp = benefit_payment_failure_curve(ens)
        .into_iter()
        .map(|(y, f)| (y as f64, f))
        .collect();
    let fr = funding_ratio_failure_curve(ens, spec)
        .into_iter()
        .map(|(y, f)| (y as f64, f))
        .collect();
    [
        Series {
            name: format!("{name} funding ratio"),
            points: fr,
            color,
            style: Style::Solid,
        },
        Series {
            name: format!("{name} benefit payment"),
            points: bp,
            color,
            style: Style::Dashed,
        },
    ]
}

fn failure_chart(title: String, series: Vec<Series>, allowed: f64) -> Chart {
    let mut series = series;
    if let Some(h) = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.0))
        .reduce(f64::max)
    {
        series.push(Series {
            name: "allowed failure".into(),
            points: vec![(1.0, allowed), (h, allowed)],
            color: "#7f7f7f",
            style: Style::Dashed,
        });
    }
    Chart {
        title,
        x_label: "year".into(),
        y_label: "fraction of paths failing".into(),
        series,
        y_include: vec![0.0],
    }
}

fn simulate_config(rc: &RunoffConfig, cfg: &RunConfig) -> CliResult<Ensemble> {
    Ok(simulate_ensemble(rc, cfg.n_paths, cfg.master_seed)?)
}

fn write_ensemble(
    dir: &Path,
    ens: &Ensemble,
    spec: &SfsSpec,
    format: Format,
    title: &str,
) -> CliResult<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let mut out = vec![
        failure_curves_table(ens, spec).write(dir, "failure_curves", format)?,
        paths_table(ens).write(dir, "paths", format)?,
        summary_table(ens, spec)?.write(dir, "summary", format)?,
    ];
    let chart = failure_chart(
        title.to_string(),
        curve_series(ens, spec, "", PALETTE[0]).to_vec(),
        spec.allowed_failure(),
    );
    let svg = dir.join("failure_curves.svg");
    write_file(&svg, chart.render().as_bytes())?;
    out.push(svg);
    Ok(out)
}

pub fn simulate(cfg: &RunConfig) -> CliResult<Vec<PathBuf>> {
    let rc = cfg.runoff_config()?;
    let spec = cfg.sfs_spec()?;
    let ens = simulate_config(&rc, cfg)?;
    let title = format!(
        "Failure curves, initial assets £{}bn",
        cfg.initial_assets_gbp_bn
    );
    write_ensemble(&cfg.output_dir(), &ens, &spec, cfg.format, &title)
}

pub fn solve_table(
    rc: &RunoffConfig,
    cfg: &RunConfig,
    conditions: &[Condition],
    bracket: (f64, f64),
) -> CliResult<Table> {
    let spec = cfg.sfs_spec()?;
    let run = SolverRun {
        n_paths: cfg.n_paths,
        master_seed: cfg.master_seed,
    };
    let mut t = Table::new(&SOLVE_HEADER);
    for &which in conditions {
        let r = solve_required_assets(rc, &spec, which, bracket, run)?;
        t.push(vec![
            which.as_str().into(),
            r.required_assets.into(),
            r.verdict.bp_failure_final.into(),
            r.verdict.fr_failure_max.into(),
            r.verdict.fr_ever_breach.into(),
        ]);
    }
    Ok(t)
}

pub fn sfs_solve(cfg: &RunConfig) -> CliResult<Vec<PathBuf>> {
    let rc = cfg.runoff_config()?;
    let dir = cfg.output_dir();
    ensure_dir(&dir)?;
    let bracket = (
        cfg.solver.bracket_low_gbp_bn,
        cfg.solver.bracket_high_gbp_bn,
    );
    let t = solve_table(&rc, cfg, &cfg.solver_conditions(), bracket)?;
    Ok(vec![t.write(&dir, "sfs_solve", cfg.format)?])
}

fn predictiveness_table(ens: &Ensemble, years: &[usize]) -> CliResult<Table> {
    let r2 = fr_final_asset_correlation(ens, years)?;
    let mut t = Table::new(&["year", "r_squared"]);
    for (y, v) in r2 {
        t.push(vec![y.into(), v.into()]);
    }
    Ok(t)
}

pub fn predictiveness(cfg: &RunConfig) -> CliResult<Vec<PathBuf>> {
    let rc = cfg.runoff_config()?;
    let ens = simulate_config(&rc, cfg)?;
    let dir = cfg.output_dir();
    ensure_dir(&dir)?;
    Ok(vec![predictiveness_table(&ens, &cfg.predictiveness_years)?
        .write(&dir, "predictiveness", cfg.format)?])
}

pub fn rates(cfg: &RunConfig) -> CliResult<Vec<PathBuf>> {
    cfg.validate()?;
    let base = cfg.fsc_base()?;
    let dir = cfg.output_dir();
    ensure_dir(&dir)?;
    let mut out = Vec::new();
    for (component, name) in DDR_COMPONENTS {
        let mut t = Table::new(&["delta_ppt", "fsc_pct"]);
        for row in fsc_sensitivity(&base, component, &cfg.rates.deltas_ppt)? {
            t.push(vec![row.delta_ppt.into(), (row.fsc * 100.0).into()]);
        }
        out.push(t.write(&dir, &format!("rates_{name}"), cfg.format)?);
    }
    let r = &cfg.rates;
    let dr = DiscountRate::from_pct(r.drc_rate_pct)?;
    let affrc = affordable_risk_capacity(
        cfg.payroll_gbp_bn,
        AFFRC_PAYROLL_FRACTION,
        AFFRC_YEARS,
        DiscountRate::ZERO,
    )?;
    let mut t = Table::new(&["quantity", "value"]);
    let rows: [(&str, f64); 8] = [
        ("fsc_pct", base.fsc()? * 100.0),
        (
            "fsc_equity_fraction",
            effective_equity_allocation(FSC_PRE_WEIGHT)?,
        ),
        (
            "tp_equity_fraction",
            effective_equity_allocation(TP_PRE_WEIGHT)?,
        ),
        (
            "drc_naive_pct",
            drc_rate_naive(r.deficit_gbp_bn, r.recovery_years, cfg.payroll_gbp_bn)? * 100.0,
        ),
        (
            "drc_amortized_pct",
            drc_rate_amortized(
                r.deficit_gbp_bn,
                r.recovery_years,
                cfg.payroll_gbp_bn,
                dr,
                r.salary_growth_pct / 100.0,
            )? * 100.0,
        ),
        ("affrc_zero_rate_gbp_bn", affrc.central),
        ("affrc_low_gbp_bn", affrc.low),
        ("affrc_high_gbp_bn", affrc.high),
    ];
    for (k, v) in rows {
        t.push(vec![k.into(), v.into()]);
    }
    out.push(t.write(&dir, "rates_summary", cfg.format)?);
    Ok(out)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonInputs {
    #[serde(default)]
    label: Option<String>,
    assets: f64,
    tp_liabilities: f64,
    sfs_liabilities: f64,
    transition_risk: f64,
    affrc: f64,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(JsonInputs),
    Many(Vec<JsonInputs>),
}

/// Reads labelled reliance inputs from `.json` (object or array) or CSV.
pub fn read_metrics_inputs(path: &Path) -> CliResult<Vec<(String, RelianceInputs)>> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    if path.extension().is_some_and(|e| e == "json") {
        let parsed: OneOrMany = serde_json::from_str(&text)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let rows = match parsed {
            OneOrMany::One(r) => vec![r],
            OneOrMany::Many(v) => v,
        };
        rows.into_iter()
            .enumerate()
            .map(|(i, r)| {
                let inputs = RelianceInputs {
                    assets: r.assets,
                    tp_liabilities: r.tp_liabilities,
                    sfs_liabilities: r.sfs_liabilities,
                    transition_risk: r.transition_risk,
                    affrc: r.affrc,
                };
                let label = r.label.unwrap_or_else(|| format!("row{}", i + 1));
                inputs
                    .validate()
                    .map_err(|e| CliError::Data(format!("{label}: {e}")))?;
                Ok((label, inputs))
            })
            .collect()
    } else {
        Ok(read_reliance_csv(text.as_bytes())?)
    }
}

pub const METRICS_HEADER: [&str; 16] = [
    "label",
    "assets_gbp_bn",
    "tp_liabilities_gbp_bn",
    "sfs_liabilities_gbp_bn",
    "transition_risk_gbp_bn",
    "affrc_gbp_bn",
    "tp_surplus_gbp_bn",
    "sfs_surplus_gbp_bn",
    "actual_reliance_gbp_bn",
    "target_reliance_gbp_bn",
    "limit_of_reliance_gbp_bn",
    "actual_status",
    "actual_green_and_red",
    "target_status",
    "tp_green_lower_gbp_bn",
    "tp_red_upper_gbp_bn",
];

pub fn metrics_table(rows: &[(String, RelianceInputs)]) -> CliResult<Table> {
    let mut t = Table::new(&METRICS_HEADER);
    for (label, inputs) in rows {
        for w in inputs.warnings() {
            eprintln!("warning: {label}: {w}");
        }
        let r = reliance_report(inputs)?;
        t.push(vec![
            label.as_str().into(),
            inputs.assets.into(),
            inputs.tp_liabilities.into(),
            inputs.sfs_liabilities.into(),
            inputs.transition_risk.into(),
            inputs.affrc.into(),
            r.tp_surplus.into(),
            r.sfs_surplus.into(),
            r.actual_reliance.into(),
            r.target_reliance.into(),
            r.limit_of_reliance.into(),
            r.actual_status.to_string().into(),
            r.actual_status.simultaneous_flag.into(),
            r.target_status.to_string().into(),
            r.bounds.green_lower.into(),
            r.bounds.red_upper.into(),
        ]);
    }
    Ok(t)
}

pub fn metrics(cfg: &RunConfig, input: &Path) -> CliResult<Vec<PathBuf>> {
    let rows = read_metrics_inputs(input)?;
    let dir = cfg.output_dir();
    ensure_dir(&dir)?;
    Ok(vec![
        metrics_table(&rows)?.write(&dir, "metrics", cfg.format)?
    ])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum GroupBy {
    /// One fit per benefits regime and source.
    RegimeSource,
    /// A single fit over all records.
    None,
}

pub fn load_valuations(dataset: Option<&Path>) -> CliResult<Vec<ValuationRecord>> {
    match dataset {
        None => Ok(datasets::valuations()?),
        Some(p) => {
            let f = fs::File::open(p)
                .map_err(|e| CliError::Data(format!("cannot open {}: {e}", p.display())))?;
            read_valuations(f).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))
        }
    }
}

struct FitGroup {
    regime: String,
    source: String,
    points: Vec<(f64, f64)>,
    fit: runoff_core::regression::FitResult,
}

fn fit_groups(
    records: &[ValuationRecord],
    y: YField,
    group_by: GroupBy,
    filter: &RecordFilter,
) -> CliResult<Vec<FitGroup>> {
    let kept: Vec<&ValuationRecord> = records.iter().filter(|r| filter.matches(r)).collect();
    let points_of = |pred: &dyn Fn(&ValuationRecord) -> bool| -> Vec<(f64, f64)> {
        kept.iter()
            .filter(|r| pred(r))
            .filter_map(|r| r.field(y).map(|v| (r.gilt_yield_pct, v)))
            .collect()
    };
    match group_by {
        GroupBy::None => {
            let points = points_of(&|_| true);
            let fit = ols_fit(&points)?;
            Ok(vec![FitGroup {
                regime: "all".into(),
                source: "all".into(),
                points,
                fit,
            }])
        }
        GroupBy::RegimeSource => {
            let report = correlation_report(records, y, filter);
            for s in &report.skipped {
                eprintln!("warning: skipped {s}");
            }
            if report.rows.is_empty() {
                return Err(CliError::Validation(format!(
                    "no group has two or more `{y}` values to fit"
                )));
            }
            Ok(report
                .rows
                .into_iter()
                .map(|g| {
                    let points = points_of(&|r| {
                        r.benefits_regime == g.benefits_regime && r.source == g.source
                    });
                    FitGroup {
                        regime: g.benefits_regime.to_string(),
                        source: g.source,
                        points,
                        fit: g.fit,
                    }
                })
                .collect())
        }
    }
}

pub fn fit(
    cfg: &RunConfig,
    dataset: Option<&Path>,
    y: YField,
    group_by: GroupBy,
    filter: &RecordFilter,
) -> CliResult<Vec<PathBuf>> {
    let records = load_valuations(dataset)?;
    let groups = fit_groups(&records, y, group_by, filter)?;
    let dir = cfg.output_dir();
    ensure_dir(&dir)?;
    let mut t = Table::new(&[
        "y_field",
        "benefits_regime",
        "source",
        "slope",
        "intercept",
        "r_squared",
        "n",
    ]);
    let mut series = Vec::new();
    for (i, g) in groups.iter().enumerate() {
        t.push(vec![
            y.to_string().into(),
            g.regime.as_str().into(),
            g.source.as_str().into(),
            g.fit.slope.into(),
            g.fit.intercept.into(),
            g.fit.r_squared.into(),
            g.fit.n.into(),
        ]);
        let color = PALETTE[i % PALETTE.len()];
        let name = format!("{}/{}", g.regime, g.source);
        let (lo, hi) = g
            .points
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| {
                (a.min(p.0), b.max(p.0))
            });
        series.push(Series {
            name: name.clone(),
            points: g.points.clone(),
            color,
            style: Style::Markers,
        });
        series.push(Series {
            name: format!("{name} fit, R² {:.3}", g.fit.r_squared),
            points: vec![(lo, g.fit.predict(lo)), (hi, g.fit.predict(hi))],
            color,
            style: Style::Solid,
        });
    }
    let chart = Chart {
        title: format!("{y} against gilt yield"),
        x_label: "gilt yield (%)".into(),
        y_label: y.to_string(),
        series,
        y_include: Vec::new(),
    };
    let svg = dir.join("fit.svg");
    write_file(&svg, chart.render().as_bytes())?;
    Ok(vec![t.write(&dir, "fit", cfg.format)?, svg])
}

/// Reproduces the paper-style run-off figures and tables under one directory.
pub fn report(cfg: &RunConfig) -> CliResult<Vec<PathBuf>> {
    cfg.validate()?;
    let root = cfg.output_dir();
    let spec = cfg.sfs_spec()?;
    let fmt = cfg.format;
    let mut out = Vec::new();

    // Bond-heavy portfolio across a range of initial assets.
    let dir = root.join("bonds_asset_range");
    ensure_dir(&dir)?;
    let mut series = Vec::new();
    let mut summary = Table::new(&[
        "initial_assets_gbp_bn",
        "bp_failure_final",
        "fr_failure_max",
        "fr_ever_breach",
    ]);
    for (i, assets) in [90.0, 100.0, 110.0, 120.0].into_iter().enumerate() {
        let ens = simulate_config(&scenarios::bonds_no_covenant(assets), cfg)?;
        let v = evaluate_sfs(&ens, &spec)?;
        summary.push(vec![
            assets.into(),
            v.bp_failure_final.into(),
            v.fr_failure_max.into(),
            v.fr_ever_breach.into(),
        ]);
        out.push(failure_curves_table(&ens, &spec).write(
            &dir,
            &format!("failure_curves_{assets}"),
            fmt,
        )?);
        series.extend(curve_series(
            &ens,
            &spec,
            &format!("£{assets}bn"),
            PALETTE[i],
        ));
    }
    out.push(summary.write(&dir, "summary", fmt)?);
    let svg = dir.join("failure_curves.svg");
    write_file(
        &svg,
        failure_chart(
            "90% bonds, no covenant".into(),
            series,
            spec.allowed_failure(),
        )
        .render()
        .as_bytes(),
    )?;
    out.push(svg);

    // Required assets for the four portfolio and covenant combinations.
    let dir = root.join("required_assets");
    ensure_dir(&dir)?;
    let panels: [(&str, fn(f64) -> RunoffConfig); 4] = [
        ("bonds_no_covenant", scenarios::bonds_no_covenant),
        ("bonds_annual_covenant", scenarios::bonds_with_covenant),
        (
            "equities_annual_covenant",
            scenarios::equities_with_covenant,
        ),
        ("bonds_upfront_covenant", scenarios::bonds_upfront_covenant),
    ];
    let mut header = vec!["panel"];
    header.extend(SOLVE_HEADER);
    let mut solved = Table {
        header,
        rows: Vec::new(),
    };
    let bracket = (
        cfg.solver.bracket_low_gbp_bn,
        cfg.solver.bracket_high_gbp_bn,
    );
    for (name, make) in panels {
        let t = solve_table(
            &make(0.0),
            cfg,
            &[Condition::BenefitPayment, Condition::FundingRatio],
            bracket,
        )?;
        for row in t.rows {
            let mut r = vec![Cell::from(name)];
            r.extend(row);
            solved.rows.push(r);
        }
    }
    out.push(solved.write(&dir, "sfs_solve", fmt)?);

    // Predictiveness of early funding ratios and the escape statistic.
    let dir = root.join("predictiveness");
    ensure_dir(&dir)?;
    let ens = simulate_config(&scenarios::bonds_no_covenant(100.0), cfg)?;
    out.push(
        predictiveness_table(&ens, &cfg.predictiveness_years)?.write(
            &dir,
            "predictiveness",
            fmt,
        )?,
    );
    let mut escape = Table::new(&[
        "initial_assets_gbp_bn",
        "year",
        "failing_paths",
        "paid_in_full",
        "fraction",
    ]);
    for assets in [70.0, 75.0, 80.0] {
        let ens = simulate_config(&scenarios::bonds_upfront_covenant(assets), cfg)?;
        match fr_escape_fraction(&ens, 3, spec.fr_threshold) {
            Ok(s) => escape.push(vec![
                assets.into(),
                s.year.into(),
                s.failing.into(),
                s.paid_in_full.into(),
                s.fraction.into(),
            ]),
            Err(_) => escape.push(vec![
                assets.into(),
                3usize.into(),
                0usize.into(),
                0usize.into(),
                Cell::Empty,
            ]),
        }
    }
    out.push(escape.write(&dir, "escape", fmt)?);

    // Contribution-rate arithmetic.
    let sub = RunConfig {
        output_dir: root.join("rates"),
        ..cfg.clone()
    };
    out.extend(rates(&sub)?);

    // Reliance metrics for the bundled monitoring dates.
    let dir = root.join("metrics");
    ensure_dir(&dir)?;
    let affrc = affordable_risk_capacity(
        cfg.payroll_gbp_bn,
        AFFRC_PAYROLL_FRACTION,
        AFFRC_YEARS,
        DiscountRate::ZERO,
    )?;
    let rows: Vec<(String, RelianceInputs)> = datasets::valuations()?
        .into_iter()
        .filter_map(|r| {
            Some((
                r.label.clone(),
                RelianceInputs {
                    assets: r.assets_gbp_bn?,
                    tp_liabilities: r.tp_liabilities_gbp_bn?,
                    sfs_liabilities: r.sfs_liabilities_gbp_bn?,
                    transition_risk: REPORT_TRANSITION_RISK_GBP_BN,
                    affrc: affrc.central,
                },
            ))
        })
        .collect();
    out.push(metrics_table(&rows)?.write(&dir, "metrics", fmt)?);

    // FSC against gilt yield at the triennial valuations.
    let sub = RunConfig {
        output_dir: root.join("fit"),
        ..cfg.clone()
    };
    let valuations_only = RecordFilter {
        source: Some("valuation".into()),
        ..RecordFilter::default()
    };
    out.extend(fit(
        &sub,
        None,
        YField::Fsc,
        GroupBy::None,
        &valuations_only,
    )?);
    Ok(out)
}

/// Midpoint of the £6-8bn transition cost estimate.
pub const REPORT_TRANSITION_RISK_GBP_BN: f64 = 7.0;
