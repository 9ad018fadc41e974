//! Ordinary least squares fits of valuation data against the gilt yield.

use std::collections::BTreeMap;
use std::fmt;
use std::io;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cashflow::{cpi_adjust, CpiIndex};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n: usize,
}

impl FitResult {
    pub fn predict(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

/// Least-squares line through `points`, with `R² = 1 − SS_res/SS_tot`.
///
/// A constant response gives `R² = 1` when the line reproduces it exactly.
pub fn ols_fit(points: &[(f64, f64)]) -> Result<FitResult> {
    let n = points.len();
    if n < 2 {
        return Err(Error::domain(format!(
            "OLS needs at least 2 points, got {n}"
        )));
    }
    if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::domain("OLS points must be finite"));
    }
    let nf = n as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / nf;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = points.iter().map(|(x, _)| (x - mean_x).powi(2)).sum();
    let sxy: f64 = points
        .iter()
        .map(|(x, y)| (x - mean_x) * (y - mean_y))
        .sum();
    if sxx == 0.0 {
        return Err(Error::domain("OLS x values are all equal"));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_tot: f64 = points.iter().map(|(_, y)| (y - mean_y).powi(2)).sum();
    let ss_res: f64 = points
        .iter()
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r_squared = if ss_tot == 0.0 {
        1.0
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };
    Ok(FitResult {
        slope,
        intercept,
        r_squared,
        n,
    })
}

/// R² of `y` on `x`, failing when either series has no variance.
pub fn r_squared(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::domain("R² series differ in length"));
    }
    let constant = |v: &[f64]| v.iter().all(|&a| a == v[0]);
    if xs.is_empty() || constant(xs) || constant(ys) {
        return Err(Error::UndefinedRSquared(
            "a series has zero variance".into(),
        ));
    }
    let pts: Vec<(f64, f64)> = xs.iter().copied().zip(ys.iter().copied()).collect();
    Ok(ols_fit(&pts)?.r_squared)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BenefitsRegime {
    Pre2022,
    Post2022,
}

impl fmt::Display for BenefitsRegime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BenefitsRegime::Pre2022 => "pre2022",
            BenefitsRegime::Post2022 => "post2022",
        })
    }
}

impl FromStr for BenefitsRegime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pre2022" => Ok(Self::Pre2022),
            "post2022" => Ok(Self::Post2022),
            other => Err(Error::data(format!("unknown benefits regime `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValuationRecord {
    /// ISO date, `YYYY-MM-DD`.
    pub date: String,
    pub label: String,
    pub source: String,
    pub benefits_regime: BenefitsRegime,
    pub gilt_yield_pct: f64,
    pub fsc_pct: Option<f64>,
    pub tp_liabilities_gbp_bn: Option<f64>,
    pub sfs_liabilities_gbp_bn: Option<f64>,
    pub assets_gbp_bn: Option<f64>,
    pub provenance: String,
}

impl ValuationRecord {
    pub fn year(&self) -> Result<i32> {
        self.date
            .get(..4)
            .and_then(|y| y.parse().ok())
            .ok_or_else(|| Error::data(format!("record date `{}` has no leading year", self.date)))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gilt_yield_pct > -2.0 && self.gilt_yield_pct < 20.0) {
            return Err(Error::data(format!(
                "{}: gilt yield {}% outside (-2, 20)",
                self.label, self.gilt_yield_pct
            )));
        }
        let optional = [
            self.fsc_pct,
            self.tp_liabilities_gbp_bn,
            self.sfs_liabilities_gbp_bn,
            self.assets_gbp_bn,
        ];
        if optional.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::data(format!("{}: non-finite field", self.label)));
        }
        self.year().map(|_| ())
    }

    pub fn field(&self, field: YField) -> Option<f64> {
        match field {
            YField::Fsc => self.fsc_pct,
            YField::TpLiabilities => self.tp_liabilities_gbp_bn,
            YField::SfsLiabilities => self.sfs_liabilities_gbp_bn,
            YField::Assets => self.assets_gbp_bn,
            YField::LnTp => self.tp_liabilities_gbp_bn.filter(|v| *v > 0.0).map(f64::ln),
        }
    }
}

pub const VALUATIONS_HEADER: [&str; 10] = [
    "date",
    "label",
    "source",
    "benefits_regime",
    "gilt_yield_pct",
    "fsc_pct",
    "tp_liabilities_gbp_bn",
    "sfs_liabilities_gbp_bn",
    "assets_gbp_bn",
    "provenance",
];

fn opt_field(raw: &str, name: &str, line: usize) -> Result<Option<f64>> {
    if raw.is_empty() {
        return Ok(None);
    }
    raw.parse()
        .map(Some)
        .map_err(|_| Error::data(format!("row {line}: cannot parse {name} `{raw}`")))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Reads `valuations.csv`; blank numeric cells are missing values.
pub fn read_valuations<R: io::Read>(reader: R) -> Result<Vec<ValuationRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != VALUATIONS_HEADER {
        return Err(Error::data(format!(
            "valuations header must be `{}`",
            VALUATIONS_HEADER.join(",")
        )));
    }
    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let line = i + 1;
        let get = |k: usize| row.get(k).unwrap_or("");
        let gilt_yield_pct = get(4).parse().map_err(|_| {
            Error::data(format!(
                "row {line}: cannot parse gilt_yield_pct `{}`",
                get(4)
            ))
        })?;
        let rec = ValuationRecord {
            date: get(0).to_string(),
            label: get(1).to_string(),
            source: get(2).to_string(),
            benefits_regime: get(3).parse()?,
            gilt_yield_pct,
            fsc_pct: opt_field(get(5), "fsc_pct", line)?,
            tp_liabilities_gbp_bn: opt_field(get(6), "tp_liabilities_gbp_bn", line)?,
            sfs_liabilities_gbp_bn: opt_field(get(7), "sfs_liabilities_gbp_bn", line)?,
            assets_gbp_bn: opt_field(get(8), "assets_gbp_bn", line)?,
            provenance: get(9).to_string(),
        };
        rec.validate()?;
        out.push(rec);
    }
    Ok(out)
}

pub fn write_valuations<W: io::Write>(records: &[ValuationRecord], writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(VALUATIONS_HEADER)?;
    for r in records {
        wtr.write_record([
            r.date.clone(),
            r.label.clone(),
            r.source.clone(),
            r.benefits_regime.to_string(),
            r.gilt_yield_pct.to_string(),
            fmt_opt(r.fsc_pct),
            fmt_opt(r.tp_liabilities_gbp_bn),
            fmt_opt(r.sfs_liabilities_gbp_bn),
            fmt_opt(r.assets_gbp_bn),
            r.provenance.clone(),
        ])?;
    }
    wtr.flush().map_err(|e| Error::data(e.to_string()))
}

/// One observation of `gilt_yields.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GiltYield {
    pub date: String,
    pub yield_pct: f64,
}

pub fn read_gilt_yields<R: io::Read>(reader: R) -> Result<Vec<GiltYield>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["date", "yield_pct"] {
        return Err(Error::data("gilt yields header must be `date,yield_pct`"));
    }
    rdr.deserialize().map(|r| r.map_err(Error::from)).collect()
}

pub fn write_gilt_yields<W: io::Write>(yields: &[GiltYield], writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["date", "yield_pct"])?;
    for y in yields {
        wtr.write_record([y.date.clone(), y.yield_pct.to_string()])?;
    }
    wtr.flush().map_err(|e| Error::data(e.to_string()))
}

/// OLS of ln(CPI-adjusted TP liabilities) on the gilt yield (percent).
pub fn ln_tp_fit(records: &[ValuationRecord], cpi: &CpiIndex, base_year: i32) -> Result<FitResult> {
    let mut points = Vec::new();
    for r in records {
        let Some(tp) = r.tp_liabilities_gbp_bn else {
            continue;
        };
        if tp <= 0.0 {
            return Err(Error::domain(format!(
                "{}: TP liabilities {tp} must be > 0",
                r.label
            )));
        }
        let real = cpi_adjust(tp, r.year()?, base_year, cpi)?;
        points.push((r.gilt_yield_pct, real.ln()));
    }
    if points.len() < 2 {
        return Err(Error::domain(
            "ln-TP fit needs at least two records with TP liabilities",
        ));
    }
    ols_fit(&points)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum YField {
    Fsc,
    LnTp,
    TpLiabilities,
    SfsLiabilities,
    Assets,
}

impl fmt::Display for YField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            YField::Fsc => "fsc",
            YField::LnTp => "ln_tp",
            YField::TpLiabilities => "tp_liabilities",
            YField::SfsLiabilities => "sfs_liabilities",
            YField::Assets => "assets",
        })
    }
}

impl FromStr for YField {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fsc" => Ok(Self::Fsc),
            "ln_tp" => Ok(Self::LnTp),
            "tp_liabilities" => Ok(Self::TpLiabilities),
            "sfs_liabilities" => Ok(Self::SfsLiabilities),
            "assets" => Ok(Self::Assets),
            other => Err(Error::domain(format!("unknown y field `{other}`"))),
        }
    }
}

/// Restricts which records enter a correlation report. `None` matches all.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RecordFilter {
    pub benefits_regime: Option<BenefitsRegime>,
    pub source: Option<String>,
    /// Inclusive ISO date bounds, compared lexically.
    pub date_from: Option<String>,
    pub date_to: Option<String>,
}

impl RecordFilter {
    pub fn matches(&self, r: &ValuationRecord) -> bool {
        self.benefits_regime.is_none_or(|b| b == r.benefits_regime)
            && self.source.as_ref().is_none_or(|s| s == &r.source)
            && self
                .date_from
                .as_ref()
                .is_none_or(|d| r.date.as_str() >= d.as_str())
            && self
                .date_to
                .as_ref()
                .is_none_or(|d| r.date.as_str() <= d.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupFit {
    pub y_field: YField,
    pub benefits_regime: BenefitsRegime,
    pub source: String,
    pub fit: FitResult,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorrelationReport {
    pub rows: Vec<GroupFit>,
    /// Groups left out for having fewer than two usable points.
    pub skipped: Vec<String>,
}

/// One fit of `y_field` on the gilt yield per `(benefits_regime, source)` group.
pub fn correlation_report(
    records: &[ValuationRecord],
    y_field: YField,
    filter: &RecordFilter,
) -> CorrelationReport {
    let mut groups: BTreeMap<(BenefitsRegime, String), Vec<(f64, f64)>> = BTreeMap::new();
    for r in records.iter().filter(|r| filter.matches(r)) {
        let entry = groups
            .entry((r.benefits_regime, r.source.clone()))
            .or_default();
        if let Some(y) = r.field(y_field) {
            entry.push((r.gilt_yield_pct, y));
        }
    }
    let mut report = CorrelationReport::default();
    for ((regime, source), points) in groups {
        match ols_fit(&points) {
            Ok(fit) => report.rows.push(GroupFit {
                y_field,
                benefits_regime: regime,
                source,
                fit,
            }),
            Err(e) => report
                .skipped
                .push(format!("{y_field}/{regime}/{source}: {e}")),
        }
    }
    report
}
