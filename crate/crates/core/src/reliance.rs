//! Actual and Target Reliance metrics with their Red/Amber/Green statuses.
//!
//! Statuses follow the metric definitions with non-strict inequalities for
//! Green and Red; Amber is whatever remains. Actual Reliance can satisfy its
//! Green and Red conditions at once, which is reported rather than resolved.

use std::fmt;
use std::io;

use serde::{Deserialize, Serialize};

use crate::cashflow::{present_value, CashflowSchedule, DiscountRate};
use crate::error::{Error, Result};

pub const AFFRC_PAYROLL_FRACTION: f64 = 0.10;
pub const AFFRC_YEARS: usize = 30;
pub const AFFRC_BAND: f64 = 0.05;
/// Limit of Reliance as a multiple of AffRC.
pub const LIMIT_OF_RELIANCE_MULTIPLE: f64 = 1.5;
pub const TARGET_GREEN_MULTIPLE: f64 = 0.95;
pub const TARGET_RED_MULTIPLE: f64 = 1.05;

/// All amounts £bn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelianceInputs {
    pub assets: f64,
    pub tp_liabilities: f64,
    pub sfs_liabilities: f64,
    pub transition_risk: f64,
    pub affrc: f64,
}

impl RelianceInputs {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("assets", self.assets),
            ("tp_liabilities", self.tp_liabilities),
            ("sfs_liabilities", self.sfs_liabilities),
            ("transition_risk", self.transition_risk),
            ("affrc", self.affrc),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::domain(format!(
                    "{name} = {v} must be finite and >= 0"
                )));
            }
        }
        Ok(())
    }

    /// Soft checks: values that are legal but unusual.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(0.0..=20.0).contains(&self.transition_risk) {
            out.push(format!(
                "transition risk £{}bn is outside the usual 0-20 range",
                self.transition_risk
            ));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffrcEstimate {
    pub central: f64,
    pub low: f64,
    pub high: f64,
}

/// Present value of `fraction × payroll` for `years` years, with a ±5% band.
pub fn affordable_risk_capacity(
    payroll: f64,
    fraction: f64,
    years: usize,
    dr: DiscountRate,
) -> Result<AffrcEstimate> {
    if !(payroll.is_finite() && payroll > 0.0) {
        return Err(Error::domain(format!("payroll {payroll} must be > 0")));
    }
    let central = if years == 0 {
        0.0
    } else {
        present_value(&CashflowSchedule::flat(fraction * payroll, years)?, dr)
    };
    Ok(AffrcEstimate {
        central,
        low: central * (1.0 - AFFRC_BAND),
        high: central * (1.0 + AFFRC_BAND),
    })
}

pub fn actual_reliance(inputs: &RelianceInputs) -> f64 {
    inputs.sfs_liabilities - (inputs.assets - inputs.transition_risk)
}

pub fn target_reliance(inputs: &RelianceInputs) -> f64 {
    inputs.sfs_liabilities - (inputs.tp_liabilities - inputs.transition_risk)
}

pub fn limit_of_reliance(affrc: f64) -> f64 {
    LIMIT_OF_RELIANCE_MULTIPLE * affrc
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Rag {
    Green,
    Amber,
    Red,
}

impl fmt::Display for Rag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rag::Green => "Green",
            Rag::Amber => "Amber",
            Rag::Red => "Red",
        })
    }
}

/// A status plus, for Actual Reliance, whether Green and Red both hold.
///
/// When both hold `rag` is `Green` and `simultaneous_flag` is set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RagStatus {
    pub rag: Rag,
    pub simultaneous_flag: bool,
}

impl RagStatus {
    fn single(rag: Rag) -> Self {
        Self {
            rag,
            simultaneous_flag: false,
        }
    }

    pub fn is_green(&self) -> bool {
        self.rag == Rag::Green
    }

    pub fn is_red(&self) -> bool {
        self.rag == Rag::Red || self.simultaneous_flag
    }
}

impl fmt::Display for RagStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.simultaneous_flag {
            f.write_str("Green+Red")
        } else {
            self.rag.fmt(f)
        }
    }
}

/// Green when Actual ≤ Target Reliance; Red when Actual ≥ the Limit of Reliance.
pub fn rag_actual(inputs: &RelianceInputs) -> RagStatus {
    let r_act = actual_reliance(inputs);
    let green = r_act <= target_reliance(inputs);
    let red = r_act >= limit_of_reliance(inputs.affrc);
    match (green, red) {
        (true, true) => RagStatus {
            rag: Rag::Green,
            simultaneous_flag: true,
        },
        (true, false) => RagStatus::single(Rag::Green),
        (false, true) => RagStatus::single(Rag::Red),
        (false, false) => RagStatus::single(Rag::Amber),
    }
}

/// Green when Target Reliance ≤ 95% AffRC; Red when it is ≥ 105% AffRC.
pub fn rag_target(inputs: &RelianceInputs) -> RagStatus {
    let r_tar = target_reliance(inputs);
    if r_tar <= TARGET_GREEN_MULTIPLE * inputs.affrc {
        RagStatus::single(Rag::Green)
    } else if r_tar >= TARGET_RED_MULTIPLE * inputs.affrc {
        RagStatus::single(Rag::Red)
    } else {
        RagStatus::single(Rag::Amber)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TpBounds {
    /// Target Reliance is Green when TP liabilities are at or above this.
    pub green_lower: f64,
    /// Target Reliance is Red when TP liabilities are at or below this.
    pub red_upper: f64,
}

/// Target Reliance thresholds restated as bounds on the TP liabilities.
pub fn tp_liability_bounds(sfs_liabilities: f64, transition_risk: f64, affrc: f64) -> TpBounds {
    TpBounds {
        green_lower: sfs_liabilities + transition_risk - TARGET_GREEN_MULTIPLE * affrc,
        red_upper: sfs_liabilities + transition_risk - TARGET_RED_MULTIPLE * affrc,
    }
}

/// Every intermediate quantity behind the two statuses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelianceReport {
    pub inputs: RelianceInputs,
    pub tp_surplus: f64,
    pub sfs_surplus: f64,
    pub actual_reliance: f64,
    pub target_reliance: f64,
    pub limit_of_reliance: f64,
    pub actual_status: RagStatus,
    pub target_status: RagStatus,
    pub bounds: TpBounds,
}

pub fn reliance_report(inputs: &RelianceInputs) -> Result<RelianceReport> {
    inputs.validate()?;
    Ok(RelianceReport {
        inputs: *inputs,
        tp_surplus: inputs.assets - inputs.tp_liabilities,
        sfs_surplus: inputs.assets - inputs.sfs_liabilities,
        actual_reliance: actual_reliance(inputs),
        target_reliance: target_reliance(inputs),
        limit_of_reliance: limit_of_reliance(inputs.affrc),
        actual_status: rag_actual(inputs),
        target_status: rag_target(inputs),
        bounds: tp_liability_bounds(inputs.sfs_liabilities, inputs.transition_risk, inputs.affrc),
    })
}

pub const RELIANCE_HEADER: [&str; 6] = [
    "label",
    "assets",
    "tp_liabilities",
    "sfs_liabilities",
    "transition_risk",
    "affrc",
];

/// Labelled inputs from a CSV with header [`RELIANCE_HEADER`].
pub fn read_reliance_csv<R: io::Read>(reader: R) -> Result<Vec<(String, RelianceInputs)>> {
    #[derive(Deserialize)]
    struct Row {
        label: String,
        assets: f64,
        tp_liabilities: f64,
        sfs_liabilities: f64,
        transition_risk: f64,
        affrc: f64,
    }
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != RELIANCE_HEADER {
        return Err(Error::data(format!(
            "reliance inputs header must be `{}`",
            RELIANCE_HEADER.join(",")
        )));
    }
    let mut out = Vec::new();
    for row in rdr.deserialize::<Row>() {
        let row = row?;
        let inputs = RelianceInputs {
            assets: row.assets,
            tp_liabilities: row.tp_liabilities,
            sfs_liabilities: row.sfs_liabilities,
            transition_risk: row.transition_risk,
            affrc: row.affrc,
        };
        inputs
            .validate()
            .map_err(|e| Error::data(format!("{}: {e}", row.label)))?;
        out.push((row.label, inputs));
    }
    Ok(out)
}
