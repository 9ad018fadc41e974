//! Self-sufficiency conditions evaluated over simulated ensembles.
//!
//! The benefit payment condition looks at the cumulative fraction of paths
//! that ran out of money. The funding ratio condition looks, checkpoint by
//! checkpoint, at the fraction of paths whose assets are below a threshold
//! share of the remaining liabilities. Exhausted paths have a funding ratio of
//! zero and so fail every later checkpoint. Years with no remaining
//! liabilities are not checkpoints.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::regression::r_squared;
use crate::runoff::{simulate_ensemble, Ensemble, RunoffConfig};

pub const SOLVER_TOLERANCE_GBP_BN: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cadence {
    #[default]
    Annual,
    Triennial,
}

impl Cadence {
    pub fn step(self) -> usize {
        match self {
            Cadence::Annual => 1,
            Cadence::Triennial => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PassMode {
    /// The worst single checkpoint must fail no more than the allowed fraction.
    #[default]
    PerCheckpointMax,
    /// The fraction of paths that ever breach must be within the allowance.
    EverBreach,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SfsSpec {
    pub fr_threshold: f64,
    pub confidence: f64,
    pub cadence: Cadence,
    pub pass_mode: PassMode,
}

impl Default for SfsSpec {
    fn default() -> Self {
        Self {
            fr_threshold: 0.90,
            confidence: 0.95,
            cadence: Cadence::Annual,
            pass_mode: PassMode::PerCheckpointMax,
        }
    }
}

impl SfsSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.fr_threshold > 0.0 && self.fr_threshold < 2.0) {
            return Err(Error::domain(format!(
                "funding ratio threshold {} outside (0, 2)",
                self.fr_threshold
            )));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(Error::domain(format!(
                "confidence {} outside (0, 1)",
                self.confidence
            )));
        }
        Ok(())
    }

    pub fn allowed_failure(&self) -> f64 {
        1.0 - self.confidence
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionVerdict {
    pub benefit_payment_pass: bool,
    pub funding_ratio_pass: bool,
    pub bp_failure_final: f64,
    pub fr_failure_max: f64,
    pub fr_ever_breach: f64,
}

impl ConditionVerdict {
    pub fn passes(&self, which: Condition) -> bool {
        match which {
            Condition::BenefitPayment => self.benefit_payment_pass,
            Condition::FundingRatio => self.funding_ratio_pass,
            Condition::Both => self.benefit_payment_pass && self.funding_ratio_pass,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    BenefitPayment,
    FundingRatio,
    Both,
}

impl Condition {
    pub fn as_str(self) -> &'static str {
        match self {
            Condition::BenefitPayment => "benefit_payment",
            Condition::FundingRatio => "funding_ratio",
            Condition::Both => "both",
        }
    }
}

impl std::str::FromStr for Condition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "benefit_payment" => Ok(Self::BenefitPayment),
            "funding_ratio" => Ok(Self::FundingRatio),
            "both" => Ok(Self::Both),
            other => Err(Error::domain(format!("unknown condition `{other}`"))),
        }
    }
}

/// `(year, fraction)` pairs.
pub type FailureCurve = Vec<(usize, f64)>;

/// Cumulative fraction of paths exhausted by each year `1..=H`.
pub fn benefit_payment_failure_curve(ensemble: &Ensemble) -> FailureCurve {
    let h = ensemble.horizon();
    let mut exhausted_in = vec![0usize; h + 1];
    for p in &ensemble.paths {
        if let Some(y) = p.exhaustion_year {
            exhausted_in[y] += 1;
        }
    }
    let n = ensemble.paths.len() as f64;
    let mut cumulative = 0;
    (1..=h)
        .map(|year| {
            cumulative += exhausted_in[year];
            (year, cumulative as f64 / n)
        })
        .collect()
}

/// Checkpoint years for `cadence`: multiples of its step with liabilities outstanding.
pub fn checkpoints(ensemble: &Ensemble, cadence: Cadence) -> Vec<usize> {
    let Some(first) = ensemble.paths.first() else {
        return Vec::new();
    };
    (1..=ensemble.horizon())
        .filter(|y| y % cadence.step() == 0)
        .filter(|&y| first.funding_ratio(y).is_some())
        .collect()
}

fn below(ratio: Option<f64>, threshold: f64) -> bool {
    ratio.is_some_and(|fr| fr < threshold)
}

/// Fraction of paths below the funding ratio threshold at each checkpoint.
pub fn funding_ratio_failure_curve(ensemble: &Ensemble, spec: &SfsSpec) -> FailureCurve {
    let n = ensemble.paths.len() as f64;
    checkpoints(ensemble, spec.cadence)
        .into_iter()
        .map(|year| {
            let failing = ensemble
                .paths
                .iter()
                .filter(|p| below(p.funding_ratio(year), spec.fr_threshold))
                .count();
            (year, failing as f64 / n)
        })
        .collect()
}

/// Fraction of paths below the threshold at one or more checkpoints.
pub fn funding_ratio_ever_breach(ensemble: &Ensemble, spec: &SfsSpec) -> f64 {
    let years = checkpoints(ensemble, spec.cadence);
    let breached = ensemble
        .paths
        .iter()
        .filter(|p| {
            years
                .iter()
                .any(|&y| below(p.funding_ratio(y), spec.fr_threshold))
        })
        .count();
    breached as f64 / ensemble.paths.len() as f64
}

pub fn evaluate_sfs(ensemble: &Ensemble, spec: &SfsSpec) -> Result<ConditionVerdict> {
    spec.validate()?;
    if ensemble.paths.is_empty() {
        return Err(Error::domain("cannot evaluate an empty ensemble"));
    }
    let bp_failure_final = benefit_payment_failure_curve(ensemble)
        .last()
        .map_or(0.0, |c| c.1);
    let fr_failure_max = funding_ratio_failure_curve(ensemble, spec)
        .iter()
        .map(|c| c.1)
        .fold(0.0, f64::max);
    let fr_ever_breach = funding_ratio_ever_breach(ensemble, spec);
    let allowed = spec.allowed_failure();
    let fr_stat = match spec.pass_mode {
        PassMode::PerCheckpointMax => fr_failure_max,
        PassMode::EverBreach => fr_ever_breach,
    };
    Ok(ConditionVerdict {
        benefit_payment_pass: bp_failure_final <= allowed,
        funding_ratio_pass: fr_stat <= allowed,
        bp_failure_final,
        fr_failure_max,
        fr_ever_breach,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub condition: Condition,
    pub required_assets: f64,
    pub verdict: ConditionVerdict,
    pub evaluations: usize,
}

/// Ensemble size and seed shared by every evaluation of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolverRun {
    pub n_paths: usize,
    pub master_seed: u64,
}

/// Smallest initial assets (to within [`SOLVER_TOLERANCE_GBP_BN`]) that pass `which`.
///
/// Every evaluation re-simulates with the same seed, so each path sees the same
/// returns whatever the starting assets and the pass indicator is monotone.
/// The returned value is the lowest passing point found, so it overstates the
/// boundary by less than the tolerance.
pub fn solve_required_assets(
    base: &RunoffConfig,
    spec: &SfsSpec,
    which: Condition,
    bracket: (f64, f64),
    run: SolverRun,
) -> Result<SolveResult> {
    spec.validate()?;
    let (mut low, mut high) = bracket;
    if !(low.is_finite() && high.is_finite() && low >= 0.0 && low < high) {
        return Err(Error::Bracketing {
            low,
            high,
            detail: "need 0 <= low < high".into(),
        });
    }
    let mut evaluations = 0;
    let mut verdict_at = |assets: f64| -> Result<ConditionVerdict> {
        evaluations += 1;
        let ens = simulate_ensemble(
            &base.with_initial_assets(assets),
            run.n_paths,
            run.master_seed,
        )?;
        evaluate_sfs(&ens, spec)
    };
    let low_verdict = verdict_at(low)?;
    let mut high_verdict = verdict_at(high)?;
    match (low_verdict.passes(which), high_verdict.passes(which)) {
        (false, true) => {}
        (true, false) => return Err(Error::NonMonotone { low, high }),
        (true, true) => {
            return Err(Error::Bracketing {
                low,
                high,
                detail: "passes at both ends".into(),
            })
        }
        (false, false) => {
            return Err(Error::Bracketing {
                low,
                high,
                detail: "fails at both ends".into(),
            })
        }
    }
    while high - low > SOLVER_TOLERANCE_GBP_BN {
        let mid = 0.5 * (low + high);
        let v = verdict_at(mid)?;
        if v.passes(which) {
            high = mid;
            high_verdict = v;
        } else {
            low = mid;
        }
    }
    Ok(SolveResult {
        condition: which,
        required_assets: high,
        verdict: high_verdict,
        evaluations,
    })
}

/// R² between the funding ratio in each year and final assets, across paths.
pub fn fr_final_asset_correlation(
    ensemble: &Ensemble,
    checkpoint_years: &[usize],
) -> Result<BTreeMap<usize, f64>> {
    if ensemble.paths.len() < 30 {
        return Err(Error::domain(format!(
            "predictiveness needs at least 30 paths, got {}",
            ensemble.paths.len()
        )));
    }
    let finals: Vec<f64> = ensemble.paths.iter().map(|p| p.final_assets).collect();
    let mut out = BTreeMap::new();
    for &year in checkpoint_years {
        if year > ensemble.horizon() {
            return Err(Error::domain(format!(
                "year {year} beyond horizon {}",
                ensemble.horizon()
            )));
        }
        let ratios: Vec<f64> = ensemble
            .paths
            .iter()
            .map(|p| p.funding_ratio(year))
            .collect::<Option<_>>()
            .ok_or_else(|| {
                Error::Lookup(format!(
                    "no funding ratio in year {year}: no liabilities remain"
                ))
            })?;
        let r2 = r_squared(&ratios, &finals).map_err(|_| {
            Error::UndefinedRSquared(format!("zero variance across paths in year {year}"))
        })?;
        out.insert(year, r2);
    }
    Ok(out)
}

/// The last year that still has liabilities outstanding.
pub fn last_liability_year(ensemble: &Ensemble) -> Option<usize> {
    checkpoints(ensemble, Cadence::Annual).last().copied()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EscapeStats {
    pub year: usize,
    pub failing: usize,
    pub paid_in_full: usize,
    pub fraction: f64,
}

/// Among paths below the funding ratio threshold in `year`, how many still pay every benefit.
pub fn fr_escape_fraction(ensemble: &Ensemble, year: usize, threshold: f64) -> Result<EscapeStats> {
    let failing: Vec<_> = ensemble
        .paths
        .iter()
        .filter(|p| below(p.funding_ratio(year), threshold))
        .collect();
    if failing.is_empty() {
        return Err(Error::domain(format!(
            "no path is below the threshold in year {year}"
        )));
    }
    let paid_in_full = failing.iter().filter(|p| !p.exhausted()).count();
    Ok(EscapeStats {
        year,
        failing: failing.len(),
        paid_in_full,
        fraction: paid_in_full as f64 / failing.len() as f64,
    })
}

/// The two failure measures at the last year with liabilities outstanding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoteCheck {
    pub year: usize,
    pub fr_failure: f64,
    pub bp_failure_final: f64,
    /// Every path that never runs out is at or above the threshold in `year`.
    pub survivors_above: bool,
}

impl AsymptoteCheck {
    pub fn agrees(&self) -> bool {
        self.fr_failure == self.bp_failure_final
    }
}

pub fn asymptote_check(ensemble: &Ensemble, threshold: f64) -> Result<AsymptoteCheck> {
    let year = last_liability_year(ensemble)
        .ok_or_else(|| Error::domain("no year has liabilities outstanding"))?;
    let n = ensemble.paths.len() as f64;
    let fr_failing = ensemble
        .paths
        .iter()
        .filter(|p| below(p.funding_ratio(year), threshold))
        .count();
    let survivors_above = ensemble
        .paths
        .iter()
        .filter(|p| !p.exhausted())
        .all(|p| !below(p.funding_ratio(year), threshold));
    Ok(AsymptoteCheck {
        year,
        fr_failure: fr_failing as f64 / n,
        bp_failure_final: ensemble.exhausted_fraction(),
        survivors_above,
    })
}
