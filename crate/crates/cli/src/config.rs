//! JSON run configuration. Percentages are read as percent numbers and
//! converted to fractions when the core types are built.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use runoff_core::cashflow::{
    make_synthetic_schedule, CashflowSchedule, DiscountRate, ScheduleShape,
};
use runoff_core::rates::{DdrComponent, DualDiscountRate, FscBase, FSC_PRE_WEIGHT};
use runoff_core::returns::{PortfolioWeights, ReturnDistribution, ReturnModel};
use runoff_core::runoff::{CovenantMode, CovenantSupport, RunoffConfig};
use runoff_core::scenarios;
use runoff_core::sfs::{Cadence, Condition, PassMode, SfsSpec};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovenantModeName {
    AnnualStream,
    UpfrontNpv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CovenantConfig {
    pub mode: CovenantModeName,
    pub fraction_of_payroll: f64,
    pub duration_years: usize,
    /// Rate for the upfront value; defaults to `sfs_rate_for_fr_pct`.
    #[serde(default)]
    pub npv_rate_pct: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleSource {
    #[default]
    Synthetic,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleConfig {
    pub source: ScheduleSource,
    /// CSV with `year_offset,amount_gbp_bn`, resolved against the config file.
    pub path: Option<PathBuf>,
    /// Present value at `sfs_rate_for_fr_pct` of the synthetic schedule.
    pub pv_gbp_bn: f64,
    pub shape: ScheduleShape,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            source: ScheduleSource::Synthetic,
            path: None,
            pv_gbp_bn: scenarios::SCHEDULE_PV_GBP_BN,
            shape: ScheduleShape::Armadillo {
                peak_year: scenarios::ARMADILLO_PEAK_YEAR,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SfsConfig {
    pub fr_threshold: f64,
    pub confidence: f64,
    pub cadence: Cadence,
    pub pass_mode: PassMode,
}

impl Default for SfsConfig {
    fn default() -> Self {
        let d = SfsSpec::default();
        Self {
            fr_threshold: d.fr_threshold,
            confidence: d.confidence,
            cadence: d.cadence,
            pass_mode: d.pass_mode,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub condition: Option<Condition>,
    pub bracket_low_gbp_bn: f64,
    pub bracket_high_gbp_bn: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            condition: None,
            bracket_low_gbp_bn: 0.0,
            bracket_high_gbp_bn: 300.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RatesConfig {
    pub pre_ret_pct: f64,
    pub post_ret_pct: f64,
    pub fsc_weight_pre: f64,
    /// Synthetic flat accrual schedule, valued at the blended FSC rate.
    pub accrual_pv_gbp_bn: f64,
    pub accrual_years: usize,
    pub deltas_ppt: Vec<f64>,
    pub deficit_gbp_bn: f64,
    pub recovery_years: usize,
    pub salary_growth_pct: f64,
    pub drc_rate_pct: f64,
}

impl Default for RatesConfig {
    fn default() -> Self {
        Self {
            pre_ret_pct: 3.2,
            post_ret_pct: 1.45,
            fsc_weight_pre: FSC_PRE_WEIGHT,
            accrual_pv_gbp_bn: 3.7,
            accrual_years: 46,
            deltas_ppt: vec![-1.0, -0.5, 0.0, 0.5, 1.0],
            deficit_gbp_bn: 15.0,
            recovery_years: 18,
            salary_growth_pct: 3.1,
            drc_rate_pct: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub equity_mean_pct: f64,
    pub equity_sd_pct: f64,
    pub bond_mean_pct: f64,
    pub bond_sd_pct: f64,
    pub cross_correlation: f64,
    pub return_distribution: ReturnDistribution,
    pub initial_assets_gbp_bn: f64,
    pub equity_fraction: f64,
    pub n_paths: usize,
    pub master_seed: u64,
    pub horizon_years: usize,
    pub payroll_gbp_bn: f64,
    pub covenant: Option<CovenantConfig>,
    pub sfs_rate_for_fr_pct: f64,
    pub schedule: ScheduleConfig,
    pub sfs: SfsConfig,
    pub solver: SolverConfig,
    pub predictiveness_years: Vec<usize>,
    pub rates: RatesConfig,
    pub output_dir: PathBuf,
    pub format: Format,
    /// Directory that relative paths resolve against; set by the loader.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let m = ReturnModel::miles_sefton();
        Self {
            equity_mean_pct: m.equity_mean * 100.0,
            equity_sd_pct: m.equity_sd * 100.0,
            bond_mean_pct: m.bond_mean * 100.0,
            bond_sd_pct: m.bond_sd * 100.0,
            cross_correlation: m.cross_correlation,
            return_distribution: m.distribution,
            initial_assets_gbp_bn: 100.0,
            equity_fraction: 0.1,
            n_paths: 1000,
            master_seed: scenarios::REFERENCE_SEED,
            horizon_years: 65,
            payroll_gbp_bn: scenarios::PAYROLL_GBP_BN,
            covenant: None,
            sfs_rate_for_fr_pct: scenarios::SFS_RATE * 100.0,
            schedule: ScheduleConfig::default(),
            sfs: SfsConfig::default(),
            solver: SolverConfig::default(),
            predictiveness_years: vec![3, 6, 9, 18, 30, 63],
            rates: RatesConfig::default(),
            output_dir: PathBuf::from("out"),
            format: Format::Csv,
            base_dir: PathBuf::from("."),
        }
    }
}

fn finite(name: &str, v: f64) -> CliResult<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::field(name, format!("{v} is not a finite number")))
    }
}

fn non_negative(name: &str, v: f64) -> CliResult<f64> {
    if finite(name, v)? < 0.0 {
        return Err(CliError::field(name, format!("{v} must be >= 0")));
    }
    Ok(v)
}

fn rate_pct(name: &str, pct: f64) -> CliResult<DiscountRate> {
    DiscountRate::from_pct(finite(name, pct)?).map_err(|e| CliError::field(name, e))
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Data(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Checks every field before any work starts.
    pub fn validate(&self) -> CliResult<()> {
        self.return_model()?;
        if !(0.0..=1.0).contains(&self.equity_fraction) {
            return Err(CliError::field(
                "equity_fraction",
                format!("{} is outside [0, 1]", self.equity_fraction),
            ));
        }
        non_negative("initial_assets_gbp_bn", self.initial_assets_gbp_bn)?;
        if self.n_paths == 0 {
            return Err(CliError::field("n_paths", "must be at least 1"));
        }
        if self.horizon_years == 0 {
            return Err(CliError::field("horizon_years", "must be at least 1"));
        }
        if !(self.payroll_gbp_bn.is_finite() && self.payroll_gbp_bn > 0.0) {
            return Err(CliError::field(
                "payroll_gbp_bn",
                format!("{} must be > 0", self.payroll_gbp_bn),
            ));
        }
        self.sfs_rate()?;
        self.covenant()?;
        self.sfs_spec()?;
        let s = &self.solver;
        non_negative("solver.bracket_low_gbp_bn", s.bracket_low_gbp_bn)?;
        if !(finite("solver.bracket_high_gbp_bn", s.bracket_high_gbp_bn)? > s.bracket_low_gbp_bn) {
            return Err(CliError::field(
                "solver.bracket_high_gbp_bn",
                "must exceed solver.bracket_low_gbp_bn",
            ));
        }
        if let Some(&y) = self
            .predictiveness_years
            .iter()
            .find(|&&y| y == 0 || y > self.horizon_years)
        {
            return Err(CliError::field(
                "predictiveness_years",
                format!("year {y} is outside 1..={}", self.horizon_years),
            ));
        }
        self.fsc_base()?;
        let r = &self.rates;
        if r.recovery_years == 0 {
            return Err(CliError::field(
                "rates.recovery_years",
                "must be at least 1",
            ));
        }
        non_negative("rates.deficit_gbp_bn", r.deficit_gbp_bn)?;
        rate_pct("rates.drc_rate_pct", r.drc_rate_pct)?;
        if !(finite("rates.salary_growth_pct", r.salary_growth_pct)? > -100.0) {
            return Err(CliError::field("rates.salary_growth_pct", "must be > -100"));
        }
        for &d in &r.deltas_ppt {
            finite("rates.deltas_ppt", d)?;
        }
        match self.schedule.source {
            ScheduleSource::Csv if self.schedule.path.is_none() => Err(CliError::field(
                "schedule.path",
                "required when schedule.source is csv",
            )),
            ScheduleSource::Synthetic => {
                if !(self.schedule.pv_gbp_bn.is_finite() && self.schedule.pv_gbp_bn > 0.0) {
                    return Err(CliError::field("schedule.pv_gbp_bn", "must be > 0"));
                }
                self.schedule().map(|_| ())
            }
            ScheduleSource::Csv => Ok(()),
        }
    }

    pub fn return_model(&self) -> CliResult<ReturnModel> {
        let pct = |name: &str, v: f64| finite(name, v).map(|v| v / 100.0);
        let model = ReturnModel {
            equity_mean: pct("equity_mean_pct", self.equity_mean_pct)?,
            equity_sd: pct("equity_sd_pct", self.equity_sd_pct)?,
            bond_mean: pct("bond_mean_pct", self.bond_mean_pct)?,
            bond_sd: pct("bond_sd_pct", self.bond_sd_pct)?,
            cross_correlation: finite("cross_correlation", self.cross_correlation)?,
            distribution: self.return_distribution,
        };
        if model.equity_sd < 0.0 {
            return Err(CliError::field("equity_sd_pct", "must be >= 0"));
        }
        if model.bond_sd < 0.0 {
            return Err(CliError::field("bond_sd_pct", "must be >= 0"));
        }
        if !(-1.0..=1.0).contains(&model.cross_correlation) {
            return Err(CliError::field("cross_correlation", "must lie in [-1, 1]"));
        }
        model.validate()?;
        Ok(model)
    }

    pub fn sfs_rate(&self) -> CliResult<DiscountRate> {
        rate_pct("sfs_rate_for_fr_pct", self.sfs_rate_for_fr_pct)
    }

    pub fn covenant(&self) -> CliResult<Option<CovenantSupport>> {
        let Some(c) = &self.covenant else {
            return Ok(None);
        };
        let mode = match c.mode {
            CovenantModeName::AnnualStream => CovenantMode::AnnualStream,
            CovenantModeName::UpfrontNpv => CovenantMode::UpfrontNpv {
                rate: match c.npv_rate_pct {
                    Some(p) => rate_pct("covenant.npv_rate_pct", p)?,
                    None => self.sfs_rate()?,
                },
            },
        };
        non_negative("covenant.fraction_of_payroll", c.fraction_of_payroll)?;
        Ok(Some(CovenantSupport::new(
            self.payroll_gbp_bn,
            c.fraction_of_payroll,
            c.duration_years,
            mode,
        )?))
    }

    pub fn sfs_spec(&self) -> CliResult<SfsSpec> {
        let s = &self.sfs;
        if !(s.fr_threshold.is_finite() && s.fr_threshold > 0.0) {
            return Err(CliError::field("sfs.fr_threshold", "must be > 0"));
        }
        if !(s.confidence > 0.0 && s.confidence < 1.0) {
            return Err(CliError::field(
                "sfs.confidence",
                "must lie strictly between 0 and 1",
            ));
        }
        Ok(SfsSpec {
            fr_threshold: s.fr_threshold,
            confidence: s.confidence,
            cadence: s.cadence,
            pass_mode: s.pass_mode,
        })
    }

    pub fn schedule(&self) -> CliResult<CashflowSchedule> {
        match self.schedule.source {
            ScheduleSource::Synthetic => make_synthetic_schedule(
                self.schedule.pv_gbp_bn,
                self.sfs_rate()?,
                self.horizon_years,
                self.schedule.shape,
            )
            .map_err(|e| CliError::field("schedule.shape", e)),
            ScheduleSource::Csv => {
                let path =
                    self.resolve(self.schedule.path.as_deref().expect("checked by validate"));
                let file = fs::File::open(&path).map_err(|e| {
                    CliError::Data(format!("cannot open schedule {}: {e}", path.display()))
                })?;
                let s = CashflowSchedule::read_csv(file)
                    .map_err(|e| CliError::Data(format!("schedule {}: {e}", path.display())))?;
                if s.horizon() != self.horizon_years {
                    return Err(CliError::field(
                        "horizon_years",
                        format!(
                            "{} does not match the {}-year schedule in {}",
                            self.horizon_years,
                            s.horizon(),
                            path.display()
                        ),
                    ));
                }
                Ok(s)
            }
        }
    }

    pub fn runoff_config(&self) -> CliResult<RunoffConfig> {
        self.validate()?;
        Ok(RunoffConfig {
            initial_assets: self.initial_assets_gbp_bn,
            schedule: self.schedule()?,
            weights: PortfolioWeights::new(self.equity_fraction)?,
            model: self.return_model()?,
            covenant: self.covenant()?,
            sfs_rate_for_fr: self.sfs_rate()?,
        })
    }

    pub fn fsc_base(&self) -> CliResult<FscBase> {
        let r = &self.rates;
        let ddr = DualDiscountRate::new(
            rate_pct("rates.pre_ret_pct", r.pre_ret_pct)?,
            rate_pct("rates.post_ret_pct", r.post_ret_pct)?,
        );
        if !(0.0..=1.0).contains(&r.fsc_weight_pre) {
            return Err(CliError::field(
                "rates.fsc_weight_pre",
                "must lie in [0, 1]",
            ));
        }
        let blended = runoff_core::rates::ddr_combine(&ddr, r.fsc_weight_pre)?;
        if !(r.accrual_pv_gbp_bn.is_finite() && r.accrual_pv_gbp_bn >= 0.0) {
            return Err(CliError::field("rates.accrual_pv_gbp_bn", "must be >= 0"));
        }
        if r.accrual_years == 0 {
            return Err(CliError::field("rates.accrual_years", "must be at least 1"));
        }
        let accrual = if r.accrual_pv_gbp_bn == 0.0 {
            CashflowSchedule::flat(0.0, r.accrual_years)?
        } else {
            make_synthetic_schedule(
                r.accrual_pv_gbp_bn,
                blended,
                r.accrual_years,
                ScheduleShape::Flat,
            )?
        };
        Ok(FscBase {
            accrual,
            ddr,
            weight_pre: r.fsc_weight_pre,
            payroll: self.payroll_gbp_bn,
        })
    }

    /// Relative to the working directory, unlike input paths.
    pub fn output_dir(&self) -> PathBuf {
        self.output_dir.clone()
    }

    pub fn solver_conditions(&self) -> Vec<Condition> {
        match self.solver.condition {
            Some(c) => vec![c],
            None => vec![Condition::BenefitPayment, Condition::FundingRatio],
        }
    }
}

/// Both rate components, in the order sensitivity tables are written.
pub const DDR_COMPONENTS: [(DdrComponent, &str); 2] = [
    (DdrComponent::PreRet, "pre_ret"),
    (DdrComponent::PostRet, "post_ret"),
];

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    fn schema() -> Value {
        serde_json::from_str(include_str!("../config.schema.json")).unwrap()
    }

    fn keys(v: &Value) -> Vec<String> {
        let mut k: Vec<String> = v.as_object().unwrap().keys().cloned().collect();
        k.sort();
        k
    }

    #[test]
    fn schema_lists_every_field() {
        let defaults = serde_json::to_value(RunConfig::default()).unwrap();
        let schema = schema();
        assert_eq!(keys(&schema["properties"]), keys(&defaults));
        for nested in ["rates", "sfs", "solver"] {
            let props = &schema["properties"][nested]["properties"];
            if props.is_object() {
                assert_eq!(keys(props), keys(&defaults[nested]), "{nested}");
            }
        }
    }

    #[test]
    fn defaults_validate() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn bundled_configs_load() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
        for name in [
            "bonds_100.json",
            "equities_covenant.json",
            "deterministic.json",
        ] {
            let cfg = RunConfig::load(&dir.join(name)).unwrap();
            cfg.validate().unwrap();
            cfg.schedule().unwrap();
        }
    }
}
