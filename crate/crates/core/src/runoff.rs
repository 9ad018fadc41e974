//! Run-off simulation of scheme assets against a closed benefit schedule.
//!
//! Within year `t` the order is fixed: covenant inflow, benefit payment,
//! then the portfolio return for year `t`. A path whose assets cannot cover a
//! payment is exhausted in that year, its assets are set to zero and stay
//! there, and every later payment goes unpaid.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cashflow::{liability_profile, present_value, CashflowSchedule, DiscountRate};
use crate::error::{Error, Result};
use crate::returns::{portfolio_return, PathStream, PortfolioWeights, ReturnModel, SeedSpec};

pub const DEFAULT_N_PATHS: usize = 1000;
pub const DEFAULT_HORIZON_YEARS: usize = 65;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum CovenantMode {
    /// Present value of the whole stream, added to assets at year 0.
    UpfrontNpv { rate: DiscountRate },
    /// `fraction × payroll` paid in at the start of each of the first `duration` years.
    AnnualStream,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovenantSupport {
    pub payroll: f64,
    pub fraction_of_payroll: f64,
    pub duration_years: usize,
    pub mode: CovenantMode,
}

impl CovenantSupport {
    pub fn new(
        payroll: f64,
        fraction_of_payroll: f64,
        duration_years: usize,
        mode: CovenantMode,
    ) -> Result<Self> {
        if !(payroll.is_finite() && payroll >= 0.0) {
            return Err(Error::domain(format!(
                "covenant payroll {payroll} must be >= 0"
            )));
        }
        if !(fraction_of_payroll.is_finite() && fraction_of_payroll >= 0.0) {
            return Err(Error::domain(format!(
                "covenant fraction of payroll {fraction_of_payroll} must be >= 0"
            )));
        }
        Ok(Self {
            payroll,
            fraction_of_payroll,
            duration_years,
            mode,
        })
    }

    pub fn annual_amount(&self) -> f64 {
        self.payroll * self.fraction_of_payroll
    }

    /// Present value of the stream at `rate`, using the same discounting as
    /// [`present_value`].
    pub fn present_value(&self, rate: DiscountRate) -> f64 {
        if self.duration_years == 0 {
            return 0.0;
        }
        let stream = CashflowSchedule::flat(self.annual_amount(), self.duration_years)
            .expect("non-negative covenant amounts");
        present_value(&stream, rate)
    }

    /// Assets added at year 0.
    pub fn upfront_value(&self) -> f64 {
        match self.mode {
            CovenantMode::UpfrontNpv { rate } => self.present_value(rate),
            CovenantMode::AnnualStream => 0.0,
        }
    }

    /// Inflow at the start of `year` (1-based).
    pub fn inflow(&self, year: usize) -> f64 {
        match self.mode {
            CovenantMode::AnnualStream if (1..=self.duration_years).contains(&year) => {
                self.annual_amount()
            }
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunoffConfig {
    pub initial_assets: f64,
    pub schedule: CashflowSchedule,
    pub weights: PortfolioWeights,
    pub model: ReturnModel,
    pub covenant: Option<CovenantSupport>,
    /// Rate used to value remaining liabilities in the funding ratio.
    pub sfs_rate_for_fr: DiscountRate,
}

impl RunoffConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.initial_assets.is_finite() && self.initial_assets >= 0.0) {
            return Err(Error::domain(format!(
                "initial assets {} must be >= 0",
                self.initial_assets
            )));
        }
        self.model.validate()
    }

    pub fn horizon(&self) -> usize {
        self.schedule.horizon()
    }

    pub fn with_initial_assets(&self, initial_assets: f64) -> Self {
        Self {
            initial_assets,
            ..self.clone()
        }
    }

    /// Assets at year 0, including any upfront covenant value.
    pub fn starting_assets(&self) -> f64 {
        self.initial_assets
            + self
                .covenant
                .as_ref()
                .map_or(0.0, CovenantSupport::upfront_value)
    }

    fn inflow(&self, year: usize) -> f64 {
        self.covenant.as_ref().map_or(0.0, |c| c.inflow(year))
    }
}

/// One simulated path. Vectors are indexed by year, index 0 being the start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathResult {
    pub assets_by_year: Vec<f64>,
    /// `None` once no liabilities remain (the run is complete).
    pub funding_ratio_by_year: Vec<Option<f64>>,
    pub inflow_by_year: Vec<f64>,
    pub paid_by_year: Vec<f64>,
    pub return_by_year: Vec<f64>,
    pub exhaustion_year: Option<usize>,
    /// Total benefits that could not be paid.
    pub shortfall: f64,
    pub final_assets: f64,
}

impl PathResult {
    pub fn exhausted(&self) -> bool {
        self.exhaustion_year.is_some()
    }

    pub fn horizon(&self) -> usize {
        self.assets_by_year.len() - 1
    }

    pub fn funding_ratio(&self, year: usize) -> Option<f64> {
        self.funding_ratio_by_year.get(year).copied().flatten()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub paths: Vec<PathResult>,
    pub config: RunoffConfig,
    pub master_seed: u64,
    pub n_paths: usize,
}

impl Ensemble {
    pub fn horizon(&self) -> usize {
        self.config.horizon()
    }

    pub fn exhausted_fraction(&self) -> f64 {
        self.paths.iter().filter(|p| p.exhausted()).count() as f64 / self.n_paths as f64
    }
}

pub fn simulate_path(config: &RunoffConfig, seed: SeedSpec) -> Result<PathResult> {
    config.validate()?;
    let liabilities = liability_profile(&config.schedule, config.sfs_rate_for_fr);
    Ok(run_path(config, &liabilities, seed))
}

fn funding_ratio(assets: f64, liabilities: f64) -> Option<f64> {
    (liabilities > 0.0).then(|| assets / liabilities)
}

fn run_path(config: &RunoffConfig, liabilities: &[f64], seed: SeedSpec) -> PathResult {
    let h = config.horizon();
    let mut stream = PathStream::new(seed);
    let mut assets_by_year = Vec::with_capacity(h + 1);
    let mut fr = Vec::with_capacity(h + 1);
    let mut inflow_by_year = vec![0.0; h + 1];
    let mut paid_by_year = vec![0.0; h + 1];
    let mut return_by_year = vec![0.0; h + 1];

    let mut assets = config.starting_assets();
    let mut exhaustion_year = None;
    let mut shortfall = 0.0;
    assets_by_year.push(assets);
    fr.push(funding_ratio(assets, liabilities[0]));

    for year in 1..=h {
        let due = config.schedule.amount(year);
        let (r_equity, r_bond) = stream.returns(&config.model, year);
        let r = portfolio_return(r_equity, r_bond, config.weights);
        return_by_year[year] = r;
        if exhaustion_year.is_some() {
            shortfall += due;
        } else {
            let inflow = config.inflow(year);
            inflow_by_year[year] = inflow;
            let available = assets + inflow;
            let after = available - due;
            if after < 0.0 {
                exhaustion_year = Some(year);
                paid_by_year[year] = available;
                shortfall += -after;
                assets = 0.0;
            } else {
                paid_by_year[year] = due;
                assets = after * (1.0 + r);
            }
        }
        assets_by_year.push(assets);
        fr.push(funding_ratio(assets, liabilities[year]));
    }

    PathResult {
        final_assets: assets,
        assets_by_year,
        funding_ratio_by_year: fr,
        inflow_by_year,
        paid_by_year,
        return_by_year,
        exhaustion_year,
        shortfall,
    }
}

/// Runs `n_paths` paths in parallel. Path `i` uses seed `(master_seed, i)`.
pub fn simulate_ensemble(
    config: &RunoffConfig,
    n_paths: usize,
    master_seed: u64,
) -> Result<Ensemble> {
    simulate(config, n_paths, master_seed, true)
}

/// As [`simulate_ensemble`] but on the calling thread only.
pub fn simulate_ensemble_serial(
    config: &RunoffConfig,
    n_paths: usize,
    master_seed: u64,
) -> Result<Ensemble> {
    simulate(config, n_paths, master_seed, false)
}

fn simulate(
    config: &RunoffConfig,
    n_paths: usize,
    master_seed: u64,
    parallel: bool,
) -> Result<Ensemble> {
    if n_paths == 0 {
        return Err(Error::domain("an ensemble needs at least one path"));
    }
    config.validate()?;
    let liabilities = liability_profile(&config.schedule, config.sfs_rate_for_fr);
    let seed = |i: usize| SeedSpec::new(master_seed, i as u64);
    let paths: Vec<PathResult> = if parallel {
        (0..n_paths)
            .into_par_iter()
            .map(|i| run_path(config, &liabilities, seed(i)))
            .collect()
    } else {
        (0..n_paths)
            .map(|i| run_path(config, &liabilities, seed(i)))
            .collect()
    };
    Ok(Ensemble {
        paths,
        config: config.clone(),
        master_seed,
        n_paths,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat_config(initial: f64) -> RunoffConfig {
        RunoffConfig {
            initial_assets: initial,
            schedule: CashflowSchedule::flat(10.0, 5).unwrap(),
            weights: PortfolioWeights::new(0.5).unwrap(),
            model: ReturnModel::deterministic(0.0, 0.0).unwrap(),
            covenant: None,
            sfs_rate_for_fr: DiscountRate::ZERO,
        }
    }

    #[test]
    fn exact_funding_survives_with_nothing_left() {
        let p = simulate_path(&flat_config(50.0), SeedSpec::new(1, 0)).unwrap();
        assert!(!p.exhausted());
        assert_eq!(p.final_assets, 0.0);
        assert_eq!(p.shortfall, 0.0);
        assert_eq!(p.assets_by_year, vec![50.0, 40.0, 30.0, 20.0, 10.0, 0.0]);
        assert_eq!(p.funding_ratio_by_year[..5], [Some(1.0); 5]);
        assert_eq!(p.funding_ratio_by_year[5], None);
    }

    #[test]
    fn underfunded_path_exhausts_in_final_year() {
        let p = simulate_path(&flat_config(40.0), SeedSpec::new(1, 0)).unwrap();
        assert_eq!(p.exhaustion_year, Some(5));
        assert_eq!(p.shortfall, 10.0);
        assert_eq!(p.final_assets, 0.0);
        assert_eq!(p.paid_by_year[5], 0.0);
    }

    #[test]
    fn exhausted_assets_stay_at_zero() {
        let p = simulate_path(&flat_config(15.0), SeedSpec::new(1, 0)).unwrap();
        assert_eq!(p.exhaustion_year, Some(2));
        assert!(p.assets_by_year[2..].iter().all(|&a| a == 0.0));
        assert_eq!(p.shortfall, 35.0);
        assert_eq!(p.funding_ratio(3), Some(0.0));
    }

    #[test]
    fn annual_covenant_stream_closes_the_gap() {
        let mut cfg = flat_config(45.0);
        cfg.covenant =
            Some(CovenantSupport::new(10.0, 0.1, 5, CovenantMode::AnnualStream).unwrap());
        let p = simulate_path(&cfg, SeedSpec::new(3, 0)).unwrap();
        // 45 + 5 × 1 inflows against 5 × 10 outflows at zero return.
        assert!(!p.exhausted());
        assert_eq!(p.final_assets, 0.0);
        assert_eq!(p.inflow_by_year[1..].iter().sum::<f64>(), 5.0);
    }

    #[test]
    fn upfront_covenant_adds_present_value_at_start() {
        let mut cfg = flat_config(45.0);
        cfg.covenant = Some(
            CovenantSupport::new(
                10.0,
                0.1,
                5,
                CovenantMode::UpfrontNpv {
                    rate: DiscountRate::ZERO,
                },
            )
            .unwrap(),
        );
        let p = simulate_path(&cfg, SeedSpec::new(3, 0)).unwrap();
        assert_eq!(p.assets_by_year[0], 50.0);
        assert!(!p.exhausted());
    }

    #[test]
    fn ensemble_of_one_matches_simulate_path() {
        let mut cfg = flat_config(60.0);
        cfg.model = ReturnModel::miles_sefton();
        let e = simulate_ensemble(&cfg, 1, 99).unwrap();
        assert_eq!(
            e.paths[0],
            simulate_path(&cfg, SeedSpec::new(99, 0)).unwrap()
        );
    }

    #[test]
    fn degenerate_failing_ensemble_fails_everywhere() {
        let e = simulate_ensemble(&flat_config(40.0), 25, 5).unwrap();
        assert_eq!(e.exhausted_fraction(), 1.0);
        assert!(e.paths.iter().all(|p| p == &e.paths[0]));
        assert!(simulate_ensemble(&flat_config(40.0), 0, 5).is_err());
    }

    #[test]
    fn invalid_config_is_rejected() {
        assert!(simulate_path(&flat_config(-1.0), SeedSpec::new(0, 0)).is_err());
    }
}
