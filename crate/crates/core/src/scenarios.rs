//! Preset run-off configurations used by the reports and tests.
//!
//! All presets share an armadillo-shaped 65-year schedule worth £100bn at a
//! −0.75% discount rate, which is also the rate used for funding ratios, and
//! the 4.5% ± 17.5% equity / −1.0% ± 2.0% bond return model.

use crate::cashflow::{make_synthetic_schedule, CashflowSchedule, DiscountRate, ScheduleShape};
use crate::returns::{PortfolioWeights, ReturnModel};
use crate::runoff::{CovenantMode, CovenantSupport, RunoffConfig, DEFAULT_HORIZON_YEARS};

pub const SFS_RATE: f64 = -0.0075;
pub const SCHEDULE_PV_GBP_BN: f64 = 100.0;
pub const ARMADILLO_PEAK_YEAR: usize = 15;
pub const PAYROLL_GBP_BN: f64 = 10.0;
/// Master seed used by every seeded reproduction.
pub const REFERENCE_SEED: u64 = 20_231_018;

pub fn sfs_rate() -> DiscountRate {
    DiscountRate::new(SFS_RATE).expect("valid constant")
}

pub fn reference_schedule() -> CashflowSchedule {
    make_synthetic_schedule(
        SCHEDULE_PV_GBP_BN,
        sfs_rate(),
        DEFAULT_HORIZON_YEARS,
        ScheduleShape::Armadillo {
            peak_year: ARMADILLO_PEAK_YEAR,
        },
    )
    .expect("valid reference schedule")
}

/// 10% of payroll for 30 years, paid in annually.
pub fn annual_covenant() -> CovenantSupport {
    CovenantSupport::new(PAYROLL_GBP_BN, 0.10, 30, CovenantMode::AnnualStream)
        .expect("valid covenant")
}

/// 7% of payroll for 20 years, valued upfront at the funding-ratio rate.
pub fn upfront_covenant() -> CovenantSupport {
    CovenantSupport::new(
        PAYROLL_GBP_BN,
        0.07,
        20,
        CovenantMode::UpfrontNpv { rate: sfs_rate() },
    )
    .expect("valid covenant")
}

fn base(
    initial_assets: f64,
    equity_fraction: f64,
    covenant: Option<CovenantSupport>,
) -> RunoffConfig {
    RunoffConfig {
        initial_assets,
        schedule: reference_schedule(),
        weights: PortfolioWeights::new(equity_fraction).expect("valid weights"),
        model: ReturnModel::miles_sefton(),
        covenant,
        sfs_rate_for_fr: sfs_rate(),
    }
}

/// 90% bonds, no covenant.
pub fn bonds_no_covenant(initial_assets: f64) -> RunoffConfig {
    base(initial_assets, 0.1, None)
}

/// 90% bonds with the annual covenant stream.
pub fn bonds_with_covenant(initial_assets: f64) -> RunoffConfig {
    base(initial_assets, 0.1, Some(annual_covenant()))
}

/// 60% equities with the annual covenant stream.
pub fn equities_with_covenant(initial_assets: f64) -> RunoffConfig {
    base(initial_assets, 0.6, Some(annual_covenant()))
}

/// 90% bonds with covenant support added upfront as a present value.
pub fn bonds_upfront_covenant(initial_assets: f64) -> RunoffConfig {
    base(initial_assets, 0.1, Some(upfront_covenant()))
}
