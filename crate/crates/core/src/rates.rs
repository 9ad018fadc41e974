//! Dual discount rates and the contribution rates derived from them.
//!
//! Rates and contribution percentages are fractions here (`0.37` is 37% of
//! payroll); conversion to percent happens at the I/O boundary.

use serde::{Deserialize, Serialize};

use crate::cashflow::{present_value, CashflowSchedule, DiscountRate};
use crate::error::{Error, Result};

/// Weight on the pre-retirement rate in the future service cost rate.
pub const FSC_PRE_WEIGHT: f64 = 0.55;
/// Weight on the pre-retirement rate in the technical provisions rate.
pub const TP_PRE_WEIGHT: f64 = 0.33;
pub const PRE_RET_EQUITY_FRACTION: f64 = 0.9;
pub const POST_RET_EQUITY_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualDiscountRate {
    pub pre_ret: DiscountRate,
    pub post_ret: DiscountRate,
    pub pre_equity_fraction: f64,
    pub post_equity_fraction: f64,
}

impl DualDiscountRate {
    pub fn new(pre_ret: DiscountRate, post_ret: DiscountRate) -> Self {
        Self {
            pre_ret,
            post_ret,
            pre_equity_fraction: PRE_RET_EQUITY_FRACTION,
            post_equity_fraction: POST_RET_EQUITY_FRACTION,
        }
    }

    /// Equity share of the blended portfolio behind a `weight_pre` blend.
    pub fn effective_equity_allocation(&self, weight_pre: f64) -> Result<f64> {
        check_weight(weight_pre)?;
        Ok(weight_pre * self.pre_equity_fraction + (1.0 - weight_pre) * self.post_equity_fraction)
    }

    fn shifted(&self, param: DdrComponent, delta: f64) -> Result<Self> {
        let mut out = *self;
        match param {
            DdrComponent::PreRet => out.pre_ret = DiscountRate::new(self.pre_ret.value() + delta)?,
            DdrComponent::PostRet => {
                out.post_ret = DiscountRate::new(self.post_ret.value() + delta)?
            }
        }
        Ok(out)
    }
}

fn check_weight(weight_pre: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&weight_pre) {
        return Err(Error::domain(format!(
            "pre-retirement weight {weight_pre} outside [0, 1]"
        )));
    }
    Ok(())
}

pub fn ddr_combine(ddr: &DualDiscountRate, weight_pre: f64) -> Result<DiscountRate> {
    check_weight(weight_pre)?;
    DiscountRate::new(weight_pre * ddr.pre_ret.value() + (1.0 - weight_pre) * ddr.post_ret.value())
}

/// Equity share implied by blending a 90/10 and a 10/90 portfolio.
pub fn effective_equity_allocation(weight_pre: f64) -> Result<f64> {
    check_weight(weight_pre)?;
    Ok(weight_pre * PRE_RET_EQUITY_FRACTION + (1.0 - weight_pre) * POST_RET_EQUITY_FRACTION)
}

fn check_payroll(payroll: f64) -> Result<()> {
    if !(payroll.is_finite() && payroll > 0.0) {
        return Err(Error::domain(format!("payroll {payroll} must be > 0")));
    }
    Ok(())
}

/// Present value of accruing benefits as a fraction of one year's payroll.
pub fn fsc_rate(accrual: &CashflowSchedule, fsc_dr: DiscountRate, payroll: f64) -> Result<f64> {
    check_payroll(payroll)?;
    Ok(present_value(accrual, fsc_dr) / payroll)
}

/// Deficit spread evenly over the recovery period, as a fraction of payroll.
pub fn drc_rate_naive(deficit: f64, recovery_years: usize, payroll: f64) -> Result<f64> {
    check_payroll(payroll)?;
    if recovery_years == 0 {
        return Err(Error::domain("recovery period must be at least one year"));
    }
    Ok(deficit / recovery_years as f64 / payroll)
}

/// Level share `p` of a payroll growing at `salary_growth` such that
/// `Σ_{t=1..N} p·payroll·(1+g)^t / (1+dr)^t = deficit`.
pub fn drc_rate_amortized(
    deficit: f64,
    recovery_years: usize,
    payroll: f64,
    dr: DiscountRate,
    salary_growth: f64,
) -> Result<f64> {
    check_payroll(payroll)?;
    if recovery_years == 0 {
        return Err(Error::domain("recovery period must be at least one year"));
    }
    if !(salary_growth.is_finite() && salary_growth > -1.0) {
        return Err(Error::domain(format!(
            "salary growth {salary_growth} must be > -1"
        )));
    }
    if !(deficit.is_finite() && deficit >= 0.0) {
        return Err(Error::domain(format!(
            "deficit {deficit} has no non-negative recovery rate"
        )));
    }
    let growth_over_discount = (1.0 + salary_growth) / (1.0 + dr.value());
    let annuity: f64 = (1..=recovery_years)
        .map(|t| growth_over_discount.powi(t as i32))
        .sum();
    if !(annuity.is_finite() && annuity > 0.0) {
        return Err(Error::domain("recovery annuity factor is not positive"));
    }
    Ok(deficit / (payroll * annuity))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DdrComponent {
    PreRet,
    PostRet,
}

/// Everything `fsc_rate` needs, with the FSC rate built from a dual rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FscBase {
    pub accrual: CashflowSchedule,
    pub ddr: DualDiscountRate,
    pub weight_pre: f64,
    pub payroll: f64,
}

impl FscBase {
    pub fn fsc(&self) -> Result<f64> {
        fsc_rate(
            &self.accrual,
            ddr_combine(&self.ddr, self.weight_pre)?,
            self.payroll,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityRow {
    pub delta_ppt: f64,
    pub fsc: f64,
}

/// FSC with one component rate shifted by each of `deltas_ppt` percentage points.
pub fn fsc_sensitivity(
    base: &FscBase,
    param: DdrComponent,
    deltas_ppt: &[f64],
) -> Result<Vec<SensitivityRow>> {
    deltas_ppt
        .iter()
        .map(|&delta_ppt| {
            let ddr = base.ddr.shifted(param, delta_ppt / 100.0)?;
            let fsc = fsc_rate(
                &base.accrual,
                ddr_combine(&ddr, base.weight_pre)?,
                base.payroll,
            )?;
            Ok(SensitivityRow { delta_ppt, fsc })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContributionBreakdown {
    pub fsc: f64,
    pub drc: f64,
    pub total: f64,
    /// £bn per year.
    pub annual_cost: f64,
}

impl ContributionBreakdown {
    pub fn new(fsc: f64, drc: f64, payroll: f64) -> Result<Self> {
        check_payroll(payroll)?;
        if fsc < 0.0 || drc < 0.0 {
            return Err(Error::domain("contribution rates must be >= 0"));
        }
        let total = fsc + drc;
        Ok(Self {
            fsc,
            drc,
            total,
            annual_cost: total * payroll,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cashflow::{make_synthetic_schedule, ScheduleShape};

    fn r(x: f64) -> DiscountRate {
        DiscountRate::new(x).unwrap()
    }

    #[test]
    fn ddr_combine_examples() {
        let same = DualDiscountRate::new(r(0.03), r(0.03));
        for w in [0.0, 0.33, 0.55, 1.0] {
            assert!((ddr_combine(&same, w).unwrap().value() - 0.03).abs() < 1e-15);
        }
        let ddr = DualDiscountRate::new(r(0.05), r(0.01));
        assert!((ddr_combine(&ddr, FSC_PRE_WEIGHT).unwrap().value() - 0.032).abs() < 1e-15);
        assert!((ddr_combine(&ddr, TP_PRE_WEIGHT).unwrap().value() - 0.0232).abs() < 1e-15);
        assert!(ddr_combine(&ddr, 1.1).is_err());
    }

    #[test]
    fn effective_equity_examples() {
        assert!((effective_equity_allocation(1.0).unwrap() - 0.9).abs() < 1e-15);
        assert!((effective_equity_allocation(0.0).unwrap() - 0.1).abs() < 1e-15);
        assert!((effective_equity_allocation(FSC_PRE_WEIGHT).unwrap() - 0.54).abs() < 1e-12);
        assert!((effective_equity_allocation(TP_PRE_WEIGHT).unwrap() - 0.364).abs() < 1e-12);
        let ddr = DualDiscountRate::new(r(0.05), r(0.01));
        assert_eq!(
            ddr.effective_equity_allocation(0.55).unwrap(),
            effective_equity_allocation(0.55).unwrap()
        );
    }

    #[test]
    fn fsc_rate_examples() {
        let accrual = make_synthetic_schedule(3.7, r(0.02), 40, ScheduleShape::Flat).unwrap();
        assert!((fsc_rate(&accrual, r(0.02), 10.0).unwrap() - 0.37).abs() < 1e-12);
        let zero = CashflowSchedule::flat(0.0, 10).unwrap();
        assert_eq!(fsc_rate(&zero, r(0.02), 10.0).unwrap(), 0.0);
        assert!(
            fsc_rate(&accrual, r(0.03), 10.0).unwrap() < fsc_rate(&accrual, r(0.02), 10.0).unwrap()
        );
        assert!(fsc_rate(&accrual, r(0.02), 0.0).is_err());
    }

    #[test]
    fn drc_naive_examples() {
        assert!((drc_rate_naive(15.0, 18, 10.0).unwrap() - 0.083_333_333_333).abs() < 1e-9);
        assert_eq!(drc_rate_naive(0.0, 18, 10.0).unwrap(), 0.0);
        assert!((drc_rate_naive(7.0, 1, 10.0).unwrap() - 0.7).abs() < 1e-15);
        assert!(drc_rate_naive(7.0, 0, 10.0).is_err());
        assert!(drc_rate_naive(7.0, 1, -10.0).is_err());
    }

    #[test]
    fn drc_amortized_reduces_to_naive() {
        let naive = drc_rate_naive(15.0, 18, 10.0).unwrap();
        assert!((drc_rate_amortized(15.0, 18, 10.0, r(0.0), 0.0).unwrap() - naive).abs() < 1e-15);
        assert!((drc_rate_amortized(15.0, 18, 10.0, r(0.04), 0.04).unwrap() - naive).abs() < 1e-15);
        assert!(drc_rate_amortized(-1.0, 18, 10.0, r(0.0), 0.0).is_err());
    }

    #[test]
    fn sensitivity_is_monotone() {
        let base = FscBase {
            accrual: make_synthetic_schedule(3.7, r(0.02), 40, ScheduleShape::Flat).unwrap(),
            ddr: DualDiscountRate::new(r(0.03), r(0.007)),
            weight_pre: FSC_PRE_WEIGHT,
            payroll: 10.0,
        };
        let rows = fsc_sensitivity(&base, DdrComponent::PreRet, &[0.0, 0.5, 1.0]).unwrap();
        assert_eq!(rows[0].fsc, base.fsc().unwrap());
        assert!(rows.windows(2).all(|w| w[1].fsc < w[0].fsc));
        let post = fsc_sensitivity(&base, DdrComponent::PostRet, &[0.0, 0.5]).unwrap();
        assert!(post[1].fsc < post[0].fsc);
    }

    #[test]
    fn breakdown_cost() {
        let b = ContributionBreakdown::new(0.37, 0.062, 10.0).unwrap();
        assert!((b.total - 0.432).abs() < 1e-15);
        assert!((b.annual_cost - 4.32).abs() < 1e-12);
    }
}
