//! Closed-form and brute-force oracles for the deterministic arithmetic.

use runoff_core::cashflow::{
    liability_profile, make_synthetic_schedule, present_value, remaining_liabilities,
    CashflowSchedule, DiscountRate, ScheduleShape,
};
use runoff_core::rates::{
    drc_rate_amortized, drc_rate_naive, effective_equity_allocation, fsc_sensitivity, DdrComponent,
    DualDiscountRate, FscBase, FSC_PRE_WEIGHT, TP_PRE_WEIGHT,
};
use runoff_core::reliance::{affordable_risk_capacity, AFFRC_PAYROLL_FRACTION, AFFRC_YEARS};

fn rate(x: f64) -> DiscountRate {
    DiscountRate::new(x).unwrap()
}

/// Level annuity-immediate: a·(1 − v^n)/r.
fn annuity(amount: f64, n: usize, r: f64) -> f64 {
    if r == 0.0 {
        return amount * n as f64;
    }
    amount * (1.0 - (1.0 + r).powi(-(n as i32))) / r
}

#[test]
fn flat_pv_matches_annuity_formula() {
    for (amount, n, r) in [
        (1.0, 10, 0.05),
        (2.5, 65, -0.0075),
        (1.0, 30, 0.02),
        (3.0, 40, 0.0),
    ] {
        let pv = present_value(&CashflowSchedule::flat(amount, n).unwrap(), rate(r));
        let oracle = annuity(amount, n, r);
        assert!(
            (pv - oracle).abs() <= 1e-12 * oracle.abs().max(1.0),
            "{pv} vs {oracle}"
        );
    }
}

#[test]
fn pv_matches_backward_recursion() {
    // Horner from the far end: V_{t-1} = (V_t + a_t)/(1+r).
    let s = make_synthetic_schedule(
        100.0,
        rate(-0.0075),
        65,
        ScheduleShape::Armadillo { peak_year: 15 },
    )
    .unwrap();
    let r = -0.0075;
    let mut v = 0.0;
    for &a in s.amounts().iter().rev() {
        v = (v + a) / (1.0 + r);
    }
    assert!((present_value(&s, rate(r)) - v).abs() < 1e-9);
    assert!((v - 100.0).abs() < 1e-9);
}

#[test]
fn remaining_liabilities_satisfy_roll_forward() {
    let s = make_synthetic_schedule(
        100.0,
        rate(-0.0075),
        65,
        ScheduleShape::Armadillo { peak_year: 15 },
    )
    .unwrap();
    let r = rate(-0.0075);
    let profile = liability_profile(&s, r);
    assert_eq!(profile.len(), 66);
    for t in 0..65 {
        let lt = remaining_liabilities(&s, t, r).unwrap();
        let next = remaining_liabilities(&s, t + 1, r).unwrap();
        assert!(
            (lt - (next + s.amount(t + 1)) / (1.0 + r.value())).abs() < 1e-9,
            "year {t}"
        );
        assert_eq!(lt, profile[t]);
    }
    assert_eq!(profile[65], 0.0);
}

#[test]
fn affrc_matches_annuity_oracle() {
    let zero = affordable_risk_capacity(
        10.0,
        AFFRC_PAYROLL_FRACTION,
        AFFRC_YEARS,
        DiscountRate::ZERO,
    )
    .unwrap();
    assert_eq!(zero.central, 30.0);
    assert!((zero.low - 28.5).abs() < 1e-12 && (zero.high - 31.5).abs() < 1e-12);
    let two = affordable_risk_capacity(10.0, 0.10, 30, rate(0.02)).unwrap();
    assert!((two.central - annuity(1.0, 30, 0.02)).abs() < 1e-12);
    assert!((two.central - 22.40).abs() < 0.01);
}

#[test]
fn equity_allocations_are_exact() {
    assert!((effective_equity_allocation(FSC_PRE_WEIGHT).unwrap() - 0.54).abs() < 1e-15);
    assert!((effective_equity_allocation(TP_PRE_WEIGHT).unwrap() - 0.364).abs() < 1e-15);
}

/// Growth-over-discount spread that makes the amortized DRC equal `target`, by bisection.
fn solve_spread(target: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 0.2);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let p = drc_rate_amortized(15.0, 18, 10.0, DiscountRate::ZERO, mid).unwrap();
        if p > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn drc_reconciliation() {
    assert!((drc_rate_naive(15.0, 18, 10.0).unwrap() - 15.0 / 180.0).abs() < 1e-15);
    let g = solve_spread(0.062);
    assert!((g - 0.031).abs() < 0.002, "spread {g}");
    let p = drc_rate_amortized(15.0, 18, 10.0, DiscountRate::ZERO, g).unwrap();
    assert!((p - 0.062).abs() < 1e-9);
    // Only the ratio (1+g)/(1+dr) matters.
    let dr = 0.02;
    let g2 = (1.0 + g) * (1.0 + dr) - 1.0;
    let p2 = drc_rate_amortized(15.0, 18, 10.0, rate(dr), g2).unwrap();
    assert!((p2 - p).abs() < 1e-12);
}

#[test]
fn fsc_of_37_percent() {
    let accrual = make_synthetic_schedule(3.7, rate(0.007), 40, ScheduleShape::Flat).unwrap();
    let base = FscBase {
        accrual,
        ddr: DualDiscountRate::new(rate(0.007), rate(0.007)),
        weight_pre: FSC_PRE_WEIGHT,
        payroll: 10.0,
    };
    assert!((base.fsc().unwrap() - 0.37).abs() < 1e-12);
}

/// Macaulay duration at rate `r`.
fn duration(s: &CashflowSchedule, r: f64) -> f64 {
    let pv = present_value(s, rate(r));
    s.amounts()
        .iter()
        .enumerate()
        .map(|(i, a)| (i + 1) as f64 * a / (1.0 + r).powi(i as i32 + 1))
        .sum::<f64>()
        / pv
}

#[test]
fn half_point_pre_ret_shift_moves_fsc_one_to_four_points() {
    let r = 0.02;
    let accrual = make_synthetic_schedule(3.7, rate(r), 46, ScheduleShape::Flat).unwrap();
    let d = duration(&accrual, r);
    assert!((d - 20.0).abs() < 0.1, "duration {d}");
    let base = FscBase {
        accrual,
        ddr: DualDiscountRate::new(rate(r), rate(r)),
        weight_pre: FSC_PRE_WEIGHT,
        payroll: 10.0,
    };
    let rows = fsc_sensitivity(&base, DdrComponent::PreRet, &[0.0, 0.5]).unwrap();
    let change_ppt = (rows[1].fsc - rows[0].fsc) * 100.0;
    assert!((-4.0..=-1.0).contains(&change_ppt), "change {change_ppt}");
    // First-order duration estimate of the same move.
    let estimate = -rows[0].fsc * 100.0 * d / (1.0 + r) * FSC_PRE_WEIGHT * 0.005;
    assert!((change_ppt - estimate).abs() < 0.2);
}
