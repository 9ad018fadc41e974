//! Randomised invariants over the pure arithmetic and small simulations.

use proptest::prelude::*;

use runoff_core::cashflow::{
    make_synthetic_schedule, present_value, CashflowSchedule, CpiIndex, DiscountRate, ScheduleShape,
};
use runoff_core::regression::{ln_tp_fit, ols_fit, BenefitsRegime, ValuationRecord};
use runoff_core::reliance::{rag_actual, rag_target, tp_liability_bounds, RelianceInputs};
use runoff_core::returns::{PortfolioWeights, ReturnModel, SeedSpec};
use runoff_core::runoff::{simulate_path, CovenantMode, CovenantSupport, RunoffConfig};

fn rate(x: f64) -> DiscountRate {
    DiscountRate::new(x).unwrap()
}

fn shape_strategy() -> impl Strategy<Value = (ScheduleShape, usize)> {
    (3usize..80).prop_flat_map(|h| {
        prop_oneof![
            Just((ScheduleShape::Flat, h)),
            Just((ScheduleShape::LinearDecay, h)),
            (1..h).prop_map(move |p| (ScheduleShape::Armadillo { peak_year: p }, h)),
        ]
    })
}

fn schedule_strategy() -> impl Strategy<Value = CashflowSchedule> {
    prop::collection::vec(0.0f64..5.0, 1..70)
        .prop_filter("needs a positive amount", |v| v.iter().any(|&a| a > 1e-6))
        .prop_map(|v| CashflowSchedule::new(v).unwrap())
}

fn inputs_strategy() -> impl Strategy<Value = RelianceInputs> {
    (
        0.0f64..200.0,
        0.0f64..200.0,
        0.0f64..250.0,
        0.0f64..20.0,
        0.0f64..60.0,
    )
        .prop_map(|(a, tp, sfs, tr, affrc)| RelianceInputs {
            assets: a,
            tp_liabilities: tp,
            sfs_liabilities: sfs,
            transition_risk: tr,
            affrc,
        })
}

/// Quarter-unit grid: every sum and `1.5×` product is exact, so ties are hit often.
fn grid_inputs_strategy() -> impl Strategy<Value = RelianceInputs> {
    (0u32..400, 0u32..400, 0u32..600, 0u32..40, 0u32..160).prop_map(|(a, tp, sfs, tr, affrc)| {
        RelianceInputs {
            assets: a as f64 / 4.0,
            tp_liabilities: tp as f64 / 4.0,
            sfs_liabilities: sfs as f64 / 4.0,
            transition_risk: tr as f64 / 4.0,
            affrc: affrc as f64 / 4.0,
        }
    })
}

fn check_actual(i: &RelianceInputs) -> Result<(), TestCaseError> {
    let s = rag_actual(i);
    let eq3 = i.assets - i.tp_liabilities >= 0.0;
    let eq4 = i.assets - i.sfs_liabilities <= -(1.5 * i.affrc - i.transition_risk);
    prop_assert_eq!(s.is_green(), eq3);
    prop_assert_eq!(s.is_red(), eq4);
    let eq5 = i.tp_liabilities <= i.assets
        && i.assets <= i.sfs_liabilities - (1.5 * i.affrc - i.transition_risk);
    prop_assert_eq!(s.simultaneous_flag, eq5);
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn actual_status_matches_reduced_forms(i in inputs_strategy()) {
        check_actual(&i)?;
    }

    #[test]
    fn actual_status_on_exact_grid(i in grid_inputs_strategy()) {
        check_actual(&i)?;
    }

    #[test]
    fn target_status_matches_tp_bounds(i in inputs_strategy()) {
        let b = tp_liability_bounds(i.sfs_liabilities, i.transition_risk, i.affrc);
        let s = rag_target(&i);
        prop_assert_eq!(s.is_green(), i.tp_liabilities >= b.green_lower);
        prop_assert_eq!(s.is_red(), i.tp_liabilities <= b.red_upper);
        prop_assert!(!s.simultaneous_flag);
        if i.affrc > 0.0 {
            prop_assert!(b.green_lower > b.red_upper);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn pv_strictly_decreasing_in_rate(s in schedule_strategy(), r in -0.05f64..0.1, dr in 1e-4f64..0.05) {
        prop_assert!(present_value(&s, rate(r + dr)) < present_value(&s, rate(r)));
    }

    #[test]
    fn synthetic_schedules_round_trip((shape, h) in shape_strategy(), pv in 0.1f64..500.0, r in -0.02f64..0.08) {
        let s = make_synthetic_schedule(pv, rate(r), h, shape).unwrap();
        prop_assert_eq!(s.horizon(), h);
        prop_assert!(s.amounts().iter().all(|&a| a >= 0.0));
        let back = present_value(&s, rate(r));
        prop_assert!((back - pv).abs() <= 1e-9 * pv, "{} vs {}", back, pv);
    }

    #[test]
    fn ols_r2_invariant_under_affine_x(
        pts in prop::collection::vec((-10.0f64..10.0, -50.0f64..50.0), 3..40),
        scale in prop_oneof![0.1f64..10.0, -10.0f64..-0.1],
        shift in -100.0f64..100.0,
    ) {
        let Ok(base) = ols_fit(&pts) else { return Ok(()) };
        let moved: Vec<_> = pts.iter().map(|&(x, y)| (scale * x + shift, y)).collect();
        let fit = ols_fit(&moved).unwrap();
        prop_assert!((fit.r_squared - base.r_squared).abs() < 1e-9);
        prop_assert!((fit.slope * scale - base.slope).abs() < 1e-9 * base.slope.abs().max(1.0));
    }

    #[test]
    fn ols_r2_is_squared_pearson(pts in prop::collection::vec((-10.0f64..10.0, -50.0f64..50.0), 3..40)) {
        let Ok(fit) = ols_fit(&pts) else { return Ok(()) };
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
        prop_assume!(syy > 1e-9);
        prop_assert!((fit.r_squared - sxy * sxy / (sxx * syy)).abs() < 1e-12);
    }

    #[test]
    fn ln_tp_fit_is_ols_of_transformed_points(
        rows in prop::collection::vec((0.0f64..5.0, 20.0f64..150.0, 2011i32..2024), 2..12),
        cpi in prop::collection::vec(90.0f64..140.0, 13),
    ) {
        let index = CpiIndex::new((2011..2024).zip(cpi.iter().copied())).unwrap();
        let records: Vec<_> = rows.iter().map(|&(y, tp, year)| ValuationRecord {
            date: format!("{year}-03-31"),
            label: format!("v{year}"),
            source: "valuation".into(),
            benefits_regime: BenefitsRegime::Pre2022,
            gilt_yield_pct: y,
            fsc_pct: None,
            tp_liabilities_gbp_bn: Some(tp),
            sfs_liabilities_gbp_bn: None,
            assets_gbp_bn: None,
            provenance: "generated".into(),
        }).collect();
        let points: Vec<_> = rows.iter().map(|&(y, tp, year)| {
            let level = |yr: i32| cpi[(yr - 2011) as usize];
            (y, (tp * level(2023) / level(year)).ln())
        }).collect();
        match (ln_tp_fit(&records, &index, 2023), ols_fit(&points)) {
            (Ok(a), Ok(b)) => {
                prop_assert!((a.slope - b.slope).abs() < 1e-9);
                prop_assert!((a.intercept - b.intercept).abs() < 1e-9);
                prop_assert!((a.r_squared - b.r_squared).abs() < 1e-9);
            }
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "disagree: {:?} vs {:?}", a, b),
        }
    }
}

fn small_config(
    initial: f64,
    equity: f64,
    schedule: CashflowSchedule,
    covenant: Option<CovenantSupport>,
) -> RunoffConfig {
    RunoffConfig {
        initial_assets: initial,
        schedule,
        weights: PortfolioWeights::new(equity).unwrap(),
        model: ReturnModel::miles_sefton(),
        covenant,
        sfs_rate_for_fr: rate(-0.0075),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn ledger_identity_holds(
        s in schedule_strategy(),
        initial in 0.0f64..150.0,
        equity in 0.0f64..=1.0,
        annual in prop::option::of((0.0f64..0.2, 0usize..40)),
        seed in any::<u64>(),
        path in 0u64..1000,
    ) {
        let covenant = annual.map(|(f, d)| CovenantSupport::new(10.0, f, d, CovenantMode::AnnualStream).unwrap());
        let cfg = small_config(initial, equity, s.clone(), covenant);
        let p = simulate_path(&cfg, SeedSpec::new(seed, path)).unwrap();
        for t in 1..=s.horizon() {
            let expect = (p.assets_by_year[t - 1] + p.inflow_by_year[t] - p.paid_by_year[t]) * (1.0 + p.return_by_year[t]);
            let got = p.assets_by_year[t];
            prop_assert!((got - expect).abs() <= 1e-9 * expect.abs().max(1.0), "year {}: {} vs {}", t, got, expect);
            prop_assert!(p.paid_by_year[t] <= s.amount(t));
            if p.exhaustion_year.is_none_or(|y| y > t) {
                prop_assert_eq!(p.paid_by_year[t], s.amount(t));
            }
        }
    }

    #[test]
    fn more_assets_never_hurts(
        s in schedule_strategy(),
        initial in 0.0f64..150.0,
        extra in 0.0f64..50.0,
        equity in 0.0f64..=1.0,
        seed in any::<u64>(),
    ) {
        let lo = small_config(initial, equity, s.clone(), None);
        let hi = lo.with_initial_assets(initial + extra);
        for path in 0..8 {
            let a = simulate_path(&lo, SeedSpec::new(seed, path)).unwrap();
            let b = simulate_path(&hi, SeedSpec::new(seed, path)).unwrap();
            if !a.exhausted() {
                prop_assert!(!b.exhausted());
            }
            if let (Some(ya), Some(yb)) = (a.exhaustion_year, b.exhaustion_year) {
                prop_assert!(yb >= ya);
            }
        }
    }

    #[test]
    fn covenant_modes_agree_at_zero_rates(
        amounts in prop::collection::vec(0.0f64..3.0, 5..60),
        initial in 0.0f64..80.0,
        fraction in 0.0f64..0.2,
        duration in 0usize..40,
    ) {
        // Stream years past the horizon never arrive, so only compare streams that fit.
        prop_assume!(duration <= amounts.len());
        let s = CashflowSchedule::new(amounts).unwrap();
        let mut cfg = small_config(initial, 0.5, s, None);
        cfg.model = ReturnModel::deterministic(0.0, 0.0).unwrap();
        let annual = CovenantSupport::new(10.0, fraction, duration, CovenantMode::AnnualStream).unwrap();
        let upfront = CovenantSupport { mode: CovenantMode::UpfrontNpv { rate: DiscountRate::ZERO }, ..annual };
        let pa = simulate_path(&RunoffConfig { covenant: Some(annual), ..cfg.clone() }, SeedSpec::new(1, 0)).unwrap();
        let pu = simulate_path(&RunoffConfig { covenant: Some(upfront), ..cfg }, SeedSpec::new(1, 0)).unwrap();
        prop_assume!(pa.exhaustion_year.is_none_or(|y| y > duration));
        prop_assert_eq!(pa.exhaustion_year, pu.exhaustion_year);
        prop_assert!((pa.final_assets - pu.final_assets).abs() < 1e-9);
    }
}
