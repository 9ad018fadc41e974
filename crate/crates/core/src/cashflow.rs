//! Benefit cashflow schedules and their valuation.
//!
//! A schedule holds one amount (£bn) per year offset `1..=H`. Valuation
//! discounts the amount at offset `t` by `(1 + r)^t`; the run-off simulator
//! pays the same amount at the start of its year `t`, before that year's
//! investment return is applied.

use std::collections::BTreeMap;
use std::io;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Projected annual benefit outflows, £bn, for year offsets `1..=horizon`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct CashflowSchedule {
    amounts: Vec<f64>,
}

impl CashflowSchedule {
    pub fn new(amounts: Vec<f64>) -> Result<Self> {
        if amounts.is_empty() {
            return Err(Error::domain(
                "cashflow schedule needs a horizon of at least one year",
            ));
        }
        if let Some((i, a)) = amounts
            .iter()
            .enumerate()
            .find(|(_, a)| !a.is_finite() || **a < 0.0)
        {
            return Err(Error::domain(format!(
                "cashflow amount at year offset {} is {a}; amounts must be finite and >= 0",
                i + 1
            )));
        }
        Ok(Self { amounts })
    }

    /// A schedule paying `amount` every year for `horizon` years.
    pub fn flat(amount: f64, horizon: usize) -> Result<Self> {
        Self::new(vec![amount; horizon])
    }

    pub fn horizon(&self) -> usize {
        self.amounts.len()
    }

    pub fn amounts(&self) -> &[f64] {
        &self.amounts
    }

    /// Amount paid at year offset `year` (1-based). Zero outside `1..=H`.
    pub fn amount(&self, year: usize) -> f64 {
        if year == 0 {
            return 0.0;
        }
        self.amounts.get(year - 1).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.amounts.iter().sum()
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.amounts.iter().map(|a| a * factor).collect())
    }

    /// Reads `cashflows.csv` (`year_offset,amount_gbp_bn`, offsets contiguous from 1).
    pub fn read_csv<R: io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["year_offset", "amount_gbp_bn"] {
            return Err(Error::data(format!(
                "cashflows.csv header must be `year_offset,amount_gbp_bn`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut amounts = Vec::new();
        for (line, record) in rdr.records().enumerate() {
            let record = record?;
            let offset: usize = parse_field(&record, 0, line)?;
            let amount: f64 = parse_field(&record, 1, line)?;
            if offset != amounts.len() + 1 {
                return Err(Error::data(format!(
                    "year_offset {offset} on data row {} breaks the contiguous sequence 1..H",
                    line + 1
                )));
            }
            amounts.push(amount);
        }
        Self::new(amounts).map_err(|e| Error::data(e.to_string()))
    }

    pub fn write_csv<W: io::Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["year_offset", "amount_gbp_bn"])?;
        for (i, a) in self.amounts.iter().enumerate() {
            wtr.write_record([(i + 1).to_string(), a.to_string()])?;
        }
        wtr.flush().map_err(|e| Error::data(e.to_string()))?;
        Ok(())
    }
}

impl TryFrom<Vec<f64>> for CashflowSchedule {
    type Error = Error;

    fn try_from(amounts: Vec<f64>) -> Result<Self> {
        Self::new(amounts)
    }
}

impl From<CashflowSchedule> for Vec<f64> {
    fn from(s: CashflowSchedule) -> Self {
        s.amounts
    }
}

fn parse_field<T: std::str::FromStr>(
    record: &csv::StringRecord,
    idx: usize,
    line: usize,
) -> Result<T> {
    let raw = record.get(idx).ok_or_else(|| {
        Error::data(format!(
            "data row {} is missing column {}",
            line + 1,
            idx + 1
        ))
    })?;
    raw.parse()
        .map_err(|_| Error::data(format!("data row {}: cannot parse `{raw}`", line + 1)))
}

/// Annual discount rate as a fraction (`-0.0075` is −0.75%). Always `> -1`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct DiscountRate(f64);

impl DiscountRate {
    pub const ZERO: DiscountRate = DiscountRate(0.0);

    pub fn new(rate: f64) -> Result<Self> {
        if !rate.is_finite() || rate <= -1.0 {
            return Err(Error::domain(format!(
                "discount rate {rate} must be finite and > -1"
            )));
        }
        Ok(Self(rate))
    }

    pub fn from_pct(pct: f64) -> Result<Self> {
        Self::new(pct / 100.0)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `(1 + r)^-years`.
    pub fn discount_factor(self, years: usize) -> f64 {
        (1.0 + self.0).powi(-(years as i32))
    }
}

impl TryFrom<f64> for DiscountRate {
    type Error = Error;

    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<DiscountRate> for f64 {
    fn from(r: DiscountRate) -> Self {
        r.0
    }
}

/// Price index levels keyed by calendar year.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CpiIndex {
    levels: BTreeMap<i32, f64>,
}

impl CpiIndex {
    pub fn new(levels: impl IntoIterator<Item = (i32, f64)>) -> Result<Self> {
        let levels: BTreeMap<i32, f64> = levels.into_iter().collect();
        if let Some((y, l)) = levels.iter().find(|(_, l)| !l.is_finite() || **l <= 0.0) {
            return Err(Error::domain(format!(
                "CPI level for {y} is {l}; levels must be > 0"
            )));
        }
        Ok(Self { levels })
    }

    pub fn level(&self, year: i32) -> Result<f64> {
        self.levels
            .get(&year)
            .copied()
            .ok_or_else(|| Error::Lookup(format!("CPI index has no level for year {year}")))
    }

    pub fn years(&self) -> impl Iterator<Item = i32> + '_ {
        self.levels.keys().copied()
    }
}

/// `Σ_{t=1..H} amounts[t] / (1+r)^t`, summed in ascending `t`.
pub fn present_value(schedule: &CashflowSchedule, rate: DiscountRate) -> f64 {
    schedule
        .amounts
        .iter()
        .enumerate()
        .map(|(i, a)| a * rate.discount_factor(i + 1))
        .sum()
}

/// Value at the end of year `asof_year` of the cashflows strictly after it.
pub fn remaining_liabilities(
    schedule: &CashflowSchedule,
    asof_year: usize,
    rate: DiscountRate,
) -> Result<f64> {
    let h = schedule.horizon();
    if asof_year > h {
        return Err(Error::domain(format!(
            "as-of year {asof_year} outside 0..={h}"
        )));
    }
    Ok(schedule.amounts[asof_year..]
        .iter()
        .enumerate()
        .map(|(i, a)| a * rate.discount_factor(i + 1))
        .sum())
}

/// `remaining_liabilities` for every as-of year `0..=H`.
pub fn liability_profile(schedule: &CashflowSchedule, rate: DiscountRate) -> Vec<f64> {
    (0..=schedule.horizon())
        .map(|t| remaining_liabilities(schedule, t, rate).expect("as-of year within horizon"))
        .collect()
}

/// Level of the first armadillo payment relative to its peak.
pub const ARMADILLO_START_FRACTION: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScheduleShape {
    Flat,
    /// Amounts proportional to `H - t`, reaching zero at the horizon.
    LinearDecay,
    /// Linear rise from half the peak at year 1 to the peak at `peak_year`,
    /// then linear decay to zero at the horizon.
    Armadillo {
        peak_year: usize,
    },
}

impl ScheduleShape {
    fn unit_amounts(self, horizon: usize) -> Result<Vec<f64>> {
        if horizon == 0 {
            return Err(Error::domain("horizon must be at least one year"));
        }
        let h = horizon as f64;
        match self {
            ScheduleShape::Flat => Ok(vec![1.0; horizon]),
            ScheduleShape::LinearDecay => {
                if horizon < 2 {
                    return Err(Error::domain(
                        "linear_decay needs a horizon of at least two years",
                    ));
                }
                Ok((1..=horizon).map(|t| h - t as f64).collect())
            }
            ScheduleShape::Armadillo { peak_year } => {
                if peak_year == 0 || peak_year >= horizon {
                    return Err(Error::domain(format!(
                        "armadillo peak year {peak_year} must lie in 1..{horizon}"
                    )));
                }
                let peak = peak_year as f64;
                Ok((1..=horizon)
                    .map(|t| {
                        let t = t as f64;
                        if t <= peak {
                            if peak_year == 1 {
                                1.0
                            } else {
                                ARMADILLO_START_FRACTION
                                    + (1.0 - ARMADILLO_START_FRACTION) * (t - 1.0) / (peak - 1.0)
                            }
                        } else {
                            (h - t) / (h - peak)
                        }
                    })
                    .collect())
            }
        }
    }
}

/// Builds a schedule of the given shape whose present value at `rate` is `total_pv`.
pub fn make_synthetic_schedule(
    total_pv: f64,
    rate: DiscountRate,
    horizon: usize,
    shape: ScheduleShape,
) -> Result<CashflowSchedule> {
    if !(total_pv.is_finite() && total_pv > 0.0) {
        return Err(Error::domain(format!(
            "total present value {total_pv} must be > 0"
        )));
    }
    let unit = CashflowSchedule::new(shape.unit_amounts(horizon)?)?;
    let unit_pv = present_value(&unit, rate);
    if !(unit_pv > 0.0 && unit_pv.is_finite()) {
        return Err(Error::domain("shape has no positive present value"));
    }
    unit.scaled(total_pv / unit_pv)
}

pub fn cpi_adjust(value: f64, from_year: i32, to_year: i32, index: &CpiIndex) -> Result<f64> {
    let from = index.level(from_year)?;
    let to = index.level(to_year)?;
    if from_year == to_year {
        return Ok(value);
    }
    Ok(value * to / from)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rate(r: f64) -> DiscountRate {
        DiscountRate::new(r).unwrap()
    }

    #[test]
    fn present_value_examples() {
        let flat = CashflowSchedule::flat(10.0, 5).unwrap();
        assert_eq!(present_value(&flat, DiscountRate::ZERO), 50.0);
        let single = CashflowSchedule::new(vec![100.0]).unwrap();
        assert!((present_value(&single, rate(0.10)) - 90.909_090_909_090_9).abs() < 1e-9);
    }

    #[test]
    fn rate_at_or_below_minus_one_is_rejected() {
        assert!(matches!(DiscountRate::new(-1.0), Err(Error::Domain(_))));
        assert!(DiscountRate::new(-1.5).is_err());
        assert!(DiscountRate::new(f64::NAN).is_err());
        assert!(DiscountRate::new(-0.999).is_ok());
    }

    #[test]
    fn schedule_validation() {
        assert!(CashflowSchedule::new(vec![]).is_err());
        assert!(CashflowSchedule::new(vec![1.0, -0.1]).is_err());
        assert!(CashflowSchedule::new(vec![0.0]).is_ok());
    }

    #[test]
    fn remaining_liabilities_examples() {
        let flat = CashflowSchedule::flat(10.0, 5).unwrap();
        assert_eq!(
            remaining_liabilities(&flat, 2, DiscountRate::ZERO).unwrap(),
            30.0
        );
        assert_eq!(remaining_liabilities(&flat, 5, rate(0.03)).unwrap(), 0.0);
        assert_eq!(
            remaining_liabilities(&flat, 0, DiscountRate::ZERO).unwrap(),
            50.0
        );
        assert!(remaining_liabilities(&flat, 6, DiscountRate::ZERO).is_err());
    }

    #[test]
    fn synthetic_flat_and_linear_decay() {
        let s = make_synthetic_schedule(50.0, DiscountRate::ZERO, 5, ScheduleShape::Flat).unwrap();
        for a in s.amounts() {
            assert!((a - 10.0).abs() < 1e-12);
        }
        let s = make_synthetic_schedule(30.0, DiscountRate::ZERO, 3, ScheduleShape::LinearDecay)
            .unwrap();
        assert!(s.amounts().windows(2).all(|w| w[0] > w[1]));
        assert!((s.total() - 30.0).abs() < 1e-12);
    }

    #[test]
    fn synthetic_infeasible_shapes() {
        let r = DiscountRate::ZERO;
        assert!(
            make_synthetic_schedule(10.0, r, 10, ScheduleShape::Armadillo { peak_year: 0 })
                .is_err()
        );
        assert!(
            make_synthetic_schedule(10.0, r, 10, ScheduleShape::Armadillo { peak_year: 10 })
                .is_err()
        );
        assert!(make_synthetic_schedule(10.0, r, 1, ScheduleShape::LinearDecay).is_err());
        assert!(make_synthetic_schedule(0.0, r, 5, ScheduleShape::Flat).is_err());
        assert!(make_synthetic_schedule(10.0, r, 0, ScheduleShape::Flat).is_err());
    }

    #[test]
    fn armadillo_rises_then_decays_to_zero() {
        let s = make_synthetic_schedule(
            100.0,
            rate(-0.0075),
            65,
            ScheduleShape::Armadillo { peak_year: 15 },
        )
        .unwrap();
        let a = s.amounts();
        assert!(a[..15].windows(2).all(|w| w[1] > w[0]));
        assert!(a[14..].windows(2).all(|w| w[1] < w[0]));
        assert_eq!(a[64], 0.0);
        assert!((a[0] / a[14] - ARMADILLO_START_FRACTION).abs() < 1e-12);
    }

    #[test]
    fn cpi_adjust_examples() {
        let idx = CpiIndex::new([(2020, 100.0), (2023, 110.0)]).unwrap();
        assert_eq!(cpi_adjust(100.0, 2020, 2020, &idx).unwrap(), 100.0);
        assert!((cpi_adjust(100.0, 2020, 2023, &idx).unwrap() - 110.0).abs() < 1e-12);
        let back = cpi_adjust(
            cpi_adjust(100.0, 2020, 2023, &idx).unwrap(),
            2023,
            2020,
            &idx,
        )
        .unwrap();
        assert!((back - 100.0).abs() < 1e-12);
        assert!(matches!(
            cpi_adjust(1.0, 2019, 2020, &idx),
            Err(Error::Lookup(_))
        ));
        assert!(CpiIndex::new([(2020, 0.0)]).is_err());
    }

    #[test]
    fn csv_round_trip_is_byte_identical() {
        let s = make_synthetic_schedule(
            100.0,
            rate(-0.0075),
            65,
            ScheduleShape::Armadillo { peak_year: 15 },
        )
        .unwrap();
        let mut first = Vec::new();
        s.write_csv(&mut first).unwrap();
        let parsed = CashflowSchedule::read_csv(first.as_slice()).unwrap();
        assert_eq!(parsed, s);
        let mut second = Vec::new();
        parsed.write_csv(&mut second).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn csv_rejects_gaps_and_bad_headers() {
        let gap = "year_offset,amount_gbp_bn\n1,2.0\n3,2.0\n";
        assert!(matches!(
            CashflowSchedule::read_csv(gap.as_bytes()),
            Err(Error::Data(_))
        ));
        let hdr = "year,amount\n1,2.0\n";
        assert!(CashflowSchedule::read_csv(hdr.as_bytes()).is_err());
        let neg = "year_offset,amount_gbp_bn\n1,-2.0\n";
        assert!(CashflowSchedule::read_csv(neg.as_bytes()).is_err());
    }
}
