//! Datasets bundled with the crate.
//!
//! `valuations.csv` rows tagged `digitized-approx` are approximate readings of
//! published charts, not published figures; `stated` rows carry published values.

use crate::error::Result;
use crate::regression::{read_gilt_yields, read_valuations, GiltYield, ValuationRecord};

pub const VALUATIONS_CSV: &str = include_str!("../data/valuations.csv");
/// Bank of England 20-year nominal gilt yields, quarter ends 2020-2023.
pub const BOE_GILT_YIELDS_CSV: &str = include_str!("../data/gilt_yields.csv");
/// Single-equivalent gilt yields used by the scheme over the same quarters.
pub const SCHEME_GILT_YIELDS_CSV: &str = include_str!("../data/uss_gilt_yields.csv");

pub fn valuations() -> Result<Vec<ValuationRecord>> {
    read_valuations(VALUATIONS_CSV.as_bytes())
}

pub fn boe_gilt_yields() -> Result<Vec<GiltYield>> {
    read_gilt_yields(BOE_GILT_YIELDS_CSV.as_bytes())
}

pub fn scheme_gilt_yields() -> Result<Vec<GiltYield>> {
    read_gilt_yields(SCHEME_GILT_YIELDS_CSV.as_bytes())
}
