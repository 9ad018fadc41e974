//! Run-off simulation and valuation analytics for a defined-benefit pension
//! scheme.
//!
//! - [`cashflow`]: benefit schedules, present values, CPI adjustment.
//! - [`returns`]: reproducible annual equity and bond returns.
//! - [`runoff`]: asset paths paying benefits in run-off, with covenant support.
//! - [`sfs`]: the benefit payment and funding ratio conditions, the
//!   required-assets solver and funding-ratio predictiveness.
//! - [`rates`]: dual discount rates and contribution rates.
//! - [`reliance`]: Actual and Target Reliance and their RAG statuses.
//! - [`regression`]: OLS fits against the gilt yield.

pub mod cashflow;
pub mod datasets;
pub mod error;
pub mod rates;
pub mod regression;
pub mod reliance;
pub mod returns;
pub mod runoff;
pub mod scenarios;
pub mod sfs;

pub use error::{Error, Result};
