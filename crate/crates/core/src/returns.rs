//! Annual asset-class returns drawn from counter-addressed random streams.
//!
//! Every `(master_seed, path_index, year)` triple maps to a fixed position in a
//! ChaCha8 keystream: the key is expanded from `master_seed`, the stream id is
//! `path_index` and the word position is `4 * year`. Each year consumes exactly
//! two 64-bit words, turned into a pair of standard normals by the Box–Muller
//! transform, so a draw never depends on what was sampled before it.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lower bound applied to each sampled asset-class return.
pub const RETURN_FLOOR: f64 = -0.999;

const WORDS_PER_YEAR: u128 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReturnDistribution {
    /// `r ~ N(mean, sd²)`.
    #[default]
    Normal,
    /// `1 + r` lognormal with the same arithmetic mean and standard deviation.
    Lognormal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReturnModel {
    pub equity_mean: f64,
    pub equity_sd: f64,
    pub bond_mean: f64,
    pub bond_sd: f64,
    pub cross_correlation: f64,
    #[serde(default)]
    pub distribution: ReturnDistribution,
}

impl ReturnModel {
    pub fn new(
        equity_mean: f64,
        equity_sd: f64,
        bond_mean: f64,
        bond_sd: f64,
        cross_correlation: f64,
    ) -> Result<Self> {
        let model = Self {
            equity_mean,
            equity_sd,
            bond_mean,
            bond_sd,
            cross_correlation,
            distribution: ReturnDistribution::Normal,
        };
        model.validate()?;
        Ok(model)
    }

    /// Equities 4.5% ± 17.5%, bonds −1.0% ± 2.0%, uncorrelated.
    pub fn miles_sefton() -> Self {
        Self::new(0.045, 0.175, -0.010, 0.020, 0.0).expect("valid constants")
    }

    /// Both asset classes return their mean with certainty.
    pub fn deterministic(equity_mean: f64, bond_mean: f64) -> Result<Self> {
        Self::new(equity_mean, 0.0, bond_mean, 0.0, 0.0)
    }

    pub fn with_distribution(mut self, distribution: ReturnDistribution) -> Self {
        self.distribution = distribution;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.equity_mean,
            self.equity_sd,
            self.bond_mean,
            self.bond_sd,
            self.cross_correlation,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("return model parameters must be finite"));
        }
        if self.equity_sd < 0.0 || self.bond_sd < 0.0 {
            return Err(Error::domain("return standard deviations must be >= 0"));
        }
        if self.cross_correlation.abs() > 1.0 {
            return Err(Error::domain(format!(
                "cross correlation {} outside [-1, 1]",
                self.cross_correlation
            )));
        }
        if self.distribution == ReturnDistribution::Lognormal
            && (self.equity_mean <= -1.0 || self.bond_mean <= -1.0)
        {
            return Err(Error::domain("lognormal returns need means > -1"));
        }
        Ok(())
    }

    fn transform(&self, mean: f64, sd: f64, z: f64) -> f64 {
        match self.distribution {
            ReturnDistribution::Normal => mean + sd * z,
            ReturnDistribution::Lognormal => {
                let gross = 1.0 + mean;
                let s2 = (1.0 + (sd / gross).powi(2)).ln();
                (gross.ln() - 0.5 * s2 + s2.sqrt() * z).exp() - 1.0
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct PortfolioWeights {
    equity_fraction: f64,
}

impl PortfolioWeights {
    pub fn new(equity_fraction: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&equity_fraction) {
            return Err(Error::domain(format!(
                "equity fraction {equity_fraction} outside [0, 1]"
            )));
        }
        Ok(Self { equity_fraction })
    }

    pub fn equity_fraction(self) -> f64 {
        self.equity_fraction
    }

    pub fn bond_fraction(self) -> f64 {
        1.0 - self.equity_fraction
    }
}

impl TryFrom<f64> for PortfolioWeights {
    type Error = Error;

    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<PortfolioWeights> for f64 {
    fn from(w: PortfolioWeights) -> Self {
        w.equity_fraction
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub path_index: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64, path_index: u64) -> Self {
        Self {
            master_seed,
            path_index,
        }
    }
}

/// Annually rebalanced portfolio return.
pub fn portfolio_return(r_equity: f64, r_bond: f64, weights: PortfolioWeights) -> f64 {
    weights.equity_fraction * r_equity + weights.bond_fraction() * r_bond
}

/// Random stream for one path. Cheap to create; reused across a path's years.
pub(crate) struct PathStream {
    rng: ChaCha8Rng,
}

impl PathStream {
    pub(crate) fn new(seed: SeedSpec) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.master_seed);
        rng.set_stream(seed.path_index);
        Self { rng }
    }

    pub(crate) fn standard_normals(&mut self, year: usize) -> (f64, f64) {
        self.rng.set_word_pos(year as u128 * WORDS_PER_YEAR);
        // u1 in (0, 1], u2 in [0, 1)
        let u1 = ((self.rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
        let u2 = (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = std::f64::consts::TAU * u2;
        (radius * angle.cos(), radius * angle.sin())
    }

    pub(crate) fn raw_returns(&mut self, model: &ReturnModel, year: usize) -> (f64, f64) {
        let (z_equity, z_other) = self.standard_normals(year);
        let rho = model.cross_correlation;
        let z_bond = rho * z_equity + (1.0 - rho * rho).max(0.0).sqrt() * z_other;
        (
            model.transform(model.equity_mean, model.equity_sd, z_equity),
            model.transform(model.bond_mean, model.bond_sd, z_bond),
        )
    }

    pub(crate) fn returns(&mut self, model: &ReturnModel, year: usize) -> (f64, f64) {
        let (e, b) = self.raw_returns(model, year);
        (e.max(RETURN_FLOOR), b.max(RETURN_FLOOR))
    }
}

/// `(equity, bond)` returns for `year` before flooring.
pub fn sample_raw_year_returns(model: &ReturnModel, seed: SeedSpec, year: usize) -> (f64, f64) {
    PathStream::new(seed).raw_returns(model, year)
}

/// `(equity, bond)` returns for `year`, each floored at [`RETURN_FLOOR`].
pub fn sample_year_returns(model: &ReturnModel, seed: SeedSpec, year: usize) -> (f64, f64) {
    PathStream::new(seed).returns(model, year)
}
