//! Superposition coding with random binning at small blocklengths.
//!
//! Codebooks are generated from a layered distribution and evaluated
//! exactly: block error probability under MAP decoding and per-receiver
//! leakage are computed by enumerating every message, bin index and channel
//! output.

mod analysis;
mod codebook;
mod trend;

use serde::Serialize;

pub use analysis::{
    canonical_likelihood, decode, exact_error_probability, exact_leakage, exact_leakage_given, leakage_report,
    monte_carlo_error, LeakageReport, MonteCarloEstimate, MAX_JOINT, MAX_OUTPUTS,
};
pub use codebook::{admissible_rate, CodebookShape, LayerRates, LayeredCodebook, MAX_CODEWORDS, RATE_TOL};
pub use trend::{derive_seed, leakage_trend, ReceiverTrend, TrendConfig, TrendMean, TrendSample, TrendTable};

use crate::channel_models::DmcBroadcast;
use crate::error::{Error, Result};
use crate::layered_region::{LayerInformation, LayeredDistribution};

/// Slack below which a condition still counts as met.
pub const CONDITION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionKind {
    /// `R̃_k <= I(U_k;Y_k|U_{k-1})` (`R_1 <= I(U_1;Y_1)` for `k = 1`).
    Decodability,
    /// `R̃_k - R_k >= I(U_k;Y_{k-1}|U_{k-1})`.
    Binning,
    /// `R̃_j - R_j >= I(U_j;Y_k|U_{j-1})` for an eavesdropping level `k < j`.
    LevelBinning,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateCondition {
    pub kind: ConditionKind,
    pub layer: usize,
    pub receiver: usize,
    pub rate: f64,
    pub information: f64,
    /// Nonnegative when the condition holds.
    pub slack: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateValidation {
    pub conditions: Vec<RateCondition>,
}

impl RateValidation {
    /// Decodability and binning conditions all hold.
    pub fn all_passed(&self) -> bool {
        self.conditions
            .iter()
            .filter(|c| c.kind != ConditionKind::LevelBinning)
            .all(|c| c.passed)
    }

    pub fn level_conditions_passed(&self) -> bool {
        self.conditions.iter().all(|c| c.passed)
    }
}

fn condition(kind: ConditionKind, layer: usize, receiver: usize, rate: f64, information: f64) -> RateCondition {
    let slack = match kind {
        ConditionKind::Decodability => information - rate,
        _ => rate - information,
    };
    RateCondition { kind, layer, receiver, rate, information, slack, passed: slack >= -CONDITION_TOL }
}

/// Reports every rate condition of the layered binning scheme with its slack.
pub fn validate_rates(rates: &LayerRates, channel: &DmcBroadcast, dist: &LayeredDistribution) -> Result<RateValidation> {
    let k = channel.receivers();
    if rates.layers() != k {
        return Err(Error::DimensionMismatch { expected: k, found: rates.layers() });
    }
    let mi = LayerInformation::compute(dist, channel)?;
    let mut conditions = Vec::new();
    for layer in 1..=k {
        conditions.push(condition(
            ConditionKind::Decodability,
            layer,
            layer,
            rates.total[layer - 1],
            mi.get(layer, layer),
        ));
    }
    for layer in 2..=k {
        conditions.push(condition(
            ConditionKind::Binning,
            layer,
            layer - 1,
            rates.binning(layer),
            mi.get(layer, layer - 1),
        ));
    }
    for level in 1..k {
        for layer in level + 1..=k {
            conditions.push(condition(
                ConditionKind::LevelBinning,
                layer,
                level,
                rates.binning(layer),
                mi.get(layer, level),
            ));
        }
    }
    Ok(RateValidation { conditions })
}
