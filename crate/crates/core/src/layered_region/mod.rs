//! Layered decoding and secrecy rate regions.

mod dmc;
mod gaussian;
mod search;

use serde::Serialize;

pub use dmc::{dmc_rate_tuple, LayerInformation, LayeredDistribution};
pub use gaussian::{
    gaussian_layer_terms, mimo_rate_tuple, siso_rate_tuple, siso_region_samples, CovarianceChain,
    LayerTerms, PowerAllocation, RegionSample, BUDGET_TOL,
};
pub(crate) use gaussian::rates_from_terms;
pub use search::{
    weighted_boundary_search_mimo, weighted_boundary_search_siso, MimoSearchConfig,
    MimoSearchResult, SisoSearchConfig, SisoSearchResult,
};

/// Rates `R_1..R_K` in bits per channel use. `rates` is clamped at zero,
/// `raw` keeps the unclamped formula values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateTuple {
    pub rates: Vec<f64>,
    pub raw: Vec<f64>,
}

impl RateTuple {
    pub fn from_raw(raw: Vec<f64>) -> Self {
        let rates = raw.iter().map(|r| r.max(0.0)).collect();
        Self { rates, raw }
    }

    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.rates.iter().sum()
    }

    /// `Σ w_k R_k`.
    pub fn weighted(&self, weights: &[f64]) -> f64 {
        self.rates.iter().zip(weights).map(|(r, w)| r * w).sum()
    }

    pub fn max_abs_diff(&self, other: &RateTuple) -> f64 {
        self.rates
            .iter()
            .zip(&other.rates)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}
