use xsum::{Xsum, XsumSmall};
use rayon::prelude::*;
use serde::Serialize;

use super::analysis::{exact_error_probability, exact_leakage};
use super::codebook::{LayerRates, LayeredCodebook};
use crate::channel_models::DmcBroadcast;
use crate::error::Result;
use crate::layered_region::LayeredDistribution;

/// Codebook seed for blocklength `n` and seed index `index`.
pub fn derive_seed(master: u64, n: usize, index: usize) -> u64 {
    let mut z = master
        ^ (n as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (index as u64).wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrendConfig {
    pub channel: DmcBroadcast,
    pub dist: LayeredDistribution,
    pub rates: LayerRates,
    pub blocklengths: Vec<usize>,
    pub seeds: usize,
    pub master_seed: u64,
    /// Also compute exact error probabilities (costly for large codebooks).
    pub error_probability: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrendSample {
    pub n: usize,
    pub seed_index: usize,
    pub seed: u64,
    pub receiver: usize,
    pub error_probability: Option<f64>,
    pub leakage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrendMean {
    pub n: usize,
    pub receiver: usize,
    pub mean_leakage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReceiverTrend {
    pub receiver: usize,
    pub nonincreasing_pairs: usize,
    pub pairs: usize,
    /// `None` with fewer than two blocklengths.
    pub fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrendTable {
    pub samples: Vec<TrendSample>,
    pub means: Vec<TrendMean>,
    pub trends: Vec<ReceiverTrend>,
}

/// Exact leakage (and optionally error probability) for every blocklength,
/// seed and receiver, with across-seed means and the fraction of adjacent
/// blocklength pairs over which the mean leakage does not increase.
pub fn leakage_trend(config: &TrendConfig) -> Result<TrendTable> {
    let k = config.channel.receivers();
    let jobs: Vec<(usize, usize)> = config
        .blocklengths
        .iter()
        .flat_map(|&n| (0..config.seeds).map(move |s| (n, s)))
        .collect();
    let per_job = jobs
        .par_iter()
        .map(|&(n, s)| -> Result<Vec<TrendSample>> {
            let seed = derive_seed(config.master_seed, n, s);
            let cb = LayeredCodebook::generate(&config.dist, &config.rates, n, seed)?;
            (1..=k)
                .map(|r| {
                    let error_probability = if config.error_probability {
                        Some(exact_error_probability(&cb, &config.channel, r)?)
                    } else {
                        None
                    };
                    Ok(TrendSample {
                        n,
                        seed_index: s,
                        seed,
                        receiver: r,
                        error_probability,
                        leakage: exact_leakage(&cb, &config.channel, r)?,
                    })
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;
    let samples: Vec<TrendSample> = per_job.into_iter().flatten().collect();

    let mut means = Vec::new();
    for &n in &config.blocklengths {
        for r in 1..=k {
            let mut acc = XsumSmall::new();
            for s in samples.iter().filter(|s| s.n == n && s.receiver == r) {
                acc.add(s.leakage);
            }
            means.push(TrendMean { n, receiver: r, mean_leakage: acc.sum() / config.seeds.max(1) as f64 });
        }
    }
    let trends = (1..=k)
        .map(|r| {
            let series: Vec<f64> = means.iter().filter(|m| m.receiver == r).map(|m| m.mean_leakage).collect();
            let pairs = series.len().saturating_sub(1);
            let nonincreasing_pairs = series.windows(2).filter(|w| w[1] <= w[0]).count();
            ReceiverTrend {
                receiver: r,
                nonincreasing_pairs,
                pairs,
                fraction: (pairs > 0).then(|| nonincreasing_pairs as f64 / pairs as f64),
            }
        })
        .collect();
    Ok(TrendTable { samples, means, trends })
}
