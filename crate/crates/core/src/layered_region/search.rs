use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::gaussian::{mimo_rate_tuple, siso_rate_tuple, CovarianceChain, PowerAllocation};
use super::RateTuple;
use crate::channel_models::{GaussianMimoBroadcast, GaussianSisoBroadcast};
use crate::error::{Error, Result};
use crate::grid;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SisoSearchConfig {
    pub grid_steps: usize,
    pub refinement_rounds: usize,
}

impl Default for SisoSearchConfig {
    fn default() -> Self {
        Self { grid_steps: 20, refinement_rounds: 3 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SisoSearchResult {
    pub allocation: PowerAllocation,
    pub rates: RateTuple,
    pub objective: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MimoSearchConfig {
    pub alpha_steps: usize,
    pub perturbations: usize,
    pub seed: u64,
    /// Perturbation size relative to `tr(S)/r`.
    pub perturbation_scale: f64,
}

impl Default for MimoSearchConfig {
    fn default() -> Self {
        Self { alpha_steps: 10, perturbations: 200, seed: 0, perturbation_scale: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MimoSearchResult {
    pub chain: CovarianceChain,
    pub alphas: Vec<f64>,
    pub rates: RateTuple,
    pub objective: f64,
    pub accepted_perturbations: usize,
    /// Always true: the search is a sampling heuristic, not a certified optimum.
    pub heuristic: bool,
}

fn check_weights(weights: &[f64], k: usize) -> Result<()> {
    if weights.len() != k {
        return Err(Error::DimensionMismatch { expected: k, found: weights.len() });
    }
    if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
        return Err(Error::InvalidParameter("weights must be finite and nonnegative".into()));
    }
    if weights.iter().all(|w| *w == 0.0) {
        return Err(Error::InvalidParameter("weights must not all be zero".into()));
    }
    Ok(())
}

/// First index wins ties.
fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Maximizes `Σ w_k R_k` over power allocations: a simplex grid followed by
/// rounds of pairwise coordinate moves (the unused budget counts as a
/// coordinate) with step `P / (steps·2^r)`.
pub fn weighted_boundary_search_siso(
    weights: &[f64],
    channel: &GaussianSisoBroadcast,
    config: &SisoSearchConfig,
) -> Result<SisoSearchResult> {
    let k = channel.receivers();
    check_weights(weights, k)?;
    if config.grid_steps == 0 {
        return Err(Error::InvalidParameter("grid steps must be >= 1".into()));
    }
    let p = channel.power();
    let steps = config.grid_steps;
    let eval = |coords: &[f64]| -> Result<(PowerAllocation, RateTuple)> {
        let alloc = PowerAllocation::new(coords[..k].to_vec(), p)?;
        let rates = siso_rate_tuple(&alloc, channel)?;
        Ok((alloc, rates))
    };
    let points: Vec<Vec<f64>> = grid::compositions(k + 1, steps)
        .into_iter()
        .map(|c| c.iter().map(|&v| p * v as f64 / steps as f64).collect())
        .collect();
    let objectives = points
        .par_iter()
        .map(|c| eval(c).map(|(_, r)| r.weighted(weights)))
        .collect::<Result<Vec<f64>>>()?;
    let i = argmax(&objectives);
    let mut coords = points[i].clone();
    let mut best = objectives[i];

    for round in 0..config.refinement_rounds {
        let delta = p / (steps as f64 * 2f64.powi(round as i32 + 1));
        let mut improved = true;
        while improved {
            improved = false;
            for to in 0..=k {
                for from in 0..=k {
                    if to == from || coords[from] < delta {
                        continue;
                    }
                    let mut cand = coords.clone();
                    cand[from] -= delta;
                    cand[to] += delta;
                    let total: f64 = cand[..k].iter().sum();
                    if total > p {
                        let excess = total - p;
                        cand[to] -= excess;
                    }
                    let (_, r) = eval(&cand)?;
                    let obj = r.weighted(weights);
                    if obj > best + 1e-15 {
                        best = obj;
                        coords = cand;
                        improved = true;
                    }
                }
            }
        }
    }
    let (allocation, rates) = eval(&coords)?;
    Ok(SisoSearchResult { objective: rates.weighted(weights), allocation, rates })
}

fn random_psd(rng: &mut ChaCha8Rng, r: usize, scale: f64) -> DMatrix<f64> {
    let v: Vec<f64> = (0..r).map(|_| rng.sample(StandardNormal)).collect();
    let g = DMatrix::from_vec(r, 1, v);
    let norm2 = (g.transpose() * &g)[(0, 0)].max(1e-300);
    &g * g.transpose() * (scale / norm2)
}

/// Heuristic search over covariance chains: scaled-cap chains `S_k = α_k S`
/// on a grid, then seeded rank-one perturbations kept when they preserve the
/// ordering and improve the objective. Reproducible for a fixed seed.
pub fn weighted_boundary_search_mimo(
    weights: &[f64],
    channel: &GaussianMimoBroadcast,
    config: &MimoSearchConfig,
) -> Result<MimoSearchResult> {
    let k = channel.receivers();
    check_weights(weights, k)?;
    if config.alpha_steps == 0 {
        return Err(Error::InvalidParameter("alpha grid steps must be >= 1".into()));
    }
    let cap = channel.input_cap();
    let alphas = grid::nonincreasing_grid(k - 1, config.alpha_steps);
    let objectives = alphas
        .par_iter()
        .map(|a| mimo_rate_tuple(&CovarianceChain::scaled(cap, a), channel).map(|r| r.weighted(weights)))
        .collect::<Result<Vec<f64>>>()?;
    let i = argmax(&objectives);
    let mut chain = CovarianceChain::scaled(cap, &alphas[i]);
    let mut best = objectives[i];
    let mut accepted = 0;

    if k > 1 {
        let r = channel.dimension();
        let scale = config.perturbation_scale * cap.trace() / r as f64;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        for _ in 0..config.perturbations {
            let layer = rng.random_range(0..k - 1);
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let d = random_psd(&mut rng, r, scale);
            let mut cand = chain.clone();
            cand.layers[layer] = &cand.layers[layer] + d * sign;
            if cand.check(cap, k).is_err() {
                continue;
            }
            let Ok(rates) = mimo_rate_tuple(&cand, channel) else { continue };
            let obj = rates.weighted(weights);
            if obj > best + 1e-15 {
                best = obj;
                chain = cand;
                accepted += 1;
            }
        }
    }
    let rates = mimo_rate_tuple(&chain, channel)?;
    Ok(MimoSearchResult {
        objective: rates.weighted(weights),
        alphas: alphas[i].clone(),
        chain,
        rates,
        accepted_perturbations: accepted,
        heuristic: true,
    })
}
