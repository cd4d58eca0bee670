use nalgebra::DMatrix;
use serde::Serialize;

use super::RateTuple;
use crate::channel_models::{GaussianMimoBroadcast, GaussianSisoBroadcast, ORDER_TOL};
use crate::error::{Error, Result};
use crate::grid;
use crate::linalg;

/// Slack allowed on the total power budget.
pub const BUDGET_TOL: f64 = 1e-12;

/// Per-layer powers `P_1..P_K` with `Σ P_k <= P`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerAllocation {
    pub powers: Vec<f64>,
    pub budget: f64,
}

impl PowerAllocation {
    pub fn new(powers: Vec<f64>, budget: f64) -> Result<Self> {
        if let Some(p) = powers.iter().find(|p| !(**p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidParameter(format!("layer power {p} must be >= 0")));
        }
        let total: f64 = powers.iter().sum();
        if total > budget + BUDGET_TOL {
            return Err(Error::OverBudget { total, budget });
        }
        Ok(Self { powers, budget })
    }

    pub fn total(&self) -> f64 {
        self.powers.iter().sum()
    }
}

/// Scalar Gaussian layered region:
/// `R_k = ½log((N_k+T_k)/(N_k+T_{k+1})) - ½log((N_{k-1}+T_k)/(N_{k-1}+T_{k+1}))`
/// with tail sums `T_k = Σ_{j>=k} P_j` and no leakage term for `k = 1`.
pub fn siso_rate_tuple(alloc: &PowerAllocation, channel: &GaussianSisoBroadcast) -> Result<RateTuple> {
    let k = channel.receivers();
    if alloc.powers.len() != k {
        return Err(Error::DimensionMismatch { expected: k, found: alloc.powers.len() });
    }
    if alloc.total() > channel.power() + BUDGET_TOL {
        return Err(Error::OverBudget { total: alloc.total(), budget: channel.power() });
    }
    let n = channel.noise_variances();
    let mut tail = vec![0.0; k + 1];
    for i in (0..k).rev() {
        tail[i] = tail[i + 1] + alloc.powers[i];
    }
    let term = |noise: f64, i: usize| 0.5 * ((noise + tail[i]) / (noise + tail[i + 1])).log2();
    let raw = (0..k)
        .map(|i| if i == 0 { term(n[0], 0) } else { term(n[i], i) - term(n[i - 1], i) })
        .collect();
    Ok(RateTuple::from_raw(raw))
}

/// Nested covariances `S_1..S_{K-1}` with `0 ⪯ S_{K-1} ⪯ … ⪯ S_1 ⪯ S`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceChain {
    pub layers: Vec<DMatrix<f64>>,
}

impl CovarianceChain {
    pub fn new(layers: Vec<DMatrix<f64>>) -> Self {
        Self { layers }
    }

    /// `S_k = α_k S`.
    pub fn scaled(cap: &DMatrix<f64>, alphas: &[f64]) -> Self {
        Self { layers: alphas.iter().map(|a| cap * *a).collect() }
    }

    /// Checks the ordering against the cap. On failure `index = i` names the
    /// violated link `S_i ⪯ S_{i-1}` (with `S_0 = S`), and `index = K` the
    /// final `S_{K-1} ⪰ 0`.
    pub fn check(&self, cap: &DMatrix<f64>, receivers: usize) -> Result<()> {
        if self.layers.len() + 1 != receivers {
            return Err(Error::DimensionMismatch {
                expected: receivers.saturating_sub(1),
                found: self.layers.len(),
            });
        }
        let r = cap.nrows();
        for s in &self.layers {
            linalg::check_square(s, r)?;
        }
        let full = self.with_ends(cap);
        for i in 1..full.len() {
            let m = linalg::min_eigenvalue_of_difference(&full[i - 1], &full[i])?;
            if m < -ORDER_TOL {
                return Err(Error::OrderingViolation { index: i, min_eigenvalue: m });
            }
        }
        Ok(())
    }

    /// `[S, S_1, …, S_{K-1}, 0]`.
    pub fn with_ends(&self, cap: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
        let mut full = Vec::with_capacity(self.layers.len() + 2);
        full.push(cap.clone());
        full.extend(self.layers.iter().cloned());
        full.push(DMatrix::zeros(cap.nrows(), cap.ncols()));
        full
    }
}

/// The two log-det ratios that make up one layer's rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LayerTerms {
    /// `½ log |Σ_k + S_{k-1}| / |Σ_k + S_k|`.
    pub decode: f64,
    /// `½ log |Σ_{k-1} + S_{k-1}| / |Σ_{k-1} + S_k|`; zero for the first layer.
    pub leak: f64,
}

/// Layer terms for noise covariances `Σ_1..Σ_K` and the full chain
/// `S_0 = S, S_1, …, S_K = 0`.
pub fn gaussian_layer_terms(noise: &[DMatrix<f64>], full_chain: &[DMatrix<f64>]) -> Result<Vec<LayerTerms>> {
    if full_chain.len() != noise.len() + 1 {
        return Err(Error::DimensionMismatch { expected: noise.len() + 1, found: full_chain.len() });
    }
    (0..noise.len())
        .map(|i| {
            let decode = linalg::half_log2_det_ratio(
                &(&noise[i] + &full_chain[i]),
                &(&noise[i] + &full_chain[i + 1]),
            )?;
            let leak = if i == 0 {
                0.0
            } else {
                linalg::half_log2_det_ratio(
                    &(&noise[i - 1] + &full_chain[i]),
                    &(&noise[i - 1] + &full_chain[i + 1]),
                )?
            };
            Ok(LayerTerms { decode, leak })
        })
        .collect()
}

pub(crate) fn rates_from_terms(terms: &[LayerTerms]) -> RateTuple {
    RateTuple::from_raw(terms.iter().map(|t| t.decode - t.leak).collect())
}

/// MIMO layered region evaluated at a covariance chain.
pub fn mimo_rate_tuple(chain: &CovarianceChain, channel: &GaussianMimoBroadcast) -> Result<RateTuple> {
    chain.check(channel.input_cap(), channel.receivers())?;
    let terms = gaussian_layer_terms(channel.noise_covariances(), &chain.with_ends(channel.input_cap()))?;
    Ok(rates_from_terms(&terms))
}

/// One point of a sampled region.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionSample {
    pub allocation: PowerAllocation,
    pub rates: RateTuple,
}

/// Evaluates the scalar region on the lattice `{P_k = P·c_k/steps, Σ c_k <= steps}`.
pub fn siso_region_samples(channel: &GaussianSisoBroadcast, grid_steps: usize) -> Result<Vec<RegionSample>> {
    if grid_steps == 0 {
        return Err(Error::InvalidParameter("grid steps must be >= 1".into()));
    }
    let k = channel.receivers();
    let p = channel.power();
    grid::compositions(k + 1, grid_steps)
        .into_iter()
        .map(|c| {
            let powers = c[..k].iter().map(|&v| p * v as f64 / grid_steps as f64).collect();
            let allocation = PowerAllocation::new(powers, p)?;
            let rates = siso_rate_tuple(&allocation, channel)?;
            Ok(RegionSample { allocation, rates })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn zero_allocation_gives_zero_rates() {
        let ch = GaussianSisoBroadcast::new(vec![3.0, 2.0, 1.0], 5.0).unwrap();
        let r = siso_rate_tuple(&PowerAllocation::new(vec![0.0; 3], 5.0).unwrap(), &ch).unwrap();
        assert_eq!(r.rates, vec![0.0; 3]);
    }

    #[test]
    fn two_user_example() {
        let ch = GaussianSisoBroadcast::new(vec![2.0, 1.0], 2.0).unwrap();
        let r = siso_rate_tuple(&PowerAllocation::new(vec![1.0, 1.0], 2.0).unwrap(), &ch).unwrap();
        approx(r.rates[0], 0.5 * (4.0f64 / 3.0).log2(), 1e-15);
        approx(r.rates[1], 0.5 - 0.5 * 1.5f64.log2(), 1e-15);
        approx(r.rates[0], 0.20752, 1e-5);
        approx(r.rates[1], 0.20752, 1e-5);
    }

    #[test]
    fn over_budget_is_rejected() {
        assert!(matches!(
            PowerAllocation::new(vec![1.0, 1.5], 2.0),
            Err(Error::OverBudget { .. })
        ));
        let ch = GaussianSisoBroadcast::new(vec![2.0, 1.0], 1.0).unwrap();
        let a = PowerAllocation::new(vec![1.0, 1.0], 2.0).unwrap();
        assert!(matches!(siso_rate_tuple(&a, &ch), Err(Error::OverBudget { .. })));
    }

    #[test]
    fn mimo_no_layering() {
        let i2 = DMatrix::<f64>::identity(2, 2);
        let ch = GaussianMimoBroadcast::new(vec![&i2 * 2.0, i2.clone()], &i2 * 2.0).unwrap();
        let chain = CovarianceChain::new(vec![&i2 * 2.0]);
        let r = mimo_rate_tuple(&chain, &ch).unwrap();
        approx(r.rates[0], 0.0, 1e-15);
        // ½log|I+2I|/|I| - ½log|2I+2I|/|2I| = log2 3 - 1
        approx(r.rates[1], 3f64.log2() - 1.0, 1e-12);
    }

    #[test]
    fn mimo_determinant_example() {
        let i2 = DMatrix::<f64>::identity(2, 2);
        let ch = GaussianMimoBroadcast::new(vec![&i2 * 2.0, i2.clone()], &i2 * 2.0).unwrap();
        let r = mimo_rate_tuple(&CovarianceChain::new(vec![i2.clone()]), &ch).unwrap();
        approx(r.rates[0], 0.5 * (16.0f64 / 9.0).log2(), 1e-12);
        approx(r.rates[1], 1.0 - 0.5 * (9.0f64 / 4.0).log2(), 1e-12);
        approx(r.rates[0], 0.41504, 1e-5);
        approx(r.rates[1], 0.41504, 1e-5);
    }

    #[test]
    fn chain_violations_report_index() {
        let i2 = DMatrix::<f64>::identity(2, 2);
        let ch = GaussianMimoBroadcast::new(vec![&i2 * 2.0, i2.clone(), i2.clone()], i2.clone())
            .unwrap();
        let bad = CovarianceChain::new(vec![&i2 * 0.5, &i2 * 0.7]);
        assert!(matches!(
            mimo_rate_tuple(&bad, &ch),
            Err(Error::OrderingViolation { index: 2, .. })
        ));
        let bad = CovarianceChain::new(vec![&i2 * 2.0, &i2 * 0.5]);
        assert!(matches!(
            mimo_rate_tuple(&bad, &ch),
            Err(Error::OrderingViolation { index: 1, .. })
        ));
        let neg = CovarianceChain::new(vec![&i2 * 0.5, &i2 * -0.5]);
        assert!(matches!(
            mimo_rate_tuple(&neg, &ch),
            Err(Error::OrderingViolation { index: 3, .. })
        ));
        let short = CovarianceChain::new(vec![]);
        assert!(mimo_rate_tuple(&short, &ch).is_err());
    }

    #[test]
    fn region_sample_counts() {
        let ch = GaussianSisoBroadcast::new(vec![2.0, 1.0], 1.0).unwrap();
        let s = siso_region_samples(&ch, 10).unwrap();
        assert_eq!(s.len(), 66);
        assert!(s.iter().all(|x| x.rates.rates.iter().all(|r| *r >= 0.0)));
        let single = GaussianSisoBroadcast::new(vec![2.0], 3.0).unwrap();
        let s = siso_region_samples(&single, 4).unwrap();
        assert_eq!(s.len(), 5);
        let best = s.iter().map(|x| x.rates.rates[0]).fold(0.0, f64::max);
        approx(best, 0.5 * (1.0f64 + 1.5).log2(), 1e-15);
    }
}
