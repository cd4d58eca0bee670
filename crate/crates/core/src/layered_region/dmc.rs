use serde::{Deserialize, Serialize};

use super::RateTuple;
use crate::channel_models::{require_degraded_chain, DmcBroadcast, TransitionMatrix};
use crate::error::{Error, Result};
use crate::info;

/// Markov chain `U_1 → U_2 → … → U_{K-1} → X` given by `P(U_1)` and the
/// conditionals `P(U_k | U_{k-1})` for `k = 2..K`, with `U_K = X`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayeredDistribution {
    first: Vec<f64>,
    conditionals: Vec<TransitionMatrix>,
}

impl LayeredDistribution {
    pub fn new(first: Vec<f64>, conditionals: Vec<TransitionMatrix>) -> Result<Self> {
        info::check_distribution(&first, "P(U_1)")?;
        let mut prev = first.len();
        for c in &conditionals {
            if c.input_size() != prev {
                return Err(Error::DimensionMismatch { expected: prev, found: c.input_size() });
            }
            prev = c.output_size();
        }
        Ok(Self { first, conditionals })
    }

    /// Verifies that a full joint table over `U_1 × … × U_{K-1} × X`
    /// (row-major, last index fastest) factors as a Markov chain and returns
    /// the factorization.
    pub fn from_joint(sizes: &[usize], joint: &[f64]) -> Result<Self> {
        if sizes.is_empty() || sizes.contains(&0) {
            return Err(Error::InvalidParameter("alphabet sizes must be positive".into()));
        }
        let total: usize = sizes.iter().product();
        if joint.len() != total {
            return Err(Error::DimensionMismatch { expected: total, found: joint.len() });
        }
        info::check_distribution(joint, "joint P(U_1..U_K)")?;
        let layers = sizes.len();
        let strides: Vec<usize> = (0..layers)
            .map(|k| sizes[k + 1..].iter().product())
            .collect();
        let digit = |idx: usize, k: usize| (idx / strides[k]) % sizes[k];

        let mut first = vec![0.0; sizes[0]];
        let mut pairs: Vec<Vec<Vec<f64>>> =
            (1..layers).map(|k| vec![vec![0.0; sizes[k]]; sizes[k - 1]]).collect();
        for (idx, p) in joint.iter().enumerate() {
            first[digit(idx, 0)] += p;
            for k in 1..layers {
                pairs[k - 1][digit(idx, k - 1)][digit(idx, k)] += p;
            }
        }
        let conditionals: Vec<Vec<Vec<f64>>> = pairs
            .iter()
            .map(|m| {
                m.iter()
                    .map(|row| {
                        let s: f64 = row.iter().sum();
                        if s > 0.0 {
                            row.iter().map(|v| v / s).collect()
                        } else {
                            vec![1.0 / row.len() as f64; row.len()]
                        }
                    })
                    .collect()
            })
            .collect();
        let mut residual: f64 = 0.0;
        for (idx, p) in joint.iter().enumerate() {
            let mut q = first[digit(idx, 0)];
            for k in 1..layers {
                q *= conditionals[k - 1][digit(idx, k - 1)][digit(idx, k)];
            }
            residual = residual.max((p - q).abs());
        }
        if residual > info::NORMALIZATION_TOL {
            return Err(Error::NotMarkov(residual));
        }
        let conditionals = conditionals
            .into_iter()
            .map(TransitionMatrix::new)
            .collect::<Result<Vec<_>>>()?;
        Self::new(first, conditionals)
    }

    /// Number of layers `K` (the last one is `X`).
    pub fn layers(&self) -> usize {
        self.conditionals.len() + 1
    }

    /// Alphabet size of 1-based layer `k`.
    pub fn alphabet_size(&self, k: usize) -> usize {
        if k == 1 {
            self.first.len()
        } else {
            self.conditionals[k - 2].output_size()
        }
    }

    pub fn input_size(&self) -> usize {
        self.alphabet_size(self.layers())
    }

    pub fn first(&self) -> &[f64] {
        &self.first
    }

    /// `P(U_k | U_{k-1})` for 1-based `k >= 2`.
    pub fn conditional(&self, k: usize) -> &TransitionMatrix {
        &self.conditionals[k - 2]
    }

    pub fn conditionals(&self) -> &[TransitionMatrix] {
        &self.conditionals
    }

    /// Marginal law of 1-based layer `k`.
    pub fn marginal(&self, k: usize) -> Vec<f64> {
        let mut p = self.first.clone();
        for c in &self.conditionals[..k - 1] {
            p = info::output_law(&p, c.rows());
        }
        p
    }

    /// `P(U_K = X | U_k)`, composed through the remaining layers.
    pub fn input_given_layer(&self, k: usize) -> Vec<Vec<f64>> {
        let n = self.alphabet_size(k);
        let mut m = TransitionMatrix::identity(n).rows().to_vec();
        for c in &self.conditionals[k - 1..] {
            m = info::compose(&m, c.rows());
        }
        m
    }

    fn check_channel(&self, channel: &DmcBroadcast) -> Result<()> {
        if channel.receivers() != self.layers() {
            return Err(Error::DimensionMismatch {
                expected: self.layers(),
                found: channel.receivers(),
            });
        }
        if channel.input_size() != self.input_size() {
            return Err(Error::DimensionMismatch {
                expected: self.input_size(),
                found: channel.input_size(),
            });
        }
        Ok(())
    }
}

/// Per-layer information terms `I(U_k; Y_j | U_{k-1})` for every layer `k`
/// and receiver `j` (both 1-based), with `U_0` constant and `U_K = X`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerInformation {
    /// `values[k-1][j-1]`.
    pub values: Vec<Vec<f64>>,
}

impl LayerInformation {
    pub fn compute(dist: &LayeredDistribution, channel: &DmcBroadcast) -> Result<Self> {
        dist.check_channel(channel)?;
        let layers = dist.layers();
        // cond_entropy[k][j] = H(Y_j | U_k), k = 0 meaning unconditioned.
        let mut cond_entropy = vec![vec![0.0; layers]; layers + 1];
        let px = dist.marginal(layers);
        for j in 1..=layers {
            let out = info::output_law(&px, channel.receiver(j).rows());
            cond_entropy[0][j - 1] = info::entropy_bits(&out);
        }
        for k in 1..=layers {
            let pk = dist.marginal(k);
            let to_x = dist.input_given_layer(k);
            for j in 1..=layers {
                let to_y = info::compose(&to_x, channel.receiver(j).rows());
                cond_entropy[k][j - 1] = info::conditional_entropy(&pk, &to_y);
            }
        }
        let values = (1..=layers)
            .map(|k| {
                (0..layers)
                    .map(|j| cond_entropy[k - 1][j] - cond_entropy[k][j])
                    .collect()
            })
            .collect();
        Ok(Self { values })
    }

    /// `I(U_k; Y_j | U_{k-1})`, 1-based.
    pub fn get(&self, layer: usize, receiver: usize) -> f64 {
        self.values[layer - 1][receiver - 1]
    }
}

/// Rate tuple of the DMC layered region for a given chain:
/// `R_1 = I(U_1;Y_1)` and `R_k = I(U_k;Y_k|U_{k-1}) - I(U_k;Y_{k-1}|U_{k-1})`.
pub fn dmc_rate_tuple(dist: &LayeredDistribution, channel: &DmcBroadcast) -> Result<RateTuple> {
    dist.check_channel(channel)?;
    require_degraded_chain(channel)?;
    let mi = LayerInformation::compute(dist, channel)?;
    let raw = (1..=dist.layers())
        .map(|k| if k == 1 { mi.get(1, 1) } else { mi.get(k, k) - mi.get(k, k - 1) })
        .collect();
    Ok(RateTuple::from_raw(raw))
}
