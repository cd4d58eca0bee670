use xsum::{Xsum, XsumSmall};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::codebook::LayeredCodebook;
use crate::channel_models::{DmcBroadcast, TransitionMatrix};
use crate::error::{Error, Result};

/// Cap on `|Y_k|^n`.
pub const MAX_OUTPUTS: u128 = 10_000_000;
/// Cap on `|Y_k|^n` times the number of layer-`K` codewords.
pub const MAX_JOINT: u128 = 10_000_000;

fn exact_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = XsumSmall::new();
    for v in values {
        acc.add(v);
    }
    acc.sum() + 0.0
}

/// `Π_i W(y_i|x_i)` evaluated as `Π_v v^{c_v}` over the distinct factor
/// values in ascending order, so that sequences with the same factor
/// profile get bit-identical likelihoods.
pub fn canonical_likelihood(x: &[u32], y: &[u32], w: &TransitionMatrix) -> f64 {
    let mut factors: Vec<f64> = x
        .iter()
        .zip(y)
        .map(|(&a, &b)| w.get(a as usize, b as usize))
        .collect();
    if factors.contains(&0.0) {
        return 0.0;
    }
    factors.sort_by(f64::total_cmp);
    let mut out = 1.0;
    let mut i = 0;
    while i < factors.len() {
        let mut j = i;
        while j < factors.len() && factors[j] == factors[i] {
            j += 1;
        }
        out *= factors[i].powi((j - i) as i32);
        i = j;
    }
    out
}

fn check_compat(codebook: &LayeredCodebook, channel: &DmcBroadcast, receiver: usize) -> Result<()> {
    if codebook.layers() != channel.receivers() {
        return Err(Error::DimensionMismatch { expected: codebook.layers(), found: channel.receivers() });
    }
    if codebook.input_size() != channel.input_size() {
        return Err(Error::DimensionMismatch { expected: codebook.input_size(), found: channel.input_size() });
    }
    if receiver == 0 || receiver > channel.receivers() {
        return Err(Error::IndexOutOfRange { index: receiver, limit: channel.receivers() });
    }
    Ok(())
}

fn output_count(size: usize, n: usize, codewords: usize) -> Result<usize> {
    let total = (size as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if total > MAX_OUTPUTS {
        return Err(Error::EnumerationOverflow { size: total, cap: MAX_OUTPUTS });
    }
    let joint = total.saturating_mul(codewords as u128);
    if joint > MAX_JOINT {
        return Err(Error::EnumerationOverflow { size: joint, cap: MAX_JOINT });
    }
    Ok(total as usize)
}

/// Writes output sequence `idx` (first symbol most significant).
fn output_at(mut idx: usize, size: usize, y: &mut [u32]) {
    for s in y.iter_mut().rev() {
        *s = (idx % size) as u32;
        idx /= size;
    }
}

fn codeword_likelihoods(codebook: &LayeredCodebook, w: &TransitionMatrix, y: &[u32], out: &mut Vec<f64>) {
    let k = codebook.layers();
    out.clear();
    out.extend((0..codebook.count(k)).map(|f| canonical_likelihood(codebook.codeword(k, f), y, w)));
}

/// MAP layer-`receiver` index given per-codeword likelihoods; ties go to the
/// smallest index.
fn map_index(codebook: &LayeredCodebook, receiver: usize, likelihoods: &[f64]) -> usize {
    let k = codebook.layers();
    let span = codebook.count(k) / codebook.count(receiver);
    let mut best = 0;
    let mut best_value = f64::NEG_INFINITY;
    for c in 0..codebook.count(receiver) {
        let v = if span == 1 {
            likelihoods[c]
        } else {
            exact_sum(likelihoods[c * span..(c + 1) * span].iter().copied())
        };
        if v > best_value {
            best = c;
            best_value = v;
        }
    }
    best
}

/// MAP decoder of receiver `k`: maximizes the posterior over all layer-`k`
/// tuples `(w_1, w_2, l_2, …, w_k, l_k)` and returns `(ŵ_1..ŵ_k)`.
pub fn decode(codebook: &LayeredCodebook, y: &[u32], receiver: usize, channel: &DmcBroadcast) -> Result<Vec<usize>> {
    check_compat(codebook, channel, receiver)?;
    if y.len() != codebook.n() {
        return Err(Error::DimensionMismatch { expected: codebook.n(), found: y.len() });
    }
    let w = channel.receiver(receiver);
    if let Some(&s) = y.iter().find(|&&s| s as usize >= w.output_size()) {
        return Err(Error::IndexOutOfRange { index: s as usize, limit: w.output_size() });
    }
    let mut lik = Vec::new();
    codeword_likelihoods(codebook, w, y, &mut lik);
    Ok(codebook.messages_of(receiver, map_index(codebook, receiver, &lik)))
}

/// Exact average block error probability of receiver `k` for `(W_1..W_k)`,
/// with uniform messages and bin indices.
pub fn exact_error_probability(codebook: &LayeredCodebook, channel: &DmcBroadcast, receiver: usize) -> Result<f64> {
    check_compat(codebook, channel, receiver)?;
    let k = codebook.layers();
    let n = codebook.n();
    let w = channel.receiver(receiver);
    let count = codebook.count(k);
    let outputs = output_count(w.output_size(), n, count)?;
    let prefix: Vec<usize> = (0..count).map(|f| codebook.message_prefix_index(k, f, receiver)).collect();
    let mut y = vec![0u32; n];
    let mut lik = Vec::with_capacity(count);
    let mut errors = XsumSmall::new();
    for idx in 0..outputs {
        output_at(idx, w.output_size(), &mut y);
        codeword_likelihoods(codebook, w, &y, &mut lik);
        let c = map_index(codebook, receiver, &lik);
        let decoded = codebook.message_prefix_index(receiver, c, receiver);
        for f in 0..count {
            if prefix[f] != decoded && lik[f] > 0.0 {
                errors.add(lik[f]);
            }
        }
    }
    Ok((errors.sum() + 0.0) / count as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloEstimate {
    pub trials: usize,
    pub errors: usize,
    pub estimate: f64,
    pub std_error: f64,
}

fn sample_row(rng: &mut ChaCha8Rng, row: &[f64]) -> u32 {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, p) in row.iter().enumerate() {
        if *p > 0.0 {
            acc += p;
            last = i;
            if u < acc {
                return i as u32;
            }
        }
    }
    last as u32
}

/// Monte Carlo estimate of the block error probability of receiver `k`.
pub fn monte_carlo_error(
    codebook: &LayeredCodebook,
    channel: &DmcBroadcast,
    receiver: usize,
    trials: usize,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    check_compat(codebook, channel, receiver)?;
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    let shape = codebook.shape().clone();
    let w = channel.receiver(receiver);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lik = Vec::new();
    let mut y = vec![0u32; codebook.n()];
    let mut errors = 0;
    for _ in 0..trials {
        let msgs: Vec<usize> = shape.messages.iter().map(|&m| rng.random_range(0..m)).collect();
        let (x, _) = codebook.encode(&msgs, &mut rng)?;
        for (yi, xi) in y.iter_mut().zip(&x) {
            *yi = sample_row(&mut rng, w.row(*xi as usize));
        }
        codeword_likelihoods(codebook, w, &y, &mut lik);
        let c = map_index(codebook, receiver, &lik);
        if codebook.messages_of(receiver, c) != msgs[..receiver] {
            errors += 1;
        }
    }
    let estimate = errors as f64 / trials as f64;
    Ok(MonteCarloEstimate {
        trials,
        errors,
        estimate,
        std_error: (estimate * (1.0 - estimate) / trials as f64).sqrt(),
    })
}

/// `(1/n)·I(W_{k+1..K}; Y_k^n | W_1..W_k)` in bits.
pub fn exact_leakage(codebook: &LayeredCodebook, channel: &DmcBroadcast, receiver: usize) -> Result<f64> {
    exact_leakage_given(codebook, channel, receiver, receiver)
}

/// `(1/n)·I(W_{c+1..K}; Y_k^n | W_1..W_c)` for a conditioning prefix
/// length `c`, by full enumeration with uniform messages and bin indices.
pub fn exact_leakage_given(
    codebook: &LayeredCodebook,
    channel: &DmcBroadcast,
    receiver: usize,
    conditioning: usize,
) -> Result<f64> {
    check_compat(codebook, channel, receiver)?;
    let k = codebook.layers();
    if conditioning > k {
        return Err(Error::IndexOutOfRange { index: conditioning, limit: k });
    }
    let shape = codebook.shape();
    let n = codebook.n();
    let w = channel.receiver(receiver);
    let count = codebook.count(k);
    let outputs = output_count(w.output_size(), n, count)?;
    let tuples = shape.message_tuples(k);
    let group = tuples / shape.message_tuples(conditioning);
    if group == 1 {
        return Ok(0.0);
    }
    let per_tuple = count / tuples;
    let message_index: Vec<usize> = (0..count).map(|f| codebook.message_prefix_index(k, f, k)).collect();
    // Codeword indices grouped by full message tuple.
    let mut members: Vec<Vec<usize>> = vec![Vec::with_capacity(per_tuple); tuples];
    for (f, &m) in message_index.iter().enumerate() {
        members[m].push(f);
    }

    let mut y = vec![0u32; n];
    let mut lik = Vec::with_capacity(count);
    let mut given_w = vec![0.0; tuples];
    let mut acc = XsumSmall::new();
    for idx in 0..outputs {
        output_at(idx, w.output_size(), &mut y);
        codeword_likelihoods(codebook, w, &y, &mut lik);
        for (m, fs) in members.iter().enumerate() {
            given_w[m] = exact_sum(fs.iter().map(|&f| lik[f])) / per_tuple as f64;
        }
        // Tuples sharing (w_1..w_c) are contiguous in mixed-radix order.
        for block in given_w.chunks(group) {
            if block.iter().all(|v| *v == block[0]) {
                continue;
            }
            let mean = exact_sum(block.iter().copied()) / group as f64;
            for &p in block {
                if p > 0.0 {
                    acc.add(p * (p / mean).log2());
                }
            }
        }
    }
    Ok((acc.sum() / tuples as f64 / n as f64).max(0.0))
}

/// Per-receiver leakage `(1/n)·I(W_{k+1..K}; Y_k^n | W_1..W_k)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeakageReport {
    /// `values[k-1]` for receiver `k`.
    pub values: Vec<f64>,
}

pub fn leakage_report(codebook: &LayeredCodebook, channel: &DmcBroadcast) -> Result<LeakageReport> {
    let values = (1..=channel.receivers())
        .map(|k| exact_leakage(codebook, channel, k))
        .collect::<Result<Vec<_>>>()?;
    Ok(LeakageReport { values })
}
