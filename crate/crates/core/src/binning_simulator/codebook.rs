use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layered_region::LayeredDistribution;

/// Cap on the total number of stored codewords across all layers.
pub const MAX_CODEWORDS: usize = 1_000_000;
/// Tolerance for `n·R` to count as an integer.
pub const RATE_TOL: f64 = 1e-9;

/// Message rates `R_k` and total rates `R̃_k` (bits per channel use), with
/// `R̃_1 = R_1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerRates {
    pub message: Vec<f64>,
    pub total: Vec<f64>,
}

impl LayerRates {
    pub fn new(message: Vec<f64>, total: Vec<f64>) -> Result<Self> {
        if message.is_empty() {
            return Err(Error::InvalidParameter("at least one layer is required".into()));
        }
        if message.len() != total.len() {
            return Err(Error::DimensionMismatch { expected: message.len(), found: total.len() });
        }
        for (k, (r, t)) in message.iter().zip(&total).enumerate() {
            if !(*r >= 0.0) || !r.is_finite() || !t.is_finite() {
                return Err(Error::InvalidParameter(format!("layer {}: rates must be finite and >= 0", k + 1)));
            }
            if *t < *r - RATE_TOL {
                return Err(Error::InvalidParameter(format!(
                    "layer {}: total rate {t} is below message rate {r}",
                    k + 1
                )));
            }
        }
        if (total[0] - message[0]).abs() > RATE_TOL {
            return Err(Error::InvalidParameter(
                "layer 1 carries no binning: total rate must equal message rate".into(),
            ));
        }
        Ok(Self { message, total })
    }

    pub fn layers(&self) -> usize {
        self.message.len()
    }

    /// `R̃_k - R_k`, 1-based.
    pub fn binning(&self, k: usize) -> f64 {
        self.total[k - 1] - self.message[k - 1]
    }
}

/// Nearest rate with `n·R` integral.
pub fn admissible_rate(n: usize, rate: f64) -> f64 {
    (n as f64 * rate).round() / n as f64
}

fn power_of_two(n: usize, rate: f64, layer: usize, what: &str) -> Result<usize> {
    let x = n as f64 * rate;
    let r = x.round();
    if (x - r).abs() > RATE_TOL || r < 0.0 {
        return Err(Error::NonIntegralRate { layer, what: format!("2^(n·{what})"), value: x.exp2() });
    }
    if r > 40.0 {
        return Err(Error::EnumerationOverflow { size: 1u128 << (r as u32).min(127), cap: MAX_CODEWORDS as u128 });
    }
    Ok(1usize << r as u32)
}

/// Message counts `M_k` and bin sizes `L_k`; layer `k` holds `M_k·L_k`
/// sequences per parent codeword.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CodebookShape {
    pub n: usize,
    pub messages: Vec<usize>,
    pub bins: Vec<usize>,
}

impl CodebookShape {
    pub fn new(n: usize, messages: Vec<usize>, bins: Vec<usize>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("blocklength must be >= 1".into()));
        }
        if messages.is_empty() || messages.len() != bins.len() {
            return Err(Error::DimensionMismatch { expected: messages.len().max(1), found: bins.len() });
        }
        if messages.contains(&0) || bins.contains(&0) {
            return Err(Error::InvalidParameter("message counts and bin sizes must be >= 1".into()));
        }
        if bins[0] != 1 {
            return Err(Error::InvalidParameter("layer 1 bins must have size 1".into()));
        }
        let shape = Self { n, messages, bins };
        let mut total: u128 = 0;
        let mut count: u128 = 1;
        for k in 1..=shape.layers() {
            count = count.saturating_mul(shape.per_parent(k) as u128);
            total = total.saturating_add(count);
        }
        if total > MAX_CODEWORDS as u128 {
            return Err(Error::EnumerationOverflow { size: total, cap: MAX_CODEWORDS as u128 });
        }
        Ok(shape)
    }

    pub fn from_rates(n: usize, rates: &LayerRates) -> Result<Self> {
        let mut messages = Vec::with_capacity(rates.layers());
        let mut bins = Vec::with_capacity(rates.layers());
        for k in 1..=rates.layers() {
            let m = power_of_two(n, rates.message[k - 1], k, "R")?;
            let t = power_of_two(n, rates.total[k - 1], k, "R̃")?;
            messages.push(m);
            bins.push(t / m);
        }
        Self::new(n, messages, bins)
    }

    pub fn layers(&self) -> usize {
        self.messages.len()
    }

    /// `M_k·L_k`, 1-based.
    pub fn per_parent(&self, k: usize) -> usize {
        self.messages[k - 1] * self.bins[k - 1]
    }

    /// Number of layer-`k` codewords, `Π_{j<=k} M_j·L_j`.
    pub fn count(&self, k: usize) -> usize {
        (1..=k).map(|j| self.per_parent(j)).product()
    }

    /// Number of message tuples `(w_1..w_k)`.
    pub fn message_tuples(&self, k: usize) -> usize {
        self.messages[..k].iter().product()
    }
}

/// Superposition codebook with random binning. Layer-`k` codewords are
/// stored flat, the index of `(w_1, w_2, l_2, …, w_k, l_k)` being
/// `parent·M_k·L_k + w_k·L_k + l_k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayeredCodebook {
    shape: CodebookShape,
    alphabet_sizes: Vec<usize>,
    /// `tables[k-1]` holds `count(k)·n` symbols.
    tables: Vec<Vec<u32>>,
    seed: Option<u64>,
}

fn sample(rng: &mut ChaCha8Rng, law: &[f64]) -> u32 {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, p) in law.iter().enumerate() {
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

impl LayeredCodebook {
    pub fn generate(dist: &LayeredDistribution, rates: &LayerRates, n: usize, seed: u64) -> Result<Self> {
        Self::generate_with_shape(dist, CodebookShape::from_rates(n, rates)?, seed)
    }

    pub fn generate_with_shape(dist: &LayeredDistribution, shape: CodebookShape, seed: u64) -> Result<Self> {
        if dist.layers() != shape.layers() {
            return Err(Error::DimensionMismatch { expected: dist.layers(), found: shape.layers() });
        }
        let n = shape.n;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut tables: Vec<Vec<u32>> = Vec::with_capacity(shape.layers());
        for k in 1..=shape.layers() {
            let per = shape.per_parent(k);
            let parents = if k == 1 { 1 } else { shape.count(k - 1) };
            let mut table = Vec::with_capacity(parents * per * n);
            for parent in 0..parents {
                for _ in 0..per {
                    for i in 0..n {
                        let s = if k == 1 {
                            sample(&mut rng, dist.first())
                        } else {
                            let p = tables[k - 2][parent * n + i] as usize;
                            sample(&mut rng, dist.conditional(k).row(p))
                        };
                        table.push(s);
                    }
                }
            }
            tables.push(table);
        }
        let alphabet_sizes = (1..=shape.layers()).map(|k| dist.alphabet_size(k)).collect();
        Ok(Self { shape, alphabet_sizes, tables, seed: Some(seed) })
    }

    /// Builds a codebook from explicit tables: `tables[k-1][idx]` is the
    /// layer-`k` codeword with flat index `idx`.
    pub fn from_tables(shape: CodebookShape, alphabet_sizes: Vec<usize>, tables: Vec<Vec<Vec<usize>>>) -> Result<Self> {
        if alphabet_sizes.len() != shape.layers() || tables.len() != shape.layers() {
            return Err(Error::DimensionMismatch { expected: shape.layers(), found: tables.len() });
        }
        let mut flat = Vec::with_capacity(tables.len());
        for (k, table) in tables.iter().enumerate() {
            let count = shape.count(k + 1);
            if table.len() != count {
                return Err(Error::DimensionMismatch { expected: count, found: table.len() });
            }
            let mut out = Vec::with_capacity(count * shape.n);
            for word in table {
                if word.len() != shape.n {
                    return Err(Error::DimensionMismatch { expected: shape.n, found: word.len() });
                }
                for &s in word {
                    if s >= alphabet_sizes[k] {
                        return Err(Error::IndexOutOfRange { index: s, limit: alphabet_sizes[k] });
                    }
                    out.push(s as u32);
                }
            }
            flat.push(out);
        }
        Ok(Self { shape, alphabet_sizes, tables: flat, seed: None })
    }

    pub fn shape(&self) -> &CodebookShape {
        &self.shape
    }

    pub fn n(&self) -> usize {
        self.shape.n
    }

    pub fn layers(&self) -> usize {
        self.shape.layers()
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn input_size(&self) -> usize {
        self.alphabet_sizes[self.layers() - 1]
    }

    pub fn count(&self, k: usize) -> usize {
        self.shape.count(k)
    }

    /// Layer-`k` codeword with flat index `idx`.
    pub fn codeword(&self, k: usize, idx: usize) -> &[u32] {
        let n = self.shape.n;
        &self.tables[k - 1][idx * n..(idx + 1) * n]
    }

    /// Per-layer digits `(w_j, l_j)`, `j = 1..k`, of a layer-`k` index.
    pub fn digits(&self, k: usize, mut idx: usize) -> Vec<(usize, usize)> {
        let mut out = vec![(0, 0); k];
        for j in (1..=k).rev() {
            let per = self.shape.per_parent(j);
            let d = idx % per;
            idx /= per;
            let l = self.shape.bins[j - 1];
            out[j - 1] = (d / l, d % l);
        }
        out
    }

    /// Message tuple `(w_1..w_k)` of a layer-`k` index.
    pub fn messages_of(&self, k: usize, idx: usize) -> Vec<usize> {
        self.digits(k, idx).into_iter().map(|(w, _)| w).collect()
    }

    /// Mixed-radix index of `(w_1..w_j)` for the layer-`k` codeword `idx`.
    pub fn message_prefix_index(&self, k: usize, idx: usize, j: usize) -> usize {
        let digits = self.digits(k, idx);
        digits[..j]
            .iter()
            .enumerate()
            .fold(0, |acc, (i, (w, _))| acc * self.shape.messages[i] + w)
    }

    /// Layer-`K` flat index of messages `w` and bin indices `l` (`l_1 = 0`).
    pub fn index_of(&self, w: &[usize], l: &[usize]) -> Result<usize> {
        let k = self.layers();
        if w.len() != k || l.len() != k {
            return Err(Error::DimensionMismatch { expected: k, found: w.len().min(l.len()) });
        }
        let mut idx = 0;
        for j in 1..=k {
            let (m, b) = (self.shape.messages[j - 1], self.shape.bins[j - 1]);
            if w[j - 1] >= m {
                return Err(Error::IndexOutOfRange { index: w[j - 1], limit: m });
            }
            if l[j - 1] >= b {
                return Err(Error::IndexOutOfRange { index: l[j - 1], limit: b });
            }
            idx = idx * m * b + w[j - 1] * b + l[j - 1];
        }
        Ok(idx)
    }

    /// Stochastic encoder: draws each `l_k` uniformly from its bin and
    /// returns the layer-`K` codeword together with the drawn indices.
    pub fn encode<R: Rng + ?Sized>(&self, messages: &[usize], rng: &mut R) -> Result<(Vec<u32>, Vec<usize>)> {
        let l: Vec<usize> = self
            .shape
            .bins
            .iter()
            .map(|&b| if b == 1 { 0 } else { rng.random_range(0..b) })
            .collect();
        let idx = self.index_of(messages, &l)?;
        Ok((self.codeword(self.layers(), idx).to_vec(), l))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel_models::TransitionMatrix;

    fn uniform_chain(k: usize) -> LayeredDistribution {
        LayeredDistribution::new(
            vec![0.5, 0.5],
            (1..k).map(|_| TransitionMatrix::bsc(0.25).unwrap()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn single_layer_counts() {
        let rates = LayerRates::new(vec![0.5], vec![0.5]).unwrap();
        let cb = LayeredCodebook::generate(&uniform_chain(1), &rates, 2, 1).unwrap();
        assert_eq!(cb.count(1), 2);
        assert_eq!(cb.codeword(1, 1).len(), 2);
    }

    #[test]
    fn two_layer_counts() {
        let rates = LayerRates::new(vec![0.25, 0.25], vec![0.25, 0.75]).unwrap();
        let shape = CodebookShape::from_rates(4, &rates).unwrap();
        assert_eq!(shape.per_parent(2), 8);
        assert_eq!(shape.messages[1], 2);
        assert_eq!(shape.bins[1], 4);
        let cb = LayeredCodebook::generate_with_shape(&uniform_chain(2), shape, 3).unwrap();
        assert_eq!(cb.count(2), 16);
    }

    #[test]
    fn same_seed_same_codebook() {
        let rates = LayerRates::new(vec![0.25, 0.25], vec![0.25, 0.75]).unwrap();
        let a = LayeredCodebook::generate(&uniform_chain(2), &rates, 4, 9).unwrap();
        let b = LayeredCodebook::generate(&uniform_chain(2), &rates, 4, 9).unwrap();
        let c = LayeredCodebook::generate(&uniform_chain(2), &rates, 4, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn non_integral_rates_rejected() {
        let rates = LayerRates::new(vec![0.3], vec![0.3]).unwrap();
        assert!(matches!(
            CodebookShape::from_rates(4, &rates),
            Err(Error::NonIntegralRate { layer: 1, .. })
        ));
        assert_eq!(admissible_rate(4, 0.3), 0.25);
        assert!(LayerRates::new(vec![0.5, 0.5], vec![0.75, 0.5]).is_err());
    }

    #[test]
    fn oversized_codebook_rejected() {
        let rates = LayerRates::new(vec![1.0], vec![1.0]).unwrap();
        assert!(matches!(
            CodebookShape::from_rates(21, &rates),
            Err(Error::EnumerationOverflow { .. })
        ));
    }

    #[test]
    fn digits_roundtrip() {
        let rates = LayerRates::new(vec![0.25, 0.25, 0.5], vec![0.25, 0.5, 0.75]).unwrap();
        let cb = LayeredCodebook::generate(&uniform_chain(3), &rates, 4, 0).unwrap();
        for idx in 0..cb.count(3) {
            let d = cb.digits(3, idx);
            let w: Vec<usize> = d.iter().map(|x| x.0).collect();
            let l: Vec<usize> = d.iter().map(|x| x.1).collect();
            assert_eq!(cb.index_of(&w, &l).unwrap(), idx);
        }
        assert!(cb.index_of(&[2, 0, 0], &[0, 0, 0]).is_err());
    }

    #[test]
    fn children_follow_parent_law() {
        // Deterministic conditional: every child equals its parent.
        let d = LayeredDistribution::new(vec![0.5, 0.5], vec![TransitionMatrix::identity(2)]).unwrap();
        let rates = LayerRates::new(vec![0.5, 0.25], vec![0.5, 0.5]).unwrap();
        let cb = LayeredCodebook::generate(&d, &rates, 4, 5).unwrap();
        let per = cb.shape().per_parent(2);
        for idx in 0..cb.count(2) {
            assert_eq!(cb.codeword(2, idx), cb.codeword(1, idx / per));
        }
    }

    #[test]
    fn encoder_with_unit_bins_is_deterministic() {
        let rates = LayerRates::new(vec![0.25, 0.25], vec![0.25, 0.25]).unwrap();
        let cb = LayeredCodebook::generate(&uniform_chain(2), &rates, 4, 2).unwrap();
        let mut r1 = ChaCha8Rng::seed_from_u64(1);
        let mut r2 = ChaCha8Rng::seed_from_u64(99);
        assert_eq!(cb.encode(&[1, 0], &mut r1).unwrap(), cb.encode(&[1, 0], &mut r2).unwrap());
        assert!(cb.encode(&[2, 0], &mut r1).is_err());
    }

    #[test]
    fn encoder_bin_draws_are_uniform() {
        let rates = LayerRates::new(vec![0.0, 0.25], vec![0.0, 0.75]).unwrap();
        let cb = LayeredCodebook::generate(&uniform_chain(2), &rates, 4, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let trials = 10_000;
        let mut counts = [0usize; 4];
        for _ in 0..trials {
            let (_, l) = cb.encode(&[0, 1], &mut rng).unwrap();
            counts[l[1]] += 1;
        }
        let expected = trials as f64 / 4.0;
        let chi2: f64 = counts.iter().map(|c| (*c as f64 - expected).powi(2) / expected).sum();
        // 3 degrees of freedom; 99.9% quantile is about 16.27.
        assert!(chi2 < 16.27, "chi2 = {chi2}");
        let sigma = (trials as f64 * 0.25 * 0.75).sqrt();
        assert!(counts.iter().all(|c| (*c as f64 - expected).abs() < 3.0 * sigma));
    }
}
