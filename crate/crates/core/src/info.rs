//! Entropy and mutual information over explicit finite tables, in bits.

use crate::error::{Error, Result};

/// Probabilities must sum to one within this tolerance.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Shannon entropy in bits with `0 log 0 = 0`.
pub fn entropy_bits(p: &[f64]) -> f64 {
    -p.iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| x * x.log2())
        .sum::<f64>()
}

/// Binary entropy function.
pub fn binary_entropy(p: f64) -> f64 {
    entropy_bits(&[p, 1.0 - p])
}

pub fn check_distribution(p: &[f64], context: &str) -> Result<()> {
    if p.is_empty() {
        return Err(Error::InvalidParameter(format!("{context}: empty distribution")));
    }
    if let Some(&v) = p.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
        return Err(Error::NegativeProbability { value: v, context: context.to_string() });
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::NotNormalized(s));
    }
    Ok(())
}

/// Output law `q(y) = Σ_s p(s) W(y|s)`.
pub fn output_law(p: &[f64], table: &[Vec<f64>]) -> Vec<f64> {
    let m = table.first().map_or(0, Vec::len);
    let mut q = vec![0.0; m];
    for (ps, row) in p.iter().zip(table) {
        if *ps == 0.0 {
            continue;
        }
        for (qy, w) in q.iter_mut().zip(row) {
            *qy += ps * w;
        }
    }
    q
}

/// `H(Y|S) = Σ_s p(s) H(W(·|s))`.
pub fn conditional_entropy(p: &[f64], table: &[Vec<f64>]) -> f64 {
    p.iter()
        .zip(table)
        .filter(|(ps, _)| **ps > 0.0)
        .map(|(ps, row)| ps * entropy_bits(row))
        .sum()
}

/// `I(S;Y)` for input law `p` through the channel `table` (rows indexed by `s`).
pub fn mutual_information(p: &[f64], table: &[Vec<f64>]) -> f64 {
    entropy_bits(&output_law(p, table)) - conditional_entropy(p, table)
}

/// Row-stochastic composition `A·B`.
pub fn compose(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let m = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| {
            let mut out = vec![0.0; m];
            for (w, brow) in row.iter().zip(b) {
                if *w == 0.0 {
                    continue;
                }
                for (o, v) in out.iter_mut().zip(brow) {
                    *o += w * v;
                }
            }
            out
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_basics() {
        assert_eq!(entropy_bits(&[1.0, 0.0]), 0.0);
        assert!((entropy_bits(&[0.25; 4]) - 2.0).abs() < 1e-15);
        assert!((binary_entropy(0.11) - 0.4999).abs() < 1e-3);
    }

    #[test]
    fn distribution_checks() {
        assert!(check_distribution(&[0.5, 0.5], "p").is_ok());
        assert!(check_distribution(&[0.5, 0.6], "p").is_err());
        assert!(check_distribution(&[1.5, -0.5], "p").is_err());
        assert!(check_distribution(&[], "p").is_err());
    }

    #[test]
    fn mi_of_identity_and_constant() {
        let id = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert!((mutual_information(&[0.5, 0.5], &id) - 1.0).abs() < 1e-15);
        let c = vec![vec![0.3, 0.7], vec![0.3, 0.7]];
        assert!(mutual_information(&[0.5, 0.5], &c).abs() < 1e-15);
    }
}
