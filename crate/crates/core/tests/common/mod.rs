#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

pub fn random_psd(rng: &mut ChaCha8Rng, r: usize, ridge: f64) -> DMatrix<f64> {
    let g = gaussian_matrix(rng, r, r);
    &g * g.transpose() + DMatrix::identity(r, r) * ridge
}

pub fn random_stochastic(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Vec<Vec<f64>> {
    (0..rows)
        .map(|_| {
            let v: Vec<f64> = (0..cols).map(|_| rng.random::<f64>() + 1e-3).collect();
            let s: f64 = v.iter().sum();
            v.into_iter().map(|x| x / s).collect()
        })
        .collect()
}

pub fn random_law(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    random_stochastic(rng, 1, n).remove(0)
}

pub fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    a.iter()
        .map(|row| (0..b[0].len()).map(|j| row.iter().zip(b).map(|(x, r)| x * r[j]).sum()).collect())
        .collect()
}

/// Transition matrices ordered weakest first; each is the next one
/// followed by a random channel.
pub fn degraded_chain(rng: &mut ChaCha8Rng, inputs: usize, receivers: usize) -> Vec<Vec<Vec<f64>>> {
    let cols = rng.random_range(2..=3);
    let mut ws = vec![random_stochastic(rng, inputs, cols)];
    for _ in 1..receivers {
        let last = ws.last().unwrap();
        let cols = rng.random_range(2..=3);
        let q = random_stochastic(rng, last[0].len(), cols);
        ws.push(matmul(last, &q));
    }
    ws.reverse();
    ws
}
