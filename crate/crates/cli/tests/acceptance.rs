//! Acceptance criteria. Each criterion prints one PASS/FAIL line; the test
//! fails if any criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use xsum::{Xsum, XsumSmall};

use wiresecret::access_structure::AccessStructure;
use wiresecret::binning_simulator::{
    exact_error_probability, exact_leakage, leakage_trend, monte_carlo_error, validate_rates, CodebookShape,
    LayerRates, LayeredCodebook, TrendConfig,
};
use wiresecret::channel_models::{
    check_degraded_dmc, DmcBroadcast, GaussianMimoBroadcast, GaussianSisoBroadcast, TransitionMatrix,
};
use wiresecret::compound_wiretap::{build_compound, capacity_kk, lower_bound_dmc, upper_bound_dmc, GridConfig};
use wiresecret::layered_region::{
    dmc_rate_tuple, mimo_rate_tuple, siso_rate_tuple, CovarianceChain, LayeredDistribution, PowerAllocation,
};
use wiresecret::linalg;
use wiresecret::miso_reduction::{build_virtual, check_ordering, limit_rate_tuple, MisoSharingInstance};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn random_psd(rng: &mut ChaCha8Rng, r: usize, ridge: f64) -> DMatrix<f64> {
    let g = DMatrix::from_fn(r, r, |_, _| normal(rng));
    &g * g.transpose() + DMatrix::identity(r, r) * ridge
}

fn random_stochastic(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Vec<Vec<f64>> {
    (0..rows)
        .map(|_| {
            let v: Vec<f64> = (0..cols).map(|_| rng.random::<f64>() + 1e-3).collect();
            let s: f64 = v.iter().sum();
            v.into_iter().map(|x| x / s).collect()
        })
        .collect()
}

fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    a.iter()
        .map(|row| (0..b[0].len()).map(|j| row.iter().zip(b).map(|(x, r)| x * r[j]).sum()).collect())
        .collect()
}

fn scalar_consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let k = rng.random_range(1..=4);
        let mut noise: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..5.0)).collect();
        noise.sort_by(|a, b| b.total_cmp(a));
        noise.dedup();
        let k = noise.len();
        let power = rng.random_range(0.01..10.0);
        let mut powers: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
        let s: f64 = powers.iter().sum::<f64>() + rng.random::<f64>();
        powers.iter_mut().for_each(|p| *p *= power / s);
        let siso = GaussianSisoBroadcast::new(noise.clone(), power).unwrap();
        let a = siso_rate_tuple(&PowerAllocation::new(powers.clone(), power).unwrap(), &siso).unwrap();
        let one = |v: f64| DMatrix::from_element(1, 1, v);
        // The scalar allocation may leave power unused, so the matrix cap is the allocated total.
        let used: f64 = powers.iter().sum();
        let mimo = GaussianMimoBroadcast::new(noise.iter().map(|n| one(*n)).collect(), one(used)).unwrap();
        let layers = (1..k).map(|i| one(powers[i..].iter().sum())).collect();
        let b = mimo_rate_tuple(&CovarianceChain::new(layers), &mimo).unwrap();
        for (x, y) in a.raw.iter().zip(&b.raw) {
            worst = worst.max((x - y).abs());
        }
    }
    outcome(worst <= 1e-10, format!("max |Δ| = {worst:.2e} over 1000 instances"))
}

fn k_independence() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut exact = true;
    for power in [0.5, 1.0, 2.0] {
        for k in 1..=3usize {
            let closed = 0.5 * ((1.0 + k as f64 * power) / (1.0 + (k as f64 - 1.0) * power)).log2();
            let base = capacity_kk(power, &vec![1.0; k], k).unwrap().bits;
            for kk in k..=k + 3 {
                let v = capacity_kk(power, &vec![1.0; kk], k).unwrap().bits;
                exact &= v == base;
                worst = worst.max((v - closed).abs());
            }
        }
    }
    outcome(exact && worst <= 1e-15, format!("identical across K: {exact}, max |C - closed form| = {worst:.2e}"))
}

fn lemma1_ordering() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = f64::INFINITY;
    let mut max_cond: f64 = 0.0;
    for _ in 0..100 {
        let k = rng.random_range(2..=4);
        let h = loop {
            let h = DMatrix::from_fn(k, k, |_, _| normal(&mut rng));
            if linalg::condition_number(&h) < 1e6 {
                break h;
            }
        };
        max_cond = max_cond.max(linalg::condition_number(&h));
        let sigma = random_psd(&mut rng, k, 0.0);
        let tilde = (1..k).map(|_| rng.random_range(0.1..2.0)).collect();
        let inst = MisoSharingInstance::new(h, sigma, tilde, DMatrix::identity(k, k)).unwrap();
        for t in [1.0, 10.0, 100.0] {
            let rep = check_ordering(&build_virtual(&inst, t).unwrap(), 1e-8);
            for p in &rep.pairs {
                worst = worst.min(p.min_eigenvalue);
            }
        }
    }
    outcome(worst >= -1e-8, format!("min eigenvalue {worst:.3e}, max cond(H) {max_cond:.1e}"))
}

/// `½ log2` of the ratio of the leading `k×k` principal minors.
fn leading_minor_ratio(a: &DMatrix<f64>, b: &DMatrix<f64>, k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let da = a.view((0, 0), (k, k)).determinant();
    let db = b.view((0, 0), (k, k)).determinant();
    0.5 * (da / db).log2()
}

fn miso_limit_oracle() -> Outcome {
    let i2 = DMatrix::<f64>::identity(2, 2);
    let inst = MisoSharingInstance::new(i2.clone(), i2.clone(), vec![1.0], &i2 * 2.0).unwrap();
    let res = limit_rate_tuple(&inst, &CovarianceChain::new(vec![i2.clone()])).unwrap();
    let step = res.trace.last().unwrap().step.unwrap_or(0.0);
    // As t → ∞ each virtual receiver k keeps only the first k outputs.
    let chain = [&i2 * 2.0, i2.clone(), DMatrix::zeros(2, 2)];
    let oracle: Vec<f64> = (1..=2)
        .map(|k| {
            leading_minor_ratio(&(&i2 + &chain[k - 1]), &(&i2 + &chain[k]), k)
                - leading_minor_ratio(&(&i2 + &chain[k - 1]), &(&i2 + &chain[k]), k - 1)
        })
        .collect();
    let err = res.rates.rates.iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    outcome(
        res.converged && step < 1e-6 && err <= 1e-5,
        format!("converged {} (step {step:.1e}), rates {:?} vs oracle {oracle:?}, err {err:.1e}", res.converged, res.rates.rates),
    )
}

fn compound_sandwich() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = f64::INFINITY;
    for _ in 0..50 {
        let k = rng.random_range(2..=3);
        let x = rng.random_range(2..=3);
        let ch = DmcBroadcast::from_rows(
            (0..k).map(|_| { let y = rng.random_range(2..=3); random_stochastic(&mut rng, x, y) }).collect(),
        )
        .unwrap();
        let threshold = rng.random_range(1..=k);
        let spec = build_compound(&AccessStructure::threshold(threshold, k).unwrap()).unwrap();
        let grid = GridConfig::copy_input(16);
        let lo = lower_bound_dmc(&spec, &ch, &grid).unwrap();
        let up = upper_bound_dmc(&spec, &ch, &grid).unwrap();
        worst = worst.min(up.raw_bits - lo.raw_bits);
    }
    let erasure = DmcBroadcast::new(vec![TransitionMatrix::erasure(0.5).unwrap(); 2]).unwrap();
    let spec = build_compound(&AccessStructure::threshold(2, 2).unwrap()).unwrap();
    let grid = GridConfig::copy_input(64);
    let lo = lower_bound_dmc(&spec, &erasure, &grid).unwrap().bits;
    let up = upper_bound_dmc(&spec, &erasure, &grid).unwrap().bits;
    let ok = worst >= -1e-6 && (lo - 0.25).abs() <= 2e-3 && (up - 0.25).abs() <= 2e-3;
    outcome(ok, format!("min slack {worst:.2e}; erasure pair lower {lo:.6}, upper {up:.6}"))
}

fn degradedness() -> Outcome {
    let cascade = DmcBroadcast::new(vec![TransitionMatrix::bsc(0.2).unwrap(), TransitionMatrix::bsc(0.1).unwrap()]).unwrap();
    let r = check_degraded_dmc(&cascade, 2).unwrap();
    let q = r.degrading_channel[0][1];
    let reversed = DmcBroadcast::new(vec![TransitionMatrix::bsc(0.1).unwrap(), TransitionMatrix::bsc(0.2).unwrap()]).unwrap();
    let rev = check_degraded_dmc(&reversed, 2).unwrap();
    let ok = r.feasible && (q - 0.125).abs() <= 1e-6 && !rev.feasible;
    outcome(ok, format!("cascade feasible {} with crossover {q:.9}; reversed feasible {} (residual {:.3e})", r.feasible, rev.feasible, rev.max_residual))
}

fn simulator_exactness() -> Outcome {
    let words = ["000000", "001111", "110011", "111100"];
    let table: Vec<Vec<usize>> = words.iter().map(|w| w.bytes().map(|b| (b - b'0') as usize).collect()).collect();
    let cb = LayeredCodebook::from_tables(CodebookShape::new(6, vec![4], vec![1]).unwrap(), vec![2], vec![table.clone()]).unwrap();
    let p = 0.1;
    let ch = DmcBroadcast::new(vec![TransitionMatrix::bsc(p).unwrap()]).unwrap();
    let exact = exact_error_probability(&cb, &ch, 1).unwrap();

    // Minimum Hamming distance decoding, ties to the smaller index.
    let mut acc = XsumSmall::new();
    for y in 0..64usize {
        let ybits: Vec<usize> = (0..6).map(|i| (y >> (5 - i)) & 1).collect();
        let dist: Vec<i32> = table.iter().map(|c| c.iter().zip(&ybits).filter(|(a, b)| a != b).count() as i32).collect();
        let decoded = (0..4).min_by_key(|&i| (dist[i], i)).unwrap();
        for (c, d) in dist.iter().enumerate() {
            if c != decoded {
                acc.add(p.powi(*d) * (1.0 - p).powi(6 - d));
            }
        }
    }
    let oracle = (acc.sum() + 0.0) / 4.0;
    let mc = monte_carlo_error(&cb, &ch, 1, 100_000, 7).unwrap();
    let sigma = (exact * (1.0 - exact) / 100_000f64).sqrt();
    let ok = exact.to_bits() == oracle.to_bits() && (mc.estimate - exact).abs() <= 3.0 * sigma;
    outcome(ok, format!("exact {exact:e}, oracle {oracle:e}, Monte Carlo {} (3σ = {:.1e})", mc.estimate, 3.0 * sigma))
}

fn leakage_properties() -> Outcome {
    let uniform_x = LayeredDistribution::new(vec![1.0], vec![TransitionMatrix::new(vec![vec![0.5, 0.5]]).unwrap()]).unwrap();
    // Independent output.
    let rates = LayerRates::new(vec![0.0, 0.5], vec![0.0, 1.0]).unwrap();
    let cb = LayeredCodebook::generate(&uniform_x, &rates, 4, 11).unwrap();
    let blind = DmcBroadcast::new(vec![TransitionMatrix::constant(2, vec![0.4, 0.6]).unwrap(), TransitionMatrix::identity(2)]).unwrap();
    let zero = exact_leakage(&cb, &blind, 1).unwrap();

    // Unit bins, noiseless weaker receiver, distinct codewords.
    let bits = |v: &[&str]| -> Vec<Vec<usize>> { v.iter().map(|s| s.bytes().map(|b| (b - b'0') as usize).collect()).collect() };
    let shape = CodebookShape::new(4, vec![2, 4], vec![1, 1]).unwrap();
    let layer1 = bits(&["0000", "1111"]);
    let layer2 = bits(&["0000", "0001", "0010", "0011", "1100", "1101", "1110", "1111"]);
    let open = LayeredCodebook::from_tables(shape, vec![2, 2], vec![layer1, layer2]).unwrap();
    let clear = DmcBroadcast::new(vec![TransitionMatrix::identity(2), TransitionMatrix::identity(2)]).unwrap();
    let full = exact_leakage(&open, &clear, 1).unwrap();

    // Conforming configuration over blocklengths 2..8.
    let channel = DmcBroadcast::new(vec![TransitionMatrix::erasure(0.8).unwrap(), TransitionMatrix::identity(2)]).unwrap();
    let dist = LayeredDistribution::new(vec![1.0], vec![TransitionMatrix::new(vec![vec![0.5, 0.5]]).unwrap()]).unwrap();
    let rates = LayerRates::new(vec![0.0, 0.5], vec![0.0, 1.0]).unwrap();
    let validation = validate_rates(&rates, &channel, &dist).unwrap();
    let conforming = validation.all_passed() && validation.level_conditions_passed();
    let table = leakage_trend(&TrendConfig {
        channel,
        dist,
        rates,
        blocklengths: vec![2, 4, 6, 8],
        seeds: 20,
        master_seed: 1,
        error_probability: false,
    })
    .unwrap();
    let trend = &table.trends[0];
    let fraction = trend.fraction.unwrap_or(0.0);
    let means: Vec<String> = table.means.iter().filter(|m| m.receiver == 1).map(|m| format!("{:.4}", m.mean_leakage)).collect();
    let ok = zero == 0.0 && full == 0.5 && conforming && fraction >= 0.75;
    outcome(
        ok,
        format!("independent {zero}, unbinned {full} (expected 0.5), conforming {conforming}, means {means:?}, nonincreasing fraction {fraction:.2}"),
    )
}

fn rt_monotonicity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst_increase = f64::NEG_INFINITY;
    for _ in 0..200 {
        let r = rng.random_range(1..=4);
        let a = random_psd(&mut rng, r, 0.05);
        let b = random_psd(&mut rng, r, 0.0);
        let d = random_psd(&mut rng, r, 0.0);
        let f = |t: f64| linalg::half_log2_det_ratio(&(&a + &b + &d * t), &(&a + &d * t)).unwrap();
        let values: Vec<f64> = (0..100).map(|i| f(i as f64 / 99.0)).collect();
        for w in values.windows(2) {
            worst_increase = worst_increase.max(w[1] - w[0]);
        }
    }
    outcome(worst_increase <= 1e-10, format!("largest step increase {worst_increase:.2e}"))
}

fn entropy(p: &[f64]) -> f64 {
    p.iter().filter(|v| **v > 0.0).map(|v| -v * v.log2()).sum()
}

/// `I(U_k; Y_j | U_{k-1})` from the full joint over `(u_1..u_K, y_j)`.
fn enumerated_cmi(first: &[f64], conds: &[Vec<Vec<f64>>], w: &[Vec<f64>], k: usize) -> f64 {
    let layers = conds.len() + 1;
    let sizes: Vec<usize> = std::iter::once(first.len()).chain(conds.iter().map(|c| c[0].len())).collect();
    let ny = w[0].len();
    let total: usize = sizes.iter().product::<usize>() * ny;
    let (mut p_prev, mut p_pair, mut p_prev_y, mut p_all) = (
        std::collections::BTreeMap::new(),
        std::collections::BTreeMap::new(),
        std::collections::BTreeMap::new(),
        std::collections::BTreeMap::new(),
    );
    for idx in 0..total {
        let mut rest = idx;
        let y = rest % ny;
        rest /= ny;
        let mut u = vec![0; layers];
        for l in (0..layers).rev() {
            u[l] = rest % sizes[l];
            rest /= sizes[l];
        }
        let mut p = first[u[0]];
        for l in 1..layers {
            p *= conds[l - 1][u[l - 1]][u[l]];
        }
        p *= w[u[layers - 1]][y];
        let prev = if k == 1 { 0 } else { u[k - 2] };
        *p_prev.entry(prev).or_insert(0.0) += p;
        *p_pair.entry((prev, u[k - 1])).or_insert(0.0) += p;
        *p_prev_y.entry((prev, y)).or_insert(0.0) += p;
        *p_all.entry((prev, u[k - 1], y)).or_insert(0.0) += p;
    }
    let h = |m: Vec<f64>| entropy(&m);
    h(p_pair.values().copied().collect()) + h(p_prev_y.values().copied().collect())
        - h(p_prev.values().copied().collect())
        - h(p_all.values().copied().collect())
}

fn dmc_region_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let k = rng.random_range(1..=3);
        let sizes: Vec<usize> = (0..k).map(|_| rng.random_range(1..=3)).collect();
        let first = random_stochastic(&mut rng, 1, sizes[0]).remove(0);
        let conds: Vec<Vec<Vec<f64>>> = (1..k).map(|l| random_stochastic(&mut rng, sizes[l - 1], sizes[l])).collect();
        let x = sizes[k - 1];
        // Degraded by construction: Y_{j-1} = Y_j passed through a random channel.
        let cols = rng.random_range(2..=3);
        let mut ws = vec![random_stochastic(&mut rng, x, cols)];
        for _ in 1..k {
            let last = ws.last().unwrap();
            let cols = rng.random_range(2..=3);
            let q = random_stochastic(&mut rng, last[0].len(), cols);
            ws.push(matmul(last, &q));
        }
        ws.reverse();
        let ch = DmcBroadcast::from_rows(ws.clone()).unwrap();
        let dist = LayeredDistribution::new(
            first.clone(),
            conds.iter().map(|c| TransitionMatrix::new(c.clone()).unwrap()).collect(),
        )
        .unwrap();
        let got = dmc_rate_tuple(&dist, &ch).unwrap();
        for layer in 1..=k {
            let own = enumerated_cmi(&first, &conds, &ws[layer - 1], layer);
            let leak = if layer == 1 { 0.0 } else { enumerated_cmi(&first, &conds, &ws[layer - 2], layer) };
            worst = worst.max(((own - leak).max(0.0) - got.rates[layer - 1]).abs());
        }
    }
    outcome(worst <= 1e-12, format!("max |Δ| = {worst:.2e} over 50 chains"))
}

fn run_cli(args: &[&str], dir: &Path) -> (i32, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_wiresecret")).args(args).current_dir(dir).output().unwrap();
    (out.status.code().unwrap_or(-1), out.stdout)
}

fn reproducibility() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let files = [
        ("s.json", r#"{"K": 3, "qualified": [[1,2]], "forbidden": "complement"}"#),
        ("dmc.json", r#"{"type": "dmc", "transitions": [[[0.7,0.3],[0.2,0.8]], [[0.8,0.2],[0.1,0.9]], [[0.9,0.1],[0.05,0.95]]]}"#),
        ("siso.json", r#"{"type": "siso", "N": [3.0, 2.0, 1.0], "P": 2.0}"#),
        ("mimo.json", r#"{"type": "mimo", "Sigma": [[3,0.5,0.5,2],[1,0,0,1]], "S": [2,0,0,2]}"#),
        ("m.json", r#"{"H": [1,0.3,-0.2,0.8], "Sigma": [1,0,0,0.5], "S": [2,0,0,1]}"#),
        ("chain.json", r#"{"layers": [[1,0,0,0.5]]}"#),
        (
            "sim.json",
            r#"{"channel": {"type": "dmc", "transitions": [[[0.2,0,0.8],[0,0.2,0.8]], [[1,0],[0,1]]]},
                "layers": {"first": [1.0], "conditionals": [[[0.5,0.5]]]},
                "rates": {"message": [0.0, 0.5], "total": [0.0, 1.0]}}"#,
        ),
    ];
    for (name, body) in files {
        std::fs::write(d.join(name), body).unwrap();
    }
    let runs: Vec<(&str, Vec<&str>)> = vec![
        ("compound", vec!["compound", "--structure", "s.json", "--channel", "dmc.json", "--grid", "8", "--out", "OUT"]),
        ("region siso", vec!["region", "siso", "--channel", "siso.json", "--grid", "6", "--weights", "1,1,1", "--out", "OUT"]),
        ("region mimo", vec!["region", "mimo", "--channel", "mimo.json", "--alpha-grid", "5", "--perturbations", "50", "--seed", "7", "--out", "OUT"]),
        ("miso", vec!["miso", "--instance", "m.json", "--chain", "chain.json", "--out", "OUT"]),
        ("simulate", vec!["simulate", "--config", "sim.json", "--n", "2,4", "--seeds", "3", "--seed", "5", "--out", "OUT"]),
        ("capacity kk", vec!["capacity", "kk", "--channel", "siso.json", "--k", "2", "--out", "OUT"]),
        ("validate", vec!["validate", "--structure", "s.json", "--channel", "dmc.json", "--out", "OUT"]),
    ];
    let mut failures = Vec::new();
    for (name, args) in &runs {
        let mut results = Vec::new();
        for rep in 0..2 {
            let out = format!("out_{}_{rep}", name.replace(' ', "_"));
            let argv: Vec<&str> = args.iter().map(|a| if *a == "OUT" { out.as_str() } else { a }).collect();
            let (code, stdout) = run_cli(&argv, d);
            let file = std::fs::read(d.join(&out)).unwrap_or_default();
            results.push((code, stdout, file));
        }
        let same = results[0] == results[1];
        if results[0].0 != 0 || !same || results[0].2.is_empty() {
            failures.push(format!("{name} (exit {}, identical {same})", results[0].0));
        }
    }
    let detail = if failures.is_empty() {
        format!("{} subcommands byte-identical across two runs", runs.len())
    } else {
        format!("failed: {}", failures.join(", "))
    };
    outcome(failures.is_empty(), detail)
}

fn main() {
    type Check = fn() -> Outcome;
    let criteria: [(&str, Check, Duration); 11] = [
        ("scalar consistency", scalar_consistency, Duration::from_secs(5)),
        ("capacity independent of K", k_independence, Duration::from_secs(1)),
        ("virtual covariance ordering", lemma1_ordering, Duration::from_secs(10)),
        ("MISO limit oracle", miso_limit_oracle, Duration::from_secs(1)),
        ("compound bound sandwich", compound_sandwich, Duration::from_secs(60)),
        ("degradedness checker", degradedness, Duration::from_secs(1)),
        ("simulator exactness", simulator_exactness, Duration::from_secs(30)),
        ("leakage properties", leakage_properties, Duration::from_secs(300)),
        ("log-det ratio monotonicity", rt_monotonicity, Duration::from_secs(5)),
        ("DMC region oracle", dmc_region_oracle, Duration::from_secs(30)),
        ("CLI reproducibility", reproducibility, Duration::from_secs(300)),
    ];
    let mut failed = Vec::new();
    for (i, (name, check, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = check();
        let elapsed = start.elapsed();
        let in_time = elapsed <= *limit;
        let pass = o.passed && in_time;
        println!(
            "{} [{}] {}: {} ({:.2?}, limit {:?})",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            name,
            o.detail,
            elapsed,
            limit
        );
        if !pass {
            failed.push(i + 1);
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}

