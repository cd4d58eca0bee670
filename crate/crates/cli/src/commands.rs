use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::json;

use wiresecret::binning_simulator::{
    admissible_rate, leakage_trend, validate_rates, CodebookShape, LayerRates, TrendConfig,
};
use wiresecret::channel_models::check_degraded_dmc;
use wiresecret::compound_wiretap::{
    build_compound, capacity_kk, lower_bound_dmc, upper_bound_dmc, AuxSearch, GridConfig,
};
use wiresecret::layered_region::{
    mimo_rate_tuple, siso_region_samples, weighted_boundary_search_mimo, weighted_boundary_search_siso,
    CovarianceChain, MimoSearchConfig, SisoSearchConfig,
};
use wiresecret::linalg;
use wiresecret::miso_reduction::{build_virtual, check_ordering, limit_rate_tuple, sigma_tilde_sensitivity};
use wiresecret::schema::{ChainFile, ChannelFile, MisoFile, SimulationFile, StructureFile};
use wiresecret::Error;

use crate::args::*;
use crate::output::{config_hash, emit, json_bytes, write_atomic, Csv, Provenance};
use crate::CliError;

pub fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Compound(a) => compound(a),
        Command::Region(RegionCommand::Siso(a)) => region_siso(a),
        Command::Region(RegionCommand::Mimo(a)) => region_mimo(a),
        Command::Miso(a) => miso(a),
        Command::Simulate(a) => simulate(a),
        Command::Capacity(CapacityCommand::Kk(a)) => capacity(a),
        Command::Validate(a) => validate(a),
    }
}

struct Input<T> {
    value: T,
    bytes: Vec<u8>,
}

fn load<T: DeserializeOwned>(path: &Path) -> Result<Input<T>, CliError> {
    let bytes =
        std::fs::read(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let value = serde_json::from_slice(&bytes)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    Ok(Input { value, bytes })
}

fn hash(command: &str, inputs: &[&[u8]], params: &str) -> String {
    let mut parts: Vec<&[u8]> = vec![command.as_bytes()];
    parts.extend_from_slice(inputs);
    parts.push(params.as_bytes());
    config_hash(&parts)
}

#[derive(Serialize)]
struct Report<T: Serialize> {
    #[serde(flatten)]
    provenance: Provenance,
    #[serde(flatten)]
    body: T,
}

fn report<T: Serialize>(provenance: &Provenance, body: T) -> Result<Vec<u8>, CliError> {
    json_bytes(&Report { provenance: provenance.clone(), body })
}

fn compound(a: CompoundArgs) -> Result<(), CliError> {
    let structure: Input<StructureFile> = load(&a.structure)?;
    let channel: Input<ChannelFile> = load(&a.channel)?;
    let aux = match (a.aux_size, a.aux_grid) {
        (Some(size), Some(steps)) => AuxSearch::Finite { size, steps },
        _ => AuxSearch::CopyInput,
    };
    let grid = GridConfig { steps: a.grid, aux };
    let prov = Provenance::new(
        None,
        hash("compound", &[&structure.bytes, &channel.bytes], &format!("{grid:?}")),
    );
    let access = structure.value.to_structure()?;
    let dmc = channel.value.to_dmc()?;
    let spec = build_compound(&access)?;
    let lower = lower_bound_dmc(&spec, &dmc, &grid)?;
    let upper = upper_bound_dmc(&spec, &dmc, &grid)?;
    let body = json!({
        "grid": grid,
        "compound": spec,
        "lower_bound": lower,
        "upper_bound": upper,
    });
    emit(a.out.as_deref(), &report(&prov, body)?)
}

fn weights_or_ones(weights: Option<Vec<f64>>, k: usize) -> Vec<f64> {
    weights.unwrap_or_else(|| vec![1.0; k])
}

fn numbered(prefix: &str, count: usize) -> Vec<String> {
    (1..=count).map(|i| format!("{prefix}_{i}")).collect()
}

fn region_siso(a: RegionSisoArgs) -> Result<(), CliError> {
    let channel: Input<ChannelFile> = load(&a.channel)?;
    let params = format!("grid={} weights={:?} refine={}", a.grid, a.weights, a.refine_rounds);
    let prov = Provenance::new(None, hash("region siso", &[&channel.bytes], &params));
    let ch = channel.value.to_siso().map_err(|e| match e {
        Error::NotDegraded { index, .. } => {
            let n = channel.value.siso_parameters().map(|p| p.1).unwrap_or_default();
            CliError::Validation(format!(
                "{e}; noise variances must be strictly decreasing, but N_{} = {} <= N_{} = {}",
                index - 1,
                n[index - 2],
                index,
                n[index - 1]
            ))
        }
        e => e.into(),
    })?;
    let k = ch.receivers();
    let samples = siso_region_samples(&ch, a.grid)?;
    let mut header = numbered("P", k);
    header.extend(numbered("R", k));
    let mut csv = Csv::new(&prov, &header);
    for s in &samples {
        csv.row(s.allocation.powers.iter().chain(&s.rates.rates));
    }
    write_atomic(&a.out, &csv.into_bytes())?;

    if let Some(w) = a.weights {
        let cfg = SisoSearchConfig { grid_steps: a.grid, refinement_rounds: a.refine_rounds };
        let best = weighted_boundary_search_siso(&w, &ch, &cfg)?;
        let body = json!({
            "weights": w,
            "powers": best.allocation.powers,
            "rates": best.rates,
            "objective": best.objective,
        });
        emit(a.report.as_deref(), &report(&prov, body)?)?;
    }
    Ok(())
}

fn region_mimo(a: RegionMimoArgs) -> Result<(), CliError> {
    let channel: Input<ChannelFile> = load(&a.channel)?;
    if a.perturbations > 0 && a.seed.is_none() {
        return Err(CliError::Usage("--seed is required when --perturbations > 0".into()));
    }
    let params = format!(
        "alpha_grid={} perturbations={} weights={:?} scale={}",
        a.alpha_grid, a.perturbations, a.weights, a.perturbation_scale
    );
    let prov = Provenance::new(a.seed, hash("region mimo", &[&channel.bytes], &params));
    let ch = channel.value.to_mimo()?;
    let k = ch.receivers();
    let weights = weights_or_ones(a.weights, k);
    let cfg = MimoSearchConfig {
        alpha_steps: a.alpha_grid,
        perturbations: a.perturbations,
        seed: a.seed.unwrap_or(0),
        perturbation_scale: a.perturbation_scale,
    };
    let best = weighted_boundary_search_mimo(&weights, &ch, &cfg)?;

    let mut header = numbered("alpha", k - 1);
    header.extend(numbered("R", k));
    let mut csv = Csv::new(&prov, &header);
    for alphas in wiresecret::grid::nonincreasing_grid(k - 1, a.alpha_grid) {
        let rates = mimo_rate_tuple(&CovarianceChain::scaled(ch.input_cap(), &alphas), &ch)?;
        csv.row(alphas.iter().chain(&rates.rates));
    }
    write_atomic(&a.out, &csv.into_bytes())?;

    let body = json!({
        "weights": weights,
        "alphas": best.alphas,
        "chain": best.chain.layers.iter().map(linalg::to_row_major).collect::<Vec<_>>(),
        "rates": best.rates,
        "objective": best.objective,
        "accepted_perturbations": best.accepted_perturbations,
        "heuristic": best.heuristic,
    });
    emit(a.report.as_deref(), &report(&prov, body)?)
}

fn miso(a: MisoArgs) -> Result<(), CliError> {
    if a.tol.is_nan() || a.tol <= 0.0 {
        return Err(CliError::Usage("--tol must be positive".into()));
    }
    let instance: Input<MisoFile> = load(&a.instance)?;
    let chain: Input<ChainFile> = load(&a.chain)?;
    let prov = Provenance::new(
        None,
        hash("miso", &[&instance.bytes, &chain.bytes], &format!("tol={}", a.tol)),
    );
    let inst = instance.value.to_instance()?;
    let chain = chain.value.to_chain()?;
    let result = limit_rate_tuple(&inst, &chain)?;
    let k = inst.participants();

    let mut header = vec!["t".to_string()];
    header.extend(numbered("R", k));
    header.push("step".into());
    let mut csv = Csv::new(&prov, &header);
    for p in &result.trace {
        let mut fields = vec![p.t.to_string()];
        fields.extend(p.raw.iter().map(|r| r.to_string()));
        fields.push(p.step.map_or_else(String::new, |s| s.to_string()));
        csv.row(fields);
    }
    write_atomic(&a.out, &csv.into_bytes())?;

    let last_t = result.trace.last().map_or(1.0, |p| p.t);
    let ordering = check_ordering(&build_virtual(&inst, last_t)?, a.tol);
    let sensitivity = if result.converged { sigma_tilde_sensitivity(&inst, &chain).ok() } else { None };
    let body = json!({
        "converged": result.converged,
        "rates": result.rates,
        "iterations": result.trace.len(),
        "final_t": last_t,
        "condition_number": inst.condition_number(),
        "ordering": ordering,
        "sigma_tilde_sensitivity": sensitivity,
    });
    emit(a.report.as_deref(), &report(&prov, body)?)?;
    if !ordering.all_passed() {
        return Err(CliError::Validation(format!(
            "virtual covariance ordering violated at pair {}",
            ordering.first_failure().map_or(0, |p| p.index)
        )));
    }
    if !result.converged {
        return Err(CliError::NonConvergence(format!(
            "rate limit did not converge after {} doublings; trace written to {}",
            result.trace.len() - 1,
            a.out.display()
        )));
    }
    Ok(())
}

fn suggest_rates(rates: &LayerRates, ns: &[usize]) -> String {
    ns.iter()
        .map(|&n| {
            let m: Vec<f64> = rates.message.iter().map(|r| admissible_rate(n, *r)).collect();
            let t: Vec<f64> = rates.total.iter().map(|r| admissible_rate(n, *r)).collect();
            format!("n={n}: message {m:?}, total {t:?}")
        })
        .collect::<Vec<_>>()
        .join("; ")
}

fn simulate(a: SimulateArgs) -> Result<(), CliError> {
    let config: Input<SimulationFile> = load(&a.config)?;
    if a.seeds == 0 {
        return Err(CliError::Usage("--seeds must be >= 1".into()));
    }
    let params = format!("n={:?} seeds={} error_prob={}", a.n, a.seeds, !a.no_error_prob);
    let prov = Provenance::new(Some(a.seed), hash("simulate", &[&config.bytes], &params));
    let (channel, dist, rates) = config.value.parts()?;
    for &n in &a.n {
        if let Err(e) = CodebookShape::from_rates(n, &rates) {
            return Err(match e {
                Error::NonIntegralRate { .. } => CliError::Validation(format!(
                    "{e}; nearest admissible rates: {}",
                    suggest_rates(&rates, &a.n)
                )),
                e => e.into(),
            });
        }
    }
    let validation = validate_rates(&rates, &channel, &dist)?;
    if !validation.all_passed() {
        eprintln!("warning: rates violate the decodability or binning conditions");
    }
    let table = leakage_trend(&TrendConfig {
        channel,
        dist,
        rates,
        blocklengths: a.n.clone(),
        seeds: a.seeds,
        master_seed: a.seed,
        error_probability: !a.no_error_prob,
    })?;
    let header: Vec<String> = ["n", "seed", "receiver", "error_prob", "leakage_bits_per_symbol"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut csv = Csv::new(&prov, &header);
    for s in &table.samples {
        csv.row([
            s.n.to_string(),
            s.seed.to_string(),
            s.receiver.to_string(),
            s.error_probability.map_or_else(String::new, |p| p.to_string()),
            s.leakage.to_string(),
        ]);
    }
    write_atomic(&a.out, &csv.into_bytes())?;
    let body = json!({
        "validation": validation,
        "conforming": validation.all_passed(),
        "means": table.means,
        "trends": table.trends,
    });
    emit(a.report.as_deref(), &report(&prov, body)?)
}

fn capacity(a: CapacityKkArgs) -> Result<(), CliError> {
    let channel: Input<ChannelFile> = load(&a.channel)?;
    let prov = Provenance::new(None, hash("capacity kk", &[&channel.bytes], &format!("k={}", a.k)));
    let (power, noise) = channel.value.siso_parameters()?;
    let cap = capacity_kk(power, &noise, a.k)?;
    let body = json!({ "k": a.k, "K": noise.len(), "capacity": cap });
    emit(a.out.as_deref(), &report(&prov, body)?)
}

fn validate(a: ValidateArgs) -> Result<(), CliError> {
    let structure: Option<Input<StructureFile>> = a.structure.as_deref().map(load).transpose()?;
    let channel: Option<Input<ChannelFile>> = a.channel.as_deref().map(load).transpose()?;
    let inputs: Vec<&[u8]> = structure
        .iter()
        .map(|s| s.bytes.as_slice())
        .chain(channel.iter().map(|c| c.bytes.as_slice()))
        .collect();
    let prov = Provenance::new(None, hash("validate", &inputs, ""));
    let mut failures = Vec::new();

    let structure_report = structure.map(|s| match s.value.to_structure().and_then(|st| st.validate()) {
        Ok(r) => json!({ "valid": true, "report": r }),
        Err(e) => {
            failures.push(format!("structure: {e}"));
            json!({ "valid": false, "error": e.to_string() })
        }
    });
    let channel_report = match channel {
        None => None,
        Some(c) => Some(validate_channel(&c.value, &mut failures)?),
    };
    let body = json!({
        "valid": failures.is_empty(),
        "structure": structure_report,
        "channel": channel_report,
    });
    emit(a.out.as_deref(), &report(&prov, body)?)?;
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Validation(failures.join("; ")))
    }
}

fn validate_channel(c: &ChannelFile, failures: &mut Vec<String>) -> Result<serde_json::Value, CliError> {
    Ok(match c {
        ChannelFile::Dmc { .. } => match c.to_dmc() {
            Ok(dmc) => {
                let checks = (2..=dmc.receivers())
                    .map(|k| check_degraded_dmc(&dmc, k))
                    .collect::<Result<Vec<_>, _>>()?;
                for r in checks.iter().filter(|r| !r.feasible) {
                    failures.push(format!(
                        "receiver {} is not a degraded version of receiver {} (LP residual {:.3e})",
                        r.receiver - 1,
                        r.receiver,
                        r.max_residual
                    ));
                }
                json!({ "type": "dmc", "degradedness": checks })
            }
            Err(e) => {
                failures.push(format!("channel: {e}"));
                json!({ "type": "dmc", "error": e.to_string() })
            }
        },
        ChannelFile::Siso { .. } => match c.to_siso() {
            Ok(_) => json!({ "type": "siso", "degraded": true }),
            Err(e) => {
                failures.push(format!("channel: {e}"));
                json!({ "type": "siso", "degraded": false, "error": e.to_string() })
            }
        },
        ChannelFile::Mimo { .. } => match c.to_mimo() {
            Ok(_) => json!({ "type": "mimo", "degraded": true }),
            Err(e) => {
                failures.push(format!("channel: {e}"));
                json!({ "type": "mimo", "degraded": false, "error": e.to_string() })
            }
        },
    })
}
