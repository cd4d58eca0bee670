//! Equivalent compound wiretap channel of an access structure.
//!
//! Every minimal qualified set becomes a virtual legitimate receiver observing
//! the pooled outputs of its members; every maximal forbidden set becomes a
//! virtual eavesdropper. The bounds search a deterministic grid of auxiliary
//! laws `P(u, x)`; the lower and upper bounds share the grid, so the
//! max-min ≤ min-max sandwich holds exactly on every instance.

use rayon::prelude::*;
use serde::Serialize;

use crate::access_structure::{maximal_elements, minimal_elements, AccessStructure, Subset};
use crate::channel_models::{
    self, check_power_and_noise, DmcBroadcast, InputDistribution, JointInput, DEFAULT_STATE_CAP,
};
use crate::error::{Error, Result};
use crate::grid;

/// Cap on the number of auxiliary laws a grid may enumerate.
pub const MAX_GRID_CANDIDATES: usize = 5_000_000;

/// Antichain-reduced receiver and eavesdropper families.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompoundWiretapSpec {
    pub participants: usize,
    pub legitimate_sets: Vec<Subset>,
    pub eavesdropper_sets: Vec<Subset>,
    pub reduction: ReductionCounts,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ReductionCounts {
    pub qualified_given: usize,
    pub legitimate: usize,
    pub forbidden_given: usize,
    pub eavesdroppers: usize,
}

impl CompoundWiretapSpec {
    /// Reduces both families to antichains. A legitimate set inside an
    /// eavesdropper set forces zero capacity and is flagged as a warning.
    pub fn new(participants: usize, legitimate: &[Subset], eavesdroppers: &[Subset]) -> Result<Self> {
        if legitimate.is_empty() {
            return Err(Error::InvalidStructure("no qualified set to serve".into()));
        }
        let universe = Subset::full(participants);
        if let Some(s) = legitimate
            .iter()
            .chain(eavesdroppers)
            .find(|s| s.is_empty() || !s.is_subset_of(universe))
        {
            return Err(Error::InvalidStructure(format!("set {s} invalid for K = {participants}")));
        }
        let legitimate_sets = minimal_elements(legitimate);
        let eavesdropper_sets = maximal_elements(eavesdroppers);
        let mut warnings = Vec::new();
        for a in &legitimate_sets {
            for b in &eavesdropper_sets {
                if a.is_subset_of(*b) {
                    warnings.push(format!(
                        "legitimate set {a} is contained in eavesdropper set {b}: capacity is 0"
                    ));
                }
            }
        }
        Ok(Self {
            participants,
            reduction: ReductionCounts {
                qualified_given: legitimate.len(),
                legitimate: legitimate_sets.len(),
                forbidden_given: eavesdroppers.len(),
                eavesdroppers: eavesdropper_sets.len(),
            },
            legitimate_sets,
            eavesdropper_sets,
            warnings,
        })
    }
}

/// Validates the structure, then builds the reduced compound channel.
pub fn build_compound(structure: &AccessStructure) -> Result<CompoundWiretapSpec> {
    structure.validate()?;
    CompoundWiretapSpec::new(structure.participants(), structure.qualified(), structure.forbidden())
}

/// How the auxiliary variable `U` is searched.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AuxSearch {
    /// `U = X`; only `P_X` is gridded.
    CopyInput,
    /// `U = X` laws plus every `P_U × P_{X|U}` on a coarser lattice.
    Finite { size: usize, steps: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GridConfig {
    /// Lattice spacing `1/steps` for `P_X`.
    pub steps: usize,
    pub aux: AuxSearch,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { steps: 16, aux: AuxSearch::CopyInput }
    }
}

impl GridConfig {
    pub fn copy_input(steps: usize) -> Self {
        Self { steps, aux: AuxSearch::CopyInput }
    }

    /// Candidate auxiliary laws in a fixed order.
    pub fn candidates(&self, input_size: usize) -> Result<Vec<JointInput>> {
        if self.steps == 0 {
            return Err(Error::InvalidParameter("grid steps must be >= 1".into()));
        }
        let count = grid::binomial(self.steps + input_size - 1, input_size - 1);
        let extra = match self.aux {
            AuxSearch::CopyInput => 0.0,
            AuxSearch::Finite { size, steps } => {
                if size == 0 || steps == 0 {
                    return Err(Error::InvalidParameter("auxiliary size and steps must be >= 1".into()));
                }
                grid::binomial(steps + size - 1, size - 1)
                    * grid::binomial(steps + input_size - 1, input_size - 1).powi(size as i32)
            }
        };
        if count + extra > MAX_GRID_CANDIDATES as f64 {
            return Err(Error::EnumerationOverflow {
                size: (count + extra) as u128,
                cap: MAX_GRID_CANDIDATES as u128,
            });
        }
        let mut out: Vec<JointInput> = grid::simplex_grid(input_size, self.steps)
            .into_iter()
            .map(|p| JointInput::copy_of(&InputDistribution::new(p).expect("grid point")))
            .collect();
        if let AuxSearch::Finite { size, steps } = self.aux {
            let rows = grid::simplex_grid(input_size, steps);
            let combos = rows.len().pow(size as u32);
            for pu in grid::simplex_grid(size, steps) {
                for code in 0..combos {
                    let mut c = code;
                    let mut cond = vec![Vec::new(); size];
                    for slot in cond.iter_mut().rev() {
                        *slot = rows[c % rows.len()].clone();
                        c /= rows.len();
                    }
                    out.push(JointInput::from_marginal_and_conditional(&pu, &cond)?);
                }
            }
        }
        Ok(out)
    }
}

/// An optimized bound with its maximizing auxiliary law.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundResult {
    /// Clamped at zero.
    pub bits: f64,
    pub raw_bits: f64,
    pub argmax: JointInput,
    pub warnings: Vec<String>,
}

/// Per-pair maximum of `I(U;Y_A) - I(U;Y_B)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairBound {
    pub legitimate: Subset,
    /// `None` when the structure has no eavesdropper.
    pub eavesdropper: Option<Subset>,
    pub raw_bits: f64,
    pub argmax: JointInput,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UpperBoundResult {
    pub bits: f64,
    pub raw_bits: f64,
    pub pairs: Vec<PairBound>,
    /// Index into `pairs` of the minimizing pair.
    pub binding_pair: usize,
    pub warnings: Vec<String>,
}

/// `I(U; Y_S)` for every candidate and every set, `values[c][s]`.
fn evaluate(
    channel: &DmcBroadcast,
    sets: &[Subset],
    candidates: &[JointInput],
) -> Result<Vec<Vec<f64>>> {
    let tables = sets
        .iter()
        .map(|s| channel.product_conditional(*s, DEFAULT_STATE_CAP))
        .collect::<Result<Vec<_>>>()?;
    Ok(candidates
        .par_iter()
        .map(|c| {
            tables
                .iter()
                .map(|t| channel_models::mi_pair_from_table(c, t, false))
                .collect()
        })
        .collect())
}

fn check_dims(spec: &CompoundWiretapSpec, channel: &DmcBroadcast) -> Result<()> {
    if spec.participants != channel.receivers() {
        return Err(Error::DimensionMismatch {
            expected: spec.participants,
            found: channel.receivers(),
        });
    }
    Ok(())
}

fn boundary_warning(best: &JointInput) -> Option<String> {
    let on_face = best.input_marginal().contains(&0.0);
    on_face.then(|| {
        "best grid point lies on the simplex boundary; a finer grid may change the optimum"
            .to_string()
    })
}

/// First index attaining the maximum (deterministic tie-break).
fn argmax(values: impl IntoIterator<Item = f64>) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.into_iter().enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best
}

/// `max_{P_UX} [min_A I(U;Y_A) - max_B I(U;Y_B)]` over the grid, clamped at 0.
pub fn lower_bound_dmc(
    spec: &CompoundWiretapSpec,
    channel: &DmcBroadcast,
    search: &GridConfig,
) -> Result<BoundResult> {
    check_dims(spec, channel)?;
    let candidates = search.candidates(channel.input_size())?;
    let la = spec.legitimate_sets.len();
    let sets: Vec<Subset> = spec
        .legitimate_sets
        .iter()
        .chain(&spec.eavesdropper_sets)
        .copied()
        .collect();
    let values = evaluate(channel, &sets, &candidates)?;
    let objective = values.iter().map(|v| {
        let decode = v[..la].iter().copied().fold(f64::INFINITY, f64::min);
        let leak = v[la..].iter().copied().fold(0.0, f64::max);
        decode - leak
    });
    let (i, raw) = argmax(objective);
    let best = candidates[i].clone();
    Ok(BoundResult {
        bits: raw.max(0.0),
        raw_bits: raw,
        warnings: boundary_warning(&best).into_iter().collect(),
        argmax: best,
    })
}

/// `min_{A,B} max_{P_UX} [I(U;Y_A) - I(U;Y_B)]` over the grid, clamped at 0.
///
/// Both information terms depend only on the per-receiver marginals fixed by
/// the channel, so the freedom over the joint output law is not searched.
pub fn upper_bound_dmc(
    spec: &CompoundWiretapSpec,
    channel: &DmcBroadcast,
    search: &GridConfig,
) -> Result<UpperBoundResult> {
    check_dims(spec, channel)?;
    let candidates = search.candidates(channel.input_size())?;
    let la = spec.legitimate_sets.len();
    let sets: Vec<Subset> = spec
        .legitimate_sets
        .iter()
        .chain(&spec.eavesdropper_sets)
        .copied()
        .collect();
    let values = evaluate(channel, &sets, &candidates)?;
    let eaves: Vec<Option<usize>> = if spec.eavesdropper_sets.is_empty() {
        vec![None]
    } else {
        (0..spec.eavesdropper_sets.len()).map(Some).collect()
    };
    let mut pairs = Vec::new();
    for a in 0..la {
        for b in &eaves {
            let (i, raw) = argmax(values.iter().map(|v| v[a] - b.map_or(0.0, |b| v[la + b])));
            pairs.push(PairBound {
                legitimate: spec.legitimate_sets[a],
                eavesdropper: b.map(|b| spec.eavesdropper_sets[b]),
                raw_bits: raw,
                argmax: candidates[i].clone(),
            });
        }
    }
    let mut binding = 0;
    for (i, p) in pairs.iter().enumerate() {
        if p.raw_bits < pairs[binding].raw_bits {
            binding = i;
        }
    }
    let raw = pairs[binding].raw_bits;
    Ok(UpperBoundResult {
        bits: raw.max(0.0),
        raw_bits: raw,
        warnings: boundary_warning(&pairs[binding].argmax).into_iter().collect(),
        binding_pair: binding,
        pairs,
    })
}

/// All-share capacity: `max_{P_X} min_{B ⊊ {1..K}} [I(X;Y_1..Y_K) - I(X;Y_B)]`.
/// The empty `B` contributes zero leakage, so `K = 1` gives plain capacity.
pub fn capacity_all_share(channel: &DmcBroadcast, search: &GridConfig) -> Result<BoundResult> {
    let k = channel.receivers();
    if k > crate::access_structure::MAX_ENUMERATION_PARTICIPANTS {
        return Err(Error::InvalidParameter(format!("K = {k} too large to enumerate")));
    }
    let full = channel.all_receivers();
    let strict: Vec<Subset> = (1..full.bits()).map(Subset::from_bits).collect();
    let mut sets = vec![full];
    sets.extend(&strict);
    let copy = GridConfig { aux: AuxSearch::CopyInput, ..*search };
    let candidates = copy.candidates(channel.input_size())?;
    let values = evaluate(channel, &sets, &candidates)?;
    let (i, raw) = argmax(
        values
            .iter()
            .map(|v| v[0] - v[1..].iter().copied().fold(0.0, f64::max)),
    );
    let best = candidates[i].clone();
    Ok(BoundResult {
        bits: raw.max(0.0),
        raw_bits: raw,
        warnings: boundary_warning(&best).into_iter().collect(),
        argmax: best,
    })
}

/// Two-participant capacity `max_{P_X} [I(X;Y_1,Y_2) - max{I(X;Y_1), I(X;Y_2)}]`.
pub fn capacity_two(channel: &DmcBroadcast, search: &GridConfig) -> Result<BoundResult> {
    if channel.receivers() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: channel.receivers() });
    }
    capacity_all_share(channel, search)
}

/// Gaussian `(k, K)`-threshold capacity with its worst-case groups.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdCapacity {
    pub bits: f64,
    pub raw_bits: f64,
    /// Weakest `k`-group.
    pub legitimate: Subset,
    /// Strongest `(k-1)`-group; empty when `k = 1`.
    pub eavesdropper: Subset,
}

/// `min_{A_k, A_{k-1}} ½ log2((1 + Σ_{A_k} P/N_l) / (1 + Σ_{A_{k-1}} P/N_l))`.
pub fn capacity_kk(power: f64, noise_variances: &[f64], k: usize) -> Result<ThresholdCapacity> {
    check_power_and_noise(power, noise_variances)?;
    let kk = noise_variances.len();
    if k < 1 || k > kk {
        return Err(Error::InvalidParameter(format!("need 1 <= k <= K = {kk}, got k = {k}")));
    }
    if kk > crate::access_structure::MAX_ENUMERATION_PARTICIPANTS {
        return Err(Error::InvalidParameter(format!("K = {kk} too large to enumerate")));
    }
    let snr = |s: Subset| -> f64 { s.indices().map(|l| power / noise_variances[l]).sum() };
    let mut worst_num: Option<(Subset, f64)> = None;
    let mut worst_den: (Subset, f64) = (Subset::EMPTY, 0.0);
    let mut subsets: Vec<Subset> = (0u64..(1 << kk)).map(Subset::from_bits).collect();
    subsets.sort();
    for s in subsets {
        if s.len() == k {
            let v = snr(s);
            if worst_num.is_none_or(|(_, w)| v < w) {
                worst_num = Some((s, v));
            }
        } else if s.len() + 1 == k {
            let v = snr(s);
            if s.is_empty() || v > worst_den.1 {
                worst_den = (s, v);
            }
        }
    }
    let (legitimate, num) = worst_num.expect("k <= K");
    let raw = 0.5 * ((1.0 + num) / (1.0 + worst_den.1)).log2();
    Ok(ThresholdCapacity { bits: raw.max(0.0), raw_bits: raw, legitimate, eavesdropper: worst_den.0 })
}

/// Symmetric-noise closed form `½ log2((1 + kP) / (1 + (k-1)P))`.
pub fn capacity_kk_symmetric(power: f64, k: usize) -> f64 {
    0.5 * ((1.0 + k as f64 * power) / (1.0 + (k as f64 - 1.0) * power)).log2()
}
