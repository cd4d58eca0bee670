//! Discrete memoryless broadcast channels and their exact information oracles.

use microlp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem};
use serde::{Deserialize, Serialize};

use crate::access_structure::Subset;
use crate::error::{Error, Result};
use crate::info;

/// Default cap on the number of joint (input, product-output) states.
pub const DEFAULT_STATE_CAP: u128 = 10_000_000;
/// Row sums must be one within this tolerance.
pub const STOCHASTIC_TOL: f64 = 1e-12;
/// A degradedness residual at or below this counts as feasible.
pub const DEGRADED_TOL: f64 = 1e-9;

/// Row-stochastic matrix `P(y|x)`, rows indexed by the input symbol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "Vec<Vec<f64>>", try_from = "Vec<Vec<f64>>")]
pub struct TransitionMatrix {
    rows: Vec<Vec<f64>>,
}

impl TransitionMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::checked(rows, 0)
    }

    fn checked(rows: Vec<Vec<f64>>, receiver: usize) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || cols == 0 {
            return Err(Error::InvalidParameter("empty transition matrix".into()));
        }
        for (r, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::DimensionMismatch { expected: cols, found: row.len() });
            }
            if let Some(&v) = row.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
                return Err(Error::NegativeProbability {
                    value: v,
                    context: format!("receiver {receiver} row {r}"),
                });
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::NotStochastic { receiver, row: r, sum });
            }
        }
        Ok(Self { rows })
    }

    pub fn identity(n: usize) -> Self {
        let rows = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Self { rows }
    }

    /// Binary symmetric channel with crossover `p`.
    pub fn bsc(p: f64) -> Result<Self> {
        Self::new(vec![vec![1.0 - p, p], vec![p, 1.0 - p]])
    }

    /// Binary erasure channel; outputs are `0, 1, erasure`.
    pub fn erasure(eps: f64) -> Result<Self> {
        Self::new(vec![vec![1.0 - eps, 0.0, eps], vec![0.0, 1.0 - eps, eps]])
    }

    /// Output independent of the input.
    pub fn constant(inputs: usize, law: Vec<f64>) -> Result<Self> {
        Self::new(vec![law; inputs])
    }

    pub fn input_size(&self) -> usize {
        self.rows.len()
    }

    pub fn output_size(&self) -> usize {
        self.rows[0].len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.rows[x]
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.rows[x][y]
    }

    /// `self · next`: apply `self`, then `next`.
    pub fn then(&self, next: &TransitionMatrix) -> Result<TransitionMatrix> {
        if self.output_size() != next.input_size() {
            return Err(Error::DimensionMismatch {
                expected: self.output_size(),
                found: next.input_size(),
            });
        }
        Ok(Self { rows: info::compose(&self.rows, &next.rows) })
    }

    /// Max absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &TransitionMatrix) -> f64 {
        self.rows
            .iter()
            .zip(&other.rows)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }
}

impl From<TransitionMatrix> for Vec<Vec<f64>> {
    fn from(t: TransitionMatrix) -> Self {
        t.rows
    }
}

impl TryFrom<Vec<Vec<f64>>> for TransitionMatrix {
    type Error = Error;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        TransitionMatrix::new(rows)
    }
}

/// Broadcast channel with conditionally independent outputs
/// `P(y_1..y_K|x) = Π_k P_k(y_k|x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DmcBroadcast {
    transitions: Vec<TransitionMatrix>,
}

impl DmcBroadcast {
    pub fn new(transitions: Vec<TransitionMatrix>) -> Result<Self> {
        let first = transitions
            .first()
            .ok_or_else(|| Error::InvalidParameter("broadcast channel needs a receiver".into()))?;
        let inputs = first.input_size();
        for t in &transitions {
            if t.input_size() != inputs {
                return Err(Error::DimensionMismatch { expected: inputs, found: t.input_size() });
            }
        }
        Ok(Self { transitions })
    }

    /// Builds from raw rows, reporting the 1-based receiver in errors.
    pub fn from_rows(transitions: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let mats = transitions
            .into_iter()
            .enumerate()
            .map(|(k, rows)| TransitionMatrix::checked(rows, k + 1))
            .collect::<Result<Vec<_>>>()?;
        Self::new(mats)
    }

    pub fn input_size(&self) -> usize {
        self.transitions[0].input_size()
    }

    pub fn receivers(&self) -> usize {
        self.transitions.len()
    }

    /// Transition matrix of 1-based receiver `k`.
    pub fn receiver(&self, k: usize) -> &TransitionMatrix {
        &self.transitions[k - 1]
    }

    pub fn transitions(&self) -> &[TransitionMatrix] {
        &self.transitions
    }

    pub fn all_receivers(&self) -> Subset {
        Subset::full(self.receivers())
    }

    fn check_set(&self, set: Subset) -> Result<()> {
        if set.is_empty() {
            return Err(Error::InvalidParameter("receiver set is empty".into()));
        }
        if set.max_member() > self.receivers() {
            return Err(Error::IndexOutOfRange { index: set.max_member(), limit: self.receivers() });
        }
        Ok(())
    }

    /// Number of product-output symbols observed by `set`.
    pub fn product_output_size(&self, set: Subset) -> u128 {
        set.members()
            .map(|k| self.receiver(k).output_size() as u128)
            .product()
    }

    /// `P(y_set | x)` with the pooled output flattened in increasing receiver
    /// order (last receiver varies fastest).
    pub fn product_conditional(&self, set: Subset, cap: u128) -> Result<Vec<Vec<f64>>> {
        self.check_set(set)?;
        let states = self.product_output_size(set) * self.input_size() as u128;
        if states > cap {
            return Err(Error::AlphabetOverflow { states, cap });
        }
        Ok((0..self.input_size())
            .map(|x| {
                set.members().fold(vec![1.0], |acc, k| {
                    let row = self.receiver(k).row(x);
                    let mut out = Vec::with_capacity(acc.len() * row.len());
                    for a in &acc {
                        for r in row {
                            out.push(a * r);
                        }
                    }
                    out
                })
            })
            .collect())
    }
}

/// Probability vector over the channel input alphabet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "Vec<f64>", try_from = "Vec<f64>")]
pub struct InputDistribution(Vec<f64>);

impl InputDistribution {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        info::check_distribution(&p, "input distribution")?;
        Ok(Self(p))
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<InputDistribution> for Vec<f64> {
    fn from(d: InputDistribution) -> Self {
        d.0
    }
}

impl TryFrom<Vec<f64>> for InputDistribution {
    type Error = Error;
    fn try_from(p: Vec<f64>) -> Result<Self> {
        InputDistribution::new(p)
    }
}

/// Joint law `P(u, x)` of an auxiliary variable and the channel input;
/// `rows[u][x]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointInput {
    rows: Vec<Vec<f64>>,
}

impl JointInput {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidParameter("ragged joint distribution".into()));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        info::check_distribution(&flat, "joint P(u,x)")?;
        Ok(Self { rows })
    }

    /// `U = X`.
    pub fn copy_of(px: &InputDistribution) -> Self {
        let n = px.len();
        let rows = (0..n)
            .map(|u| (0..n).map(|x| if u == x { px.probs()[x] } else { 0.0 }).collect())
            .collect();
        Self { rows }
    }

    /// `P(u) P(x|u)`.
    pub fn from_marginal_and_conditional(pu: &[f64], px_given_u: &[Vec<f64>]) -> Result<Self> {
        if pu.len() != px_given_u.len() {
            return Err(Error::DimensionMismatch { expected: pu.len(), found: px_given_u.len() });
        }
        let rows = pu
            .iter()
            .zip(px_given_u)
            .map(|(p, row)| row.iter().map(|c| p * c).collect())
            .collect();
        Self::new(rows)
    }

    pub fn aux_size(&self) -> usize {
        self.rows.len()
    }

    pub fn input_size(&self) -> usize {
        self.rows[0].len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn aux_marginal(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn input_marginal(&self) -> Vec<f64> {
        let mut px = vec![0.0; self.input_size()];
        for row in &self.rows {
            for (p, v) in px.iter_mut().zip(row) {
                *p += v;
            }
        }
        px
    }

    /// `P(x|u)`; rows with zero mass become uniform (they carry no weight).
    pub fn input_given_aux(&self) -> Vec<Vec<f64>> {
        let n = self.input_size();
        self.rows
            .iter()
            .map(|row| {
                let s: f64 = row.iter().sum();
                if s > 0.0 {
                    row.iter().map(|v| v / s).collect()
                } else {
                    vec![1.0 / n as f64; n]
                }
            })
            .collect()
    }
}

/// `I(X; Y_set)` in bits.
pub fn mutual_information_dmc(
    px: &InputDistribution,
    set: Subset,
    channel: &DmcBroadcast,
) -> Result<f64> {
    mutual_information_dmc_capped(px, set, channel, DEFAULT_STATE_CAP)
}

pub fn mutual_information_dmc_capped(
    px: &InputDistribution,
    set: Subset,
    channel: &DmcBroadcast,
    cap: u128,
) -> Result<f64> {
    if px.len() != channel.input_size() {
        return Err(Error::DimensionMismatch { expected: channel.input_size(), found: px.len() });
    }
    let table = channel.product_conditional(set, cap)?;
    Ok(info::mutual_information(px.probs(), &table))
}

/// `I(U; Y_set)` when `conditioned_on_u` is false, `I(X; Y_set | U)` otherwise.
/// The channel acts on `X` only, so `U → X → Y` holds by construction.
pub fn conditional_mi_dmc(
    joint: &JointInput,
    set: Subset,
    channel: &DmcBroadcast,
    conditioned_on_u: bool,
) -> Result<f64> {
    if joint.input_size() != channel.input_size() {
        return Err(Error::DimensionMismatch {
            expected: channel.input_size(),
            found: joint.input_size(),
        });
    }
    let table = channel.product_conditional(set, DEFAULT_STATE_CAP)?;
    Ok(mi_pair_from_table(joint, &table, conditioned_on_u))
}

/// Same as [`conditional_mi_dmc`] with a precomputed `P(y_set|x)` table.
pub(crate) fn mi_pair_from_table(joint: &JointInput, table: &[Vec<f64>], conditioned_on_u: bool) -> f64 {
    let pu = joint.aux_marginal();
    let y_given_u = info::compose(&joint.input_given_aux(), table);
    if conditioned_on_u {
        let px = joint.input_marginal();
        info::conditional_entropy(&pu, &y_given_u) - info::conditional_entropy(&px, table)
    } else {
        info::mutual_information(&pu, &y_given_u)
    }
}

/// Outcome of [`check_degraded_dmc`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegradednessResult {
    /// 1-based index of the stronger receiver `k`; the weaker one is `k-1`.
    pub receiver: usize,
    pub feasible: bool,
    /// `max |P_{k-1} - P_k Q|` at the recovered `Q`; the infeasibility
    /// certificate when `feasible` is false.
    pub max_residual: f64,
    /// Row-stochastic `Q` minimizing the max residual.
    pub degrading_channel: Vec<Vec<f64>>,
}

/// Decides whether `P_{Y_{k-1}|X} = P_{Y_k|X} · Q` for some row-stochastic `Q`
/// by minimizing the max-norm residual with a linear program.
pub fn check_degraded_dmc(channel: &DmcBroadcast, k: usize) -> Result<DegradednessResult> {
    if k < 2 || k > channel.receivers() {
        return Err(Error::InvalidParameter(format!(
            "degradedness check needs 2 <= k <= K = {}, got {k}",
            channel.receivers()
        )));
    }
    let strong = channel.receiver(k);
    let weak = channel.receiver(k - 1);
    let a = strong.output_size();
    let b = weak.output_size();

    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let q: Vec<Vec<_>> = (0..a)
        .map(|_| (0..b).map(|_| lp.add_var(0.0, (0.0, 1.0))).collect())
        .collect();
    let t = lp.add_var(1.0, (0.0, f64::INFINITY));
    for row in &q {
        let mut e = LinearExpr::empty();
        for v in row {
            e.add(*v, 1.0);
        }
        lp.add_constraint(e, ComparisonOp::Eq, 1.0);
    }
    for x in 0..channel.input_size() {
        for yw in 0..b {
            let mut upper = LinearExpr::empty();
            let mut lower = LinearExpr::empty();
            for (ys, qrow) in q.iter().enumerate() {
                let c = strong.get(x, ys);
                if c != 0.0 {
                    upper.add(qrow[yw], c);
                    lower.add(qrow[yw], c);
                }
            }
            upper.add(t, -1.0);
            lower.add(t, 1.0);
            lp.add_constraint(upper, ComparisonOp::Le, weak.get(x, yw));
            lp.add_constraint(lower, ComparisonOp::Ge, weak.get(x, yw));
        }
    }
    let solution = lp
        .solve()
        .map_err(|e| Error::InvalidParameter(format!("degradedness LP failed: {e:?}")))?
        .into_solution()
        .map_err(|_| Error::InvalidParameter("degradedness LP interrupted".into()))?;

    // Clean tiny negatives and renormalize before measuring the residual.
    let degrading: Vec<Vec<f64>> = q
        .iter()
        .map(|row| {
            let vals: Vec<f64> = row.iter().map(|v| solution.var_value(*v).max(0.0)).collect();
            let s: f64 = vals.iter().sum();
            vals.into_iter().map(|v| v / s).collect()
        })
        .collect();
    let product = info::compose(strong.rows(), &degrading);
    let max_residual = product
        .iter()
        .zip(weak.rows())
        .flat_map(|(p, w)| p.iter().zip(w).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max);
    Ok(DegradednessResult {
        receiver: k,
        feasible: max_residual <= DEGRADED_TOL,
        max_residual,
        degrading_channel: degrading,
    })
}

/// Checks `X → Y_K → … → Y_1` link by link, failing on the first violation.
pub fn require_degraded_chain(channel: &DmcBroadcast) -> Result<Vec<DegradednessResult>> {
    let mut out = Vec::new();
    for k in 2..=channel.receivers() {
        let r = check_degraded_dmc(channel, k)?;
        if !r.feasible {
            return Err(Error::NotDegraded { index: k, residual: r.max_residual });
        }
        out.push(r);
    }
    Ok(out)
}
