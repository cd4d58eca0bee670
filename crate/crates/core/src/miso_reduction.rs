//! Multi-secret sharing over a MISO broadcast channel.
//!
//! Participant `k` observes `h_kᵀX + Z_k`. Virtual receiver `k` pools the
//! outputs of participants `1..k` together with lifted noisy copies of the
//! remaining ones, giving noise covariance `Σ_V(k)`. Whitening by `H⁻¹`
//! yields a degraded MIMO chain `Σ'_V(1) ⪰ … ⪰ Σ'_V(K)`, and the rate region
//! is the `t → ∞` limit of the MIMO region at these covariances.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::layered_region::{rates_from_terms, CovarianceChain, LayerTerms, RateTuple};
use crate::linalg;

/// Largest accepted condition number of `H`.
pub const MAX_CONDITION: f64 = 1e12;
/// Initial lift parameter.
pub const T0: f64 = 10.0;
pub const MAX_DOUBLINGS: usize = 40;
pub const CONVERGENCE_TOL: f64 = 1e-6;
/// Default virtual noise variance.
pub const DEFAULT_SIGMA_TILDE: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct MisoSharingInstance {
    h: DMatrix<f64>,
    h_inv: DMatrix<f64>,
    sigma: DMatrix<f64>,
    /// `σ̃²_k` for `k = 2..K`.
    sigma_tilde: Vec<f64>,
    cap: DMatrix<f64>,
    condition: f64,
}

impl MisoSharingInstance {
    pub fn new(
        h: DMatrix<f64>,
        sigma: DMatrix<f64>,
        sigma_tilde: Vec<f64>,
        cap: DMatrix<f64>,
    ) -> Result<Self> {
        let k = h.nrows();
        if k == 0 {
            return Err(Error::InvalidParameter("channel matrix is empty".into()));
        }
        linalg::check_square(&h, k)?;
        linalg::check_square(&sigma, k)?;
        linalg::check_square(&cap, k)?;
        if sigma_tilde.len() != k - 1 {
            return Err(Error::DimensionMismatch { expected: k - 1, found: sigma_tilde.len() });
        }
        if let Some(v) = sigma_tilde.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("virtual noise variance {v} must be positive")));
        }
        if linalg::asymmetry(&sigma) > 1e-9 * sigma.amax().max(1.0) {
            return Err(Error::InvalidParameter("noise covariance is not symmetric".into()));
        }
        let sig_min = linalg::min_eigenvalue(&sigma);
        if sig_min < -1e-12 {
            return Err(Error::NotPositiveDefinite(format!(
                "noise covariance has eigenvalue {sig_min:.3e}"
            )));
        }
        if linalg::asymmetry(&cap) > 1e-9 * cap.amax().max(1.0) {
            return Err(Error::InvalidParameter("input covariance cap is not symmetric".into()));
        }
        let cap_min = linalg::min_eigenvalue(&cap);
        if !(cap_min > 0.0) {
            return Err(Error::NotPositiveDefinite(format!(
                "input covariance cap has eigenvalue {cap_min:.3e}"
            )));
        }
        let condition = linalg::condition_number(&h);
        if !(condition <= MAX_CONDITION) {
            return Err(Error::Singular(condition));
        }
        let h_inv = h.clone().try_inverse().ok_or(Error::Singular(condition))?;
        Ok(Self { h, h_inv, sigma, sigma_tilde, cap, condition })
    }

    /// Uses the default `σ̃²_k = 1` for every virtual receiver.
    pub fn with_default_virtual_noise(h: DMatrix<f64>, sigma: DMatrix<f64>, cap: DMatrix<f64>) -> Result<Self> {
        let k = h.nrows();
        Self::new(h, sigma, vec![DEFAULT_SIGMA_TILDE; k.saturating_sub(1)], cap)
    }

    pub fn participants(&self) -> usize {
        self.h.nrows()
    }

    pub fn channel(&self) -> &DMatrix<f64> {
        &self.h
    }

    pub fn noise(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn sigma_tilde(&self) -> &[f64] {
        &self.sigma_tilde
    }

    pub fn cap(&self) -> &DMatrix<f64> {
        &self.cap
    }

    pub fn condition_number(&self) -> f64 {
        self.condition
    }

    /// Same instance with every `σ̃²_k` replaced by `value`.
    pub fn with_uniform_sigma_tilde(&self, value: f64) -> Result<Self> {
        Self::new(
            self.h.clone(),
            self.sigma.clone(),
            vec![value; self.sigma_tilde.len()],
            self.cap.clone(),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VirtualCovariances {
    pub t: f64,
    /// `Σ_V(k)`, `k = 1..K`.
    pub virtual_noise: Vec<DMatrix<f64>>,
    /// `Σ'_V(k) = H⁻¹ Σ_V(k) H⁻ᵀ`.
    pub whitened: Vec<DMatrix<f64>>,
}

/// `Σ_V(k)`: `Σ` with `t²σ̃²_j` added at diagonal entries `j = k+1..K`.
pub fn build_virtual(instance: &MisoSharingInstance, t: f64) -> Result<VirtualCovariances> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::InvalidParameter(format!("lift parameter {t} must be positive")));
    }
    let k = instance.participants();
    let t2 = t * t;
    let h_inv_t = instance.h_inv.transpose();
    let mut virtual_noise = Vec::with_capacity(k);
    let mut whitened = Vec::with_capacity(k);
    for layer in 1..=k {
        let mut m = instance.sigma.clone();
        for j in layer + 1..=k {
            m[(j - 1, j - 1)] += t2 * instance.sigma_tilde[j - 2];
        }
        let w = linalg::symmetrize(&(&instance.h_inv * &m * &h_inv_t));
        virtual_noise.push(m);
        whitened.push(w);
    }
    Ok(VirtualCovariances { t, virtual_noise, whitened })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairCheck {
    /// Pair `(index, index + 1)`, 1-based.
    pub index: usize,
    pub min_eigenvalue: f64,
    /// Tolerance actually applied: the requested one, raised to the
    /// eigenvalue resolution `ROUNDING_FACTOR·ε·‖Σ'_V(index)‖` when larger.
    pub effective_tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderingReport {
    pub tolerance: f64,
    pub pairs: Vec<PairCheck>,
}

impl OrderingReport {
    pub fn all_passed(&self) -> bool {
        self.pairs.iter().all(|p| p.passed)
    }

    pub fn first_failure(&self) -> Option<&PairCheck> {
        self.pairs.iter().find(|p| !p.passed)
    }
}

/// Multiple of machine epsilon (relative to the matrix norm) below which
/// computed eigenvalues carry no information.
pub const ROUNDING_FACTOR: f64 = 64.0;

/// Checks `Σ'_V(k) ⪰ Σ'_V(k+1)` for every adjacent pair.
pub fn check_ordering(vc: &VirtualCovariances, tol: f64) -> OrderingReport {
    let pairs = vc
        .whitened
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            let min_eigenvalue = linalg::min_eigenvalue(&(&w[0] - &w[1]));
            let norm = linalg::sym_eigenvalues(&w[0]).iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let effective_tolerance = tol.max(ROUNDING_FACTOR * f64::EPSILON * norm);
            PairCheck { index: i + 1, min_eigenvalue, effective_tolerance, passed: min_eigenvalue >= -effective_tolerance }
        })
        .collect();
    OrderingReport { tolerance: tol, pairs }
}

/// `log2 |M + diag(0_k, t²σ̃²_{k+1..K})|` minus `Σ_j log2(t²σ̃²_j)`.
///
/// The lifted block is factored out as `D^{1/2}(I + D^{-1/2} M_BB D^{-1/2})D^{1/2}`
/// and the leading block enters through its Schur complement, so no matrix
/// with `t²`-sized entries is ever decomposed.
fn lifted_log2_det(instance: &MisoSharingInstance, m: &DMatrix<f64>, layer: usize, t: f64) -> Result<f64> {
    let k = instance.participants();
    let lifted = k - layer;
    if lifted == 0 {
        return linalg::log2_det_spd(m);
    }
    let scale: Vec<f64> = (layer + 1..=k)
        .map(|j| 1.0 / (t * instance.sigma_tilde[j - 2].sqrt()))
        .collect();
    let mut inner = m.view((layer, layer), (lifted, lifted)).into_owned();
    for i in 0..lifted {
        for j in 0..lifted {
            inner[(i, j)] *= scale[i] * scale[j];
        }
        inner[(i, i)] += 1.0;
    }
    let inner = linalg::symmetrize(&inner);
    let mut log_det = linalg::log2_det_spd(&inner)?;
    if layer > 0 {
        let mut cross = m.view((0, layer), (layer, lifted)).into_owned();
        for j in 0..lifted {
            cross.column_mut(j).scale_mut(scale[j]);
        }
        let solved = inner
            .clone()
            .cholesky()
            .ok_or_else(|| Error::NotPositiveDefinite("lifted block".into()))?
            .solve(&cross.transpose());
        let schur = m.view((0, 0), (layer, layer)) - &cross * solved;
        log_det += linalg::log2_det_spd(&linalg::symmetrize(&schur))?;
    }
    Ok(log_det)
}

/// Rates of the MIMO region at the whitened virtual covariances for one `t`.
///
/// Each log-det ratio `|Σ'_V(k) + A| / |Σ'_V(k) + B|` equals
/// `|Σ_V(k) + HAHᵀ| / |Σ_V(k) + HBHᵀ|`; the `t²` factors of the lifted
/// entries cancel between numerator and denominator.
pub fn rates_at(instance: &MisoSharingInstance, chain: &CovarianceChain, t: f64) -> Result<RateTuple> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::InvalidParameter(format!("lift parameter {t} must be positive")));
    }
    let k = instance.participants();
    let h_t = instance.h.transpose();
    let shifted: Vec<DMatrix<f64>> = chain
        .with_ends(&instance.cap)
        .iter()
        .map(|s| linalg::symmetrize(&(&instance.sigma + &instance.h * s * &h_t)))
        .collect();
    let ratio = |layer: usize, j: usize| -> Result<f64> {
        Ok(0.5 * (lifted_log2_det(instance, &shifted[j - 1], layer, t)?
            - lifted_log2_det(instance, &shifted[j], layer, t)?))
    };
    let terms = (1..=k)
        .map(|layer| {
            Ok(LayerTerms {
                decode: ratio(layer, layer)?,
                leak: if layer == 1 { 0.0 } else { ratio(layer - 1, layer)? },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(rates_from_terms(&terms))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TracePoint {
    pub t: f64,
    pub raw: Vec<f64>,
    /// Max-norm change from the previous point.
    pub step: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitResult {
    pub rates: RateTuple,
    pub converged: bool,
    pub trace: Vec<TracePoint>,
}

/// Evaluates the rates at `t = T0·2^i` until successive raw tuples agree
/// within [`CONVERGENCE_TOL`] or [`MAX_DOUBLINGS`] doublings pass. A
/// non-converged result still carries the last tuple and the full trace.
pub fn limit_rate_tuple(instance: &MisoSharingInstance, chain: &CovarianceChain) -> Result<LimitResult> {
    let k = instance.participants();
    chain.check(&instance.cap, k)?;
    let mut t = T0;
    let mut current = rates_at(instance, chain, t)?;
    let mut trace = vec![TracePoint { t, raw: current.raw.clone(), step: None }];
    if k == 1 {
        return Ok(LimitResult { rates: current, converged: true, trace });
    }
    for _ in 0..MAX_DOUBLINGS {
        t *= 2.0;
        let next = rates_at(instance, chain, t)?;
        let step = current
            .raw
            .iter()
            .zip(&next.raw)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        trace.push(TracePoint { t, raw: next.raw.clone(), step: Some(step) });
        current = next;
        if step < CONVERGENCE_TOL {
            return Ok(LimitResult { rates: current, converged: true, trace });
        }
    }
    Ok(LimitResult { rates: current, converged: false, trace })
}

/// Largest max-norm deviation of the limit across uniform `σ̃² ∈ {0.5, 1, 2}`.
pub fn sigma_tilde_sensitivity(instance: &MisoSharingInstance, chain: &CovarianceChain) -> Result<f64> {
    let mut tuples = Vec::new();
    for v in [0.5, 1.0, 2.0] {
        tuples.push(limit_rate_tuple(&instance.with_uniform_sigma_tilde(v)?, chain)?.rates);
    }
    let mut worst: f64 = 0.0;
    for a in &tuples {
        for b in &tuples {
            worst = worst.max(a.max_abs_diff(b));
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(v))
    }

    #[test]
    fn identity_example() {
        let inst = MisoSharingInstance::new(diag(&[1.0, 1.0]), diag(&[1.0, 1.0]), vec![1.0], diag(&[2.0, 2.0])).unwrap();
        let vc = build_virtual(&inst, 2.0).unwrap();
        assert_eq!(vc.whitened[0], diag(&[1.0, 5.0]));
        assert_eq!(vc.whitened[1], diag(&[1.0, 1.0]));
        assert!(check_ordering(&vc, 1e-8).all_passed());
    }

    #[test]
    fn swapped_chain_fails_first_pair() {
        let inst = MisoSharingInstance::new(diag(&[1.0, 1.0]), diag(&[1.0, 1.0]), vec![1.0], diag(&[2.0, 2.0])).unwrap();
        let mut vc = build_virtual(&inst, 2.0).unwrap();
        vc.whitened.swap(0, 1);
        let rep = check_ordering(&vc, 1e-8);
        assert_eq!(rep.first_failure().unwrap().index, 1);
    }

    #[test]
    fn singular_channel_rejected() {
        let h = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        let r = MisoSharingInstance::new(h, diag(&[1.0, 1.0]), vec![1.0], diag(&[1.0, 1.0]));
        assert!(matches!(r, Err(Error::Singular(_))));
    }

    #[test]
    fn single_participant_is_exact() {
        let inst = MisoSharingInstance::new(diag(&[2.0]), diag(&[1.0]), vec![], diag(&[4.0])).unwrap();
        let res = limit_rate_tuple(&inst, &CovarianceChain::new(vec![])).unwrap();
        assert!(res.converged);
        assert_eq!(res.trace.len(), 1);
        // Σ' = 1/4, S = 4
        assert!((res.rates.rates[0] - 0.5 * 17f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn diagonal_limit_matches_hand_elimination() {
        let inst = MisoSharingInstance::new(diag(&[1.0, 1.0]), diag(&[1.0, 1.0]), vec![1.0], diag(&[2.0, 2.0])).unwrap();
        let res = limit_rate_tuple(&inst, &CovarianceChain::new(vec![diag(&[1.0, 1.0])])).unwrap();
        assert!(res.converged);
        assert!((res.rates.rates[0] - 0.5 * 1.5f64.log2()).abs() < 1e-6);
        assert!((res.rates.rates[1] - 0.5).abs() < 1e-6);
        let last = res.trace.last().unwrap();
        assert!(last.step.unwrap() < CONVERGENCE_TOL);
    }

    #[test]
    fn lifted_rates_match_whitened_evaluation() {
        let h = DMatrix::from_row_slice(3, 3, &[1.0, 0.3, -0.2, 0.1, 0.8, 0.4, -0.5, 0.2, 1.1]);
        let sigma = DMatrix::from_row_slice(3, 3, &[1.0, 0.2, 0.0, 0.2, 0.7, 0.1, 0.0, 0.1, 0.5]);
        let cap = diag(&[2.0, 1.5, 1.0]);
        let inst = MisoSharingInstance::new(h, sigma, vec![0.7, 1.3], cap.clone()).unwrap();
        let chain = CovarianceChain::scaled(&cap, &[0.6, 0.2]);
        for t in [0.5, 1.0, 3.0] {
            let vc = build_virtual(&inst, t).unwrap();
            let terms = crate::layered_region::gaussian_layer_terms(&vc.whitened, &chain.with_ends(&cap)).unwrap();
            let direct = rates_from_terms(&terms);
            assert!(rates_at(&inst, &chain, t).unwrap().max_abs_diff(&direct) < 1e-12);
        }
    }

    #[test]
    fn sensitivity_is_small() {
        let h = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, -0.2, 0.8]);
        let inst = MisoSharingInstance::with_default_virtual_noise(h, diag(&[1.0, 0.5]), diag(&[2.0, 1.0])).unwrap();
        let chain = CovarianceChain::new(vec![diag(&[1.0, 0.5])]);
        assert!(sigma_tilde_sensitivity(&inst, &chain).unwrap() < 1e-5);
    }
}
