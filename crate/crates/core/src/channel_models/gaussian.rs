//! Degraded Gaussian broadcast channels (scalar and MIMO).

use nalgebra::DMatrix;

use crate::access_structure::Subset;
use crate::error::{Error, Result};
use crate::linalg;

/// Eigenvalue tolerance for covariance orderings.
pub const ORDER_TOL: f64 = 1e-9;

/// `Y_k = X + Z_k`, `Z_k ~ N(0, N_k)`, average power `P`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSisoBroadcast {
    noise_variances: Vec<f64>,
    power: f64,
}

impl GaussianSisoBroadcast {
    /// Requires `N_1 > N_2 > … > N_K > 0` and a finite `P >= 0`.
    pub fn new(noise_variances: Vec<f64>, power: f64) -> Result<Self> {
        check_power_and_noise(power, &noise_variances)?;
        for (i, w) in noise_variances.windows(2).enumerate() {
            if !(w[0] > w[1]) {
                return Err(Error::NotDegraded { index: i + 2, residual: w[1] - w[0] });
            }
        }
        Ok(Self { noise_variances, power })
    }

    pub fn noise_variances(&self) -> &[f64] {
        &self.noise_variances
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn receivers(&self) -> usize {
        self.noise_variances.len()
    }
}

pub(crate) fn check_power_and_noise(power: f64, noise: &[f64]) -> Result<()> {
    if !(power >= 0.0) || !power.is_finite() {
        return Err(Error::InvalidParameter(format!("power {power} must be finite and >= 0")));
    }
    if noise.is_empty() {
        return Err(Error::InvalidParameter("at least one receiver is required".into()));
    }
    if let Some(n) = noise.iter().find(|n| !(**n > 0.0) || !n.is_finite()) {
        return Err(Error::InvalidParameter(format!("noise variance {n} must be positive")));
    }
    Ok(())
}

/// `Y_k = X + Z_k` with `Z_k ~ N(0, Σ_k)`, `Σ_1 ⪰ … ⪰ Σ_K ≻ 0`, `E[XXᵀ] ⪯ S`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMimoBroadcast {
    noise_covariances: Vec<DMatrix<f64>>,
    input_cap: DMatrix<f64>,
}

impl GaussianMimoBroadcast {
    pub fn new(noise_covariances: Vec<DMatrix<f64>>, input_cap: DMatrix<f64>) -> Result<Self> {
        let r = input_cap.nrows();
        linalg::check_square(&input_cap, r)?;
        if noise_covariances.is_empty() {
            return Err(Error::InvalidParameter("at least one receiver is required".into()));
        }
        check_symmetric(&input_cap, "input covariance cap")?;
        let s_min = linalg::min_eigenvalue(&input_cap);
        if !(s_min > 0.0) {
            return Err(Error::NotPositiveDefinite(format!(
                "input covariance cap has eigenvalue {s_min:.3e}"
            )));
        }
        for (k, sigma) in noise_covariances.iter().enumerate() {
            linalg::check_square(sigma, r)?;
            check_symmetric(sigma, &format!("noise covariance {}", k + 1))?;
        }
        let last = noise_covariances.last().expect("nonempty");
        let min_last = linalg::min_eigenvalue(last);
        if !(min_last > 0.0) {
            return Err(Error::NotPositiveDefinite(format!(
                "noise covariance {} has eigenvalue {min_last:.3e}",
                noise_covariances.len()
            )));
        }
        for (i, w) in noise_covariances.windows(2).enumerate() {
            let m = linalg::min_eigenvalue_of_difference(&w[0], &w[1])?;
            if m < -ORDER_TOL {
                return Err(Error::OrderingViolation { index: i + 1, min_eigenvalue: m });
            }
        }
        Ok(Self { noise_covariances, input_cap })
    }

    pub fn dimension(&self) -> usize {
        self.input_cap.nrows()
    }

    pub fn receivers(&self) -> usize {
        self.noise_covariances.len()
    }

    pub fn noise_covariances(&self) -> &[DMatrix<f64>] {
        &self.noise_covariances
    }

    pub fn input_cap(&self) -> &DMatrix<f64> {
        &self.input_cap
    }
}

fn check_symmetric(m: &DMatrix<f64>, what: &str) -> Result<()> {
    let scale = m.amax().max(1.0);
    if linalg::asymmetry(m) > 1e-9 * scale {
        return Err(Error::InvalidParameter(format!("{what} is not symmetric")));
    }
    Ok(())
}

/// `½ log2(1 + Σ_{l∈group} P/N_l)`: SIMO mutual information of a pooled group
/// under Gaussian input of power `P`. `noise_variances` is 0-indexed by
/// receiver; `group` uses 1-based members.
pub fn gaussian_group_mi(power: f64, noise_variances: &[f64], group: Subset) -> f64 {
    let snr: f64 = group.indices().map(|l| power / noise_variances[l]).sum();
    0.5 * (1.0 + snr).log2()
}

pub use crate::linalg::psd_order_check;
