//! Channel families: discrete memoryless broadcast channels and degraded
//! Gaussian broadcast channels (scalar and MIMO), with the exact information
//! quantities every bound is built from.

mod dmc;
mod gaussian;

pub use dmc::{
    check_degraded_dmc, conditional_mi_dmc, mutual_information_dmc, mutual_information_dmc_capped,
    require_degraded_chain, DegradednessResult, DmcBroadcast, InputDistribution, JointInput,
    TransitionMatrix, DEFAULT_STATE_CAP, DEGRADED_TOL, STOCHASTIC_TOL,
};
pub(crate) use dmc::mi_pair_from_table;
pub(crate) use gaussian::check_power_and_noise;
pub use gaussian::{
    gaussian_group_mi, psd_order_check, GaussianMimoBroadcast, GaussianSisoBroadcast, ORDER_TOL,
};
