//! JSON input formats shared by the command-line tool.
//!
//! Matrices are written row-major as flat arrays; transition matrices as
//! lists of rows. Participants and receivers are 1-based.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::access_structure::{AccessStructure, Subset};
use crate::binning_simulator::LayerRates;
use crate::channel_models::{DmcBroadcast, GaussianMimoBroadcast, GaussianSisoBroadcast, TransitionMatrix};
use crate::error::{Error, Result};
use crate::layered_region::{CovarianceChain, LayeredDistribution};
use crate::linalg;
use crate::miso_reduction::{MisoSharingInstance, DEFAULT_SIGMA_TILDE};

/// `{"K": 4, "qualified": [[1,2,3]], "forbidden": "complement"}`; `forbidden`
/// may also be an explicit list of sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureFile {
    #[serde(rename = "K")]
    pub participants: usize,
    pub qualified: Vec<Vec<usize>>,
    pub forbidden: ForbiddenSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ForbiddenSpec {
    Keyword(String),
    Sets(Vec<Vec<usize>>),
}

fn subsets(sets: &[Vec<usize>]) -> Result<Vec<Subset>> {
    sets.iter().map(|s| Subset::from_members(s)).collect()
}

impl StructureFile {
    pub fn to_structure(&self) -> Result<AccessStructure> {
        let qualified = subsets(&self.qualified)?;
        match &self.forbidden {
            ForbiddenSpec::Keyword(k) if k == "complement" => {
                AccessStructure::with_complement(self.participants, qualified)
            }
            ForbiddenSpec::Keyword(k) => Err(Error::InvalidParameter(format!(
                "unknown forbidden keyword {k:?} (expected \"complement\" or a list of sets)"
            ))),
            ForbiddenSpec::Sets(sets) => AccessStructure::new(self.participants, qualified, subsets(sets)?),
        }
    }
}

/// Channel description, tagged by `"type"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum ChannelFile {
    /// One transition matrix (list of rows) per receiver.
    Dmc { transitions: Vec<Vec<Vec<f64>>> },
    Siso {
        #[serde(rename = "N")]
        noise: Vec<f64>,
        #[serde(rename = "P")]
        power: f64,
    },
    Mimo {
        #[serde(rename = "Sigma")]
        noise: Vec<Vec<f64>>,
        #[serde(rename = "S")]
        cap: Vec<f64>,
    },
}

impl ChannelFile {
    pub fn kind(&self) -> &'static str {
        match self {
            ChannelFile::Dmc { .. } => "dmc",
            ChannelFile::Siso { .. } => "siso",
            ChannelFile::Mimo { .. } => "mimo",
        }
    }

    fn wrong(&self, wanted: &str) -> Error {
        Error::InvalidParameter(format!("expected a {wanted} channel, found {}", self.kind()))
    }

    pub fn to_dmc(&self) -> Result<DmcBroadcast> {
        match self {
            ChannelFile::Dmc { transitions } => DmcBroadcast::from_rows(transitions.clone()),
            _ => Err(self.wrong("dmc")),
        }
    }

    pub fn to_siso(&self) -> Result<GaussianSisoBroadcast> {
        match self {
            ChannelFile::Siso { noise, power } => GaussianSisoBroadcast::new(noise.clone(), *power),
            _ => Err(self.wrong("siso")),
        }
    }

    /// Raw `(P, N)` without the strict ordering requirement.
    pub fn siso_parameters(&self) -> Result<(f64, Vec<f64>)> {
        match self {
            ChannelFile::Siso { noise, power } => Ok((*power, noise.clone())),
            _ => Err(self.wrong("siso")),
        }
    }

    pub fn to_mimo(&self) -> Result<GaussianMimoBroadcast> {
        match self {
            ChannelFile::Mimo { noise, cap } => {
                let sigmas = noise
                    .iter()
                    .map(|m| linalg::from_row_major(m))
                    .collect::<Result<Vec<_>>>()?;
                GaussianMimoBroadcast::new(sigmas, linalg::from_row_major(cap)?)
            }
            _ => Err(self.wrong("mimo")),
        }
    }
}

/// `{"H": [...], "Sigma": [...], "sigma_tilde": [...], "S": [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MisoFile {
    #[serde(rename = "H")]
    pub channel: Vec<f64>,
    #[serde(rename = "Sigma")]
    pub noise: Vec<f64>,
    /// `σ̃²_k` for `k = 2..K`; defaults to 1.
    #[serde(default)]
    pub sigma_tilde: Option<Vec<f64>>,
    #[serde(rename = "S")]
    pub cap: Vec<f64>,
}

impl MisoFile {
    pub fn to_instance(&self) -> Result<MisoSharingInstance> {
        let h = linalg::from_row_major(&self.channel)?;
        let k = h.nrows();
        let sigma_tilde = self.sigma_tilde.clone().unwrap_or_else(|| vec![DEFAULT_SIGMA_TILDE; k - 1]);
        MisoSharingInstance::new(
            h,
            linalg::from_row_major(&self.noise)?,
            sigma_tilde,
            linalg::from_row_major(&self.cap)?,
        )
    }
}

/// `{"layers": [S_1, …, S_{K-1}]}`, each row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainFile {
    pub layers: Vec<Vec<f64>>,
}

impl ChainFile {
    pub fn to_chain(&self) -> Result<CovarianceChain> {
        Ok(CovarianceChain::new(
            self.layers
                .iter()
                .map(|m| linalg::from_row_major(m))
                .collect::<Result<Vec<DMatrix<f64>>>>()?,
        ))
    }
}

/// Layer distributions: `P(U_1)` and `P(U_k|U_{k-1})` for `k = 2..K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayersFile {
    pub first: Vec<f64>,
    #[serde(default)]
    pub conditionals: Vec<Vec<Vec<f64>>>,
}

impl LayersFile {
    pub fn to_distribution(&self) -> Result<LayeredDistribution> {
        let conditionals = self
            .conditionals
            .iter()
            .map(|rows| TransitionMatrix::new(rows.clone()))
            .collect::<Result<Vec<_>>>()?;
        LayeredDistribution::new(self.first.clone(), conditionals)
    }
}

/// Simulation config: a DMC broadcast channel, layer distributions and rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationFile {
    pub channel: ChannelFile,
    pub layers: LayersFile,
    pub rates: LayerRates,
}

impl SimulationFile {
    pub fn parts(&self) -> Result<(DmcBroadcast, LayeredDistribution, LayerRates)> {
        let rates = LayerRates::new(self.rates.message.clone(), self.rates.total.clone())?;
        Ok((self.channel.to_dmc()?, self.layers.to_distribution()?, rates))
    }
}
