use serde::{Deserialize, Serialize};

use crate::cavi::{cavi_fit, FitConfig, FitSummary};
use crate::data::{PriorConfig, RegressionData};
use crate::error::Result;
use crate::variants::{gauss_batchwise_fit, gauss_componentwise_fit, qmf_fit};

/// Fitting algorithm selector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    /// Laplace slabs, mean-field family (the main method).
    Laplace,
    /// Laplace slabs, hard-support family.
    Qmf,
    Gauss { slab_sd: f64 },
    GaussBatch,
}

impl Engine {
    pub fn name(&self) -> &'static str {
        match self {
            Engine::Laplace => "laplace",
            Engine::Qmf => "qmf",
            Engine::Gauss { .. } => "gauss",
            Engine::GaussBatch => "gauss-batch",
        }
    }

    /// Prior the engine fits under; `lambda` is ignored by the Gaussian engines.
    pub fn prior(&self, lambda: f64, a0: f64, b0: f64) -> PriorConfig {
        match *self {
            Engine::Laplace | Engine::Qmf => PriorConfig::laplace(lambda, a0, b0),
            Engine::Gauss { slab_sd } => PriorConfig::gaussian(slab_sd, a0, b0),
            Engine::GaussBatch => PriorConfig::gaussian(1.0, a0, b0),
        }
    }

    pub fn fit(&self, data: &RegressionData, prior: &PriorConfig, config: &FitConfig) -> Result<FitSummary> {
        match self {
            Engine::Laplace => cavi_fit(data, prior, config),
            Engine::Qmf => qmf_fit(data, prior, config),
            Engine::Gauss { .. } => gauss_componentwise_fit(data, prior, config),
            Engine::GaussBatch => gauss_batchwise_fit(data, prior, config),
        }
    }
}
