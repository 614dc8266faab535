//! Noise-level estimation and rescaling to the unit-noise model.

use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use crate::data::{ridge_init, RegressionData};
use crate::error::{Result, VbError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMethod {
    /// The noise sd is known.
    Known(f64),
    /// Residual variance of the unit-penalty ridge fit, corrected by its
    /// effective degrees of freedom.
    RidgeDf,
    /// An estimate computed elsewhere.
    Plugin(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseEstimate {
    pub sigma_hat: f64,
    pub method: NoiseMethod,
    /// Effective degrees of freedom of the fit behind the estimate (0 for passthrough).
    pub df: f64,
}

/// `tr(X (X^T X + I)^{-1} X^T) = sum_k d_k / (d_k + 1)` over the eigenvalues of
/// `X^T X`, taken from whichever of `X^T X`, `X X^T` is smaller.
pub fn ridge_degrees_of_freedom(data: &RegressionData) -> f64 {
    let k = if data.p() <= data.n() {
        data.gram().clone()
    } else {
        let mut k = data.x() * data.x().transpose();
        k = (&k + k.transpose()) * 0.5;
        k
    };
    SymmetricEigen::new(k)
        .eigenvalues
        .iter()
        .map(|&d| {
            let d = d.max(0.0);
            d / (d + 1.0)
        })
        .sum()
}

pub fn estimate_noise_sd(data: &RegressionData, method: NoiseMethod) -> Result<NoiseEstimate> {
    match method {
        NoiseMethod::Known(v) | NoiseMethod::Plugin(v) => {
            if !(v.is_finite() && v > 0.0) {
                return Err(VbError::InvalidParameter(format!("noise sd {v} must be positive")));
            }
            Ok(NoiseEstimate { sigma_hat: v, method, df: 0.0 })
        }
        NoiseMethod::RidgeDf => {
            let n = data.n();
            if n < 2 {
                return Err(VbError::InvalidParameter("noise estimation needs at least two rows".into()));
            }
            let mu = ridge_init(data)?;
            let resid = data.y() - data.x() * mu;
            let df = ridge_degrees_of_freedom(data);
            let dof = n as f64 - df;
            let rss = resid.norm_squared();
            if !(dof > 1e-12) || !(rss > 0.0) {
                return Err(VbError::SaturatedFit { df, n });
            }
            Ok(NoiseEstimate {
                sigma_hat: (rss / dof).sqrt(),
                method,
                df,
            })
        }
    }
}

/// Divide design and response by the estimated noise sd.
pub fn rescale(data: &RegressionData, est: &NoiseEstimate) -> Result<RegressionData> {
    if !(est.sigma_hat.is_finite() && est.sigma_hat > 0.0) {
        return Err(VbError::InvalidParameter(format!(
            "sigma_hat = {} must be positive",
            est.sigma_hat
        )));
    }
    Ok(data.scaled(est.sigma_hat))
}
