use serde::{Deserialize, Serialize};

use crate::error::{Result, VbError};

/// Per-replicate estimation and selection quality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub l2: f64,
    pub fdr: f64,
    pub tpr: f64,
}

/// Coordinate `i` is selected when `gamma[i] > 0.5`; the true support is the
/// set of non-zero entries of `theta0`.
pub fn metrics(estimate: &[f64], gamma: &[f64], theta0: &[f64]) -> Result<Metrics> {
    let p = theta0.len();
    if estimate.len() != p || gamma.len() != p {
        return Err(VbError::DimensionMismatch(format!(
            "estimate {}, gamma {}, theta0 {}",
            estimate.len(),
            gamma.len(),
            p
        )));
    }
    let l2 = estimate
        .iter()
        .zip(theta0)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let (mut selected, mut true_pos, mut support) = (0usize, 0usize, 0usize);
    for (g, t) in gamma.iter().zip(theta0) {
        let sel = *g > 0.5;
        let truth = *t != 0.0;
        selected += sel as usize;
        support += truth as usize;
        true_pos += (sel && truth) as usize;
    }
    Ok(Metrics {
        l2,
        fdr: (selected - true_pos) as f64 / selected.max(1) as f64,
        tpr: true_pos as f64 / support.max(1) as f64,
    })
}

/// Mean and sample standard deviation (`n - 1` divisor, 0 for one value).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub sd: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Summary { mean: f64::NAN, sd: f64::NAN };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let sd = if n > 1 {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Summary { mean, sd }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub l2_mean: f64,
    pub l2_sd: f64,
    pub fdr_mean: f64,
    pub fdr_sd: f64,
    pub tpr_mean: f64,
    pub tpr_sd: f64,
    pub runtime_mean_s: f64,
    pub runtime_sd_s: f64,
    pub replicates_completed: usize,
}

impl MetricsReport {
    pub fn aggregate(per_replicate: &[Metrics], runtimes: &[f64]) -> Self {
        let col = |f: fn(&Metrics) -> f64| Summary::of(&per_replicate.iter().map(f).collect::<Vec<_>>());
        let (l2, fdr, tpr) = (col(|m| m.l2), col(|m| m.fdr), col(|m| m.tpr));
        let rt = Summary::of(runtimes);
        MetricsReport {
            l2_mean: l2.mean,
            l2_sd: l2.sd,
            fdr_mean: fdr.mean,
            fdr_sd: fdr.sd,
            tpr_mean: tpr.mean,
            tpr_sd: tpr.sd,
            runtime_mean_s: rt.mean,
            runtime_sd_s: rt.sd,
            replicates_completed: per_replicate.len(),
        }
    }

    /// The report with timing fields zeroed, for comparisons across runs.
    pub fn without_runtime(&self) -> Self {
        MetricsReport {
            runtime_mean_s: 0.0,
            runtime_sd_s: 0.0,
            ..self.clone()
        }
    }
}
