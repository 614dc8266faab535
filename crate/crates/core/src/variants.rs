//! Alternative variational engines: the hard-support `Q_MF` family with
//! Laplace slabs, and Gaussian prior slabs updated component-wise or in batch.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::cavi::{
    initial_state, max_entropy_change, negative_elbo, negative_elbo_with_weight, update_order, CoordinateTerms,
    FitConfig, FitSummary, Init, LaplaceCoordinate, UpdateEvent, UpdateOrder, UpdateStep,
};
use crate::data::{clamp_gamma, PriorConfig, RegressionData, Slab, VariationalState};
use crate::error::{Result, VbError};
use crate::special::{folded_normal_mean, log_sqrt_pi_over_2, logistic, logit, xlogx};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantKind {
    QmfLaplace,
    /// `slab_sd = 1` is the textbook component-wise update.
    GaussComponentwise { slab_sd: f64 },
    GaussBatchwise,
}

/// Conditional KL as a function of `gamma_i`, with the additive constant
/// chosen so that `h_i(0) = 0`.
pub fn eval_h(
    gamma_i: f64,
    i: usize,
    state: &VariationalState,
    data: &RegressionData,
    prior: &PriorConfig,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&gamma_i) {
        return Err(VbError::Domain { what: "h_i", value: gamma_i });
    }
    let lambda = prior.laplace_lambda()?;
    let t = CoordinateTerms::at(i, state, data);
    let (mu, sd) = (state.mu[i], state.sigma[i]);
    let braced = mu * t.cross + 0.5 * t.gram_ii * (sd * sd + mu * mu) - t.yx_i * mu
        - log_sqrt_pi_over_2()
        - (sd * lambda).ln()
        - 0.5
        + lambda * folded_normal_mean(mu, sd)
        + (prior.b0 / prior.a0).ln();
    Ok(gamma_i * braced + xlogx(gamma_i) + xlogx(1.0 - gamma_i))
}

/// Change measure used to stop `Q_MF` sweeps: the largest relative move of a
/// slab mean or sd. Entropy of a {0,1} inclusion is always zero, so the entropy
/// rule alone would stop after one sweep.
fn max_slab_change(old: &VariationalState, new: &VariationalState) -> f64 {
    old.mu
        .iter()
        .zip(&new.mu)
        .map(|(a, b)| (a - b).abs() / (1.0 + a.abs()))
        .chain(old.sigma.iter().zip(&new.sigma).map(|(a, b)| (a - b).abs() / (1.0 + a.abs())))
        .fold(0.0, f64::max)
}

pub fn qmf_fit(data: &RegressionData, prior: &PriorConfig, config: &FitConfig) -> Result<FitSummary> {
    qmf_fit_observed(data, prior, config, |_| {})
}

/// Laplace-slab CAVI restricted to a single support: every `gamma_i` is 0 or 1
/// and is set to whichever endpoint gives the smaller `h_i` (ties go to 0).
pub fn qmf_fit_observed<F>(
    data: &RegressionData,
    prior: &PriorConfig,
    config: &FitConfig,
    mut observer: F,
) -> Result<FitSummary>
where
    F: FnMut(&UpdateEvent<'_>),
{
    let started = Instant::now();
    let lambda = prior.laplace_lambda()?;
    let Init { mut state, mu0 } = initial_state(data, prior, config)?;
    // hard support: start from the rounded prior weight
    let g0 = if config.init_gamma.unwrap_or_else(|| prior.prior_inclusion()) > 0.5 { 1.0 } else { 0.0 };
    state.gamma.iter_mut().for_each(|g| *g = g0);

    let order = update_order(config.order, &mu0);
    let coord = LaplaceCoordinate { data, mu0: &mu0, lambda };
    let mut m = state.weighted_means();
    let mut trace = config.track_elbo.then(Vec::new);

    let mut sweeps = 0;
    let mut converged = false;
    while sweeps < config.max_sweeps {
        sweeps += 1;
        let before = state.clone();
        for &i in &order {
            coord.update_mu(i, &mut state, &mut m)?;
            observer(&UpdateEvent { sweep: sweeps, coordinate: i, step: UpdateStep::Mu, state: &state });
            coord.update_sigma(i, &mut state, &m)?;
            observer(&UpdateEvent { sweep: sweeps, coordinate: i, step: UpdateStep::Sigma, state: &state });

            let h1 = eval_h(1.0, i, &state, data, prior)?;
            let h0 = eval_h(0.0, i, &state, data, prior)?;
            state.gamma[i] = if h1 < h0 { 1.0 } else { 0.0 };
            m[i] = state.gamma[i] * state.mu[i];
            observer(&UpdateEvent { sweep: sweeps, coordinate: i, step: UpdateStep::Gamma, state: &state });
        }
        if let Some(tr) = trace.as_mut() {
            tr.push(negative_elbo(&state, data, prior));
        }
        let flips = before.gamma.iter().zip(&state.gamma).any(|(a, b)| a != b);
        if !flips && max_slab_change(&before, &state) <= config.epsilon {
            converged = true;
            break;
        }
    }

    Ok(FitSummary {
        state,
        sweeps,
        converged,
        elbo_trace: trace,
        order_used: order,
        wall_time: started.elapsed().as_secs_f64(),
    })
}

fn gaussian_slab_sd(prior: &PriorConfig) -> Result<f64> {
    match prior.slab {
        Slab::Gaussian { slab_sd } => Ok(slab_sd),
        Slab::Laplace { .. } => Err(VbError::InvalidParameter("this engine requires a Gaussian slab".into())),
    }
}

pub fn gauss_componentwise_fit(data: &RegressionData, prior: &PriorConfig, config: &FitConfig) -> Result<FitSummary> {
    gauss_componentwise_fit_observed(data, prior, config, |_| {})
}

/// Closed-form CAVI for Gaussian prior slabs `N(0, rho^2)`:
///
/// ```text
/// sigma_i = 1 / sqrt((X^T X)_ii + 1/rho^2)
/// mu_i    = sigma_i^2 ((Y^T X)_i - sum_{j != i} (X^T X)_ji gamma_j mu_j)
/// gamma_i = logistic(log(a0/b0) + log sigma_i - log rho + mu_i^2 / (2 sigma_i^2))
/// ```
pub fn gauss_componentwise_fit_observed<F>(
    data: &RegressionData,
    prior: &PriorConfig,
    config: &FitConfig,
    mut observer: F,
) -> Result<FitSummary>
where
    F: FnMut(&UpdateEvent<'_>),
{
    let started = Instant::now();
    let rho = gaussian_slab_sd(prior)?;
    let Init { mut state, mu0 } = initial_state(data, prior, config)?;
    let order = update_order(config.order, &mu0);
    let log_odds = (prior.a0 / prior.b0).ln();
    let inv_rho2 = 1.0 / (rho * rho);
    let mut m = state.weighted_means();
    let mut trace = config.track_elbo.then(Vec::new);

    let mut sweeps = 0;
    let mut converged = false;
    while sweeps < config.max_sweeps {
        sweeps += 1;
        let gamma_old = state.gamma.clone();
        for &i in &order {
            let sd = 1.0 / (data.gram()[(i, i)] + inv_rho2).sqrt();
            state.sigma[i] = sd;
            observer(&UpdateEvent { sweep: sweeps, coordinate: i, step: UpdateStep::Sigma, state: &state });

            let mu = sd * sd * (data.yx()[i] - data.cross_term(i, &m));
            state.mu[i] = mu;
            m[i] = state.gamma[i] * mu;
            observer(&UpdateEvent { sweep: sweeps, coordinate: i, step: UpdateStep::Mu, state: &state });

            let z = log_odds + sd.ln() - rho.ln() + mu * mu / (2.0 * sd * sd);
            state.gamma[i] = clamp_gamma(logistic(z));
            m[i] = state.gamma[i] * mu;
            observer(&UpdateEvent { sweep: sweeps, coordinate: i, step: UpdateStep::Gamma, state: &state });
        }
        if let Some(tr) = trace.as_mut() {
            tr.push(negative_elbo(&state, data, prior));
        }
        if max_entropy_change(&gamma_old, &state.gamma) <= config.epsilon {
            converged = true;
            break;
        }
    }

    Ok(FitSummary {
        state,
        sweeps,
        converged,
        elbo_trace: trace,
        order_used: order,
        wall_time: started.elapsed().as_secs_f64(),
    })
}

/// Solve `(X^T X + diag(gamma)) mu = X^T Y`, retrying once with diagonal jitter.
fn batch_solve(data: &RegressionData, gamma: &[f64]) -> Result<DVector<f64>> {
    let p = data.p();
    let mut a: DMatrix<f64> = data.gram().clone();
    for i in 0..p {
        a[(i, i)] += gamma[i];
    }
    if let Some(ch) = a.clone().cholesky() {
        return Ok(ch.solve(data.yx()));
    }
    let jitter = 1e-10 * data.gram().trace() / p as f64;
    for i in 0..p {
        a[(i, i)] += jitter;
    }
    match a.cholesky() {
        Some(ch) => Ok(ch.solve(data.yx())),
        None => Err(VbError::LinearSolve(format!(
            "X^T X + diag(gamma) singular even with jitter {jitter:e}; gamma = {gamma:?}"
        ))),
    }
}

/// Batch-wise update for Gaussian prior slabs: all means at once from
/// `(X^T X + diag(gamma))^{-1} X^T Y`, then elementwise sd and inclusion
/// updates with prior log-odds `logit(1/p)`.
pub fn gauss_batchwise_fit(data: &RegressionData, prior: &PriorConfig, config: &FitConfig) -> Result<FitSummary> {
    let started = Instant::now();
    let Init { mut state, mu0 } = initial_state(data, prior, config)?;
    let p = data.p();
    let order = update_order(UpdateOrder::Lexicographic, &mu0);
    let log_odds = if p > 1 { logit(1.0 / p as f64) } else { 0.0 };
    let mut trace = config.track_elbo.then(Vec::new);

    let mut sweeps = 0;
    let mut converged = false;
    while sweeps < config.max_sweeps {
        sweeps += 1;
        let gamma_old = state.gamma.clone();
        let mu = batch_solve(data, &state.gamma)?;
        state.mu.copy_from_slice(mu.as_slice());
        for i in 0..p {
            let sd = 1.0 / (data.gram()[(i, i)] + state.gamma[i]).sqrt();
            state.sigma[i] = sd;
            let z = log_odds + sd.ln() + state.mu[i] * state.mu[i] / (2.0 * sd * sd);
            state.gamma[i] = clamp_gamma(logistic(z));
        }
        if let Some(tr) = trace.as_mut() {
            let w = if p > 1 { 1.0 / p as f64 } else { 0.5 };
            let unit = PriorConfig::gaussian(1.0, prior.a0, prior.b0);
            tr.push(negative_elbo_with_weight(&state, data, &unit, w));
        }
        if max_entropy_change(&gamma_old, &state.gamma) <= config.epsilon {
            converged = true;
            break;
        }
    }

    Ok(FitSummary {
        state,
        sweeps,
        converged,
        elbo_trace: trace,
        order_used: order,
        wall_time: started.elapsed().as_secs_f64(),
    })
}
