//! Coordinate-ascent variational inference for the spike-and-slab posterior
//! with Laplace prior slabs.
//!
//! Each coordinate is updated in turn: the slab mean by minimising `f_i`, the
//! slab standard deviation by minimising `g_i`, then the inclusion probability
//! in closed form. Sweeps repeat until the largest change in binary entropy of
//! the inclusion probabilities drops to `epsilon`.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{clamp_gamma, ridge_init, PriorConfig, RegressionData, Slab, VariationalState};
use crate::error::{Result, VbError};
use crate::scalar::{minimize_scalar, BracketSpec};
use crate::special::{folded_normal_mean, log_sqrt_pi_over_2, logistic, one_minus_two_cdf_neg, xlogx, SQRT_2_OVER_PI};

/// Order in which coordinates are visited within a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateOrder {
    /// Decreasing magnitude of the ridge initialiser, ties by index.
    Prioritized,
    Lexicographic,
    /// One uniform permutation drawn from a seeded generator.
    Randomized { seed: u64 },
}

impl UpdateOrder {
    pub fn name(&self) -> &'static str {
        match self {
            UpdateOrder::Prioritized => "prioritized",
            UpdateOrder::Lexicographic => "lex",
            UpdateOrder::Randomized { .. } => "random",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub order: UpdateOrder,
    /// Stop once the maximal binary-entropy change of a sweep is at most this.
    pub epsilon: f64,
    pub max_sweeps: usize,
    pub init_sigma: f64,
    /// Starting inclusion probability; `None` uses the prior mean `a0 / (a0 + b0)`.
    pub init_gamma: Option<f64>,
    pub track_elbo: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            order: UpdateOrder::Prioritized,
            epsilon: 1e-5,
            max_sweeps: 1000,
            init_sigma: 1.0,
            init_gamma: None,
            track_elbo: false,
        }
    }
}

impl FitConfig {
    pub fn with_order(mut self, order: UpdateOrder) -> Self {
        self.order = order;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(VbError::InvalidParameter(format!("epsilon = {} must be positive", self.epsilon)));
        }
        if self.max_sweeps == 0 {
            return Err(VbError::InvalidParameter("max_sweeps must be at least 1".into()));
        }
        if !(self.init_sigma.is_finite() && self.init_sigma > 0.0) {
            return Err(VbError::InvalidParameter(format!(
                "init_sigma = {} must be positive",
                self.init_sigma
            )));
        }
        if let Some(g) = self.init_gamma {
            if !(g > 0.0 && g < 1.0) {
                return Err(VbError::InvalidParameter(format!("init_gamma = {g} must lie in (0, 1)")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub state: VariationalState,
    pub sweeps: usize,
    pub converged: bool,
    /// Negative ELBO after each sweep, when tracking was requested.
    pub elbo_trace: Option<Vec<f64>>,
    pub order_used: Vec<usize>,
    pub wall_time: f64,
}

/// Which parameter of a coordinate was just updated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateStep {
    Mu,
    Sigma,
    Gamma,
}

/// Passed to fit observers after every single parameter update.
#[derive(Debug)]
pub struct UpdateEvent<'a> {
    pub sweep: usize,
    pub coordinate: usize,
    pub step: UpdateStep,
    pub state: &'a VariationalState,
}

/// The data-dependent scalars entering coordinate `i`'s objectives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoordinateTerms {
    /// `sum_{k != i} (X^T X)_{ik} gamma_k mu_k`
    pub cross: f64,
    pub gram_ii: f64,
    pub yx_i: f64,
}

impl CoordinateTerms {
    pub fn at(i: usize, state: &VariationalState, data: &RegressionData) -> Self {
        let m = state.weighted_means();
        Self::with_means(i, &m, data)
    }

    pub(crate) fn with_means(i: usize, m: &[f64], data: &RegressionData) -> Self {
        Self {
            cross: data.cross_term(i, m),
            gram_ii: data.gram()[(i, i)],
            yx_i: data.yx()[i],
        }
    }

    /// Slab-mean objective `f_i`.
    pub fn f_mu(&self, mu: f64, sigma: f64, lambda: f64) -> f64 {
        let z = mu / sigma;
        mu * self.cross + 0.5 * self.gram_ii * mu * mu - self.yx_i * mu
            + lambda * sigma * SQRT_2_OVER_PI * (-0.5 * z * z).exp()
            + lambda * mu * one_minus_two_cdf_neg(z)
    }

    /// Slab-sd objective `g_i`: the conditional KL as a function of `sigma`.
    pub fn g_sigma(&self, sigma: f64, mu: f64, lambda: f64) -> f64 {
        0.5 * self.gram_ii * sigma * sigma + lambda * folded_normal_mean(mu, sigma) - sigma.ln()
    }

    /// Inclusion logit with prior log-odds `log_odds`.
    pub fn logit(&self, mu: f64, sigma: f64, lambda: f64, log_odds: f64) -> f64 {
        log_odds + log_sqrt_pi_over_2() + (sigma * lambda).ln() + self.yx_i * mu
            - mu * self.cross
            - 0.5 * self.gram_ii * (sigma * sigma + mu * mu)
            - lambda * folded_normal_mean(mu, sigma)
            + 0.5
    }
}

pub fn eval_f_mu(mu_i: f64, i: usize, state: &VariationalState, data: &RegressionData, lambda: f64) -> f64 {
    CoordinateTerms::at(i, state, data).f_mu(mu_i, state.sigma[i], lambda)
}

pub fn eval_g_sigma(
    sigma_i: f64,
    i: usize,
    state: &VariationalState,
    data: &RegressionData,
    lambda: f64,
) -> Result<f64> {
    if !(sigma_i > 0.0) {
        return Err(VbError::Domain { what: "g_sigma", value: sigma_i });
    }
    Ok(CoordinateTerms::at(i, state, data).g_sigma(sigma_i, state.mu[i], lambda))
}

/// Logit of the optimal inclusion probability of coordinate `i` given the rest.
pub fn gamma_logit(i: usize, state: &VariationalState, data: &RegressionData, prior: &PriorConfig) -> Result<f64> {
    let lambda = prior.laplace_lambda()?;
    let t = CoordinateTerms::at(i, state, data);
    Ok(t.logit(state.mu[i], state.sigma[i], lambda, (prior.a0 / prior.b0).ln()))
}

/// As [`gamma_logit`] but for a deterministic prior weight `w_i` on coordinate `i`.
pub fn gamma_logit_fixed_weights(
    i: usize,
    state: &VariationalState,
    data: &RegressionData,
    lambda: f64,
    w_i: f64,
) -> Result<f64> {
    if !(w_i > 0.0 && w_i < 1.0) {
        return Err(VbError::Domain { what: "prior weight", value: w_i });
    }
    let t = CoordinateTerms::at(i, state, data);
    Ok(t.logit(state.mu[i], state.sigma[i], lambda, (w_i / (1.0 - w_i)).ln()))
}

/// `H(p) = -p ln p - (1 - p) ln(1 - p)`, zero at both endpoints.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(VbError::Domain { what: "binary entropy", value: p });
    }
    Ok(-xlogx(p) - xlogx(1.0 - p))
}

fn entropy(p: f64) -> f64 {
    -xlogx(p) - xlogx(1.0 - p)
}

pub(crate) fn max_entropy_change(old: &[f64], new: &[f64]) -> f64 {
    old.iter()
        .zip(new)
        .map(|(&a, &b)| (entropy(a) - entropy(b)).abs())
        .fold(0.0, f64::max)
}

/// Permutation of `0..p` giving the visiting order within a sweep.
pub fn update_order(strategy: UpdateOrder, mu0: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..mu0.len()).collect();
    match strategy {
        UpdateOrder::Lexicographic => {}
        UpdateOrder::Prioritized => {
            // stable sort keeps ascending index on ties
            idx.sort_by(|&a, &b| mu0[b].abs().total_cmp(&mu0[a].abs()));
        }
        UpdateOrder::Randomized { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            idx.shuffle(&mut rng);
        }
    }
    idx
}

/// Negative evidence lower bound, i.e. `KL(P_{mu,sigma,gamma} || posterior)`
/// up to an additive constant that does not depend on the state.
pub fn negative_elbo(state: &VariationalState, data: &RegressionData, prior: &PriorConfig) -> f64 {
    negative_elbo_with_weight(state, data, prior, prior.prior_inclusion())
}

pub(crate) fn negative_elbo_with_weight(
    state: &VariationalState,
    data: &RegressionData,
    prior: &PriorConfig,
    w: f64,
) -> f64 {
    let p = state.len();
    let m = state.weighted_means();
    let gram = data.gram();
    let yx = data.yx();

    // 1/2 E||Y - X theta||^2
    let mut quad = 0.0;
    for j in 0..p {
        if m[j] == 0.0 {
            continue;
        }
        let col = gram.column(j);
        let mut s = 0.0;
        for i in 0..p {
            if i != j {
                s += col[i] * m[i];
            }
        }
        quad += m[j] * s;
    }
    let mut fit = 0.5 * data.y().norm_squared() + 0.5 * quad;
    for i in 0..p {
        let (mu, sd, g) = (state.mu[i], state.sigma[i], state.gamma[i]);
        fit += -yx[i] * m[i] + 0.5 * gram[(i, i)] * g * (mu * mu + sd * sd);
    }

    let (lw, l1w) = (w.ln(), (1.0 - w).ln());
    let mut kl = 0.0;
    for i in 0..p {
        let (mu, sd, g) = (state.mu[i], state.sigma[i], state.gamma[i]);
        let slab = match prior.slab {
            Slab::Laplace { lambda } => {
                -log_sqrt_pi_over_2() - (sd * lambda).ln() - 0.5 + lambda * folded_normal_mean(mu, sd)
            }
            Slab::Gaussian { slab_sd } => {
                (slab_sd / sd).ln() - 0.5 + (mu * mu + sd * sd) / (2.0 * slab_sd * slab_sd)
            }
        };
        if g > 0.0 {
            kl += g * slab + xlogx(g) - g * lw;
        }
        if g < 1.0 {
            kl += xlogx(1.0 - g) - (1.0 - g) * l1w;
        }
    }
    fit + kl
}

/// Starting state shared by every engine: ridge means, constant sigma and gamma.
pub(crate) struct Init {
    pub state: VariationalState,
    pub mu0: Vec<f64>,
}

pub(crate) fn initial_state(data: &RegressionData, prior: &PriorConfig, config: &FitConfig) -> Result<Init> {
    prior.validate()?;
    config.validate()?;
    let mu0: Vec<f64> = ridge_init(data)?.iter().cloned().collect();
    let p = data.p();
    let g0 = clamp_gamma(config.init_gamma.unwrap_or_else(|| prior.prior_inclusion()));
    let state = VariationalState {
        mu: mu0.clone(),
        sigma: vec![config.init_sigma; p],
        gamma: vec![g0; p],
    };
    Ok(Init { state, mu0 })
}

/// Minimise a coordinate objective on a bracket centred at `center`, sliding
/// the bracket when the minimum sits on its edge. Never returns a point worse
/// than `current`.
fn minimize_in_slab<F: FnMut(f64) -> f64>(mut f: F, current: f64, lo: f64, hi: f64, floor: Option<f64>) -> Result<f64> {
    let f_cur = f(current);
    if !f_cur.is_finite() {
        return Err(VbError::NonFiniteObjective { x: current });
    }
    let (mut lo, mut hi) = (lo, hi);
    let mut best = (current, f_cur);
    for _ in 0..8 {
        let r = minimize_scalar(&mut f, BracketSpec::new(lo, hi))?;
        if r.fx < best.1 {
            best = (r.x, r.fx);
        }
        let width = hi - lo;
        let at_lo = r.x - lo <= 1e-6 * width && floor.is_none_or(|fl| lo > fl);
        let at_hi = hi - r.x <= 1e-6 * width;
        if at_lo {
            hi = lo + 0.5 * width;
            lo -= width;
            if let Some(fl) = floor {
                lo = lo.max(fl);
            }
        } else if at_hi {
            lo = hi - 0.5 * width;
            hi += width;
        } else {
            break;
        }
    }
    Ok(best.0)
}

pub(crate) const SIGMA_MIN: f64 = 1e-6;

/// Shared slab updates for the Laplace engines (`P_MF` and `Q_MF`).
pub(crate) struct LaplaceCoordinate<'a> {
    pub data: &'a RegressionData,
    pub mu0: &'a [f64],
    pub lambda: f64,
}

impl LaplaceCoordinate<'_> {
    fn mu_halfwidth(&self, i: usize) -> f64 {
        let c = self.data.col_norms()[i];
        let inv = if c > 0.0 { 10.0 / c } else { 10.0 };
        (4.0 * self.mu0[i].abs() + inv).max(10.0)
    }

    fn sigma_max(&self, i: usize) -> f64 {
        let c = self.data.col_norms()[i];
        if c > 0.0 {
            10.0 * (1.0 / c).max(1.0)
        } else {
            10.0 * (1.0 / (self.lambda * SQRT_2_OVER_PI)).max(1.0)
        }
    }

    pub fn update_mu(&self, i: usize, state: &mut VariationalState, m: &mut [f64]) -> Result<()> {
        let t = CoordinateTerms::with_means(i, m, self.data);
        let sigma = state.sigma[i];
        let cur = state.mu[i];
        let b = self.mu_halfwidth(i);
        let lambda = self.lambda;
        let mu = minimize_in_slab(|x| t.f_mu(x, sigma, lambda), cur, cur - b, cur + b, None)
            .map_err(|e| e.at_coordinate(i))?;
        state.mu[i] = mu;
        m[i] = state.gamma[i] * mu;
        Ok(())
    }

    pub fn update_sigma(&self, i: usize, state: &mut VariationalState, m: &[f64]) -> Result<()> {
        let t = CoordinateTerms::with_means(i, m, self.data);
        let mu = state.mu[i];
        let lambda = self.lambda;
        let sd = minimize_in_slab(
            |s| t.g_sigma(s, mu, lambda),
            state.sigma[i],
            SIGMA_MIN,
            self.sigma_max(i),
            Some(SIGMA_MIN),
        )
        .map_err(|e| e.at_coordinate(i))?;
        state.sigma[i] = sd;
        Ok(())
    }
}

/// Fit the mean-field variational posterior under a Laplace-slab prior.
pub fn cavi_fit(data: &RegressionData, prior: &PriorConfig, config: &FitConfig) -> Result<FitSummary> {
    cavi_fit_observed(data, prior, config, |_| {})
}

/// [`cavi_fit`] reporting every single parameter update to `observer`.
pub fn cavi_fit_observed<F>(
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
    let order = update_order(config.order, &mu0);
    let log_odds = (prior.a0 / prior.b0).ln();
    let coord = LaplaceCoordinate { data, mu0: &mu0, lambda };
    let mut m = state.weighted_means();
    let mut trace = config.track_elbo.then(Vec::new);

    let mut sweeps = 0;
    let mut converged = false;
    while sweeps < config.max_sweeps {
        sweeps += 1;
        let gamma_old = state.gamma.clone();
        for &i in &order {
            coord.update_mu(i, &mut state, &mut m)?;
            observer(&UpdateEvent { sweep: sweeps, coordinate: i, step: UpdateStep::Mu, state: &state });

            coord.update_sigma(i, &mut state, &m)?;
            observer(&UpdateEvent { sweep: sweeps, coordinate: i, step: UpdateStep::Sigma, state: &state });

            let t = CoordinateTerms::with_means(i, &m, data);
            let logit = t.logit(state.mu[i], state.sigma[i], lambda, log_odds);
            state.gamma[i] = clamp_gamma(logistic(logit));
            m[i] = state.gamma[i] * state.mu[i];
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
