//! Scalar special functions shared by the coordinate objectives.

use libm::{erf, erfc};
use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// sqrt(2 / pi)
pub const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;

/// Standard normal cdf. Uses the erfc form so the lower tail keeps full
/// relative precision.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// `1 - 2 Phi(-x)`, evaluated as `erf(x / sqrt 2)` to avoid cancellation.
pub fn one_minus_two_cdf_neg(x: f64) -> f64 {
    erf(x * FRAC_1_SQRT_2)
}

/// Mean of the folded normal |N(mu, sigma^2)|.
pub fn folded_normal_mean(mu: f64, sigma: f64) -> f64 {
    let z = mu / sigma;
    sigma * SQRT_2_OVER_PI * (-0.5 * z * z).exp() + mu * one_minus_two_cdf_neg(z)
}

/// Inverse logit, split by sign so neither branch overflows.
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// `x ln x` with the continuous extension at zero.
pub(crate) fn xlogx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// log(sqrt(pi) / sqrt(2)); the constant in the Laplace-slab inclusion logit.
pub(crate) fn log_sqrt_pi_over_2() -> f64 {
    0.5 * (PI / 2.0).ln()
}
