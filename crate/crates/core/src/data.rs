//! Regression data with the Gram quantities every sweep reads, the
//! variational state, and prior configuration.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Result, VbError};

/// Inclusion probabilities of a mean-field state are kept inside
/// `[GAMMA_FLOOR, 1 - GAMMA_FLOOR]` so that logits and entropies stay finite.
pub const GAMMA_FLOOR: f64 = 1e-10;

/// Design, response and the derived products `X^T X`, `Y^T X` and column norms.
///
/// Immutable once built; share it freely across threads.
#[derive(Debug, Clone)]
pub struct RegressionData {
    x: DMatrix<f64>,
    y: DVector<f64>,
    gram: DMatrix<f64>,
    yx: DVector<f64>,
    col_norms: Vec<f64>,
    x_norm: f64,
}

impl RegressionData {
    /// Validate `(X, Y)` and precompute the Gram matrix, `Y^T X` and the column norms.
    pub fn precompute(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        let (n, p) = x.shape();
        if n == 0 || p == 0 {
            return Err(VbError::DimensionMismatch(format!(
                "design must have at least one row and one column, got {n}x{p}"
            )));
        }
        if y.len() != n {
            return Err(VbError::DimensionMismatch(format!(
                "design has {n} rows but response has {} entries",
                y.len()
            )));
        }
        if let Some(index) = x.iter().position(|v| !v.is_finite()) {
            return Err(VbError::NonFinite { what: "design", index });
        }
        if let Some(index) = y.iter().position(|v| !v.is_finite()) {
            return Err(VbError::NonFinite { what: "response", index });
        }

        let mut gram = x.tr_mul(&x);
        symmetrize_upper(&mut gram);
        let yx = x.tr_mul(&y);
        let col_norms: Vec<f64> = x.column_iter().map(|c| c.norm()).collect();
        let x_norm = col_norms.iter().cloned().fold(0.0, f64::max);
        Ok(Self {
            x,
            y,
            gram,
            yx,
            col_norms,
            x_norm,
        })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    /// `X^T X`, exactly symmetric.
    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    /// `(Y^T X)_i` for every column.
    pub fn yx(&self) -> &DVector<f64> {
        &self.yx
    }

    pub fn col_norms(&self) -> &[f64] {
        &self.col_norms
    }

    /// Maximal column norm `||X||`.
    pub fn x_norm(&self) -> f64 {
        self.x_norm
    }

    /// `sum_{k != i} (X^T X)_{ik} m_k`.
    pub(crate) fn cross_term(&self, i: usize, m: &[f64]) -> f64 {
        let col = self.gram.column(i);
        let full: f64 = col.iter().zip(m).map(|(g, v)| g * v).sum();
        full - self.gram[(i, i)] * m[i]
    }

    /// Divide design and response by `c`, scaling the cached products instead
    /// of recomputing them.
    pub(crate) fn scaled(&self, c: f64) -> Self {
        let c2 = c * c;
        Self {
            x: &self.x / c,
            y: &self.y / c,
            gram: &self.gram / c2,
            yx: &self.yx / c2,
            col_norms: self.col_norms.iter().map(|v| v / c).collect(),
            x_norm: self.x_norm / c,
        }
    }
}

/// Copy the upper triangle onto the lower one.
fn symmetrize_upper(m: &mut DMatrix<f64>) {
    let p = m.nrows();
    for j in 0..p {
        for i in (j + 1)..p {
            m[(i, j)] = m[(j, i)];
        }
    }
}

/// Ridge estimate `(X^T X + I)^{-1} X^T Y` used to initialise the slab means.
///
/// When `p > n` the equivalent form `X^T (X X^T + I)^{-1} Y` is solved instead,
/// which needs only an `n x n` factorisation.
pub fn ridge_init(data: &RegressionData) -> Result<DVector<f64>> {
    let (n, p) = (data.n(), data.p());
    if p <= n {
        let a = data.gram() + DMatrix::identity(p, p);
        let chol = a
            .cholesky()
            .ok_or_else(|| VbError::LinearSolve("X^T X + I is not positive definite".into()))?;
        Ok(chol.solve(data.yx()))
    } else {
        let mut k = data.x() * data.x().transpose();
        symmetrize_upper(&mut k);
        for i in 0..n {
            k[(i, i)] += 1.0;
        }
        let chol = k
            .cholesky()
            .ok_or_else(|| VbError::LinearSolve("X X^T + I is not positive definite".into()))?;
        let alpha = chol.solve(data.y());
        Ok(data.x().tr_mul(&alpha))
    }
}

/// Centre every column, rescale it to Euclidean norm `sqrt(n)` and append an
/// intercept column of ones. Constant columns are left at zero after centring.
pub fn normalize_design(x: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, p) = x.shape();
    let target = (n as f64).sqrt();
    let mut out = DMatrix::zeros(n, p + 1);
    for j in 0..p {
        let col = x.column(j);
        let mean = col.mean();
        let centred: DVector<f64> = col.map(|v| v - mean);
        let norm = centred.norm();
        let scale = if norm > 0.0 { target / norm } else { 0.0 };
        out.set_column(j, &(centred * scale));
    }
    out.set_column(p, &DVector::from_element(n, 1.0));
    out
}

/// Mean-field spike-and-slab parameters: slab means, slab standard deviations
/// and inclusion probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationalState {
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
    pub gamma: Vec<f64>,
}

impl VariationalState {
    pub fn new(mu: Vec<f64>, sigma: Vec<f64>, gamma: Vec<f64>) -> Result<Self> {
        let p = mu.len();
        if sigma.len() != p || gamma.len() != p {
            return Err(VbError::DimensionMismatch(format!(
                "state vectors have lengths {}, {}, {}",
                p,
                sigma.len(),
                gamma.len()
            )));
        }
        for (i, ((&m, &s), &g)) in mu.iter().zip(&sigma).zip(&gamma).enumerate() {
            if !m.is_finite() {
                return Err(VbError::NonFinite { what: "mu", index: i });
            }
            if !(s.is_finite() && s > 0.0) {
                return Err(VbError::InvalidParameter(format!("sigma[{i}] = {s} must be positive")));
            }
            if !(0.0..=1.0).contains(&g) {
                return Err(VbError::InvalidParameter(format!("gamma[{i}] = {g} outside [0, 1]")));
            }
        }
        Ok(Self { mu, sigma, gamma })
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    /// `gamma_i * mu_i`, the mean of each coordinate under the fitted distribution.
    pub fn posterior_mean(&self) -> Vec<f64> {
        posterior_mean(self)
    }

    /// `gamma ⊙ mu`
    pub(crate) fn weighted_means(&self) -> Vec<f64> {
        self.gamma.iter().zip(&self.mu).map(|(g, m)| g * m).collect()
    }
}

pub fn posterior_mean(state: &VariationalState) -> Vec<f64> {
    state.weighted_means()
}

pub(crate) fn clamp_gamma(g: f64) -> f64 {
    g.clamp(GAMMA_FLOOR, 1.0 - GAMMA_FLOOR)
}

/// Continuous slab distribution of the prior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Slab {
    Laplace { lambda: f64 },
    Gaussian { slab_sd: f64 },
}

/// Slab family plus the `Beta(a0, b0)` weight hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorConfig {
    pub slab: Slab,
    pub a0: f64,
    pub b0: f64,
}

impl PriorConfig {
    pub fn laplace(lambda: f64, a0: f64, b0: f64) -> Self {
        Self {
            slab: Slab::Laplace { lambda },
            a0,
            b0,
        }
    }

    pub fn gaussian(slab_sd: f64, a0: f64, b0: f64) -> Self {
        Self {
            slab: Slab::Gaussian { slab_sd },
            a0,
            b0,
        }
    }

    /// `a0 = 1, b0 = p, lambda = 1`.
    pub fn default_laplace(p: usize) -> Self {
        Self::laplace(1.0, 1.0, p as f64)
    }

    pub fn validate(&self) -> Result<()> {
        match self.slab {
            Slab::Laplace { lambda } if !(lambda.is_finite() && lambda > 0.0) => {
                return Err(VbError::InvalidParameter(format!("lambda = {lambda} must be positive")));
            }
            Slab::Gaussian { slab_sd } if !(slab_sd.is_finite() && slab_sd > 0.0) => {
                return Err(VbError::InvalidParameter(format!("slab_sd = {slab_sd} must be positive")));
            }
            _ => {}
        }
        if !(self.a0.is_finite() && self.a0 > 0.0 && self.b0.is_finite() && self.b0 > 0.0) {
            return Err(VbError::InvalidParameter(format!(
                "a0 = {}, b0 = {} must both be positive",
                self.a0, self.b0
            )));
        }
        Ok(())
    }

    /// Prior inclusion probability `a0 / (a0 + b0)`.
    pub fn prior_inclusion(&self) -> f64 {
        self.a0 / (self.a0 + self.b0)
    }

    pub(crate) fn laplace_lambda(&self) -> Result<f64> {
        match self.slab {
            Slab::Laplace { lambda } => Ok(lambda),
            Slab::Gaussian { .. } => Err(VbError::InvalidParameter(
                "this engine requires a Laplace slab".into(),
            )),
        }
    }

    /// Whether `lambda` lies in `[||X|| / p, 4 ||X|| sqrt(log p)]`, the range
    /// under which the contraction guarantees hold. Advisory only.
    pub fn lambda_in_recommended_range(&self, data: &RegressionData) -> Option<bool> {
        match self.slab {
            Slab::Laplace { lambda } => {
                let (lo, hi) = recommended_lambda_range(data);
                Some(lambda >= lo && lambda <= hi)
            }
            Slab::Gaussian { .. } => None,
        }
    }
}

pub fn recommended_lambda_range(data: &RegressionData) -> (f64, f64) {
    let p = data.p() as f64;
    let xn = data.x_norm();
    (xn / p, 4.0 * xn * p.ln().max(0.0).sqrt())
}
