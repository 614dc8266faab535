//! Derivative-free one-dimensional minimisation on a bracket.

use crate::error::{Result, VbError};

/// Search interval and stopping rule for [`minimize_scalar`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BracketSpec {
    pub lo: f64,
    pub hi: f64,
    /// Absolute tolerance on the argument.
    pub tol: f64,
    pub max_eval: usize,
}

impl BracketSpec {
    pub const DEFAULT_TOL: f64 = 1e-8;
    pub const DEFAULT_MAX_EVAL: usize = 200;

    pub fn new(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            tol: Self::DEFAULT_TOL,
            max_eval: Self::DEFAULT_MAX_EVAL,
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) {
            return Err(VbError::InvalidParameter(format!(
                "bracket [{}, {}] must be finite with lo < hi",
                self.lo, self.hi
            )));
        }
        if !(self.tol > 0.0) || self.max_eval < 3 {
            return Err(VbError::InvalidParameter(format!(
                "tol = {} must be positive and max_eval = {} at least 3",
                self.tol, self.max_eval
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarMin {
    pub x: f64,
    pub fx: f64,
    pub evals: usize,
}

const GOLDEN: f64 = 0.381_966_011_250_105_1; // (3 - sqrt 5) / 2
const SQRT_EPS: f64 = 1.490_116_119_384_765_6e-8;

fn eval<F: FnMut(f64) -> f64>(f: &mut F, x: f64, count: &mut usize) -> Result<f64> {
    *count += 1;
    let v = f(x);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(VbError::NonFiniteObjective { x })
    }
}

/// Brent's method: golden-section steps safeguarded by successive parabolic
/// interpolation.
///
/// The result is never worse than either endpoint: both are evaluated and
/// returned instead when they beat the interior minimum.
pub fn minimize_scalar<F: FnMut(f64) -> f64>(mut f: F, bracket: BracketSpec) -> Result<ScalarMin> {
    bracket.validate()?;
    let mut evals = 0usize;
    let (mut a, mut b) = (bracket.lo, bracket.hi);
    let f_lo = eval(&mut f, a, &mut evals)?;
    let f_hi = eval(&mut f, b, &mut evals)?;

    let mut x = a + GOLDEN * (b - a);
    let mut w = x;
    let mut v = x;
    let mut fx = eval(&mut f, x, &mut evals)?;
    let mut fw = fx;
    let mut fv = fx;
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;

    while evals < bracket.max_eval {
        let m = 0.5 * (a + b);
        let tol1 = SQRT_EPS * x.abs() + bracket.tol / 3.0;
        let tol2 = 2.0 * tol1;
        if (x - m).abs() <= tol2 - 0.5 * (b - a) {
            break;
        }

        let mut golden = true;
        if e.abs() > tol1 {
            // parabola through x, w, v
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            } else {
                q = -q;
            }
            let e_prev = e;
            e = d;
            if p.abs() < (0.5 * q * e_prev).abs() && p > q * (a - x) && p < q * (b - x) {
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if x < m { tol1 } else { -tol1 };
                }
                golden = false;
            }
        }
        if golden {
            e = if x < m { b - x } else { a - x };
            d = GOLDEN * e;
        }

        let u = if d.abs() >= tol1 {
            x + d
        } else if d > 0.0 {
            x + tol1
        } else {
            x - tol1
        };
        let fu = eval(&mut f, u, &mut evals)?;

        if fu <= fx {
            if u < x {
                b = x;
            } else {
                a = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }

    let mut best = ScalarMin { x, fx, evals };
    if f_lo < best.fx {
        best.x = bracket.lo;
        best.fx = f_lo;
    }
    if f_hi < best.fx {
        best.x = bracket.hi;
        best.fx = f_hi;
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::{norm_cdf, SQRT_2_OVER_PI};

    #[test]
    fn quadratic_vertex() {
        let r = minimize_scalar(|x| (x - 2.0) * (x - 2.0), BracketSpec::new(-10.0, 10.0)).unwrap();
        assert!((r.x - 2.0).abs() < 1e-6);
        assert!(r.evals <= BracketSpec::DEFAULT_MAX_EVAL);
    }

    #[test]
    fn kinked_symmetric() {
        let r = minimize_scalar(|x: f64| x.abs() + 0.5 * x * x, BracketSpec::new(-5.0, 5.0)).unwrap();
        assert!(r.x.abs() < 1e-6, "{}", r.x);
    }

    #[test]
    fn unit_mu_objective() {
        // x^2/2 + sqrt(2/pi) e^{-x^2/2} + x (1 - 2 Phi(-x)); even, minimum at 0.
        let f = |x: f64| 0.5 * x * x + SQRT_2_OVER_PI * (-0.5 * x * x).exp() + x * (1.0 - 2.0 * norm_cdf(-x));
        // grid oracle at step 1e-4
        let mut best = (f64::INFINITY, 0.0);
        let mut t = -1.0;
        while t <= 1.0 {
            if f(t) < best.0 {
                best = (f(t), t);
            }
            t += 1e-4;
        }
        assert!(best.1.abs() < 1e-3);
        let r = minimize_scalar(f, BracketSpec::new(-3.0, 4.0)).unwrap();
        assert!(r.x.abs() < 1e-6, "{}", r.x);
    }

    #[test]
    fn monotone_returns_endpoint() {
        let r = minimize_scalar(|x| x, BracketSpec::new(1.0, 3.0)).unwrap();
        assert_eq!(r.x, 1.0);
        assert_eq!(r.fx, 1.0);
    }

    #[test]
    fn non_finite_is_reported() {
        let err = minimize_scalar(|x: f64| if x > 0.5 { f64::NAN } else { x * x }, BracketSpec::new(-1.0, 1.0))
            .unwrap_err();
        match err {
            VbError::NonFiniteObjective { x } => assert!(x > 0.5),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn rejects_bad_bracket() {
        assert!(minimize_scalar(|x| x, BracketSpec::new(1.0, 1.0)).is_err());
        assert!(minimize_scalar(|x| x, BracketSpec::new(0.0, 1.0).with_tol(0.0)).is_err());
    }
}
