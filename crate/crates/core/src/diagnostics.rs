//! Design-matrix diagnostics: mutual coherence, maximal column norm and the
//! smallest scaled sparse singular values, computed by exhaustive subset
//! enumeration.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::RegressionData;
use crate::error::{Result, VbError};

pub const DEFAULT_SUBSET_CAP: u128 = 2_000_000;

/// Squared sparse singular values below this are flagged in the report.
pub const FLAG_THRESHOLD: f64 = 0.01;

const BOUND_TOL: f64 = 1e-9;

fn check_columns(data: &RegressionData) -> Result<()> {
    if let Some(i) = data.col_norms().iter().position(|&c| c == 0.0) {
        return Err(VbError::ZeroColumn(i));
    }
    Ok(())
}

/// Largest absolute correlation between two distinct columns.
pub fn mutual_coherence(data: &RegressionData) -> Result<f64> {
    let p = data.p();
    if p < 2 {
        return Err(VbError::InvalidParameter("mutual coherence needs at least two columns".into()));
    }
    check_columns(data)?;
    let norms = data.col_norms();
    let gram = data.gram();
    let mut mc: f64 = 0.0;
    for j in 0..p {
        for i in 0..j {
            let c = gram[(i, j)].abs() / (norms[i] * norms[j]);
            mc = mc.max(c);
        }
    }
    Ok(mc.min(1.0))
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
    }
    r
}

/// Smallest singular value of the columns `cols` of `X`.
fn subset_sigma_min(data: &RegressionData, cols: &[usize]) -> f64 {
    let gram = data.gram();
    let orthogonal = cols
        .iter()
        .enumerate()
        .all(|(a, &i)| cols[..a].iter().all(|&j| gram[(i, j)] == 0.0));
    if orthogonal {
        // diagonal Gram block: singular values are the column norms
        return cols.iter().map(|&i| data.col_norms()[i]).fold(f64::INFINITY, f64::min);
    }
    let sub = data.x().select_columns(cols);
    sub.singular_values().iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Advance `c` to the next `k`-combination of `0..p` with `c[0]` fixed.
fn next_tail(c: &mut [usize], p: usize) -> bool {
    let k = c.len();
    let mut i = k;
    while i > 1 {
        i -= 1;
        if c[i] < p - (k - i) {
            c[i] += 1;
            for j in (i + 1)..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// `min over |S| = s of sigma_min(X_S) / ||X||`.
pub fn sparse_singular_value(data: &RegressionData, s: usize) -> Result<f64> {
    sparse_singular_value_capped(data, s, DEFAULT_SUBSET_CAP)
}

pub fn sparse_singular_value_capped(data: &RegressionData, s: usize, cap: u128) -> Result<f64> {
    let (n, p) = (data.n(), data.p());
    if s == 0 || s > n.min(p) {
        return Err(VbError::InvalidParameter(format!(
            "sparsity s = {s} must lie in [1, min(n, p) = {}]",
            n.min(p)
        )));
    }
    let needed = binomial(p, s);
    if needed > cap {
        return Err(VbError::EnumerationCap { needed, cap });
    }
    if data.x_norm() == 0.0 {
        return Err(VbError::ZeroColumn(0));
    }
    let min_sv = (0..=(p - s))
        .into_par_iter()
        .map(|first| {
            let mut c: Vec<usize> = (first..first + s).collect();
            let mut best = f64::INFINITY;
            loop {
                best = best.min(subset_sigma_min(data, &c));
                if !next_tail(&mut c, p) {
                    break;
                }
            }
            best
        })
        .reduce(|| f64::INFINITY, f64::min);
    Ok((min_sv / data.x_norm()).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiTilde {
    pub s: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompatibilityReport {
    pub mc: f64,
    pub x_norm: f64,
    /// `min_i ||X_i|| / ||X||`, which equals the one-sparse singular value.
    pub col_norm_min_ratio: f64,
    pub phi_tilde: Vec<PhiTilde>,
    /// Every computed `s` satisfies `phi_tilde(s)^2 >= phi_tilde(1)^2 - s mc`.
    pub lemma_d1_verified: bool,
    pub flags: Vec<String>,
    pub notes: Vec<String>,
}

pub fn compatibility_report(data: &RegressionData, s_max: usize) -> Result<CompatibilityReport> {
    compatibility_report_capped(data, s_max, DEFAULT_SUBSET_CAP)
}

pub fn compatibility_report_capped(data: &RegressionData, s_max: usize, cap: u128) -> Result<CompatibilityReport> {
    if s_max == 0 {
        return Err(VbError::InvalidParameter("s_max must be at least 1".into()));
    }
    let mc = mutual_coherence(data)?;
    let x_norm = data.x_norm();
    let ratio = data.col_norms().iter().cloned().fold(f64::INFINITY, f64::min) / x_norm;

    let mut notes = vec![
        "compatibility numbers phi(S) and phi_bar(s) are continuous nonconvex infima and are not computed".to_string(),
    ];
    let limit = s_max.min(data.n().min(data.p()));
    if limit < s_max {
        notes.push(format!("s_max lowered from {s_max} to min(n, p) = {limit}"));
    }

    let mut phi = Vec::with_capacity(limit);
    let mut flags = Vec::new();
    for s in 1..=limit {
        let value = if s == 1 { ratio } else { sparse_singular_value_capped(data, s, cap)? };
        let bound = ratio * ratio - s as f64 * mc;
        if value * value < bound - BOUND_TOL {
            return Err(VbError::Invariant(format!(
                "phi_tilde({s})^2 = {} below the coherence bound {bound}",
                value * value
            )));
        }
        if value * value < FLAG_THRESHOLD {
            flags.push(format!("phi_tilde({s}) = {value:.6e}: squared value below {FLAG_THRESHOLD}"));
        }
        phi.push(PhiTilde { s, value });
    }
    Ok(CompatibilityReport {
        mc,
        x_norm,
        col_norm_min_ratio: ratio,
        phi_tilde: phi,
        lemma_d1_verified: true,
        flags,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};

    fn data(x: DMatrix<f64>) -> RegressionData {
        let n = x.nrows();
        RegressionData::precompute(x, DVector::zeros(n)).unwrap()
    }

    fn wavy(n: usize, p: usize, seed: f64) -> DMatrix<f64> {
        DMatrix::from_fn(n, p, |i, j| ((i as f64 + 1.0) * (j as f64 + seed) * 0.731).sin())
    }

    #[test]
    fn identity_is_perfect() {
        let d = data(DMatrix::identity(5, 5));
        assert_eq!(mutual_coherence(&d).unwrap(), 0.0);
        for s in 1..=3 {
            assert_eq!(sparse_singular_value(&d, s).unwrap(), 1.0);
        }
        let r = compatibility_report(&d, 3).unwrap();
        assert!(r.flags.is_empty());
        assert!(r.phi_tilde.iter().all(|v| v.value == 1.0));
    }

    #[test]
    fn duplicated_column() {
        let mut x = wavy(6, 4, 1.0);
        let c = x.column(1).clone_owned();
        x.set_column(3, &c);
        let d = data(x);
        assert!((mutual_coherence(&d).unwrap() - 1.0).abs() < 1e-12);
        assert!(sparse_singular_value(&d, 2).unwrap().abs() < 1e-10);
        let r = compatibility_report(&d, 2).unwrap();
        assert_eq!(r.flags.len(), 1);
    }

    #[test]
    fn coherence_matches_double_loop() {
        let x = wavy(8, 5, 0.3);
        let d = data(x.clone());
        let mut best: f64 = 0.0;
        for i in 0..5 {
            for j in 0..5 {
                if i == j {
                    continue;
                }
                let (mut dot, mut ni, mut nj) = (0.0, 0.0, 0.0);
                for k in 0..8 {
                    dot += x[(k, i)] * x[(k, j)];
                    ni += x[(k, i)] * x[(k, i)];
                    nj += x[(k, j)] * x[(k, j)];
                }
                best = best.max(dot.abs() / (ni.sqrt() * nj.sqrt()));
            }
        }
        assert!((mutual_coherence(&d).unwrap() - best).abs() < 1e-14);
    }

    #[test]
    fn pairs_match_closed_form() {
        let x = wavy(6, 8, 2.1);
        let d = data(x.clone());
        let xn = (0..8).map(|j| x.column(j).norm()).fold(0.0, f64::max);
        let mut best = f64::INFINITY;
        for i in 0..8 {
            for j in (i + 1)..8 {
                let a = x.column(i).norm_squared();
                let b = x.column(j).norm_squared();
                let c = x.column(i).dot(&x.column(j));
                // smaller eigenvalue of [[a, c], [c, b]]
                let lmin = 0.5 * (a + b) - (0.25 * (a - b) * (a - b) + c * c).sqrt();
                best = best.min(lmin.max(0.0).sqrt() / xn);
            }
        }
        assert!((sparse_singular_value(&d, 2).unwrap() - best).abs() < 1e-10);
    }

    #[test]
    fn zero_column_is_named() {
        let mut x = wavy(4, 3, 1.0);
        x.column_mut(2).fill(0.0);
        assert_eq!(mutual_coherence(&data(x)), Err(VbError::ZeroColumn(2)));
    }

    #[test]
    fn cap_is_enforced() {
        let d = data(wavy(10, 30, 1.0));
        assert!(matches!(
            sparse_singular_value_capped(&d, 3, 100),
            Err(VbError::EnumerationCap { needed: 4060, cap: 100 })
        ));
    }

    #[test]
    fn combinations_are_complete() {
        assert_eq!(binomial(8, 3), 56);
        let mut seen = 0;
        for first in 0..=5 {
            let mut c: Vec<usize> = (first..first + 3).collect();
            loop {
                seen += 1;
                if !next_tail(&mut c, 8) {
                    break;
                }
            }
        }
        assert_eq!(seen, 56);
    }

    #[test]
    fn equicorrelated_gram() {
        // columns with unit norm and pairwise inner product r
        let r: f64 = 0.3;
        let p = 4;
        let mut c = DMatrix::from_element(p, p, r);
        c.fill_diagonal(1.0);
        let l = c.cholesky().unwrap().l();
        let d = data(l.transpose());
        assert!((mutual_coherence(&d).unwrap() - r).abs() < 1e-12);
        let rep = compatibility_report(&d, 3).unwrap();
        for v in &rep.phi_tilde {
            // smallest eigenvalue of an s x s equicorrelation block is 1 - r
            let expect = if v.s == 1 { 1.0 } else { (1.0 - r).sqrt() };
            assert!((v.value - expect).abs() < 1e-10);
            assert!(v.value * v.value >= 1.0 - v.s as f64 * r - 1e-9);
        }
    }
}
