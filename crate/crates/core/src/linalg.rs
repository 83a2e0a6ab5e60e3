//! Least squares with an intercept by modified Gram–Schmidt.
//!
//! Regressors and response are centered first, which absorbs the intercept.
//! Columns are orthogonalized without normalization, so a single regressor
//! reduces to `b = Σ x̃ỹ / Σ x̃²` and an exact linear relation leaves
//! residuals that are exactly zero.

use log::warn;

use crate::error::{Error, Result};

pub(crate) const CONDITION_WARN: f64 = 1e8;

#[derive(Debug, Clone)]
pub(crate) struct OlsFit {
    pub intercept: f64,
    pub coef: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Rough condition estimate of the column-scaled centered design.
    pub condition: f64,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn centered(v: &[f64]) -> (f64, Vec<f64>) {
    if v.windows(2).all(|w| w[0] == w[1]) {
        return (v.first().copied().unwrap_or(0.0), vec![0.0; v.len()]);
    }
    let m = mean(v);
    (m, v.iter().map(|x| x - m).collect())
}

pub(crate) fn ols_with_intercept(columns: &[&[f64]], y: &[f64]) -> Result<OlsFit> {
    let n = y.len();
    let p = columns.len();
    if columns.iter().any(|c| c.len() != n) {
        return Err(Error::Alignment(
            "regressor and response lengths differ".into(),
        ));
    }
    if n <= p + 1 {
        return Err(Error::insufficient("least squares", p + 2, n));
    }
    let (y_mean, mut resid) = centered(y);
    let mut means = Vec::with_capacity(p);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(p);
    let mut norms_sq = Vec::with_capacity(p);
    // unit upper-triangular R: x̃_j = v_j + Σ_{i<j} r[i][j] v_i
    let mut r = vec![vec![0.0; p]; p];
    let mut min_ratio = f64::INFINITY;
    for (j, col) in columns.iter().enumerate() {
        let (m, mut v) = centered(col);
        means.push(m);
        let raw = dot(&v, &v);
        if raw == 0.0 {
            return Err(Error::Degenerate(format!(
                "regressor {j} has zero variance"
            )));
        }
        for i in 0..j {
            let c = dot(&basis[i], &v) / norms_sq[i];
            r[i][j] = c;
            for (vk, bk) in v.iter_mut().zip(&basis[i]) {
                *vk -= c * bk;
            }
        }
        let nsq = dot(&v, &v);
        let ratio = (nsq / raw).sqrt();
        if !(ratio > 1e-13) {
            return Err(Error::Degenerate(format!(
                "regressor {j} is collinear with earlier regressors"
            )));
        }
        min_ratio = min_ratio.min(ratio);
        norms_sq.push(nsq);
        basis.push(v);
    }
    let mut gamma = vec![0.0; p];
    for j in 0..p {
        let c = dot(&basis[j], &resid) / norms_sq[j];
        gamma[j] = c;
        for (e, b) in resid.iter_mut().zip(&basis[j]) {
            *e -= c * b;
        }
    }
    let mut coef = vec![0.0; p];
    for j in (0..p).rev() {
        let mut s = gamma[j];
        for k in j + 1..p {
            s -= r[j][k] * coef[k];
        }
        coef[j] = s;
    }
    let condition = (p as f64).sqrt() / min_ratio;
    if condition > CONDITION_WARN {
        warn!("least squares design is ill-conditioned (estimate {condition:.3e})");
    }
    let intercept = y_mean - coef.iter().zip(&means).map(|(b, m)| b * m).sum::<f64>();
    Ok(OlsFit {
        intercept,
        coef,
        residuals: resid,
        condition,
    })
}
