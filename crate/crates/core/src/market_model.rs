//! Market-model regression and the systematic/specific variance split.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{check_aligned, ReturnSeries};
use crate::linalg::ols_with_intercept;

pub const MIN_OBSERVATIONS: usize = 30;

/// Risk-free rate subtracted from both stock and market returns.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum RiskFree {
    #[default]
    Zero,
    Constant(f64),
    Series(ReturnSeries),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketModelFit {
    pub alpha: f64,
    pub beta: f64,
    pub residuals: Vec<f64>,
    pub r: f64,
    pub r_squared: f64,
    /// benchmark variance, divisor n
    pub sigma_m_sq: f64,
    /// `β² σ_m²`
    pub systematic_risk: f64,
    /// mean squared residual
    pub specific_risk: f64,
    /// stock variance, divisor n
    pub total_variance: f64,
    pub condition: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskDecomposition {
    pub systematic: f64,
    pub specific: f64,
    pub total: f64,
    pub systematic_share: f64,
}

fn population_variance(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n
}

fn mean_square(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64
}

pub fn fit_market_model(
    stock: &ReturnSeries,
    market: &ReturnSeries,
    risk_free: &RiskFree,
) -> Result<MarketModelFit> {
    check_aligned(stock, market)?;
    let rf: Option<Vec<f64>> = match risk_free {
        RiskFree::Zero => None,
        RiskFree::Constant(c) => Some(vec![*c; stock.len()]),
        RiskFree::Series(s) => {
            check_aligned(stock, s)?;
            Some(s.values.clone())
        }
    };
    fit_market_model_values(&stock.values, &market.values, rf.as_deref())
}

/// Slice form of [`fit_market_model`]; inputs are assumed date-aligned.
pub fn fit_market_model_values(
    stock: &[f64],
    market: &[f64],
    risk_free: Option<&[f64]>,
) -> Result<MarketModelFit> {
    let n = stock.len();
    if market.len() != n || risk_free.is_some_and(|r| r.len() != n) {
        return Err(Error::Alignment(format!(
            "market model inputs differ in length: stock {n}, market {}",
            market.len()
        )));
    }
    if n < MIN_OBSERVATIONS {
        return Err(Error::insufficient("market model", MIN_OBSERVATIONS, n));
    }
    let (y, x): (Vec<f64>, Vec<f64>) = match risk_free {
        None => (stock.to_vec(), market.to_vec()),
        Some(rf) => (
            stock.iter().zip(rf).map(|(s, f)| s - f).collect(),
            market.iter().zip(rf).map(|(m, f)| m - f).collect(),
        ),
    };
    let ols = ols_with_intercept(&[&x], &y).map_err(|e| match e {
        Error::Degenerate(_) => {
            Error::Degenerate("market excess returns have zero variance".into())
        }
        other => other,
    })?;
    let beta = ols.coef[0];
    let sigma_m_sq = population_variance(&x);
    let total_variance = population_variance(&y);
    let systematic_risk = beta * beta * sigma_m_sq;
    let specific_risk = mean_square(&ols.residuals);
    let r = if total_variance > 0.0 {
        (beta * sigma_m_sq.sqrt() / total_variance.sqrt()).clamp(-1.0, 1.0)
    } else {
        0.0
    };
    Ok(MarketModelFit {
        alpha: ols.intercept,
        beta,
        residuals: ols.residuals,
        r,
        r_squared: r * r,
        sigma_m_sq,
        systematic_risk,
        specific_risk,
        total_variance,
        condition: ols.condition,
    })
}

/// Recomputes both components from the stored fit and checks that they add up
/// to the total variance.
pub fn risk_decomposition(fit: &MarketModelFit) -> Result<RiskDecomposition> {
    let systematic = fit.beta * fit.beta * fit.sigma_m_sq;
    let specific = mean_square(&fit.residuals);
    let total = fit.total_variance;
    let residual = total - systematic - specific;
    if residual.abs() > 1e-12 * total || (total == 0.0 && residual != 0.0) {
        return Err(Error::Consistency(format!(
            "variance decomposition residual {residual:e} for total {total:e}"
        )));
    }
    Ok(RiskDecomposition {
        systematic,
        specific,
        total,
        systematic_share: if total > 0.0 { systematic / total } else { 0.0 },
    })
}
