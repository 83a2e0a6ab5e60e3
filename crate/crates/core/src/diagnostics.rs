//! Residual diagnostics: normality, serial correlation, ARCH effects and
//! parameter stability of the market-model regression.

use std::io::Write;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{check_aligned, describe, ReturnSeries};
use crate::linalg::ols_with_intercept;
use crate::stats::chi_square_sf;

pub const SIGNIFICANCE: f64 = 0.05;
pub const JARQUE_BERA_MIN_N: usize = 20;
pub const DEFAULT_ARCH_LAGS: usize = 5;
/// Regression parameters (intercept and slope) of the market model.
pub const MODEL_PARAMS: usize = 2;

/// Brown–Durbin–Evans constant for the 5% CUSUM lines.
const CUSUM_A: f64 = 0.948;
/// Two-sided 5% Kolmogorov–Smirnov asymptotic critical value.
const KS_5PCT: f64 = 1.3581;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestName {
    JarqueBera,
    LjungBox,
    EngleArch,
}

impl TestName {
    pub fn as_str(self) -> &'static str {
        match self {
            TestName::JarqueBera => "jarque_bera",
            TestName::LjungBox => "ljung_box",
            TestName::EngleArch => "engle_arch",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub name: TestName,
    pub statistic: f64,
    pub p_value: f64,
    /// chi-square degrees of freedom of the reference distribution
    pub dof: Vec<usize>,
    pub reject_at_5pct: bool,
}

impl TestResult {
    fn chi_square(name: TestName, statistic: f64, dof: usize) -> Self {
        let p_value = chi_square_sf(statistic, dof).clamp(0.0, 1.0);
        Self {
            name,
            statistic,
            p_value,
            dof: vec![dof],
            reject_at_5pct: p_value < SIGNIFICANCE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StabilityKind {
    #[serde(rename = "CUSUM")]
    Cusum,
    #[serde(rename = "CUSUM_Q")]
    CusumQ,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityPath {
    pub name: StabilityKind,
    /// number of recursive residuals accumulated, starting at 0
    pub t_index: Vec<usize>,
    pub path: Vec<f64>,
    pub lower_bound: Vec<f64>,
    pub upper_bound: Vec<f64>,
    pub crossed: bool,
}

impl StabilityPath {
    fn new(name: StabilityKind, path: Vec<f64>, lower: Vec<f64>, upper: Vec<f64>) -> Self {
        let crossed = path
            .iter()
            .zip(lower.iter().zip(&upper))
            .any(|(p, (lo, hi))| p < lo || p > hi);
        Self {
            name,
            t_index: (0..path.len()).collect(),
            path,
            lower_bound: lower,
            upper_bound: upper,
            crossed,
        }
    }

    /// Plot-ready CSV with header `t,path,lower,upper`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        w.write_record(["t", "path", "lower", "upper"])?;
        for i in 0..self.path.len() {
            w.write_record([
                self.t_index[i].to_string(),
                self.path[i].to_string(),
                self.lower_bound[i].to_string(),
                self.upper_bound[i].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn demeaned(x: &[f64]) -> Vec<f64> {
    let m = x.iter().sum::<f64>() / x.len() as f64;
    x.iter().map(|v| v - m).collect()
}

pub fn jarque_bera(x: &[f64]) -> Result<TestResult> {
    if x.len() < JARQUE_BERA_MIN_N {
        return Err(Error::insufficient(
            "Jarque-Bera",
            JARQUE_BERA_MIN_N,
            x.len(),
        ));
    }
    let s = describe(x)?;
    let (Some(skew), Some(kurt)) = (s.skewness, s.excess_kurtosis) else {
        return Err(Error::Degenerate(
            "Jarque-Bera on a zero-variance sample".into(),
        ));
    };
    let jb = s.n as f64 / 6.0 * (skew * skew + kurt * kurt / 4.0);
    Ok(TestResult::chi_square(TestName::JarqueBera, jb, 2))
}

/// `⌈ln n⌉`, at least 1.
pub fn default_ljung_box_lags(n: usize) -> usize {
    ((n as f64).ln().ceil() as usize).max(1)
}

fn check_lags(what: &str, lags: usize, n: usize, needed: usize) -> Result<()> {
    if lags == 0 {
        return Err(Error::Domain(format!("{what}: lags must be positive")));
    }
    if n < needed {
        return Err(Error::insufficient(what, needed, n));
    }
    Ok(())
}

/// Sample autocorrelations `ρ̂₁..ρ̂_h` with the full-sample denominator.
pub fn autocorrelations(x: &[f64], lags: usize) -> Result<Vec<f64>> {
    let d = demeaned(x);
    let denom: f64 = d.iter().map(|v| v * v).sum();
    if denom == 0.0 {
        return Err(Error::Degenerate(
            "autocorrelation of a constant series".into(),
        ));
    }
    Ok((1..=lags)
        .map(|k| d[k..].iter().zip(&d).map(|(a, b)| a * b).sum::<f64>() / denom)
        .collect())
}

pub fn ljung_box(x: &[f64], lags: usize) -> Result<TestResult> {
    let n = x.len();
    check_lags("Ljung-Box", lags, n, 3 * lags + 1)?;
    let rho = autocorrelations(x, lags)?;
    let nf = n as f64;
    let q = nf
        * (nf + 2.0)
        * rho
            .iter()
            .enumerate()
            .map(|(i, r)| r * r / (nf - (i + 1) as f64))
            .sum::<f64>();
    Ok(TestResult::chi_square(TestName::LjungBox, q, lags))
}

/// Engle's LM test: `n_aux · R²` of `x̃_t²` regressed on its own `lags` lags,
/// where `x̃` is `x` minus its mean.
pub fn engle_arch(x: &[f64], lags: usize) -> Result<TestResult> {
    let n = x.len();
    check_lags("Engle ARCH-LM", lags, n, 3 * lags + 2)?;
    let e: Vec<f64> = demeaned(x).into_iter().map(|v| v * v).collect();
    let y = &e[lags..];
    let n_aux = y.len();
    let y_mean = y.iter().sum::<f64>() / n_aux as f64;
    let sst: f64 = y.iter().map(|v| (v - y_mean) * (v - y_mean)).sum();
    let r2 = if sst == 0.0 || y.windows(2).all(|w| w[0] == w[1]) {
        0.0
    } else {
        let columns: Vec<&[f64]> = (1..=lags).map(|k| &e[lags - k..n - k]).collect();
        let fit = ols_with_intercept(&columns, y)?;
        let ssr: f64 = fit.residuals.iter().map(|r| r * r).sum();
        (1.0 - ssr / sst).clamp(0.0, 1.0)
    };
    Ok(TestResult::chi_square(
        TestName::EngleArch,
        n_aux as f64 * r2,
        lags,
    ))
}

pub fn recursive_residuals(stock: &ReturnSeries, market: &ReturnSeries) -> Result<Vec<f64>> {
    check_aligned(stock, market)?;
    recursive_residuals_values(&stock.values, &market.values)
}

/// Standardized one-step-ahead prediction errors of the market-model regression.
///
/// The fit on the first `t` observations is updated in O(1) per step from
/// running means and centered cross products. The recursion starts at the
/// first `t ≥ 2` whose regressor window has positive spread; the output
/// therefore has `n − t₀` entries.
pub fn recursive_residuals_values(stock: &[f64], market: &[f64]) -> Result<Vec<f64>> {
    let n = stock.len();
    if market.len() != n {
        return Err(Error::Alignment(format!(
            "recursive residuals: {n} stock vs {} market observations",
            market.len()
        )));
    }
    let needed = MODEL_PARAMS + 10;
    if n < needed {
        return Err(Error::insufficient("recursive residuals", needed, n));
    }
    let (mut mx, mut my, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    let mut w = Vec::with_capacity(n - MODEL_PARAMS);
    let scale = {
        let m = market.iter().sum::<f64>() / n as f64;
        market.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n as f64
    };
    let mut delayed = 0usize;
    for t in 0..n {
        let (x, y) = (market[t], stock[t]);
        if t >= MODEL_PARAMS {
            if sxx > 1e-14 * scale * t as f64 {
                let b = sxy / sxx;
                let e = (y - my) - b * (x - mx);
                let f = 1.0 + 1.0 / t as f64 + (x - mx) * (x - mx) / sxx;
                w.push(e / f.sqrt());
            } else {
                delayed += 1;
            }
        }
        let tf = (t + 1) as f64;
        let dx = x - mx;
        let dy = y - my;
        mx += dx / tf;
        my += dy / tf;
        sxx += dx * (x - mx);
        sxy += dx * (y - my);
    }
    if delayed > 0 {
        warn!("recursive residuals: regressor window singular for the first {delayed} steps");
    }
    if w.len() < 2 {
        return Err(Error::Degenerate("market regressor has no spread".into()));
    }
    Ok(w)
}

fn require_path_len(what: &str, w: &[f64]) -> Result<()> {
    if w.len() < 2 {
        return Err(Error::insufficient(what, 2, w.len()));
    }
    Ok(())
}

/// Cumulated recursive residuals scaled by their sample standard deviation,
/// with the 5% lines `±0.948 (√m + 2r/√m)`.
pub fn cusum(w: &[f64]) -> Result<StabilityPath> {
    require_path_len("CUSUM", w)?;
    let m = w.len();
    let mf = m as f64;
    let root = mf.sqrt();
    let upper: Vec<f64> = (0..=m)
        .map(|r| CUSUM_A * (root + 2.0 * r as f64 / root))
        .collect();
    let lower: Vec<f64> = upper.iter().map(|u| -u).collect();
    if w.iter().all(|&v| v == 0.0) {
        return Ok(StabilityPath::new(
            StabilityKind::Cusum,
            vec![0.0; m + 1],
            lower,
            upper,
        ));
    }
    let mean = w.iter().sum::<f64>() / mf;
    let var = w.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (mf - 1.0);
    if !(var > 0.0) || w.windows(2).all(|p| p[0] == p[1]) {
        return Err(Error::Degenerate(
            "recursive residuals have zero spread".into(),
        ));
    }
    let sd = var.sqrt();
    let mut path = Vec::with_capacity(m + 1);
    let mut acc = 0.0;
    path.push(0.0);
    for v in w {
        acc += v;
        path.push(acc / sd);
    }
    Ok(StabilityPath::new(StabilityKind::Cusum, path, lower, upper))
}

/// 5% half-width of the CUSUM-of-squares band for `m` recursive residuals.
///
/// The centered path behaves like a uniform empirical process on
/// `n' = m/2 − 1` points, so the two-sided Kolmogorov–Smirnov critical value
/// applies, here with Stephens' finite-sample correction.
pub fn cusum_sq_critical(m: usize) -> f64 {
    let np = (m as f64 / 2.0 - 1.0).max(1.0);
    let s = np.sqrt();
    KS_5PCT / (s + 0.12 + 0.11 / s)
}

pub fn cusum_sq(w: &[f64]) -> Result<StabilityPath> {
    require_path_len("CUSUM-Q", w)?;
    let m = w.len();
    let mut cum = Vec::with_capacity(m + 1);
    let mut acc = 0.0;
    cum.push(0.0);
    for v in w {
        acc += v * v;
        cum.push(acc);
    }
    if acc == 0.0 {
        return Err(Error::Degenerate("recursive residuals are all zero".into()));
    }
    let path: Vec<f64> = cum.iter().map(|c| c / acc).collect();
    let c0 = cusum_sq_critical(m);
    let line: Vec<f64> = (0..=m).map(|r| r as f64 / m as f64).collect();
    let lower = line.iter().map(|l| l - c0).collect();
    let upper = line.iter().map(|l| l + c0).collect();
    Ok(StabilityPath::new(
        StabilityKind::CusumQ,
        path,
        lower,
        upper,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticOptions {
    /// `None` selects `⌈ln n⌉`
    pub ljung_box_lags: Option<usize>,
    pub arch_lags: usize,
}

impl Default for DiagnosticOptions {
    fn default() -> Self {
        Self {
            ljung_box_lags: None,
            arch_lags: DEFAULT_ARCH_LAGS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub tests: Vec<TestResult>,
    pub cusum: StabilityPath,
    pub cusum_sq: StabilityPath,
}

/// Full battery on market-model residuals plus stability paths from the
/// recursive residuals of `stock` on `market`.
pub fn residual_battery(
    residuals: &[f64],
    stock: &[f64],
    market: &[f64],
    opts: &DiagnosticOptions,
) -> Result<Diagnostics> {
    let lb_lags = opts
        .ljung_box_lags
        .unwrap_or_else(|| default_ljung_box_lags(residuals.len()));
    let tests = vec![
        jarque_bera(residuals)?,
        ljung_box(residuals, lb_lags)?,
        engle_arch(residuals, opts.arch_lags)?,
    ];
    let w = recursive_residuals_values(stock, market)?;
    Ok(Diagnostics {
        tests,
        cusum: cusum(&w)?,
        cusum_sq: cusum_sq(&w)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;
    use proptest::prelude::*;

    fn normals(seed: u64, n: usize) -> Vec<f64> {
        let mut s = Stream::new(seed);
        (0..n).map(|_| s.normal()).collect()
    }

    #[test]
    fn jarque_bera_two_point() {
        let x: Vec<f64> = (0..5000)
            .map(|i| if i % 2 == 0 { -1.0 } else { 1.0 })
            .collect();
        let t = jarque_bera(&x).unwrap();
        assert!((t.statistic - 5000.0 / 6.0).abs() < 1e-9);
        assert!(t.reject_at_5pct);
        assert_eq!(t.dof, vec![2]);
    }

    #[test]
    fn jarque_bera_normal_and_heavy_tails() {
        assert!(!jarque_bera(&normals(1, 5000)).unwrap().reject_at_5pct);
        let mut s = Stream::new(2);
        let t: Vec<f64> = (0..5000).map(|_| s.student_t(4.0)).collect();
        assert!(jarque_bera(&t).unwrap().reject_at_5pct);
        assert!(matches!(jarque_bera(&[1.0; 30]), Err(Error::Degenerate(_))));
        assert!(matches!(
            jarque_bera(&[1.0; 10]),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn ljung_box_orthogonal_sequence() {
        let x = [1.0, 0.0, -1.0, 0.0];
        let t = ljung_box(&x, 1).unwrap();
        assert_eq!(t.statistic, 0.0);
        assert_eq!(t.p_value, 1.0);
        assert!(!t.reject_at_5pct);
    }

    #[test]
    fn ljung_box_hand_computed() {
        // ρ̂₁ = −0.25 for [1, 2, 3, 4] after demeaning: Σ d_t d_{t−1} = −1.25, Σ d² = 5
        let t = ljung_box(&[1.0, 2.0, 3.0, 4.0], 1).unwrap();
        let want = 4.0 * 6.0 * 0.0625 / 3.0;
        assert!((t.statistic - want).abs() < 1e-14);
    }

    #[test]
    fn ljung_box_detects_ar1() {
        let e = normals(3, 5000);
        let mut x = vec![0.0; 5000];
        for t in 1..5000 {
            x[t] = 0.5 * x[t - 1] + e[t];
        }
        assert!(ljung_box(&x, 10).unwrap().reject_at_5pct);
        assert!(matches!(ljung_box(&x, 0), Err(Error::Domain(_))));
        assert!(matches!(
            ljung_box(&x[..30], 10),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn arch_constant_magnitude() {
        let x: Vec<f64> = (0..100)
            .map(|i| if i % 2 == 0 { 0.3 } else { -0.3 })
            .collect();
        let t = engle_arch(&x, 5).unwrap();
        assert_eq!(t.statistic, 0.0);
        assert_eq!(t.p_value, 1.0);
    }

    #[test]
    fn arch_detects_clustering() {
        let e = normals(4, 5000);
        let mut x = vec![0.0; 5000];
        let mut prev: f64 = 0.0;
        for t in 0..5000 {
            let h = 1.0 + 0.5 * prev * prev;
            x[t] = h.sqrt() * e[t];
            prev = x[t];
        }
        assert!(engle_arch(&x, 5).unwrap().reject_at_5pct);
    }

    #[test]
    fn recursive_residuals_exact_fit_are_zero() {
        let m = normals(5, 200);
        let y: Vec<f64> = m.iter().map(|v| 2.0 * v).collect();
        let w = recursive_residuals_values(&y, &m).unwrap();
        assert_eq!(w.len(), 198);
        assert!(w.iter().all(|&v| v == 0.0));
        let y: Vec<f64> = m.iter().map(|v| 0.3 + 2.0 * v).collect();
        let w = recursive_residuals_values(&y, &m).unwrap();
        assert!(w.iter().all(|v| v.abs() < 1e-12));
    }

    /// Brute-force refit for each window.
    #[test]
    fn recursive_residuals_match_refits() {
        let m = normals(6, 40);
        let e = normals(7, 40);
        let y: Vec<f64> = m
            .iter()
            .zip(&e)
            .map(|(a, b)| 0.1 + 1.3 * a + 0.5 * b)
            .collect();
        let w = recursive_residuals_values(&y, &m).unwrap();
        for t in 3..40 {
            let fit = ols_with_intercept(&[&m[..t]], &y[..t]).unwrap();
            let mx = m[..t].iter().sum::<f64>() / t as f64;
            let sxx: f64 = m[..t].iter().map(|v| (v - mx) * (v - mx)).sum();
            let pred = fit.intercept + fit.coef[0] * m[t];
            let f = 1.0 + 1.0 / t as f64 + (m[t] - mx).powi(2) / sxx;
            let want = (y[t] - pred) / f.sqrt();
            assert!((w[t - 2] - want).abs() < 1e-10, "t={t}");
        }
    }

    #[test]
    fn recursive_residuals_inflate_after_beta_break() {
        let n = 2000;
        let m: Vec<f64> = normals(8, n).iter().map(|v| 0.02 * v).collect();
        let e = normals(9, n);
        let y: Vec<f64> = (0..n)
            .map(|t| if t < n / 2 { 1.0 } else { 2.0 } * m[t] + 0.005 * e[t])
            .collect();
        let w = recursive_residuals_values(&y, &m).unwrap();
        let half = w.len() / 2;
        let first = w[..half].iter().map(|v| v.abs()).sum::<f64>() / half as f64;
        let second = w[half..].iter().map(|v| v.abs()).sum::<f64>() / (w.len() - half) as f64;
        assert!(second > 2.0 * first, "{first} {second}");
    }

    #[test]
    fn singular_start_is_skipped() {
        let mut m = normals(10, 50);
        m[0] = 0.5;
        m[1] = 0.5;
        m[2] = 0.5;
        let y = normals(11, 50);
        let w = recursive_residuals_values(&y, &m).unwrap();
        assert_eq!(w.len(), 46);
    }

    #[test]
    fn cusum_edge_cases() {
        let flat = cusum(&[0.0; 20]).unwrap();
        assert!(flat.path.iter().all(|&p| p == 0.0));
        assert!(!flat.crossed);
        assert_eq!(flat.path.len(), 21);
        assert!(matches!(cusum(&[0.7; 20]), Err(Error::Degenerate(_))));
        assert!((flat.upper_bound[0] - 0.948 * 20f64.sqrt()).abs() < 1e-12);
        assert!((flat.upper_bound[20] - 3.0 * 0.948 * 20f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn cusum_detects_mean_shift() {
        let mut w = normals(12, 1000);
        for v in &mut w[500..] {
            *v += 1.0;
        }
        assert!(cusum(&w).unwrap().crossed);
    }

    #[test]
    fn cusum_sq_equal_magnitudes_is_linear() {
        let w: Vec<f64> = (0..64)
            .map(|i| if i % 3 == 0 { -1.0 } else { 1.0 })
            .collect();
        let p = cusum_sq(&w).unwrap();
        for (r, v) in p.path.iter().enumerate() {
            assert_eq!(*v, r as f64 / 64.0);
        }
        assert!(!p.crossed);
        assert!(matches!(cusum_sq(&[0.0; 10]), Err(Error::Degenerate(_))));
    }

    #[test]
    fn cusum_sq_detects_variance_break() {
        let mut w = normals(13, 1000);
        for v in &mut w[500..] {
            *v *= 2.0;
        }
        assert!(cusum_sq(&w).unwrap().crossed);
    }

    #[test]
    fn critical_value_matches_kolmogorov_limit() {
        // large n: c₀ √n' → 1.3581
        let m = 2_000_002;
        let np = (m as f64 / 2.0 - 1.0).sqrt();
        assert!((cusum_sq_critical(m) * np - KS_5PCT).abs() < 1e-3);
        assert!(cusum_sq_critical(100) > cusum_sq_critical(1000));
    }

    #[test]
    fn stability_csv() {
        let p = cusum_sq(&[1.0, -1.0, 2.0, 0.5]).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,path,lower,upper\n0,0,"));
        assert_eq!(text.lines().count(), 6);
    }

    #[test]
    fn battery_runs() {
        let m: Vec<f64> = normals(14, 500).iter().map(|v| 0.02 * v).collect();
        let e = normals(15, 500);
        let y: Vec<f64> = m.iter().zip(&e).map(|(a, b)| 1.1 * a + 0.01 * b).collect();
        let fit = crate::market_model::fit_market_model_values(&y, &m, None).unwrap();
        let d = residual_battery(&fit.residuals, &y, &m, &DiagnosticOptions::default()).unwrap();
        assert_eq!(d.tests.len(), 3);
        assert_eq!(d.tests[1].dof, vec![7]);
        assert_eq!(d.cusum.path.len(), 499);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn scale_invariant_statistics(seed in 0u64..100_000, c in 0.01f64..100.0) {
            let x = normals(seed, 300);
            let y: Vec<f64> = x.iter().map(|v| c * v).collect();
            let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(1.0);
            prop_assert!(close(jarque_bera(&x).unwrap().statistic, jarque_bera(&y).unwrap().statistic));
            prop_assert!(close(ljung_box(&x, 5).unwrap().statistic, ljung_box(&y, 5).unwrap().statistic));
            let a = cusum_sq(&x).unwrap();
            let b = cusum_sq(&y).unwrap();
            for (p, q) in a.path.iter().zip(&b.path) {
                prop_assert!((p - q).abs() < 1e-9);
            }
        }

        #[test]
        fn p_values_and_paths_well_formed(seed in 0u64..100_000, n in 40usize..400) {
            let x = normals(seed, n);
            for t in [jarque_bera(&x).unwrap(), ljung_box(&x, 3).unwrap(), engle_arch(&x, 3).unwrap()] {
                prop_assert!((0.0..=1.0).contains(&t.p_value));
                prop_assert_eq!(t.reject_at_5pct, t.p_value < 0.05);
            }
            let q = cusum_sq(&x).unwrap();
            prop_assert_eq!(q.path[0], 0.0);
            prop_assert_eq!(*q.path.last().unwrap(), 1.0);
            prop_assert!(q.path.windows(2).all(|w| w[0] <= w[1]));
            for p in [&q, &cusum(&x).unwrap()] {
                prop_assert_eq!(p.path.len(), p.lower_bound.len());
                prop_assert_eq!(p.path.len(), p.upper_bound.len());
                let outside = p.path.iter().zip(p.lower_bound.iter().zip(&p.upper_bound))
                    .any(|(v, (lo, hi))| v < lo || v > hi);
                prop_assert_eq!(p.crossed, outside);
            }
        }
    }
}
