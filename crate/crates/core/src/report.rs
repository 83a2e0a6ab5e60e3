//! Batch report: per-ticker dependence analysis against a benchmark.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::diagnostics::{residual_battery, StabilityPath, TestResult};
use crate::entropy::{differential_entropy, normal_entropy};
use crate::error::{Error, Result};
use crate::ingest::{
    align_prices, describe, load_prices, log_returns, PriceSeries, ReturnSeries, SummaryStats,
};
use crate::market_model::{fit_market_model, risk_decomposition, RiskFree};
use crate::mutinfo::{
    default_corrected_mi_bins, default_mi_bins, entropy_decomposition, global_correlation,
    mutual_information_adaptive, mutual_information_grid_corrected, PartitionTree,
};
use crate::portfolio::{diversification_curve, DiversificationCurve};

/// Rounds to 12 significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return if x == 0.0 { 0.0 } else { x };
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

/// Text form of [`round_sig`] used in every CSV output.
pub fn format_number(x: f64) -> String {
    format!("{:?}", round_sig(x))
}

fn round_json(v: &mut serde_json::Value) {
    match v {
        serde_json::Value::Number(n) => {
            if !(n.is_i64() || n.is_u64()) {
                if let Some(f) = n.as_f64() {
                    if let Some(r) = serde_json::Number::from_f64(round_sig(f)) {
                        *n = r;
                    }
                }
            }
        }
        serde_json::Value::Array(a) => a.iter_mut().for_each(round_json),
        serde_json::Value::Object(o) => o.values_mut().for_each(round_json),
        _ => {}
    }
}

/// Pretty JSON with every float rounded to 12 significant digits.
pub fn to_rounded_json<T: Serialize>(value: &T) -> Result<String> {
    let mut v = serde_json::to_value(value)?;
    round_json(&mut v);
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub alpha: f64,
    pub beta: f64,
    pub r: f64,
    pub r_squared: f64,
    pub systematic_risk: f64,
    pub specific_risk: f64,
    pub total_variance: f64,
    pub systematic_share: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StabilityFlags {
    pub cusum_crossed: bool,
    pub cusum_sq_crossed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DependenceReport {
    pub ticker: String,
    pub n: usize,
    pub summary: SummaryStats,
    /// univariate histogram entropy with the configured scheme
    pub h_empirical: f64,
    /// entropy of a normal with the sample standard deviation
    pub h_normal: f64,
    pub ln_sigma: f64,
    /// marginal entropy of the stock on the shared equiprobable grid
    pub h_grid: f64,
    pub mi_adaptive: f64,
    pub mi_grid: f64,
    /// `h_grid − mi_grid`
    pub h_conditional: f64,
    /// global correlation from `mi_adaptive`
    pub lambda: f64,
    pub lambda_grid: f64,
    /// bias-corrected grid MI on its own finer grid
    pub mi_grid_corrected: f64,
    pub lambda_grid_corrected: f64,
    /// `|r|`
    pub lambda_normal: f64,
    pub grid_bins: usize,
    pub corrected_grid_bins: usize,
    pub adaptive_cells: usize,
    pub fit: FitSummary,
    pub diagnostics: Vec<TestResult>,
    pub stability: StabilityFlags,
}

/// By-products kept out of the JSON report and written only on request.
#[derive(Debug, Clone)]
pub struct TickerExtras {
    pub tree: PartitionTree,
    pub cusum: StabilityPath,
    pub cusum_sq: StabilityPath,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum TickerOutcome {
    Ok(Box<DependenceReport>),
    Failed { ticker: String, error: String },
}

impl TickerOutcome {
    pub fn ticker(&self) -> &str {
        match self {
            TickerOutcome::Ok(r) => &r.ticker,
            TickerOutcome::Failed { ticker, .. } => ticker,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub benchmark: String,
    pub seed: u64,
    pub tickers: Vec<TickerOutcome>,
    pub diversification: Option<DiversificationCurve>,
}

/// Full analysis of one stock against the benchmark; both series must be
/// date-aligned log returns.
pub fn analyze_returns(
    stock: &ReturnSeries,
    bench: &ReturnSeries,
    cfg: &RunConfig,
) -> Result<(DependenceReport, TickerExtras)> {
    let x = &stock.values;
    let b = &bench.values;
    let n = x.len();
    let summary = describe(x)?;
    let h = differential_entropy(x, &cfg.histogram_spec())?;
    let h_normal = normal_entropy(summary.std_dev)?;

    let bins = cfg.mi.grid_bins.unwrap_or_else(|| default_mi_bins(n));
    let dec = entropy_decomposition(x, b, bins)?;
    let (adaptive, tree) = mutual_information_adaptive(x, b, &cfg.adaptive_options())?;
    let cbins = cfg
        .mi
        .corrected_grid_bins
        .unwrap_or_else(|| default_corrected_mi_bins(n));
    let corrected = mutual_information_grid_corrected(x, b, cbins)?;

    let rf = cfg.risk_free.map_or(RiskFree::Zero, RiskFree::Constant);
    let fit = fit_market_model(stock, bench, &rf)?;
    let split = risk_decomposition(&fit)?;
    let diag = match &rf {
        RiskFree::Constant(c) => {
            let xs: Vec<f64> = x.iter().map(|v| v - c).collect();
            let bs: Vec<f64> = b.iter().map(|v| v - c).collect();
            residual_battery(&fit.residuals, &xs, &bs, &cfg.diagnostic_options())?
        }
        _ => residual_battery(&fit.residuals, x, b, &cfg.diagnostic_options())?,
    };

    let report = DependenceReport {
        ticker: stock.ticker.clone(),
        n,
        summary,
        h_empirical: h.value,
        h_normal,
        ln_sigma: summary.std_dev.ln(),
        h_grid: dec.h_x,
        mi_adaptive: adaptive.value,
        mi_grid: dec.mi,
        h_conditional: dec.h_cond,
        lambda: global_correlation(adaptive.value)?,
        lambda_grid: global_correlation(dec.mi)?,
        mi_grid_corrected: corrected.value,
        lambda_grid_corrected: global_correlation(corrected.value)?,
        lambda_normal: fit.r.abs(),
        grid_bins: dec.bins,
        corrected_grid_bins: cbins,
        adaptive_cells: adaptive.cells,
        fit: FitSummary {
            alpha: fit.alpha,
            beta: fit.beta,
            r: fit.r,
            r_squared: fit.r_squared,
            systematic_risk: split.systematic,
            specific_risk: split.specific,
            total_variance: split.total,
            systematic_share: split.systematic_share,
        },
        diagnostics: diag.tests,
        stability: StabilityFlags {
            cusum_crossed: diag.cusum.crossed,
            cusum_sq_crossed: diag.cusum_sq.crossed,
        },
    };
    Ok((
        report,
        TickerExtras {
            tree,
            cusum: diag.cusum,
            cusum_sq: diag.cusum_sq,
        },
    ))
}

/// Aligns a stock's prices with the benchmark's dates and returns both log-return series.
pub fn aligned_returns(
    stock: &PriceSeries,
    bench: &PriceSeries,
) -> Result<(ReturnSeries, ReturnSeries)> {
    let aligned = align_prices(&[stock, bench]);
    Ok((log_returns(&aligned[0])?, log_returns(&aligned[1])?))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunSummary {
    pub output_dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub analyzed: usize,
    pub failed: usize,
    pub warnings: usize,
}

/// Everything computed by a run, before anything is written.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub report: ReportFile,
    pub extras: Vec<(String, TickerExtras)>,
    pub warnings: Vec<String>,
}

fn split_benchmark(
    prices: Vec<PriceSeries>,
    benchmark: &str,
) -> Result<(PriceSeries, Vec<PriceSeries>)> {
    let mut bench = None;
    let mut stocks = Vec::new();
    for p in prices {
        if p.ticker == benchmark {
            bench = Some(p);
        } else {
            stocks.push(p);
        }
    }
    let bench = bench.ok_or_else(|| {
        Error::Config(format!(
            "benchmark ticker {benchmark} is not present in the input"
        ))
    })?;
    stocks.sort_by(|a, b| a.ticker.cmp(&b.ticker));
    Ok((bench, stocks))
}

/// Runs the analysis on already-loaded prices.
pub fn compute_report(prices: Vec<PriceSeries>, cfg: &RunConfig) -> Result<RunResult> {
    cfg.validate()?;
    let benchmark = cfg
        .benchmark
        .clone()
        .ok_or_else(|| Error::Config("no benchmark ticker configured".into()))?;
    let (bench, stocks) = split_benchmark(prices, &benchmark)?;
    if stocks.is_empty() {
        return Err(Error::Config(
            "input holds no ticker besides the benchmark".into(),
        ));
    }
    let mut warnings = Vec::new();

    let analyzed: Vec<(TickerOutcome, Option<TickerExtras>)> = stocks
        .par_iter()
        .map(|s| {
            let result = aligned_returns(s, &bench).and_then(|(x, b)| analyze_returns(&x, &b, cfg));
            match result {
                Ok((r, e)) => (TickerOutcome::Ok(Box::new(r)), Some(e)),
                Err(e) => (
                    TickerOutcome::Failed {
                        ticker: s.ticker.clone(),
                        error: e.to_string(),
                    },
                    None,
                ),
            }
        })
        .collect();

    let mut tickers = Vec::with_capacity(analyzed.len());
    let mut extras = Vec::new();
    for (outcome, extra) in analyzed {
        if let TickerOutcome::Failed { ticker, error } = &outcome {
            warnings.push(format!("{ticker}: {error}"));
        }
        if let Some(e) = extra {
            extras.push((outcome.ticker().to_string(), e));
        }
        tickers.push(outcome);
    }

    let diversification = if cfg.diversification.enabled {
        let refs: Vec<&PriceSeries> = stocks.iter().collect();
        let curve = align_prices(&refs)
            .iter()
            .map(log_returns)
            .collect::<Result<Vec<_>>>()
            .and_then(|universe| {
                let max_k = cfg.diversification.max_k.unwrap_or(universe.len());
                diversification_curve(
                    &universe,
                    max_k,
                    cfg.diversification.replications,
                    cfg.seed,
                    &cfg.histogram_spec(),
                )
            });
        match curve {
            Ok(c) => Some(c),
            Err(e) => {
                warnings.push(format!("diversification: {e}"));
                None
            }
        }
    } else {
        None
    };

    Ok(RunResult {
        report: ReportFile {
            benchmark,
            seed: cfg.seed,
            tickers,
            diversification,
        },
        extras,
        warnings,
    })
}

fn write_file(path: &Path, contents: &[u8], files: &mut Vec<PathBuf>) -> Result<()> {
    fs::write(path, contents)?;
    files.push(path.to_path_buf());
    Ok(())
}

fn csv_bytes(header: &[&str], rows: Vec<Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn ok_reports(report: &ReportFile) -> impl Iterator<Item = &DependenceReport> {
    report.tickers.iter().filter_map(|t| match t {
        TickerOutcome::Ok(r) => Some(r.as_ref()),
        TickerOutcome::Failed { .. } => None,
    })
}

pub fn fig1_csv(report: &ReportFile) -> Result<Vec<u8>> {
    let rows = ok_reports(report)
        .map(|r| {
            vec![
                r.ticker.clone(),
                format_number(r.ln_sigma),
                format_number(r.h_empirical),
                format_number(r.h_normal),
            ]
        })
        .collect();
    csv_bytes(&["ticker", "ln_sigma", "h_empirical", "h_normal"], rows)
}

pub fn fig2_csv(report: &ReportFile) -> Result<Vec<u8>> {
    let rows = ok_reports(report)
        .map(|r| {
            vec![
                r.ticker.clone(),
                format_number(r.fit.systematic_risk),
                format_number(r.mi_adaptive),
                format_number(r.fit.specific_risk),
                format_number(r.h_conditional),
            ]
        })
        .collect();
    csv_bytes(
        &[
            "ticker",
            "systematic_risk",
            "mi_adaptive",
            "specific_risk",
            "h_conditional",
        ],
        rows,
    )
}

/// Largest excursion of a stability path relative to its band half-width;
/// above 1 exactly when the path leaves the band.
fn band_ratio(p: &StabilityPath) -> f64 {
    p.path
        .iter()
        .zip(p.lower_bound.iter().zip(&p.upper_bound))
        .map(|(v, (lo, hi))| {
            let mid = 0.5 * (lo + hi);
            (v - mid).abs() / (0.5 * (hi - lo))
        })
        .fold(0.0, f64::max)
}

pub fn diagnostics_csv(report: &ReportFile, extras: &[(String, TickerExtras)]) -> Result<Vec<u8>> {
    let mut rows = Vec::new();
    for r in ok_reports(report) {
        for t in &r.diagnostics {
            rows.push(vec![
                r.ticker.clone(),
                t.name.as_str().to_string(),
                format_number(t.statistic),
                format_number(t.p_value),
                t.dof
                    .iter()
                    .map(|d| d.to_string())
                    .collect::<Vec<_>>()
                    .join(" "),
                t.reject_at_5pct.to_string(),
            ]);
        }
        if let Some((_, e)) = extras.iter().find(|(t, _)| *t == r.ticker) {
            for (name, p) in [("cusum", &e.cusum), ("cusum_sq", &e.cusum_sq)] {
                rows.push(vec![
                    r.ticker.clone(),
                    name.to_string(),
                    format_number(band_ratio(p)),
                    String::new(),
                    String::new(),
                    p.crossed.to_string(),
                ]);
            }
        }
    }
    csv_bytes(
        &[
            "ticker",
            "test",
            "statistic",
            "p_value",
            "dof",
            "reject_at_5pct",
        ],
        rows,
    )
}

fn safe_name(ticker: &str) -> String {
    ticker
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Writes all outputs of a computed run into `dir`.
pub fn write_outputs(result: &RunResult, cfg: &RunConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    let report = &result.report;
    write_file(
        &dir.join("report.json"),
        to_rounded_json(report)?.as_bytes(),
        &mut files,
    )?;
    write_file(&dir.join("fig1.csv"), &fig1_csv(report)?, &mut files)?;
    write_file(&dir.join("fig2.csv"), &fig2_csv(report)?, &mut files)?;
    write_file(
        &dir.join("diagnostics.csv"),
        &diagnostics_csv(report, &result.extras)?,
        &mut files,
    )?;
    if let Some(curve) = &report.diversification {
        let mut buf = Vec::new();
        curve.write_csv(&mut buf)?;
        write_file(&dir.join("diversification.csv"), &buf, &mut files)?;
    }
    if cfg.diagnostics.dump_paths {
        let sub = dir.join("paths");
        fs::create_dir_all(&sub)?;
        for (t, e) in &result.extras {
            for (suffix, p) in [("cusum", &e.cusum), ("cusum_sq", &e.cusum_sq)] {
                let mut buf = Vec::new();
                p.write_csv(&mut buf)?;
                write_file(
                    &sub.join(format!("{}_{suffix}.csv", safe_name(t))),
                    &buf,
                    &mut files,
                )?;
            }
        }
    }
    if cfg.mi.dump_trees {
        let sub = dir.join("trees");
        fs::create_dir_all(&sub)?;
        for (t, e) in &result.extras {
            let mut json = to_rounded_json(&e.tree)?;
            if !json.ends_with('\n') {
                json.push('\n');
            }
            write_file(
                &sub.join(format!("{}.json", safe_name(t))),
                json.as_bytes(),
                &mut files,
            )?;
        }
    }
    Ok(files)
}

/// Loads the configured input, analyses every ticker and writes the report
/// files. Nothing is written when the input or configuration is unusable.
pub fn run_full_report(cfg: &RunConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let input = cfg
        .input
        .as_ref()
        .ok_or_else(|| Error::Config("no input file configured".into()))?;
    let prices = load_prices(input, cfg.layout)?;
    let result = compute_report(prices, cfg)?;
    for w in &result.warnings {
        warn!("{w}");
    }
    let dir = cfg.resolved_output_dir();
    let files = write_outputs(&result, cfg, &dir)?;
    let failed = result
        .report
        .tickers
        .iter()
        .filter(|t| matches!(t, TickerOutcome::Failed { .. }))
        .count();
    info!("wrote {} files to {}", files.len(), dir.display());
    Ok(RunSummary {
        output_dir: dir,
        files,
        analyzed: result.report.tickers.len() - failed,
        failed,
        warnings: result.warnings.len(),
    })
}

/// Writes `report` as rounded JSON to any writer.
pub fn write_report_json<W: Write>(report: &ReportFile, mut w: W) -> Result<()> {
    w.write_all(to_rounded_json(report)?.as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_prices, GeneratorConfig, GeneratorKind};

    fn universe_prices(n_assets: usize, n: usize) -> Vec<PriceSeries> {
        let cfg = GeneratorConfig::new(GeneratorKind::OneFactorUniverse, n, 5)
            .with("n_assets", n_assets as f64)
            .with("beta", 0.2)
            .with("beta_max", 2.0);
        generate_prices(&cfg).unwrap()
    }

    fn cfg() -> RunConfig {
        RunConfig {
            benchmark: Some("MKT".into()),
            ..RunConfig::default()
        }
    }

    #[test]
    fn rounding() {
        assert_eq!(round_sig(0.1 + 0.2), 0.3);
        assert_eq!(round_sig(123_456_789.123_456_789), 123_456_789.123);
        assert_eq!(format_number(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_number(2.0), "2.0");
        assert_eq!(format_number(-0.0), "0.0");
        assert_eq!(format_number(1.234_567_890_123_4e-20), "1.23456789012e-20");
    }

    #[test]
    fn report_invariants() {
        let result = compute_report(universe_prices(4, 600), &cfg()).unwrap();
        assert_eq!(result.report.tickers.len(), 4);
        let names: Vec<_> = result.report.tickers.iter().map(|t| t.ticker()).collect();
        assert_eq!(names, ["A01", "A02", "A03", "A04"]);
        for r in ok_reports(&result.report) {
            assert!((r.lambda_normal - r.fit.r.abs()).abs() < 1e-9);
            assert!((r.h_grid - r.mi_grid - r.h_conditional).abs() < 1e-12);
            assert_eq!(r.diagnostics.len(), 3);
        }
        let curve = result.report.diversification.as_ref().unwrap();
        assert_eq!(curve.k, vec![1, 2, 3, 4]);
    }

    #[test]
    fn missing_benchmark_is_config_error() {
        let mut c = cfg();
        c.benchmark = Some("PSI20".into());
        let err = compute_report(universe_prices(2, 200), &c).unwrap_err();
        assert!(err.is_config());
    }

    #[test]
    fn one_bad_ticker_does_not_stop_the_run() {
        let mut prices = universe_prices(2, 200);
        let flat =
            PriceSeries::new("FLAT", prices[0].dates.clone(), vec![50.0; prices[0].len()]).unwrap();
        prices.push(flat);
        let mut c = cfg();
        c.diversification.enabled = false;
        let result = compute_report(prices, &c).unwrap();
        assert_eq!(result.report.tickers.len(), 3);
        assert!(matches!(
            result.report.tickers[2],
            TickerOutcome::Failed { .. }
        ));
        assert_eq!(result.warnings.len(), 1);
        let csv = String::from_utf8(fig1_csv(&result.report).unwrap()).unwrap();
        assert_eq!(csv.lines().count(), 3);
    }

    #[test]
    fn stock_dates_follow_benchmark() {
        let mut prices = universe_prices(1, 200);
        // drop ten benchmark dates
        let keep: Vec<String> = prices[0].dates.iter().skip(10).cloned().collect();
        prices[0] = prices[0].restrict_to(&keep);
        let (x, b) = aligned_returns(&prices[1], &prices[0]).unwrap();
        assert_eq!(x.dates, b.dates);
        assert_eq!(x.len(), 190);
    }

    #[test]
    fn json_round_trips() {
        let mut c = cfg();
        c.diversification.replications = 3;
        let result = compute_report(universe_prices(2, 300), &c).unwrap();
        let text = to_rounded_json(&result.report).unwrap();
        let back: ReportFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back.tickers.len(), 2);
        assert!(text.contains("\"status\": \"ok\""));
    }
}
