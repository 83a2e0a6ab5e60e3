//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::config::RunConfig;
use crate::diagnostics::{
    cusum, cusum_sq, default_ljung_box_lags, engle_arch, jarque_bera, ljung_box,
    recursive_residuals, StabilityPath, TestResult,
};
use crate::entropy::{differential_entropy, normal_entropy};
use crate::error::{Error, Result};
use crate::histogram::BinScheme;
use crate::ingest::{describe, load_prices, log_returns, CsvLayout, PriceSeries, ReturnSeries};
use crate::market_model::{fit_market_model, risk_decomposition, RiskFree};
use crate::mutinfo::{
    default_corrected_mi_bins, default_mi_bins, global_correlation, mutual_information_adaptive,
    mutual_information_grid, mutual_information_grid_corrected, normal_mutual_information,
};
use crate::portfolio::diversification_curve;
use crate::report::{aligned_returns, run_full_report, to_rounded_json};
use crate::stats::pearson;
use crate::synth::{write_fixture, GeneratorConfig, GeneratorKind};

#[derive(Debug, Parser)]
#[command(
    name = "entrisk",
    version,
    about = "Entropy, mutual information and market-model risk measures for return series",
    long_about = None,
    after_help = "Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.\n\
                  The output directory defaults to $ENTRISK_OUTPUT_DIR, then ./entrisk-report."
)]
pub struct Cli {
    /// TOML run configuration; flags override its values
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Seed for every random draw (diversification, synthetic data)
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Histogram cells for univariate entropy
    #[arg(long, global = true)]
    pub bins: Option<usize>,
    /// Significance level of the adaptive partition's uniformity test
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Output directory
    #[arg(long, global = true, value_name = "DIR")]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Price CSV (wide or long layout)
    #[arg(long, value_name = "PATH")]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub layout: Option<CsvLayout>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Full report: report.json, fig1.csv, fig2.csv, diagnostics.csv, diversification.csv
    Analyze {
        #[command(flatten)]
        input: InputArgs,
        /// Benchmark (market proxy) ticker
        #[arg(long)]
        benchmark: Option<String>,
        /// Skip the random-portfolio experiment
        #[arg(long)]
        no_diversification: bool,
        /// Random portfolios per size
        #[arg(long)]
        replications: Option<usize>,
        /// Also write CUSUM and CUSUM-Q paths under paths/
        #[arg(long)]
        dump_paths: bool,
        /// Also write adaptive partitions under trees/
        #[arg(long)]
        dump_trees: bool,
    },
    /// Differential entropy of one ticker's log returns (JSON on stdout)
    Entropy {
        #[command(flatten)]
        input: InputArgs,
        /// Ticker to analyse
        #[arg(long)]
        col: String,
        /// Overrides the configured binning scheme
        #[arg(long, value_enum)]
        scheme: Option<BinScheme>,
        /// Add the Miller–Madow bias correction
        #[arg(long)]
        miller_madow: bool,
    },
    /// Mutual information and global correlation of two tickers (JSON on stdout)
    Mi {
        #[command(flatten)]
        input: InputArgs,
        /// Two tickers, comma separated
        #[arg(long, value_delimiter = ',', num_args = 1, required = true)]
        cols: Vec<String>,
        /// Equiprobable bins per axis for the plug-in grid estimator
        #[arg(long)]
        grid_bins: Option<usize>,
        /// Write the adaptive partition tree as JSON
        #[arg(long, value_name = "PATH")]
        tree: Option<PathBuf>,
    },
    /// Market-model fit and variance decomposition (JSON on stdout)
    MarketModel {
        #[command(flatten)]
        input: InputArgs,
        /// Stock ticker (dependent variable)
        #[arg(long)]
        stock: String,
        /// Market proxy ticker
        #[arg(long)]
        market: String,
        /// Constant per-period risk-free rate
        #[arg(long)]
        risk_free: Option<f64>,
    },
    /// Residual test battery and stability paths (JSON on stdout)
    Diagnostics {
        #[command(flatten)]
        input: InputArgs,
        /// Stock ticker (dependent variable)
        #[arg(long)]
        stock: String,
        /// Market proxy ticker
        #[arg(long)]
        market: String,
        /// Ljung-Box lags; ⌈ln n⌉ when absent
        #[arg(long)]
        lb_lags: Option<usize>,
        /// Lagged squares in the ARCH-LM regression
        #[arg(long)]
        arch_lags: Option<usize>,
        /// Write cusum.csv and cusum_sq.csv into the output directory
        #[arg(long)]
        dump_paths: bool,
    },
    /// Random-portfolio diversification curve; writes diversification.csv
    Diversify {
        #[command(flatten)]
        input: InputArgs,
        /// Tickers left out of the universe (the benchmark, typically)
        #[arg(long, value_delimiter = ',')]
        exclude: Vec<String>,
        /// Largest portfolio size; the whole universe when absent
        #[arg(long)]
        max_k: Option<usize>,
        /// Random portfolios per size
        #[arg(long)]
        replications: Option<usize>,
    },
    /// Synthetic price fixture in the wide CSV layout
    Synth {
        #[arg(long, value_enum)]
        kind: GeneratorKind,
        /// Number of returns
        #[arg(long)]
        n: usize,
        /// Generator parameter, repeatable
        #[arg(long = "param", value_name = "KEY=VALUE")]
        params: Vec<String>,
        /// Destination file; stdout when absent
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
}

fn base_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(b) = cli.bins {
        cfg.histogram.bins = Some(b);
    }
    if let Some(a) = cli.alpha {
        cfg.mi.alpha = a;
    }
    if let Some(o) = &cli.output {
        cfg.output_dir = Some(o.clone());
    }
    Ok(cfg)
}

fn apply_input(cfg: &mut RunConfig, input: &InputArgs) {
    if let Some(p) = &input.input {
        cfg.input = Some(p.clone());
    }
    if let Some(l) = input.layout {
        cfg.layout = l;
    }
}

fn load(cfg: &RunConfig) -> Result<Vec<PriceSeries>> {
    let path = cfg.input.as_ref().ok_or_else(|| {
        Error::Config("no input file: pass --input or set input in the config".into())
    })?;
    load_prices(path, cfg.layout)
}

fn find<'a>(prices: &'a [PriceSeries], ticker: &str) -> Result<&'a PriceSeries> {
    prices
        .iter()
        .find(|p| p.ticker == ticker)
        .ok_or_else(|| Error::UnknownTicker(ticker.to_string()))
}

fn pair(prices: &[PriceSeries], a: &str, b: &str) -> Result<(ReturnSeries, ReturnSeries)> {
    aligned_returns(find(prices, a)?, find(prices, b)?)
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct EntropyOutput {
    ticker: String,
    n: usize,
    scheme: BinScheme,
    bins: usize,
    h_empirical: f64,
    h_normal: f64,
    ln_sigma: f64,
}

/// JSON printed by `mi`; every field equals the library value bit for bit.
#[derive(Debug, Serialize)]
pub struct MiOutput {
    pub x: String,
    pub y: String,
    pub n: usize,
    pub mi_adaptive: f64,
    pub lambda: f64,
    pub adaptive_cells: usize,
    pub mi_grid: f64,
    pub lambda_grid: f64,
    pub grid_bins: usize,
    pub mi_grid_corrected: f64,
    pub lambda_grid_corrected: f64,
    pub corrected_grid_bins: usize,
    pub r: f64,
    pub mi_normal: f64,
    pub lambda_normal: f64,
}

#[derive(Debug, Serialize)]
struct MarketModelOutput {
    stock: String,
    market: String,
    n: usize,
    alpha: f64,
    beta: f64,
    r: f64,
    r_squared: f64,
    sigma_m_sq: f64,
    systematic_risk: f64,
    specific_risk: f64,
    total_variance: f64,
    systematic_share: f64,
}

#[derive(Debug, Serialize)]
struct StabilityOutput {
    crossed: bool,
    length: usize,
}

#[derive(Debug, Serialize)]
struct DiagnosticsOutput {
    stock: String,
    market: String,
    tests: Vec<TestResult>,
    cusum: StabilityOutput,
    cusum_sq: StabilityOutput,
}

fn stability(p: &StabilityPath) -> StabilityOutput {
    StabilityOutput {
        crossed: p.crossed,
        length: p.path.len(),
    }
}

fn parse_param(raw: &str) -> Result<(String, f64)> {
    let (k, v) = raw
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("parameter {raw:?} is not KEY=VALUE")))?;
    let v: f64 = v
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("parameter {k} has non-numeric value {v:?}")))?;
    Ok((k.trim().to_string(), v))
}

fn write_path_csv(dir: &Path, name: &str, p: &StabilityPath) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    p.write_csv(std::fs::File::create(dir.join(name))?)
}

fn execute(cli: Cli) -> Result<()> {
    let mut cfg = base_config(&cli)?;
    match cli.command {
        Command::Analyze {
            input,
            benchmark,
            no_diversification,
            replications,
            dump_paths,
            dump_trees,
        } => {
            apply_input(&mut cfg, &input);
            if let Some(b) = benchmark {
                cfg.benchmark = Some(b);
            }
            if no_diversification {
                cfg.diversification.enabled = false;
            }
            if let Some(r) = replications {
                cfg.diversification.replications = r;
            }
            cfg.diagnostics.dump_paths |= dump_paths;
            cfg.mi.dump_trees |= dump_trees;
            let summary = run_full_report(&cfg)?;
            eprintln!(
                "analyzed {} tickers ({} failed, {} warnings); {} files in {}",
                summary.analyzed,
                summary.failed,
                summary.warnings,
                summary.files.len(),
                summary.output_dir.display()
            );
        }
        Command::Entropy {
            input,
            col,
            scheme,
            miller_madow,
        } => {
            apply_input(&mut cfg, &input);
            cfg.validate()?;
            let mut spec = cfg.histogram_spec();
            if let Some(s) = scheme {
                spec.scheme = s;
            }
            spec.miller_madow |= miller_madow;
            let prices = load(&cfg)?;
            let r = log_returns(find(&prices, &col)?)?;
            let h = differential_entropy(&r.values, &spec)?;
            let sd = describe(&r.values)?.std_dev;
            print_json(&EntropyOutput {
                ticker: col,
                n: r.len(),
                scheme: spec.scheme,
                bins: h.bins_used,
                h_empirical: h.value,
                h_normal: normal_entropy(sd)?,
                ln_sigma: sd.ln(),
            })?;
        }
        Command::Mi {
            input,
            cols,
            grid_bins,
            tree,
        } => {
            apply_input(&mut cfg, &input);
            if let Some(b) = grid_bins {
                cfg.mi.grid_bins = Some(b);
            }
            cfg.validate()?;
            if cols.len() != 2 {
                return Err(Error::Config(format!(
                    "--cols takes exactly two tickers, got {}",
                    cols.len()
                )));
            }
            let prices = load(&cfg)?;
            let (x, y) = pair(&prices, &cols[0], &cols[1])?;
            let out = mi_output(&x, &y, &cfg)?;
            if let Some(path) = tree {
                let (_, t) =
                    mutual_information_adaptive(&x.values, &y.values, &cfg.adaptive_options())?;
                std::fs::write(path, t.to_json()? + "\n")?;
            }
            print_json(&out)?;
        }
        Command::MarketModel {
            input,
            stock,
            market,
            risk_free,
        } => {
            apply_input(&mut cfg, &input);
            let prices = load(&cfg)?;
            let (x, m) = pair(&prices, &stock, &market)?;
            let rf = risk_free
                .or(cfg.risk_free)
                .map_or(RiskFree::Zero, RiskFree::Constant);
            let fit = fit_market_model(&x, &m, &rf)?;
            let d = risk_decomposition(&fit)?;
            print_json(&MarketModelOutput {
                stock,
                market,
                n: x.len(),
                alpha: fit.alpha,
                beta: fit.beta,
                r: fit.r,
                r_squared: fit.r_squared,
                sigma_m_sq: fit.sigma_m_sq,
                systematic_risk: d.systematic,
                specific_risk: d.specific,
                total_variance: d.total,
                systematic_share: d.systematic_share,
            })?;
        }
        Command::Diagnostics {
            input,
            stock,
            market,
            lb_lags,
            arch_lags,
            dump_paths,
        } => {
            apply_input(&mut cfg, &input);
            let prices = load(&cfg)?;
            let (x, m) = pair(&prices, &stock, &market)?;
            let fit = fit_market_model(&x, &m, &RiskFree::Zero)?;
            let e = &fit.residuals;
            let lb = lb_lags
                .or(cfg.diagnostics.ljung_box_lags)
                .unwrap_or_else(|| default_ljung_box_lags(e.len()));
            let arch = arch_lags.unwrap_or(cfg.diagnostics.arch_lags);
            let w = recursive_residuals(&x, &m)?;
            let (c, cq) = (cusum(&w)?, cusum_sq(&w)?);
            if dump_paths || cfg.diagnostics.dump_paths {
                let dir = cfg.resolved_output_dir();
                write_path_csv(&dir, "cusum.csv", &c)?;
                write_path_csv(&dir, "cusum_sq.csv", &cq)?;
            }
            print_json(&DiagnosticsOutput {
                stock,
                market,
                tests: vec![jarque_bera(e)?, ljung_box(e, lb)?, engle_arch(e, arch)?],
                cusum: stability(&c),
                cusum_sq: stability(&cq),
            })?;
        }
        Command::Diversify {
            input,
            exclude,
            max_k,
            replications,
        } => {
            apply_input(&mut cfg, &input);
            if let Some(r) = replications {
                cfg.diversification.replications = r;
            }
            if max_k.is_some() {
                cfg.diversification.max_k = max_k;
            }
            cfg.validate()?;
            let prices = load(&cfg)?;
            for t in &exclude {
                find(&prices, t)?;
            }
            let keep: Vec<&PriceSeries> = prices
                .iter()
                .filter(|p| {
                    !exclude.contains(&p.ticker) && cfg.benchmark.as_ref() != Some(&p.ticker)
                })
                .collect();
            let universe = crate::ingest::align_prices(&keep)
                .iter()
                .map(log_returns)
                .collect::<Result<Vec<_>>>()?;
            let k = cfg.diversification.max_k.unwrap_or(universe.len());
            let curve = diversification_curve(
                &universe,
                k,
                cfg.diversification.replications,
                cfg.seed,
                &cfg.histogram_spec(),
            )?;
            let dir = cfg.resolved_output_dir();
            std::fs::create_dir_all(&dir)?;
            curve.write_csv(std::fs::File::create(dir.join("diversification.csv"))?)?;
            print!("{}", to_rounded_json(&curve)?);
        }
        Command::Synth {
            kind,
            n,
            params,
            out,
        } => {
            let mut g = GeneratorConfig::new(kind, n, cfg.seed);
            for p in &params {
                let (k, v) = parse_param(p)?;
                g.params.insert(k, v);
            }
            match out {
                Some(path) => {
                    let mut buf = Vec::new();
                    write_fixture(&g, &mut buf)?;
                    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                        std::fs::create_dir_all(parent)?;
                    }
                    std::fs::write(path, buf)?;
                }
                None => write_fixture(&g, std::io::stdout().lock())?,
            }
        }
    }
    Ok(())
}

/// The values printed by `mi` for two aligned return series.
pub fn mi_output(x: &ReturnSeries, y: &ReturnSeries, cfg: &RunConfig) -> Result<MiOutput> {
    let (a, _) = mutual_information_adaptive(&x.values, &y.values, &cfg.adaptive_options())?;
    let bins = cfg.mi.grid_bins.unwrap_or_else(|| default_mi_bins(x.len()));
    let g = mutual_information_grid(&x.values, &y.values, bins)?;
    let cbins = cfg
        .mi
        .corrected_grid_bins
        .unwrap_or_else(|| default_corrected_mi_bins(x.len()));
    let c = mutual_information_grid_corrected(&x.values, &y.values, cbins)?;
    let r = pearson(&x.values, &y.values).unwrap_or(0.0);
    Ok(MiOutput {
        x: x.ticker.clone(),
        y: y.ticker.clone(),
        n: x.len(),
        mi_adaptive: a.value,
        lambda: global_correlation(a.value)?,
        adaptive_cells: a.cells,
        mi_grid: g.value,
        lambda_grid: global_correlation(g.value)?,
        grid_bins: bins,
        mi_grid_corrected: c.value,
        lambda_grid_corrected: global_correlation(c.value)?,
        corrected_grid_bins: cbins,
        r,
        mi_normal: normal_mutual_information(r)?,
        lambda_normal: r.abs(),
    })
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                2
            } else {
                1
            }
        }
    }
}
