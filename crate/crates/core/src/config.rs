//! Run configuration read from TOML.
//!
//! Every key is optional. Values resolve as command-line flag, then file,
//! then built-in default; the output directory additionally falls back to
//! `ENTRISK_OUTPUT_DIR` before the default.
//!
//! ```toml
//! input = "prices.csv"
//! layout = "wide"
//! benchmark = "PSI20"
//! output_dir = "out"
//! seed = 42
//!
//! [histogram]
//! scheme = "equidistant"
//! bins = 12
//!
//! [mi]
//! alpha = 0.05
//!
//! [diagnostics]
//! arch_lags = 5
//!
//! [diversification]
//! replications = 200
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::diagnostics::{DiagnosticOptions, DEFAULT_ARCH_LAGS};
use crate::entropy::HistogramSpec;
use crate::error::{Error, Result};
use crate::histogram::BinScheme;
use crate::ingest::CsvLayout;
use crate::mutinfo::AdaptiveOptions;
use crate::portfolio::DEFAULT_REPLICATIONS;

pub const OUTPUT_DIR_ENV: &str = "ENTRISK_OUTPUT_DIR";
pub const DEFAULT_OUTPUT_DIR: &str = "entrisk-report";
pub const DEFAULT_SEED: u64 = 20_020_101;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HistogramConfig {
    pub scheme: BinScheme,
    /// `None` selects `⌈n^{1/3}⌉`
    pub bins: Option<usize>,
    pub miller_madow: bool,
}

impl Default for HistogramConfig {
    fn default() -> Self {
        Self {
            scheme: BinScheme::Equidistant,
            bins: None,
            miller_madow: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MiConfig {
    pub alpha: f64,
    pub min_count: usize,
    pub max_depth: usize,
    pub lookahead: usize,
    /// equiprobable bins per axis for the grid estimator; `None` selects `⌈n^{1/3}⌉`
    pub grid_bins: Option<usize>,
    /// bins per axis for the bias-corrected grid estimator; `None` selects `⌈√(n/16)⌉`
    pub corrected_grid_bins: Option<usize>,
    /// write each adaptive partition to `trees/<ticker>.json`
    pub dump_trees: bool,
}

impl Default for MiConfig {
    fn default() -> Self {
        let a = AdaptiveOptions::default();
        Self {
            alpha: a.alpha,
            min_count: a.min_count,
            max_depth: a.max_depth,
            lookahead: a.lookahead,
            grid_bins: None,
            corrected_grid_bins: None,
            dump_trees: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsConfig {
    /// `None` selects `⌈ln n⌉`
    pub ljung_box_lags: Option<usize>,
    pub arch_lags: usize,
    /// write CUSUM and CUSUM-Q paths to `paths/<ticker>_{cusum,cusum_sq}.csv`
    pub dump_paths: bool,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self {
            ljung_box_lags: None,
            arch_lags: DEFAULT_ARCH_LAGS,
            dump_paths: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiversificationConfig {
    pub enabled: bool,
    /// `None` selects the number of non-benchmark tickers
    pub max_k: Option<usize>,
    pub replications: usize,
}

impl Default for DiversificationConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            max_k: None,
            replications: DEFAULT_REPLICATIONS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub layout: CsvLayout,
    pub benchmark: Option<String>,
    pub output_dir: Option<PathBuf>,
    pub seed: u64,
    /// constant per-period risk-free rate; 0 when absent
    pub risk_free: Option<f64>,
    pub histogram: HistogramConfig,
    pub mi: MiConfig,
    pub diagnostics: DiagnosticsConfig,
    pub diversification: DiversificationConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            input: None,
            layout: CsvLayout::Wide,
            benchmark: None,
            output_dir: None,
            seed: DEFAULT_SEED,
            risk_free: None,
            histogram: HistogramConfig::default(),
            mi: MiConfig::default(),
            diagnostics: DiagnosticsConfig::default(),
            diversification: DiversificationConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a config file; relative `input` and `output_dir` paths are
    /// resolved against the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.input, &mut cfg.output_dir].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if let Some(b) = self.histogram.bins {
            if b < 2 {
                return bad(format!("histogram.bins must be at least 2, got {b}"));
            }
        }
        for (key, v) in [
            ("grid_bins", self.mi.grid_bins),
            ("corrected_grid_bins", self.mi.corrected_grid_bins),
        ] {
            if let Some(b) = v.filter(|&b| b < 2) {
                return bad(format!("mi.{key} must be at least 2, got {b}"));
            }
        }
        self.adaptive_options().validate()?;
        if self.diagnostics.arch_lags == 0 || self.diagnostics.ljung_box_lags == Some(0) {
            return bad("diagnostic lags must be positive".into());
        }
        if self.diversification.replications == 0 {
            return bad("diversification.replications must be at least 1".into());
        }
        if self.diversification.max_k == Some(0) {
            return bad("diversification.max_k must be at least 1".into());
        }
        if self.risk_free.is_some_and(|r| !r.is_finite()) {
            return bad("risk_free must be finite".into());
        }
        Ok(())
    }

    pub fn histogram_spec(&self) -> HistogramSpec {
        HistogramSpec {
            scheme: self.histogram.scheme,
            bins: self.histogram.bins,
            miller_madow: self.histogram.miller_madow,
        }
    }

    pub fn adaptive_options(&self) -> AdaptiveOptions {
        AdaptiveOptions {
            alpha: self.mi.alpha,
            min_count: self.mi.min_count,
            max_depth: self.mi.max_depth,
            lookahead: self.mi.lookahead,
        }
    }

    pub fn diagnostic_options(&self) -> DiagnosticOptions {
        DiagnosticOptions {
            ljung_box_lags: self.diagnostics.ljung_box_lags,
            arch_lags: self.diagnostics.arch_lags,
        }
    }

    /// Flag or file value, then `ENTRISK_OUTPUT_DIR`, then the default.
    pub fn resolved_output_dir(&self) -> PathBuf {
        self.output_dir
            .clone()
            .or_else(|| {
                std::env::var_os(OUTPUT_DIR_ENV)
                    .filter(|v| !v.is_empty())
                    .map(PathBuf::from)
            })
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
    }
}
