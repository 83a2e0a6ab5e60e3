//! Seeded synthetic return generators used as test fixtures.
//!
//! Every generator draws from [`Stream`] substreams keyed by `(seed, index)`,
//! so output depends only on the configuration. Series are labelled with
//! consecutive weekdays starting 2000-01-04; the price path written by
//! [`generate_prices`] starts at 100 on 2000-01-03.

use std::collections::BTreeMap;
use std::io::Write;

use chrono::{Datelike, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{prices_from_returns, write_wide_csv, PriceSeries, ReturnSeries};
use crate::rng::Stream;

pub const ARCH_BURN_IN: usize = 100;
const START_PRICE: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum GeneratorKind {
    Gaussian,
    BivariateGaussian,
    StudentT,
    OneFactorUniverse,
    Ar1,
    Arch1,
    BetaBreak,
}

impl GeneratorKind {
    /// Accepted parameter names with their defaults (`None` = required).
    pub fn parameters(self) -> &'static [(&'static str, Option<f64>)] {
        match self {
            GeneratorKind::Gaussian => &[("mu", Some(0.0)), ("sigma", Some(1.0))],
            GeneratorKind::BivariateGaussian => &[
                ("rho", Some(0.0)),
                ("sigma_x", Some(1.0)),
                ("sigma_y", Some(1.0)),
            ],
            GeneratorKind::StudentT => &[
                ("nu", None),
                ("scale", Some(1.0)),
                ("standardize", Some(0.0)),
            ],
            GeneratorKind::OneFactorUniverse => &[
                ("n_assets", Some(20.0)),
                ("beta", Some(1.0)),
                ("beta_max", None),
                ("sigma_m", Some(0.01)),
                ("mu_m", Some(0.0)),
                ("alpha", Some(0.0)),
                ("sigma_eps", Some(0.01)),
                ("sigma_eps_max", None),
                ("eps_stride", Some(1.0)),
            ],
            GeneratorKind::Ar1 => &[("phi", None), ("mu", Some(0.0)), ("sigma", Some(1.0))],
            GeneratorKind::Arch1 => &[("alpha0", Some(1.0)), ("alpha1", None)],
            GeneratorKind::BetaBreak => &[
                ("beta", Some(1.0)),
                ("beta_after", Some(2.0)),
                ("break_point", Some(0.5)),
                ("sigma_m", Some(0.01)),
                ("sigma_eps", Some(0.01)),
                ("sigma_eps_after", None),
                ("mean_shift", Some(0.0)),
                ("alpha", Some(0.0)),
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub kind: GeneratorKind,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    pub n: usize,
    pub seed: u64,
}

impl GeneratorConfig {
    pub fn new(kind: GeneratorKind, n: usize, seed: u64) -> Self {
        Self {
            kind,
            params: BTreeMap::new(),
            n,
            seed,
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }
}

struct Params<'a> {
    kind: GeneratorKind,
    map: &'a BTreeMap<String, f64>,
}

impl Params<'_> {
    fn get(&self, key: &str) -> Result<f64> {
        let default = self
            .kind
            .parameters()
            .iter()
            .find(|(k, _)| *k == key)
            .and_then(|(_, d)| *d);
        match self.map.get(key).copied().or(default) {
            Some(v) if v.is_finite() => Ok(v),
            Some(v) => Err(Error::Config(format!("parameter {key} is not finite: {v}"))),
            None => Err(Error::Config(format!(
                "{:?} requires parameter {key}",
                self.kind
            ))),
        }
    }

    fn opt(&self, key: &str) -> Result<Option<f64>> {
        match self.map.get(key) {
            Some(v) if v.is_finite() => Ok(Some(*v)),
            Some(v) => Err(Error::Config(format!("parameter {key} is not finite: {v}"))),
            None => Ok(None),
        }
    }

    fn positive(&self, key: &str) -> Result<f64> {
        let v = self.get(key)?;
        if v > 0.0 {
            Ok(v)
        } else {
            Err(Error::Config(format!("{key} must be positive, got {v}")))
        }
    }

    fn count(&self, key: &str) -> Result<usize> {
        let v = self.get(key)?;
        if v >= 1.0 && v.fract() == 0.0 && v <= 10_000.0 {
            Ok(v as usize)
        } else {
            Err(Error::Config(format!(
                "{key} must be a positive integer, got {v}"
            )))
        }
    }
}

fn validate(cfg: &GeneratorConfig) -> Result<()> {
    let known = cfg.kind.parameters();
    if let Some(k) = cfg
        .params
        .keys()
        .find(|k| !known.iter().any(|(name, _)| name == k))
    {
        return Err(Error::Config(format!(
            "unknown parameter {k} for {:?}; accepted: {}",
            cfg.kind,
            known.iter().map(|(n, _)| *n).collect::<Vec<_>>().join(", ")
        )));
    }
    if cfg.n < 2 {
        return Err(Error::Config(format!(
            "sample size must be at least 2, got {}",
            cfg.n
        )));
    }
    Ok(())
}

/// `n + 1` consecutive weekdays from 2000-01-03, ISO formatted.
pub fn synthetic_dates(n: usize) -> Vec<String> {
    let mut d = NaiveDate::from_ymd_opt(2000, 1, 3).expect("valid date");
    let mut out = Vec::with_capacity(n + 1);
    while out.len() <= n {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d.format("%Y-%m-%d").to_string());
        }
        d = d.succ_opt().expect("date in range");
    }
    out
}

fn series(ticker: &str, dates: &[String], values: Vec<f64>) -> Result<ReturnSeries> {
    ReturnSeries::new(ticker, dates[1..].to_vec(), values)
}

pub fn generate(cfg: &GeneratorConfig) -> Result<Vec<ReturnSeries>> {
    validate(cfg)?;
    let p = Params {
        kind: cfg.kind,
        map: &cfg.params,
    };
    let n = cfg.n;
    let dates = synthetic_dates(n);
    let seed = cfg.seed;
    match cfg.kind {
        GeneratorKind::Gaussian => {
            let (mu, sigma) = (p.get("mu")?, p.positive("sigma")?);
            let mut s = Stream::substream(seed, &[0]);
            let x = (0..n).map(|_| mu + sigma * s.normal()).collect();
            Ok(vec![series("X", &dates, x)?])
        }
        GeneratorKind::BivariateGaussian => {
            let rho = p.get("rho")?;
            if rho.abs() >= 1.0 {
                return Err(Error::Config(format!("|rho| must be below 1, got {rho}")));
            }
            let (sx, sy) = (p.positive("sigma_x")?, p.positive("sigma_y")?);
            let c = (1.0 - rho * rho).sqrt();
            let mut s = Stream::substream(seed, &[0]);
            let (mut x, mut y) = (Vec::with_capacity(n), Vec::with_capacity(n));
            for _ in 0..n {
                let a = s.normal();
                let b = s.normal();
                x.push(sx * a);
                y.push(sy * (rho * a + c * b));
            }
            Ok(vec![series("X", &dates, x)?, series("Y", &dates, y)?])
        }
        GeneratorKind::StudentT => {
            let nu = p.get("nu")?;
            if nu <= 2.0 {
                return Err(Error::Config(format!("nu must exceed 2, got {nu}")));
            }
            let mut scale = p.positive("scale")?;
            if p.get("standardize")? != 0.0 {
                scale /= (nu / (nu - 2.0)).sqrt();
            }
            let mut s = Stream::substream(seed, &[0]);
            let x = (0..n).map(|_| scale * s.student_t(nu)).collect();
            Ok(vec![series("T", &dates, x)?])
        }
        GeneratorKind::OneFactorUniverse => one_factor(&p, &dates, n, seed),
        GeneratorKind::Ar1 => {
            let phi = p.get("phi")?;
            if phi.abs() >= 1.0 {
                return Err(Error::Config(format!("|phi| must be below 1, got {phi}")));
            }
            let (mu, sigma) = (p.get("mu")?, p.positive("sigma")?);
            let mut s = Stream::substream(seed, &[0]);
            let mut dev = sigma / (1.0 - phi * phi).sqrt() * s.normal();
            let mut x = Vec::with_capacity(n);
            x.push(mu + dev);
            for _ in 1..n {
                dev = phi * dev + sigma * s.normal();
                x.push(mu + dev);
            }
            Ok(vec![series("AR1", &dates, x)?])
        }
        GeneratorKind::Arch1 => {
            let a0 = p.positive("alpha0")?;
            let a1 = p.get("alpha1")?;
            if !(0.0..1.0).contains(&a1) {
                return Err(Error::Config(format!(
                    "alpha1 must lie in [0, 1), got {a1}"
                )));
            }
            let mut s = Stream::substream(seed, &[0]);
            let mut prev: f64 = 0.0;
            let mut x = Vec::with_capacity(n);
            for t in 0..n + ARCH_BURN_IN {
                let v = (a0 + a1 * prev * prev).sqrt() * s.normal();
                if t >= ARCH_BURN_IN {
                    x.push(v);
                }
                prev = v;
            }
            Ok(vec![series("ARCH1", &dates, x)?])
        }
        GeneratorKind::BetaBreak => {
            let frac = p.get("break_point")?;
            if !(frac > 0.0 && frac < 1.0) {
                return Err(Error::Config(format!(
                    "break_point must lie in (0, 1), got {frac}"
                )));
            }
            let (b0, b1) = (p.get("beta")?, p.get("beta_after")?);
            let (sm, se) = (p.positive("sigma_m")?, p.positive("sigma_eps")?);
            let se1 = match p.opt("sigma_eps_after")? {
                Some(v) if v > 0.0 => v,
                Some(v) => {
                    return Err(Error::Config(format!(
                        "sigma_eps_after must be positive, got {v}"
                    )))
                }
                None => se,
            };
            let (shift, alpha) = (p.get("mean_shift")?, p.get("alpha")?);
            let brk = (frac * n as f64).round() as usize;
            let mut sm_stream = Stream::substream(seed, &[0]);
            let mut se_stream = Stream::substream(seed, &[1]);
            let (mut m, mut y) = (Vec::with_capacity(n), Vec::with_capacity(n));
            for t in 0..n {
                let mt = sm * sm_stream.normal();
                let e = se_stream.normal();
                let yt = if t < brk {
                    alpha + b0 * mt + se * e
                } else {
                    alpha + shift + b1 * mt + se1 * e
                };
                m.push(mt);
                y.push(yt);
            }
            Ok(vec![series("MKT", &dates, m)?, series("S", &dates, y)?])
        }
    }
}

/// Per-asset `(β_i, σ_ε,i)` of the one-factor universe.
///
/// Betas are evenly spaced from `beta` to `beta_max`. Idiosyncratic volatilities
/// are geometrically spaced from `sigma_eps` to `sigma_eps_max` and assigned
/// through the permutation `i ↦ (eps_stride · i) mod N`, which decouples them
/// from the beta ordering when the stride is coprime with N.
pub fn one_factor_loadings(cfg: &GeneratorConfig) -> Result<Vec<(f64, f64)>> {
    validate(cfg)?;
    if cfg.kind != GeneratorKind::OneFactorUniverse {
        return Err(Error::Config(
            "loadings exist only for one_factor_universe".into(),
        ));
    }
    let p = Params {
        kind: cfg.kind,
        map: &cfg.params,
    };
    loadings(&p)
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn loadings(p: &Params) -> Result<Vec<(f64, f64)>> {
    let k = p.count("n_assets")?;
    let b0 = p.get("beta")?;
    let b1 = p.opt("beta_max")?.unwrap_or(b0);
    let s0 = p.positive("sigma_eps")?;
    let s1 = p.opt("sigma_eps_max")?.unwrap_or(s0);
    if s1 <= 0.0 {
        return Err(Error::Config(format!(
            "sigma_eps_max must be positive, got {s1}"
        )));
    }
    let stride = p.count("eps_stride")?;
    if gcd(stride, k) != 1 {
        return Err(Error::Config(format!(
            "eps_stride {stride} must be coprime with n_assets {k}"
        )));
    }
    let span = (k.max(2) - 1) as f64;
    Ok((0..k)
        .map(|i| {
            let beta = b0 + (b1 - b0) * i as f64 / span;
            let rank = (stride * i) % k;
            let sigma = s0 * (s1 / s0).powf(rank as f64 / span);
            (beta, sigma)
        })
        .collect())
}

fn one_factor(p: &Params, dates: &[String], n: usize, seed: u64) -> Result<Vec<ReturnSeries>> {
    let load = loadings(p)?;
    let sm = p.positive("sigma_m")?;
    let (mu, alpha) = (p.get("mu_m")?, p.get("alpha")?);
    let mut ms = Stream::substream(seed, &[0]);
    let m: Vec<f64> = (0..n).map(|_| mu + sm * ms.normal()).collect();
    let mut out = Vec::with_capacity(load.len() + 1);
    for (i, (beta, se)) in load.iter().enumerate() {
        let mut s = Stream::substream(seed, &[i as u64 + 1]);
        let r = m
            .iter()
            .map(|mt| alpha + beta * mt + se * s.normal())
            .collect();
        out.push(series(&format!("A{:02}", i + 1), dates, r)?);
    }
    out.insert(0, series("MKT", dates, m)?);
    Ok(out)
}

/// Generated returns compounded into price paths starting at 100.
pub fn generate_prices(cfg: &GeneratorConfig) -> Result<Vec<PriceSeries>> {
    let first = synthetic_dates(0).remove(0);
    generate(cfg)?
        .iter()
        .map(|r| prices_from_returns(r, &first, START_PRICE))
        .collect()
}

/// Writes the generated price paths as a wide CSV.
pub fn write_fixture<W: Write>(cfg: &GeneratorConfig, writer: W) -> Result<()> {
    write_wide_csv(&generate_prices(cfg)?, writer)
}
