//! Random equal-weight portfolios and the diversification curve.
//!
//! Portfolio returns are weighted sums of member log returns. This is exact
//! for simple returns and a first-order approximation for log returns.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entropy::{differential_entropy, HistogramSpec};
use crate::error::{Error, Result};
use crate::ingest::{check_aligned, describe, ReturnSeries};
use crate::report::format_number;
use crate::rng::Stream;

pub const DEFAULT_REPLICATIONS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Portfolio {
    tickers: Vec<String>,
    weights: Vec<f64>,
}

impl Portfolio {
    pub fn new(tickers: Vec<String>, weights: Vec<f64>) -> Result<Self> {
        if tickers.is_empty() || tickers.len() != weights.len() {
            return Err(Error::Domain(format!(
                "portfolio needs one weight per ticker ({} tickers, {} weights)",
                tickers.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::Domain(
                "portfolio weights must be non-negative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!(
                "portfolio weights sum to {total}, not 1"
            )));
        }
        Ok(Self { tickers, weights })
    }

    pub fn equal(tickers: Vec<String>) -> Result<Self> {
        let k = tickers.len().max(1);
        Self::new(tickers, vec![1.0 / k as f64; k])
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

fn combine(members: &[&ReturnSeries], weights: &[f64]) -> Vec<f64> {
    let n = members[0].len();
    let mut out = vec![0.0; n];
    for (s, w) in members.iter().zip(weights) {
        for (o, v) in out.iter_mut().zip(&s.values) {
            *o += w * v;
        }
    }
    out
}

pub fn portfolio_returns(universe: &[ReturnSeries], p: &Portfolio) -> Result<ReturnSeries> {
    let members = p
        .tickers
        .iter()
        .map(|t| {
            universe
                .iter()
                .find(|s| &s.ticker == t)
                .ok_or_else(|| Error::UnknownTicker(t.clone()))
        })
        .collect::<Result<Vec<_>>>()?;
    for m in &members[1..] {
        check_aligned(members[0], m)?;
    }
    let ticker = if members.len() == 1 {
        members[0].ticker.clone()
    } else {
        p.tickers.join("+")
    };
    ReturnSeries::new(
        ticker,
        members[0].dates.clone(),
        combine(&members, &p.weights),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiversificationCurve {
    pub k: Vec<usize>,
    pub avg_std: Vec<f64>,
    pub avg_entropy: Vec<f64>,
    /// standard error of each average across replications
    pub se_std: Vec<f64>,
    pub se_entropy: Vec<f64>,
    /// portfolios actually evaluated per size (1 when k is the universe size)
    pub draws: Vec<usize>,
    pub replications: usize,
    pub seed: u64,
}

impl DiversificationCurve {
    /// CSV with header `k,avg_std,avg_entropy`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        w.write_record(["k", "avg_std", "avg_entropy"])?;
        for i in 0..self.k.len() {
            w.write_record([
                self.k[i].to_string(),
                format_number(self.avg_std[i]),
                format_number(self.avg_entropy[i]),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn mean_and_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (m, 0.0);
    }
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

/// Average standard deviation and differential entropy of random equal-weight
/// portfolios of each size `1..=max_k`.
///
/// Replication `r` of size `k` uses the substream `(seed, k, r)`, so the curve
/// does not depend on how the work is scheduled across threads.
pub fn diversification_curve(
    universe: &[ReturnSeries],
    max_k: usize,
    replications: usize,
    seed: u64,
    spec: &HistogramSpec,
) -> Result<DiversificationCurve> {
    let size = universe.len();
    if max_k == 0 || max_k > size {
        return Err(Error::Domain(format!(
            "max_k must lie in 1..={size}, got {max_k}"
        )));
    }
    if replications == 0 {
        return Err(Error::Domain("replications must be at least 1".into()));
    }
    for s in &universe[1..] {
        check_aligned(&universe[0], s)?;
    }
    let jobs: Vec<(usize, usize)> = (1..=max_k)
        .flat_map(|k| {
            let draws = if k == size { 1 } else { replications };
            (0..draws).map(move |r| (k, r))
        })
        .collect();
    let results = jobs
        .par_iter()
        .map(|&(k, r)| {
            let mut idx = Stream::substream(seed, &[k as u64, r as u64]).subset(size, k);
            idx.sort_unstable();
            let members: Vec<&ReturnSeries> = idx.iter().map(|&i| &universe[i]).collect();
            let values = combine(&members, &vec![1.0 / k as f64; k]);
            let sd = describe(&values)?.std_dev;
            let h = differential_entropy(&values, spec)?.value;
            Ok((sd, h))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;

    let mut curve = DiversificationCurve {
        k: Vec::with_capacity(max_k),
        avg_std: Vec::with_capacity(max_k),
        avg_entropy: Vec::with_capacity(max_k),
        se_std: Vec::with_capacity(max_k),
        se_entropy: Vec::with_capacity(max_k),
        draws: Vec::with_capacity(max_k),
        replications,
        seed,
    };
    let mut offset = 0;
    for k in 1..=max_k {
        let draws = if k == size { 1 } else { replications };
        let chunk = &results[offset..offset + draws];
        offset += draws;
        let sds: Vec<f64> = chunk.iter().map(|p| p.0).collect();
        let hs: Vec<f64> = chunk.iter().map(|p| p.1).collect();
        let (ms, ss) = mean_and_se(&sds);
        let (mh, sh) = mean_and_se(&hs);
        curve.k.push(k);
        curve.avg_std.push(ms);
        curve.avg_entropy.push(mh);
        curve.se_std.push(ss);
        curve.se_entropy.push(sh);
        curve.draws.push(draws);
    }
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::histogram::BinScheme;
    use crate::synth::{generate, GeneratorConfig, GeneratorKind};

    fn series(t: &str, v: Vec<f64>) -> ReturnSeries {
        ReturnSeries::from_values(t, v).unwrap()
    }

    fn universe(seed: u64, n: usize) -> Vec<ReturnSeries> {
        let cfg = GeneratorConfig::new(GeneratorKind::OneFactorUniverse, n, seed)
            .with("n_assets", 20.0)
            .with("sigma_m", 0.01)
            .with("sigma_eps", 0.02);
        generate(&cfg).unwrap().into_iter().skip(1).collect()
    }

    #[test]
    fn weights_validated() {
        let t = vec!["A".to_string(), "B".to_string()];
        assert!(Portfolio::new(t.clone(), vec![0.5, 0.5]).is_ok());
        assert!(Portfolio::new(t.clone(), vec![0.6, 0.5]).is_err());
        assert!(Portfolio::new(t.clone(), vec![1.5, -0.5]).is_err());
        assert!(Portfolio::new(t, vec![1.0]).is_err());
    }

    #[test]
    fn single_asset_identity() {
        let u = vec![
            series("A", vec![0.01, -0.02, 0.03]),
            series("B", vec![0.0, 0.1, 0.2]),
        ];
        let p = portfolio_returns(&u, &Portfolio::equal(vec!["B".into()]).unwrap()).unwrap();
        assert_eq!(p, u[1]);
        let bad = Portfolio::equal(vec!["Z".into()]).unwrap();
        assert!(matches!(
            portfolio_returns(&u, &bad),
            Err(Error::UnknownTicker(_))
        ));
    }

    #[test]
    fn opposite_series_cancel() {
        let a: Vec<f64> = (0..50).map(|i| (i as f64).sin() * 0.01).collect();
        let b: Vec<f64> = a.iter().map(|v| -v).collect();
        let u = vec![series("A", a), series("B", b)];
        let p = portfolio_returns(&u, &Portfolio::equal(vec!["A".into(), "B".into()]).unwrap())
            .unwrap();
        assert!(p.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn variance_is_quadratic_form() {
        let u = universe(3, 500);
        let u = &u[..3];
        let w = [0.2, 0.3, 0.5];
        let p = Portfolio::new(u.iter().map(|s| s.ticker.clone()).collect(), w.to_vec()).unwrap();
        let r = portfolio_returns(u, &p).unwrap();
        let n = r.len() as f64;
        let means: Vec<f64> = u.iter().map(|s| s.values.iter().sum::<f64>() / n).collect();
        let mut quad = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let cov = u[i]
                    .values
                    .iter()
                    .zip(&u[j].values)
                    .map(|(a, b)| (a - means[i]) * (b - means[j]))
                    .sum::<f64>()
                    / n;
                quad += w[i] * w[j] * cov;
            }
        }
        assert!((describe(&r.values).unwrap().variance - quad).abs() < 1e-9 * quad.max(1e-12));
    }

    #[test]
    fn identical_copies_cannot_diversify() {
        let base = universe(4, 300).remove(0);
        let u: Vec<ReturnSeries> = (0..5)
            .map(|i| {
                ReturnSeries::new(format!("C{i}"), base.dates.clone(), base.values.clone()).unwrap()
            })
            .collect();
        let c = diversification_curve(&u, 5, 10, 1, &HistogramSpec::auto(BinScheme::Equidistant))
            .unwrap();
        for s in &c.avg_std {
            assert!((s - c.avg_std[0]).abs() < 1e-15);
        }
    }

    #[test]
    fn curve_shape_and_determinism() {
        let u = universe(5, 1000);
        let spec = HistogramSpec::auto(BinScheme::Equidistant);
        let c = diversification_curve(&u, 20, 30, 99, &spec).unwrap();
        assert_eq!(c.k, (1..=20).collect::<Vec<_>>());
        assert_eq!(c.draws[19], 1);
        assert_eq!(c.se_std[19], 0.0);
        assert!(c.avg_std.windows(2).all(|w| w[1] < w[0]));
        assert!(c.avg_entropy[19] < c.avg_entropy[0]);
        let again = diversification_curve(&u, 20, 30, 99, &spec).unwrap();
        assert_eq!(c, again);
        let other = diversification_curve(&u, 20, 30, 100, &spec).unwrap();
        assert_ne!(c.avg_std[3], other.avg_std[3]);
    }

    #[test]
    fn curve_errors_and_csv() {
        let u = universe(6, 200);
        let spec = HistogramSpec::auto(BinScheme::Equidistant);
        assert!(matches!(
            diversification_curve(&u, 21, 5, 1, &spec),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            diversification_curve(&u, 3, 0, 1, &spec),
            Err(Error::Domain(_))
        ));
        let c = diversification_curve(&u, 3, 4, 1, &spec).unwrap();
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("k,avg_std,avg_entropy\n1,"));
        assert_eq!(text.lines().count(), 4);
    }
}
