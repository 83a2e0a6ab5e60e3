//! Price loading, log returns and descriptive moments.
//!
//! Two CSV layouts are accepted:
//!
//! * long: header `date,ticker,close`, one observation per row
//! * wide: header `date,<ticker1>,<ticker2>,...`, an empty cell marks a missing price
//!
//! Dates must be ISO-8601 calendar dates (`YYYY-MM-DD`). They are kept as
//! strings and only ever sorted and compared, never used for arithmetic.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum usable rows per ticker accepted by the loader.
pub const MIN_ROWS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum CsvLayout {
    Long,
    #[default]
    Wide,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    pub ticker: String,
    pub dates: Vec<String>,
    pub prices: Vec<f64>,
}

impl PriceSeries {
    pub fn new(ticker: impl Into<String>, dates: Vec<String>, prices: Vec<f64>) -> Result<Self> {
        let ticker = ticker.into();
        if dates.len() != prices.len() {
            return Err(Error::Alignment(format!(
                "{ticker}: {} dates but {} prices",
                dates.len(),
                prices.len()
            )));
        }
        if let Some(w) = dates.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::Data {
                ticker,
                date: w[1].clone(),
                message: "dates must be strictly increasing".into(),
            });
        }
        if let Some(i) = prices.iter().position(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(Error::Data {
                ticker,
                date: dates[i].clone(),
                message: format!("price must be positive, got {}", prices[i]),
            });
        }
        Ok(Self {
            ticker,
            dates,
            prices,
        })
    }

    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }

    /// Restricts the series to the given (sorted) dates that it contains.
    pub fn restrict_to(&self, keep: &[String]) -> PriceSeries {
        let mut dates = Vec::new();
        let mut prices = Vec::new();
        let mut j = 0;
        for (d, p) in self.dates.iter().zip(&self.prices) {
            while j < keep.len() && keep[j] < *d {
                j += 1;
            }
            if j < keep.len() && keep[j] == *d {
                dates.push(d.clone());
                prices.push(*p);
            }
        }
        PriceSeries {
            ticker: self.ticker.clone(),
            dates,
            prices,
        }
    }
}

/// Log returns of one instrument, labelled by the later date of each price pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    pub ticker: String,
    pub dates: Vec<String>,
    pub values: Vec<f64>,
}

impl ReturnSeries {
    pub fn new(ticker: impl Into<String>, dates: Vec<String>, values: Vec<f64>) -> Result<Self> {
        let ticker = ticker.into();
        if dates.len() != values.len() {
            return Err(Error::Alignment(format!(
                "{ticker}: {} dates but {} returns",
                dates.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data {
                ticker,
                date: dates[i].clone(),
                message: "non-finite return".into(),
            });
        }
        Ok(Self {
            ticker,
            dates,
            values,
        })
    }

    /// Series with positional labels `00000001, 00000002, ...`.
    pub fn from_values(ticker: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        let dates = (1..=values.len()).map(|i| format!("{i:08}")).collect();
        Self::new(ticker, dates, values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Errors unless both series carry identical date labels.
pub fn check_aligned(a: &ReturnSeries, b: &ReturnSeries) -> Result<()> {
    if a.dates != b.dates {
        return Err(Error::Alignment(format!(
            "{} ({} obs) and {} ({} obs) are not date-aligned",
            a.ticker,
            a.len(),
            b.ticker,
            b.len()
        )));
    }
    Ok(())
}

/// Keeps only the dates present in every series.
pub fn align_prices(series: &[&PriceSeries]) -> Vec<PriceSeries> {
    let Some(first) = series.first() else {
        return Vec::new();
    };
    let mut common = first.dates.clone();
    for s in &series[1..] {
        common = s.restrict_to(&common).dates;
    }
    series.iter().map(|s| s.restrict_to(&common)).collect()
}

pub fn load_prices(path: impl AsRef<Path>, layout: CsvLayout) -> Result<Vec<PriceSeries>> {
    let file = std::fs::File::open(path.as_ref())?;
    parse_prices(file, layout)
}

fn format_err(line: usize, message: impl Into<String>) -> Error {
    Error::Format {
        line,
        message: message.into(),
    }
}

fn parse_date(raw: &str, line: usize) -> Result<String> {
    let raw = raw.trim();
    NaiveDate::parse_from_str(raw, "%Y-%m-%d")
        .map_err(|e| format_err(line, format!("bad date {raw:?}: {e}")))?;
    Ok(raw.to_string())
}

fn parse_price(raw: &str, line: usize) -> Result<Option<f64>> {
    let raw = raw.trim();
    if raw.is_empty() {
        return Ok(None);
    }
    raw.parse::<f64>()
        .map(Some)
        .map_err(|_| format_err(line, format!("bad price {raw:?}")))
}

/// Parses a price file from any reader; see the module docs for the layouts.
pub fn parse_prices<R: Read>(reader: R, layout: CsvLayout) -> Result<Vec<PriceSeries>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| format_err(1, e.to_string()))?
        .iter()
        .map(|h| h.trim_start_matches('\u{feff}').to_string())
        .collect();

    // ticker -> (first-seen order, rows)
    let mut order: Vec<String> = Vec::new();
    let mut rows: HashMap<String, Vec<(String, f64, usize)>> = HashMap::new();
    let mut push = |ticker: &str, date: String, price: f64, line: usize| {
        if !rows.contains_key(ticker) {
            order.push(ticker.to_string());
        }
        rows.entry(ticker.to_string())
            .or_default()
            .push((date, price, line));
    };

    match layout {
        CsvLayout::Long => {
            let expected = ["date", "ticker", "close"];
            if headers.len() != 3
                || !headers
                    .iter()
                    .zip(expected)
                    .all(|(h, e)| h.eq_ignore_ascii_case(e))
            {
                return Err(format_err(
                    1,
                    format!("long format header must be date,ticker,close, got {headers:?}"),
                ));
            }
            for rec in rdr.records() {
                let rec = rec.map_err(|e| {
                    let line = e.position().map_or(0, |p| p.line() as usize);
                    format_err(line, e.to_string())
                })?;
                let line = rec.position().map_or(0, |p| p.line() as usize);
                let date = parse_date(&rec[0], line)?;
                let ticker = rec[1].trim();
                if ticker.is_empty() {
                    return Err(format_err(line, "empty ticker"));
                }
                if let Some(p) = parse_price(&rec[2], line)? {
                    push(ticker, date, p, line);
                }
            }
        }
        CsvLayout::Wide => {
            if headers.len() < 2 || !headers[0].eq_ignore_ascii_case("date") {
                return Err(format_err(
                    1,
                    format!("wide format header must be date,<tickers...>, got {headers:?}"),
                ));
            }
            if let Some(h) = headers[1..].iter().find(|h| h.is_empty()) {
                return Err(format_err(1, format!("empty ticker column name {h:?}")));
            }
            for rec in rdr.records() {
                let rec = rec.map_err(|e| {
                    let line = e.position().map_or(0, |p| p.line() as usize);
                    format_err(line, e.to_string())
                })?;
                let line = rec.position().map_or(0, |p| p.line() as usize);
                let date = parse_date(&rec[0], line)?;
                for (ticker, cell) in headers[1..].iter().zip(rec.iter().skip(1)) {
                    if let Some(p) = parse_price(cell, line)? {
                        push(ticker, date.clone(), p, line);
                    }
                }
            }
        }
    }

    let mut out = Vec::with_capacity(order.len());
    for ticker in order {
        let mut obs = rows.remove(&ticker).unwrap_or_default();
        obs.sort_by(|a, b| a.0.cmp(&b.0));
        if let Some(w) = obs.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(format_err(
                w[1].2,
                format!("duplicate date {} for {ticker}", w[1].0),
            ));
        }
        if let Some((date, p, _)) = obs.iter().find(|(_, p, _)| !(*p > 0.0 && p.is_finite())) {
            return Err(Error::Data {
                ticker,
                date: date.clone(),
                message: format!("price must be positive, got {p}"),
            });
        }
        if obs.len() < MIN_ROWS {
            return Err(Error::insufficient(
                format!("ticker {ticker}"),
                MIN_ROWS,
                obs.len(),
            ));
        }
        let (dates, prices): (Vec<_>, Vec<_>) = obs.into_iter().map(|(d, p, _)| (d, p)).unzip();
        out.push(PriceSeries::new(ticker, dates, prices)?);
    }
    Ok(out)
}

pub fn log_returns(p: &PriceSeries) -> Result<ReturnSeries> {
    if p.len() < 2 {
        return Err(Error::insufficient(
            format!("log returns of {}", p.ticker),
            2,
            p.len(),
        ));
    }
    let values = p.prices.windows(2).map(|w| (w[1] / w[0]).ln()).collect();
    ReturnSeries::new(p.ticker.clone(), p.dates[1..].to_vec(), values)
}

/// Rebuilds a price path from log returns, starting at `start`.
pub fn prices_from_returns(r: &ReturnSeries, first_date: &str, start: f64) -> Result<PriceSeries> {
    let mut dates = Vec::with_capacity(r.len() + 1);
    let mut prices = Vec::with_capacity(r.len() + 1);
    dates.push(first_date.to_string());
    prices.push(start);
    let mut level = start;
    for (d, v) in r.dates.iter().zip(&r.values) {
        level *= v.exp();
        dates.push(d.clone());
        prices.push(level);
    }
    PriceSeries::new(r.ticker.clone(), dates, prices)
}

/// Writes series sharing one date axis as a wide CSV.
pub fn write_wide_csv<W: Write>(series: &[PriceSeries], writer: W) -> Result<()> {
    let Some(first) = series.first() else {
        return Err(Error::Domain("no series to write".into()));
    };
    if let Some(s) = series.iter().find(|s| s.dates != first.dates) {
        return Err(Error::Alignment(format!(
            "{} does not share the date axis of {}",
            s.ticker, first.ticker
        )));
    }
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    let mut header = vec!["date".to_string()];
    header.extend(series.iter().map(|s| s.ticker.clone()));
    w.write_record(&header)?;
    for (i, d) in first.dates.iter().enumerate() {
        let mut row = vec![d.clone()];
        row.extend(series.iter().map(|s| format!("{:.10e}", s.prices[i])));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarianceConvention {
    /// divisor n
    #[default]
    Population,
    /// divisor n − 1
    Sample,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub std_dev: f64,
    /// `None` when the variance is zero.
    pub skewness: Option<f64>,
    /// `None` when the variance is zero.
    pub excess_kurtosis: Option<f64>,
}

pub fn describe(values: &[f64]) -> Result<SummaryStats> {
    describe_with(values, VarianceConvention::Population)
}

/// Moments with the chosen variance divisor. Skewness and kurtosis always use
/// divisor-n central moments: `m3 / m2^1.5` and `m4 / m2² − 3`.
pub fn describe_with(values: &[f64], convention: VarianceConvention) -> Result<SummaryStats> {
    let n = values.len();
    if n < 2 {
        return Err(Error::insufficient("descriptive statistics", 2, n));
    }
    let nf = n as f64;
    let mean = if values.windows(2).all(|w| w[0] == w[1]) {
        values[0]
    } else {
        values.iter().sum::<f64>() / nf
    };
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in values {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let ss = m2;
    m2 /= nf;
    m3 /= nf;
    m4 /= nf;
    let variance = match convention {
        VarianceConvention::Population => m2,
        VarianceConvention::Sample => ss / (nf - 1.0),
    };
    let (skewness, excess_kurtosis) = if m2 > 0.0 {
        (Some(m3 / m2.powf(1.5)), Some(m4 / (m2 * m2) - 3.0))
    } else {
        (None, None)
    };
    Ok(SummaryStats {
        n,
        mean,
        variance,
        std_dev: variance.sqrt(),
        skewness,
        excess_kurtosis,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn wide_fixture(rows: usize) -> String {
        let mut s = String::from("date,A,B\n");
        for i in 0..rows {
            s.push_str(&format!(
                "2020-01-{:02},{},{}\n",
                i + 1,
                10.0 + i as f64,
                20.0 + i as f64
            ));
        }
        s
    }

    #[test]
    fn wide_file_gives_one_series_per_column() {
        let out = parse_prices(wide_fixture(30).as_bytes(), CsvLayout::Wide).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].ticker, "A");
        assert_eq!(out[1].len(), 30);
    }

    #[test]
    fn wide_missing_cells_dropped_per_ticker() {
        let mut s = wide_fixture(31);
        s = s.replacen("2020-01-05,14,24", "2020-01-05,,24", 1);
        let out = parse_prices(s.as_bytes(), CsvLayout::Wide).unwrap();
        assert_eq!(out[0].len(), 30);
        assert_eq!(out[1].len(), 31);
        assert!(!out[0].dates.contains(&"2020-01-05".to_string()));
    }

    #[test]
    fn crlf_accepted() {
        let s = wide_fixture(30).replace('\n', "\r\n");
        assert_eq!(
            parse_prices(s.as_bytes(), CsvLayout::Wide).unwrap().len(),
            2
        );
    }

    #[test]
    fn zero_price_is_data_error() {
        let s = wide_fixture(30).replacen("2020-01-03,12,22", "2020-01-03,0.0,22", 1);
        match parse_prices(s.as_bytes(), CsvLayout::Wide) {
            Err(Error::Data { ticker, date, .. }) => {
                assert_eq!(ticker, "A");
                assert_eq!(date, "2020-01-03");
            }
            other => panic!("expected data error, got {other:?}"),
        }
    }

    #[test]
    fn bad_number_reports_line() {
        let s = wide_fixture(30).replacen("2020-01-04,13,23", "2020-01-04,abc,23", 1);
        match parse_prices(s.as_bytes(), CsvLayout::Wide) {
            Err(Error::Format { line, .. }) => assert_eq!(line, 5),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn too_few_rows() {
        assert!(matches!(
            parse_prices(wide_fixture(29).as_bytes(), CsvLayout::Wide),
            Err(Error::InsufficientData { got: 29, .. })
        ));
    }

    #[test]
    fn long_format_interleaved_matches_reference_parser() {
        // 10 interleaved, unsorted rows for two tickers plus filler rows to pass MIN_ROWS
        let mut body = String::from("date,ticker,close\n");
        let fixture = [
            ("2021-03-05", "X", "5.0"),
            ("2021-03-01", "Y", "11.0"),
            ("2021-03-03", "X", "3.0"),
            ("2021-03-02", "Y", "12.0"),
            ("2021-03-01", "X", "1.0"),
            ("2021-03-04", "Y", "14.0"),
            ("2021-03-02", "X", "2.0"),
            ("2021-03-03", "Y", "13.0"),
            ("2021-03-04", "X", "4.0"),
            ("2021-03-05", "Y", ""),
        ];
        for (d, t, c) in fixture {
            body.push_str(&format!("{d},{t},{c}\n"));
        }
        for i in 0..30 {
            body.push_str(&format!("2021-04-{:02},X,{}\n", i + 1, 100 + i));
            body.push_str(&format!("2021-04-{:02},Y,{}\n", i + 1, 200 + i));
        }
        let parsed = parse_prices(body.as_bytes(), CsvLayout::Long).unwrap();

        // reference: naive line-by-line split, group, sort
        let mut reference: Vec<(String, Vec<(String, f64)>)> = Vec::new();
        for line in body.lines().skip(1) {
            let f: Vec<&str> = line.split(',').collect();
            if f[2].is_empty() {
                continue;
            }
            let price: f64 = f[2].parse().unwrap();
            match reference.iter_mut().find(|(t, _)| t == f[1]) {
                Some((_, v)) => v.push((f[0].to_string(), price)),
                None => reference.push((f[1].to_string(), vec![(f[0].to_string(), price)])),
            }
        }
        assert_eq!(parsed.len(), reference.len());
        for (p, (t, mut obs)) in parsed.iter().zip(reference) {
            obs.sort_by(|a, b| a.0.cmp(&b.0));
            assert_eq!(p.ticker, t);
            assert_eq!(p.dates, obs.iter().map(|o| o.0.clone()).collect::<Vec<_>>());
            assert_eq!(p.prices, obs.iter().map(|o| o.1).collect::<Vec<_>>());
        }
        assert_eq!(parsed[1].len(), 34);
    }

    #[test]
    fn log_return_examples() {
        let e = std::f64::consts::E;
        let p = PriceSeries::new(
            "T",
            vec!["a".into(), "b".into(), "c".into()],
            vec![1.0, e, e],
        )
        .unwrap();
        let r = log_returns(&p).unwrap();
        assert!((r.values[0] - 1.0).abs() < 1e-15);
        assert_eq!(r.values[1], 0.0);
        assert_eq!(r.dates, vec!["b", "c"]);

        let flat =
            PriceSeries::new("F", (0..4).map(|i| i.to_string()).collect(), vec![5.0; 4]).unwrap();
        assert_eq!(log_returns(&flat).unwrap().values, vec![0.0; 3]);

        let p = PriceSeries::new(
            "T",
            vec!["a".into(), "b".into(), "c".into()],
            vec![100.0, 102.0, 99.0],
        )
        .unwrap();
        let r = log_returns(&p).unwrap();
        assert!((r.values[0] - 0.019_802_627_296_179_7).abs() < 1e-12);
        assert!((r.values[1] - (-0.029_852_963_149_681_1)).abs() < 1e-12);
    }

    #[test]
    fn log_returns_need_two_prices() {
        let p = PriceSeries::new("T", vec!["a".into()], vec![1.0]).unwrap();
        assert!(matches!(
            log_returns(&p),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn describe_examples() {
        let s = describe(&[-1.0, 1.0]).unwrap();
        assert_eq!(s.mean, 0.0);
        assert_eq!(s.variance, 1.0);
        assert_eq!(s.skewness, Some(0.0));
        let s = describe_with(&[-1.0, 1.0], VarianceConvention::Sample).unwrap();
        assert_eq!(s.variance, 2.0);

        let s = describe(&[0.3; 10]).unwrap();
        assert_eq!(s.variance, 0.0);
        assert_eq!(s.skewness, None);
        assert_eq!(s.excess_kurtosis, None);
    }

    #[test]
    fn align_keeps_common_dates() {
        let a = PriceSeries::new(
            "A",
            vec!["1".into(), "2".into(), "3".into()],
            vec![1.0, 2.0, 3.0],
        )
        .unwrap();
        let b = PriceSeries::new(
            "B",
            vec!["2".into(), "3".into(), "4".into()],
            vec![1.0, 2.0, 3.0],
        )
        .unwrap();
        let out = align_prices(&[&a, &b]);
        assert_eq!(out[0].dates, vec!["2", "3"]);
        assert_eq!(out[1].prices, vec![1.0, 2.0]);
    }

    proptest! {
        #[test]
        fn returns_telescope(prices in proptest::collection::vec(0.01f64..1e4, 2..200)) {
            let dates = (0..prices.len()).map(|i| format!("{i:05}")).collect();
            let p = PriceSeries::new("P", dates, prices.clone()).unwrap();
            let r = log_returns(&p).unwrap();
            prop_assert_eq!(r.len(), prices.len() - 1);
            let growth = r.values.iter().sum::<f64>().exp();
            let want = prices[prices.len() - 1] / prices[0];
            prop_assert!((growth - want).abs() <= 1e-9 * want);
        }

        #[test]
        fn describe_location_and_scale(
            xs in proptest::collection::vec(-1.0f64..1.0, 3..100),
            shift in -10.0f64..10.0,
            scale in -5.0f64..5.0,
        ) {
            let base = describe(&xs).unwrap();
            prop_assume!(base.variance > 1e-2);
            let shifted: Vec<f64> = xs.iter().map(|x| x + shift).collect();
            let s = describe(&shifted).unwrap();
            prop_assert!((s.variance - base.variance).abs() <= 1e-12 * base.variance.max(1.0));
            prop_assert!((s.skewness.unwrap() - base.skewness.unwrap()).abs() < 1e-12);
            prop_assert!((s.excess_kurtosis.unwrap() - base.excess_kurtosis.unwrap()).abs() < 1e-12);

            prop_assume!(scale.abs() > 1e-3);
            let scaled: Vec<f64> = xs.iter().map(|x| x * scale).collect();
            let s = describe(&scaled).unwrap();
            let want = scale * scale * base.variance;
            prop_assert!((s.variance - want).abs() <= 1e-12 * want);
            let sk = base.skewness.unwrap();
            prop_assert!((s.skewness.unwrap() - scale.signum() * sk).abs() < 1e-9);
        }
    }
}
