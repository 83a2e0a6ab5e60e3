//! Binning shared by the entropy and grid mutual-information estimators.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BinScheme {
    /// Equal-width cells over `[min, max]`.
    #[default]
    Equidistant,
    /// Cells bounded by empirical quantiles.
    Equiprobable,
}

/// Cell boundaries along one coordinate.
///
/// Equiprobable boundaries sit midway between the order statistics that
/// straddle each quantile `j·n/bins`. A value equal to a boundary belongs to
/// the lower cell, and coincident boundaries (ties) are merged, so every
/// cell has positive width and `bins()` may come out below the request.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    scheme: BinScheme,
    edges: Vec<f64>,
    inv_width: f64,
}

impl Axis {
    pub fn build(values: &[f64], scheme: BinScheme, bins: usize) -> Result<Self> {
        if bins < 2 {
            return Err(Error::Domain(format!("need at least 2 bins, got {bins}")));
        }
        if values.is_empty() {
            return Err(Error::insufficient("histogram", 1, 0));
        }
        let (min, max) = values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        if !(max > min) {
            return Err(Error::Degenerate(
                "all values are equal, the data range has zero width".into(),
            ));
        }
        let edges = match scheme {
            BinScheme::Equidistant => {
                let w = (max - min) / bins as f64;
                let mut e: Vec<f64> = (0..bins).map(|i| min + i as f64 * w).collect();
                e.push(max);
                e
            }
            BinScheme::Equiprobable => {
                let mut sorted = values.to_vec();
                sorted.sort_by(f64::total_cmp);
                let n = sorted.len();
                let mut e = vec![min];
                for j in 1..bins {
                    let m = j * n / bins;
                    if m == 0 || m >= n {
                        continue;
                    }
                    let b = 0.5 * (sorted[m - 1] + sorted[m]);
                    if b > *e.last().unwrap() && b < max {
                        e.push(b);
                    }
                }
                e.push(max);
                e
            }
        };
        Ok(Self {
            scheme,
            inv_width: bins as f64 / (max - min),
            edges,
        })
    }

    pub fn scheme(&self) -> BinScheme {
        self.scheme
    }

    pub fn bins(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn width(&self, cell: usize) -> f64 {
        self.edges[cell + 1] - self.edges[cell]
    }

    /// Cell index of `v`; values outside the range clamp to the end cells.
    pub fn index(&self, v: f64) -> usize {
        let last = self.bins() - 1;
        match self.scheme {
            BinScheme::Equidistant => {
                let pos = (v - self.edges[0]) * self.inv_width;
                if pos <= 0.0 {
                    0
                } else {
                    (pos as usize).min(last)
                }
            }
            BinScheme::Equiprobable => {
                let interior = &self.edges[1..self.edges.len() - 1];
                interior.partition_point(|&b| b < v)
            }
        }
    }

    pub fn counts(&self, values: &[f64]) -> Vec<u64> {
        let mut c = vec![0u64; self.bins()];
        for &v in values {
            c[self.index(v)] += 1;
        }
        c
    }
}

/// Two-dimensional contingency table on a product of two axes.
#[derive(Debug, Clone)]
pub struct Grid2 {
    pub x: Axis,
    pub y: Axis,
    /// Row-major: `counts[ix * y.bins() + iy]`.
    pub counts: Vec<u64>,
    pub n: usize,
}

impl Grid2 {
    pub fn build(x: &[f64], y: &[f64], x_axis: Axis, y_axis: Axis) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::Alignment(format!(
                "paired samples differ in length: {} vs {}",
                x.len(),
                y.len()
            )));
        }
        let by = y_axis.bins();
        let mut counts = vec![0u64; x_axis.bins() * by];
        for (&a, &b) in x.iter().zip(y) {
            counts[x_axis.index(a) * by + y_axis.index(b)] += 1;
        }
        Ok(Self {
            x: x_axis,
            y: y_axis,
            counts,
            n: x.len(),
        })
    }

    pub fn row_totals(&self) -> Vec<u64> {
        self.counts
            .chunks(self.y.bins())
            .map(|row| row.iter().sum())
            .collect()
    }

    pub fn col_totals(&self) -> Vec<u64> {
        let by = self.y.bins();
        let mut out = vec![0u64; by];
        for row in self.counts.chunks(by) {
            for (o, c) in out.iter_mut().zip(row) {
                *o += c;
            }
        }
        out
    }

    pub fn nonempty(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }
}

/// `−Σ p ln p + Σ p ln w` over nonempty cells, with `p = count / n`.
pub(crate) fn plug_in_differential<I>(cells: I, n: usize) -> (f64, usize)
where
    I: IntoIterator<Item = (u64, f64)>,
{
    let nf = n as f64;
    let mut h = 0.0;
    let mut nonempty = 0;
    for (count, width) in cells {
        if count == 0 {
            continue;
        }
        nonempty += 1;
        let p = count as f64 / nf;
        h += p * (width.ln() - p.ln());
    }
    (h, nonempty)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equiprobable_splits_evenly() {
        let v: Vec<f64> = (0..80).map(|i| i as f64).collect();
        let a = Axis::build(&v, BinScheme::Equiprobable, 8).unwrap();
        assert_eq!(a.bins(), 8);
        assert_eq!(a.counts(&v), vec![10; 8]);
        assert_eq!(a.edges()[1], 9.5);
    }

    #[test]
    fn tied_boundaries_merge_and_go_low() {
        let mut v = vec![0.0; 50];
        v.extend((1..=50).map(|i| i as f64));
        let a = Axis::build(&v, BinScheme::Equiprobable, 4).unwrap();
        // the boundary at the 25th order statistic coincides with the minimum and is dropped
        assert_eq!(a.bins(), 3);
        let c = a.counts(&v);
        assert_eq!(c.iter().sum::<u64>(), 100);
        assert_eq!(c[0], 50);
        for i in 0..a.bins() {
            assert!(a.width(i) > 0.0);
        }
    }

    #[test]
    fn equidistant_end_points() {
        let v = [0.0, 0.5, 1.0];
        let a = Axis::build(&v, BinScheme::Equidistant, 4).unwrap();
        assert_eq!(a.index(0.0), 0);
        assert_eq!(a.index(1.0), 3);
        assert_eq!(a.index(0.5), 2);
    }

    #[test]
    fn constant_data_is_degenerate() {
        assert!(matches!(
            Axis::build(&[1.0; 10], BinScheme::Equidistant, 4),
            Err(Error::Degenerate(_))
        ));
    }
}
