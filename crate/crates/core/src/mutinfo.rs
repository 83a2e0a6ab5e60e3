//! Mutual information estimators and the global correlation coefficient.
//!
//! Two histogram estimators are provided:
//!
//! * [`mutual_information_grid`]: plug-in sum over a fixed equiprobable grid,
//!   `Σ p̂ᵢⱼ ln(p̂ᵢⱼ / (p̂ᵢ· p̂·ⱼ))`. [`mutual_information_grid_corrected`]
//!   subtracts the first-order (Miller–Madow) bias of that sum, which lets
//!   the grid be fine enough to resolve strong dependence.
//! * [`mutual_information_adaptive`]: recursive marginal-equiquantization
//!   partition. Both coordinates are replaced by `(rank − ½) / n`, so each
//!   margin is uniform on `[0, 1)`. A cell is cut into four at the midpoint of
//!   its rank interval along each axis, which is the median of the marginal
//!   restricted to the cell. The cut is kept when a chi-square test rejects
//!   uniform allocation of the cell's points over the four children
//!   (`Σ (obs − c/4)² / (c/4)`, 3 dof). If the 2×2 test accepts, the same
//!   test is repeated on the 4×4 sub-grid (15 dof) and so on up to
//!   `lookahead` levels, which catches structure that cancels at the coarser
//!   level. Leaves contribute `p̂ ln(p̂ / (Δu·Δv))`.
//!
//! Rank coordinates make the adaptive estimate invariant under strictly
//! increasing transforms of either variable.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::entropy::{axis_entropy, default_univariate_bins, grid_joint_entropy, shared_grid};
use crate::error::{Error, Result};
use crate::histogram::{BinScheme, Grid2};
use crate::stats::{average_ranks, chi_square_critical};

/// Smallest sample accepted by the adaptive estimator.
pub const ADAPTIVE_MIN_N: usize = 100;

const CLAMP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MiEstimator {
    Adaptive,
    Grid,
    GridMillerMadow,
    ParametricNormal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiEstimate {
    /// nats, never negative
    pub value: f64,
    pub estimator: MiEstimator,
    /// occupied cells (grid) or leaves (adaptive)
    pub cells: usize,
    pub n: usize,
}

impl MiEstimate {
    pub fn global_correlation(&self) -> f64 {
        global_correlation(self.value).expect("MiEstimate values are non-negative")
    }
}

fn clamp_mi(raw: f64, what: &str) -> Result<f64> {
    if raw >= 0.0 {
        Ok(raw)
    } else if raw > -CLAMP_TOL {
        Ok(0.0)
    } else {
        Err(Error::Consistency(format!(
            "{what} mutual information sum is negative: {raw}"
        )))
    }
}

fn is_constant(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] == w[1])
}

fn check_pair(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::Alignment(format!(
            "paired samples differ in length: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    Ok(())
}

/// Plug-in MI of a contingency table (row-major, `by` columns).
pub(crate) fn table_mutual_information(counts: &[u64], by: usize) -> f64 {
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let nf = n as f64;
    let rows: Vec<u64> = counts.chunks(by).map(|r| r.iter().sum()).collect();
    let mut cols = vec![0u64; by];
    for r in counts.chunks(by) {
        for (c, v) in cols.iter_mut().zip(r) {
            *c += v;
        }
    }
    let mut mi = 0.0;
    for (i, row) in counts.chunks(by).enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let c = c as f64;
            mi += c / nf * (c * nf / (rows[i] as f64 * cols[j] as f64)).ln();
        }
    }
    mi
}

/// Default grid resolution for the MI grid estimator, `⌈n^{1/3}⌉` per axis.
pub fn default_mi_bins(n: usize) -> usize {
    default_univariate_bins(n)
}

/// Default resolution for [`mutual_information_grid_corrected`]: about 16
/// points per cell, `⌈√(n/16)⌉` per axis.
pub fn default_corrected_mi_bins(n: usize) -> usize {
    ((n as f64 / 16.0).sqrt().ceil() as usize).max(2)
}

fn mi_grid(x: &[f64], y: &[f64], bins: usize) -> Result<Grid2> {
    shared_grid(x, y, BinScheme::Equiprobable, bins)
}

pub fn mutual_information_grid(x: &[f64], y: &[f64], bins: usize) -> Result<MiEstimate> {
    grid_estimate(x, y, bins, false)
}

/// Grid MI minus its first-order bias `(K_xy − K_x − K_y + 1) / 2n`, where
/// the `K` count occupied cells. Negative corrected values are reported as 0.
pub fn mutual_information_grid_corrected(x: &[f64], y: &[f64], bins: usize) -> Result<MiEstimate> {
    grid_estimate(x, y, bins, true)
}

fn grid_estimate(x: &[f64], y: &[f64], bins: usize, corrected: bool) -> Result<MiEstimate> {
    check_pair(x, y)?;
    let n = x.len();
    if bins < 2 {
        return Err(Error::Domain(format!("need at least 2 bins, got {bins}")));
    }
    if n < 4 * bins * bins {
        return Err(Error::insufficient(
            format!("{bins}x{bins} MI grid"),
            4 * bins * bins,
            n,
        ));
    }
    let estimator = if corrected {
        MiEstimator::GridMillerMadow
    } else {
        MiEstimator::Grid
    };
    if is_constant(x) || is_constant(y) {
        warn!("grid mutual information on a constant series is defined as 0");
        return Ok(MiEstimate {
            value: 0.0,
            estimator,
            cells: 1,
            n,
        });
    }
    let grid = mi_grid(x, y, bins)?;
    let mut value = clamp_mi(
        table_mutual_information(&grid.counts, grid.y.bins()),
        "grid",
    )?;
    if corrected {
        let occupied = |t: Vec<u64>| t.iter().filter(|&&c| c > 0).count() as f64;
        let k = grid.nonempty() as f64 - occupied(grid.row_totals()) - occupied(grid.col_totals())
            + 1.0;
        value = (value - k / (2.0 * n as f64)).max(0.0);
    }
    Ok(MiEstimate {
        value,
        estimator,
        cells: grid.nonempty(),
        n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveOptions {
    /// significance level of the uniformity test
    pub alpha: f64,
    /// cells with fewer points are never split
    pub min_count: usize,
    /// root is depth 0
    pub max_depth: usize,
    /// how many sub-grid levels (2×2, 4×4, ...) are tested before giving up on a cell
    pub lookahead: usize,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            min_count: 16,
            max_depth: 20,
            lookahead: 2,
        }
    }
}

impl AdaptiveOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!(
                "alpha must lie in (0,1), got {}",
                self.alpha
            )));
        }
        if self.min_count < 4 {
            return Err(Error::Config(format!(
                "min_count must be at least 4, got {}",
                self.min_count
            )));
        }
        if self.lookahead == 0 || self.lookahead > 4 {
            return Err(Error::Config(format!(
                "lookahead must be between 1 and 4, got {}",
                self.lookahead
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionCell {
    /// half-open `[lo, hi)` in rank coordinates
    pub x_range: [f64; 2],
    pub y_range: [f64; 2],
    pub count: usize,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub children: Vec<PartitionCell>,
}

impl PartitionCell {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a PartitionCell>) {
        if self.is_leaf() {
            out.push(self);
        } else {
            for c in &self.children {
                c.collect_leaves(out);
            }
        }
    }

    fn levels(&self) -> usize {
        1 + self.children.iter().map(|c| c.levels()).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionTree {
    pub root: PartitionCell,
    pub n: usize,
}

impl PartitionTree {
    pub fn leaves(&self) -> Vec<&PartitionCell> {
        let mut out = Vec::new();
        self.root.collect_leaves(&mut out);
        out
    }

    /// Number of levels; an unsplit root has depth 1.
    pub fn depth(&self) -> usize {
        self.root.levels()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

struct Partitioner<'a> {
    u: &'a [f64],
    v: &'a [f64],
    opts: AdaptiveOptions,
    /// critical values for lookahead levels 1..=lookahead
    critical: Vec<f64>,
    n: f64,
    mi: f64,
    leaves: usize,
}

impl Partitioner<'_> {
    fn rejects_uniformity(&self, idx: &[u32], xr: [f64; 2], yr: [f64; 2]) -> bool {
        let c = idx.len();
        let mut table = Vec::new();
        for level in 1..=self.opts.lookahead {
            let k = 1usize << level;
            let cells = k * k;
            if level == 1 {
                if c < self.opts.min_count {
                    return false;
                }
            } else if c < 5 * cells {
                // expected count per sub-cell below 5: chi-square approximation unreliable
                return false;
            }
            table.clear();
            table.resize(cells, 0u32);
            let sx = k as f64 / (xr[1] - xr[0]);
            let sy = k as f64 / (yr[1] - yr[0]);
            for &i in idx {
                let i = i as usize;
                let a = (((self.u[i] - xr[0]) * sx) as usize).min(k - 1);
                let b = (((self.v[i] - yr[0]) * sy) as usize).min(k - 1);
                table[a * k + b] += 1;
            }
            let expected = c as f64 / cells as f64;
            let stat: f64 = table
                .iter()
                .map(|&o| {
                    let d = o as f64 - expected;
                    d * d / expected
                })
                .sum();
            if stat > self.critical[level - 1] {
                return true;
            }
        }
        false
    }

    fn grow(&mut self, idx: &mut [u32], xr: [f64; 2], yr: [f64; 2], depth: usize) -> PartitionCell {
        let count = idx.len();
        let split = depth < self.opts.max_depth && self.rejects_uniformity(idx, xr, yr);
        if !split {
            if count > 0 {
                let p = count as f64 / self.n;
                self.mi += p * (p / ((xr[1] - xr[0]) * (yr[1] - yr[0]))).ln();
            }
            self.leaves += 1;
            return PartitionCell {
                x_range: xr,
                y_range: yr,
                count,
                children: Vec::new(),
            };
        }
        let mx = 0.5 * (xr[0] + xr[1]);
        let my = 0.5 * (yr[0] + yr[1]);
        let (u, v) = (self.u, self.v);
        let quadrant = |i: u32| -> usize {
            let i = i as usize;
            2 * usize::from(u[i] >= mx) + usize::from(v[i] >= my)
        };
        idx.sort_by_key(|&i| quadrant(i));
        let mut bounds = [0usize; 5];
        for &i in idx.iter() {
            bounds[quadrant(i) + 1] += 1;
        }
        for q in 1..5 {
            bounds[q] += bounds[q - 1];
        }
        let ranges = [
            ([xr[0], mx], [yr[0], my]),
            ([xr[0], mx], [my, yr[1]]),
            ([mx, xr[1]], [yr[0], my]),
            ([mx, xr[1]], [my, yr[1]]),
        ];
        let mut children = Vec::with_capacity(4);
        for (q, (cx, cy)) in ranges.into_iter().enumerate() {
            let slice = &mut idx[bounds[q]..bounds[q + 1]];
            children.push(self.grow(slice, cx, cy, depth + 1));
        }
        PartitionCell {
            x_range: xr,
            y_range: yr,
            count,
            children,
        }
    }
}

/// Rank coordinates `(average rank − ½) / n`, all strictly inside (0, 1).
pub fn rank_coordinates(values: &[f64]) -> Vec<f64> {
    let n = values.len() as f64;
    average_ranks(values)
        .into_iter()
        .map(|r| (r - 0.5) / n)
        .collect()
}

pub fn mutual_information_adaptive(
    x: &[f64],
    y: &[f64],
    opts: &AdaptiveOptions,
) -> Result<(MiEstimate, PartitionTree)> {
    check_pair(x, y)?;
    opts.validate()?;
    let n = x.len();
    if n < ADAPTIVE_MIN_N {
        return Err(Error::insufficient(
            "adaptive mutual information",
            ADAPTIVE_MIN_N,
            n,
        ));
    }
    if n > u32::MAX as usize {
        return Err(Error::Domain(format!("sample too large: {n}")));
    }
    if is_constant(x) || is_constant(y) {
        warn!("adaptive mutual information on a constant series is defined as 0");
        let tree = PartitionTree {
            root: PartitionCell {
                x_range: [0.0, 1.0],
                y_range: [0.0, 1.0],
                count: n,
                children: Vec::new(),
            },
            n,
        };
        let est = MiEstimate {
            value: 0.0,
            estimator: MiEstimator::Adaptive,
            cells: 1,
            n,
        };
        return Ok((est, tree));
    }
    let u = rank_coordinates(x);
    let v = rank_coordinates(y);
    let critical = (1..=opts.lookahead)
        .map(|level| chi_square_critical(opts.alpha, (1usize << (2 * level)) - 1))
        .collect::<Result<Vec<_>>>()?;
    let mut p = Partitioner {
        u: &u,
        v: &v,
        opts: *opts,
        critical,
        n: n as f64,
        mi: 0.0,
        leaves: 0,
    };
    let mut idx: Vec<u32> = (0..n as u32).collect();
    let root = p.grow(&mut idx, [0.0, 1.0], [0.0, 1.0], 0);
    let value = clamp_mi(p.mi, "adaptive")?;
    Ok((
        MiEstimate {
            value,
            estimator: MiEstimator::Adaptive,
            cells: p.leaves,
            n,
        },
        PartitionTree { root, n },
    ))
}

/// `λ = √(1 − e^(−2I))`. Rounds to exactly 1 in double precision once `I` exceeds about 18.4.
pub fn global_correlation(mi: f64) -> Result<f64> {
    if !(mi >= 0.0) {
        return Err(Error::Domain(format!(
            "mutual information must be non-negative, got {mi}"
        )));
    }
    Ok((-(-2.0 * mi).exp_m1()).sqrt())
}

/// Gaussian mutual information implied by a linear correlation, `−½ ln(1 − r²)`.
pub fn normal_mutual_information(r: f64) -> Result<f64> {
    if !(r.abs() < 1.0) {
        return Err(Error::Domain(format!(
            "|r| must be below 1 for finite Gaussian MI, got {r}"
        )));
    }
    Ok(-0.5 * (-r * r).ln_1p())
}

/// `H(X) = I(X, B) + H(X | B)` evaluated on one equiprobable grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyDecomposition {
    pub h_x: f64,
    pub mi: f64,
    pub h_cond: f64,
    pub bins: usize,
}

pub fn entropy_decomposition(
    x: &[f64],
    benchmark: &[f64],
    bins: usize,
) -> Result<EntropyDecomposition> {
    check_pair(x, benchmark)?;
    let grid = mi_grid(x, benchmark, bins)?;
    let h_x = axis_entropy(&grid.x, &grid.row_totals(), grid.n, false);
    let h_b = axis_entropy(&grid.y, &grid.col_totals(), grid.n, false);
    let h_cond = grid_joint_entropy(&grid, false) - h_b;
    let mi = clamp_mi(
        table_mutual_information(&grid.counts, grid.y.bins()),
        "grid",
    )?;
    let residual = h_x - mi - h_cond;
    if residual.abs() >= 1e-12 {
        return Err(Error::Consistency(format!(
            "entropy decomposition residual {residual:e}"
        )));
    }
    Ok(EntropyDecomposition {
        h_x,
        mi,
        h_cond,
        bins: grid.x.bins(),
    })
}
