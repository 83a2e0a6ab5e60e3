//! Discrete and differential entropy.
//!
//! Differential entropy is estimated from a histogram as
//! `−Σ p̂ᵢ ln p̂ᵢ + Σ p̂ᵢ ln wᵢ`, where `wᵢ` is the cell width (the cell area in
//! two dimensions). The width term turns the discrete plug-in entropy of the
//! cell labels into an estimate of `−∫ f ln f`, so results are in nats and
//! shift by `ln c` when the data are scaled by `c`.
//!
//! Empty cells contribute nothing (`0 · ln 0 = 0`). An optional Miller–Madow
//! term `(m − 1) / 2n`, with `m` the number of occupied cells, can be added.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::histogram::{plug_in_differential, Axis, BinScheme, Grid2};

/// `ln √(2πe)`, the entropy of a unit-variance normal in nats.
pub const NORMAL_ENTROPY_UNIT: f64 = 1.418_938_533_204_672_7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct HistogramSpec {
    pub scheme: BinScheme,
    /// Cells per axis; `None` selects the default rule for the sample size.
    pub bins: Option<usize>,
    #[serde(default)]
    pub miller_madow: bool,
}

impl HistogramSpec {
    pub fn new(scheme: BinScheme, bins: usize) -> Result<Self> {
        if bins < 2 {
            return Err(Error::Domain(format!("need at least 2 bins, got {bins}")));
        }
        Ok(Self {
            scheme,
            bins: Some(bins),
            miller_madow: false,
        })
    }

    pub fn auto(scheme: BinScheme) -> Self {
        Self {
            scheme,
            bins: None,
            miller_madow: false,
        }
    }

    pub fn with_miller_madow(mut self, on: bool) -> Self {
        self.miller_madow = on;
        self
    }

    pub fn univariate_bins(&self, n: usize) -> usize {
        self.bins.unwrap_or_else(|| default_univariate_bins(n))
    }

    pub fn bivariate_bins(&self, n: usize) -> usize {
        self.bins.unwrap_or_else(|| default_bivariate_bins(n))
    }
}

/// `⌈n^{1/3}⌉`, at least 2.
pub fn default_univariate_bins(n: usize) -> usize {
    ((n as f64).cbrt().ceil() as usize).max(2)
}

/// `⌈n^{1/4}⌉` per axis, at least 2.
pub fn default_bivariate_bins(n: usize) -> usize {
    ((n as f64).sqrt().sqrt().ceil() as usize).max(2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntropyEstimator {
    PlugInEquidistant,
    PlugInEquiprobable,
    ParametricNormal,
}

impl From<BinScheme> for EntropyEstimator {
    fn from(s: BinScheme) -> Self {
        match s {
            BinScheme::Equidistant => EntropyEstimator::PlugInEquidistant,
            BinScheme::Equiprobable => EntropyEstimator::PlugInEquiprobable,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyEstimate {
    /// nats
    pub value: f64,
    pub estimator: EntropyEstimator,
    pub bins_used: usize,
    pub n: usize,
}

/// Shannon entropy `−Σ pᵢ ln pᵢ` of a probability vector.
pub fn entropy_discrete(p: &[f64]) -> Result<f64> {
    if let Some(bad) = p.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
        return Err(Error::Domain(format!("invalid probability {bad}")));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!(
            "probabilities sum to {total}, not 1"
        )));
    }
    Ok(p.iter().filter(|&&v| v > 0.0).map(|&v| -v * v.ln()).sum())
}

/// `ln(√(2πe)·σ)`.
pub fn normal_entropy(sigma: f64) -> Result<f64> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Domain(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    Ok(NORMAL_ENTROPY_UNIT + sigma.ln())
}

fn miller_madow(occupied: usize, n: usize) -> f64 {
    (occupied.saturating_sub(1)) as f64 / (2.0 * n as f64)
}

pub(crate) fn axis_entropy(axis: &Axis, counts: &[u64], n: usize, mm: bool) -> f64 {
    let (h, occupied) = plug_in_differential(
        counts.iter().enumerate().map(|(i, &c)| (c, axis.width(i))),
        n,
    );
    if mm {
        h + miller_madow(occupied, n)
    } else {
        h
    }
}

pub(crate) fn grid_joint_entropy(grid: &Grid2, mm: bool) -> f64 {
    let by = grid.y.bins();
    let (h, occupied) = plug_in_differential(
        grid.counts
            .iter()
            .enumerate()
            .map(|(k, &c)| (c, grid.x.width(k / by) * grid.y.width(k % by))),
        grid.n,
    );
    if mm {
        h + miller_madow(occupied, grid.n)
    } else {
        h
    }
}

pub fn differential_entropy(x: &[f64], spec: &HistogramSpec) -> Result<EntropyEstimate> {
    let n = x.len();
    let bins = spec.univariate_bins(n);
    if n < 4 * bins {
        return Err(Error::insufficient(
            format!("differential entropy with {bins} bins"),
            4 * bins,
            n,
        ));
    }
    let axis = Axis::build(x, spec.scheme, bins)?;
    let counts = axis.counts(x);
    Ok(EntropyEstimate {
        value: axis_entropy(&axis, &counts, n, spec.miller_madow),
        estimator: spec.scheme.into(),
        bins_used: axis.bins(),
        n,
    })
}

pub(crate) fn shared_grid(x: &[f64], y: &[f64], scheme: BinScheme, bins: usize) -> Result<Grid2> {
    if x.len() != y.len() {
        return Err(Error::Alignment(format!(
            "paired samples differ in length: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    if n < 4 * bins * bins {
        return Err(Error::insufficient(
            format!("{bins}x{bins} joint histogram"),
            4 * bins * bins,
            n,
        ));
    }
    Grid2::build(
        x,
        y,
        Axis::build(x, scheme, bins)?,
        Axis::build(y, scheme, bins)?,
    )
}

/// Joint differential entropy `H(X,Y)` from a 2-D histogram.
pub fn joint_entropy(x: &[f64], y: &[f64], spec: &HistogramSpec) -> Result<EntropyEstimate> {
    let grid = shared_grid(x, y, spec.scheme, spec.bivariate_bins(x.len()))?;
    Ok(EntropyEstimate {
        value: grid_joint_entropy(&grid, spec.miller_madow),
        estimator: spec.scheme.into(),
        bins_used: grid.x.bins() * grid.y.bins(),
        n: grid.n,
    })
}

/// `H(X|Y) = H(X,Y) − H(Y)`, with `H(Y)` read off the joint grid's y-axis.
pub fn conditional_entropy(x: &[f64], y: &[f64], spec: &HistogramSpec) -> Result<EntropyEstimate> {
    let grid = shared_grid(x, y, spec.scheme, spec.bivariate_bins(x.len()))?;
    let joint = grid_joint_entropy(&grid, spec.miller_madow);
    let hy = axis_entropy(&grid.y, &grid.col_totals(), grid.n, spec.miller_madow);
    Ok(EntropyEstimate {
        value: joint - hy,
        estimator: spec.scheme.into(),
        bins_used: grid.x.bins() * grid.y.bins(),
        n: grid.n,
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
    fn discrete_examples() {
        assert!((entropy_discrete(&[0.25; 4]).unwrap() - 4f64.ln()).abs() < 1e-15);
        assert_eq!(entropy_discrete(&[1.0, 0.0, 0.0]).unwrap(), 0.0);
        let h = entropy_discrete(&[0.5, 0.25, 0.25]).unwrap();
        assert!((h - 1.5 * 2f64.ln()).abs() < 1e-15);
        assert!((h - 1.039_720_770_839_917_9).abs() < 1e-12);
    }

    #[test]
    fn discrete_rejects_bad_vectors() {
        assert!(entropy_discrete(&[0.5, 0.6]).is_err());
        assert!(entropy_discrete(&[1.2, -0.2]).is_err());
    }

    #[test]
    fn normal_entropy_examples() {
        assert!((normal_entropy(1.0).unwrap() - 1.418_939).abs() < 1e-6);
        assert!((normal_entropy(std::f64::consts::E).unwrap() - 2.418_939).abs() < 1e-6);
        assert!((normal_entropy(0.01).unwrap() + 3.186_231).abs() < 1e-6);
        assert!(normal_entropy(0.0).is_err());
        assert!(normal_entropy(-1.0).is_err());
        let closed = (2.0 * std::f64::consts::PI * std::f64::consts::E)
            .sqrt()
            .ln();
        assert!((NORMAL_ENTROPY_UNIT - closed).abs() < 1e-15);
    }

    #[test]
    fn uniform_and_normal_samples() {
        let mut s = Stream::new(101);
        let u: Vec<f64> = (0..50_000).map(|_| s.uniform()).collect();
        let spec = HistogramSpec::new(BinScheme::Equidistant, 32).unwrap();
        let h = differential_entropy(&u, &spec).unwrap();
        assert!(h.value.abs() < 0.02, "{}", h.value);

        let z = normals(102, 50_000);
        let hd = differential_entropy(&z, &spec).unwrap().value;
        assert!((hd - NORMAL_ENTROPY_UNIT).abs() < 0.03, "{hd}");
        let hp = differential_entropy(
            &z,
            &HistogramSpec::new(BinScheme::Equiprobable, 32).unwrap(),
        )
        .unwrap()
        .value;
        assert!((hp - hd).abs() < 0.05, "{hp} vs {hd}");
    }

    #[test]
    fn too_few_points_or_constant() {
        let spec = HistogramSpec::new(BinScheme::Equidistant, 10).unwrap();
        assert!(matches!(
            differential_entropy(&normals(1, 39), &spec),
            Err(Error::InsufficientData { .. })
        ));
        assert!(matches!(
            differential_entropy(&[2.0; 100], &spec),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn joint_entropy_gaussian_oracles() {
        let n = 50_000;
        let x = normals(201, n);
        let e = normals(202, n);
        let spec = HistogramSpec::new(BinScheme::Equidistant, 16).unwrap();

        let h = joint_entropy(&x, &e, &spec).unwrap().value;
        assert!((h - 2.0 * NORMAL_ENTROPY_UNIT).abs() < 0.05, "{h}");

        let rho: f64 = 0.6;
        let y: Vec<f64> = x
            .iter()
            .zip(&e)
            .map(|(a, b)| rho * a + (1.0 - rho * rho).sqrt() * b)
            .collect();
        let want = 2.0 * NORMAL_ENTROPY_UNIT + 0.5 * (1.0 - rho * rho).ln();
        assert!((want - 2.614_733).abs() < 1e-6);
        let h = joint_entropy(&x, &y, &spec).unwrap().value;
        assert!((h - want).abs() < 0.05, "{h} vs {want}");

        // identical coordinates: property (ii) boundary
        let hxx = joint_entropy(&x, &x, &spec).unwrap().value;
        let hx = differential_entropy(&x, &spec).unwrap().value;
        assert!(hxx <= 2.0 * hx);
    }

    #[test]
    fn joint_requires_alignment_and_data() {
        let spec = HistogramSpec::new(BinScheme::Equidistant, 4).unwrap();
        assert!(matches!(
            joint_entropy(&normals(1, 100), &normals(2, 99), &spec),
            Err(Error::Alignment(_))
        ));
        assert!(matches!(
            joint_entropy(&normals(1, 63), &normals(2, 63), &spec),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn conditional_entropy_limits() {
        let n = 50_000;
        let x = normals(301, n);
        let y = normals(302, n);
        let spec = HistogramSpec::new(BinScheme::Equidistant, 16).unwrap();
        let hx = differential_entropy(&x, &spec).unwrap().value;
        let hxy = conditional_entropy(&x, &y, &spec).unwrap().value;
        assert!((hxy - hx).abs() < 0.05, "{hxy} vs {hx}");

        let self_cond = conditional_entropy(&x, &x, &spec).unwrap().value;
        assert!(self_cond <= 0.1 * hx, "{self_cond}");
    }

    #[test]
    fn conditioning_never_raises_entropy_on_shared_grid() {
        // H(X|Y) <= H(X) when H(X) is read off the same grid
        for (seed, scheme) in [(1, BinScheme::Equidistant), (2, BinScheme::Equiprobable)] {
            let x = normals(seed, 10_000);
            let y: Vec<f64> = normals(seed + 100, 10_000)
                .iter()
                .zip(&x)
                .map(|(e, a)| 0.3 * a + e)
                .collect();
            let grid = shared_grid(&x, &y, scheme, 12).unwrap();
            let hx = axis_entropy(&grid.x, &grid.row_totals(), grid.n, false);
            let cond = grid_joint_entropy(&grid, false)
                - axis_entropy(&grid.y, &grid.col_totals(), grid.n, false);
            assert!(cond <= hx + 1e-9);
            let hy = axis_entropy(&grid.y, &grid.col_totals(), grid.n, false);
            assert!(grid_joint_entropy(&grid, false) <= hx + hy + 1e-9);
        }
    }

    #[test]
    fn chain_rule_exact_on_shared_grid() {
        let x = normals(5, 20_000);
        let y = normals(6, 20_000);
        let spec = HistogramSpec::new(BinScheme::Equiprobable, 10).unwrap();
        let grid = shared_grid(&x, &y, spec.scheme, 10).unwrap();
        let joint = grid_joint_entropy(&grid, false);
        let hy = axis_entropy(&grid.y, &grid.col_totals(), grid.n, false);
        let cond = conditional_entropy(&x, &y, &spec).unwrap().value;
        assert!((joint - (hy + cond)).abs() < 1e-12);
    }

    #[test]
    fn miller_madow_adds_occupied_term() {
        let x = normals(8, 4000);
        let spec = HistogramSpec::new(BinScheme::Equidistant, 20).unwrap();
        let plain = differential_entropy(&x, &spec).unwrap();
        let mm = differential_entropy(&x, &spec.with_miller_madow(true)).unwrap();
        let occupied = Axis::build(&x, spec.scheme, 20)
            .unwrap()
            .counts(&x)
            .iter()
            .filter(|&&c| c > 0)
            .count();
        assert!((mm.value - plain.value - (occupied - 1) as f64 / 8000.0).abs() < 1e-14);
    }

    #[test]
    fn default_bin_rules() {
        assert_eq!(default_univariate_bins(50_000), 37);
        assert_eq!(default_univariate_bins(1_000), 10);
        assert_eq!(default_bivariate_bins(50_000), 15);
        assert_eq!(default_bivariate_bins(10_000), 10);
    }

    proptest! {
        #[test]
        fn discrete_entropy_bounded_by_log_k(raw in proptest::collection::vec(0.0f64..1.0, 1..40)) {
            let total: f64 = raw.iter().sum();
            prop_assume!(total > 1e-6);
            let p: Vec<f64> = raw.iter().map(|v| v / total).collect();
            let h = entropy_discrete(&p).unwrap();
            prop_assert!(h >= 0.0);
            prop_assert!(h <= (p.len() as f64).ln() + 1e-12);
        }

        #[test]
        fn translation_invariant_equidistant(seed in 0u64..1000, shift in -50.0f64..50.0) {
            let x = normals(seed, 2_000);
            let shifted: Vec<f64> = x.iter().map(|v| v + shift).collect();
            let spec = HistogramSpec::new(BinScheme::Equidistant, 12).unwrap();
            let a = differential_entropy(&x, &spec).unwrap().value;
            let b = differential_entropy(&shifted, &spec).unwrap().value;
            prop_assert!((a - b).abs() < 1e-9, "{} vs {}", a, b);
        }
    }
}
