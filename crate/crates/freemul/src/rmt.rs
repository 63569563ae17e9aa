//! Monte Carlo spectra of products of random matrices.
//!
//! Each trial draws a selfadjoint matrix `A` and a positive one `B`
//! independently and diagonalizes `B^{1/2} A B^{1/2}`, which has the same
//! spectrum as `AB`.

use std::fmt;
use std::str::FromStr;

use freemul_core::DensityCurve;
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const EIGEN_EPS: f64 = 1e-14;
const EIGEN_MAX_ITER: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsemblePair {
    /// Wigner `A`, Wishart `B`.
    WignerXWishart,
    /// `A = W₁ − I`, `B = W₂` for independent Wishart `W₁`, `W₂`.
    WishartXShiftedWishart,
}

impl EnsemblePair {
    pub const ALL: [EnsemblePair; 2] = [
        EnsemblePair::WignerXWishart,
        EnsemblePair::WishartXShiftedWishart,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EnsemblePair::WignerXWishart => "wigner_x_wishart",
            EnsemblePair::WishartXShiftedWishart => "wishart_x_shifted_wishart",
        }
    }
}

impl fmt::Display for EnsemblePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EnsemblePair {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        EnsemblePair::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| format!("unknown ensemble pair {s:?}"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n: usize,
    pub trials: u64,
    pub seed: u64,
    pub ensemble_pair: EnsemblePair,
    pub bins: usize,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidConfig("n must be at least 2"));
        }
        if self.trials < 1 {
            return Err(Error::InvalidConfig("trials must be at least 1"));
        }
        if self.bins < 10 {
            return Err(Error::InvalidConfig("bins must be at least 10"));
        }
        Ok(())
    }
}

/// Independent generator for one trial: stream `trial` of the ChaCha8
/// generator keyed by `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

fn gaussian_matrix<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Symmetric matrix whose entries on and above the diagonal are independent
/// `N(0, 1/n)`, drawn row by row. Limiting spectrum: the standard semicircle.
pub fn sample_wigner<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let scale = 1.0 / (n as f64).sqrt();
    let mut x = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = scale * rng.sample::<f64, _>(StandardNormal);
            x[(i, j)] = v;
            x[(j, i)] = v;
        }
    }
    x
}

/// `AAᵀ/n − shift·I` for an `n × n` standard Gaussian `A`. Without shift the
/// limiting spectrum is free Poisson with rate 1.
pub fn sample_wishart<R: Rng + ?Sized>(n: usize, rng: &mut R, shift: f64) -> DMatrix<f64> {
    let a = gaussian_matrix(n, rng);
    let mut w = &a * a.transpose() / n as f64;
    for i in 0..n {
        w[(i, i)] -= shift;
    }
    w
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

fn eigen(m: DMatrix<f64>, trial: u64) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    SymmetricEigen::try_new(symmetrize(m), EIGEN_EPS, EIGEN_MAX_ITER).ok_or(Error::Eigensolver(trial))
}

/// Principal square root of a positive semidefinite matrix; eigenvalues
/// that round to slightly negative values are treated as zero.
pub fn psd_sqrt(b: &DMatrix<f64>, trial: u64) -> Result<DMatrix<f64>> {
    let e = eigen(b.clone(), trial)?;
    let roots = e.eigenvalues.map(|v| v.max(0.0).sqrt());
    Ok(&e.eigenvectors * DMatrix::from_diagonal(&roots) * e.eigenvectors.transpose())
}

/// Eigenvalues of `B^{1/2} A B^{1/2}`, ascending.
pub fn symmetrized_product_eigenvalues(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    trial: u64,
) -> Result<Vec<f64>> {
    let s = psd_sqrt(b, trial)?;
    let mut values: Vec<f64> = eigen(&s * a * &s, trial)?.eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

fn trial_spectrum(config: &SimConfig, trial: u64) -> Result<Vec<f64>> {
    let mut rng = trial_rng(config.seed, trial);
    let n = config.n;
    let (a, b) = match config.ensemble_pair {
        EnsemblePair::WignerXWishart => {
            let a = sample_wigner(n, &mut rng);
            (a, sample_wishart(n, &mut rng, 0.0))
        }
        EnsemblePair::WishartXShiftedWishart => {
            let a = sample_wishart(n, &mut rng, 1.0);
            (a, sample_wishart(n, &mut rng, 0.0))
        }
    };
    symmetrized_product_eigenvalues(&a, &b, trial)
}

/// Pooled eigenvalues of every trial, in trial order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSample {
    pub eigenvalues: Vec<f64>,
    pub config: SimConfig,
}

impl SpectrumSample {
    /// Empirical `(1/len) Σ λᵏ`.
    pub fn moment(&self, k: i32) -> f64 {
        self.eigenvalues.iter().map(|v| v.powi(k)).sum::<f64>() / self.eigenvalues.len() as f64
    }
}

/// Runs every trial (in parallel on the current rayon pool) and pools the
/// spectra. The result depends only on `config`.
pub fn product_spectrum(config: &SimConfig) -> Result<SpectrumSample> {
    config.validate()?;
    let per_trial: Vec<Vec<f64>> = (0..config.trials)
        .into_par_iter()
        .map(|t| trial_spectrum(config, t))
        .collect::<Result<_>>()?;
    Ok(SpectrumSample {
        eigenvalues: per_trial.concat(),
        config: *config,
    })
}

/// Normalized cumulative distribution of a density curve, linear inside each
/// grid cell.
struct Cdf<'a> {
    grid: &'a [f64],
    values: &'a [f64],
    cumulative: Vec<f64>,
}

impl<'a> Cdf<'a> {
    fn new(density: &'a DensityCurve) -> Option<Self> {
        let (grid, values) = (&density.grid[..], &density.values[..]);
        let mut cumulative = Vec::with_capacity(grid.len());
        cumulative.push(0.0);
        for i in 1..grid.len() {
            let cell = 0.5 * (grid[i] - grid[i - 1]) * (values[i] + values[i - 1]);
            cumulative.push(cumulative[i - 1] + cell);
        }
        let total = *cumulative.last()?;
        if total.is_nan() || total <= 0.0 {
            return None;
        }
        cumulative.iter_mut().for_each(|c| *c /= total);
        Some(Cdf {
            grid,
            values,
            cumulative,
        })
    }

    fn at(&self, x: f64) -> f64 {
        let n = self.grid.len();
        if x <= self.grid[0] {
            return 0.0;
        }
        if x >= self.grid[n - 1] {
            return 1.0;
        }
        let i = self.grid.partition_point(|&g| g <= x) - 1;
        let (x0, x1) = (self.grid[i], self.grid[i + 1]);
        let (f0, f1) = (self.values[i], self.values[i + 1]);
        let h = x - x0;
        let slope = (f1 - f0) / (x1 - x0);
        let scale = self.cumulative[i + 1] - self.cumulative[i];
        let cell = 0.5 * (x1 - x0) * (f0 + f1);
        let partial = if cell > 0.0 {
            scale * (f0 * h + 0.5 * slope * h * h) / cell
        } else {
            0.0
        };
        self.cumulative[i] + partial
    }

    /// Smallest `x` with `F(x) ≥ u`.
    fn inverse(&self, u: f64) -> f64 {
        let i = self
            .cumulative
            .partition_point(|&c| c < u)
            .clamp(1, self.grid.len() - 1);
        let (mut lo, mut hi) = (self.grid[i - 1], self.grid[i]);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.at(mid) < u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// Histogram of a sample against a predicted density.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramReport {
    /// Bin edges, `bins + 1` of them, spanning the density grid.
    pub edges: Vec<f64>,
    /// Empirical density per bin (counts / (len · width)).
    pub histogram: Vec<f64>,
    /// Predicted density per bin (normalized curve mass in the bin / width).
    pub predicted: Vec<f64>,
    /// `Σ |histogram − predicted| · width`.
    pub l1_distance: f64,
    /// Largest gap between the empirical and predicted distribution
    /// functions.
    pub ks_distance: f64,
    /// Fraction of the sample outside the density grid (counted into the
    /// edge bins).
    pub out_of_range_fraction: f64,
    /// Trapezoidal mass of the density before normalization.
    pub density_mass: f64,
}

/// Compares a sample with a density curve on `bins` equal bins over the
/// density grid. The density is renormalized to unit mass.
pub fn compare_histogram(
    sample: &[f64],
    density: &DensityCurve,
    bins: usize,
) -> Result<HistogramReport> {
    if bins == 0 {
        return Err(Error::InvalidConfig("bins must be positive"));
    }
    if sample.is_empty() {
        return Err(Error::InvalidConfig("empty sample"));
    }
    if density.grid.len() < 2 {
        return Err(Error::InvalidConfig("density grid needs at least two points"));
    }
    let cdf = Cdf::new(density).ok_or(Error::InvalidConfig("density has no mass"))?;
    let (lo, hi) = (density.grid[0], density.grid[density.grid.len() - 1]);
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins).map(|i| lo + i as f64 * width).collect();

    let mut counts = vec![0usize; bins];
    let mut outside = 0usize;
    for &x in sample {
        if x < lo || x > hi {
            outside += 1;
        }
        let i = ((x - lo) / width).floor();
        let i = if i.is_nan() { 0 } else { i.clamp(0.0, (bins - 1) as f64) as usize };
        counts[i] += 1;
    }
    let len = sample.len() as f64;
    let histogram: Vec<f64> = counts.iter().map(|&c| c as f64 / (len * width)).collect();
    let predicted: Vec<f64> = edges
        .windows(2)
        .map(|e| (cdf.at(e[1]) - cdf.at(e[0])) / width)
        .collect();
    let l1_distance = histogram
        .iter()
        .zip(&predicted)
        .map(|(h, p)| (h - p).abs() * width)
        .sum();

    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let ks_distance = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf.at(x);
            (f - i as f64 / len).abs().max((f - (i + 1) as f64 / len).abs())
        })
        .fold(0.0, f64::max);

    Ok(HistogramReport {
        edges,
        histogram,
        predicted,
        l1_distance,
        ks_distance,
        out_of_range_fraction: outside as f64 / len,
        density_mass: density.mass(),
    })
}

/// `count` independent draws from a density curve by inverting its
/// (normalized, piecewise quadratic) distribution function.
pub fn sample_from_density<R: Rng + ?Sized>(
    density: &DensityCurve,
    count: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if density.grid.len() < 2 {
        return Err(Error::InvalidConfig("density grid needs at least two points"));
    }
    let cdf = Cdf::new(density).ok_or(Error::InvalidConfig("density has no mass"))?;
    Ok((0..count).map(|_| cdf.inverse(rng.random::<f64>())).collect())
}
