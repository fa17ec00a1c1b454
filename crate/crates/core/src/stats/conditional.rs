//! Entropies of unnormalized Wishart spectra conditioned on the trace `S₁`.

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Stat;
use crate::ensembles::{sample_stationary, Beta};
use crate::rng::{self, domain};
use crate::schmidt;
use crate::{Error, Result};

/// One unnormalized spectrum reduced to its trace and entropies.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub s1: f64,
    /// `-Σ λ log_b λ`.
    pub r1: f64,
    /// `-log_b Σ λ²`.
    pub r2: f64,
}

impl TraceSample {
    pub fn from_eigenvalues(lambdas: &[f64], base: f64) -> Self {
        let lb = base.ln();
        let s1 = lambdas.iter().sum();
        let r1 = -lambdas.iter().filter(|&&l| l > 0.0).map(|&l| l * l.ln()).sum::<f64>() / lb;
        let r2 = -lambdas.iter().map(|l| l * l).sum::<f64>().ln() / lb;
        TraceSample { s1, r1, r2 }
    }
}

/// `γ` for which `E[S₁] = 1`: `βN(N+ν₀)/2`.
pub fn trace_centered_gamma(n: usize, nu0: usize, beta: Beta) -> f64 {
    beta.value() * (n * (n + nu0)) as f64 / 2.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceBin {
    pub lo: f64,
    pub hi: f64,
    /// Mean `S₁` of the samples in the bin.
    pub center: f64,
    pub width: f64,
    pub count: usize,
    pub r1: Stat,
    pub r2: Stat,
    /// Empirical density of `S₁` in the bin.
    pub density: f64,
}

/// Weighted least-squares slope of bin means against bin centers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Slope {
    pub slope: f64,
    pub se: f64,
    pub z: f64,
}

/// Local quadratic estimate of `g(S₁) = ⟨R|S₁⟩/⟨R|1⟩` near `S₁ = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalG {
    pub value_at_1: f64,
    pub slope_at_1: f64,
    /// `g'(1)`.
    pub g_slope: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionalCurve {
    pub n_samples: usize,
    pub s1_mean: f64,
    pub bins: Vec<TraceBin>,
    pub slope_r1: Slope,
    pub slope_r2: Slope,
    pub g_r1: Vec<f64>,
    pub g_r2: Vec<f64>,
    pub local_r1: LocalG,
    pub local_r2: LocalG,
    /// Bin density normalized at `S₁ = 1`.
    pub g0: Vec<f64>,
    pub local_g0: LocalG,
}

/// Stationary study: `n_samples` spectra of `CC†` (no trace projection), binned by `S₁`.
#[allow(clippy::too_many_arguments)]
pub fn conditional_by_trace(
    n: usize,
    nu0: usize,
    beta: Beta,
    gamma: f64,
    n_samples: usize,
    n_bins: usize,
    seed: u64,
    base: f64,
) -> Result<ConditionalCurve> {
    if n_samples < 10_000 {
        return Err(Error::InsufficientData(format!("conditional study needs at least 10⁴ samples, got {n_samples}")));
    }
    let samples = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(seed, domain::CONDITIONAL, i);
            let c = sample_stationary(n, nu0, beta, gamma, &mut r)?;
            let lambdas = schmidt::eigenvalues(&schmidt::gram(&c)).map_err(|e| e.with_sample(i))?;
            Ok(TraceSample::from_eigenvalues(&lambdas, base))
        })
        .collect::<Result<Vec<_>>>()?;
    conditional_from_samples(&samples, n_bins)
}

/// Equal-count bins in `S₁` and the derived conditional quantities.
pub fn conditional_from_samples(samples: &[TraceSample], n_bins: usize) -> Result<ConditionalCurve> {
    if n_bins < 3 {
        return Err(Error::Binning(format!("need at least 3 bins, got {n_bins}")));
    }
    if samples.len() < 2 * n_bins {
        return Err(Error::Binning(format!("{} samples cannot fill {n_bins} bins with two each", samples.len())));
    }
    if samples.iter().any(|s| !(s.s1.is_finite() && s.r1.is_finite() && s.r2.is_finite())) {
        return Err(Error::numerical("non-finite trace sample"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.s1.total_cmp(&b.s1));
    let total = sorted.len();
    let bounds: Vec<usize> = (0..=n_bins).map(|k| k * total / n_bins).collect();
    let edge = |k: usize| -> f64 {
        if k == 0 {
            sorted[0].s1
        } else if k == n_bins {
            sorted[total - 1].s1
        } else {
            0.5 * (sorted[bounds[k] - 1].s1 + sorted[bounds[k]].s1)
        }
    };
    let mut bins = Vec::with_capacity(n_bins);
    for k in 0..n_bins {
        let chunk = &sorted[bounds[k]..bounds[k + 1]];
        let (lo, hi) = (edge(k), edge(k + 1));
        let width = hi - lo;
        if !(width > 0.0) {
            return Err(Error::Binning(format!("bin {k} has zero width")));
        }
        bins.push(TraceBin {
            lo,
            hi,
            center: chunk.iter().map(|s| s.s1).sum::<f64>() / chunk.len() as f64,
            width,
            count: chunk.len(),
            r1: Stat::of(chunk.iter().map(|s| s.r1)),
            r2: Stat::of(chunk.iter().map(|s| s.r2)),
            density: chunk.len() as f64 / (total as f64 * width),
        });
    }
    if !(bins[0].lo <= 1.0 && 1.0 <= bins[n_bins - 1].hi) {
        return Err(Error::Binning(format!(
            "no bin contains S₁ = 1 (samples span [{}, {}])",
            bins[0].lo,
            bins[n_bins - 1].hi
        )));
    }
    let s1_mean = samples.iter().map(|s| s.s1).sum::<f64>() / total as f64;
    let x: Vec<f64> = bins.iter().map(|b| b.center).collect();
    let slope_r1 = weighted_slope(&x, &bins.iter().map(|b| b.r1).collect::<Vec<_>>());
    let slope_r2 = weighted_slope(&x, &bins.iter().map(|b| b.r2).collect::<Vec<_>>());

    let s1_sd = (samples.iter().map(|s| (s.s1 - s1_mean).powi(2)).sum::<f64>() / (total as f64 - 1.0)).sqrt();
    let near = local_window(&x, s1_sd);
    let inv_var = |st: &Stat| 1.0 / (st.se * st.se).max(f64::MIN_POSITIVE);
    let fit = |pts: Vec<(f64, f64)>| {
        let xs: Vec<f64> = near.iter().map(|&k| x[k]).collect();
        let ys: Vec<(f64, f64)> = near.iter().map(|&k| pts[k]).collect();
        local_quadratic(&xs, &ys)
    };
    let local_r1 = fit(bins.iter().map(|b| (b.r1.mean, inv_var(&b.r1))).collect())?;
    let local_r2 = fit(bins.iter().map(|b| (b.r2.mean, inv_var(&b.r2))).collect())?;
    // density error ~ density/√count
    let local_g0 = fit(bins.iter().map(|b| (b.density, b.count as f64 / (b.density * b.density))).collect())?;
    Ok(ConditionalCurve {
        n_samples: total,
        s1_mean,
        g_r1: bins.iter().map(|b| b.r1.mean / local_r1.value_at_1).collect(),
        g_r2: bins.iter().map(|b| b.r2.mean / local_r2.value_at_1).collect(),
        g0: bins.iter().map(|b| b.density / local_g0.value_at_1).collect(),
        bins,
        slope_r1,
        slope_r2,
        local_r1,
        local_r2,
        local_g0,
    })
}

fn weighted_slope(x: &[f64], y: &[Stat]) -> Slope {
    let (mut sw, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&x, s) in x.iter().zip(y) {
        let w = 1.0 / (s.se * s.se).max(f64::MIN_POSITIVE);
        sw += w;
        sx += w * x;
        sy += w * s.mean;
        sxx += w * x * x;
        sxy += w * x * s.mean;
    }
    let det = sw * sxx - sx * sx;
    let slope = (sw * sxy - sx * sy) / det;
    let se = (sw / det).sqrt();
    Slope { slope, se, z: slope / se }
}

/// Bins whose centers lie within one `S₁` standard deviation of 1, or the
/// five nearest when that window is thinner.
fn local_window(x: &[f64], sd: f64) -> Vec<usize> {
    let inside: Vec<usize> = (0..x.len()).filter(|&k| (x[k] - 1.0).abs() <= sd).collect();
    if inside.len() >= LOCAL_MIN_BINS {
        return inside;
    }
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| (x[a] - 1.0).abs().total_cmp(&(x[b] - 1.0).abs()));
    order.truncate(LOCAL_MIN_BINS.min(x.len()));
    order.sort_unstable();
    order
}

const LOCAL_MIN_BINS: usize = 5;

/// Weighted least-squares quadratic in `S₁ - 1` through `(mean, weight)` points,
/// read off at `S₁ = 1`.
fn local_quadratic(x: &[f64], y: &[(f64, f64)]) -> Result<LocalG> {
    let mut a = Matrix3::zeros();
    let mut rhs = Vector3::zeros();
    for (&x, &(v, w)) in x.iter().zip(y) {
        let basis = Vector3::new(1.0, x - 1.0, (x - 1.0) * (x - 1.0));
        a += w * basis * basis.transpose();
        rhs += w * v * basis;
    }
    let c = a
        .cholesky()
        .map(|ch| ch.solve(&rhs))
        .ok_or_else(|| Error::Binning("bins do not determine a quadratic at S₁ = 1".into()))?;
    let (value_at_1, slope_at_1) = (c[0], c[1]);
    if !(value_at_1.is_finite() && slope_at_1.is_finite()) || value_at_1 == 0.0 {
        return Err(Error::Binning("bins do not determine g at S₁ = 1".into()));
    }
    Ok(LocalG { value_at_1, slope_at_1, g_slope: slope_at_1 / value_at_1 })
}
