//! Ensemble averages, Y sweeps, fitting and regressions.

mod conditional;
mod fit;
mod ks;
mod scaling;

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};

use crate::complexity::{complexity_of, YRoute};
use crate::ensembles::{build_profile, sample_c, Beta, Protocol, ProtocolKind};
use crate::measures::{MeasureSet, BITS, R0_FLOOR};
use crate::rng::{self, domain};
use crate::schmidt;
use crate::{Error, Result};

pub use conditional::{
    conditional_by_trace, conditional_from_samples, trace_centered_gamma, ConditionalCurve, LocalG, Slope, TraceBin, TraceSample,
};
pub use fit::{fit_growth, fit_growth_data, growth_model, FitResult};
pub use ks::{ks_two_sample, KsResult};
pub use scaling::{n_log2_n, scaling_fit, scaling_report, ScalingMeasure, ScalingReport, ScalingRow};

/// Mean and standard error.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub se: f64,
}

impl Stat {
    /// Sample mean and `sd/√n` (unbiased variance). NaN for fewer than two values.
    pub fn of(xs: impl IntoIterator<Item = f64>) -> Self {
        let xs: Vec<f64> = xs.into_iter().collect();
        let n = xs.len() as f64;
        if xs.len() < 2 {
            return Stat { mean: xs.first().copied().unwrap_or(f64::NAN), se: f64::NAN };
        }
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        Stat { mean, se: (var / n).sqrt() }
    }

    /// `(a - b)/√(se_a² + se_b²)`.
    pub fn z_diff(&self, other: &Stat) -> f64 {
        (self.mean - other.mean) / self.se.hypot(other.se)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub protocol: Protocol,
    pub y: f64,
    pub n_samples: usize,
    /// Samples excluded from `R₀` because an eigenvalue fell below the floor.
    pub n_floored: usize,
    /// Samples violating `R_∞ ≤ R₂ ≤ R₁` beyond roundoff.
    pub order_violations: usize,
    pub r1: Stat,
    pub r2: Stat,
    pub r_inf: Stat,
    pub r0: Stat,
    pub inv_s2: Stat,
    pub s3_over_s2_sq: Stat,
}

impl SweepPoint {
    pub fn from_measures(protocol: Protocol, y: f64, ms: &[MeasureSet]) -> Self {
        SweepPoint {
            protocol,
            y,
            n_samples: ms.len(),
            n_floored: ms.iter().filter(|m| m.r0_floored).count(),
            order_violations: ms.iter().filter(|m| !m.ordering_holds()).count(),
            r1: Stat::of(ms.iter().map(|m| m.r1)),
            r2: Stat::of(ms.iter().map(|m| m.r2())),
            r_inf: Stat::of(ms.iter().map(|m| m.r_inf)),
            r0: Stat::of(ms.iter().filter(|m| !m.r0_floored).map(|m| m.r0)),
            inv_s2: Stat::of(ms.iter().map(|m| m.inv_s2())),
            s3_over_s2_sq: Stat::of(ms.iter().map(|m| m.s3_over_s2_sq())),
        }
    }

    pub fn measure(&self, m: Measure) -> Stat {
        match m {
            Measure::R1 => self.r1,
            Measure::R2 => self.r2,
        }
    }
}

/// Entropy fitted by the growth model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Measure {
    R1,
    R2,
}

impl Measure {
    pub fn name(self) -> &'static str {
        match self {
            Measure::R1 => "R1",
            Measure::R2 => "R2",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepCurve {
    pub n: usize,
    pub nu0: usize,
    pub beta: Beta,
    pub gamma: f64,
    pub points: Vec<SweepPoint>,
}

/// Inputs of [`sweep`].
#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub grid: Vec<Protocol>,
    pub n: usize,
    pub nu0: usize,
    pub beta: Beta,
    pub gamma: f64,
    pub n_samples: usize,
    pub seed: u64,
    pub base: f64,
    pub r0_floor: f64,
    pub y_route: YRoute,
}

impl SweepConfig {
    pub fn new(grid: Vec<Protocol>, n: usize, beta: Beta, n_samples: usize, seed: u64) -> Self {
        SweepConfig {
            grid,
            n,
            nu0: 0,
            beta,
            gamma: 0.25,
            n_samples,
            seed,
            base: BITS,
            r0_floor: R0_FLOOR,
            y_route: YRoute::Closed,
        }
    }
}

/// Measures of `n_samples` draws at one protocol point. Sample `i` uses
/// stream `(seed, SAMPLE, i)` at every grid point, so neighbouring points
/// share their underlying normals.
#[allow(clippy::too_many_arguments)]
pub fn sample_point(
    protocol: Protocol,
    n: usize,
    nu0: usize,
    beta: Beta,
    n_samples: usize,
    seed: u64,
    base: f64,
    r0_floor: f64,
) -> Result<Vec<MeasureSet>> {
    let profile = build_profile(protocol, n, nu0, beta)?;
    (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(seed, domain::SAMPLE, i);
            let c = sample_c(&profile, &mut r);
            let spec = schmidt::schmidt_spectrum(&c).map_err(|e| e.with_sample(i))?;
            Ok(MeasureSet::compute(&spec, base, r0_floor))
        })
        .collect()
}

pub fn sweep(cfg: &SweepConfig) -> Result<SweepCurve> {
    if cfg.n_samples < 2 {
        return Err(Error::InsufficientData(format!("need at least 2 samples per point, got {}", cfg.n_samples)));
    }
    if cfg.grid.is_empty() {
        return Err(Error::domain("empty parameter grid"));
    }
    let ys = cfg
        .grid
        .iter()
        .enumerate()
        .map(|(i, &p)| complexity_of(p, cfg.n, cfg.nu0, cfg.beta, cfg.gamma, cfg.y_route).map_err(|e| e.at_grid(i)))
        .collect::<Result<Vec<_>>>()?;
    if let Some(i) = ys.windows(2).position(|w| !(w[1].y > w[0].y)) {
        return Err(Error::domain(format!(
            "grid must give strictly increasing Y (points {} and {} give {} and {})",
            i,
            i + 1,
            ys[i].y,
            ys[i + 1].y
        )));
    }
    let mut points = Vec::with_capacity(cfg.grid.len());
    for (i, (&p, y)) in cfg.grid.iter().zip(&ys).enumerate() {
        let ms = sample_point(p, cfg.n, cfg.nu0, cfg.beta, cfg.n_samples, cfg.seed, cfg.base, cfg.r0_floor)
            .map_err(|e| e.at_grid(i))?;
        points.push(SweepPoint::from_measures(p, y.y, &ms));
    }
    Ok(SweepCurve { n: cfg.n, nu0: cfg.nu0, beta: cfg.beta, gamma: cfg.gamma, points })
}

/// Supremum of `Y` over a protocol family (fully entangling limit).
pub fn y_supremum(kind: ProtocolKind, n: usize, nu0: usize, beta: Beta, gamma: f64) -> Result<f64> {
    let p = if kind.increasing() { 1e15 } else { 1e-15 };
    Ok(complexity_of(kind.with_param(p), n, nu0, beta, gamma, YRoute::Closed)?.y)
}

/// Protocol parameter whose closed-form `Y` equals `target_y` (bisection in log space).
pub fn param_for_y(kind: ProtocolKind, target_y: f64, n: usize, nu0: usize, beta: Beta, gamma: f64) -> Result<f64> {
    let y_at = |lp: f64| complexity_of(kind.with_param(lp.exp()), n, nu0, beta, gamma, YRoute::Closed).map(|v| v.y);
    let (mut lo, mut hi) = ((1e-15f64).ln(), (1e15f64).ln());
    let (y_lo, y_hi) = (y_at(lo)?, y_at(hi)?);
    let (y_min, y_max) = if y_lo < y_hi { (y_lo, y_hi) } else { (y_hi, y_lo) };
    if !(target_y > y_min && target_y < y_max) {
        return Err(Error::domain(format!(
            "Y = {target_y} is outside the {kind} range ({y_min}, {y_max})"
        )));
    }
    let increasing = y_hi > y_lo;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (y_at(mid)? < target_y) == increasing {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}

/// Protocol points at the given `Y` values.
pub fn grid_for_ys(kind: ProtocolKind, ys: &[f64], n: usize, nu0: usize, beta: Beta, gamma: f64) -> Result<Vec<Protocol>> {
    ys.iter()
        .enumerate()
        .map(|(i, &y)| param_for_y(kind, y, n, nu0, beta, gamma).map(|p| kind.with_param(p)).map_err(|e| e.at_grid(i)))
        .collect()
}

fn sig12<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format!("{v:.11e}"))
}

/// One CSV row of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub protocol: String,
    pub param: f64,
    #[serde(rename = "Y", serialize_with = "sig12")]
    pub y: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub beta: u8,
    #[serde(rename = "n")]
    pub n_samples: usize,
    #[serde(rename = "R1")]
    pub r1: f64,
    #[serde(rename = "R1_se")]
    pub r1_se: f64,
    #[serde(rename = "R2")]
    pub r2: f64,
    #[serde(rename = "R2_se")]
    pub r2_se: f64,
    #[serde(rename = "R0")]
    pub r0: f64,
    #[serde(rename = "R0_se")]
    pub r0_se: f64,
    #[serde(rename = "invS2")]
    pub inv_s2: f64,
    #[serde(rename = "invS2_se")]
    pub inv_s2_se: f64,
    #[serde(rename = "S3S22")]
    pub s3s22: f64,
    #[serde(rename = "S3S22_se")]
    pub s3s22_se: f64,
    pub n_floored: usize,
}

impl SweepCurve {
    pub fn rows(&self) -> Vec<SweepRow> {
        self.points
            .iter()
            .map(|p| SweepRow {
                protocol: p.protocol.label().to_string(),
                param: p.protocol.param(),
                y: p.y,
                n: self.n,
                beta: self.beta.into(),
                n_samples: p.n_samples,
                r1: p.r1.mean,
                r1_se: p.r1.se,
                r2: p.r2.mean,
                r2_se: p.r2.se,
                r0: p.r0.mean,
                r0_se: p.r0.se,
                inv_s2: p.inv_s2.mean,
                inv_s2_se: p.inv_s2.se,
                s3s22: p.s3_over_s2_sq.mean,
                s3s22_se: p.s3_over_s2_sq.se,
                n_floored: p.n_floored,
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_rows(out, &self.rows())
    }

    pub fn ys(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.y).collect()
    }

    pub fn total_order_violations(&self) -> usize {
        self.points.iter().map(|p| p.order_violations).sum()
    }
}

pub fn write_rows<W: Write>(out: W, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows<R: Read>(input: R) -> Result<Vec<SweepRow>> {
    csv::Reader::from_reader(input).deserialize().map(|r| r.map_err(Error::from)).collect()
}
