//! Deep-`Y` measures against `N log₂N`.

use serde::{Deserialize, Serialize};

use super::{sample_point, SweepPoint, Stat};
use crate::ensembles::{Beta, Protocol};
use crate::measures::{BITS, R0_FLOOR};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScalingMeasure {
    R0,
    InvS2,
}

impl ScalingMeasure {
    pub fn name(self) -> &'static str {
        match self {
            ScalingMeasure::R0 => "R0",
            ScalingMeasure::InvS2 => "invS2",
        }
    }

    pub fn of(self, p: &SweepPoint) -> Stat {
        match self {
            ScalingMeasure::R0 => p.r0,
            ScalingMeasure::InvS2 => p.inv_s2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub n: usize,
    pub value: Stat,
    /// `value / (N log₂N)`.
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub measure: ScalingMeasure,
    pub rows: Vec<ScalingRow>,
    pub mean_ratio: f64,
    /// `max |ratio/mean_ratio - 1|`.
    pub max_rel_deviation: f64,
    pub within_10_percent: bool,
    /// Ordinary least squares of value on `N log₂N`.
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn n_log2_n(n: usize) -> f64 {
    let n = n as f64;
    n * n.log2()
}

pub fn scaling_report(measure: ScalingMeasure, values: &[(usize, Stat)]) -> Result<ScalingReport> {
    let mut ns: Vec<usize> = values.iter().map(|v| v.0).collect();
    ns.sort_unstable();
    ns.dedup();
    if ns.len() < 4 {
        return Err(Error::InsufficientData(format!("scaling needs at least 4 distinct N, got {}", ns.len())));
    }
    if values.iter().any(|(n, _)| *n < 2) {
        return Err(Error::domain("scaling needs N >= 2"));
    }
    let rows: Vec<ScalingRow> =
        values.iter().map(|&(n, value)| ScalingRow { n, value, ratio: value.mean / n_log2_n(n) }).collect();
    let k = rows.len() as f64;
    let mean_ratio = rows.iter().map(|r| r.ratio).sum::<f64>() / k;
    let max_rel_deviation = rows.iter().map(|r| (r.ratio / mean_ratio - 1.0).abs()).fold(0.0, f64::max);

    let x: Vec<f64> = rows.iter().map(|r| n_log2_n(r.n)).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.value.mean).collect();
    let (mx, my) = (x.iter().sum::<f64>() / k, y.iter().sum::<f64>() / k);
    let sxx: f64 = x.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = y.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r_squared = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Ok(ScalingReport {
        measure,
        rows,
        mean_ratio,
        max_rel_deviation,
        within_10_percent: max_rel_deviation <= 0.10,
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}

/// One deep protocol point per `N`, sampled and regressed.
pub fn scaling_fit(
    measure: ScalingMeasure,
    n_grid: &[usize],
    point: Protocol,
    nu0: usize,
    beta: Beta,
    n_samples: usize,
    seed: u64,
) -> Result<ScalingReport> {
    if n_samples < 2 {
        return Err(Error::InsufficientData(format!("need at least 2 samples, got {n_samples}")));
    }
    let values = n_grid
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let ms = sample_point(point, n, nu0, beta, n_samples, seed, BITS, R0_FLOOR).map_err(|e| e.at_grid(i))?;
            Ok((n, measure.of(&SweepPoint::from_measures(point, f64::NAN, &ms))))
        })
        .collect::<Result<Vec<_>>>()?;
    scaling_report(measure, &values)
}
