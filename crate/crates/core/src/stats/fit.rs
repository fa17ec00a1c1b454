//! Weighted fit of the saturation model `R(Y) = A[1 - (1 + b1 Y + b2 Y²) e^{-dY}]`.

use levenberg_marquardt::{LeastSquaresProblem, LevenbergMarquardt, TerminationReason};
use nalgebra::storage::Owned;
use nalgebra::{DMatrix, DVector, Dyn, Matrix4, OMatrix, Vector3, Vector4, U4};
use serde::{Deserialize, Serialize};

use super::{Measure, SweepCurve};
use crate::{Error, Result};

pub fn growth_model(y: f64, a: f64, b1: f64, b2: f64, d: f64) -> f64 {
    a * (1.0 - (1.0 + b1 * y + b2 * y * y) * (-d * y).exp())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    #[serde(rename = "A")]
    pub a: f64,
    pub b1: f64,
    pub b2: f64,
    pub d: f64,
    /// Unweighted RMS of `model - data`.
    pub residual: f64,
    /// `χ²/(m-4)` with the supplied standard errors.
    pub chi2_reduced: f64,
    /// `(JᵀJ)⁻¹` of the weighted problem, order `(A, b1, b2, d)`.
    pub covariance: [[f64; 4]; 4],
    /// The data do not constrain all four parameters.
    pub degenerate: bool,
    pub n_points: usize,
}

impl FitResult {
    pub fn eval(&self, y: f64) -> f64 {
        growth_model(y, self.a, self.b1, self.b2, self.d)
    }

    pub fn params(&self) -> [f64; 4] {
        [self.a, self.b1, self.b2, self.d]
    }

    /// Fraction of points whose mean lies within `k` standard errors of the curve.
    pub fn coverage(&self, y: &[f64], r: &[f64], se: &[f64], k: f64) -> f64 {
        let hit = y.iter().zip(r).zip(se).filter(|((&y, &r), &s)| (self.eval(y) - r).abs() <= k * s).count();
        hit as f64 / y.len() as f64
    }
}

struct Problem<'a> {
    y: &'a [f64],
    r: &'a [f64],
    w: &'a [f64],
    p: Vector4<f64>,
}

impl LeastSquaresProblem<f64, Dyn, U4> for Problem<'_> {
    type ResidualStorage = Owned<f64, Dyn>;
    type JacobianStorage = Owned<f64, Dyn, U4>;
    type ParameterStorage = Owned<f64, U4>;

    fn set_params(&mut self, p: &Vector4<f64>) {
        self.p.copy_from(p);
    }

    fn params(&self) -> Vector4<f64> {
        self.p
    }

    fn residuals(&self) -> Option<DVector<f64>> {
        let [a, b1, b2, d] = [self.p[0], self.p[1], self.p[2], self.p[3]];
        let out = DVector::from_iterator(
            self.y.len(),
            self.y.iter().zip(self.r).zip(self.w).map(|((&y, &r), &w)| (growth_model(y, a, b1, b2, d) - r) * w),
        );
        out.iter().all(|v| v.is_finite()).then_some(out)
    }

    fn jacobian(&self) -> Option<OMatrix<f64, Dyn, U4>> {
        Some(jacobian(self.y, self.w, &self.p)).filter(|j| j.iter().all(|v| v.is_finite()))
    }
}

fn jacobian(ys: &[f64], w: &[f64], p: &Vector4<f64>) -> OMatrix<f64, Dyn, U4> {
    let [a, b1, b2, d] = [p[0], p[1], p[2], p[3]];
    OMatrix::<f64, Dyn, U4>::from_fn(ys.len(), |i, j| {
        let y = ys[i];
        let e = (-d * y).exp();
        let poly = 1.0 + b1 * y + b2 * y * y;
        w[i] * match j {
            0 => 1.0 - poly * e,
            1 => -a * y * e,
            2 => -a * y * y * e,
            _ => a * poly * y * e,
        }
    })
}

/// Best `(A, c1, c2)` for fixed `d`, where `c_i = A b_i`; returns the weighted SSR too.
fn linear_given_d(y: &[f64], r: &[f64], w: &[f64], d: f64) -> Option<(Vector3<f64>, f64)> {
    let m = y.len();
    let x = DMatrix::from_fn(m, 3, |i, j| {
        let e = (-d * y[i]).exp();
        w[i] * match j {
            0 => 1.0 - e,
            1 => -y[i] * e,
            _ => -y[i] * y[i] * e,
        }
    });
    let t = DVector::from_iterator(m, r.iter().zip(w).map(|(r, w)| r * w));
    if x.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let svd = x.clone().svd(true, true);
    let coef = svd.solve(&t, 1e-12).ok()?;
    let res = &x * &coef - &t;
    let c = Vector3::new(coef[0], coef[1], coef[2]);
    Some((c, res.norm_squared()))
}

const N_STARTS: usize = 6;

/// Fit the growth model to `(y, r ± se)`. Standard errors are floored at
/// `1e-9 · max|r|` so exact points cannot dominate.
pub fn fit_growth_data(y: &[f64], r: &[f64], se: &[f64]) -> Result<FitResult> {
    let m = y.len();
    if m < 8 {
        return Err(Error::InsufficientData(format!("growth fit needs at least 8 points, got {m}")));
    }
    if r.len() != m || se.len() != m {
        return Err(Error::domain("y, r and se must have equal lengths"));
    }
    if y.iter().chain(r).chain(se).any(|v| !v.is_finite()) {
        return Err(Error::domain("fit inputs must be finite"));
    }
    let scale = r.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(f64::MIN_POSITIVE);
    let floor = 1e-9 * scale;
    let w: Vec<f64> = se.iter().map(|s| 1.0 / s.max(floor)).collect();
    let y_max = y.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(1e-12);

    // variable projection scan over d, both signs, |d| y_max ≤ 700
    let d_cap = 700.0 / y_max;
    let mut scan: Vec<(f64, Vector3<f64>, f64)> = Vec::new();
    for i in 0..=160 {
        let mag = 10f64.powf(-2.0 + 6.0 * i as f64 / 160.0) / y_max;
        if mag > d_cap {
            break;
        }
        for d in [mag, -mag] {
            if let Some((c, ssr)) = linear_given_d(y, r, &w, d) {
                if c[0] > 0.0 {
                    scan.push((d, c, ssr));
                }
            }
        }
    }
    scan.sort_by(|a, b| a.2.total_cmp(&b.2));

    let mut best: Option<(Vector4<f64>, f64)> = None;
    let mut best_any = f64::INFINITY;
    for (d, c, _) in scan.iter().take(N_STARTS) {
        let start = Vector4::new(c[0], c[1] / c[0], c[2] / c[0], *d);
        let problem = Problem { y, r, w: &w, p: start };
        let (problem, report) = LevenbergMarquardt::new().with_patience(400).minimize(problem);
        let p = problem.p;
        let ssr = 2.0 * report.objective_function;
        if ssr.is_finite() {
            best_any = best_any.min(ssr);
        }
        let settled = report.termination.was_successful()
            || matches!(report.termination, TerminationReason::NoImprovementPossible(_));
        if !(settled && ssr.is_finite() && p[0] > 0.0) {
            continue;
        }
        if best.as_ref().map_or(true, |(_, s)| ssr < *s) {
            best = Some((p, ssr));
        }
    }
    let Some((p, ssr)) = best else {
        return Err(Error::FitFailure { best_residual: best_any.sqrt() });
    };

    let j = jacobian(y, &w, &p);
    let jtj: Matrix4<f64> = j.transpose() * &j;
    let inv = jtj.try_inverse().filter(|m| m.iter().all(|v| v.is_finite()));
    let sv = jtj.singular_values();
    let cond = sv.max() / sv.min();
    let y_min_pos = y.iter().copied().filter(|v| *v > 0.0).fold(f64::INFINITY, f64::min);
    let transient_invisible = p[3] > 0.0 && (-p[3] * y_min_pos).exp() < 1e-12;
    let degenerate = inv.is_none() || !(cond < 1e14) || transient_invisible;
    let cov = inv.unwrap_or_else(|| Matrix4::from_element(f64::NAN));
    let mut covariance = [[0.0; 4]; 4];
    for (i, row) in covariance.iter_mut().enumerate() {
        for (k, v) in row.iter_mut().enumerate() {
            *v = cov[(i, k)];
        }
    }
    let rms = (y.iter().zip(r).map(|(&y, &r)| (growth_model(y, p[0], p[1], p[2], p[3]) - r).powi(2)).sum::<f64>()
        / m as f64)
        .sqrt();
    Ok(FitResult {
        a: p[0],
        b1: p[1],
        b2: p[2],
        d: p[3],
        residual: rms,
        chi2_reduced: if m > 4 { ssr / (m - 4) as f64 } else { f64::NAN },
        covariance,
        degenerate,
        n_points: m,
    })
}

/// Fit one measure of a sweep, weighting by `1/se²`.
pub fn fit_growth(curve: &SweepCurve, measure: Measure) -> Result<FitResult> {
    let y = curve.ys();
    let (r, se): (Vec<f64>, Vec<f64>) = curve.points.iter().map(|p| p.measure(measure)).map(|s| (s.mean, s.se)).unzip();
    fit_growth_data(&y, &r, &se)
}
