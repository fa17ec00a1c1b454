//! Large-`N` growth laws for `⟨R₁⟩` and `⟨R₂⟩`, fed by measured ensemble inputs.
//!
//! Only the reduced forms are evaluated: the finite-`N` coefficient
//! functions depend on quantities with no computable definition.

use serde::{Deserialize, Serialize};

use crate::ensembles::Beta;
use crate::stats::SweepRow;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoryInputs {
    pub n: usize,
    /// `ν = (ν₀-1)/2`.
    pub nu: f64,
    /// `N_ν = N - 2ν - 1`.
    pub n_nu: f64,
    pub beta: Beta,
    pub gamma: f64,
    /// Complexity of the initial (separable) state.
    pub y0: f64,
    pub r0_bar: f64,
    pub inv_s2_bar: f64,
    pub g1_slope_r1: f64,
    pub g1_slope_r2: f64,
    /// Exponent of `⟨1/S₂⟩ ~ (Y-Y₀)^α`.
    pub alpha_exp: f64,
}

pub const DEFAULT_ALPHA: f64 = 0.5;

impl TheoryInputs {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        n: usize,
        nu0: usize,
        beta: Beta,
        gamma: f64,
        r0_bar: f64,
        inv_s2_bar: f64,
        g1_slope_r1: f64,
        g1_slope_r2: f64,
    ) -> Self {
        let nu = (nu0 as f64 - 1.0) / 2.0;
        TheoryInputs {
            n,
            nu,
            n_nu: n as f64 - 2.0 * nu - 1.0,
            beta,
            gamma,
            y0: 0.0,
            r0_bar,
            inv_s2_bar,
            g1_slope_r1,
            g1_slope_r2,
            alpha_exp: DEFAULT_ALPHA,
        }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha_exp = alpha;
        self
    }

    pub fn with_y0(mut self, y0: f64) -> Self {
        self.y0 = y0;
        self
    }

    /// `⟨R₁(∞)⟩ = ⟨R₀⟩/(N g'(1))`.
    pub fn r1_saturation(&self) -> Result<f64> {
        self.check_r1()?;
        Ok(self.r0_bar / (self.n as f64 * self.g1_slope_r1))
    }

    /// `⟨R₂(∞)⟩ = ⟨1/S₂⟩/(2|g'(1)|N_ν)`.
    pub fn r2_saturation(&self) -> Result<f64> {
        self.check_r2()?;
        Ok(self.inv_s2_bar / (2.0 * self.g1_slope_r2.abs() * self.n_nu))
    }

    fn check_common(&self) -> Result<()> {
        if self.n == 0 || !(self.n_nu > 0.0) {
            return Err(Error::domain("theory needs N > 0 and N_ν > 0"));
        }
        Ok(())
    }

    fn check_r1(&self) -> Result<()> {
        self.check_common()?;
        if !(self.g1_slope_r1.is_finite() && self.g1_slope_r1 > 0.0) {
            return Err(Error::domain(format!("g'(1) for R1 must be positive, got {}", self.g1_slope_r1)));
        }
        Ok(())
    }

    fn check_r2(&self) -> Result<()> {
        self.check_common()?;
        if !(self.g1_slope_r2.is_finite() && self.g1_slope_r2 < 0.0) {
            return Err(Error::domain(format!("g'(1) for R2 must be negative, got {}", self.g1_slope_r2)));
        }
        if !(self.alpha_exp > 0.0) {
            return Err(Error::domain(format!("alpha must be positive, got {}", self.alpha_exp)));
        }
        Ok(())
    }

    fn elapsed(&self, y: f64) -> Result<f64> {
        if !(y.is_finite() && y >= self.y0) {
            return Err(Error::domain(format!("Y = {y} precedes Y₀ = {}", self.y0)));
        }
        Ok(y - self.y0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct R1Prediction {
    pub y: Vec<f64>,
    /// `(⟨R₀⟩/(N g'))(1 - exp(-½βN N_ν g' (Y-Y₀)))`.
    pub full: Vec<f64>,
    /// `½βN_ν⟨R₀⟩(Y-Y₀)`.
    pub linear: Vec<f64>,
    pub saturation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct R2Prediction {
    pub y: Vec<f64>,
    /// `(Y-Y₀)^α/(|g'| N_ν)`.
    pub small_y: Vec<f64>,
    pub saturation: f64,
    /// Where the small-`Y` branch is below saturation.
    pub small_y_valid: Vec<bool>,
    /// `min(small_y, saturation)`.
    pub combined: Vec<f64>,
}

pub fn predict_r1(inputs: &TheoryInputs, ys: &[f64]) -> Result<R1Prediction> {
    let sat = inputs.r1_saturation()?;
    let b = inputs.beta.value();
    let rate = 0.5 * b * inputs.n as f64 * inputs.n_nu * inputs.g1_slope_r1;
    let mut full = Vec::with_capacity(ys.len());
    let mut linear = Vec::with_capacity(ys.len());
    for &y in ys {
        let t = inputs.elapsed(y)?;
        full.push(-sat * (-rate * t).exp_m1());
        linear.push(0.5 * b * inputs.n_nu * inputs.r0_bar * t);
    }
    Ok(R1Prediction { y: ys.to_vec(), full, linear, saturation: sat })
}

pub fn predict_r2(inputs: &TheoryInputs, ys: &[f64]) -> Result<R2Prediction> {
    let sat = inputs.r2_saturation()?;
    let scale = 1.0 / (inputs.g1_slope_r2.abs() * inputs.n_nu);
    let small_y = ys
        .iter()
        .map(|&y| inputs.elapsed(y).map(|t| t.powf(inputs.alpha_exp) * scale))
        .collect::<Result<Vec<_>>>()?;
    Ok(R2Prediction {
        y: ys.to_vec(),
        small_y_valid: small_y.iter().map(|&v| v <= sat).collect(),
        combined: small_y.iter().map(|&v| v.min(sat)).collect(),
        small_y,
        saturation: sat,
    })
}

/// Predictions in the sweep CSV schema with `protocol = theory`.
pub fn theory_rows(inputs: &TheoryInputs, ys: &[f64]) -> Result<Vec<SweepRow>> {
    let r1 = predict_r1(inputs, ys)?;
    let r2 = predict_r2(inputs, ys)?;
    Ok(ys
        .iter()
        .enumerate()
        .map(|(i, &y)| SweepRow {
            protocol: "theory".into(),
            param: y - inputs.y0,
            y,
            n: inputs.n,
            beta: inputs.beta.into(),
            n_samples: 0,
            r1: r1.full[i],
            r1_se: 0.0,
            r2: r2.combined[i],
            r2_se: 0.0,
            r0: inputs.r0_bar,
            r0_se: 0.0,
            inv_s2: inputs.inv_s2_bar,
            inv_s2_se: 0.0,
            s3s22: f64::NAN,
            s3s22_se: 0.0,
            n_floored: 0,
        })
        .collect())
}
