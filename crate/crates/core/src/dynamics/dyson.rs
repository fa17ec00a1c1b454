//! Euler–Maruyama integration of the Wishart eigenvalue diffusion
//!
//! `dλ_n = [β Σ_{m≠n} λ_n/(λ_n-λ_m) + β(ν+1) - 2γλ_n] dY + √(2λ_n) dW_n`,
//! `ν = (ν₀-1)/2`,
//!
//! which is the Itô form of the eigenvalue Fokker–Planck equation for
//! `CC†` under the matrix flow with `v² = 1/4`.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::ensembles::Beta;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct DysonState {
    lambdas: Vec<f64>,
    y: f64,
    beta: Beta,
    nu: f64,
    gamma: f64,
    base_step: f64,
    step_floor: f64,
    rejections: u64,
}

/// Base step `10⁻⁴/N`.
pub fn default_base_step(n: usize) -> f64 {
    1e-4 / n as f64
}

pub const DEFAULT_STEP_FLOOR: f64 = 1e-10;

impl DysonState {
    /// Start from unnormalized eigenvalues (any order; must be positive and distinct).
    pub fn new(mut lambdas: Vec<f64>, y: f64, beta: Beta, nu0: usize, gamma: f64) -> Result<Self> {
        if lambdas.is_empty() {
            return Err(Error::domain("no eigenvalues"));
        }
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::domain(format!("gamma must be positive, got {gamma}")));
        }
        lambdas.sort_by(|a, b| b.total_cmp(a));
        if !valid(&lambdas) {
            return Err(Error::domain("eigenvalues must be finite, positive and distinct"));
        }
        let n = lambdas.len();
        Ok(DysonState {
            lambdas,
            y,
            beta,
            nu: (nu0 as f64 - 1.0) / 2.0,
            gamma,
            base_step: default_base_step(n),
            step_floor: DEFAULT_STEP_FLOOR,
            rejections: 0,
        })
    }

    pub fn with_steps(mut self, base_step: f64, step_floor: f64) -> Result<Self> {
        if !(base_step > 0.0 && step_floor > 0.0 && step_floor <= base_step) {
            return Err(Error::domain("need 0 < floor <= base step"));
        }
        self.base_step = base_step;
        self.step_floor = step_floor;
        Ok(self)
    }

    /// Descending eigenvalues.
    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn beta(&self) -> Beta {
        self.beta
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// Number of rejected trial steps so far.
    pub fn rejections(&self) -> u64 {
        self.rejections
    }

    /// Drift of every eigenvalue at the current state.
    pub fn drift(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.lambdas.len());
        drift_into(&self.lambdas, self.beta.value(), self.nu, self.gamma, &mut out);
        out
    }
}

fn valid(l: &[f64]) -> bool {
    l.iter().all(|v| v.is_finite()) && l[l.len() - 1] > 0.0 && l.windows(2).all(|w| w[0] > w[1])
}

fn drift_into(l: &[f64], beta: f64, nu: f64, gamma: f64, out: &mut Vec<f64>) {
    let n = l.len();
    out.clear();
    out.resize(n, beta * (nu + 1.0));
    for i in 0..n {
        out[i] -= 2.0 * gamma * l[i];
        for j in (i + 1)..n {
            let inv = beta / (l[i] - l[j]);
            out[i] += l[i] * inv;
            out[j] -= l[j] * inv;
        }
    }
}

/// Adjacent pair with the smallest gap, or the last index twice when positivity failed.
fn worst_pair(l: &[f64]) -> (usize, usize) {
    let n = l.len();
    if !(l[n - 1] > 0.0) {
        return (n - 1, n - 1);
    }
    (0..n.saturating_sub(1))
        .min_by(|&a, &b| (l[a] - l[a + 1]).total_cmp(&(l[b] - l[b + 1])))
        .map_or((0, 0), |i| (i, i + 1))
}

/// Integrate from `state.y` to `target_y`, landing exactly on the target.
pub fn dyson_evolve<R: Rng + ?Sized>(state: &DysonState, target_y: f64, rng: &mut R) -> Result<DysonState> {
    if !(target_y.is_finite() && target_y >= state.y) {
        return Err(Error::domain(format!("target Y {target_y} is before the current Y {}", state.y)));
    }
    let mut st = state.clone();
    let beta = st.beta.value();
    let n = st.lambdas.len();
    let mut drift = Vec::with_capacity(n);
    let mut trial = vec![0.0; n];
    while st.y < target_y {
        let remaining = target_y - st.y;
        let mut h = st.base_step.min(remaining);
        drift_into(&st.lambdas, beta, st.nu, st.gamma, &mut drift);
        loop {
            let sq = h.sqrt();
            for i in 0..n {
                let z: f64 = rng.sample(StandardNormal);
                trial[i] = st.lambdas[i] + drift[i] * h + (2.0 * st.lambdas[i]).sqrt() * sq * z;
            }
            if valid(&trial) {
                break;
            }
            st.rejections += 1;
            h *= 0.5;
            if h < st.step_floor {
                return Err(Error::StiffRegion { y: st.y, pair: worst_pair(&trial) });
            }
        }
        std::mem::swap(&mut st.lambdas, &mut trial);
        st.y = if h == remaining { target_y } else { st.y + h };
    }
    Ok(st)
}
