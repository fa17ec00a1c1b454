//! Exact Ornstein–Uhlenbeck flow of the coefficient matrix.
//!
//! Every real component obeys `dC = -γC dY + √(2v²) dW`, so over a step `Δ`
//!
//! `C(Y+Δ) = C(Y) e^{-γΔ} + V √((1 - e^{-2γΔ})/γ)`,  `V ~ N(0, v²)`
//!
//! and the stationary component variance is `v²/γ`.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::ensembles::{Beta, CMatrix, Entries, Source, VarianceProfile};
use crate::{Error, Result};

/// Perturbation variance fixed by the eigenvalue SDE (`v² = 1/4`).
pub const DEFAULT_V2: f64 = 0.25;

#[derive(Clone, Debug)]
pub struct LangevinState {
    c0: CMatrix,
    current: Entries,
    y: f64,
    gamma: f64,
    v2: f64,
}

impl LangevinState {
    pub fn new(c0: CMatrix, gamma: f64, v2: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::domain(format!("gamma must be positive, got {gamma}")));
        }
        if !(v2.is_finite() && v2 > 0.0) {
            return Err(Error::domain(format!("v2 must be positive, got {v2}")));
        }
        let current = c0.entries().clone();
        Ok(LangevinState { c0, current, y: 0.0, gamma, v2 })
    }

    pub fn initial(&self) -> &CMatrix {
        &self.c0
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn v2(&self) -> f64 {
        self.v2
    }

    pub fn current(&self) -> CMatrix {
        CMatrix::from_parts(self.current.clone(), Source::Langevin { y: self.y })
    }

    /// Stationary per-component variance `v²/γ`.
    pub fn stationary_variance(&self) -> f64 {
        self.v2 / self.gamma
    }
}

/// Advance `state` to `target_y` in one exact step and return the matrix there.
pub fn langevin_evolve<R: Rng + ?Sized>(state: &mut LangevinState, target_y: f64, rng: &mut R) -> Result<CMatrix> {
    if !(target_y.is_finite() && target_y >= state.y) {
        return Err(Error::domain(format!("target Y {target_y} is before the current Y {}", state.y)));
    }
    let delta = target_y - state.y;
    if delta > 0.0 {
        step_entries(&mut state.current, state.gamma, state.v2, delta, rng);
    }
    state.y = target_y;
    Ok(state.current())
}

/// In-place exact step of length `delta`. Normals are consumed in column-major
/// entry order, real part first.
pub(crate) fn step_entries<R: Rng + ?Sized>(c: &mut Entries, gamma: f64, v2: f64, delta: f64, rng: &mut R) {
    let decay = (-gamma * delta).exp();
    let spread = (v2 * (-(-2.0 * gamma * delta).exp_m1()) / gamma).sqrt();
    match c {
        Entries::Real(m) => {
            for x in m.iter_mut() {
                let z: f64 = rng.sample(StandardNormal);
                *x = *x * decay + spread * z;
            }
        }
        Entries::Complex(m) => {
            for x in m.iter_mut() {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                x.re = x.re * decay + spread * re;
                x.im = x.im * decay + spread * im;
            }
        }
    }
}

/// Separable initial profile: first column at the stationary variance `v²/γ`,
/// every other column exactly zero.
pub fn separable_profile(n: usize, nu0: usize, beta: Beta, gamma: f64, v2: f64) -> Result<VarianceProfile> {
    let s = v2 / gamma;
    VarianceProfile::custom(DMatrix::from_fn(n, n + nu0, |_, l| if l == 0 { s } else { 0.0 }), None, beta)
}

/// Law of `C(Y)` started from a Gaussian profile: variances relax as
/// `h e^{-2γY} + (v²/γ)(1 - e^{-2γY})`, means decay as `e^{-γY}`.
pub fn evolved_profile(initial: &VarianceProfile, y: f64, gamma: f64, v2: f64) -> Result<VarianceProfile> {
    if !(y.is_finite() && y >= 0.0) {
        return Err(Error::domain(format!("Y must be nonnegative, got {y}")));
    }
    let keep = (-2.0 * gamma * y).exp();
    let add = -(-2.0 * gamma * y).exp_m1() * v2 / gamma;
    let h = initial.h().map(|v| v * keep + add);
    let decay = (-gamma * y).exp();
    let means = initial.means().map(|ms| ms.iter().map(|m| m * decay).collect());
    VarianceProfile::custom(h, means, initial.beta())
}

/// EB parameter reached by the flow from the separable state at `Y`:
/// `1/(1+μ) = 1 - e^{-2γY}`.
pub fn eb_mu_at_flow_y(y: f64, gamma: f64) -> f64 {
    1.0 / (2.0 * gamma * y).exp_m1()
}

/// Inverse of [`eb_mu_at_flow_y`].
pub fn flow_y_of_eb(mu: f64, gamma: f64) -> f64 {
    (1.0 / mu).ln_1p() / (2.0 * gamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{build_profile, sample_c, Protocol};
    use crate::rng;
    use approx::assert_relative_eq;

    #[test]
    fn zero_step_is_identity() {
        let p = build_profile(Protocol::Eb { mu: 2.0 }, 3, 1, Beta::Complex).unwrap();
        let c0 = sample_c(&p, &mut rng::stream(1, 0, 0));
        let mut st = LangevinState::new(c0.clone(), 0.25, DEFAULT_V2).unwrap();
        let c = langevin_evolve(&mut st, 0.0, &mut rng::stream(1, 1, 0)).unwrap();
        assert_eq!(c.entries(), c0.entries());
    }

    #[test]
    fn same_seed_same_path() {
        let p = separable_profile(4, 0, Beta::Real, 0.25, DEFAULT_V2).unwrap();
        let c0 = sample_c(&p, &mut rng::stream(2, 0, 0));
        let run = || {
            let mut st = LangevinState::new(c0.clone(), 0.25, DEFAULT_V2).unwrap();
            let mut r = rng::stream(2, 1, 0);
            langevin_evolve(&mut st, 0.3, &mut r).unwrap();
            langevin_evolve(&mut st, 0.9, &mut r).unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn backwards_target_is_rejected() {
        let c0 = CMatrix::real(DMatrix::identity(2, 2)).unwrap();
        let mut st = LangevinState::new(c0, 0.25, DEFAULT_V2).unwrap();
        langevin_evolve(&mut st, 1.0, &mut rng::stream(0, 0, 0)).unwrap();
        assert!(langevin_evolve(&mut st, 0.5, &mut rng::stream(0, 0, 0)).is_err());
    }

    #[test]
    fn flow_map_round_trip() {
        for &mu in &[1e-3, 0.5, 3.0, 1e4] {
            assert_relative_eq!(eb_mu_at_flow_y(flow_y_of_eb(mu, 0.25), 0.25), mu, max_relative = 1e-12);
        }
    }

    #[test]
    fn evolved_separable_is_scaled_eb() {
        let (gamma, y) = (0.25, 0.7);
        let sep = separable_profile(3, 1, Beta::Real, gamma, DEFAULT_V2).unwrap();
        let ev = evolved_profile(&sep, y, gamma, DEFAULT_V2).unwrap();
        let eb = build_profile(Protocol::Eb { mu: eb_mu_at_flow_y(y, gamma) }, 3, 1, Beta::Real).unwrap();
        let scale = DEFAULT_V2 / gamma;
        for (a, b) in ev.h().iter().zip(eb.h().iter()) {
            assert_relative_eq!(*a, b * scale, max_relative = 1e-12);
        }
    }
}
