//! Entropies and power sums of a spectrum.

use crate::schmidt::Spectrum;
use crate::{Error, Result};

/// Default logarithm base (bits).
pub const BITS: f64 = 2.0;

/// Default floor for `R₀`.
pub const R0_FLOOR: f64 = 1e-16;

/// Slack allowed in per-sample Rényi ordering checks (roundoff only).
pub const ORDER_SLACK: f64 = 1e-12;

fn log_b(x: f64, base: f64) -> f64 {
    if base == 2.0 {
        x.log2()
    } else {
        x.ln() / base.ln()
    }
}

/// `S_k = Σ λ^k`.
pub fn power_sum(spec: &Spectrum, k: u32) -> f64 {
    match k {
        0 => spec.values().iter().filter(|&&v| v > 0.0).count() as f64,
        1 => spec.trace(),
        2 => spec.values().iter().map(|v| v * v).sum(),
        _ => spec.values().iter().map(|v| v.powi(k as i32)).sum(),
    }
}

/// `[S_1, …, S_kmax]`.
pub fn power_sums(spec: &Spectrum, k_max: u32) -> Result<Vec<f64>> {
    if k_max < 2 {
        return Err(Error::domain(format!("k_max must be at least 2, got {k_max}")));
    }
    Ok((1..=k_max).map(|k| power_sum(spec, k)).collect())
}

/// `(1/(1-α)) log_b Σ λ^α`.
pub fn renyi(spec: &Spectrum, alpha: f64, base: f64) -> Result<f64> {
    if !(alpha > 0.0) || alpha == 1.0 || !alpha.is_finite() {
        return Err(Error::domain(format!("Renyi order must be positive, finite and != 1, got {alpha}")));
    }
    let s = if alpha == 2.0 {
        power_sum(spec, 2)
    } else {
        spec.values().iter().filter(|&&v| v > 0.0).map(|v| v.powf(alpha)).sum()
    };
    Ok(log_b(s, base) / (1.0 - alpha))
}

/// `-Σ λ log_b λ` with `0 log 0 = 0`.
pub fn von_neumann(spec: &Spectrum, base: f64) -> f64 {
    let h: f64 = spec.values().iter().filter(|&&v| v > 0.0).map(|&v| -v * v.ln()).sum();
    h / base.ln()
}

/// `-log_b λ_max`.
pub fn min_entropy(spec: &Spectrum, base: f64) -> f64 {
    -log_b(spec.max(), base)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogSum {
    pub value: f64,
    /// Some eigenvalue was below the floor.
    pub floored: bool,
}

/// `-Σ log_b max(λ, floor)`.
pub fn log_sum_r0(spec: &Spectrum, floor: f64, base: f64) -> LogSum {
    let mut floored = false;
    let value = spec
        .values()
        .iter()
        .map(|&v| {
            if v < floor {
                floored = true;
                -log_b(floor, base)
            } else {
                -log_b(v, base)
            }
        })
        .sum();
    LogSum { value, floored }
}

/// Every per-sample measure used downstream.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasureSet {
    pub base: f64,
    pub r1: f64,
    /// `(α, R_α)` pairs; always contains α = 2 and α = 3.
    pub r_alpha: Vec<(f64, f64)>,
    pub r_inf: f64,
    /// `-Σ log_b λ` (floored).
    pub r0: f64,
    pub r0_floored: bool,
    /// `S_k` for `k = 1..=3` at index `k-1`.
    pub s: Vec<f64>,
}

impl MeasureSet {
    pub fn compute(spec: &Spectrum, base: f64, r0_floor: f64) -> Self {
        let s = vec![spec.trace(), power_sum(spec, 2), power_sum(spec, 3)];
        let lb = base.ln();
        let r2 = -s[1].ln() / lb;
        let r3 = -0.5 * s[2].ln() / lb;
        let r0 = log_sum_r0(spec, r0_floor, base);
        MeasureSet {
            base,
            r1: von_neumann(spec, base),
            r_alpha: vec![(2.0, r2), (3.0, r3)],
            r_inf: min_entropy(spec, base),
            r0: r0.value,
            r0_floored: r0.floored,
            s,
        }
    }

    pub fn bits(spec: &Spectrum) -> Self {
        Self::compute(spec, BITS, R0_FLOOR)
    }

    pub fn renyi(&self, alpha: f64) -> Option<f64> {
        self.r_alpha.iter().find(|(a, _)| *a == alpha).map(|(_, r)| *r)
    }

    pub fn r2(&self) -> f64 {
        self.r_alpha[0].1
    }

    pub fn s2(&self) -> f64 {
        self.s[1]
    }

    pub fn s3(&self) -> f64 {
        self.s[2]
    }

    pub fn inv_s2(&self) -> f64 {
        1.0 / self.s[1]
    }

    pub fn s3_over_s2_sq(&self) -> f64 {
        self.s[2] / (self.s[1] * self.s[1])
    }

    /// `R₀` in nats.
    pub fn r0_nat(&self) -> f64 {
        self.r0 * self.base.ln()
    }

    /// `R_∞ ≤ R₂ ≤ R₁` up to [`ORDER_SLACK`].
    pub fn ordering_holds(&self) -> bool {
        self.r_inf <= self.r2() + ORDER_SLACK && self.r2() <= self.r1 + ORDER_SLACK
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn spec(v: &[f64]) -> Spectrum {
        Spectrum::new(v.to_vec()).unwrap()
    }

    fn uniform(n: usize) -> Spectrum {
        spec(&vec![1.0 / n as f64; n])
    }

    #[test]
    fn renyi_examples() {
        assert_abs_diff_eq!(renyi(&uniform(4), 2.0, 2.0).unwrap(), 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(renyi(&spec(&[0.5, 0.5]), 2.0, 2.0).unwrap(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(renyi(&spec(&[0.5, 0.25, 0.25]), 2.0, 2.0).unwrap(), 1.41504, epsilon = 1e-5);
        assert!(renyi(&uniform(4), 0.0, 2.0).is_err());
        assert!(renyi(&uniform(4), -1.0, 2.0).is_err());
        assert!(renyi(&uniform(4), 1.0, 2.0).is_err());
    }

    #[test]
    fn von_neumann_examples() {
        assert_eq!(von_neumann(&spec(&[1.0, 0.0, 0.0]), 2.0), 0.0);
        assert_abs_diff_eq!(von_neumann(&uniform(8), 2.0), 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(von_neumann(&spec(&[0.75, 0.25]), 2.0), 0.811278, epsilon = 1e-6);
    }

    #[test]
    fn min_entropy_examples() {
        assert_eq!(min_entropy(&spec(&[1.0, 0.0]), 2.0), 0.0);
        assert_abs_diff_eq!(min_entropy(&uniform(8), 2.0), 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(min_entropy(&spec(&[0.5, 0.3, 0.2]), 2.0), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn r0_examples() {
        assert_abs_diff_eq!(log_sum_r0(&uniform(4), R0_FLOOR, 2.0).value, 8.0, epsilon = 1e-13);
        assert!(!log_sum_r0(&uniform(4), R0_FLOOR, 2.0).floored);
        let r = log_sum_r0(&spec(&[1.0, 0.0]), R0_FLOOR, 2.0);
        assert!(r.floored);
        assert_abs_diff_eq!(r.value, 53.150849, epsilon = 1e-5);
        assert_abs_diff_eq!(log_sum_r0(&uniform(16), R0_FLOOR, 2.0).value, 64.0, epsilon = 1e-12);
    }

    #[test]
    fn power_sum_examples() {
        assert_abs_diff_eq!(power_sums(&uniform(5), 2).unwrap()[1], 0.2, epsilon = 1e-15);
        assert_eq!(power_sums(&spec(&[1.0, 0.0]), 4).unwrap(), vec![1.0; 4]);
        assert_abs_diff_eq!(power_sums(&spec(&[0.5, 0.25, 0.25]), 3).unwrap()[2], 0.15625, epsilon = 1e-15);
        assert!(power_sums(&uniform(2), 1).is_err());
    }

    #[test]
    fn measure_set_is_consistent() {
        let m = MeasureSet::bits(&spec(&[0.5, 0.3, 0.2]));
        assert_abs_diff_eq!(2f64.powf(m.r2()) * m.s2(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.renyi(3.0).unwrap(), renyi(&spec(&[0.5, 0.3, 0.2]), 3.0, 2.0).unwrap(), epsilon = 1e-13);
        assert!(m.ordering_holds());
        assert_abs_diff_eq!(m.r0_nat(), -(0.5f64.ln() + 0.3f64.ln() + 0.2f64.ln()), epsilon = 1e-13);
    }
}
