//! The ensemble complexity parameter
//!
//! `Y = -(1/(2Mγ)) Σ' ln|1 - 2γ h_{kl;s}| |b_{kl;s}|²`
//!
//! with the first-column terms dropped, so that the separable limit of every
//! protocol sits at `Y = 0`.

use serde::{Deserialize, Serialize};

use crate::ensembles::{Beta, Protocol, VarianceProfile};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexityValue {
    pub y: f64,
    /// Reference value of the separable initial state; always 0 here.
    pub y0: f64,
    /// Number of terms `M` in the normalization.
    pub m_count: usize,
    pub gamma: f64,
}

/// Which code path computes `Y`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum YRoute {
    General,
    #[default]
    Closed,
}

impl std::str::FromStr for YRoute {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "general" => Ok(YRoute::General),
            "closed" => Ok(YRoute::Closed),
            _ => Err(Error::Config(format!("unknown Y route {s:?} (expected general or closed)"))),
        }
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma.is_finite() && gamma > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("gamma must be positive, got {gamma}")))
    }
}

/// `Y` from an arbitrary profile.
pub fn complexity_general(profile: &VarianceProfile, gamma: f64) -> Result<ComplexityValue> {
    check_gamma(gamma)?;
    let beta = profile.beta().components();
    let h = profile.h();
    let mut sum = 0.0;
    let mut m_count = 0usize;
    for l in 0..h.ncols() {
        for k in 0..h.nrows() {
            let x = 1.0 - 2.0 * gamma * h[(k, l)];
            if x == 0.0 {
                return Err(Error::SingularParameter { row: k, col: l });
            }
            m_count += beta;
            if l > 0 {
                sum += beta as f64 * x.abs().ln();
            }
        }
    }
    if let Some(means) = profile.means() {
        for m in means {
            for (l, col) in m.column_iter().enumerate() {
                for &b in col.iter().filter(|b| **b != 0.0) {
                    m_count += 1;
                    if l > 0 {
                        sum += (b * b).ln();
                    }
                }
            }
        }
    }
    if m_count == 0 {
        return Err(Error::DegenerateProfile);
    }
    Ok(ComplexityValue { y: -sum / (2.0 * m_count as f64 * gamma), y0: 0.0, m_count, gamma })
}

/// `Y` from the protocol closed forms (double sums over `r₁ = l-1`, `r₂ = k`).
pub fn complexity_closed_form(
    protocol: Protocol,
    n: usize,
    nu0: usize,
    beta: Beta,
    gamma: f64,
) -> Result<ComplexityValue> {
    check_gamma(gamma)?;
    protocol.validate()?;
    if n < 2 {
        return Err(Error::domain(format!("N must be at least 2, got {n}")));
    }
    let cols = n + nu0;
    let m_count = beta.components() * n * cols;
    let x_of = |h: f64, k: usize, l: usize| -> Result<f64> {
        let x = 1.0 - 2.0 * gamma * h;
        if x == 0.0 {
            Err(Error::SingularParameter { row: k, col: l })
        } else {
            Ok(x.abs().ln())
        }
    };
    // first-column entries have h = 1 in every protocol
    if 1.0 - 2.0 * gamma == 0.0 {
        return Err(Error::SingularParameter { row: 0, col: 0 });
    }
    let sum = match protocol {
        Protocol::Eb { mu } => (n * (cols - 1)) as f64 * x_of(1.0 / (1.0 + mu), 0, 1)?,
        Protocol::Ep { a, b } => {
            let ab = a * b;
            let mut s = 0.0;
            for r1 in 1..cols {
                for r2 in 1..=n {
                    s += x_of(1.0 / (1.0 + (r1 * r2) as f64 / ab), r2 - 1, r1)?;
                }
            }
            s
        }
        Protocol::Ee { a, b } => {
            let ab = a * b;
            let mut s = 0.0;
            for r1 in 1..cols {
                for r2 in 1..=n {
                    s += x_of((-((r1 * r2) as f64) / ab).exp(), r2 - 1, r1)?;
                }
            }
            s
        }
        Protocol::Custom => return Err(Error::domain("custom profiles have no closed form")),
    };
    let sum = sum * beta.value();
    Ok(ComplexityValue { y: -sum / (2.0 * m_count as f64 * gamma), y0: 0.0, m_count, gamma })
}

/// `Y` at one protocol point by the chosen route.
pub fn complexity_of(
    protocol: Protocol,
    n: usize,
    nu0: usize,
    beta: Beta,
    gamma: f64,
    route: YRoute,
) -> Result<ComplexityValue> {
    match route {
        YRoute::Closed => complexity_closed_form(protocol, n, nu0, beta, gamma),
        YRoute::General => {
            complexity_general(&crate::ensembles::build_profile(protocol, n, nu0, beta)?, gamma)
        }
    }
}

/// Elementwise `Y` over a parameter grid.
pub fn y_grid(
    grid: &[Protocol],
    n: usize,
    nu0: usize,
    beta: Beta,
    gamma: f64,
    route: YRoute,
) -> Result<Vec<ComplexityValue>> {
    if grid.is_empty() {
        return Err(Error::domain("empty parameter grid"));
    }
    grid.iter()
        .enumerate()
        .map(|(i, &p)| complexity_of(p, n, nu0, beta, gamma, route).map_err(|e| e.at_grid(i)))
        .collect()
}
