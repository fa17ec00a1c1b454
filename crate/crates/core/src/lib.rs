//! Random-matrix Monte Carlo for the growth of bipartite entanglement in
//! Gaussian ensembles of state coefficients.
//!
//! A coefficient matrix `C` (N × N+ν₀, real for β=1, complex for β=2) is
//! drawn from a variance profile, reduced to `ρ_A = CC†/Tr CC†`, and its
//! Schmidt spectrum is turned into Rényi entropies. The ensemble point is
//! summarized by a single complexity parameter `Y`; two dynamical oracles
//! (the exact matrix Langevin flow and an eigenvalue SDE) evolve states in
//! `Y` directly.
//!
//! ```
//! use wishent::{ensembles, schmidt, measures, rng, Beta, Protocol};
//!
//! let profile = ensembles::build_profile(Protocol::Eb { mu: 1.0 }, 8, 0, Beta::Real)?;
//! let mut stream = rng::stream(7, 0, 0);
//! let c = ensembles::sample_c(&profile, &mut stream);
//! let spec = schmidt::spectrum(&schmidt::reduce(&c)?)?;
//! let r1 = measures::von_neumann(&spec, 2.0);
//! assert!(r1 >= 0.0 && r1 <= 3.0);
//! # Ok::<(), wishent::Error>(())
//! ```

// `!(x > 0.0)` style guards are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod complexity;
pub mod dynamics;
pub mod ensembles;
mod error;
pub mod measures;
pub mod rng;
pub mod schmidt;
pub mod stats;
pub mod theory;

pub use complexity::{ComplexityValue, YRoute};
pub use ensembles::{Beta, CMatrix, Protocol, ProtocolKind, VarianceProfile};
pub use error::{Error, Result};
pub use measures::MeasureSet;
pub use schmidt::{DensityMatrix, Spectrum};
pub use stats::{FitResult, SweepCurve};
