//! Ensembles of paths started from the separable state, summarized at checkpoints.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dyson::{dyson_evolve, DysonState};
use super::langevin::{evolved_profile, langevin_evolve, separable_profile, LangevinState};
use crate::ensembles::{sample_c, Beta};
use crate::rng::{self, domain};
use crate::schmidt;
use crate::stats::Stat;
use crate::{Error, Result};

/// Path averages of the normalized spectrum at one `Y`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub y: f64,
    pub paths: usize,
    pub s2: Stat,
    pub s3: Stat,
    /// `-log₂ S₂`.
    pub r2: Stat,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DysonRun {
    pub checkpoints: Vec<Checkpoint>,
    /// Paths abandoned at the step floor.
    pub failed: usize,
    pub rejections: u64,
}

/// Common inputs of the path ensembles.
#[derive(Clone, Debug, PartialEq)]
pub struct PathSpec {
    pub n: usize,
    pub nu0: usize,
    pub beta: Beta,
    pub gamma: f64,
    pub v2: f64,
    pub checkpoints: Vec<f64>,
    pub paths: usize,
    pub seed: u64,
}

impl PathSpec {
    fn validate(&self, after: f64) -> Result<()> {
        if self.paths < 2 {
            return Err(Error::InsufficientData(format!("need at least 2 paths, got {}", self.paths)));
        }
        if self.checkpoints.is_empty() {
            return Err(Error::domain("no checkpoints"));
        }
        let mut prev = after;
        for &y in &self.checkpoints {
            if !(y.is_finite() && y > prev) {
                return Err(Error::domain(format!("checkpoints must increase from {after}, got {y} after {prev}")));
            }
            prev = y;
        }
        Ok(())
    }
}

/// `(S₂, S₃)` of the normalized spectrum.
pub fn normalized_s23(lambdas: &[f64]) -> (f64, f64) {
    let t: f64 = lambdas.iter().sum();
    lambdas.iter().fold((0.0, 0.0), |(s2, s3), l| {
        let x = l / t;
        (s2 + x * x, s3 + x * x * x)
    })
}

fn summarize(ys: &[f64], per_path: &[Vec<(f64, f64)>]) -> Vec<Checkpoint> {
    ys.iter()
        .enumerate()
        .map(|(j, &y)| Checkpoint {
            y,
            paths: per_path.len(),
            s2: Stat::of(per_path.iter().map(|p| p[j].0)),
            s3: Stat::of(per_path.iter().map(|p| p[j].1)),
            r2: Stat::of(per_path.iter().map(|p| -p[j].0.log2())),
        })
        .collect()
}

/// Independent draws from the exact law at each checkpoint. Checkpoint `j`
/// uses streams `(seed + j, SAMPLE, i)`.
pub fn direct_ensemble(spec: &PathSpec) -> Result<Vec<Checkpoint>> {
    spec.validate(0.0)?;
    let sep = separable_profile(spec.n, spec.nu0, spec.beta, spec.gamma, spec.v2)?;
    let per_y = spec
        .checkpoints
        .iter()
        .enumerate()
        .map(|(j, &y)| {
            let prof = evolved_profile(&sep, y, spec.gamma, spec.v2)?;
            (0..spec.paths as u64)
                .into_par_iter()
                .map(|i| {
                    let c = sample_c(&prof, &mut rng::stream(spec.seed.wrapping_add(j as u64), domain::SAMPLE, i));
                    Ok(normalized_s23(schmidt::schmidt_spectrum(&c).map_err(|e| e.with_sample(i))?.values()))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let per_path: Vec<Vec<(f64, f64)>> = (0..spec.paths).map(|i| per_y.iter().map(|v| v[i]).collect()).collect();
    Ok(summarize(&spec.checkpoints, &per_path))
}

/// Matrix flow from the separable state; path `i` uses stream `(seed, LANGEVIN, i)`.
pub fn langevin_ensemble(spec: &PathSpec) -> Result<Vec<Checkpoint>> {
    spec.validate(0.0)?;
    let sep = separable_profile(spec.n, spec.nu0, spec.beta, spec.gamma, spec.v2)?;
    let per_path = (0..spec.paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(spec.seed, domain::LANGEVIN, i);
            let mut st = LangevinState::new(sample_c(&sep, &mut r), spec.gamma, spec.v2)?;
            spec.checkpoints
                .iter()
                .map(|&y| {
                    let c = langevin_evolve(&mut st, y, &mut r)?;
                    Ok(normalized_s23(schmidt::schmidt_spectrum(&c).map_err(|e| e.with_sample(i))?.values()))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(&spec.checkpoints, &per_path))
}

/// Per-path `(S₂, S₃)` at each checkpoint and the rejected-step count.
type PathTrace = (Vec<(f64, f64)>, u64);

/// Eigenvalue SDE started at `y_start` from spectra drawn from the exact law
/// there (the separable state itself is degenerate). Path `i` uses stream
/// `(seed, DYSON, i)`; paths hitting the step floor are dropped and counted.
pub fn dyson_ensemble(spec: &PathSpec, y_start: f64, base_step: Option<f64>) -> Result<DysonRun> {
    if !(y_start.is_finite() && y_start > 0.0) {
        return Err(Error::domain(format!("Dyson start must be positive, got {y_start}")));
    }
    spec.validate(y_start)?;
    let sep = separable_profile(spec.n, spec.nu0, spec.beta, spec.gamma, spec.v2)?;
    let start = evolved_profile(&sep, y_start, spec.gamma, spec.v2)?;
    let results: Vec<Result<PathTrace>> = (0..spec.paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(spec.seed, domain::DYSON, i);
            let c = sample_c(&start, &mut r);
            let lambdas = schmidt::eigenvalues(&schmidt::gram(&c)).map_err(|e| e.with_sample(i))?;
            let mut st = DysonState::new(lambdas, y_start, spec.beta, spec.nu0, spec.gamma)?;
            if let Some(h) = base_step {
                st = st.with_steps(h, super::dyson::DEFAULT_STEP_FLOOR.min(h))?;
            }
            let mut out = Vec::with_capacity(spec.checkpoints.len());
            for &y in &spec.checkpoints {
                st = dyson_evolve(&st, y, &mut r)?;
                out.push(normalized_s23(st.lambdas()));
            }
            Ok((out, st.rejections()))
        })
        .collect();
    let mut per_path = Vec::with_capacity(spec.paths);
    let mut failed = 0;
    let mut rejections = 0;
    for r in results {
        match r {
            Ok((v, rej)) => {
                per_path.push(v);
                rejections += rej;
            }
            Err(Error::StiffRegion { .. }) => failed += 1,
            Err(e) => return Err(e),
        }
    }
    if per_path.len() < 2 {
        return Err(Error::numerical(format!("{failed} of {} Dyson paths hit the step floor", spec.paths)));
    }
    Ok(DysonRun { checkpoints: summarize(&spec.checkpoints, &per_path), failed, rejections })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::DEFAULT_V2;

    fn spec(paths: usize) -> PathSpec {
        PathSpec {
            n: 3,
            nu0: 0,
            beta: Beta::Real,
            gamma: 0.25,
            v2: DEFAULT_V2,
            checkpoints: vec![0.2, 0.5],
            paths,
            seed: 4,
        }
    }

    #[test]
    fn s23_of_uniform() {
        let (s2, s3) = normalized_s23(&[2.0, 2.0, 2.0, 2.0]);
        assert!((s2 - 0.25).abs() < 1e-15 && (s3 - 1.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn checkpoints_must_increase() {
        let mut s = spec(10);
        s.checkpoints = vec![0.5, 0.2];
        assert!(langevin_ensemble(&s).is_err());
        assert!(dyson_ensemble(&spec(10), 0.3, None).is_err());
        assert!(direct_ensemble(&spec(1)).is_err());
    }

    #[test]
    fn ensembles_are_deterministic() {
        let s = spec(20);
        assert_eq!(langevin_ensemble(&s).unwrap(), langevin_ensemble(&s).unwrap());
        assert_eq!(direct_ensemble(&s).unwrap(), direct_ensemble(&s).unwrap());
        let a = dyson_ensemble(&s, 0.05, Some(1e-3)).unwrap();
        assert_eq!(a, dyson_ensemble(&s, 0.05, Some(1e-3)).unwrap());
        assert_eq!(a.checkpoints.len(), 2);
    }
}
