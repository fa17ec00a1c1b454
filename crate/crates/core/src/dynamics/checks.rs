//! Verification of the dynamics against closed-form laws: one-step element
//! moments of `CC†` and the stationary eigenvalue density.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use super::langevin::step_entries;
use crate::ensembles::{sample_stationary, Beta, CMatrix, Entries};
use crate::rng::{self, domain};
use crate::schmidt::{self, gram_of};
use crate::{Error, Result};

/// One tested expectation.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub label: String,
    pub observed: f64,
    pub expected: f64,
    pub stderr: f64,
    pub z: f64,
    pub pass: bool,
}

impl Check {
    fn new(label: String, observed: f64, expected: f64, stderr: f64, n_sigma: f64) -> Self {
        let diff = observed - expected;
        let z = if stderr > 0.0 {
            diff / stderr
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY.copysign(diff)
        };
        Check { label, observed, expected, stderr, z, pass: z.abs() <= n_sigma }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CheckReport {
    pub checks: Vec<Check>,
}

impl CheckReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn max_abs_z(&self) -> f64 {
        self.checks.iter().map(|c| c.z.abs()).fold(0.0, f64::max)
    }
}

#[derive(Clone, Default)]
struct Acc {
    sum: Vec<f64>,
    sq: Vec<f64>,
}

impl Acc {
    fn new(n: usize) -> Self {
        Acc { sum: vec![0.0; n], sq: vec![0.0; n] }
    }

    fn push(&mut self, i: usize, v: f64) {
        self.sum[i] += v;
        self.sq[i] += v * v;
    }

    fn merge(mut self, o: &Acc) -> Self {
        for i in 0..self.sum.len() {
            self.sum[i] += o.sum[i];
            self.sq[i] += o.sq[i];
        }
        self
    }

    fn mean_se(&self, i: usize, n: f64) -> (f64, f64) {
        let m = self.sum[i] / n;
        let var = ((self.sq[i] - n * m * m) / (n - 1.0)).max(0.0);
        (m, (var / n).sqrt())
    }
}

fn upper_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|m| (m..n).map(move |k| (m, k))).collect()
}

const CHUNK: usize = 10_000;

/// One-step moments of `δ(CC†)` under the exact matrix flow, compared with
///
/// * `⟨δρ_mn⟩ = 2(βv²N_b δ_mn - γρ_mn) δY`
/// * β=1: `⟨δρ_mn δρ_kl⟩ = 2v²[ρ_mk δ_nl + ρ_ml δ_nk + ρ_nk δ_ml + ρ_nl δ_mk] δY`
/// * β=2: `⟨δρ_mn δρ*_kl⟩ = 4v²[ρ_mk δ_nl + ρ*_nl δ_mk] δY`,
///   `⟨δρ_mn δρ_kl⟩ = 4v²[ρ_ml δ_nk + ρ*_nk δ_ml] δY`
///
/// for every index class with `m ≤ n`, `k ≤ l`; real and imaginary parts are
/// tested separately at `n_sigma`.
pub fn element_moment_check(
    c: &CMatrix,
    gamma: f64,
    v2: f64,
    delta_y: f64,
    n_increments: usize,
    seed: u64,
    n_sigma: f64,
) -> Result<CheckReport> {
    if !(0.0..=1e-3).contains(&delta_y) {
        return Err(Error::domain(format!("delta Y must lie in [0, 1e-3], got {delta_y}")));
    }
    if n_increments < 2 {
        return Err(Error::InsufficientData("need at least two increments".into()));
    }
    let (n, nb) = c.shape();
    let beta = c.beta();
    let rho0 = to_complex(&gram_of(c.entries()));
    let pairs = upper_pairs(n);
    let np = pairs.len();
    // slots: first moments (re, im), then for each pair of pairs: conj kind (re, im), plain kind (re, im)
    let n_slots = 2 * np + 4 * np * np;
    let chunks = n_increments.div_ceil(CHUNK);
    let acc = (0..chunks)
        .into_par_iter()
        .map(|ci| {
            let mut r = rng::stream(seed, domain::MOMENTS, ci as u64);
            let mut acc = Acc::new(n_slots);
            let count = CHUNK.min(n_increments - ci * CHUNK);
            let mut d = vec![Complex64::new(0.0, 0.0); np];
            for _ in 0..count {
                let mut e = c.entries().clone();
                step_entries(&mut e, gamma, v2, delta_y, &mut r);
                let rho = to_complex(&gram_of(&e));
                for (i, &(m, k)) in pairs.iter().enumerate() {
                    d[i] = rho[(m, k)] - rho0[(m, k)];
                    acc.push(2 * i, d[i].re);
                    acc.push(2 * i + 1, d[i].im);
                }
                for a in 0..np {
                    for b in 0..np {
                        let base = 2 * np + 4 * (a * np + b);
                        let cj = d[a] * d[b].conj();
                        let pl = d[a] * d[b];
                        acc.push(base, cj.re);
                        acc.push(base + 1, cj.im);
                        acc.push(base + 2, pl.re);
                        acc.push(base + 3, pl.im);
                    }
                }
            }
            acc
        })
        .collect::<Vec<_>>()
        .iter()
        .fold(Acc::new(n_slots), Acc::merge);

    let total = n_increments as f64;
    let b = beta.value();
    let kd = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
    let r = |i: usize, j: usize| rho0[(i, j)];
    let mut checks = Vec::new();
    let mut push = |label: String, slot: usize, expected: f64| {
        let (m, se) = acc.mean_se(slot, total);
        checks.push(Check::new(label, m, expected, se, n_sigma));
    };
    for (i, &(m, k)) in pairs.iter().enumerate() {
        let e = (Complex64::new(b * v2 * nb as f64 * kd(m, k), 0.0) - r(m, k) * gamma) * (2.0 * delta_y);
        push(format!("<d rho[{m},{k}]>.re"), 2 * i, e.re);
        if beta == Beta::Complex {
            push(format!("<d rho[{m},{k}]>.im"), 2 * i + 1, e.im);
        }
    }
    for (a, &(m, nn)) in pairs.iter().enumerate() {
        for (bi, &(k, l)) in pairs.iter().enumerate() {
            let base = 2 * np + 4 * (a * np + bi);
            match beta {
                Beta::Real => {
                    if bi < a {
                        continue;
                    }
                    let e = 2.0
                        * v2
                        * (r(m, k).re * kd(nn, l) + r(m, l).re * kd(nn, k) + r(nn, k).re * kd(m, l) + r(nn, l).re * kd(m, k))
                        * delta_y;
                    push(format!("<d rho[{m},{nn}] d rho[{k},{l}]>"), base + 2, e);
                }
                Beta::Complex => {
                    let ec = (r(m, k) * kd(nn, l) + r(nn, l).conj() * kd(m, k)) * (4.0 * v2 * delta_y);
                    let ep = (r(m, l) * kd(nn, k) + r(nn, k).conj() * kd(m, l)) * (4.0 * v2 * delta_y);
                    push(format!("<d rho[{m},{nn}] d rho*[{k},{l}]>.re"), base, ec.re);
                    push(format!("<d rho[{m},{nn}] d rho*[{k},{l}]>.im"), base + 1, ec.im);
                    push(format!("<d rho[{m},{nn}] d rho[{k},{l}]>.re"), base + 2, ep.re);
                    push(format!("<d rho[{m},{nn}] d rho[{k},{l}]>.im"), base + 3, ep.im);
                }
            }
        }
    }
    Ok(CheckReport { checks })
}

fn to_complex(e: &Entries) -> DMatrix<Complex64> {
    match e {
        Entries::Real(m) => m.map(|v| Complex64::new(v, 0.0)),
        Entries::Complex(m) => m.clone(),
    }
}

/// Unnormalized log density of Wishart eigenvalues of `CC†` for an
/// `N × (N+ν₀)` matrix with i.i.d. components of variance `s`:
///
/// `β Σ_{i<j} ln|λ_i-λ_j| + (β(ν₀+1)/2 - 1) Σ ln λ_i - Σ λ_i/(2s)`.
pub fn laguerre_log_density(lambdas: &[f64], beta: Beta, nu0: usize, component_variance: f64) -> f64 {
    let b = beta.value();
    let a = b * (nu0 as f64 + 1.0) / 2.0 - 1.0;
    let mut out = 0.0;
    for (i, &x) in lambdas.iter().enumerate() {
        out += a * x.ln() - x / (2.0 * component_variance);
        for &y in &lambdas[i + 1..] {
            out += b * (x - y).abs().ln();
        }
    }
    out
}

/// `⟨S₂⟩` of the unit-trace two-eigenvalue law `∝ |x₁-x₂|^β (x₁x₂)^{β(ν₀+1)/2-1}`.
pub fn hs_mean_s2_two_level(beta: Beta, nu0: usize) -> f64 {
    hs_two_level_mean(beta, nu0, |x1, x2| x1 * x1 + x2 * x2)
}

/// Mean of `f(x₁, x₂)` under the unit-trace two-eigenvalue law, by composite
/// Simpson quadrature in `x₁ = sin²θ`.
pub fn hs_two_level_mean(beta: Beta, nu0: usize, f: impl Fn(f64, f64) -> f64) -> f64 {
    let b = beta.value();
    let a = b * (nu0 as f64 + 1.0) / 2.0 - 1.0;
    let weight = |t: f64| {
        let s2t = (2.0 * t).sin();
        (2.0 * t).cos().abs().powf(b) * 0.5f64.powf(2.0 * a) * s2t.powf(2.0 * a + 1.0)
    };
    let n = 20_000;
    let h = std::f64::consts::FRAC_PI_2 / n as f64;
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..=n {
        let t = i as f64 * h;
        let c = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let w = weight(t);
        if w == 0.0 {
            continue;
        }
        let x1 = t.sin().powi(2);
        num += c * w * f(x1, 1.0 - x1);
        den += c * w;
    }
    num / den
}

/// Stationary-law checks on directly sampled Wishart spectra:
///
/// * importance-ratio identities `E[P(Tλ)|J_T(λ)|/P(λ)] = 1` for a scale map
///   and a power map, using [`laguerre_log_density`];
/// * for `N = 2`, the trace-projected `⟨S₂⟩` against [`hs_mean_s2_two_level`].
pub fn stationary_check(
    n_samples: usize,
    n: usize,
    nu0: usize,
    beta: Beta,
    gamma: f64,
    seed: u64,
    n_sigma: f64,
) -> Result<CheckReport> {
    if n > 8 {
        return Err(Error::domain(format!("density-ratio test needs N <= 8, got {n}")));
    }
    if n_samples < 2 {
        return Err(Error::InsufficientData("need at least two samples".into()));
    }
    let s = 0.5 / gamma;
    let spectra = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(seed, domain::STATIONARY, i as u64);
            let c = sample_stationary(n, nu0, beta, gamma, &mut r)?;
            let vals = schmidt::eigenvalues(&gram_of(c.entries())).map_err(|e| e.with_sample(i as u64))?;
            let mut vals = vals;
            vals.sort_by(|a, b| b.total_cmp(a));
            Ok(vals)
        })
        .collect::<Result<Vec<_>>>()?;

    let mean_se = |xs: &[f64]| {
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0);
        (m, (v / xs.len() as f64).sqrt())
    };
    let log_p = |l: &[f64]| laguerre_log_density(l, beta, nu0, s);
    let mut checks = Vec::new();

    let c_scale = 1.03;
    let ratios: Vec<f64> = spectra
        .iter()
        .map(|l| {
            let t: Vec<f64> = l.iter().map(|x| x * c_scale).collect();
            (log_p(&t) - log_p(l) + n as f64 * c_scale.ln()).exp()
        })
        .collect();
    let (m, se) = mean_se(&ratios);
    checks.push(Check::new(format!("scale x{c_scale} importance ratio"), m, 1.0, se, n_sigma));

    let p = 1.02;
    let ratios: Vec<f64> = spectra
        .iter()
        .map(|l| {
            let t: Vec<f64> = l.iter().map(|x| x.powf(p)).collect();
            let log_j: f64 = l.iter().map(|x| p.ln() + (p - 1.0) * x.ln()).sum();
            (log_p(&t) - log_p(l) + log_j).exp()
        })
        .collect();
    let (m, se) = mean_se(&ratios);
    checks.push(Check::new(format!("power ^{p} importance ratio"), m, 1.0, se, n_sigma));

    if n == 2 {
        let s2: Vec<f64> = spectra
            .iter()
            .map(|l| {
                let t = l[0] + l[1];
                (l[0] * l[0] + l[1] * l[1]) / (t * t)
            })
            .collect();
        let (m, se) = mean_se(&s2);
        checks.push(Check::new("trace-projected <S2>".into(), m, hs_mean_s2_two_level(beta, nu0), se, n_sigma));
    }
    Ok(CheckReport { checks })
}
