//! The matrix flow and the eigenvalue SDE against their stationary laws and each other.

use nalgebra::DMatrix;
use rayon::prelude::*;
use wishent::dynamics::{
    dyson_evolve, eb_mu_at_flow_y, evolved_profile, flow_y_of_eb, hs_mean_s2_two_level, langevin_evolve,
    normalized_s23, separable_profile, stationary_check, DysonState, LangevinState, DEFAULT_V2,
};
use wishent::ensembles::{sample_c, Entries};
use wishent::rng::{self, domain};
use wishent::schmidt;
use wishent::stats::{ks_two_sample, Stat};
use wishent::{Beta, CMatrix};

const GAMMA: f64 = 0.25;

#[test]
fn langevin_component_variance_relaxes_to_v2_over_gamma() {
    let draws = 100_000u64;
    let vals: Vec<f64> = (0..draws)
        .into_par_iter()
        .map(|i| {
            let c0 = CMatrix::real(DMatrix::from_element(1, 1, 3.0)).unwrap();
            let mut st = LangevinState::new(c0, GAMMA, DEFAULT_V2).unwrap();
            match langevin_evolve(&mut st, 1e3, &mut rng::stream(11, domain::LANGEVIN, i)).unwrap().entries() {
                Entries::Real(m) => m[(0, 0)],
                Entries::Complex(_) => unreachable!(),
            }
        })
        .collect();
    let mean = vals.iter().sum::<f64>() / draws as f64;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (draws - 1) as f64;
    assert!((var - DEFAULT_V2 / GAMMA).abs() < 0.02, "variance {var}");
    assert!(mean.abs() < 0.02, "mean {mean}");
}

#[test]
fn langevin_in_two_steps_matches_the_exact_law() {
    let n = 3;
    let paths = 4000u64;
    let sep = separable_profile(n, 0, Beta::Complex, GAMMA, DEFAULT_V2).unwrap();
    let flow: Vec<f64> = (0..paths)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(12, domain::LANGEVIN, i);
            let mut st = LangevinState::new(sample_c(&sep, &mut r), GAMMA, DEFAULT_V2).unwrap();
            langevin_evolve(&mut st, 0.15, &mut r).unwrap();
            let c = langevin_evolve(&mut st, 0.4, &mut r).unwrap();
            normalized_s23(schmidt::schmidt_spectrum(&c).unwrap().values()).0
        })
        .collect();
    let law = evolved_profile(&sep, 0.4, GAMMA, DEFAULT_V2).unwrap();
    let direct: Vec<f64> = (0..paths)
        .into_par_iter()
        .map(|i| {
            let c = sample_c(&law, &mut rng::stream(12, domain::SAMPLE, i));
            normalized_s23(schmidt::schmidt_spectrum(&c).unwrap().values()).0
        })
        .collect();
    let ks = ks_two_sample(&flow, &direct).unwrap();
    assert!(ks.p_value > 1e-3, "KS {ks:?}");
}

#[test]
fn flow_from_separable_state_is_the_eb_family() {
    for y in [1e-3, 0.1, 2.0, 40.0] {
        let mu = eb_mu_at_flow_y(y, GAMMA);
        assert!((flow_y_of_eb(mu, GAMMA) / y - 1.0).abs() < 1e-12);
    }
    // columns beyond the first share one variance, the first column sits at v²/γ
    let sep = separable_profile(3, 1, Beta::Real, GAMMA, DEFAULT_V2).unwrap();
    let h = evolved_profile(&sep, 0.7, GAMMA, DEFAULT_V2).unwrap().h().clone();
    let ratio = h[(0, 1)] / h[(0, 0)];
    let mu = eb_mu_at_flow_y(0.7, GAMMA);
    assert!((ratio - 1.0 / (1.0 + mu)).abs() < 1e-12, "{ratio} vs {}", 1.0 / (1.0 + mu));
    assert!(h.column(0).iter().all(|&v| (v - DEFAULT_V2 / GAMMA).abs() < 1e-12));
}

fn dyson_paths(lambdas: &[f64], beta: Beta, nu0: usize, y: f64, step: f64, paths: u64, seed: u64) -> Vec<Vec<f64>> {
    (0..paths)
        .into_par_iter()
        .map(|i| {
            let st = DysonState::new(lambdas.to_vec(), 0.0, beta, nu0, GAMMA).unwrap().with_steps(step, 1e-12).unwrap();
            dyson_evolve(&st, y, &mut rng::stream(seed, domain::DYSON, i)).unwrap().lambdas().to_vec()
        })
        .collect()
}

#[test]
fn single_eigenvalue_relaxes_to_chi_square_mean() {
    // λ is a sum of β(N+ν₀) squared components of variance v²/γ = 1
    let nu0 = 2;
    for (beta, k) in [(Beta::Real, 3.0), (Beta::Complex, 6.0)] {
        let end = dyson_paths(&[0.5], beta, nu0, 30.0, 1e-3, 2000, 21);
        let s = Stat::of(end.iter().map(|l| l[0]));
        assert!((s.mean - k).abs() < 4.0 * s.se, "beta={beta}: {} ± {} vs {k}", s.mean, s.se);
        let var = s.se * s.se * 2000.0;
        assert!((var / (2.0 * k) - 1.0).abs() < 0.15, "beta={beta}: variance {var} vs {}", 2.0 * k);
    }
}

#[test]
fn two_eigenvalues_reach_the_unit_trace_law() {
    // ν₀ = 2 keeps the smaller eigenvalue off the origin, where a coarse
    // fixed-step scheme is biased (β=1, ν₀=0 sits at the boundary)
    for beta in [Beta::Real, Beta::Complex] {
        let end = dyson_paths(&[2.0, 0.5], beta, 2, 20.0, 1e-3, 4000, 22);
        let s = Stat::of(end.iter().map(|l| normalized_s23(l).0));
        let want = hs_mean_s2_two_level(beta, 2);
        assert!((s.mean - want).abs() < 4.0 * s.se, "beta={beta}: {} ± {} vs {want}", s.mean, s.se);
    }
}

#[test]
fn dyson_agrees_in_law_with_direct_sampling() {
    let (n, y0, y1, paths) = (4, 0.05, 0.4, 2000u64);
    let sep = separable_profile(n, 0, Beta::Real, GAMMA, DEFAULT_V2).unwrap();
    let start = evolved_profile(&sep, y0, GAMMA, DEFAULT_V2).unwrap();
    let end = evolved_profile(&sep, y1, GAMMA, DEFAULT_V2).unwrap();
    let sde: Vec<f64> = (0..paths)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(23, domain::DYSON, i);
            let c = sample_c(&start, &mut r);
            let l = schmidt::eigenvalues(&schmidt::gram(&c)).unwrap();
            let st = DysonState::new(l, y0, Beta::Real, 0, GAMMA).unwrap();
            normalized_s23(dyson_evolve(&st, y1, &mut r).unwrap().lambdas()).0
        })
        .collect();
    let direct: Vec<f64> = (0..paths)
        .into_par_iter()
        .map(|i| normalized_s23(schmidt::schmidt_spectrum(&sample_c(&end, &mut rng::stream(23, domain::SAMPLE, i))).unwrap().values()).0)
        .collect();
    let ks = ks_two_sample(&sde, &direct).unwrap();
    assert!(ks.p_value > 1e-3, "KS {ks:?}");
}

#[test]
fn stationary_sampler_matches_the_laguerre_law() {
    for beta in [Beta::Real, Beta::Complex] {
        for (n, nu0) in [(2, 0), (2, 3), (4, 1)] {
            let rep = stationary_check(20_000, n, nu0, beta, GAMMA, 31, 4.0).unwrap();
            assert!(rep.pass(), "beta={beta} N={n} nu0={nu0}: {:?}", rep.failures().collect::<Vec<_>>());
        }
    }
}
