use proptest::prelude::*;
use wishent::complexity::{complexity_closed_form, complexity_general};
use wishent::ensembles::{build_profile, sample_c, Entries};
use wishent::measures::{min_entropy, renyi, von_neumann, MeasureSet, BITS};
use wishent::rng;
use wishent::schmidt;
use wishent::stats::growth_model;
use wishent::theory::{predict_r1, predict_r2, TheoryInputs};
use wishent::{Beta, CMatrix, Protocol, ProtocolKind};

fn beta() -> impl Strategy<Value = Beta> {
    prop_oneof![Just(Beta::Real), Just(Beta::Complex)]
}

fn protocol() -> impl Strategy<Value = Protocol> {
    prop_oneof![
        (-3.0f64..3.0).prop_map(|l| Protocol::Eb { mu: 10f64.powf(l) }),
        (-1.0f64..2.0, -1.0f64..2.0).prop_map(|(a, b)| Protocol::Ep { a: 10f64.powf(a), b: 10f64.powf(b) }),
        (-1.0f64..2.0, -1.0f64..2.0).prop_map(|(a, b)| Protocol::Ee { a: 10f64.powf(a), b: 10f64.powf(b) }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn spectrum_is_a_probability_vector(p in protocol(), n in 2usize..9, nu0 in 0usize..4, b in beta(), seed in any::<u64>()) {
        let prof = build_profile(p, n, nu0, b).unwrap();
        let spec = schmidt::schmidt_spectrum(&sample_c(&prof, &mut rng::stream(seed, 0, 0))).unwrap();
        let v = spec.values();
        prop_assert_eq!(v.len(), n);
        prop_assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(v.iter().all(|&x| x >= 0.0));
        prop_assert!(v.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn renyi_entropies_are_ordered(p in protocol(), n in 2usize..9, b in beta(), seed in any::<u64>()) {
        let prof = build_profile(p, n, 0, b).unwrap();
        let spec = schmidt::schmidt_spectrum(&sample_c(&prof, &mut rng::stream(seed, 0, 0))).unwrap();
        let ms = MeasureSet::bits(&spec);
        prop_assert!(ms.ordering_holds());
        let tol = 1e-12;
        prop_assert!(ms.r_inf <= ms.r2() + tol && ms.r2() <= ms.r1 + tol);
        prop_assert!(ms.r1 <= (n as f64).log2() + tol);
        let rs: Vec<f64> = [0.5, 0.999, 1.0, 1.001, 2.0, 3.0, 7.0]
            .iter()
            .map(|&a| if a == 1.0 { von_neumann(&spec, BITS) } else { renyi(&spec, a, BITS).unwrap() })
            .collect();
        prop_assert!(rs.windows(2).all(|w| w[1] <= w[0] + tol));
        prop_assert!((rs[4] - ms.r2()).abs() < tol);
        prop_assert!(min_entropy(&spec, BITS) <= rs[6] + tol);
    }

    #[test]
    fn spectrum_ignores_overall_scale(p in protocol(), n in 2usize..7, b in beta(), seed in any::<u64>(), log_c in -6.0f64..6.0) {
        let prof = build_profile(p, n, 1, b).unwrap();
        let c = sample_c(&prof, &mut rng::stream(seed, 0, 0));
        let k = 10f64.powf(log_c);
        let scaled = match c.entries() {
            Entries::Real(m) => CMatrix::real(m * k).unwrap(),
            Entries::Complex(m) => CMatrix::complex(m.map(|z| z * k)).unwrap(),
        };
        let a = schmidt::schmidt_spectrum(&c).unwrap();
        let s = schmidt::schmidt_spectrum(&scaled).unwrap();
        for (x, y) in a.values().iter().zip(s.values()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn complexity_routes_agree(p in protocol(), n in 2usize..10, nu0 in 0usize..4, b in beta(), g in 0.05f64..2.0) {
        let general = complexity_general(&build_profile(p, n, nu0, b).unwrap(), g).unwrap();
        let closed = complexity_closed_form(p, n, nu0, b, g).unwrap();
        prop_assert!((general.y - closed.y).abs() <= 1e-10 * closed.y.abs().max(1.0));
    }

    #[test]
    fn complexity_moves_monotonically_with_the_parameter(l1 in -2.0f64..3.0, dl in 0.01f64..2.0, n in 2usize..10, b in beta()) {
        let (p1, p2) = (10f64.powf(l1), 10f64.powf(l1 + dl));
        let y = |kind: ProtocolKind, v: f64| complexity_closed_form(kind.with_param(v), n, 0, b, 0.25).unwrap().y;
        // non-strict: tiny EE parameters underflow every variance to zero
        prop_assert!(y(ProtocolKind::EB, p2) <= y(ProtocolKind::EB, p1));
        prop_assert!(y(ProtocolKind::EP, p2) >= y(ProtocolKind::EP, p1));
        prop_assert!(y(ProtocolKind::EE, p2) >= y(ProtocolKind::EE, p1));
    }

    #[test]
    fn growth_model_starts_at_zero(a in -20.0f64..20.0, b1 in -50.0f64..50.0, b2 in -50.0f64..50.0, d in -100.0f64..100.0) {
        prop_assert_eq!(growth_model(0.0, a, b1, b2, d), 0.0);
    }

    #[test]
    fn predictions_are_monotone_and_r1_is_concave(
        n in 8usize..300, r0 in 10.0f64..1e4, inv in 1.0f64..500.0, g1 in 0.05f64..2.0, g2 in -2.0f64..-0.05, b in beta()
    ) {
        let inputs = TheoryInputs::new(n, 0, b, 0.25, r0, inv, g1, g2);
        let ys: Vec<f64> = (0..60).map(|i| 1e-6 * 1.3f64.powi(i)).collect();
        let r1 = predict_r1(&inputs, &ys).unwrap();
        let r2 = predict_r2(&inputs, &ys).unwrap();
        prop_assert!(r1.full.windows(2).all(|w| w[1] >= w[0]));
        prop_assert!(r2.combined.windows(2).all(|w| w[1] >= w[0]));
        // concave in Y: secant slopes never increase
        let slopes: Vec<f64> = ys.windows(2).zip(r1.full.windows(2)).map(|(y, r)| (r[1] - r[0]) / (y[1] - y[0])).collect();
        prop_assert!(slopes.windows(2).all(|s| s[1] <= s[0] * (1.0 + 1e-9) + 1e-300));
    }
}
