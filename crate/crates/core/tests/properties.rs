use lebesgue::ell1::{self, L1Sequence};
use lebesgue::functional::{kvn_sup_estimate, NormalFunctional};
use lebesgue::psd::{loewner_leq, trace_distance};
use lebesgue::{engine, panel, parallel, HermitianMatrix, Tail, ToleranceConfig};
use proptest::prelude::*;

fn cfg() -> ToleranceConfig {
    ToleranceConfig::default()
}

// Loewner checks on computed matrices need a little slack
fn loose() -> ToleranceConfig {
    ToleranceConfig {
        psd_tol: 1e-8,
        ..ToleranceConfig::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn parallel_sum_is_symmetric_and_below_both(seed in any::<u64>()) {
        let mut rng = panel::rng(seed);
        let (s, t) = panel::random_pair(2..=5, &mut rng);
        let st = parallel::parallel_sum(&s, &t, &cfg()).unwrap();
        let ts = parallel::parallel_sum(&t, &s, &cfg()).unwrap();
        prop_assert!(trace_distance(&st, &ts).unwrap() <= 1e-9 * (1.0 + s.trace()));
        prop_assert!(loewner_leq(&st, &s, &loose()).unwrap());
        prop_assert!(loewner_leq(&st, &t, &loose()).unwrap());
    }

    #[test]
    fn decomposition_is_additive_and_ordered(seed in any::<u64>()) {
        let mut rng = panel::rng(seed);
        let (s, t) = panel::random_pair(2..=5, &mut rng);
        let dec = engine::decompose(&s, &t, &cfg()).unwrap();
        let sum = dec.ac.add(&dec.sing).unwrap();
        prop_assert!(trace_distance(&sum, &s).unwrap() <= 1e-9 * s.trace());
        prop_assert!(loewner_leq(&dec.ac, &s, &loose()).unwrap());
        prop_assert!(engine::is_absolutely_continuous(&dec.ac, &t, &cfg()).unwrap());
    }

    #[test]
    fn iteration_traces_grow(seed in any::<u64>()) {
        let mut rng = panel::rng(seed);
        let (s, t) = panel::random_pair(2..=4, &mut rng);
        let (_, trace) = engine::ac_part_iterative(&s, &t, &cfg()).unwrap();
        prop_assert!(trace.converged);
        for w in trace.steps.windows(2) {
            prop_assert!(w[1].trace >= w[0].trace - 1e-12 * s.trace());
        }
    }

    #[test]
    fn singular_pairs_have_zero_ac_part(seed in any::<u64>()) {
        let mut rng = panel::rng(seed);
        let (s, t) = panel::random_singular_pair(2..=6, &mut rng);
        prop_assert!(parallel::is_singular_pair(&s, &t, &cfg()).unwrap());
        let dec = engine::decompose(&s, &t, &cfg()).unwrap();
        prop_assert!(dec.ac.trace() <= 1e-9 * s.trace());
    }

    #[test]
    fn kvn_estimate_is_nondecreasing_and_reaches_trace(seed in any::<u64>()) {
        let mut rng = panel::rng(seed);
        let d = 2 + (seed % 4) as usize;
        let t = panel::random_psd(d, d, 1e-2, 1.0, &mut rng);
        let f = NormalFunctional::from_matrix(t.clone());
        let x = HermitianMatrix::identity(d);
        let schedule: Vec<usize> = (1..=d).collect();
        let est = kvn_sup_estimate(&f, &x, &schedule, &cfg()).unwrap();
        prop_assert!(est.windows(2).all(|w| w[0] <= w[1]));
        let last = *est.last().unwrap();
        prop_assert!((last - t.trace()).abs() <= 1e-12 * t.trace());
    }

    #[test]
    fn geometric_ratio_bound_matches_scan(
        a in 0.1f64..1.0, b in 0.1f64..1.0, rs in 0.1f64..0.9, rt in 0.1f64..0.9,
    ) {
        let s = L1Sequence::geometric(a, rs).unwrap();
        let t = L1Sequence::geometric(b, rt).unwrap();
        let bound = ell1::diag_is_dominated(&s, &t);
        if rs <= rt {
            let c = bound.expect("ratio is bounded");
            for n in 1..200u64 {
                prop_assert!(ell1::ratio_at(&s, &t, n) <= c * (1.0 + 1e-12));
            }
        } else {
            prop_assert!(bound.is_none());
            let n = ell1::ratio_witness(&s, &t, 1e3).expect("witness exists");
            prop_assert!(ell1::ratio_at(&s, &t, n) > 1e3);
        }
    }

    #[test]
    fn unbounded_construction_keeps_support_and_sum(a in 0.1f64..2.0, r in 0.05f64..0.95) {
        let lam = L1Sequence::geometric(a, r).unwrap();
        let (t, s, cert) = ell1::theorem_b_instance(&lam).unwrap();
        prop_assert!(cert.verify(&s, &t));
        prop_assert!(cert.bound().is_none());
        let affine = matches!(s.tail(), Some(Tail::AffineGeometric { .. }));
        prop_assert!(affine);
        let rel = (s.sum() - s.numeric_sum()).abs() / s.sum();
        prop_assert!(rel <= 1e-9, "closed form {} vs numeric {}", s.sum(), s.numeric_sum());
        for n in 1..50u64 {
            prop_assert!(s.value(n) > 0.0);
        }
    }
}
