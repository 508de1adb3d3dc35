mod oracle;

use pfpini_core::composition::{
    multistage_compose, renewal_count, security_gap_check, GapVerdict,
};
use pfpini_core::equivalence::check_equivalence;
use pfpini_core::multiplicity::count_histogram;
use pfpini_core::{
    measure_exhaustive, measure_sampled, Analyzer, Budget, CountingMethod, GadgetSpec, Modulus,
    PipelineSpec, Sequential, WireId,
};
use proptest::prelude::*;

fn modulus(q: u64) -> Modulus {
    Modulus::new(q).unwrap()
}

fn custom(q: u64, table: Vec<u32>) -> GadgetSpec {
    GadgetSpec::custom("custom", modulus(q), table, q as u32).unwrap()
}

fn table_strategy() -> impl Strategy<Value = (u64, Vec<u32>)> {
    prop::sample::select(vec![2u64, 3, 5, 7, 11]).prop_flat_map(|q| {
        (
            Just(q),
            prop::collection::vec(0..q as u32, (q * q) as usize),
        )
    })
}

fn small_table_strategy() -> impl Strategy<Value = (u64, Vec<u32>, Vec<u32>)> {
    prop::sample::select(vec![2u64, 3, 5]).prop_flat_map(|q| {
        let n = (q * q) as usize;
        (
            Just(q),
            prop::collection::vec(0..q as u32, n),
            prop::collection::vec(0..q as u32, n),
        )
    })
}

#[test]
fn derived_values_match_oracle() {
    let bar = oracle::barrett_alg(5, 3);
    assert_eq!(oracle::histogram(5, &bar, 0), [2, 1, 1, 0, 1]);
    assert_eq!(oracle::histogram(5, &bar, 1), [2, 2, 1, 0, 0]);

    let g = GadgetSpec::barrett_algebraic(modulus(5), Some(3));
    for x in 0..5 {
        let lib: Vec<u64> = count_histogram(&g, modulus(5).residue(x))
            .counts
            .into_iter()
            .map(u64::from)
            .collect();
        assert_eq!(lib, oracle::histogram(5, &bar, x));
    }
}

#[test]
fn pipelines_match_odometer_oracle() {
    let q = 5u64;
    let m = modulus(q);
    let bf = |x: u64, mk: u64| oracle::sub(x, mk, q);
    let bar = oracle::barrett_alg(q, 3);
    let tables = [oracle::table_of(q, bf), oracle::table_of(q, &bar), oracle::table_of(q, bf)];
    let gadgets = [
        GadgetSpec::butterfly(m),
        GadgetSpec::barrett_algebraic(m, Some(3)),
        GadgetSpec::butterfly(m),
    ];
    for fresh in [[false, false], [true, false], [false, true], [true, true]] {
        let p = multistage_compose(gadgets.to_vec(), fresh.to_vec()).unwrap();
        let an = Analyzer::new(&p, &Sequential);
        for x in 0..q {
            let out = an.wire_distribution(WireId::Output, m.residue(x)).unwrap();
            let want = oracle::pipeline_histogram(q, &tables, &fresh, x, 2, false);
            assert_eq!(out.counts.iter().map(|&c| c as u64).collect::<Vec<_>>(), want);
            for b in 0..2 {
                let got = an.intermediate_distribution(b, m.residue(x)).unwrap();
                let want = oracle::pipeline_histogram(q, &tables, &fresh, x, b, fresh[b]);
                assert_eq!(got.counts.iter().map(|&c| c as u64).collect::<Vec<_>>(), want);
            }
        }
    }
}

#[test]
fn nat_equivalence_against_oracle() {
    for (q, s) in [(5u64, 3u32), (7, 3), (13, 6), (31, 5)] {
        let a = oracle::barrett_alg(q, s);
        let n = oracle::barrett_nat(q, s);
        let oracle_equal = (0..q).all(|x| (0..q).all(|m| a(x, m) == n(x, m)));
        let r = check_equivalence(modulus(q), s, &Sequential, Budget::default()).unwrap();
        assert_eq!(r.is_equal(), oracle_equal);
        assert!(oracle_equal);
    }
}

#[test]
fn sampled_with_every_secret_equals_exhaustive() {
    for q in [5u64, 7, 11] {
        for g in [
            GadgetSpec::butterfly(modulus(q)),
            GadgetSpec::barrett_algebraic(modulus(q), None),
            GadgetSpec::montgomery(modulus(q), None).unwrap(),
        ] {
            let e = measure_exhaustive(&g, &Sequential);
            let s = measure_sampled(&g, q, 42, &Sequential).unwrap();
            assert_eq!(e.measured_k, s.measured_k);
            assert_eq!(e.witness, s.witness);
            assert_eq!(e.per_secret, s.per_secret);
            assert_eq!(e.leakage_bits, s.leakage_bits);
            assert_eq!(e.secrets_covered, s.secrets_covered);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn renewal_is_exact((q, table) in table_strategy()) {
        let g = custom(q, table);
        let m = g.modulus();
        for x in m.elements() {
            for w in m.elements() {
                prop_assert_eq!(renewal_count(&g, x, w), q);
            }
        }
    }

    #[test]
    fn histogram_sums_to_q((q, table) in table_strategy()) {
        let g = custom(q, table);
        let r = measure_exhaustive(&g, &Sequential);
        prop_assert!(r.measured_k >= 1 && r.measured_k as u64 <= q);
        for s in &r.per_secret {
            let total: u64 = s.spectrum.iter().map(|e| e.count as u64 * e.values as u64).sum();
            prop_assert_eq!(total, q);
            if s.max_count > 1 {
                prop_assert!(s.zero_values > 0);
            }
        }
        match security_gap_check(&g, &Sequential) {
            GapVerdict::NoGap => prop_assert_eq!(r.measured_k, 1),
            GapVerdict::GapPresent { count, .. } => {
                prop_assert!(r.measured_k > 1);
                prop_assert!(count > 1);
            }
        }
    }

    #[test]
    fn fiber_bounds_hold((q, t1, t2) in small_table_strategy()) {
        let g1 = custom(q, t1);
        let g2 = custom(q, t2);
        let k1 = measure_exhaustive(&g1, &Sequential).measured_k as u128;
        let k2 = measure_exhaustive(&g2, &Sequential).measured_k as u128;
        let q128 = q as u128;
        let secrets: Vec<_> = g1.modulus().elements().collect();
        for fresh in [true, false] {
            let p = PipelineSpec::two_stage(g1.clone(), g2.clone(), fresh).unwrap();
            let an = Analyzer::new(&p, &Sequential);
            let r = an.report(&secrets).unwrap();
            prop_assert!(r.output.satisfied);
            let bound = if fresh { k2 * q128 * q128 } else { k2 * q128 };
            prop_assert!(r.output.max_count <= bound);
            if fresh {
                prop_assert!(r.output.max_count <= k1.max(k2) * q128 * q128);
                prop_assert!(r.wires[0].uniform);
                prop_assert_eq!(r.wires[0].max_count, q128);
                for &a in &secrets {
                    for &b in &secrets {
                        let tv = an.distinguisher_tv(WireId::Boundary(0), a, b).unwrap();
                        prop_assert!(tv.is_zero());
                    }
                }
            } else {
                prop_assert!(r.wires[0].max_count <= k1);
            }
        }
    }

    #[test]
    fn factored_matches_enumerated(
        (q, t1, t2) in small_table_strategy(),
        fresh in prop::collection::vec(any::<bool>(), 2),
    ) {
        let m = modulus(q);
        let g1 = custom(q, t1);
        let g2 = custom(q, t2);
        let p = multistage_compose(vec![g1, g2, GadgetSpec::barrett_algebraic(m, None)], fresh).unwrap();
        let e = Analyzer::new(&p, &Sequential);
        let f = Analyzer::new(&p, &Sequential).method(CountingMethod::Factored);
        for x in m.elements() {
            for wire in [WireId::Boundary(0), WireId::Boundary(1), WireId::Output, WireId::Stage(2)] {
                let a = e.wire_distribution(wire, x).unwrap();
                let b = f.wire_distribution(wire, x).unwrap();
                prop_assert_eq!(&a.counts, &b.counts);
                prop_assert_eq!(a.counts.iter().sum::<u128>(), a.total);
            }
        }
    }

    #[test]
    fn renewal_erases_stage_one((q, t) in small_table_strategy().prop_map(|(q, t, _)| (q, t))) {
        // With a refresh, a constant-zero first stage and a butterfly first
        // stage both leave a uniform boundary and respect k2 * q^2.
        let m = modulus(q);
        let zero = GadgetSpec::custom("zero", m, vec![0; (q * q) as usize], q as u32).unwrap();
        let g2 = custom(q, t);
        let k2 = measure_exhaustive(&g2, &Sequential).measured_k as u128;
        let secrets: Vec<_> = m.elements().collect();
        for g1 in [GadgetSpec::butterfly(m), zero] {
            let p = PipelineSpec::two_stage(g1, g2.clone(), true).unwrap();
            let r = Analyzer::new(&p, &Sequential).report(&secrets).unwrap();
            prop_assert!(r.wires[0].uniform);
            prop_assert!(r.output.max_count <= k2 * (q as u128).pow(2));
        }
    }
}
