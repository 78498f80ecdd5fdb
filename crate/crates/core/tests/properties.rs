use hypcert::certifier::{derive_verdict, CheckRecord, CheckStatus, Verdict};
use hypcert::cocycle::{
    check_hyperbolic_time, hyperbolic_times, nue_certificate, pliss_density, CocycleSequence, SequenceKind,
};
use hypcert::maps::{wrap, MapModel, StatePoint};
use hypcert::periodic::{find_periodic_points, lyndon_words};
use hypcert::shadowing::{build_conjugacy, conjugacy_defect, pseudo_closing_segment, shadow_periodic};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn seq(values: Vec<f64>) -> CocycleSequence<f64> {
    CocycleSequence::new(values, SequenceKind::InverseNorm, "proptest").unwrap()
}

fn mobius(n: usize) -> i64 {
    let (mut m, mut r, mut p) = (n, 1, 2);
    while p * p <= m {
        if m % p == 0 {
            m /= p;
            if m % p == 0 {
                return 0;
            }
            r = -r;
        }
        p += 1;
    }
    if m > 1 {
        r = -r;
    }
    r
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hyperbolic_times_match_backward_sums(values in prop::collection::vec(-2.0f64..1.0, 1..80), s in 0.05f64..0.99) {
        let fast = hyperbolic_times(&seq(values.clone()), s).unwrap();
        let brute: Vec<usize> = (1..=values.len()).filter(|&k| check_hyperbolic_time(&values, k, s).is_ok()).collect();
        prop_assert_eq!(fast, brute);
    }

    #[test]
    fn pliss_count_is_a_lower_bound(raw in prop::collection::vec(-3.0f64..1.0, 2..200), s in 0.1f64..0.8, t in 0.05f64..0.95) {
        // shift so that the mean equals log s exactly
        let mean = raw.iter().sum::<f64>() / raw.len() as f64;
        let values: Vec<f64> = raw.iter().map(|a| a - mean + s.ln()).collect();
        let sp = s + t * (1.0 - s);
        let d = pliss_density(&seq(values), s, sp).unwrap();
        prop_assert!(d.actual_count >= d.guaranteed_count, "{:?}", d);
        prop_assert!(d.guaranteed_count >= 1);
    }

    #[test]
    fn sequence_csv_round_trip(values in prop::collection::vec(-5.0f64..5.0, 1..50)) {
        let s = seq(values);
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let back = CocycleSequence::<f64>::read_csv(buf.as_slice()).unwrap();
        prop_assert_eq!(back.kind, s.kind);
        prop_assert_eq!(back.values.len(), s.values.len());
        for (a, b) in back.values.iter().zip(&s.values) {
            prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }

    #[test]
    fn wrap_lands_in_unit_interval(x in -1e6f64..1e6) {
        let w = wrap(x);
        prop_assert!((0.0..1.0).contains(&w));
        prop_assert!(((x - w) - (x - w).round()).abs() < 1e-6);
    }

    #[test]
    fn verdict_is_a_pure_function_of_statuses(
        circle in any::<bool>(),
        codes in prop::collection::vec(0u8..4, 6),
        rotate in 0usize..6,
    ) {
        let ids: [&'static str; 6] = if circle {
            ["local_diffeo", "nue", "pliss", "shadowing", "holder", "adapted_metric"]
        } else {
            ["nuh", "domination", "continuity", "shadowing", "cone_field", "hyperbolic_set"]
        };
        let status = |c: u8| [CheckStatus::Pass, CheckStatus::Fail, CheckStatus::Error, CheckStatus::Skipped][c as usize];
        let mut checks: Vec<CheckRecord> = ids
            .iter()
            .zip(&codes)
            .map(|(id, c)| {
                let mut r = CheckRecord::new(id).finish(true, "");
                r.status = status(*c);
                r
            })
            .collect();
        let v = derive_verdict(&checks);
        checks.rotate_left(rotate);
        prop_assert_eq!(&derive_verdict(&checks), &v);
        let pass = |id: &str| checks.iter().any(|c| c.id == id && c.status == CheckStatus::Pass);
        match v.verdict {
            Verdict::Expanding => prop_assert!(pass("local_diffeo") && pass("nue") && pass("shadowing") && pass("adapted_metric")),
            Verdict::HyperbolicSet => prop_assert!(
                pass("nuh") && (pass("domination") || pass("continuity")) && pass("shadowing") && pass("hyperbolic_set")
            ),
            Verdict::NotExpandingHypothesisViolated => prop_assert!(circle && pass("nue") && !pass("local_diffeo")),
            Verdict::Inconclusive => prop_assert!(!(v.hypotheses_verified && v.conclusion_verified)),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn nue_margin_does_not_improve_with_more_orbits(s in 0.0f64..1.5) {
        let g = MapModel::perturbed_doubling(s).unwrap();
        let small = nue_certificate(&find_periodic_points(&g, 4).unwrap().orbits).unwrap();
        let large = nue_certificate(&find_periodic_points(&g, 7).unwrap().orbits).unwrap();
        prop_assert!(large.varsigma >= small.varsigma - 1e-12);
        for m in &large.margins {
            prop_assert!(m.margin <= large.varsigma + 1e-12);
        }
    }

    #[test]
    fn periodic_counts_of_perturbed_doubling(s in 0.0f64..1.9) {
        // degree-2 expanding-on-average maps keep 2^n - 1 points of period dividing n
        let g = MapModel::perturbed_doubling(s).unwrap();
        let set = find_periodic_points(&g, 7).unwrap();
        for n in 1..=7 {
            prop_assert_eq!(set.fixed_point_count(n), (1usize << n) - 1);
        }
    }

    #[test]
    fn conjugacy_is_monotone_and_invertible(s in 0.0f64..1.2, x in 0.0f64..1.0) {
        let g = MapModel::perturbed_doubling(s).unwrap();
        let f = MapModel::doubling();
        let h = build_conjugacy(&g, &f, 1 << 10).unwrap();
        prop_assert!(h.is_strictly_monotone());
        let u = h.eval(x);
        let back = h.inverse(u).unwrap();
        let d = (back - x).abs();
        prop_assert!(d.min(1.0 - d) < 1e-9, "x = {x}, back = {back}");
        prop_assert!(conjugacy_defect(&h, &g, &f, 512) < 1e-8);
    }

    #[test]
    fn circle_shadowing_is_proportional_to_gap(s in 0.0f64..1.0, seed in any::<u64>(), alpha in 1e-6f64..1e-3) {
        // |g'| >= mu = 2 - s: errors grow along the segment and |e_n| <= alpha + |e_n| / mu^n
        let g = MapModel::perturbed_doubling(s).unwrap();
        let set = find_periodic_points(&g, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let orbit = &set.orbits[(seed as usize) % set.orbits.len()];
        let seg = pseudo_closing_segment(&g, orbit, alpha, &mut rng).unwrap();
        let r = shadow_periodic(&g, &seg, 0.1).unwrap();
        let mu = 2.0 - s;
        let bound = r.closing_gap * mu / (mu - 1.0);
        prop_assert!(r.epsilon <= bound * (1.0 + 1e-9) + 1e-12, "eps {} gap {}", r.epsilon, r.closing_gap);
    }

    #[test]
    fn cat_points_are_periodic(idx in 0usize..1000) {
        let a = MapModel::cat_map();
        let set = find_periodic_points(&a, 4).unwrap();
        let orbits = &set.orbits;
        let o = &orbits[idx % orbits.len()];
        let mut p: StatePoint<f64> = o.points[0];
        for _ in 0..o.period {
            p = a.eval(&p);
        }
        prop_assert!(p.dist(&o.points[0]) < 1e-10);
    }
}

#[test]
fn lyndon_words_count_aperiodic_necklaces() {
    for k in 2..=3 {
        for n in 1..=10 {
            let expected: i64 = (1..=n).filter(|d| n % d == 0).map(|d| mobius(n / d) * (k as i64).pow(d as u32)).sum::<i64>() / n as i64;
            assert_eq!(lyndon_words(n, k).len() as i64, expected, "n = {n}, k = {k}");
        }
    }
}
