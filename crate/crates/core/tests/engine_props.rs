use cga_core::invariants::InvariantChecker;
use cga_core::params::{is_well_behaved, round_up_mu};
use cga_core::{
    cga_step, frequency_set, make_params, minmax_clamp, rng_from_seed, Cga, FitnessSpec, FrequencyVector, MuPolicy,
    StopRule,
};
use num_rational::Ratio;
use proptest::prelude::*;

/// `(1 - 2/n) mu` is an even integer, decided with exact rationals.
fn well_behaved_by_definition(n: usize, mu: u64) -> bool {
    let v = (Ratio::from_integer(1i64) - Ratio::new(2, n as i64)) * Ratio::from_integer(mu as i64);
    v.is_integer() && v.to_integer() % 2 == 0
}

fn valid_params() -> impl Strategy<Value = (usize, u64)> {
    (4usize..=24, 1u64..=6).prop_map(|(n, m)| (n, round_up_mu(n, m * 4).unwrap()))
}

fn fitness_for(n: usize, k: usize, which: u8) -> FitnessSpec {
    match which % 3 {
        0 => FitnessSpec::onemax(n).unwrap(),
        1 => FitnessSpec::jump(n, k.clamp(1, n)).unwrap(),
        _ => cga_core::fitness::plateau(n, k.clamp(1, n), k.clamp(1, n) as i64).unwrap(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn well_behaved_matches_definition(n in 4usize..60, mu in 1u64..400) {
        prop_assert_eq!(is_well_behaved(n, mu), well_behaved_by_definition(n, mu));
    }

    #[test]
    fn round_up_is_smallest_valid(n in 4usize..60, req in 1u64..400) {
        let mu = round_up_mu(n, req).unwrap();
        prop_assert!(mu >= req && well_behaved_by_definition(n, mu));
        prop_assert!((req..mu).all(|m| !well_behaved_by_definition(n, m)));
        prop_assert_eq!(make_params(n, req, MuPolicy::RoundUp).unwrap().mu(), mu);
    }

    #[test]
    fn frequency_set_is_the_lattice((n, mu) in valid_params()) {
        let p = make_params(n, mu, MuPolicy::Reject).unwrap();
        let set = frequency_set(&p);
        prop_assert_eq!(set.len() as u64, mu * (n as u64 - 2) / n as u64 + 1);
        let vals: Vec<Ratio<i128>> = set
            .iter()
            .map(|f| {
                let (a, b) = f.as_ratio();
                Ratio::new(a as i128, b as i128)
            })
            .collect();
        prop_assert_eq!(vals[0], Ratio::new(1, n as i128));
        prop_assert_eq!(*vals.last().unwrap(), Ratio::new(n as i128 - 1, n as i128));
        prop_assert!(vals.contains(&Ratio::new(1, 2)));
        prop_assert!(vals.windows(2).all(|w| w[1] - w[0] == Ratio::new(1, mu as i128)));
    }

    #[test]
    fn clamp_is_max_min(lo in -10.0f64..0.0, v in -20.0f64..20.0, hi in 0.0f64..10.0) {
        prop_assert_eq!(minmax_clamp(lo, v, hi), lo.max(v.min(hi)));
    }

    #[test]
    fn steps_preserve_all_invariants(
        (n, mu) in valid_params(),
        k in 1usize..6,
        which in 0u8..3,
        seed in any::<u64>(),
        steps in 1u64..400,
    ) {
        let p = make_params(n, mu, MuPolicy::Reject).unwrap().with_seed(seed);
        let fitness = fitness_for(n, k, which);
        let mut checker = InvariantChecker::new();
        let r = Cga::new(&p).run(&fitness, &StopRule::budget_only(steps), &mut checker);
        prop_assert_eq!(checker.violation_count(), 0, "{:?}", checker.violations().first());
        prop_assert_eq!(checker.steps_checked(), steps);
        prop_assert!(r.final_distance >= 1.0 - 1e-12 && r.final_distance <= (n - 1) as f64 + 1e-12);
    }

    #[test]
    fn single_step_moves_only_disagreeing_bits(
        (n, mu) in valid_params(),
        seed in any::<u64>(),
        idx_seed in any::<u64>(),
    ) {
        let p = make_params(n, mu, MuPolicy::Reject).unwrap();
        let top = p.n_mu() as u64;
        let idx: Vec<u32> = (0..n as u64).map(|i| (idx_seed.rotate_left(i as u32 * 7) % (top + 1)) as u32).collect();
        let f = FrequencyVector::from_indices(&p, idx).unwrap();
        let om = FitnessSpec::onemax(n).unwrap();
        let (g, out) = cga_step(&f, &om, &p, &mut rng_from_seed(seed));
        let (w, l) = if out.winner_first { (&out.x1, &out.x2) } else { (&out.x2, &out.x1) };
        prop_assert!(om.value(w) >= om.value(l));
        for i in 0..n {
            let (a, b) = (f.index(i) as i64, g.index(i) as i64);
            let expected = (a + w.get(i) as i64 - l.get(i) as i64).clamp(0, top as i64);
            prop_assert_eq!(b, expected, "bit {}", i);
        }
        let capped = out.capped_low + out.capped_high;
        prop_assert_eq!(
            out.post_clamp_delta_ticks(),
            out.pre_clamp_delta_ticks + out.capped_low as i64 - out.capped_high as i64
        );
        prop_assert!(capped as usize <= n);
    }
}

#[test]
fn long_run_has_no_violations() {
    let p = make_params(100, 100, MuPolicy::Reject).unwrap().with_seed(9);
    let fitness = FitnessSpec::jump(100, 4).unwrap();
    let mut checker = InvariantChecker::new();
    Cga::new(&p).run(&fitness, &StopRule::budget_only(20_000), &mut checker);
    assert_eq!(checker.violation_count(), 0);
}

#[test]
fn spec_examples_for_params() {
    assert_eq!(make_params(10, 5, MuPolicy::Reject).unwrap().mu(), 5);
    assert_eq!(make_params(10, 6, MuPolicy::RoundUp).unwrap().mu(), 10);
    // (1 - 2/4) * 2 = 1 is odd.
    assert!(make_params(4, 2, MuPolicy::Reject).is_err());
}
