mod common;

use common::{oracle, per_file, scenario_and_policy};
use procache::delay::{
    combination_probability, evaluate_rsu, proactive_delay_bruteforce, proactive_delay_fast, reactive_delay_bruteforce,
    reactive_delay_fast, Cohort,
};
use procache::{CachePolicy, ItemSet};
use proptest::prelude::*;

proptest! {
    #![proptest_config(common::cases(256))]

    #[test]
    fn fast_path_matches_enumeration((s, policy) in scenario_and_policy(10, 4)) {
        let cohort = Cohort::at_rsu(&s, 0).unwrap();
        let (rsu, lib) = (&s.rsus[0], &s.library);
        let expected = oracle(&s, 0, &policy);
        prop_assert!((reactive_delay_fast(rsu, lib, &cohort) - expected.reactive).abs() <= 1e-9);
        prop_assert!((proactive_delay_fast(rsu, lib, &policy, &cohort) - expected.proactive).abs() <= 1e-9);
        prop_assert!((reactive_delay_bruteforce(rsu, lib, &cohort).unwrap() - expected.reactive).abs() <= 1e-9);
        prop_assert!(
            (proactive_delay_bruteforce(rsu, lib, &policy, &cohort).unwrap() - expected.proactive).abs() <= 1e-9
        );
        let report = evaluate_rsu(rsu, lib, &policy, &cohort);
        prop_assert_eq!(report.reactive_file_cap_sum, expected.reactive_caps);
        prop_assert_eq!(report.proactive_file_cap_sum, expected.proactive_caps);
    }

    #[test]
    fn empty_cache_is_reactive((s, _) in scenario_and_policy(10, 4)) {
        let cohort = Cohort::at_rsu(&s, 0).unwrap();
        let empty = CachePolicy::empty(s.library.item_count);
        let report = evaluate_rsu(&s.rsus[0], &s.library, &empty, &cohort);
        prop_assert_eq!(report.reactive_file_cap_sum, report.proactive_file_cap_sum);
        prop_assert!((report.proactive_per_file() - report.reactive_per_file()).abs() <= 1e-12);
    }

    #[test]
    fn caching_another_item_never_hurts((s, policy) in scenario_and_policy(8, 4), pick in any::<prop::sample::Index>()) {
        let free: Vec<usize> = (0..s.library.item_count).filter(|&m| !policy.is_cached(m)).collect();
        prop_assume!(!free.is_empty());
        let mut grown = policy.placements().to_vec();
        grown[free[pick.index(free.len())]] = true;
        let grown = CachePolicy::from_placements(grown);

        let cohort = Cohort::at_rsu(&s, 0).unwrap();
        let before = evaluate_rsu(&s.rsus[0], &s.library, &policy, &cohort);
        let after = evaluate_rsu(&s.rsus[0], &s.library, &grown, &cohort);
        // Caps never shrink as the cache grows; with them fixed, every
        // combination's transmission time can only fall.
        prop_assert!(after.proactive_file_cap_sum >= before.proactive_file_cap_sum);
        if after.proactive_file_cap_sum == before.proactive_file_cap_sum {
            prop_assert!(after.proactive_delay <= before.proactive_delay + 1e-12);
            prop_assert!(after.proactive_per_file() <= before.proactive_per_file() + 1e-12);
        }
    }

    #[test]
    fn combination_probabilities_sum_to_one(demand in (1usize..=10).prop_flat_map(common::demand)) {
        let total: f64 = (0u64..1 << demand.len())
            .map(|mask| combination_probability(&demand, ItemSet(mask)))
            .sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn delays_are_nonnegative_and_linear_in_presence(
        (s, policy) in scenario_and_policy(8, 4),
        factor in 0.0f64..1.0,
    ) {
        let cohort = Cohort::at_rsu(&s, 0).unwrap();
        let mut scaled = cohort.clone();
        scaled.members.iter_mut().for_each(|m| m.presence *= factor);
        let (rsu, lib) = (&s.rsus[0], &s.library);
        let base = evaluate_rsu(rsu, lib, &policy, &cohort);
        let shrunk = evaluate_rsu(rsu, lib, &policy, &scaled);
        prop_assert!(base.reactive_delay >= 0.0 && base.proactive_delay >= 0.0);
        prop_assert!((shrunk.reactive_delay - factor * base.reactive_delay).abs() <= 1e-12 * (1.0 + base.reactive_delay));
        prop_assert!((shrunk.proactive_delay - factor * base.proactive_delay).abs() <= 1e-12 * (1.0 + base.proactive_delay));
    }
}

#[test]
fn per_file_delay_can_rise_when_caching_extends_a_cap() {
    // Caching item 0 frees enough air time for vehicle 0 to take one item,
    // and that item is the uncached one it wants.
    let mut s = common_small();
    s.rsus[0] = procache::RsuConfig {
        id: 0,
        coverage_length: 15.0,
        cache_capacity: 2.0,
        service_rate: 1.0,
        backhaul_latency: 1.0,
    };
    s.vehicles = vec![
        procache::VehicleProfile {
            id: 0,
            velocity: 10.0,
            presence: vec![1.0],
            demand: vec![0.0, 1.0],
        },
        procache::VehicleProfile {
            id: 1,
            velocity: 6.0,
            presence: vec![1.0],
            demand: vec![0.5, 0.5],
        },
    ];
    let cohort = Cohort::at_rsu(&s, 0).unwrap();
    let empty = evaluate_rsu(&s.rsus[0], &s.library, &CachePolicy::empty(2), &cohort);
    let cached = evaluate_rsu(&s.rsus[0], &s.library, &CachePolicy::with_items(2, &[0]), &cohort);
    let o_empty = oracle(&s, 0, &CachePolicy::empty(2));
    let o_cached = oracle(&s, 0, &CachePolicy::with_items(2, &[0]));
    assert!((empty.proactive_per_file() - per_file(o_empty.proactive, o_empty.proactive_caps)).abs() < 1e-12);
    assert!((cached.proactive_per_file() - per_file(o_cached.proactive, o_cached.proactive_caps)).abs() < 1e-12);
    assert!((empty.proactive_per_file() - 1.0).abs() < 1e-12);
    assert!((cached.proactive_per_file() - 1.375).abs() < 1e-12);
}

#[test]
fn oracle_reproduces_hand_enumeration() {
    // One vehicle wanting each of two items w.p. 1/2, cap of one item at 1 s
    // backhaul time: {a} and {b} each cost 1 s w.p. 1/4.
    let (s, _) = {
        let mut s = common_small();
        s.vehicles[0].demand = vec![0.5, 0.5];
        (s, ())
    };
    let empty = CachePolicy::empty(2);
    let o = oracle(&s, 0, &empty);
    assert!((o.reactive - 0.5).abs() < 1e-15);
    assert_eq!(o.reactive_caps, 1);
    assert!((per_file(o.reactive, o.reactive_caps) - 0.5).abs() < 1e-15);
}

fn common_small() -> procache::Scenario {
    use procache::{Library, RsuConfig, Scenario, VehicleProfile};
    Scenario {
        library: Library::new(2, 1.0).unwrap(),
        rsus: vec![RsuConfig {
            id: 0,
            coverage_length: 15.0,
            cache_capacity: 2.0,
            service_rate: 2.0,
            backhaul_latency: 0.5,
        }],
        vehicles: vec![VehicleProfile {
            id: 0,
            velocity: 10.0,
            presence: vec![1.0],
            demand: vec![0.5, 0.5],
        }],
        cost_factor: 0.0,
        rng_seed: 0,
        generator: None,
    }
}
