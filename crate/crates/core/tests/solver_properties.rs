mod common;

use procache::delay::Cohort;
use procache::experiment::load_scenario;
use procache::model::validate_policy;
use procache::numeric::floor_count;
use procache::solver::{
    evaluate_chain, greedy_coop, greedy_limit, greedy_noncoop, objective_noncoop, solve_exhaustive_coop,
    solve_exhaustive_noncoop,
};
use procache::{CachePolicy, Scenario};
use proptest::prelude::*;

fn sized(rsus: usize, max_items: usize) -> impl Strategy<Value = Scenario> {
    common::scenario(max_items, 4, rsus).prop_flat_map(|s| {
        let items = s.library.item_count;
        (Just(s), 0..=items).prop_map(|(s, z)| s.with_cache_items(z))
    })
}

fn assert_feasible(s: &Scenario, policies: &[CachePolicy]) {
    for (rsu, policy) in s.rsus.iter().zip(policies) {
        let violations = validate_policy(&s.library, rsu, policy);
        assert!(violations.is_empty(), "{violations:?}");
    }
}

proptest! {
    #![proptest_config(common::cases(96))]

    #[test]
    fn noncooperative_solvers_are_feasible_and_ordered(s in sized(1, 10)) {
        let greedy = greedy_noncoop(&s, 0).unwrap();
        let best = solve_exhaustive_noncoop(&s, 0).unwrap();
        assert_feasible(&s, &greedy.policies);
        assert_feasible(&s, &best.policies);

        let cohort = Cohort::at_rsu(&s, 0).unwrap();
        let receivable = floor_count(s.rsus[0].service_rate * cohort.mean_contact_time() / s.library.item_size);
        prop_assert!(greedy.policies[0].cached_count() <= receivable);
        prop_assert_eq!(greedy.policies[0].cached_count(), greedy_limit(&s.rsus[0], &s.library, &cohort));

        prop_assert!(best.objective_value <= greedy.objective_value + 1e-12);
        let direct = objective_noncoop(&s, 0, &best.policies[0]).unwrap();
        prop_assert!((direct - best.objective_value).abs() <= 1e-12);
    }

    #[test]
    fn solvers_are_deterministic(s in sized(2, 8)) {
        prop_assert_eq!(greedy_noncoop(&s, 1).unwrap(), greedy_noncoop(&s, 1).unwrap());
        prop_assert_eq!(solve_exhaustive_noncoop(&s, 1).unwrap(), solve_exhaustive_noncoop(&s, 1).unwrap());
        prop_assert_eq!(greedy_coop(&s).unwrap(), greedy_coop(&s).unwrap());
        prop_assert_eq!(solve_exhaustive_coop(&s).unwrap(), solve_exhaustive_coop(&s).unwrap());
    }
}

proptest! {
    #![proptest_config(common::cases(40))]

    #[test]
    fn cooperative_optimum_dominates(s in sized(2, 10)) {
        let greedy = greedy_coop(&s).unwrap();
        let best = solve_exhaustive_coop(&s).unwrap();
        assert_feasible(&s, &greedy.policies);
        assert_feasible(&s, &best.policies);
        prop_assert!(best.objective_value <= greedy.objective_value + 1e-12);

        // Independent optima, scored with the information the chain passes on.
        let independent: Vec<CachePolicy> = (0..2)
            .map(|r| solve_exhaustive_noncoop(&s, r).unwrap().policies.remove(0))
            .collect();
        let as_chain = evaluate_chain(&s, &independent).unwrap().objective(s.cost_factor);
        prop_assert!(best.objective_value <= as_chain + 1e-12);
    }
}

#[test]
fn cooperative_greedy_wins_on_aggregate() {
    let base = load_scenario(common::bundled("two_rsu_highway.json")).unwrap();
    let (mut coop, mut noncoop, mut losses) = (0.0, 0.0, 0);
    let instances = 64;
    for seed in 0..instances {
        let mut s = base.clone();
        s.library.item_count = 8;
        let s = s.reseeded(seed).unwrap().with_cache_items(1 + seed as usize % 8);
        let c = evaluate_chain(&s, &greedy_coop(&s).unwrap().policies)
            .unwrap()
            .mean_per_file();
        let pair: Vec<CachePolicy> = (0..2)
            .map(|r| greedy_noncoop(&s, r).unwrap().policies.remove(0))
            .collect();
        let n = evaluate_chain(&s, &pair).unwrap().mean_per_file();
        coop += c / instances as f64;
        noncoop += n / instances as f64;
        losses += usize::from(c > n + 1e-12);
    }
    println!("mean per-file: cooperative {coop:.6}, non-cooperative {noncoop:.6}; {losses} instances lost");
    assert!(coop <= noncoop);
}
