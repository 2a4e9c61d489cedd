//! The cooperative chain: RSUs pass downstream which items each vehicle has
//! already received, and downstream RSUs plan for what is left.

use crate::delay::{evaluate_rsu, proactive_caps, Cohort, CohortMember, PlacementTable};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::mobility::{update_demand, update_presence, DeliveredSet};
use crate::model::{CachePolicy, DelayReport, ItemSet, Library, RsuConfig, Scenario};

use super::greedy::greedy_fill;
use super::{check_policy_count, check_policy_len, cohort_objective, SolveResult};

/// Largest library for the joint two-RSU search, whose space is `2^(2M)`.
pub const JOINT_ENUMERATION_LIMIT: usize = 12;

/// Items a vehicle downloads while crossing `rsu`.
///
/// The vehicle takes items in descending order of its demand (lower index
/// first on ties): up to its cached cap from the cache, then up to its
/// backhaul cap from the rest of the library.
pub fn simulate_delivery(
    rsu: &RsuConfig,
    library: &Library,
    policy: &CachePolicy,
    demand: &[f64],
    contact_time: f64,
) -> DeliveredSet {
    let caps = proactive_caps(rsu, library, policy, contact_time);
    let mut order: Vec<usize> = (0..demand.len()).collect();
    order.sort_by(|&a, &b| demand[b].total_cmp(&demand[a]).then(a.cmp(&b)));
    let from_cache = order
        .iter()
        .copied()
        .filter(|&m| policy.is_cached(m))
        .take(caps.cached_cap);
    let from_backhaul = order
        .iter()
        .copied()
        .filter(|&m| !policy.is_cached(m))
        .take(caps.backhaul_cap);
    from_cache.chain(from_backhaul).collect()
}

/// What RSU `downstream` knows about the vehicles once RSU `downstream - 1`
/// (seen through `upstream`) has served them under `upstream_policy`.
///
/// A vehicle that was on the upstream road is known to arrive (presence 1)
/// with the items it received there removed from its demand; any other
/// vehicle is known not to arrive.
pub fn downstream_cohort(
    scenario: &Scenario,
    downstream: usize,
    upstream: &Cohort,
    upstream_policy: &CachePolicy,
) -> Result<Cohort> {
    if downstream == 0 {
        return Err(Error::Parameter("the first RSU has no upstream neighbour".into()));
    }
    let upstream_rsu = scenario.rsu(downstream - 1)?;
    let original = Cohort::at_rsu(scenario, downstream)?;
    let members = scenario
        .vehicles
        .iter()
        .zip(&upstream.members)
        .zip(original.members)
        .map(|((vehicle, before), here)| {
            let presence = update_presence(vehicle, downstream - 1);
            let demand = if presence > 0.0 {
                let delivered = simulate_delivery(
                    upstream_rsu,
                    &scenario.library,
                    upstream_policy,
                    &before.demand,
                    before.contact_time,
                );
                update_demand(&before.demand, &delivered).demand
            } else {
                before.demand.clone()
            };
            CohortMember {
                presence,
                demand,
                contact_time: here.contact_time,
            }
        })
        .collect();
    Ok(Cohort { members })
}

/// Cohorts of every RSU in the chain: the head sees the original vehicle
/// information, every later RSU the information passed down to it.
pub fn chain_cohorts(scenario: &Scenario, policies: &[CachePolicy]) -> Result<Vec<Cohort>> {
    check_policy_count(scenario, policies)?;
    let mut cohorts = Vec::with_capacity(scenario.rsus.len());
    cohorts.push(Cohort::at_rsu(scenario, 0)?);
    for s in 1..scenario.rsus.len() {
        let next = downstream_cohort(scenario, s, &cohorts[s - 1], &policies[s - 1])?;
        cohorts.push(next);
    }
    Ok(cohorts)
}

/// Delays of every RSU along the chain for fixed placements.
#[derive(Debug, Clone)]
pub struct ChainReport {
    pub reports: Vec<DelayReport>,
    pub cached_counts: Vec<usize>,
}

impl ChainReport {
    pub fn proactive_per_file(&self) -> Vec<f64> {
        self.reports.iter().map(DelayReport::proactive_per_file).collect()
    }

    /// Proactive per-file delay averaged over RSUs.
    pub fn mean_per_file(&self) -> f64 {
        match self.reports.len() {
            0 => 0.0,
            n => self.proactive_per_file().iter().sum::<f64>() / n as f64,
        }
    }

    /// Sum of per-file delays plus `cost_factor` per cached item.
    pub fn objective(&self, cost_factor: f64) -> f64 {
        self.proactive_per_file().iter().sum::<f64>() + cost_factor * self.cached_counts.iter().sum::<usize>() as f64
    }
}

pub fn evaluate_chain(scenario: &Scenario, policies: &[CachePolicy]) -> Result<ChainReport> {
    let cohorts = chain_cohorts(scenario, policies)?;
    let reports = scenario
        .rsus
        .iter()
        .zip(policies)
        .zip(&cohorts)
        .map(|((rsu, policy), cohort)| evaluate_rsu(rsu, &scenario.library, policy, cohort))
        .collect();
    Ok(ChainReport {
        reports,
        cached_counts: policies.iter().map(CachePolicy::cached_count).collect(),
    })
}

/// Chain objective over all RSUs.
pub fn chain_objective(scenario: &Scenario, policies: &[CachePolicy]) -> Result<f64> {
    Ok(evaluate_chain(scenario, policies)?.objective(scenario.cost_factor))
}

/// Two-RSU cooperative objective for RSU `downstream` and its upstream
/// neighbour. The upstream RSU is treated as the head of the chain.
pub fn objective_coop(
    scenario: &Scenario,
    downstream: usize,
    upstream_policy: &CachePolicy,
    downstream_policy: &CachePolicy,
) -> Result<f64> {
    if downstream == 0 {
        return Err(Error::Parameter("the first RSU has no upstream neighbour".into()));
    }
    check_policy_len(scenario, upstream_policy)?;
    check_policy_len(scenario, downstream_policy)?;
    let upstream = Cohort::at_rsu(scenario, downstream - 1)?;
    let below = downstream_cohort(scenario, downstream, &upstream, upstream_policy)?;
    Ok(cohort_objective(scenario, downstream - 1, upstream_policy, &upstream)?
        + cohort_objective(scenario, downstream, downstream_policy, &below)?)
}

/// Greedy placement along the whole chain: the head fills from original
/// information, each later RSU from what its upstream neighbour passes on.
pub fn greedy_coop(scenario: &Scenario) -> Result<SolveResult> {
    if scenario.rsus.len() < 2 {
        return Err(Error::Parameter("cooperative placement needs at least two RSUs".into()));
    }
    let library = &scenario.library;
    let mut cohort = Cohort::at_rsu(scenario, 0)?;
    let mut policies = Vec::with_capacity(scenario.rsus.len());
    for (s, rsu) in scenario.rsus.iter().enumerate() {
        if s > 0 {
            cohort = downstream_cohort(scenario, s, &cohort, &policies[s - 1])?;
        }
        policies.push(greedy_fill(rsu, library, &cohort));
    }
    let objective_value = chain_objective(scenario, &policies)?;
    Ok(SolveResult {
        policies,
        objective_value,
        evaluations: 1,
    })
}

type JointBest = Option<(f64, ItemSet, ItemSet)>;

/// Best joint placement of a two-RSU chain for every pair of cached-item
/// counts, keyed `[upstream count][downstream count]`. Values exclude the
/// caching cost.
#[derive(Debug, Clone)]
pub struct JointFrontier {
    best: Vec<Vec<JointBest>>,
    evaluations: u64,
}

impl JointFrontier {
    pub fn enumerate(scenario: &Scenario, max_upstream: usize, max_downstream: usize, exec: Exec) -> Result<Self> {
        if scenario.rsus.len() != 2 {
            return Err(Error::Parameter(format!(
                "joint search needs exactly two RSUs, got {}",
                scenario.rsus.len()
            )));
        }
        let library = &scenario.library;
        let items = library.item_count;
        if items > JOINT_ENUMERATION_LIMIT {
            return Err(Error::EnumerationLimit {
                what: "joint cooperative search",
                items,
                limit: JOINT_ENUMERATION_LIMIT,
            });
        }
        let max_up = max_upstream.min(items);
        let max_down = max_downstream.min(items);
        let head = Cohort::at_rsu(scenario, 0)?;
        let head_table = PlacementTable::new(&scenario.rsus[0], library, &head);

        let partials = exec.map_indices(1usize << items, |mask| -> Result<_> {
            let up = ItemSet(mask as u64);
            let n_up = up.len();
            if n_up > max_up {
                return Ok(None);
            }
            let up_value = head_table.per_file(up);
            let up_policy = CachePolicy::from_set(items, up);
            let below = downstream_cohort(scenario, 1, &head, &up_policy)?;
            let table = PlacementTable::new(&scenario.rsus[1], library, &below);
            let mut best: Vec<Option<(f64, ItemSet)>> = vec![None; max_down + 1];
            let mut evaluations = 0u64;
            for down_mask in 0u64..1 << items {
                let down = ItemSet(down_mask);
                let n = down.len();
                if n > max_down {
                    continue;
                }
                evaluations += 1;
                let value = up_value + table.per_file(down);
                if best[n].is_none_or(|(b, _)| value < b) {
                    best[n] = Some((value, down));
                }
            }
            Ok(Some((up, best, evaluations)))
        });

        let mut best: Vec<Vec<JointBest>> = vec![vec![None; max_down + 1]; max_up + 1];
        let mut evaluations = 0;
        for part in partials {
            let Some((up, row, count)) = part? else {
                continue;
            };
            evaluations += count;
            for (slot, candidate) in best[up.len()].iter_mut().zip(row) {
                if let Some((value, down)) = candidate {
                    if slot.is_none_or(|(b, _, _)| value < b) {
                        *slot = Some((value, up, down));
                    }
                }
            }
        }
        Ok(Self { best, evaluations })
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    /// Joint minimiser under per-RSU item capacities, with its objective.
    pub fn select(&self, capacity_up: usize, capacity_down: usize, cost_factor: f64) -> (ItemSet, ItemSet, f64) {
        let mut chosen = (ItemSet::EMPTY, ItemSet::EMPTY, f64::INFINITY);
        for (n_up, row) in self.best.iter().enumerate().take(capacity_up + 1) {
            for (n_down, cell) in row.iter().enumerate().take(capacity_down + 1) {
                let Some((value, up, down)) = *cell else {
                    continue;
                };
                let objective = value + cost_factor * (n_up + n_down) as f64;
                let earlier = (up, down) < (chosen.0, chosen.1);
                if objective < chosen.2 || (objective == chosen.2 && earlier) {
                    chosen = (up, down, objective);
                }
            }
        }
        chosen
    }
}

/// Optimal joint placement of a two-RSU chain.
pub fn solve_exhaustive_coop(scenario: &Scenario) -> Result<SolveResult> {
    solve_exhaustive_coop_with(scenario, Exec::default())
}

pub fn solve_exhaustive_coop_with(scenario: &Scenario, exec: Exec) -> Result<SolveResult> {
    let library = &scenario.library;
    let cap_up = scenario.rsu(0)?.capacity_items(library);
    let cap_down = scenario.rsu(1)?.capacity_items(library);
    let frontier = JointFrontier::enumerate(scenario, cap_up, cap_down, exec)?;
    let (up, down, _) = frontier.select(cap_up, cap_down, scenario.cost_factor);
    let policies = vec![
        CachePolicy::from_set(library.item_count, up),
        CachePolicy::from_set(library.item_count, down),
    ];
    let objective_value = objective_coop(scenario, 1, &policies[0], &policies[1])?;
    Ok(SolveResult {
        policies,
        objective_value,
        evaluations: frontier.evaluations(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::VehicleProfile;
    use approx::assert_abs_diff_eq;

    /// Two RSUs, one vehicle with 2 s of contact at each (item air time 1 s,
    /// backhaul latency 1 s), so it receives exactly one cached item per RSU.
    fn two_item_chain(capacity_items: usize) -> Scenario {
        Scenario {
            library: Library::new(2, 1.0).unwrap(),
            rsus: (0..2)
                .map(|id| RsuConfig {
                    id,
                    coverage_length: 50.0,
                    cache_capacity: capacity_items as f64,
                    service_rate: 1.0,
                    backhaul_latency: 1.0,
                })
                .collect(),
            vehicles: vec![VehicleProfile {
                id: 0,
                velocity: 25.0,
                presence: vec![1.0, 1.0],
                demand: vec![0.9, 0.1],
            }],
            cost_factor: 0.0,
            rng_seed: 0,
            generator: None,
        }
    }

    #[test]
    fn delivery_prefers_most_wanted_cached_items() {
        let library = Library::new(6, 1.0).unwrap();
        let rsu = RsuConfig {
            id: 0,
            coverage_length: 1.0,
            cache_capacity: 6.0,
            service_rate: 1.0,
            backhaul_latency: 1.0,
        };
        let demand = [0.1, 0.2, 0.05, 0.05, 0.1, 0.5];
        let policy = CachePolicy::with_items(6, &[1, 5]);
        // One second of contact: one cached item, nothing from the backhaul.
        let got = simulate_delivery(&rsu, &library, &policy, &demand, 1.0);
        assert_eq!(got.iter().collect::<Vec<_>>(), [5]);

        let got = simulate_delivery(&rsu, &library, &policy, &demand, 0.5);
        assert!(got.is_empty());

        let got = simulate_delivery(&rsu, &library, &policy, &demand, 100.0);
        assert_eq!(got.len(), 6);
    }

    #[test]
    fn delivery_backfills_from_backhaul() {
        let library = Library::new(4, 1.0).unwrap();
        let rsu = RsuConfig {
            id: 0,
            coverage_length: 1.0,
            cache_capacity: 4.0,
            service_rate: 1.0,
            backhaul_latency: 1.0,
        };
        // 3 s: one cached item (1 s) then one backhaul item (2 s).
        let policy = CachePolicy::with_items(4, &[3]);
        let got = simulate_delivery(&rsu, &library, &policy, &[0.4, 0.3, 0.2, 0.1], 3.0);
        assert_eq!(got.iter().collect::<Vec<_>>(), [0, 3]);
    }

    #[test]
    fn hand_traced_two_rsu_greedy() {
        let s = two_item_chain(1);
        let result = greedy_coop(&s).unwrap();
        assert_eq!(result.policies[0].cached_items().collect::<Vec<_>>(), [0]);
        assert_eq!(result.policies[1].cached_items().collect::<Vec<_>>(), [1]);

        let cohorts = chain_cohorts(&s, &result.policies).unwrap();
        assert_eq!(cohorts[1].members[0].demand, vec![0.0, 1.0]);
        assert_eq!(cohorts[1].members[0].presence, 1.0);
        // Upstream: {0} w.p. 0.81 costs 1 s, {1} w.p. 0.01 costs 2 s.
        // Downstream: item 1 requested surely and cached, 1 s.
        assert_abs_diff_eq!(result.objective_value, 0.83 + 1.0, epsilon = 1e-12);
    }

    #[test]
    fn upstream_delivery_removes_item_from_downstream_delay() {
        let s = two_item_chain(1);
        let cached_first = CachePolicy::with_items(2, &[0]);
        let twice = objective_coop(&s, 1, &cached_first, &cached_first).unwrap();
        // Downstream the vehicle now only wants item 1, which is not cached: 2 s.
        assert_abs_diff_eq!(twice, 0.83 + 2.0, epsilon = 1e-12);
    }

    #[test]
    fn empty_caches_reduce_to_reactive() {
        let s = two_item_chain(1);
        let empty = CachePolicy::empty(2);
        let report = evaluate_chain(&s, &[empty.clone(), empty]).unwrap();
        for r in &report.reports {
            assert_abs_diff_eq!(r.proactive_per_file(), r.reactive_per_file(), epsilon = 1e-12);
        }
    }

    #[test]
    fn no_upstream_delivery_matches_noncooperative_objective() {
        let mut s = two_item_chain(1);
        // Too short a stretch upstream to receive anything.
        s.rsus[0].coverage_length = 10.0;
        for (a, b) in [(vec![0], vec![0]), (vec![1], vec![0]), (vec![], vec![1])] {
            let up = CachePolicy::with_items(2, &a);
            let down = CachePolicy::with_items(2, &b);
            let coop = objective_coop(&s, 1, &up, &down).unwrap();
            let separate = super::super::objective_noncoop(&s, 0, &up).unwrap()
                + super::super::objective_noncoop(&s, 1, &down).unwrap();
            assert_abs_diff_eq!(coop, separate, epsilon = 1e-15);
        }
    }

    #[test]
    fn vehicles_off_the_upstream_road_are_dropped_downstream() {
        let mut s = two_item_chain(1);
        s.vehicles[0].presence = vec![0.0, 1.0];
        let policies = vec![CachePolicy::empty(2), CachePolicy::empty(2)];
        let cohorts = chain_cohorts(&s, &policies).unwrap();
        assert_eq!(cohorts[1].members[0].presence, 0.0);
        assert_eq!(cohorts[1].members[0].demand, vec![0.9, 0.1]);
    }

    #[test]
    fn fully_served_vehicle_scores_nothing_downstream() {
        let mut s = two_item_chain(2);
        // 5 s of contact: both cached items come through upstream.
        s.vehicles[0].velocity = 10.0;
        let both = CachePolicy::full(2);
        let head = Cohort::at_rsu(&s, 0).unwrap();
        let below = downstream_cohort(&s, 1, &head, &both).unwrap();
        let scores = crate::solver::item_scores(&below, 2);
        assert!(scores.iter().all(|x| x.score == 0.0));
    }

    #[test]
    fn joint_search_examples() {
        let s = two_item_chain(0);
        let result = solve_exhaustive_coop(&s).unwrap();
        assert!(result.policies.iter().all(|p| p.cached_count() == 0));

        let s = two_item_chain(1);
        let result = solve_exhaustive_coop(&s).unwrap();
        let greedy = greedy_coop(&s).unwrap();
        assert!(result.objective_value <= greedy.objective_value + 1e-12);
        assert_eq!(result.evaluations, 3 * 3);
    }

    #[test]
    fn joint_search_needs_two_rsus() {
        let mut s = two_item_chain(1);
        s.rsus.pop();
        s.vehicles[0].presence.pop();
        assert!(solve_exhaustive_coop(&s).is_err());
        assert!(greedy_coop(&s).is_err());
    }
}
