use crate::delay::{Cohort, PlacementTable, ENUMERATION_LIMIT};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::model::{CachePolicy, ItemSet, Scenario};

use super::{objective_noncoop, SolveResult};

/// Masks per enumeration chunk. Fixed so the reduction order, and hence
/// tie-breaking, does not depend on the thread count.
const CHUNK_BITS: u32 = 12;

/// Best placement and its per-file delay for every cached-item count.
///
/// Within one count the caching cost is constant, so one enumeration pass
/// answers every (capacity, cost factor) query.
#[derive(Debug, Clone)]
pub struct CountFrontier {
    best: Vec<Option<(f64, ItemSet)>>,
    evaluations: u64,
}

impl CountFrontier {
    /// Scores every placement of at most `max_count` items.
    pub fn enumerate(table: &PlacementTable, max_count: usize, exec: Exec) -> Result<Self> {
        let items = table.item_count();
        if items > ENUMERATION_LIMIT {
            return Err(Error::EnumerationLimit {
                what: "exhaustive placement search",
                items,
                limit: ENUMERATION_LIMIT,
            });
        }
        let max_count = max_count.min(items);
        let total = 1u64 << items;
        let chunk = 1u64 << CHUNK_BITS.min(items as u32);
        let chunks = (total / chunk) as usize;

        let partials = exec.map_indices(chunks, |c| {
            let mut best: Vec<Option<(f64, ItemSet)>> = vec![None; max_count + 1];
            let mut evaluations = 0u64;
            let start = c as u64 * chunk;
            for mask in start..start + chunk {
                let set = ItemSet(mask);
                let n = set.len();
                if n > max_count {
                    continue;
                }
                evaluations += 1;
                let value = table.per_file(set);
                if best[n].is_none_or(|(b, _)| value < b) {
                    best[n] = Some((value, set));
                }
            }
            (best, evaluations)
        });

        let mut best: Vec<Option<(f64, ItemSet)>> = vec![None; max_count + 1];
        let mut evaluations = 0;
        for (part, count) in partials {
            evaluations += count;
            for (slot, candidate) in best.iter_mut().zip(part) {
                if let Some((value, set)) = candidate {
                    if slot.is_none_or(|(b, _)| value < b) {
                        *slot = Some((value, set));
                    }
                }
            }
        }
        Ok(Self { best, evaluations })
    }

    pub fn max_count(&self) -> usize {
        self.best.len() - 1
    }

    pub fn best(&self, count: usize) -> Option<(f64, ItemSet)> {
        self.best.get(count).copied().flatten()
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    /// Objective of the best placement holding exactly `count` items.
    pub fn objective_at(&self, count: usize, cost_factor: f64) -> Option<f64> {
        self.best(count)
            .map(|(per_file, _)| per_file + cost_factor * count as f64)
    }

    /// Minimiser of per-file delay plus `cost_factor` per item over
    /// placements of at most `capacity` items, with its objective value.
    pub fn select(&self, capacity: usize, cost_factor: f64) -> (ItemSet, f64) {
        let mut chosen = (ItemSet::EMPTY, f64::INFINITY);
        for n in 0..=capacity.min(self.max_count()) {
            if let Some((per_file, set)) = self.best(n) {
                let objective = per_file + cost_factor * n as f64;
                if objective < chosen.1 || (objective == chosen.1 && set < chosen.0) {
                    chosen = (set, objective);
                }
            }
        }
        chosen
    }
}

/// Optimal non-cooperative placement of one RSU by enumerating all
/// placements that fit its storage.
pub fn solve_exhaustive_noncoop(scenario: &Scenario, rsu_index: usize) -> Result<SolveResult> {
    solve_exhaustive_noncoop_with(scenario, rsu_index, Exec::default())
}

pub fn solve_exhaustive_noncoop_with(scenario: &Scenario, rsu_index: usize, exec: Exec) -> Result<SolveResult> {
    let rsu = scenario.rsu(rsu_index)?;
    let library = &scenario.library;
    let cohort = Cohort::at_rsu(scenario, rsu_index)?;
    let table = PlacementTable::new(rsu, library, &cohort);
    let capacity = rsu.capacity_items(library);
    let frontier = CountFrontier::enumerate(&table, capacity, exec)?;
    let (set, _) = frontier.select(capacity, scenario.cost_factor);
    let policy = CachePolicy::from_set(library.item_count, set);
    let objective_value = objective_noncoop(scenario, rsu_index, &policy)?;
    Ok(SolveResult {
        policies: vec![policy],
        objective_value,
        evaluations: frontier.evaluations(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Library, RsuConfig, VehicleProfile};

    fn scenario(capacity_items: usize, cost_factor: f64, velocity: f64) -> Scenario {
        let demands = [
            vec![0.3, 0.2, 0.15, 0.15, 0.1, 0.1],
            vec![0.05, 0.1, 0.05, 0.3, 0.2, 0.3],
        ];
        Scenario {
            library: Library::new(6, 1.0).unwrap(),
            rsus: vec![RsuConfig {
                id: 0,
                coverage_length: 50.0,
                cache_capacity: capacity_items as f64,
                service_rate: 1.0,
                backhaul_latency: 1.0,
            }],
            vehicles: demands
                .into_iter()
                .enumerate()
                .map(|(id, demand)| VehicleProfile {
                    id,
                    velocity,
                    presence: vec![1.0],
                    demand,
                })
                .collect(),
            cost_factor,
            rng_seed: 0,
            generator: None,
        }
    }

    /// Direct sweep of the objective over every feasible placement.
    fn brute_optimum(s: &Scenario) -> (f64, u64) {
        let cap = s.rsus[0].capacity_items(&s.library);
        let mut best = (f64::INFINITY, 0);
        for mask in 0u64..1 << 6 {
            if ItemSet(mask).len() > cap {
                continue;
            }
            let policy = CachePolicy::from_set(6, ItemSet(mask));
            let value = objective_noncoop(s, 0, &policy).unwrap();
            if value < best.0 - 1e-12 {
                best = (value, mask);
            }
        }
        best
    }

    #[test]
    fn zero_cost_ample_contact_caches_everything() {
        let s = scenario(6, 0.0, 0.5);
        let result = solve_exhaustive_noncoop(&s, 0).unwrap();
        assert_eq!(result.policies[0].cached_count(), 6);
        let (best, _) = brute_optimum(&s);
        approx::assert_abs_diff_eq!(result.objective_value, best, epsilon = 1e-12);
    }

    #[test]
    fn zero_capacity_yields_empty_policy() {
        let s = scenario(0, 0.0, 10.0);
        let result = solve_exhaustive_noncoop(&s, 0).unwrap();
        assert_eq!(result.policies[0], CachePolicy::empty(6));
        assert_eq!(result.evaluations, 1);
    }

    #[test]
    fn large_cost_factor_prefers_empty_cache() {
        let s = scenario(6, 10.0, 10.0);
        let result = solve_exhaustive_noncoop(&s, 0).unwrap();
        assert_eq!(result.policies[0].cached_count(), 0);
    }

    #[test]
    fn matches_brute_force_objective_sweep() {
        for (cap, gamma, velocity) in [(2, 0.0, 10.0), (4, 0.01, 15.0), (6, 0.05, 8.0), (3, 0.001, 20.0)] {
            let s = scenario(cap, gamma, velocity);
            let result = solve_exhaustive_noncoop(&s, 0).unwrap();
            let (best, _) = brute_optimum(&s);
            approx::assert_abs_diff_eq!(result.objective_value, best, epsilon = 1e-12);
            assert!(result.policies[0].cached_count() <= cap);
        }
    }

    #[test]
    fn execution_strategy_does_not_change_result() {
        let s = scenario(4, 0.01, 12.0);
        let seq = solve_exhaustive_noncoop_with(&s, 0, Exec::Sequential).unwrap();
        let par = solve_exhaustive_noncoop_with(&s, 0, Exec::Parallel).unwrap();
        assert_eq!(seq, par);
    }
}
