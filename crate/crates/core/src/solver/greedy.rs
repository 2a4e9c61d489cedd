use crate::delay::Cohort;
use crate::error::Result;
use crate::model::{CachePolicy, Library, RsuConfig, Scenario};
use crate::numeric::{compensated_sum, floor_count};

use super::{objective_noncoop, SolveResult};

/// Ranking weight of one item at one RSU.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ItemScore {
    pub item: usize,
    pub score: f64,
}

/// Presence- and dwell-weighted demand of every item.
///
/// Each vehicle's weight is its share of the total contact time, so slow
/// vehicles, which can actually download more, count for more.
pub fn item_scores(cohort: &Cohort, item_count: usize) -> Vec<ItemScore> {
    let total_contact = compensated_sum(cohort.members.iter().map(|v| v.contact_time));
    (0..item_count)
        .map(|m| {
            let score = if total_contact > 0.0 {
                compensated_sum(
                    cohort
                        .members
                        .iter()
                        .map(|v| v.presence * v.demand[m] * (v.contact_time / total_contact)),
                )
            } else {
                0.0
            };
            ItemScore { item: m, score }
        })
        .collect()
}

/// Items by descending score; equal scores keep ascending item order.
pub fn ranked_items(scores: &[ItemScore]) -> Vec<usize> {
    let mut order = scores.to_vec();
    order.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.item.cmp(&b.item)));
    order.into_iter().map(|s| s.item).collect()
}

/// Number of items the greedy fill stops at: the cache size in items, or the
/// number of items a vehicle of average contact time can pull from cache,
/// whichever is smaller.
pub fn greedy_limit(rsu: &RsuConfig, library: &Library, cohort: &Cohort) -> usize {
    let receivable = floor_count(rsu.service_rate * cohort.mean_contact_time() / library.item_size);
    rsu.capacity_items(library).min(receivable).min(library.item_count)
}

/// Caches the top-ranked items up to [`greedy_limit`].
pub fn greedy_fill(rsu: &RsuConfig, library: &Library, cohort: &Cohort) -> CachePolicy {
    let limit = greedy_limit(rsu, library, cohort);
    let ranked = ranked_items(&item_scores(cohort, library.item_count));
    CachePolicy::with_items(library.item_count, &ranked[..limit])
}

/// Greedy placement for one RSU using its original vehicle information.
pub fn greedy_noncoop(scenario: &Scenario, rsu_index: usize) -> Result<SolveResult> {
    let rsu = scenario.rsu(rsu_index)?;
    let cohort = Cohort::at_rsu(scenario, rsu_index)?;
    let policy = greedy_fill(rsu, &scenario.library, &cohort);
    let objective_value = objective_noncoop(scenario, rsu_index, &policy)?;
    Ok(SolveResult {
        policies: vec![policy],
        objective_value,
        evaluations: 1,
    })
}
