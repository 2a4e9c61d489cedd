//! Expected-delay evaluation for one RSU.
//!
//! Every vehicle requests each item independently with its demand
//! probability. Within one contact the RSU serves at most a fixed number of
//! items (the vehicle's file cap); request combinations larger than the cap
//! contribute nothing. A combination of `k` items costs `k` backhaul
//! deliveries minus the backhaul latency saved on each cached member.
//!
//! Three evaluators are provided:
//!
//! * `*_bruteforce` walks all `2^M` request combinations. It is the oracle
//!   and refuses libraries above [`ENUMERATION_LIMIT`].
//! * `*_fast` runs a dynamic program over (items seen, request count) in
//!   `O(M * cap)` per vehicle, or a closed form when the cap is not binding.
//! * [`PlacementTable`] linearises the proactive delay in the placement for
//!   each cached-item count, which the exhaustive solvers use to score a
//!   placement in `O(popcount)`.

use crate::error::{Error, Result};
use crate::mobility::contact_time;
use crate::model::{CachePolicy, DelayReport, ItemSet, Library, RsuConfig, Scenario};
use crate::numeric::{compensated_sum, floor_count, CompensatedSum};

/// Largest library the brute-force oracle will enumerate.
pub const ENUMERATION_LIMIT: usize = 22;

/// One vehicle as seen by one RSU.
#[derive(Debug, Clone, PartialEq)]
pub struct CohortMember {
    pub presence: f64,
    pub demand: Vec<f64>,
    /// Seconds.
    pub contact_time: f64,
}

/// The vehicle population an RSU plans for.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Cohort {
    pub members: Vec<CohortMember>,
}

impl Cohort {
    /// Vehicles with their original presence and demand at RSU `rsu_index`.
    pub fn at_rsu(scenario: &Scenario, rsu_index: usize) -> Result<Cohort> {
        let rsu = scenario.rsu(rsu_index)?;
        let members = scenario
            .vehicles
            .iter()
            .map(|v| {
                Ok(CohortMember {
                    presence: v.presence.get(rsu_index).copied().unwrap_or(0.0),
                    demand: v.demand.clone(),
                    contact_time: contact_time(rsu, v)?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Cohort { members })
    }

    pub fn mean_contact_time(&self) -> f64 {
        if self.members.is_empty() {
            return 0.0;
        }
        compensated_sum(self.members.iter().map(|m| m.contact_time)) / self.members.len() as f64
    }
}

/// Per-vehicle item caps at one RSU.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FileCaps {
    /// Items receivable with no cache at all.
    pub reactive_cap: usize,
    /// Items receivable from the local cache.
    pub cached_cap: usize,
    /// Items receivable from the backhaul in the remaining contact time.
    pub backhaul_cap: usize,
    /// Total items receivable, at most the library size.
    pub total_cap: usize,
}

pub fn reactive_cap(rsu: &RsuConfig, library: &Library, contact_time: f64) -> usize {
    floor_count(contact_time / rsu.item_backhaul_time(library)).min(library.item_count)
}

pub fn proactive_caps(rsu: &RsuConfig, library: &Library, policy: &CachePolicy, contact_time: f64) -> FileCaps {
    caps_for_count(rsu, library, policy.cached_count(), contact_time)
}

/// Caps when `cached_count` items are cached; they do not depend on which.
pub fn caps_for_count(rsu: &RsuConfig, library: &Library, cached_count: usize, contact_time: f64) -> FileCaps {
    let air = rsu.item_air_time(library);
    let backhaul = rsu.item_backhaul_time(library);
    let cached_cap = floor_count(contact_time / air).min(cached_count);
    let leftover = contact_time - cached_cap as f64 * air;
    let backhaul_cap = floor_count(leftover / backhaul);
    FileCaps {
        reactive_cap: reactive_cap(rsu, library, contact_time),
        cached_cap,
        backhaul_cap,
        total_cap: (cached_cap + backhaul_cap).min(library.item_count),
    }
}

/// Probability that exactly the items in `subset` are requested.
pub fn combination_probability(demand: &[f64], subset: ItemSet) -> f64 {
    demand
        .iter()
        .enumerate()
        .map(|(m, &p)| if subset.contains(m) { p } else { 1.0 - p })
        .product()
}

/// Seconds to serve the request combination `subset`.
pub fn transmission_time(rsu: &RsuConfig, library: &Library, policy: &CachePolicy, subset: ItemSet) -> f64 {
    let hits = subset.iter().filter(|&m| policy.is_cached(m)).count();
    subset.len() as f64 * rsu.item_backhaul_time(library) - rsu.backhaul_latency * hits as f64
}

fn check_enumerable(what: &'static str, library: &Library) -> Result<()> {
    if library.item_count > ENUMERATION_LIMIT {
        return Err(Error::EnumerationLimit {
            what,
            items: library.item_count,
            limit: ENUMERATION_LIMIT,
        });
    }
    Ok(())
}

fn enumerate_member(library: &Library, demand: &[f64], cap: usize, time: impl Fn(ItemSet) -> f64) -> f64 {
    let mut acc = CompensatedSum::new();
    for mask in 0u64..(1u64 << library.item_count) {
        let subset = ItemSet(mask);
        if subset.len() > cap {
            continue;
        }
        acc.add(combination_probability(demand, subset) * time(subset));
    }
    acc.value()
}

pub fn reactive_delay_bruteforce(rsu: &RsuConfig, library: &Library, cohort: &Cohort) -> Result<f64> {
    check_enumerable("reactive brute-force delay", library)?;
    let per_item = rsu.item_backhaul_time(library);
    Ok(compensated_sum(cohort.members.iter().map(|v| {
        let cap = reactive_cap(rsu, library, v.contact_time);
        v.presence * enumerate_member(library, &v.demand, cap, |a| a.len() as f64 * per_item)
    })))
}

pub fn proactive_delay_bruteforce(
    rsu: &RsuConfig,
    library: &Library,
    policy: &CachePolicy,
    cohort: &Cohort,
) -> Result<f64> {
    check_enumerable("proactive brute-force delay", library)?;
    Ok(compensated_sum(cohort.members.iter().map(|v| {
        let cap = proactive_caps(rsu, library, policy, v.contact_time).total_cap;
        v.presence * enumerate_member(library, &v.demand, cap, |a| transmission_time(rsu, library, policy, a))
    })))
}

/// `(E[K; K <= cap], E[H; K <= cap])` for request count `K` and cached-hit
/// count `H` (hits counted over `cached`, which may be empty).
fn truncated_moments(demand: &[f64], cached: &[bool], cap: usize) -> (f64, f64) {
    let is_cached = |m: usize| cached.get(m).copied().unwrap_or(false);
    if cap >= demand.len() {
        let requests = compensated_sum(demand.iter().copied());
        let hits = compensated_sum(
            demand
                .iter()
                .enumerate()
                .filter(|(m, _)| is_cached(*m))
                .map(|(_, p)| *p),
        );
        return (requests, hits);
    }
    // prob[k]: P(k requests so far); hits[k]: E[hits so far; k requests].
    let mut prob = vec![0.0; cap + 1];
    let mut hits = vec![0.0; cap + 1];
    prob[0] = 1.0;
    for (m, &p) in demand.iter().enumerate() {
        let x = if is_cached(m) { 1.0 } else { 0.0 };
        let q = 1.0 - p;
        for k in (1..=cap).rev() {
            hits[k] = hits[k] * q + (hits[k - 1] + x * prob[k - 1]) * p;
            prob[k] = prob[k] * q + prob[k - 1] * p;
        }
        prob[0] *= q;
    }
    let requests = compensated_sum(prob.iter().enumerate().map(|(k, p)| k as f64 * p));
    (requests, compensated_sum(hits.iter().copied()))
}

pub fn reactive_delay_fast(rsu: &RsuConfig, library: &Library, cohort: &Cohort) -> f64 {
    let per_item = rsu.item_backhaul_time(library);
    compensated_sum(cohort.members.iter().map(|v| {
        let cap = reactive_cap(rsu, library, v.contact_time);
        let (requests, _) = truncated_moments(&v.demand, &[], cap);
        v.presence * per_item * requests
    }))
}

pub fn proactive_delay_fast(rsu: &RsuConfig, library: &Library, policy: &CachePolicy, cohort: &Cohort) -> f64 {
    proactive_delay_and_caps(rsu, library, policy, cohort).0
}

/// Proactive delay together with the summed total caps.
pub fn proactive_delay_and_caps(
    rsu: &RsuConfig,
    library: &Library,
    policy: &CachePolicy,
    cohort: &Cohort,
) -> (f64, usize) {
    let per_item = rsu.item_backhaul_time(library);
    let mut cap_sum = 0;
    let delay = compensated_sum(cohort.members.iter().map(|v| {
        let cap = proactive_caps(rsu, library, policy, v.contact_time).total_cap;
        cap_sum += cap;
        let (requests, hits) = truncated_moments(&v.demand, policy.placements(), cap);
        v.presence * (per_item * requests - rsu.backhaul_latency * hits)
    }));
    (delay, cap_sum)
}

pub fn reactive_cap_sum(rsu: &RsuConfig, library: &Library, cohort: &Cohort) -> usize {
    cohort
        .members
        .iter()
        .map(|v| reactive_cap(rsu, library, v.contact_time))
        .sum()
}

/// Reduction in per-file delay from proactive caching, seconds per file.
pub fn caching_gain(
    reactive_delay: f64,
    reactive_cap_sum: usize,
    proactive_delay: f64,
    proactive_cap_sum: usize,
) -> Result<f64> {
    if reactive_cap_sum == 0 {
        return Err(Error::UndefinedGain("reactive"));
    }
    if proactive_cap_sum == 0 {
        return Err(Error::UndefinedGain("proactive"));
    }
    Ok(reactive_delay / reactive_cap_sum as f64 - proactive_delay / proactive_cap_sum as f64)
}

/// Reactive and proactive delays of one RSU on the same cohort (fast path).
pub fn evaluate_rsu(rsu: &RsuConfig, library: &Library, policy: &CachePolicy, cohort: &Cohort) -> DelayReport {
    let reactive_delay = reactive_delay_fast(rsu, library, cohort);
    let reactive_file_cap_sum = reactive_cap_sum(rsu, library, cohort);
    let (proactive_delay, proactive_file_cap_sum) = proactive_delay_and_caps(rsu, library, policy, cohort);
    DelayReport {
        reactive_delay,
        proactive_delay,
        reactive_file_cap_sum,
        proactive_file_cap_sum,
        caching_gain: caching_gain(
            reactive_delay,
            reactive_file_cap_sum,
            proactive_delay,
            proactive_file_cap_sum,
        )
        .ok(),
    }
}

/// Proactive delay of one RSU as an affine function of the placement, one
/// affine map per cached-item count.
///
/// With `n` items cached every vehicle's cap `K_v(n)` is fixed, so
///
/// ```text
/// W(x) = sum_v theta_v * T * E[K_v; K_v <= K_v(n)]
///      - sum_m x_m * sum_v theta_v * tau * p_v^m * P(K_v without m <= K_v(n) - 1)
/// ```
///
/// where `T` is the backhaul delivery time of one item.
#[derive(Debug, Clone)]
pub struct PlacementTable {
    item_count: usize,
    base: Vec<f64>,
    /// `weights[n][m]`: delay saved by caching `m` when `n` items are cached.
    weights: Vec<Vec<f64>>,
    cap_sums: Vec<usize>,
}

impl PlacementTable {
    pub fn new(rsu: &RsuConfig, library: &Library, cohort: &Cohort) -> Self {
        let items = library.item_count;
        let per_item = rsu.item_backhaul_time(library);
        let mut base = vec![CompensatedSum::new(); items + 1];
        let mut weights = vec![vec![0.0; items]; items + 1];
        let mut cap_sums = vec![0usize; items + 1];

        for member in &cohort.members {
            let caps: Vec<usize> = (0..=items)
                .map(|n| caps_for_count(rsu, library, n, member.contact_time).total_cap)
                .collect();
            let max_cap = caps.iter().copied().max().unwrap_or(0);
            let counts = count_distribution(&member.demand, None, max_cap);
            // expected[k] = E[K; K <= k]
            let expected: Vec<f64> = counts
                .iter()
                .enumerate()
                .scan(CompensatedSum::new(), |acc, (k, p)| {
                    acc.add(k as f64 * p);
                    Some(acc.value())
                })
                .collect();
            // below[m][j] = P(K without m < j), j = 0..=max_cap
            let below: Vec<Vec<f64>> = (0..items)
                .map(|m| {
                    let loo = count_distribution(&member.demand, Some(m), max_cap.saturating_sub(1));
                    let mut cdf = Vec::with_capacity(max_cap + 1);
                    cdf.push(0.0);
                    let mut acc = CompensatedSum::new();
                    for p in loo.iter().take(max_cap) {
                        acc.add(*p);
                        cdf.push(acc.value());
                    }
                    cdf
                })
                .collect();
            for (n, &cap) in caps.iter().enumerate() {
                cap_sums[n] += cap;
                base[n].add(member.presence * per_item * expected[cap]);
                for m in 0..items {
                    weights[n][m] += member.presence * rsu.backhaul_latency * member.demand[m] * below[m][cap];
                }
            }
        }
        Self {
            item_count: items,
            base: base.iter().map(CompensatedSum::value).collect(),
            weights,
            cap_sums,
        }
    }

    pub fn item_count(&self) -> usize {
        self.item_count
    }

    pub fn cap_sum(&self, cached_count: usize) -> usize {
        self.cap_sums[cached_count]
    }

    pub fn weights(&self, cached_count: usize) -> &[f64] {
        &self.weights[cached_count]
    }

    pub fn delay(&self, placement: ItemSet) -> f64 {
        let n = placement.len();
        let w = &self.weights[n];
        let saved: f64 = placement.iter().map(|m| w[m]).sum();
        self.base[n] - saved
    }

    /// Delay per deliverable file; zero when no vehicle can receive anything.
    pub fn per_file(&self, placement: ItemSet) -> f64 {
        let n = placement.len();
        match self.cap_sums[n] {
            0 => 0.0,
            caps => self.delay(placement) / caps as f64,
        }
    }
}

/// Distribution of the request count, optionally leaving out one item,
/// truncated to `0..=cap`.
fn count_distribution(demand: &[f64], skip: Option<usize>, cap: usize) -> Vec<f64> {
    let mut prob = vec![0.0; cap + 1];
    prob[0] = 1.0;
    for (m, &p) in demand.iter().enumerate() {
        if Some(m) == skip {
            continue;
        }
        let q = 1.0 - p;
        for k in (1..=cap).rev() {
            prob[k] = prob[k] * q + prob[k - 1] * p;
        }
        prob[0] *= q;
    }
    prob
}
