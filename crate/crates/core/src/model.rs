//! Domain types shared by every other module.
//!
//! Units are SI throughout: meters, seconds, bytes, meters/second. Items are
//! indexed from zero internally; user-facing messages print them one-based.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mobility::ScenarioGenerator;
use crate::numeric::{compensated_sum, floor_count};

/// Tolerance on the unit-sum requirement of a demand profile.
pub const DEMAND_SUM_TOLERANCE: f64 = 1e-9;

/// The content catalogue: `item_count` equally sized items.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Library {
    pub item_count: usize,
    /// Bytes per item.
    pub item_size: f64,
}

impl Library {
    pub fn new(item_count: usize, item_size: f64) -> Result<Self> {
        let library = Self { item_count, item_size };
        let mut violations = Vec::new();
        library.check(&mut violations);
        match violations.is_empty() {
            true => Ok(library),
            false => Err(Error::Invalid(violations)),
        }
    }

    fn check(&self, out: &mut Vec<Violation>) {
        if self.item_count == 0 {
            out.push(Violation::new("library.item_count", "must be at least 1"));
        }
        if !(self.item_size > 0.0 && self.item_size.is_finite()) {
            out.push(Violation::new(
                "library.item_size",
                format!("must be positive, got {}", self.item_size),
            ));
        }
    }
}

/// One roadside unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RsuConfig {
    pub id: usize,
    /// Length of road covered, meters.
    pub coverage_length: f64,
    /// Cache size, bytes.
    pub cache_capacity: f64,
    /// Wireless rate towards vehicles, bytes/second.
    pub service_rate: f64,
    /// Extra time to fetch one item from the backhaul, seconds.
    pub backhaul_latency: f64,
}

impl RsuConfig {
    /// Seconds to push one cached item to a vehicle.
    pub fn item_air_time(&self, library: &Library) -> f64 {
        library.item_size / self.service_rate
    }

    /// Seconds to serve one uncached item (backhaul fetch plus air time).
    pub fn item_backhaul_time(&self, library: &Library) -> f64 {
        self.item_air_time(library) + self.backhaul_latency
    }

    /// Whole items that fit in the cache.
    pub fn capacity_items(&self, library: &Library) -> usize {
        floor_count(self.cache_capacity / library.item_size)
    }

    fn check(&self, index: usize, out: &mut Vec<Violation>) {
        let field = |name: &str| format!("rsus[{index}].{name}");
        if !(self.coverage_length > 0.0 && self.coverage_length.is_finite()) {
            out.push(Violation::new(
                field("coverage_length"),
                format!("must be positive, got {}", self.coverage_length),
            ));
        }
        if !(self.cache_capacity >= 0.0 && self.cache_capacity.is_finite()) {
            out.push(Violation::new(
                field("cache_capacity"),
                format!("must be nonnegative, got {}", self.cache_capacity),
            ));
        }
        if !(self.service_rate > 0.0 && self.service_rate.is_finite()) {
            out.push(Violation::new(
                field("service_rate"),
                format!("must be positive, got {}", self.service_rate),
            ));
        }
        if !(self.backhaul_latency >= 0.0 && self.backhaul_latency.is_finite()) {
            out.push(Violation::new(
                field("backhaul_latency"),
                format!("must be nonnegative, got {}", self.backhaul_latency),
            ));
        }
    }
}

/// A vehicle's speed, where it is likely to be, and what it is likely to ask for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleProfile {
    pub id: usize,
    /// Meters/second.
    pub velocity: f64,
    /// Probability of being inside each RSU's coverage, indexed by RSU.
    pub presence: Vec<f64>,
    /// Independent request probability of each item.
    pub demand: Vec<f64>,
}

impl VehicleProfile {
    fn check(&self, index: usize, library: &Library, rsu_count: usize, out: &mut Vec<Violation>) {
        let field = |name: &str| format!("vehicles[{index}].{name}");
        if !(self.velocity > 0.0 && self.velocity.is_finite()) {
            out.push(Violation::new(
                field("velocity"),
                format!("must be positive, got {}", self.velocity),
            ));
        }
        if self.presence.len() != rsu_count {
            out.push(Violation::new(
                field("presence"),
                format!("has {} entries for {rsu_count} RSUs", self.presence.len()),
            ));
        }
        if let Some((s, p)) = self
            .presence
            .iter()
            .enumerate()
            .find(|(_, p)| !(0.0..=1.0).contains(*p))
        {
            out.push(Violation::new(
                field("presence"),
                format!("entry for RSU {s} is {p}, outside [0, 1]"),
            ));
        }
        if self.demand.len() != library.item_count {
            out.push(Violation::new(
                field("demand"),
                format!(
                    "has {} entries for a library of {} items",
                    self.demand.len(),
                    library.item_count
                ),
            ));
        }
        if let Some((m, p)) = self.demand.iter().enumerate().find(|(_, p)| !(0.0..=1.0).contains(*p)) {
            out.push(Violation::new(
                field("demand"),
                format!("item {} has probability {p}, outside [0, 1]", m + 1),
            ));
        }
        let total = compensated_sum(self.demand.iter().copied());
        if (total - 1.0).abs() > DEMAND_SUM_TOLERANCE {
            out.push(Violation::new(
                field("demand"),
                format!("vehicle {} demand sums to {total}, expected 1", self.id),
            ));
        }
    }
}

/// Binary placement vector of one RSU.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CachePolicy {
    placements: Vec<bool>,
}

impl CachePolicy {
    pub fn empty(item_count: usize) -> Self {
        Self {
            placements: vec![false; item_count],
        }
    }

    pub fn full(item_count: usize) -> Self {
        Self {
            placements: vec![true; item_count],
        }
    }

    pub fn from_placements(placements: Vec<bool>) -> Self {
        Self { placements }
    }

    /// Policy caching the listed zero-based items.
    pub fn with_items(item_count: usize, items: &[usize]) -> Self {
        let mut policy = Self::empty(item_count);
        for &m in items {
            policy.placements[m] = true;
        }
        policy
    }

    pub fn from_set(item_count: usize, set: ItemSet) -> Self {
        Self {
            placements: (0..item_count).map(|m| set.contains(m)).collect(),
        }
    }

    pub fn to_set(&self) -> ItemSet {
        ItemSet::from_items(self.cached_items())
    }

    pub fn item_count(&self) -> usize {
        self.placements.len()
    }

    pub fn is_cached(&self, item: usize) -> bool {
        self.placements[item]
    }

    pub fn placements(&self) -> &[bool] {
        &self.placements
    }

    pub fn cached_count(&self) -> usize {
        self.placements.iter().filter(|&&x| x).count()
    }

    pub fn cached_items(&self) -> impl Iterator<Item = usize> + '_ {
        self.placements.iter().enumerate().filter_map(|(m, &x)| x.then_some(m))
    }

    /// Bytes occupied in the cache.
    pub fn footprint(&self, library: &Library) -> f64 {
        library.item_size * self.cached_count() as f64
    }
}

/// A set of items packed into a bitmask; bit `m` is item `m`.
///
/// Used for request combinations and for enumerating placements, both of
/// which are only tractable for small libraries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct ItemSet(pub u64);

impl ItemSet {
    pub const EMPTY: ItemSet = ItemSet(0);

    pub fn from_items<I: IntoIterator<Item = usize>>(items: I) -> Self {
        ItemSet(items.into_iter().fold(0u64, |acc, m| acc | (1 << m)))
    }

    pub fn contains(self, item: usize) -> bool {
        self.0 >> item & 1 == 1
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                return None;
            }
            let m = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            Some(m)
        })
    }
}

/// The unit of experiment reproducibility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub library: Library,
    /// RSUs in road order; vehicles traverse them in this order.
    pub rsus: Vec<RsuConfig>,
    pub vehicles: Vec<VehicleProfile>,
    /// Caching cost per cached item (gamma).
    pub cost_factor: f64,
    pub rng_seed: u64,
    /// When present, `vehicles` was drawn from this model and can be redrawn
    /// for another seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<ScenarioGenerator>,
}

impl Scenario {
    /// Redraws the vehicle population for `seed`. Scenarios without a
    /// generator are returned unchanged apart from the seed.
    pub fn reseeded(&self, seed: u64) -> Result<Scenario> {
        let mut out = self.clone();
        out.rng_seed = seed;
        if let Some(generator) = &self.generator {
            out.vehicles = generator.realize(&self.library, self.rsus.len(), seed)?;
        }
        Ok(out)
    }

    /// Copy of the scenario with every RSU's cache resized to `items` files.
    pub fn with_cache_items(&self, items: usize) -> Scenario {
        let mut out = self.clone();
        for rsu in &mut out.rsus {
            rsu.cache_capacity = items as f64 * self.library.item_size;
        }
        out
    }

    pub fn rsu(&self, index: usize) -> Result<&RsuConfig> {
        self.rsus
            .get(index)
            .ok_or_else(|| Error::Parameter(format!("RSU index {index} out of range for {} RSUs", self.rsus.len())))
    }
}

/// Expected delays of one RSU under reactive and proactive operation.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayReport {
    /// Seconds, expected over all request combinations and vehicles.
    pub reactive_delay: f64,
    pub proactive_delay: f64,
    pub reactive_file_cap_sum: usize,
    pub proactive_file_cap_sum: usize,
    /// Seconds per file; `None` when either cap sum is zero.
    pub caching_gain: Option<f64>,
}

impl DelayReport {
    pub fn reactive_per_file(&self) -> f64 {
        per_file(self.reactive_delay, self.reactive_file_cap_sum)
    }

    pub fn proactive_per_file(&self) -> f64 {
        per_file(self.proactive_delay, self.proactive_file_cap_sum)
    }
}

/// Delay per deliverable file; zero when nothing can be delivered.
pub fn per_file(delay: f64, cap_sum: usize) -> f64 {
    if cap_sum == 0 {
        0.0
    } else {
        delay / cap_sum as f64
    }
}

/// One broken invariant, named by field path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl Violation {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// Lists every invariant the scenario breaks; empty when it is well formed.
pub fn validate_scenario(scenario: &Scenario) -> Vec<Violation> {
    let mut out = Vec::new();
    scenario.library.check(&mut out);
    if scenario.rsus.is_empty() {
        out.push(Violation::new("rsus", "at least one RSU is required"));
    }
    for (s, rsu) in scenario.rsus.iter().enumerate() {
        rsu.check(s, &mut out);
    }
    for (v, vehicle) in scenario.vehicles.iter().enumerate() {
        vehicle.check(v, &scenario.library, scenario.rsus.len(), &mut out);
    }
    if !(scenario.cost_factor >= 0.0 && scenario.cost_factor.is_finite()) {
        out.push(Violation::new(
            "cost_factor",
            format!("must be nonnegative, got {}", scenario.cost_factor),
        ));
    }
    out
}

/// Checks a placement against the library size and the RSU's storage.
pub fn validate_policy(library: &Library, rsu: &RsuConfig, policy: &CachePolicy) -> Vec<Violation> {
    let mut out = Vec::new();
    let field = format!("policy[rsu {}]", rsu.id);
    if policy.item_count() != library.item_count {
        out.push(Violation::new(
            field.clone(),
            format!(
                "has {} entries for a library of {} items",
                policy.item_count(),
                library.item_count
            ),
        ));
    }
    let used = policy.footprint(library);
    // Capacity is compared in whole items to stay exact for integral sizes.
    if policy.cached_count() > rsu.capacity_items(library) {
        out.push(Violation::new(
            field,
            format!(
                "caches {} items ({used} bytes) but storage is {} bytes",
                policy.cached_count(),
                rsu.cache_capacity
            ),
        ));
    }
    out
}

pub(crate) fn ensure_valid(scenario: &Scenario) -> Result<()> {
    let violations = validate_scenario(scenario);
    if violations.is_empty() {
        Ok(())
    } else {
        Err(Error::Invalid(violations))
    }
}
