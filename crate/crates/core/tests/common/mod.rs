#![allow(dead_code)]

use procache::{CachePolicy, Library, RsuConfig, Scenario, VehicleProfile};
use proptest::prelude::*;

/// Expected delays by listing every request combination of every vehicle.
pub struct Oracle {
    pub reactive: f64,
    pub proactive: f64,
    pub reactive_caps: usize,
    pub proactive_caps: usize,
}

fn floor_slack(x: f64) -> usize {
    if x <= 0.0 {
        0
    } else {
        (x * (1.0 + 1e-9)).floor() as usize
    }
}

pub fn oracle(scenario: &Scenario, s: usize, policy: &CachePolicy) -> Oracle {
    let lib = &scenario.library;
    let rsu = &scenario.rsus[s];
    let m = lib.item_count;
    let air = lib.item_size / rsu.service_rate;
    let fetch = air + rsu.backhaul_latency;
    let cached = policy.cached_count();
    let mut out = Oracle {
        reactive: 0.0,
        proactive: 0.0,
        reactive_caps: 0,
        proactive_caps: 0,
    };
    for v in &scenario.vehicles {
        let h = rsu.coverage_length / v.velocity;
        let reactive_cap = floor_slack(h / fetch).min(m);
        let from_cache = floor_slack(h / air).min(cached);
        let from_backhaul = floor_slack((h - from_cache as f64 * air) / fetch);
        let proactive_cap = (from_cache + from_backhaul).min(m);
        out.reactive_caps += reactive_cap;
        out.proactive_caps += proactive_cap;
        let theta = v.presence[s];
        for mask in 0u32..1 << m {
            let mut prob = 1.0;
            let mut size = 0;
            let mut cost = 0.0;
            for item in 0..m {
                let p = v.demand[item];
                if mask >> item & 1 == 1 {
                    prob *= p;
                    size += 1;
                    cost += if policy.is_cached(item) { air } else { fetch };
                } else {
                    prob *= 1.0 - p;
                }
            }
            if size <= reactive_cap {
                out.reactive += theta * prob * size as f64 * fetch;
            }
            if size <= proactive_cap {
                out.proactive += theta * prob * cost;
            }
        }
    }
    out
}

pub fn per_file(delay: f64, caps: usize) -> f64 {
    if caps == 0 {
        0.0
    } else {
        delay / caps as f64
    }
}

/// Normalised demand with some exact zeros.
pub fn demand(items: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![1 => Just(0.0), 4 => 0.01f64..1.0], items).prop_map(|mut w| {
        if w.iter().all(|&x| x == 0.0) {
            w[0] = 1.0;
        }
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= total);
        w
    })
}

fn vehicle(items: usize, rsus: usize) -> impl Strategy<Value = (f64, Vec<f64>, Vec<f64>)> {
    (
        2.0f64..40.0,
        prop::collection::vec(prop_oneof![1 => Just(0.0), 1 => Just(1.0), 2 => 0.0f64..1.0], rsus),
        demand(items),
    )
}

/// Random scenario with `rsus` RSUs, at most `max_items` items and
/// `max_vehicles` vehicles. Storage fits the whole library.
pub fn scenario(max_items: usize, max_vehicles: usize, rsus: usize) -> impl Strategy<Value = Scenario> {
    (1..=max_items, 1..=max_vehicles).prop_flat_map(move |(items, vehicles)| {
        (
            0.5f64..2.0,
            prop::collection::vec((10.0f64..100.0, 0.5f64..2.0, 0.0f64..2.0), rsus),
            prop::collection::vec(vehicle(items, rsus), vehicles),
            0.0f64..0.05,
        )
            .prop_map(move |(size, rsu_params, vehicles, gamma)| Scenario {
                library: Library::new(items, size).unwrap(),
                rsus: rsu_params
                    .into_iter()
                    .enumerate()
                    .map(|(id, (length, rate, tau))| RsuConfig {
                        id,
                        coverage_length: length,
                        cache_capacity: items as f64 * size,
                        service_rate: rate,
                        backhaul_latency: tau,
                    })
                    .collect(),
                vehicles: vehicles
                    .into_iter()
                    .enumerate()
                    .map(|(id, (velocity, presence, demand))| VehicleProfile {
                        id,
                        velocity,
                        presence,
                        demand,
                    })
                    .collect(),
                cost_factor: gamma,
                rng_seed: 0,
                generator: None,
            })
    })
}

pub fn policy(items: usize) -> impl Strategy<Value = CachePolicy> {
    prop::collection::vec(any::<bool>(), items).prop_map(CachePolicy::from_placements)
}

pub fn scenario_and_policy(max_items: usize, max_vehicles: usize) -> impl Strategy<Value = (Scenario, CachePolicy)> {
    scenario(max_items, max_vehicles, 1).prop_flat_map(|s| {
        let items = s.library.item_count;
        (Just(s), policy(items))
    })
}

pub fn bundled(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(name)
}

/// Property-test settings; failures are reported, not persisted.
pub fn cases(n: u32) -> ProptestConfig {
    ProptestConfig {
        cases: n,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}
