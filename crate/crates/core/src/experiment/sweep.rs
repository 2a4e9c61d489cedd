//! Parameter sweeps over cache size, cost factor and scheme.
//!
//! Every replication redraws the vehicle population with seed
//! `base_seed + replication`, then evaluates each scheme along the RSU chain:
//! downstream RSUs always see the demand left after upstream deliveries, so
//! the schemes are compared on the same realised traffic.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::delay::{Cohort, PlacementTable, ENUMERATION_LIMIT};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::model::{CachePolicy, Scenario};
use crate::solver::{
    evaluate_chain, greedy_coop, greedy_fill, objective_noncoop, CountFrontier, JointFrontier, JOINT_ENUMERATION_LIMIT,
};

pub const DEFAULT_REPLICATIONS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Reactive,
    NoncoopGreedy,
    NoncoopOptimal,
    CoopGreedy,
    CoopOptimal,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::Reactive,
        Scheme::NoncoopGreedy,
        Scheme::NoncoopOptimal,
        Scheme::CoopGreedy,
        Scheme::CoopOptimal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Reactive => "reactive",
            Scheme::NoncoopGreedy => "noncoop_greedy",
            Scheme::NoncoopOptimal => "noncoop_optimal",
            Scheme::CoopGreedy => "coop_greedy",
            Scheme::CoopOptimal => "coop_optimal",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Grid of a sweep. An empty `gammas` list means the scenario's own cost factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Cache sizes in files, applied to every RSU.
    pub cache_sizes: Vec<usize>,
    #[serde(default)]
    pub gammas: Vec<f64>,
    pub schemes: Vec<Scheme>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub base_seed: u64,
}

fn default_replications() -> usize {
    DEFAULT_REPLICATIONS
}

impl SweepSpec {
    pub fn gammas_for(&self, scenario: &Scenario) -> Vec<f64> {
        match self.gammas.is_empty() {
            true => vec![scenario.cost_factor],
            false => self.gammas.clone(),
        }
    }

    pub fn check(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Parameter(msg));
        if self.cache_sizes.is_empty() {
            return fail("sweep lists no cache sizes".into());
        }
        if self.schemes.is_empty() {
            return fail("sweep lists no schemes".into());
        }
        if self.replications == 0 {
            return fail("sweep needs at least one replication".into());
        }
        if let Some(g) = self.gammas.iter().find(|g| !(**g >= 0.0 && g.is_finite())) {
            return fail(format!("cost factor {g} is not a nonnegative number"));
        }
        Ok(())
    }
}

pub fn parse_sweep_spec(text: &str, origin: &Path) -> Result<SweepSpec> {
    let spec: SweepSpec = serde_json::from_str(text).map_err(|e| Error::Parse {
        path: origin.to_path_buf(),
        message: e.to_string(),
    })?;
    spec.check()?;
    Ok(spec)
}

pub fn load_sweep_spec(path: impl AsRef<Path>) -> Result<SweepSpec> {
    let path = path.as_ref();
    parse_sweep_spec(&std::fs::read_to_string(path)?, path)
}

/// One (scheme, cache size, cost factor, replication) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub scheme: Scheme,
    pub cache_size: usize,
    pub gamma: f64,
    pub replication: usize,
    /// Proactive per-file delay averaged over RSUs, seconds.
    pub per_file_delay: f64,
    /// Reactive per-file delay minus `per_file_delay`.
    pub caching_gain: f64,
    /// Non-cooperative schemes: sum of per-RSU objectives under original
    /// information. Cooperative schemes: chain objective. Reactive: sum of
    /// per-file delays.
    pub objective_value: f64,
    /// Items cached, summed over RSUs.
    pub cached_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkippedCell {
    pub scheme: Scheme,
    pub cache_size: usize,
    pub gamma: f64,
    pub replication: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    pub skipped: Vec<SkippedCell>,
}

/// Percentage of the reactive per-file delay removed by caching.
pub fn percentage_gain(reactive_per_file: f64, per_file: f64) -> Result<f64> {
    if !(reactive_per_file > 0.0) {
        return Err(Error::UndefinedGain("reactive per-file delay is zero"));
    }
    Ok(100.0 * (reactive_per_file - per_file) / reactive_per_file)
}

pub fn run_sweep(scenario: &Scenario, spec: &SweepSpec) -> Result<SweepOutcome> {
    run_sweep_with(scenario, spec, Exec::default())
}

/// Runs every cell of `spec`. Replications run in parallel under
/// [`Exec::Parallel`]; rows come back in canonical order regardless.
pub fn run_sweep_with(scenario: &Scenario, spec: &SweepSpec, exec: Exec) -> Result<SweepOutcome> {
    spec.check()?;
    crate::model::ensure_valid(scenario)?;
    let gammas = spec.gammas_for(scenario);
    let per_rep = exec.map_indices(spec.replications, |rep| {
        let seed = spec.base_seed.wrapping_add(rep as u64);
        let realized = scenario.reseeded(seed)?;
        replication(&realized, spec, &gammas, rep)
    });
    let mut outcome = SweepOutcome::default();
    for part in per_rep {
        let part = part?;
        outcome.rows.extend(part.rows);
        outcome.skipped.extend(part.skipped);
    }
    let key = |scheme: Scheme, size: usize, gamma: f64, rep: usize| (scheme, size, gamma.to_bits(), rep);
    outcome
        .rows
        .sort_by_key(|r| key(r.scheme, r.cache_size, r.gamma, r.replication));
    outcome
        .skipped
        .sort_by_key(|c| key(c.scheme, c.cache_size, c.gamma, c.replication));
    Ok(outcome)
}

/// One scheme's placements for one cell, with the objective it reports.
struct Placement {
    policies: Vec<CachePolicy>,
    objective: Option<f64>,
}

fn replication(scenario: &Scenario, spec: &SweepSpec, gammas: &[f64], rep: usize) -> Result<SweepOutcome> {
    let library = &scenario.library;
    let items = library.item_count;
    let rsu_count = scenario.rsus.len();
    let max_size = spec.cache_sizes.iter().copied().max().unwrap_or(0).min(items);
    let wants = |s: Scheme| spec.schemes.contains(&s);

    let cohorts = (0..rsu_count)
        .map(|s| Cohort::at_rsu(scenario, s))
        .collect::<Result<Vec<_>>>()?;

    // Search structures depend only on the population, not on the cell.
    let noncoop_frontiers: std::result::Result<Vec<CountFrontier>, String> = if !wants(Scheme::NoncoopOptimal) {
        Ok(Vec::new())
    } else if items > ENUMERATION_LIMIT {
        Err(format!(
            "{items} items exceed the exhaustive search limit of {ENUMERATION_LIMIT}"
        ))
    } else {
        scenario
            .rsus
            .iter()
            .zip(&cohorts)
            .map(|(rsu, cohort)| {
                let table = PlacementTable::new(rsu, library, cohort);
                CountFrontier::enumerate(&table, max_size, Exec::Sequential).map_err(|e| e.to_string())
            })
            .collect()
    };
    let joint_frontier: std::result::Result<Option<JointFrontier>, String> = if !wants(Scheme::CoopOptimal) {
        Ok(None)
    } else if rsu_count != 2 {
        Err(format!(
            "joint exhaustive search covers two-RSU chains, scenario has {rsu_count}"
        ))
    } else if items > JOINT_ENUMERATION_LIMIT {
        Err(format!(
            "{items} items exceed the joint search limit of {JOINT_ENUMERATION_LIMIT}"
        ))
    } else {
        JointFrontier::enumerate(scenario, max_size, max_size, Exec::Sequential)
            .map(Some)
            .map_err(|e| e.to_string())
    };

    let empty = vec![CachePolicy::empty(items); rsu_count];
    let reactive = evaluate_chain(scenario, &empty)?;
    let reactive_pf = reactive.mean_per_file();

    let mut out = SweepOutcome::default();
    for &size in &spec.cache_sizes {
        let sized = scenario.with_cache_items(size);
        let capacity = size.min(items);

        let noncoop_greedy = match wants(Scheme::NoncoopGreedy) {
            true => Some(
                sized
                    .rsus
                    .iter()
                    .zip(&cohorts)
                    .map(|(rsu, cohort)| greedy_fill(rsu, library, cohort))
                    .collect::<Vec<_>>(),
            ),
            false => None,
        };
        let coop_greedy = match wants(Scheme::CoopGreedy) {
            true if rsu_count >= 2 => Some(Ok(greedy_coop(&sized)?.policies)),
            true => Some(Err("cooperative placement needs at least two RSUs".to_string())),
            false => None,
        };

        for &gamma in gammas {
            let mut gamma_scenario = sized.clone();
            gamma_scenario.cost_factor = gamma;
            let noncoop_sum = |policies: &[CachePolicy]| -> Result<f64> {
                policies
                    .iter()
                    .enumerate()
                    .map(|(s, p)| objective_noncoop(&gamma_scenario, s, p))
                    .sum()
            };

            for &scheme in &spec.schemes {
                let placement: std::result::Result<Placement, String> = match scheme {
                    Scheme::Reactive => Ok(Placement {
                        policies: empty.clone(),
                        objective: None,
                    }),
                    Scheme::NoncoopGreedy => {
                        let policies = noncoop_greedy.clone().expect("requested");
                        let objective = Some(noncoop_sum(&policies)?);
                        Ok(Placement { policies, objective })
                    }
                    Scheme::NoncoopOptimal => match &noncoop_frontiers {
                        Ok(frontiers) => {
                            let policies: Vec<CachePolicy> = frontiers
                                .iter()
                                .map(|f| CachePolicy::from_set(items, f.select(capacity, gamma).0))
                                .collect();
                            let objective = Some(noncoop_sum(&policies)?);
                            Ok(Placement { policies, objective })
                        }
                        Err(reason) => Err(reason.clone()),
                    },
                    Scheme::CoopGreedy => match coop_greedy.clone().expect("requested") {
                        Ok(policies) => Ok(Placement {
                            policies,
                            objective: None,
                        }),
                        Err(reason) => Err(reason),
                    },
                    Scheme::CoopOptimal => match &joint_frontier {
                        Ok(Some(joint)) => {
                            let (up, down, _) = joint.select(capacity, capacity, gamma);
                            Ok(Placement {
                                policies: vec![CachePolicy::from_set(items, up), CachePolicy::from_set(items, down)],
                                objective: None,
                            })
                        }
                        Ok(None) => unreachable!("joint frontier built when requested"),
                        Err(reason) => Err(reason.clone()),
                    },
                };
                match placement {
                    Ok(placement) => {
                        let chain = evaluate_chain(&gamma_scenario, &placement.policies)?;
                        let per_file_delay = chain.mean_per_file();
                        out.rows.push(SweepRow {
                            scheme,
                            cache_size: size,
                            gamma,
                            replication: rep,
                            per_file_delay,
                            caching_gain: reactive_pf - per_file_delay,
                            objective_value: placement.objective.unwrap_or_else(|| chain.objective(gamma)),
                            cached_count: chain.cached_counts.iter().sum(),
                        });
                    }
                    Err(reason) => out.skipped.push(SkippedCell {
                        scheme,
                        cache_size: size,
                        gamma,
                        replication: rep,
                        reason,
                    }),
                }
            }
        }
    }
    Ok(out)
}

/// Objective of the best non-cooperative placement that fills the cache
/// exactly, at one cost factor and cache size.
#[derive(Debug, Clone, PartialEq)]
pub struct FillPoint {
    pub gamma: f64,
    pub cache_size: usize,
    /// Summed over RSUs, over replications.
    pub objective_value: Summary,
}

/// Objective against cache size when every RSU caches exactly `cache_size`
/// items, chosen optimally. Unlike the sweep, where a solver may leave
/// storage empty, this curve rises once extra items cost more than they save.
pub fn fill_objective_curve(scenario: &Scenario, spec: &SweepSpec, exec: Exec) -> Result<Vec<FillPoint>> {
    spec.check()?;
    crate::model::ensure_valid(scenario)?;
    let items = scenario.library.item_count;
    if items > ENUMERATION_LIMIT {
        return Err(Error::EnumerationLimit {
            what: "exact-fill objective curve",
            items,
            limit: ENUMERATION_LIMIT,
        });
    }
    let gammas = spec.gammas_for(scenario);
    let max_size = spec.cache_sizes.iter().copied().max().unwrap_or(0).min(items);
    let frontiers = exec.map_indices(spec.replications, |rep| {
        let realized = scenario.reseeded(spec.base_seed.wrapping_add(rep as u64))?;
        (0..realized.rsus.len())
            .map(|s| {
                let cohort = Cohort::at_rsu(&realized, s)?;
                let table = PlacementTable::new(&realized.rsus[s], &realized.library, &cohort);
                CountFrontier::enumerate(&table, max_size, Exec::Sequential)
            })
            .collect::<Result<Vec<_>>>()
    });
    let frontiers = frontiers.into_iter().collect::<Result<Vec<_>>>()?;
    let mut out = Vec::new();
    for &gamma in &gammas {
        for &size in spec.cache_sizes.iter().filter(|&&z| z <= items) {
            let values: Vec<f64> = frontiers
                .iter()
                .map(|rsus| {
                    rsus.iter()
                        .map(|f| f.objective_at(size, gamma).expect("size within frontier"))
                        .sum()
                })
                .collect();
            out.push(FillPoint {
                gamma,
                cache_size: size,
                objective_value: Summary::of(&values),
            });
        }
    }
    Ok(out)
}

/// Cache size with the lowest mean objective at `gamma`; ties go to the
/// smaller size.
pub fn fill_minimizer(curve: &[FillPoint], gamma: f64) -> Option<usize> {
    curve
        .iter()
        .filter(|p| p.gamma == gamma)
        .fold(None, |best: Option<&FillPoint>, p| match best {
            Some(b) if b.objective_value.mean <= p.objective_value.mean => Some(b),
            _ => Some(p),
        })
        .map(|p| p.cache_size)
}

/// Mean and sample standard deviation of one series point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub std_dev: f64,
    pub count: usize,
}

impl Summary {
    pub fn of(values: &[f64]) -> Summary {
        let count = values.len();
        if count == 0 {
            return Summary {
                mean: f64::NAN,
                std_dev: f64::NAN,
                count,
            };
        }
        let mean = values.iter().sum::<f64>() / count as f64;
        let std_dev = match count {
            1 => 0.0,
            _ => {
                let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
                (ss / (count - 1) as f64).sqrt()
            }
        };
        Summary { mean, std_dev, count }
    }
}

/// Replication statistics of one (scheme, cache size, cost factor) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub scheme: Scheme,
    pub cache_size: usize,
    pub gamma: f64,
    pub per_file_delay: Summary,
    pub caching_gain: Summary,
    pub objective_value: Summary,
}

/// Groups rows by cell, in canonical order.
pub fn summarize(rows: &[SweepRow]) -> Vec<CellSummary> {
    let mut sorted: Vec<&SweepRow> = rows.iter().collect();
    sorted.sort_by_key(|r| (r.scheme, r.cache_size, r.gamma.to_bits(), r.replication));
    let mut out = Vec::new();
    let mut start = 0;
    while start < sorted.len() {
        let head = sorted[start];
        let end = start
            + sorted[start..]
                .iter()
                .take_while(|r| {
                    r.scheme == head.scheme
                        && r.cache_size == head.cache_size
                        && r.gamma.to_bits() == head.gamma.to_bits()
                })
                .count();
        let cell = &sorted[start..end];
        let column = |f: fn(&SweepRow) -> f64| Summary::of(&cell.iter().map(|r| f(r)).collect::<Vec<_>>());
        out.push(CellSummary {
            scheme: head.scheme,
            cache_size: head.cache_size,
            gamma: head.gamma,
            per_file_delay: column(|r| r.per_file_delay),
            caching_gain: column(|r| r.caching_gain),
            objective_value: column(|r| r.objective_value),
        });
        start = end;
    }
    out
}
