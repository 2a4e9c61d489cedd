//! Cache-placement solvers.
//!
//! Non-cooperative RSUs each minimise their own per-file delay plus caching
//! cost. Cooperative RSUs form a chain: each downstream RSU plans for the
//! demand that remains after upstream RSUs have served the passing vehicles.
//!
//! Ties are broken towards lower item indices (greedy) and towards the first
//! placement in ascending bitmask order (exhaustive), where bit `m` is item `m`.

mod coop;
mod exhaustive;
mod greedy;

pub use coop::{
    chain_cohorts, chain_objective, downstream_cohort, evaluate_chain, greedy_coop, objective_coop, simulate_delivery,
    solve_exhaustive_coop, solve_exhaustive_coop_with, ChainReport, JointFrontier, JOINT_ENUMERATION_LIMIT,
};
pub use exhaustive::{solve_exhaustive_noncoop, solve_exhaustive_noncoop_with, CountFrontier};
pub use greedy::{greedy_fill, greedy_limit, greedy_noncoop, item_scores, ranked_items, ItemScore};

use serde::{Deserialize, Serialize};

use crate::delay::{proactive_delay_and_caps, Cohort};
use crate::error::{Error, Result};
use crate::model::{per_file, CachePolicy, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    NonCooperative,
    Cooperative,
}

/// What a solver minimises.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Objective {
    pub mode: Mode,
    /// Cost per cached item.
    pub cost_factor: f64,
}

impl Objective {
    pub fn new(mode: Mode, cost_factor: f64) -> Result<Self> {
        if !(cost_factor >= 0.0 && cost_factor.is_finite()) {
            return Err(Error::Parameter(format!(
                "cost factor must be nonnegative, got {cost_factor}"
            )));
        }
        Ok(Self { mode, cost_factor })
    }

    /// Objective of one placement per RSU: the sum of per-RSU objectives
    /// when non-cooperative, the chain objective when cooperative.
    pub fn evaluate(&self, scenario: &Scenario, policies: &[CachePolicy]) -> Result<f64> {
        let mut scenario = scenario.clone();
        scenario.cost_factor = self.cost_factor;
        check_policy_count(&scenario, policies)?;
        match self.mode {
            Mode::NonCooperative => policies
                .iter()
                .enumerate()
                .map(|(s, policy)| objective_noncoop(&scenario, s, policy))
                .sum(),
            Mode::Cooperative => chain_objective(&scenario, policies),
        }
    }
}

/// Placements chosen by a solver, one per RSU solved.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub policies: Vec<CachePolicy>,
    pub objective_value: f64,
    /// Objective evaluations spent searching.
    pub evaluations: u64,
}

/// Per-file proactive delay of RSU `rsu_index` under its original vehicle
/// information, plus the caching cost.
pub fn objective_noncoop(scenario: &Scenario, rsu_index: usize, policy: &CachePolicy) -> Result<f64> {
    let cohort = Cohort::at_rsu(scenario, rsu_index)?;
    cohort_objective(scenario, rsu_index, policy, &cohort)
}

fn cohort_objective(scenario: &Scenario, rsu_index: usize, policy: &CachePolicy, cohort: &Cohort) -> Result<f64> {
    let rsu = scenario.rsu(rsu_index)?;
    check_policy_len(scenario, policy)?;
    let (delay, caps) = proactive_delay_and_caps(rsu, &scenario.library, policy, cohort);
    Ok(per_file(delay, caps) + scenario.cost_factor * policy.cached_count() as f64)
}

fn check_policy_len(scenario: &Scenario, policy: &CachePolicy) -> Result<()> {
    if policy.item_count() != scenario.library.item_count {
        return Err(Error::Parameter(format!(
            "policy covers {} items, library has {}",
            policy.item_count(),
            scenario.library.item_count
        )));
    }
    Ok(())
}

fn check_policy_count(scenario: &Scenario, policies: &[CachePolicy]) -> Result<()> {
    if policies.len() != scenario.rsus.len() {
        return Err(Error::Parameter(format!(
            "{} policies for {} RSUs",
            policies.len(),
            scenario.rsus.len()
        )));
    }
    policies.iter().try_for_each(|p| check_policy_len(scenario, p))
}
