//! Vehicle mobility and demand: the truncated-Gaussian speed law, contact
//! times, Zipf demand profiles with per-vehicle rank permutations, and the
//! location/demand update a downstream RSU applies after an upstream one
//! has served the vehicle.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::erf::{erf, erfc};

use crate::error::{Error, Result};
use crate::model::{Library, RsuConfig, VehicleProfile};
use crate::numeric::compensated_sum;

pub const KMH_PER_MPS: f64 = 3.6;

/// Zipf exponents handed out (cyclically) when a generator does not name any.
pub const DEFAULT_ZIPF_EXPONENTS: [f64; 3] = [0.6, 0.8, 1.0];

/// Normal law with the given mean and variance, restricted to `[lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GaussianParams", into = "GaussianParams")]
pub struct TruncatedGaussian {
    mean: f64,
    variance: f64,
    lower: f64,
    upper: f64,
}

#[derive(Serialize, Deserialize)]
struct GaussianParams {
    mean: f64,
    variance: f64,
    lower: f64,
    upper: f64,
}

impl TryFrom<GaussianParams> for TruncatedGaussian {
    type Error = Error;

    fn try_from(p: GaussianParams) -> Result<Self> {
        TruncatedGaussian::new(p.mean, p.variance, p.lower, p.upper)
    }
}

impl From<TruncatedGaussian> for GaussianParams {
    fn from(t: TruncatedGaussian) -> Self {
        GaussianParams {
            mean: t.mean,
            variance: t.variance,
            lower: t.lower,
            upper: t.upper,
        }
    }
}

impl TruncatedGaussian {
    pub fn new(mean: f64, variance: f64, lower: f64, upper: f64) -> Result<Self> {
        if !(mean.is_finite() && lower.is_finite() && upper.is_finite()) {
            return Err(Error::Parameter("truncated Gaussian parameters must be finite".into()));
        }
        if !(variance > 0.0 && variance.is_finite()) {
            return Err(Error::Parameter(format!(
                "truncated Gaussian variance must be positive, got {variance}"
            )));
        }
        if !(lower < upper) {
            return Err(Error::Parameter(format!(
                "truncated Gaussian needs lower < upper, got [{lower}, {upper}]"
            )));
        }
        let dist = Self {
            mean,
            variance,
            lower,
            upper,
        };
        if !(dist.erf_mass() > 0.0) {
            return Err(Error::Parameter(format!(
                "support [{lower}, {upper}] carries no probability mass"
            )));
        }
        Ok(dist)
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }

    /// Rescales the variable by `factor` (e.g. 1/3.6 for km/h to m/s).
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.mean * factor,
            self.variance * factor * factor,
            self.lower * factor,
            self.upper * factor,
        )
    }

    fn erf_mass(&self) -> f64 {
        let scale = self.std_dev() * std::f64::consts::SQRT_2;
        let (a, b) = ((self.lower - self.mean) / scale, (self.upper - self.mean) / scale);
        // erfc keeps precision when the whole support sits in one tail.
        if a > 0.0 {
            erfc(a) - erfc(b)
        } else if b < 0.0 {
            erfc(-b) - erfc(-a)
        } else {
            erf(b) - erf(a)
        }
    }

    /// Density; exactly zero outside the support.
    pub fn pdf(&self, u: f64) -> f64 {
        if u < self.lower || u > self.upper {
            return 0.0;
        }
        let d = u - self.mean;
        let kernel = (-d * d / (2.0 * self.variance)).exp();
        2.0 * kernel / ((2.0 * std::f64::consts::PI * self.variance).sqrt() * self.erf_mass())
    }

    /// Inverse-CDF draw: one uniform variate per sample.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let unit = Normal::standard();
        let sd = self.std_dev();
        let a = (self.lower - self.mean) / sd;
        let b = (self.upper - self.mean) / sd;
        let v: f64 = rng.random();
        // Work in whichever tail keeps the CDF values away from 1, where
        // they would lose precision.
        let z = if a > 0.0 {
            let (fa, fb) = (unit.cdf(-a), unit.cdf(-b));
            -unit.inverse_cdf(fa - v * (fa - fb))
        } else {
            let (fa, fb) = (unit.cdf(a), unit.cdf(b));
            unit.inverse_cdf(fa + v * (fb - fa))
        };
        (self.mean + sd * z).clamp(self.lower, self.upper)
    }
}

/// Seconds vehicle `vehicle` spends inside `rsu`'s coverage.
pub fn contact_time(rsu: &RsuConfig, vehicle: &VehicleProfile) -> Result<f64> {
    if !(vehicle.velocity > 0.0) {
        return Err(Error::Parameter(format!(
            "vehicle {} has non-positive velocity {}",
            vehicle.id, vehicle.velocity
        )));
    }
    Ok(rsu.coverage_length / vehicle.velocity)
}

/// Zipf profile where item `m` has popularity rank `ranks[m]` (one-based).
pub fn zipf_profile(exponent: f64, ranks: &[usize]) -> Vec<f64> {
    let norm = compensated_sum((1..=ranks.len()).map(|r| (r as f64).powf(-exponent)));
    ranks.iter().map(|&r| (r as f64).powf(-exponent) / norm).collect()
}

/// One vehicle's Zipf demand with a uniformly permuted rank order.
pub fn zipf_demand<R: Rng + ?Sized>(item_count: usize, exponent: f64, rng: &mut R) -> Vec<f64> {
    let mut ranks: Vec<usize> = (1..=item_count).collect();
    ranks.shuffle(rng);
    zipf_profile(exponent, &ranks)
}

/// Demand vectors for `vehicle_count` vehicles, drawn in vehicle order from
/// one stream.
pub fn generate_demands<R: Rng + ?Sized>(
    library: &Library,
    vehicle_count: usize,
    zipf_exponents: &[f64],
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    if zipf_exponents.len() != vehicle_count {
        return Err(Error::Parameter(format!(
            "{} Zipf exponents for {vehicle_count} vehicles",
            zipf_exponents.len()
        )));
    }
    if let Some(e) = zipf_exponents.iter().find(|e| !(**e > 0.0)) {
        return Err(Error::Parameter(format!("Zipf exponent {e} is not positive")));
    }
    Ok(zipf_exponents
        .iter()
        .map(|&e| zipf_demand(library.item_count, e, rng))
        .collect())
}

/// Items a vehicle downloaded while crossing one RSU (zero-based indices).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DeliveredSet {
    items: BTreeSet<usize>,
}

impl DeliveredSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, item: usize) -> bool {
        self.items.insert(item)
    }

    pub fn contains(&self, item: usize) -> bool {
        self.items.contains(&item)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.items.iter().copied()
    }
}

impl FromIterator<usize> for DeliveredSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        Self {
            items: iter.into_iter().collect(),
        }
    }
}

/// Demand left over once the delivered items are known.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandUpdate {
    pub demand: Vec<f64>,
    /// Every unit of demand mass was delivered; `demand` is all zeros.
    pub fully_served: bool,
}

/// Conditions a demand profile on the vehicle not requesting what it already has.
pub fn update_demand(demand: &[f64], delivered: &DeliveredSet) -> DemandUpdate {
    let remaining = compensated_sum(
        demand
            .iter()
            .enumerate()
            .filter(|(m, _)| !delivered.contains(*m))
            .map(|(_, p)| *p),
    );
    if remaining <= 1e-12 {
        return DemandUpdate {
            demand: vec![0.0; demand.len()],
            fully_served: true,
        };
    }
    let demand = demand
        .iter()
        .enumerate()
        .map(|(m, &p)| if delivered.contains(m) { 0.0 } else { p / remaining })
        .collect();
    DemandUpdate {
        demand,
        fully_served: false,
    }
}

/// Location certainty at the RSU after `upstream_rsu`: 1 when the vehicle
/// was on that RSU's stretch of road, else 0.
pub fn update_presence(vehicle: &VehicleProfile, upstream_rsu: usize) -> f64 {
    match vehicle.presence.get(upstream_rsu) {
        Some(&theta) if theta > 0.0 => 1.0,
        _ => 0.0,
    }
}

/// Draws vehicle populations: truncated-Gaussian speeds and permuted Zipf
/// demands, every vehicle on every RSU's road with the same presence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioGenerator {
    pub vehicle_count: usize,
    /// Speed law in meters/second.
    pub velocity: TruncatedGaussian,
    /// Cycled over vehicles.
    pub zipf_exponents: Vec<f64>,
    #[serde(default = "full_presence")]
    pub presence: f64,
}

fn full_presence() -> f64 {
    1.0
}

impl ScenarioGenerator {
    /// Vehicle `v` draws its speed and then its rank permutation from ChaCha8
    /// stream `v` of `seed`, so populations can be drawn in parallel and a
    /// vehicle's profile does not depend on how many others exist.
    pub fn realize(&self, library: &Library, rsu_count: usize, seed: u64) -> Result<Vec<VehicleProfile>> {
        if self.zipf_exponents.is_empty() {
            return Err(Error::Parameter("generator has no Zipf exponents".into()));
        }
        if let Some(e) = self.zipf_exponents.iter().find(|e| !(**e > 0.0)) {
            return Err(Error::Parameter(format!("Zipf exponent {e} is not positive")));
        }
        if !(0.0..=1.0).contains(&self.presence) {
            return Err(Error::Parameter(format!(
                "generator presence {} outside [0, 1]",
                self.presence
            )));
        }
        Ok((0..self.vehicle_count)
            .map(|v| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(v as u64);
                let velocity = self.velocity.sample(&mut rng);
                let exponent = self.zipf_exponents[v % self.zipf_exponents.len()];
                VehicleProfile {
                    id: v,
                    velocity,
                    presence: vec![self.presence; rsu_count],
                    demand: zipf_demand(library.item_count, exponent, &mut rng),
                }
            })
            .collect())
    }
}
