//! JSON scenario files.
//!
//! Every dimensioned field carries its unit in its name. Where two units are
//! accepted (`item_size_bytes` or `item_size_kbytes`, `velocity_kmh` or
//! `velocity_mps`, ...) exactly one must be given. Kilobytes are 1000 bytes.
//!
//! ```json
//! {
//!   "library": { "item_count": 20, "item_size_kbytes": 1000 },
//!   "rsus": [
//!     { "coverage_length_m": 50, "cache_capacity_files": 10,
//!       "service_rate_kbytes_per_s": 1000, "backhaul_latency_s": 1 }
//!   ],
//!   "generator": {
//!     "vehicle_count": 3, "velocity_mean_kmh": 55, "velocity_variance_kmh2": 10,
//!     "velocity_min_kmh": 10, "velocity_max_kmh": 120
//!   },
//!   "cost_factor": 0.01,
//!   "rng_seed": 1
//! }
//! ```
//!
//! Vehicles may be listed explicitly under `"vehicles"` instead of (or as
//! well as) being drawn from a `"generator"`; explicit vehicles win, and the
//! generator is kept for redrawing populations in sweeps.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mobility::{ScenarioGenerator, TruncatedGaussian, DEFAULT_ZIPF_EXPONENTS, KMH_PER_MPS};
use crate::model::{validate_scenario, Library, RsuConfig, Scenario, VehicleProfile, Violation};

const BYTES_PER_KB: f64 = 1000.0;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    library: LibraryFile,
    rsus: Vec<RsuFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    vehicles: Option<Vec<VehicleFile>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    generator: Option<GeneratorFile>,
    #[serde(default)]
    cost_factor: f64,
    #[serde(default)]
    rng_seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LibraryFile {
    item_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    item_size_bytes: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    item_size_kbytes: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RsuFile {
    coverage_length_m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cache_capacity_bytes: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cache_capacity_files: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    service_rate_bytes_per_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    service_rate_kbytes_per_s: Option<f64>,
    backhaul_latency_s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VehicleFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    velocity_kmh: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    velocity_mps: Option<f64>,
    /// Defaults to 1 at every RSU.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    presence: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    demand: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GeneratorFile {
    vehicle_count: usize,
    velocity_mean_kmh: f64,
    velocity_variance_kmh2: f64,
    velocity_min_kmh: f64,
    velocity_max_kmh: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    zipf_exponents: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    presence: Option<f64>,
}

fn one_of(
    field: &str,
    a: Option<f64>,
    a_unit: &str,
    b: Option<f64>,
    b_scale: f64,
    b_unit: &str,
    out: &mut Vec<Violation>,
) -> f64 {
    match (a, b) {
        (Some(x), None) => x,
        (None, Some(y)) => y * b_scale,
        (Some(_), Some(_)) => {
            out.push(Violation::new(
                field,
                format!("give either {field}_{a_unit} or {field}_{b_unit}, not both"),
            ));
            f64::NAN
        }
        (None, None) => {
            out.push(Violation::new(
                field,
                format!("missing; give {field}_{a_unit} or {field}_{b_unit}"),
            ));
            f64::NAN
        }
    }
}

impl ScenarioFile {
    fn into_scenario(self) -> Result<Scenario> {
        let mut violations = Vec::new();
        let item_size = one_of(
            "library.item_size",
            self.library.item_size_bytes,
            "bytes",
            self.library.item_size_kbytes,
            BYTES_PER_KB,
            "kbytes",
            &mut violations,
        );
        let library = Library {
            item_count: self.library.item_count,
            item_size,
        };

        let rsus: Vec<RsuConfig> = self
            .rsus
            .iter()
            .enumerate()
            .map(|(id, r)| RsuConfig {
                id,
                coverage_length: r.coverage_length_m,
                cache_capacity: one_of(
                    &format!("rsus[{id}].cache_capacity"),
                    r.cache_capacity_bytes,
                    "bytes",
                    r.cache_capacity_files,
                    item_size,
                    "files",
                    &mut violations,
                ),
                service_rate: one_of(
                    &format!("rsus[{id}].service_rate"),
                    r.service_rate_bytes_per_s,
                    "bytes_per_s",
                    r.service_rate_kbytes_per_s,
                    BYTES_PER_KB,
                    "kbytes_per_s",
                    &mut violations,
                ),
                backhaul_latency: r.backhaul_latency_s,
            })
            .collect();

        let generator = match &self.generator {
            Some(g) => match g.to_generator() {
                Ok(g) => Some(g),
                Err(e) => {
                    violations.push(Violation::new("generator", e.to_string()));
                    None
                }
            },
            None => None,
        };

        let vehicles = match (&self.vehicles, &generator) {
            (Some(list), _) => list
                .iter()
                .enumerate()
                .map(|(id, v)| v.to_profile(id, &library, rsus.len(), &mut violations))
                .collect(),
            (None, Some(g)) if violations.is_empty() => g.realize(&library, rsus.len(), self.rng_seed)?,
            (None, Some(_)) => Vec::new(),
            (None, None) => {
                if self.generator.is_none() {
                    violations.push(Violation::new("vehicles", "no vehicles listed and no generator given"));
                }
                Vec::new()
            }
        };

        let scenario = Scenario {
            library,
            rsus,
            vehicles,
            cost_factor: self.cost_factor,
            rng_seed: self.rng_seed,
            generator,
        };
        // Fields already reported by the conversion hold placeholders.
        for v in validate_scenario(&scenario) {
            if !violations.iter().any(|seen| seen.field == v.field) {
                violations.push(v);
            }
        }
        match violations.is_empty() {
            true => Ok(scenario),
            false => Err(Error::Invalid(violations)),
        }
    }

    fn from_scenario(scenario: &Scenario) -> Self {
        ScenarioFile {
            library: LibraryFile {
                item_count: scenario.library.item_count,
                item_size_bytes: Some(scenario.library.item_size),
                item_size_kbytes: None,
            },
            rsus: scenario
                .rsus
                .iter()
                .map(|r| RsuFile {
                    coverage_length_m: r.coverage_length,
                    cache_capacity_bytes: Some(r.cache_capacity),
                    cache_capacity_files: None,
                    service_rate_bytes_per_s: Some(r.service_rate),
                    service_rate_kbytes_per_s: None,
                    backhaul_latency_s: r.backhaul_latency,
                })
                .collect(),
            vehicles: Some(
                scenario
                    .vehicles
                    .iter()
                    .map(|v| VehicleFile {
                        velocity_kmh: None,
                        velocity_mps: Some(v.velocity),
                        presence: Some(v.presence.clone()),
                        demand: Some(v.demand.clone()),
                    })
                    .collect(),
            ),
            generator: scenario.generator.as_ref().map(GeneratorFile::from_generator),
            cost_factor: scenario.cost_factor,
            rng_seed: scenario.rng_seed,
        }
    }
}

impl VehicleFile {
    fn to_profile(&self, id: usize, library: &Library, rsu_count: usize, out: &mut Vec<Violation>) -> VehicleProfile {
        let velocity = one_of(
            &format!("vehicles[{id}].velocity"),
            self.velocity_mps,
            "mps",
            self.velocity_kmh,
            1.0 / KMH_PER_MPS,
            "kmh",
            out,
        );
        let demand = match &self.demand {
            Some(d) => d.clone(),
            None => {
                out.push(Violation::new(
                    format!("vehicles[{id}].demand"),
                    format!("vehicle {id} has no demand vector"),
                ));
                vec![0.0; library.item_count]
            }
        };
        VehicleProfile {
            id,
            velocity,
            presence: self.presence.clone().unwrap_or_else(|| vec![1.0; rsu_count]),
            demand,
        }
    }
}

impl GeneratorFile {
    fn to_generator(&self) -> Result<ScenarioGenerator> {
        let kmh = TruncatedGaussian::new(
            self.velocity_mean_kmh,
            self.velocity_variance_kmh2,
            self.velocity_min_kmh,
            self.velocity_max_kmh,
        )?;
        Ok(ScenarioGenerator {
            vehicle_count: self.vehicle_count,
            velocity: kmh.scaled(1.0 / KMH_PER_MPS)?,
            zipf_exponents: self
                .zipf_exponents
                .clone()
                .unwrap_or_else(|| DEFAULT_ZIPF_EXPONENTS.to_vec()),
            presence: self.presence.unwrap_or(1.0),
        })
    }

    fn from_generator(g: &ScenarioGenerator) -> Self {
        let v = g.velocity;
        GeneratorFile {
            vehicle_count: g.vehicle_count,
            velocity_mean_kmh: v.mean() * KMH_PER_MPS,
            velocity_variance_kmh2: v.variance() * KMH_PER_MPS * KMH_PER_MPS,
            velocity_min_kmh: v.lower() * KMH_PER_MPS,
            velocity_max_kmh: v.upper() * KMH_PER_MPS,
            zipf_exponents: Some(g.zipf_exponents.clone()),
            presence: Some(g.presence),
        }
    }
}

/// Parses and validates a scenario from JSON text; `origin` names the
/// source in error messages.
pub fn parse_scenario(text: &str, origin: &Path) -> Result<Scenario> {
    let file: ScenarioFile = serde_json::from_str(text).map_err(|e| Error::Parse {
        path: origin.to_path_buf(),
        message: e.to_string(),
    })?;
    file.into_scenario()
}

/// Reads, converts to SI units, and validates a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse_scenario(&text, path)
}

/// Scenario as JSON in the file format, vehicles listed explicitly in SI units.
pub fn scenario_to_json(scenario: &Scenario) -> String {
    serde_json::to_string_pretty(&ScenarioFile::from_scenario(scenario)).expect("scenario files always serialize")
}

pub fn save_scenario(scenario: &Scenario, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, scenario_to_json(scenario) + "\n")?;
    Ok(())
}
