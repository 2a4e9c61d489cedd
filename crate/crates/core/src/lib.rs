//! Proactive content caching at roadside units (RSUs).
//!
//! Vehicles cross a chain of RSUs, each covering a stretch of road. An RSU
//! that knows roughly who is coming and what they want can prefetch items
//! into its cache, so that during the short contact window vehicles are
//! served over the air instead of waiting on the backhaul.
//!
//! * [`model`] and [`mobility`]: scenario description, speed and demand laws.
//! * [`delay`]: expected download delay of a cohort under a placement.
//! * [`solver`]: greedy and exhaustive placement, with and without
//!   cooperation between neighbouring RSUs.
//! * [`experiment`]: scenario files, parameter sweeps, CSV and SVG output.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod delay;
pub mod error;
pub mod exec;
pub mod experiment;
pub mod mobility;
pub mod model;
pub mod numeric;
pub mod solver;

pub use error::{Error, Result};
pub use exec::Exec;
pub use model::{CachePolicy, DelayReport, ItemSet, Library, RsuConfig, Scenario, VehicleProfile};
