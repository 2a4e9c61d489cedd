//! Scenario files, sweeps and their outputs.

pub mod config;
pub mod output;
pub mod sweep;

pub use config::{load_scenario, parse_scenario, save_scenario, scenario_to_json};
pub use output::{emit_csv, emit_plot, write_csv, PlotMetric, RunMetadata};
pub use sweep::{
    fill_minimizer, fill_objective_curve, load_sweep_spec, parse_sweep_spec, percentage_gain, run_sweep,
    run_sweep_with, summarize, CellSummary, FillPoint, Scheme, SkippedCell, Summary, SweepOutcome, SweepRow, SweepSpec,
};
