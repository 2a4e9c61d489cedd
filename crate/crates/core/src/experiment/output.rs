//! CSV tables and SVG plots of sweep results.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use plotters::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::Scenario;

use super::sweep::{summarize, CellSummary, Scheme, SweepRow, SweepSpec};

/// Points of one plotted series: cache size, mean, standard deviation.
type Series = Vec<(f64, f64, f64)>;

pub const CSV_HEADER: [&str; 8] = [
    "scheme",
    "cache_size",
    "gamma",
    "replication",
    "per_file_delay",
    "caching_gain",
    "objective",
    "cached_count",
];

/// Nine significant digits in scientific notation.
pub fn format_real(x: f64) -> String {
    format!("{x:.8e}")
}

pub fn write_csv<W: Write>(rows: &[SweepRow], writer: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(CSV_HEADER)?;
    for r in rows {
        out.write_record([
            r.scheme.name().to_string(),
            r.cache_size.to_string(),
            format_real(r.gamma),
            r.replication.to_string(),
            format_real(r.per_file_delay),
            format_real(r.caching_gain),
            format_real(r.objective_value),
            r.cached_count.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn emit_csv(rows: &[SweepRow], path: impl AsRef<Path>) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::Parameter("no sweep rows to write".into()));
    }
    write_csv(rows, std::fs::File::create(path)?)
}

/// Record of the settings behind a sweep, stored next to its table.
#[derive(Debug, Clone, Serialize)]
pub struct RunMetadata {
    pub base_seed: u64,
    pub replications: usize,
    pub seed_rule: &'static str,
    pub zipf_exponents: Option<Vec<f64>>,
    pub vehicle_count: usize,
    pub rsu_count: usize,
    pub item_count: usize,
    pub units: BTreeMap<&'static str, &'static str>,
    pub skipped_cells: usize,
}

impl RunMetadata {
    pub fn new(scenario: &Scenario, spec: &SweepSpec, skipped_cells: usize) -> Self {
        let units = [
            ("per_file_delay", "s"),
            ("caching_gain", "s"),
            ("objective", "s"),
            ("cache_size", "files"),
            ("gamma", "s per cached file"),
        ]
        .into_iter()
        .collect();
        RunMetadata {
            base_seed: spec.base_seed,
            replications: spec.replications,
            seed_rule: "replication r uses seed base_seed + r",
            zipf_exponents: scenario.generator.as_ref().map(|g| g.zipf_exponents.clone()),
            vehicle_count: scenario.vehicles.len(),
            rsu_count: scenario.rsus.len(),
            item_count: scenario.library.item_count,
            units,
            skipped_cells,
        }
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("metadata always serializes");
        std::fs::write(path, text + "\n")?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotMetric {
    PerFileDelay,
    Objective,
}

impl PlotMetric {
    fn label(self) -> &'static str {
        match self {
            PlotMetric::PerFileDelay => "per-file delay (s)",
            PlotMetric::Objective => "objective",
        }
    }

    fn pick(self, cell: &CellSummary) -> (f64, f64) {
        let s = match self {
            PlotMetric::PerFileDelay => cell.per_file_delay,
            PlotMetric::Objective => cell.objective_value,
        };
        (s.mean, s.std_dev)
    }
}

/// Mean and standard-deviation series against cache size, one per scheme
/// (and per cost factor when several were swept).
pub fn emit_plot(rows: &[SweepRow], path: impl AsRef<Path>, metric: PlotMetric) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::Parameter("no sweep rows to plot".into()));
    }
    let cells = summarize(rows);
    let mut gammas: Vec<u64> = cells.iter().map(|c| c.gamma.to_bits()).collect();
    gammas.sort_unstable();
    gammas.dedup();
    let label_gamma = gammas.len() > 1;

    let mut series: BTreeMap<(Scheme, u64), Series> = BTreeMap::new();
    for cell in &cells {
        let (mean, sd) = metric.pick(cell);
        series
            .entry((cell.scheme, cell.gamma.to_bits()))
            .or_default()
            .push((cell.cache_size as f64, mean, sd));
    }

    let xs = cells.iter().map(|c| c.cache_size as f64);
    let (x_lo, x_hi) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
    let (y_lo, y_hi) = series
        .values()
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, m, sd)| {
            (lo.min(m - sd), hi.max(m + sd))
        });
    let pad = ((y_hi - y_lo) * 0.05).max(1e-6);
    let x_range = if x_hi > x_lo {
        x_lo..x_hi
    } else {
        x_lo - 1.0..x_hi + 1.0
    };

    let plot_err = |e: &dyn std::fmt::Display| Error::Plot(e.to_string());
    let root = SVGBackend::new(path.as_ref(), (800, 560)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| plot_err(&e))?;
    let mut chart = ChartBuilder::on(&root)
        .margin(16)
        .x_label_area_size(40)
        .y_label_area_size(60)
        .build_cartesian_2d(x_range, (y_lo - pad)..(y_hi + pad))
        .map_err(|e| plot_err(&e))?;
    chart
        .configure_mesh()
        .x_desc("cache size (files)")
        .y_desc(metric.label())
        .draw()
        .map_err(|e| plot_err(&e))?;

    for (index, ((scheme, gamma_bits), points)) in series.iter().enumerate() {
        let color = Palette99::pick(index).to_rgba();
        let name = match label_gamma {
            true => format!("{scheme}, gamma={}", f64::from_bits(*gamma_bits)),
            false => scheme.to_string(),
        };
        chart
            .draw_series(LineSeries::new(
                points.iter().map(|&(x, m, _)| (x, m)),
                color.stroke_width(2),
            ))
            .map_err(|e| plot_err(&e))?
            .label(name)
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], color.stroke_width(2)));
        chart
            .draw_series(
                points
                    .iter()
                    .map(|&(x, m, sd)| ErrorBar::new_vertical(x, m - sd, m, m + sd, color.filled(), 6)),
            )
            .map_err(|e| plot_err(&e))?;
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(|e| plot_err(&e))?;
    root.present().map_err(|e| plot_err(&e))?;
    Ok(())
}
