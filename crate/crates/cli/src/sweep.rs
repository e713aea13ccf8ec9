//! Parameter-grid sweeps: every Cartesian point runs the preset with the
//! point's overrides applied; failures are recorded per point.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;

use crate::output::{Cell, RunOutput};
use crate::params::Overrides;
use crate::presets::Preset;
use crate::CliError;

/// Grid file: JSON object mapping parameter names to value lists.
pub fn parse_grid(path: &Path) -> Result<BTreeMap<String, Vec<f64>>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read grid {path:?}: {e}")))?;
    let grid: BTreeMap<String, Vec<f64>> = serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("invalid grid {path:?}: {e}")))?;
    if grid.is_empty() || grid.values().any(|v| v.is_empty()) {
        return Err(CliError::Validation(
            "grid must define at least one parameter with at least one value".into(),
        ));
    }
    Ok(grid)
}

/// Cartesian product in row-major order over the (sorted) grid keys.
pub fn grid_points(grid: &BTreeMap<String, Vec<f64>>) -> Vec<Vec<(String, f64)>> {
    let keys: Vec<&String> = grid.keys().collect();
    let mut points: Vec<Vec<(String, f64)>> = vec![Vec::new()];
    for key in keys {
        let mut next = Vec::new();
        for point in &points {
            for &value in &grid[key] {
                let mut p = point.clone();
                p.push((key.clone(), value));
                next.push(p);
            }
        }
        points = next;
    }
    points
}

pub fn run_sweep(
    preset: Preset,
    base: &Overrides,
    grid: &BTreeMap<String, Vec<f64>>,
    out_dir: &Path,
    workers: Option<usize>,
) -> Result<(), CliError> {
    let points = grid_points(grid);
    let width = points.len().to_string().len().max(3);

    let run_point = |(idx, point): (usize, &Vec<(String, f64)>)| -> (usize, String, Result<(), CliError>) {
        let sub = format!("point_{idx:0width$}");
        let result = (|| {
            let mut overrides = base.clone();
            for (key, value) in point {
                overrides.set(key, *value)?;
            }
            let resolved = preset.resolve(&overrides);
            let mut out = RunOutput::create(&out_dir.join(&sub))?;
            preset.execute(&resolved, &overrides, &mut out)?;
            out.finalize_manifest("sweep-point", preset.name(), &resolved.echo())?;
            Ok(())
        })();
        (idx, sub, result)
    };

    let results: Vec<(usize, String, Result<(), CliError>)> = match workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| CliError::Validation(format!("worker pool: {e}")))?
            .install(|| points.par_iter().enumerate().map(run_point).collect()),
        None => points.par_iter().enumerate().map(run_point).collect(),
    };

    // Single writer keeps the output deterministic.
    let mut header: Vec<&str> = grid.keys().map(String::as_str).collect();
    header.push("status");
    header.push("out_dir");
    let mut rows = Vec::new();
    for ((_, sub, result), point) in results.iter().zip(&points) {
        let mut row: Vec<Cell> = point.iter().map(|&(_, v)| Cell::Float(v)).collect();
        row.push(Cell::Text(match result {
            Ok(()) => "ok".into(),
            Err(e) => format!("error: {e}"),
        }));
        row.push(Cell::Text(sub.clone()));
        rows.push(row);
    }
    let mut top = RunOutput::create(out_dir)?;
    top.write_csv("sweep.csv", &header, &rows)?;
    let mut params = BTreeMap::new();
    for (key, values) in grid {
        params.insert(
            format!("grid.{key}"),
            format!(
                "[{}]",
                values
                    .iter()
                    .map(|v| v.to_string())
                    .collect::<Vec<_>>()
                    .join(", ")
            ),
        );
    }
    top.finalize_manifest("sweep", preset.name(), &params)?;
    Ok(())
}
