use std::fs;
use std::path::{Path, PathBuf};

use super::config::ExperimentConfig;
use super::pipeline::run_experiment;
use super::RunError;
use crate::error::Error;
use crate::metrics::ReportRow;

/// An experiment name with its parsed config, or the reason it failed to parse.
pub type GridEntry = (String, Result<ExperimentConfig, RunError>);

#[derive(Debug)]
pub struct GridFailure {
    pub name: String,
    pub error: RunError,
}

#[derive(Debug, Default)]
pub struct GridOutcome {
    /// Successful experiments, sorted by UAcc descending (stable).
    pub rows: Vec<ReportRow>,
    pub failures: Vec<GridFailure>,
}

/// All `*.json` files in `dir`, sorted by file name, with seed lists
/// expanded. Output directories move under `output_root` when given.
/// Unparseable files are kept as failures.
pub fn load_grid_configs(
    dir: &Path,
    output_root: Option<&Path>,
) -> Result<Vec<GridEntry>, RunError> {
    let entries = fs::read_dir(dir).map_err(|e| RunError::config(Error::io(dir, e)))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let mut out = Vec::new();
    for p in paths {
        match ExperimentConfig::from_file(&p) {
            Ok(mut c) => {
                if let Some(root) = output_root {
                    c.reroot_output(root);
                }
                out.extend(
                    c.expand_seeds()
                        .into_iter()
                        .map(|c| (c.experiment_name(), Ok(c))),
                )
            }
            Err(e) => out.push((p.display().to_string(), Err(e))),
        }
    }
    Ok(out)
}

/// Run experiments one after another. A failing experiment is recorded and
/// does not stop the others.
pub fn run_grid(configs: Vec<GridEntry>) -> GridOutcome {
    let mut out = GridOutcome::default();
    for (name, config) in configs {
        match config.and_then(|c| run_experiment(&c)) {
            Ok(o) => out.rows.push(o.row()),
            Err(error) => out.failures.push(GridFailure { name, error }),
        }
    }
    out.rows.sort_by(|a, b| {
        b.report
            .uacc
            .partial_cmp(&a.report.uacc)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    out
}
