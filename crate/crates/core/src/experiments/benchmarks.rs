//! Opening datasets by path and running the six-benchmark suite.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::datasets::{load_clean, Dataset, DatasetSchema, BENCHMARKS};
use crate::evolution::EvolutionParams;
use crate::{Error, Result};

use super::reference::{compare_with_reference, Comparison, Measured, REFERENCE};
use super::report::{run_experiment, RunReport};

/// How to read one CSV.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DatasetRequest {
    pub path: PathBuf,
    /// Built-in schema; inferred from the file stem when absent.
    pub schema: Option<String>,
    /// Effort column, overriding the schema's.
    pub effort_column: Option<String>,
    pub size_column: Option<String>,
    pub min_max_scale: bool,
}

/// A cleaned dataset and the size column for the power-law baseline.
pub fn open_dataset(request: &DatasetRequest) -> Result<(Dataset, Option<String>)> {
    let stem = request
        .path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("dataset")
        .to_string();
    let mut schema = match (&request.schema, &request.effort_column) {
        (Some(name), _) => DatasetSchema::builtin(name)?,
        (None, _) if BENCHMARKS.contains(&stem.as_str()) => DatasetSchema::builtin(&stem)?,
        (None, Some(col)) => DatasetSchema::custom(stem.clone(), col.clone()),
        (None, None) => {
            return Err(Error::input(format!(
                "`{}` is not a built-in dataset name; pass a schema or an effort column",
                request.path.display()
            )))
        }
    };
    if let Some(col) = &request.effort_column {
        schema.effort_column = col.clone();
    }
    let dataset = load_clean(&request.path, &schema)?;
    let size_column = match &request.size_column {
        Some(col) => {
            let idx = dataset
                .feature_index(col)
                .ok_or_else(|| Error::input(format!("size column `{col}` is not a feature of `{}`", dataset.name())))?;
            Some(dataset.feature_names()[idx].clone())
        }
        None => schema.resolve_size_column(&dataset),
    };
    let dataset = if request.min_max_scale { dataset.min_max_scaled() } else { dataset };
    Ok((dataset, size_column))
}

/// `<dir>/<name>.csv` for each built-in benchmark present.
pub fn locate_benchmarks(dir: &Path) -> Vec<(String, PathBuf)> {
    BENCHMARKS
        .iter()
        .map(|name| (name.to_string(), dir.join(format!("{name}.csv"))))
        .filter(|(_, p)| p.is_file())
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchmarkRow {
    pub dataset: String,
    pub cases: usize,
    pub best_fitness: f64,
    pub median_fitness: f64,
    pub mean_baseline: f64,
    pub power_law_baseline: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchmarkSuite {
    pub rows: Vec<BenchmarkRow>,
    pub reports: Vec<RunReport>,
    pub comparison: Comparison,
}

impl BenchmarkSuite {
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("dataset,cases,best_fitness,median_fitness,mean_baseline,power_law_baseline\n");
        for r in &self.rows {
            let pl = r.power_law_baseline.map(|v| v.to_string()).unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{},{},{}",
                r.dataset, r.cases, r.best_fitness, r.median_fitness, r.mean_baseline, pl
            )
            .unwrap();
        }
        out
    }
}

/// Runs `seeds` seeds of `params` on every benchmark CSV found in `dir` and
/// compares the best-of fitness with the reference table.
pub fn run_benchmarks(dir: &Path, params: &EvolutionParams, seeds: usize) -> Result<BenchmarkSuite> {
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for (name, path) in locate_benchmarks(dir) {
        let (dataset, size_column) = open_dataset(&DatasetRequest {
            path,
            schema: Some(name.clone()),
            ..DatasetRequest::default()
        })?;
        let report = run_experiment(&dataset, size_column.as_deref(), params, seeds, None)?;
        rows.push(BenchmarkRow {
            dataset: name,
            cases: dataset.len(),
            best_fitness: report.summary.best_fitness,
            median_fitness: report.summary.median_fitness,
            mean_baseline: report.baselines.mean_fitness,
            power_law_baseline: report.baselines.power_law_fitness,
        });
        reports.push(report);
    }
    let measured: Vec<Measured> = rows
        .iter()
        .zip(&reports)
        .map(|(r, rep)| Measured {
            dataset: r.dataset.clone(),
            fitness: r.best_fitness,
            generation_of_best: rep.best_run.generation_of_best,
        })
        .collect();
    let comparison = compare_with_reference(&measured, &REFERENCE)?;
    Ok(BenchmarkSuite { rows, reports, comparison })
}
