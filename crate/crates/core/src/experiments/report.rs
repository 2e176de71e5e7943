//! Multi-seed experiment records and their file forms.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::baselines::{evaluate_baselines, BaselineReport};
use crate::datasets::Dataset;
use crate::evolution::{EvolutionParams, RunResult};
use crate::fitness::chromosome_fitness;
use crate::genome::export_dot;
use crate::{Error, Result};

use super::{run_seeds, summarize, SeedSummary};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum OutputFormat {
    Csv,
    Json,
    Dot,
}

impl OutputFormat {
    pub const ALL: [OutputFormat; 3] = [OutputFormat::Csv, OutputFormat::Json, OutputFormat::Dot];

    /// Comma-separated names; `all` selects every format.
    pub fn parse_list(s: &str) -> Result<Vec<OutputFormat>> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            if part == "all" {
                out.extend(Self::ALL);
            } else {
                out.push(part.parse()?);
            }
        }
        if out.is_empty() {
            return Err(Error::input("no output format given"));
        }
        out.sort();
        out.dedup();
        Ok(out)
    }
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            "dot" => Ok(OutputFormat::Dot),
            other => Err(Error::input(format!("unknown format `{other}` (expected csv, json, dot or all)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DatasetInfo {
    pub name: String,
    pub source: Option<PathBuf>,
    pub cases: usize,
    pub features: Vec<String>,
    pub effort: String,
    pub loaded_rows: usize,
    pub dropped_rows: Vec<usize>,
    pub warnings: Vec<String>,
    pub min_max_scaled: bool,
}

impl DatasetInfo {
    pub fn of(dataset: &Dataset) -> Self {
        let p = dataset.provenance();
        DatasetInfo {
            name: dataset.name().to_string(),
            source: p.source.clone(),
            cases: dataset.len(),
            features: dataset.feature_names().to_vec(),
            effort: dataset.effort_name().to_string(),
            loaded_rows: p.loaded_rows,
            dropped_rows: p.dropped_rows.clone(),
            warnings: p.warnings.clone(),
            min_max_scaled: p.min_max_scaled,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeedResult {
    pub seed_index: usize,
    pub seed: u64,
    pub best_fitness: f64,
    pub generation_of_best: usize,
    pub evaluations: u64,
    pub best_gene_index: usize,
    pub best_expression: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FoldResult {
    pub fold: usize,
    pub train_cases: usize,
    pub test_cases: usize,
    /// Best-of-seeds fitness on the training part.
    pub train_fitness: f64,
    /// The same expression scored on the held-out part.
    pub test_fitness: f64,
    pub expression: String,
}

/// Everything a `run` produces.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub dataset: DatasetInfo,
    pub metric: String,
    pub generation_unit: String,
    pub steps_per_generation: usize,
    /// Parameters shared by all seeds; `seed` is the master seed.
    pub params_echo: EvolutionParams,
    pub seeds: Vec<SeedResult>,
    pub summary: SeedSummary,
    /// Full record of the best seed, trace included.
    pub best_run: RunResult,
    pub baselines: BaselineReport,
    pub cross_validation: Option<Vec<FoldResult>>,
}

/// Runs `seeds` seeds of `params` on `dataset` (master seed
/// `params.seed`), scores the baselines and optionally repeats the search
/// on `folds` train/test splits.
pub fn run_experiment(
    dataset: &Dataset,
    size_column: Option<&str>,
    params: &EvolutionParams,
    seeds: usize,
    folds: Option<usize>,
) -> Result<RunReport> {
    params.validate()?;
    let primitives = dataset.primitive_set()?;
    let runs = run_seeds(params, dataset, &primitives, params.seed, seeds)?;
    let summary = summarize(&runs)?;
    let seed_results = runs
        .iter()
        .enumerate()
        .map(|(i, r)| SeedResult {
            seed_index: i,
            seed: r.seed,
            best_fitness: r.best_fitness,
            generation_of_best: r.generation_of_best,
            evaluations: r.evaluations,
            best_gene_index: r.best_gene_index,
            best_expression: r.best_expression.infix(),
        })
        .collect();
    let cross_validation = match folds {
        None => None,
        Some(k) => Some(cross_validate(dataset, params, seeds, k)?),
    };
    Ok(RunReport {
        dataset: DatasetInfo::of(dataset),
        metric: params.metric.name().to_string(),
        generation_unit: params.generation_unit.to_string(),
        steps_per_generation: params.steps_per_generation(),
        params_echo: params.clone(),
        seeds: seed_results,
        best_run: runs[summary.best_seed_index].clone(),
        summary,
        baselines: evaluate_baselines(dataset, size_column, params.metric)?,
        cross_validation,
    })
}

fn cross_validate(dataset: &Dataset, params: &EvolutionParams, seeds: usize, k: usize) -> Result<Vec<FoldResult>> {
    let primitives = dataset.primitive_set()?;
    dataset
        .k_folds(k, params.seed)?
        .into_iter()
        .enumerate()
        .map(|(fold, (train, test))| {
            let runs = run_seeds(params, &train, &primitives, params.seed, seeds)?;
            let best = &runs[summarize(&runs)?.best_seed_index];
            let on_test = chromosome_fitness(&best.best_chromosome, &test, params.metric, &params.arithmetic)?;
            Ok(FoldResult {
                fold: fold + 1,
                train_cases: train.len(),
                test_cases: test.len(),
                train_fitness: best.best_fitness,
                test_fitness: on_test.per_gene_fitness[best.best_gene_index],
                expression: best.best_expression.infix(),
            })
        })
        .collect()
}

impl RunReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// One line per seed.
    pub fn seeds_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "dataset",
            "metric",
            "seed_index",
            "seed",
            "best_fitness",
            "generation_of_best",
            "evaluations",
            "best_expression",
        ])
        .expect("in-memory write");
        for s in &self.seeds {
            w.write_record([
                self.dataset.name.clone(),
                self.metric.clone(),
                s.seed_index.to_string(),
                s.seed.to_string(),
                s.best_fitness.to_string(),
                s.generation_of_best.to_string(),
                s.evaluations.to_string(),
                s.best_expression.clone(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }

    /// Best fitness, median, and both baselines on one line each.
    pub fn summary_text(&self) -> String {
        let mut out = String::new();
        let b = &self.baselines;
        writeln!(out, "dataset {} ({} cases), metric {}", self.dataset.name, self.dataset.cases, self.metric).unwrap();
        writeln!(
            out,
            "best of {}: {} (seed index {}, generation {})",
            self.summary.runs,
            self.summary.best_fitness,
            self.summary.best_seed_index,
            self.best_run.generation_of_best
        )
        .unwrap();
        writeln!(out, "median: {}", self.summary.median_fitness).unwrap();
        writeln!(out, "mean predictor: {}", b.mean_fitness).unwrap();
        match (&b.power_law, b.power_law_fitness) {
            (Some(m), Some(f)) => writeln!(out, "power law {} * size^{}: {}", m.a, m.b, f).unwrap(),
            _ => writeln!(out, "power law: n/a ({})", b.power_law_error.as_deref().unwrap_or("unavailable")).unwrap(),
        }
        writeln!(out, "expression: {}", self.best_run.best_expression).unwrap();
        out
    }
}

/// Writes the selected formats into `dir` and returns the paths written:
/// `run.json`; `seeds.csv` and `trace.csv`; `best.dot`.
pub fn emit_report(report: &RunReport, dir: &Path, formats: &[OutputFormat]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files: Vec<(&str, String)> = Vec::new();
    for format in formats {
        match format {
            OutputFormat::Json => files.push(("run.json", report.to_json()?)),
            OutputFormat::Csv => {
                files.push(("seeds.csv", report.seeds_csv()));
                files.push(("trace.csv", report.best_run.trace_csv()));
            }
            OutputFormat::Dot => files.push(("best.dot", export_dot(&report.best_run.best_expression))),
        }
    }
    let mut written = Vec::with_capacity(files.len());
    for (name, text) in files {
        let path = dir.join(name);
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
