//! Population-size by generation-count sweeps.
//!
//! Cells that share a population size and seed index share a random stream,
//! so each such group is evolved once up to its longest generation count and
//! the shorter cells are read off along the way. Finished cells can be
//! cached on disk, keyed by a hash of their parameters and the data, and a
//! rerun only computes the missing ones.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::datasets::Dataset;
use crate::evolution::{EvolutionParams, Evolver};
use crate::genome::PrimitiveSet;
use crate::{Error, Result};

use super::{median, seed_for, DEFAULT_SEEDS};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub population_sizes: Vec<usize>,
    pub generation_counts: Vec<usize>,
    /// Seeds per (population, generations) cell.
    pub seeds: usize,
    pub master_seed: u64,
    /// Everything except population size, generations and seed.
    pub base: EvolutionParams,
}

impl GridSpec {
    /// Populations 10..40 by generations 25..250.
    pub fn test1(base: EvolutionParams) -> Self {
        GridSpec {
            population_sizes: vec![10, 20, 30, 40],
            generation_counts: vec![25, 50, 75, 150, 250],
            seeds: DEFAULT_SEEDS,
            master_seed: base.seed,
            base,
        }
    }

    /// Populations and generations both 50, 100, ..., 500.
    pub fn test2(base: EvolutionParams) -> Self {
        let wide: Vec<usize> = (1..=10).map(|i| i * 50).collect();
        GridSpec {
            population_sizes: wide.clone(),
            generation_counts: wide,
            seeds: DEFAULT_SEEDS,
            master_seed: base.seed,
            base,
        }
    }

    pub fn preset(name: &str, base: EvolutionParams) -> Result<Self> {
        match name {
            "test1" => Ok(Self::test1(base)),
            "test2" => Ok(Self::test2(base)),
            other => Err(Error::input(format!("unknown grid preset `{other}` (expected test1 or test2)"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.population_sizes.is_empty() || self.generation_counts.is_empty() {
            return Err(Error::input("grid needs at least one population size and one generation count"));
        }
        if self.seeds == 0 {
            return Err(Error::input("grid needs at least one seed"));
        }
        for &pop in &self.population_sizes {
            self.cell_params(pop, 0, 0).validate()?;
        }
        Ok(())
    }

    /// All cells in (population, generations, seed index) order. Duplicate
    /// list entries collapse.
    pub fn cells(&self) -> Vec<CellSpec> {
        let mut pops = self.population_sizes.clone();
        pops.sort_unstable();
        pops.dedup();
        let mut gens = self.generation_counts.clone();
        gens.sort_unstable();
        gens.dedup();
        let mut cells = Vec::with_capacity(pops.len() * gens.len() * self.seeds);
        for &population_size in &pops {
            for &generations in &gens {
                for seed_index in 0..self.seeds {
                    cells.push(CellSpec {
                        population_size,
                        generations,
                        seed_index,
                        seed: seed_for(self.master_seed, population_size, seed_index),
                    });
                }
            }
        }
        cells
    }

    fn cell_params(&self, population_size: usize, generations: usize, seed: u64) -> EvolutionParams {
        EvolutionParams {
            population_size,
            generations,
            seed,
            ..self.base.clone()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellSpec {
    pub population_size: usize,
    pub generations: usize,
    pub seed_index: usize,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    Ok,
    Failed,
}

/// Outcome of one cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub population_size: usize,
    pub generations: usize,
    pub seed_index: usize,
    pub seed: u64,
    pub status: CellStatus,
    pub best_fitness: Option<f64>,
    pub generation_of_best: Option<usize>,
    pub evaluations: Option<u64>,
    pub best_expression: Option<String>,
    pub error: Option<String>,
}

impl GridRow {
    fn failed(cell: &CellSpec, message: String) -> Self {
        GridRow {
            population_size: cell.population_size,
            generations: cell.generations,
            seed_index: cell.seed_index,
            seed: cell.seed,
            status: CellStatus::Failed,
            best_fitness: None,
            generation_of_best: None,
            evaluations: None,
            best_expression: None,
            error: Some(message),
        }
    }

    fn cell(&self) -> CellSpec {
        CellSpec {
            population_size: self.population_size,
            generations: self.generations,
            seed_index: self.seed_index,
            seed: self.seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellTiming {
    pub population_size: usize,
    pub generations: usize,
    pub seed_index: usize,
    pub wall_time_secs: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridOutcome {
    pub dataset: String,
    pub metric: String,
    /// Sorted by cell.
    pub rows: Vec<GridRow>,
    /// Only cells computed in this invocation.
    pub timings: Vec<CellTiming>,
    pub computed: usize,
    pub reused: usize,
}

#[derive(Serialize, Deserialize)]
struct CachedCell {
    key: String,
    row: GridRow,
}

/// Runs every cell of `spec`. With `cache_dir`, finished cells are stored
/// there and reused on the next call.
pub fn run_grid(
    spec: &GridSpec,
    dataset: &Dataset,
    primitives: &PrimitiveSet,
    cache_dir: Option<&Path>,
) -> Result<GridOutcome> {
    run_cells(spec, &spec.cells(), dataset, primitives, cache_dir)
}

/// Runs the given cells of `spec` in any order. The outcome depends only on
/// the set of cells, not on their order.
pub fn run_cells(
    spec: &GridSpec,
    cells: &[CellSpec],
    dataset: &Dataset,
    primitives: &PrimitiveSet,
    cache_dir: Option<&Path>,
) -> Result<GridOutcome> {
    spec.validate()?;
    let fingerprint = dataset_fingerprint(dataset);
    if let Some(dir) = cache_dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }

    let mut rows = Vec::with_capacity(cells.len());
    let mut pending: BTreeMap<(usize, usize, u64), Vec<CellSpec>> = BTreeMap::new();
    for cell in cells {
        let key = cell_key(spec, cell, &fingerprint);
        match cache_dir.and_then(|dir| read_cached(&cache_path(dir, &key), &key, cell)) {
            Some(row) => rows.push(row),
            None => pending
                .entry((cell.population_size, cell.seed_index, cell.seed))
                .or_default()
                .push(*cell),
        }
    }
    let reused = rows.len();

    let groups: Vec<Vec<CellSpec>> = pending.into_values().collect();
    let computed: Vec<(GridRow, CellTiming)> = groups
        .par_iter()
        .map(|group| run_group(spec, group, dataset, primitives))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();

    let mut timings = Vec::with_capacity(computed.len());
    for (row, timing) in computed {
        if let (Some(dir), CellStatus::Ok) = (cache_dir, row.status) {
            let key = cell_key(spec, &row.cell(), &fingerprint);
            write_cached(&cache_path(dir, &key), &CachedCell { key, row: row.clone() })?;
        }
        rows.push(row);
        timings.push(timing);
    }
    rows.sort_by_key(|r| r.cell());
    rows.dedup_by_key(|r| r.cell());
    timings.sort_by_key(|t| (t.population_size, t.generations, t.seed_index));
    Ok(GridOutcome {
        dataset: dataset.name().to_string(),
        metric: spec.base.metric.name().to_string(),
        computed: timings.len(),
        reused,
        rows,
        timings,
    })
}

fn run_group(
    spec: &GridSpec,
    group: &[CellSpec],
    dataset: &Dataset,
    primitives: &PrimitiveSet,
) -> Vec<(GridRow, CellTiming)> {
    let first = group[0];
    let params = spec.cell_params(first.population_size, 0, first.seed);
    let checkpoints: Vec<usize> = group.iter().map(|c| c.generations).collect();
    let outcome = Evolver::new(params, dataset, primitives).and_then(|e| e.run_checkpoints_timed(&checkpoints));
    group
        .iter()
        .enumerate()
        .map(|(i, cell)| {
            let timing = |secs: f64| CellTiming {
                population_size: cell.population_size,
                generations: cell.generations,
                seed_index: cell.seed_index,
                wall_time_secs: secs,
            };
            match &outcome {
                Ok(results) => {
                    let (r, elapsed) = &results[i];
                    let row = GridRow {
                        population_size: cell.population_size,
                        generations: cell.generations,
                        seed_index: cell.seed_index,
                        seed: cell.seed,
                        status: CellStatus::Ok,
                        best_fitness: Some(r.best_fitness),
                        generation_of_best: Some(r.generation_of_best),
                        evaluations: Some(r.evaluations),
                        best_expression: Some(r.best_expression.infix()),
                        error: None,
                    };
                    (row, timing(elapsed.as_secs_f64()))
                }
                Err(e) => (GridRow::failed(cell, e.to_string()), timing(0.0)),
            }
        })
        .collect()
}

/// Hex SHA-256 of the data the runs see.
pub fn dataset_fingerprint(dataset: &Dataset) -> String {
    hex(&Sha256::digest(dataset.to_csv_string().as_bytes()))
}

/// Identity of a cell: its full parameter set plus the data fingerprint.
pub fn cell_key(spec: &GridSpec, cell: &CellSpec, fingerprint: &str) -> String {
    let params = spec.cell_params(cell.population_size, cell.generations, cell.seed);
    let canonical = serde_json::to_string(&params).expect("params serialize");
    let mut hasher = Sha256::new();
    hasher.update(fingerprint.as_bytes());
    hasher.update(b"\n");
    hasher.update(canonical.as_bytes());
    hex(&hasher.finalize())
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn cache_path(dir: &Path, key: &str) -> PathBuf {
    dir.join(format!("{key}.json"))
}

fn read_cached(path: &Path, key: &str, cell: &CellSpec) -> Option<GridRow> {
    let text = fs::read_to_string(path).ok()?;
    let cached: CachedCell = serde_json::from_str(&text).ok()?;
    (cached.key == key && cached.row.cell() == *cell && cached.row.status == CellStatus::Ok).then_some(cached.row)
}

fn write_cached(path: &Path, cell: &CachedCell) -> Result<()> {
    let tmp = path.with_extension("json.tmp");
    let text = serde_json::to_string_pretty(cell)?;
    fs::write(&tmp, text).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Median and best over the seeds of one (population, generations) cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub population_size: usize,
    pub generations: usize,
    pub runs_ok: usize,
    pub runs_failed: usize,
    pub median_fitness: Option<f64>,
    pub best_fitness: Option<f64>,
}

impl GridOutcome {
    pub fn summary(&self) -> Vec<CellSummary> {
        let mut groups: BTreeMap<(usize, usize), Vec<&GridRow>> = BTreeMap::new();
        for row in &self.rows {
            groups.entry((row.population_size, row.generations)).or_default().push(row);
        }
        groups
            .into_iter()
            .map(|((population_size, generations), rows)| {
                let ok: Vec<f64> = rows.iter().filter_map(|r| r.best_fitness).collect();
                CellSummary {
                    population_size,
                    generations,
                    runs_ok: ok.len(),
                    runs_failed: rows.len() - ok.len(),
                    median_fitness: median(&ok),
                    best_fitness: ok.iter().copied().reduce(f64::min),
                }
            })
            .collect()
    }

    /// Median best fitness per generation count, pooled over population
    /// sizes and seeds.
    pub fn median_by_generations(&self) -> Vec<(usize, f64)> {
        let mut groups: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        for row in &self.rows {
            if let Some(f) = row.best_fitness {
                groups.entry(row.generations).or_default().push(f);
            }
        }
        groups
            .into_iter()
            .filter_map(|(g, v)| median(&v).map(|m| (g, m)))
            .collect()
    }

    /// One line per cell, sorted; no timing columns.
    pub fn rows_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "dataset",
            "metric",
            "population_size",
            "generations",
            "seed_index",
            "seed",
            "status",
            "best_fitness",
            "generation_of_best",
            "evaluations",
            "best_expression",
            "error",
        ])
        .expect("in-memory write");
        for r in &self.rows {
            w.write_record([
                self.dataset.clone(),
                self.metric.clone(),
                r.population_size.to_string(),
                r.generations.to_string(),
                r.seed_index.to_string(),
                r.seed.to_string(),
                match r.status {
                    CellStatus::Ok => "ok".into(),
                    CellStatus::Failed => "failed".into(),
                },
                opt(r.best_fitness),
                opt(r.generation_of_best),
                opt(r.evaluations),
                r.best_expression.clone().unwrap_or_default(),
                r.error.clone().unwrap_or_default(),
            ])
            .expect("in-memory write");
        }
        finish(w)
    }

    /// Median and best-of per (population, generations): bar-chart data.
    pub fn summary_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "dataset",
            "metric",
            "population_size",
            "generations",
            "runs_ok",
            "runs_failed",
            "median_fitness",
            "best_fitness",
        ])
        .expect("in-memory write");
        for s in self.summary() {
            w.write_record([
                self.dataset.clone(),
                self.metric.clone(),
                s.population_size.to_string(),
                s.generations.to_string(),
                s.runs_ok.to_string(),
                s.runs_failed.to_string(),
                opt(s.median_fitness),
                opt(s.best_fitness),
            ])
            .expect("in-memory write");
        }
        finish(w)
    }

    pub fn timings_csv(&self) -> String {
        let mut out = String::from("population_size,generations,seed_index,wall_time_secs\n");
        for t in &self.timings {
            out.push_str(&format!(
                "{},{},{},{}\n",
                t.population_size, t.generations, t.seed_index, t.wall_time_secs
            ));
        }
        out
    }

    /// Writes `grid.csv`, `grid_summary.csv` and `timings.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, text) in [
            ("grid.csv", self.rows_csv()),
            ("grid_summary.csv", self.summary_csv()),
            ("timings.csv", self.timings_csv()),
        ] {
            let path = dir.join(name);
            fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}
