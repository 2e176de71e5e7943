//! Batch experiments: the reference run configuration, multi-seed runs,
//! population/generation grids, comparison against published reference
//! values, and report files.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datasets::{Case, Dataset};
use crate::evolution::{self, EvolutionParams, RunResult};
use crate::genome::PrimitiveSet;
use crate::rng::{derive_seed, rng_from_seed};
use crate::{Error, Result};

pub mod benchmarks;
pub mod config;
pub mod grid;
pub mod reference;
pub mod report;

pub use grid::{run_cells, run_grid, CellSpec, CellStatus, GridOutcome, GridRow, GridSpec};
pub use reference::{compare_with_reference, Comparison, ComparisonRow, Measured, Outcome, REFERENCE};
pub use report::{emit_report, OutputFormat, RunReport};

/// Default number of seeds per configuration.
pub const DEFAULT_SEEDS: usize = 10;

/// Population 40, 200 generations, crossover 0.7, mutation 0.05,
/// tournament 2, all eight functions.
pub fn reference_params(seed: u64) -> EvolutionParams {
    EvolutionParams {
        population_size: 40,
        generations: 200,
        crossover_rate: 0.7,
        mutation_rate: 0.05,
        tournament_size: 2,
        seed,
        ..EvolutionParams::default()
    }
}

/// One run of the reference configuration on a cleaned dataset.
pub fn run_reference_config(dataset: &Dataset, seed: u64) -> Result<RunResult> {
    let primitives = dataset.primitive_set()?;
    evolution::run(&reference_params(seed), dataset, &primitives)
}

/// Seed of run `seed_index` under `master`. The generation count is not an
/// input, so runs that differ only in length share a random stream.
pub fn seed_for(master: u64, population_size: usize, seed_index: usize) -> u64 {
    derive_seed(master, &[population_size as u64, seed_index as u64])
}

/// `seeds` independent runs of `params`, returned in seed-index order.
/// `params.seed` is replaced by [`seed_for`]`(master, pop, i)`.
pub fn run_seeds(
    params: &EvolutionParams,
    dataset: &Dataset,
    primitives: &PrimitiveSet,
    master: u64,
    seeds: usize,
) -> Result<Vec<RunResult>> {
    if seeds == 0 {
        return Err(Error::input("seed count must be at least 1"));
    }
    (0..seeds)
        .into_par_iter()
        .map(|i| {
            let params = EvolutionParams {
                seed: seed_for(master, params.population_size, i),
                ..params.clone()
            };
            evolution::run(&params, dataset, primitives)
        })
        .collect()
}

/// Median with the mean of the two middle values for even counts.
/// `None` for an empty slice.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[mid] } else { (v[mid - 1] + v[mid]) / 2.0 })
}

/// Best-of and median over a set of runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub runs: usize,
    pub best_fitness: f64,
    /// Lowest seed index attaining `best_fitness`.
    pub best_seed_index: usize,
    pub median_fitness: f64,
}

pub fn summarize(results: &[RunResult]) -> Result<SeedSummary> {
    let fitnesses: Vec<f64> = results.iter().map(|r| r.best_fitness).collect();
    let (best_seed_index, best_fitness) =
        crate::fitness::argmin(&fitnesses).ok_or_else(|| Error::input("no runs to summarize"))?;
    Ok(SeedSummary {
        runs: results.len(),
        best_fitness,
        best_seed_index,
        median_fitness: median(&fitnesses).expect("non-empty"),
    })
}

/// Noise-free power-law data `effort = a * size^b` with sizes uniform in
/// `[lo, hi]`. One feature column named `size`.
pub fn synthetic_power_law(cases: usize, a: f64, b: f64, lo: f64, hi: f64, seed: u64) -> Result<Dataset> {
    if cases == 0 || !(lo > 0.0 && hi >= lo) {
        return Err(Error::input("synthetic data needs at least one case and 0 < lo <= hi"));
    }
    let mut rng = rng_from_seed(seed);
    let cases = (1..=cases)
        .map(|row| {
            let size = rng.gen_range(lo..=hi);
            Case { source_row: row, features: vec![size], effort: a * size.powf(b) }
        })
        .collect();
    Dataset::from_cases("synthetic", vec!["size".into()], "effort", cases)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_odd_even_empty() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }

    #[test]
    fn reference_params_values() {
        let p = reference_params(9);
        assert_eq!(
            (p.population_size, p.generations, p.tournament_size, p.seed),
            (40, 200, 2, 9)
        );
        assert_eq!((p.crossover_rate, p.mutation_rate), (0.7, 0.05));
    }

    #[test]
    fn synthetic_follows_law() {
        let ds = synthetic_power_law(50, 2.5, 0.9, 1.0, 100.0, 2024).unwrap();
        assert_eq!(ds.len(), 50);
        for c in ds.cases() {
            assert!((1.0..=100.0).contains(&c.features[0]));
            assert_eq!(c.effort, 2.5 * c.features[0].powf(0.9));
        }
    }

    #[test]
    fn reference_run_trace_shape() {
        let ds = synthetic_power_law(10, 2.0, 1.0, 1.0, 10.0, 1).unwrap();
        let r = run_reference_config(&ds, 3).unwrap();
        assert_eq!(r.fitness_trace.len(), 200);
        assert!(r.fitness_trace.windows(2).all(|w| w[1].best_fitness <= w[0].best_fitness));
        assert_eq!(r, run_reference_config(&ds, 3).unwrap());
    }

    #[test]
    fn seeds_summary_picks_lowest() {
        let ds = synthetic_power_law(10, 2.0, 1.0, 1.0, 10.0, 1).unwrap();
        let prims = ds.primitive_set().unwrap();
        let params = EvolutionParams { population_size: 10, generations: 5, ..EvolutionParams::default() };
        let runs = run_seeds(&params, &ds, &prims, 7, 4).unwrap();
        assert_eq!(runs.len(), 4);
        assert_eq!(runs[2].seed, seed_for(7, 10, 2));
        let s = summarize(&runs).unwrap();
        assert!(runs.iter().all(|r| r.best_fitness >= s.best_fitness));
        assert_eq!(runs[s.best_seed_index].best_fitness, s.best_fitness);
    }
}
