//! Steady-state MEP evolution.
//!
//! Each step selects two parents by tournament, recombines them with
//! probability `crossover_rate` (otherwise clones them), mutates both
//! offspring and evaluates them. The fitter offspring replaces the worst
//! individual only when it is strictly fitter, so the best fitness in the
//! population never increases.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::datasets::Dataset;
use crate::fitness::{Evaluator, FitnessReport, Metric, ProtectedArithmetic};
use crate::genome::{Chromosome, ExpressionTree, PrimitiveSet};
use crate::rng::{rng_from_seed, RunRng};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossoverKind {
    OnePoint,
    TwoPoint,
    #[default]
    Uniform,
}

impl CrossoverKind {
    pub const ALL: [CrossoverKind; 3] =
        [CrossoverKind::OnePoint, CrossoverKind::TwoPoint, CrossoverKind::Uniform];

    pub fn name(self) -> &'static str {
        match self {
            CrossoverKind::OnePoint => "one_point",
            CrossoverKind::TwoPoint => "two_point",
            CrossoverKind::Uniform => "uniform",
        }
    }
}

impl fmt::Display for CrossoverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CrossoverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "one_point" => Ok(CrossoverKind::OnePoint),
            "two_point" => Ok(CrossoverKind::TwoPoint),
            "uniform" => Ok(CrossoverKind::Uniform),
            _ => Err(Error::input(format!(
                "unknown crossover kind `{s}` (expected one_point, two_point or uniform)"
            ))),
        }
    }
}

/// What one unit of `generations` means for the steady-state loop.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenerationUnit {
    /// `population_size / 2` steps, i.e. about `population_size` offspring.
    #[default]
    Sweep,
    /// A single step (one replacement attempt).
    Step,
}

impl FromStr for GenerationUnit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sweep" => Ok(GenerationUnit::Sweep),
            "step" => Ok(GenerationUnit::Step),
            _ => Err(Error::input(format!("unknown generation unit `{s}` (expected sweep or step)"))),
        }
    }
}

impl fmt::Display for GenerationUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GenerationUnit::Sweep => "sweep",
            GenerationUnit::Step => "step",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolutionParams {
    pub population_size: usize,
    pub generations: usize,
    pub crossover_rate: f64,
    /// Per-symbol mutation probability.
    pub mutation_rate: f64,
    pub crossover_kind: CrossoverKind,
    pub tournament_size: usize,
    pub num_genes: usize,
    /// Probability that a freshly drawn gene (past position 0) is a function.
    pub function_probability: f64,
    pub generation_unit: GenerationUnit,
    pub metric: Metric,
    pub arithmetic: ProtectedArithmetic,
    pub seed: u64,
}

impl Default for EvolutionParams {
    fn default() -> Self {
        EvolutionParams {
            population_size: 40,
            generations: 200,
            crossover_rate: 0.7,
            mutation_rate: 0.05,
            crossover_kind: CrossoverKind::default(),
            tournament_size: 2,
            num_genes: 16,
            function_probability: 0.5,
            generation_unit: GenerationUnit::default(),
            metric: Metric::default(),
            arithmetic: ProtectedArithmetic::default(),
            seed: 0,
        }
    }
}

impl EvolutionParams {
    pub fn validate(&self) -> Result<()> {
        let prob = |name: &str, p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(Error::input(format!("{name} must be in [0, 1], got {p}")))
            }
        };
        prob("crossover_rate", self.crossover_rate)?;
        prob("mutation_rate", self.mutation_rate)?;
        prob("function_probability", self.function_probability)?;
        if self.population_size < 2 {
            return Err(Error::input("population_size must be at least 2"));
        }
        if self.tournament_size < 1 {
            return Err(Error::input("tournament_size must be at least 1"));
        }
        if self.num_genes < 1 {
            return Err(Error::input("num_genes must be at least 1"));
        }
        self.arithmetic.validate()
    }

    pub fn steps_per_generation(&self) -> usize {
        match self.generation_unit {
            GenerationUnit::Sweep => (self.population_size / 2).max(1),
            GenerationUnit::Step => 1,
        }
    }
}

/// Draws `k` indices uniformly with replacement and returns the fittest
/// (lowest fitness). Ties go to the candidate drawn first.
pub fn tournament_select<R: Rng + ?Sized>(fitnesses: &[f64], k: usize, rng: &mut R) -> usize {
    assert!(!fitnesses.is_empty(), "tournament over an empty population");
    let mut winner = rng.gen_range(0..fitnesses.len());
    for _ in 1..k.max(1) {
        let challenger = rng.gen_range(0..fitnesses.len());
        if fitnesses[challenger] < fitnesses[winner] {
            winner = challenger;
        }
    }
    winner
}

/// Winner of a tournament over explicit draws; ties go to the earliest draw.
pub fn tournament_winner(fitnesses: &[f64], draws: &[usize]) -> usize {
    draws
        .iter()
        .copied()
        .reduce(|w, c| if fitnesses[c] < fitnesses[w] { c } else { w })
        .expect("at least one draw")
}

fn check_lengths(a: &Chromosome, b: &Chromosome) -> Result<usize> {
    if a.len() != b.len() {
        return Err(Error::input(format!(
            "parents differ in length ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    Ok(a.len())
}

/// Swaps the genes in `range` between the parents.
fn swap_range(a: &Chromosome, b: &Chromosome, range: std::ops::Range<usize>) -> (Chromosome, Chromosome) {
    let (mut x, mut y) = (a.clone(), b.clone());
    x.genes_mut()[range.clone()].clone_from_slice(&b.genes()[range.clone()]);
    y.genes_mut()[range.clone()].clone_from_slice(&a.genes()[range]);
    (x, y)
}

/// One-point recombination with the cut at `cut`: offspring exchange the
/// genes from `cut` to the end.
pub fn crossover_one_point_at(a: &Chromosome, b: &Chromosome, cut: usize) -> Result<(Chromosome, Chromosome)> {
    let len = check_lengths(a, b)?;
    if cut > len {
        return Err(Error::input(format!("cut {cut} beyond length {len}")));
    }
    Ok(swap_range(a, b, cut..len))
}

pub fn crossover_one_point<R: Rng + ?Sized>(
    a: &Chromosome,
    b: &Chromosome,
    rng: &mut R,
) -> Result<(Chromosome, Chromosome)> {
    let len = check_lengths(a, b)?;
    if len < 2 {
        return Ok((a.clone(), b.clone()));
    }
    crossover_one_point_at(a, b, rng.gen_range(1..len))
}

/// Two-point recombination exchanging the genes in `[first, second)`.
pub fn crossover_two_point_at(
    a: &Chromosome,
    b: &Chromosome,
    first: usize,
    second: usize,
) -> Result<(Chromosome, Chromosome)> {
    let len = check_lengths(a, b)?;
    if first > second || second > len {
        return Err(Error::input(format!("bad cut points {first}, {second} for length {len}")));
    }
    Ok(swap_range(a, b, first..second))
}

/// Cut points are two distinct positions drawn from `1..=len`.
pub fn crossover_two_point<R: Rng + ?Sized>(
    a: &Chromosome,
    b: &Chromosome,
    rng: &mut R,
) -> Result<(Chromosome, Chromosome)> {
    let len = check_lengths(a, b)?;
    if len < 2 {
        return Ok((a.clone(), b.clone()));
    }
    let first = rng.gen_range(1..=len);
    let mut second = rng.gen_range(1..len);
    if second >= first {
        second += 1;
    }
    crossover_two_point_at(a, b, first.min(second), first.max(second))
}

/// Uniform recombination where `mask[i]` says whether position `i` swaps.
pub fn crossover_uniform_with_mask(
    a: &Chromosome,
    b: &Chromosome,
    mask: &[bool],
) -> Result<(Chromosome, Chromosome)> {
    let len = check_lengths(a, b)?;
    if mask.len() != len {
        return Err(Error::input("swap mask length differs from chromosome length"));
    }
    let (mut x, mut y) = (a.clone(), b.clone());
    for (i, _) in mask.iter().enumerate().filter(|(_, swap)| **swap) {
        x.genes_mut()[i] = b.genes()[i].clone();
        y.genes_mut()[i] = a.genes()[i].clone();
    }
    Ok((x, y))
}

pub fn crossover_uniform<R: Rng + ?Sized>(
    a: &Chromosome,
    b: &Chromosome,
    rng: &mut R,
) -> Result<(Chromosome, Chromosome)> {
    let len = check_lengths(a, b)?;
    let mask: Vec<bool> = (0..len).map(|_| rng.gen_bool(0.5)).collect();
    crossover_uniform_with_mask(a, b, &mask)
}

pub fn crossover<R: Rng + ?Sized>(
    kind: CrossoverKind,
    a: &Chromosome,
    b: &Chromosome,
    rng: &mut R,
) -> Result<(Chromosome, Chromosome)> {
    match kind {
        CrossoverKind::OnePoint => crossover_one_point(a, b, rng),
        CrossoverKind::TwoPoint => crossover_two_point(a, b, rng),
        CrossoverKind::Uniform => crossover_uniform(a, b, rng),
    }
}

/// Symbol-wise mutation.
///
/// Each gene's head symbol mutates with probability `rate`; a mutated head
/// is redrawn as a whole gene, so a new function gets fresh operand
/// pointers and a new terminal carries none. Gene 0 only ever becomes
/// another terminal. Each operand pointer of an unmutated function gene
/// independently mutates with probability `rate` to a uniform earlier
/// position.
pub fn mutate<R: Rng + ?Sized>(
    chromosome: &Chromosome,
    rate: f64,
    primitives: &PrimitiveSet,
    function_probability: f64,
    rng: &mut R,
) -> Chromosome {
    use crate::genome::Gene;

    let mut out = chromosome.clone();
    for (pos, gene) in out.genes_mut().iter_mut().enumerate() {
        if rng.gen_bool(rate) {
            *gene = primitives.random_gene(pos, function_probability, rng);
        } else if let Gene::Function { operands, .. } = gene {
            for op in operands.iter_mut() {
                if rng.gen_bool(rate) {
                    *op = rng.gen_range(0..pos);
                }
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Individual {
    pub chromosome: Chromosome,
    pub report: FitnessReport,
}

impl Individual {
    pub fn fitness(&self) -> f64 {
        self.report.chromosome_fitness
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Population {
    pub members: Vec<Individual>,
}

impl Population {
    pub fn fitnesses(&self) -> Vec<f64> {
        self.members.iter().map(Individual::fitness).collect()
    }

    /// Fittest member, lowest index on ties.
    pub fn best_index(&self) -> usize {
        crate::fitness::argmin(&self.fitnesses()).map_or(0, |(i, _)| i)
    }

    pub fn best(&self) -> &Individual {
        &self.members[self.best_index()]
    }

    /// Least fit member, highest index on ties.
    pub fn worst_index(&self) -> usize {
        self.members
            .iter()
            .enumerate()
            .fold(0, |w, (i, m)| if m.fitness() >= self.members[w].fitness() { i } else { w })
    }
}

/// What happened in one steady-state step.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepLog {
    pub parents: (usize, usize),
    pub recombined: bool,
    pub offspring_fitness: (f64, f64),
    /// Index of the replaced individual, if any.
    pub replaced: Option<usize>,
}

/// Runs the steady-state loop over one dataset.
pub struct Evolver<'a> {
    params: EvolutionParams,
    primitives: &'a PrimitiveSet,
    evaluator: Evaluator<'a>,
    evaluations: u64,
}

impl<'a> Evolver<'a> {
    pub fn new(params: EvolutionParams, dataset: &'a Dataset, primitives: &'a PrimitiveSet) -> Result<Self> {
        params.validate()?;
        if primitives.terminals().len() != dataset.feature_names().len() {
            return Err(Error::input(format!(
                "primitive set has {} terminals but dataset `{}` has {} features",
                primitives.terminals().len(),
                dataset.name(),
                dataset.feature_names().len()
            )));
        }
        let evaluator = Evaluator::new(dataset, params.metric, params.arithmetic)?;
        Ok(Evolver {
            params,
            primitives,
            evaluator,
            evaluations: 0,
        })
    }

    pub fn params(&self) -> &EvolutionParams {
        &self.params
    }

    /// Number of chromosome evaluations performed so far.
    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    pub fn evaluate(&mut self, chromosome: Chromosome) -> Result<Individual> {
        let report = self.evaluator.evaluate(&chromosome)?;
        self.evaluations += 1;
        Ok(Individual { chromosome, report })
    }

    pub fn initial_population(&mut self, rng: &mut RunRng) -> Result<Population> {
        let members = (0..self.params.population_size)
            .map(|_| {
                let c = Chromosome::random(
                    self.primitives,
                    self.params.num_genes,
                    self.params.function_probability,
                    rng,
                );
                self.evaluate(c)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Population { members })
    }

    pub fn evolve_step(&mut self, population: &mut Population, rng: &mut RunRng) -> Result<StepLog> {
        let p = &self.params;
        let fitnesses = population.fitnesses();
        let first = tournament_select(&fitnesses, p.tournament_size, rng);
        let second = tournament_select(&fitnesses, p.tournament_size, rng);
        let (a, b) = (&population.members[first].chromosome, &population.members[second].chromosome);
        let recombined = rng.gen_bool(p.crossover_rate);
        let (x, y) = if recombined {
            crossover(p.crossover_kind, a, b, rng)?
        } else {
            (a.clone(), b.clone())
        };
        let x = mutate(&x, p.mutation_rate, self.primitives, p.function_probability, rng);
        let y = mutate(&y, p.mutation_rate, self.primitives, p.function_probability, rng);
        let x = self.evaluate(x)?;
        let y = self.evaluate(y)?;
        let offspring_fitness = (x.fitness(), y.fitness());
        let better = if y.fitness() < x.fitness() { y } else { x };
        let worst = population.worst_index();
        let replaced = if better.fitness() < population.members[worst].fitness() {
            population.members[worst] = better;
            Some(worst)
        } else {
            None
        };
        Ok(StepLog {
            parents: (first, second),
            recombined,
            offspring_fitness,
            replaced,
        })
    }

    /// Full run: random initial population, then `generations` generations.
    pub fn run(self) -> Result<RunResult> {
        let generations = self.params.generations;
        let mut results = self.run_checkpoints(&[generations])?;
        Ok(results.pop().expect("one checkpoint"))
    }

    /// Runs once up to the largest checkpoint and returns the result a run
    /// with each checkpoint as its generation count would have produced, in
    /// the order given. `params.generations` is ignored.
    pub fn run_checkpoints(self, checkpoints: &[usize]) -> Result<Vec<RunResult>> {
        Ok(self.run_checkpoints_timed(checkpoints)?.into_iter().map(|(r, _)| r).collect())
    }

    /// [`Evolver::run_checkpoints`] plus the wall time from the start of
    /// the run to each checkpoint.
    pub fn run_checkpoints_timed(mut self, checkpoints: &[usize]) -> Result<Vec<(RunResult, Duration)>> {
        let started = Instant::now();
        let mut wanted: Vec<usize> = checkpoints.to_vec();
        wanted.sort_unstable();
        wanted.dedup();
        let last = wanted.last().copied().unwrap_or(0);
        let mut rng = rng_from_seed(self.params.seed);
        let mut population = self.initial_population(&mut rng)?;
        let initial_best_fitness = population.best().fitness();
        let steps = self.params.steps_per_generation();
        let mut trace = Vec::with_capacity(last);
        let mut snapshots = Vec::with_capacity(wanted.len());
        let mut next = 0;
        for generation in 0..=last {
            if generation > 0 {
                let mut replacements = 0;
                for _ in 0..steps {
                    if self.evolve_step(&mut population, &mut rng)?.replaced.is_some() {
                        replacements += 1;
                    }
                }
                trace.push(GenerationRecord {
                    generation,
                    best_fitness: population.best().fitness(),
                    replacements,
                });
            }
            if next < wanted.len() && wanted[next] == generation {
                let result = self.snapshot(&population, initial_best_fitness, &trace)?;
                snapshots.push((result, started.elapsed()));
                next += 1;
            }
        }
        Ok(checkpoints
            .iter()
            .map(|g| snapshots[wanted.binary_search(g).expect("checkpoint present")].clone())
            .collect())
    }

    fn snapshot(
        &self,
        population: &Population,
        initial_best_fitness: f64,
        trace: &[GenerationRecord],
    ) -> Result<RunResult> {
        let best = population.best().clone();
        let best_fitness = best.fitness();
        let generation_of_best = trace
            .iter()
            .find(|r| r.best_fitness == best_fitness)
            .filter(|_| initial_best_fitness != best_fitness)
            .map_or(0, |r| r.generation);
        let best_gene_index = best.report.best_gene_index;
        let best_expression = best.chromosome.decode(best_gene_index, self.primitives)?;
        let mut params_echo = self.params.clone();
        params_echo.generations = trace.len();
        Ok(RunResult {
            best_chromosome_text: best.chromosome.to_text(self.primitives),
            best_chromosome: best.chromosome,
            best_expression,
            best_fitness,
            best_gene_index,
            initial_best_fitness,
            fitness_trace: trace.to_vec(),
            generation_of_best,
            evaluations: self.evaluations,
            seed: self.params.seed,
            terminals: self.primitives.terminals().to_vec(),
            params_echo,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GenerationRecord {
    pub generation: usize,
    pub best_fitness: f64,
    pub replacements: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunResult {
    pub best_chromosome: Chromosome,
    pub best_chromosome_text: String,
    pub best_expression: ExpressionTree,
    pub best_fitness: f64,
    /// 0-based position of the gene whose expression is best.
    pub best_gene_index: usize,
    pub initial_best_fitness: f64,
    /// One entry per generation, after that generation's steps.
    pub fitness_trace: Vec<GenerationRecord>,
    /// First generation that reached `best_fitness`; 0 when the initial
    /// population already held it.
    pub generation_of_best: usize,
    pub evaluations: u64,
    pub seed: u64,
    pub terminals: Vec<String>,
    pub params_echo: EvolutionParams,
}

impl RunResult {
    /// `generation,best_fitness,replacements` rows.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("generation,best_fitness,replacements\n");
        for r in &self.fitness_trace {
            out.push_str(&format!("{},{},{}\n", r.generation, r.best_fitness, r.replacements));
        }
        out
    }
}

pub fn run(params: &EvolutionParams, dataset: &Dataset, primitives: &PrimitiveSet) -> Result<RunResult> {
    if dataset.is_empty() {
        return Err(Error::input(format!("dataset `{}` is empty", dataset.name())));
    }
    Evolver::new(params.clone(), dataset, primitives)?.run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::Case;
    use crate::genome::{FunctionSymbol, Gene};

    fn primitives() -> PrimitiveSet {
        PrimitiveSet::with_all_functions(vec!["x".into(), "y".into()]).unwrap()
    }

    fn dataset() -> Dataset {
        let cases = (1..=12)
            .map(|i| {
                let x = i as f64;
                let y = (i * 7 % 5 + 1) as f64;
                Case { source_row: i, features: vec![x, y], effort: x * y + 3.0 }
            })
            .collect();
        Dataset::from_cases("toy", vec!["x".into(), "y".into()], "e", cases).unwrap()
    }

    fn random_pair(seed: u64, len: usize) -> (Chromosome, Chromosome) {
        let set = primitives();
        let mut rng = rng_from_seed(seed);
        (
            Chromosome::random(&set, len, 0.5, &mut rng),
            Chromosome::random(&set, len, 0.5, &mut rng),
        )
    }

    #[test]
    fn tournament_of_one() {
        let mut rng = rng_from_seed(1);
        for _ in 0..50 {
            assert_eq!(tournament_select(&[4.2], 2, &mut rng), 0);
        }
    }

    #[test]
    fn full_tournament_picks_global_best() {
        assert_eq!(tournament_winner(&[5.0, 1.0, 3.0], &[0, 1, 2]), 1);
        assert_eq!(tournament_winner(&[5.0, 1.0, 3.0], &[2, 0, 1]), 1);
        assert_eq!(tournament_winner(&[2.0, 2.0], &[1, 0]), 1);
    }

    #[test]
    fn one_point_identity_and_boundary() {
        let (a, b) = random_pair(3, 10);
        let (x, y) = crossover_one_point(&a, &a, &mut rng_from_seed(0)).unwrap();
        assert_eq!((&x, &y), (&a, &a));
        let (x, y) = crossover_one_point_at(&a, &b, 9).unwrap();
        assert_eq!(x.genes()[..9], a.genes()[..9]);
        assert_eq!(x.genes()[9], b.genes()[9]);
        assert_eq!(y.genes()[..9], b.genes()[..9]);
        assert_eq!(y.genes()[9], a.genes()[9]);
    }

    #[test]
    fn two_point_identity_and_boundary() {
        let (a, b) = random_pair(4, 10);
        let (x, y) = crossover_two_point(&a, &a, &mut rng_from_seed(0)).unwrap();
        assert_eq!((&x, &y), (&a, &a));
        let (x, _) = crossover_two_point_at(&a, &b, 9, 10).unwrap();
        assert_eq!(x.genes()[..9], a.genes()[..9]);
        assert_eq!(x.genes()[9], b.genes()[9]);
        let (x, y) = crossover_two_point_at(&a, &b, 3, 6).unwrap();
        assert_eq!(x.genes()[3..6], b.genes()[3..6]);
        assert_eq!(x.genes()[6..], a.genes()[6..]);
        assert_eq!(y.genes()[..3], b.genes()[..3]);
    }

    #[test]
    fn two_point_cuts_are_ordered_and_distinct() {
        let (a, b) = random_pair(5, 2);
        let mut rng = rng_from_seed(6);
        for _ in 0..200 {
            let (x, y) = crossover_two_point(&a, &b, &mut rng).unwrap();
            // Only [1, 2) can swap for G = 2.
            assert_eq!(x.genes()[0], a.genes()[0]);
            assert_eq!(x.genes()[1], b.genes()[1]);
            assert_eq!(y.genes()[1], a.genes()[1]);
        }
    }

    #[test]
    fn uniform_identity_and_full_mask() {
        let (a, b) = random_pair(7, 10);
        let (x, y) = crossover_uniform(&a, &a, &mut rng_from_seed(0)).unwrap();
        assert_eq!((&x, &y), (&a, &a));
        let (x, y) = crossover_uniform_with_mask(&a, &b, &[true; 10]).unwrap();
        assert_eq!((&x, &y), (&b, &a));
    }

    #[test]
    fn unequal_parents_rejected() {
        let (a, _) = random_pair(8, 10);
        let (b, _) = random_pair(8, 9);
        let mut rng = rng_from_seed(0);
        assert!(crossover_one_point(&a, &b, &mut rng).is_err());
        assert!(crossover_two_point(&a, &b, &mut rng).is_err());
        assert!(crossover_uniform(&a, &b, &mut rng).is_err());
    }

    #[test]
    fn mutation_rate_zero_is_identity() {
        let (a, _) = random_pair(9, 16);
        let m = mutate(&a, 0.0, &primitives(), 0.5, &mut rng_from_seed(1));
        assert_eq!(m, a);
    }

    #[test]
    fn mutation_rate_one_keeps_first_gene_terminal() {
        let set = primitives();
        let mut rng = rng_from_seed(10);
        for seed in 0..200 {
            let (a, _) = random_pair(seed, 8);
            let m = mutate(&a, 1.0, &set, 1.0, &mut rng);
            assert!(m.genes()[0].is_terminal());
            assert!(m.validate(&set).is_ok());
        }
    }

    #[test]
    fn terminal_to_function_gets_operands() {
        let set = PrimitiveSet::new(vec!["x".into()], vec![FunctionSymbol::Add]).unwrap();
        let c = Chromosome::from_genes(vec![Gene::Terminal(0); 4]);
        let m = mutate(&c, 1.0, &set, 1.0, &mut rng_from_seed(2));
        for (pos, g) in m.genes().iter().enumerate().skip(1) {
            match g {
                Gene::Function { operands, .. } => {
                    assert_eq!(operands.len(), 2);
                    assert!(operands.iter().all(|&o| o < pos));
                }
                Gene::Terminal(_) => panic!("function probability 1 must yield functions"),
            }
        }
    }

    #[test]
    fn params_validation() {
        let ok = EvolutionParams::default();
        assert!(ok.validate().is_ok());
        for bad in [
            EvolutionParams { population_size: 1, ..ok.clone() },
            EvolutionParams { crossover_rate: 1.5, ..ok.clone() },
            EvolutionParams { mutation_rate: -0.1, ..ok.clone() },
            EvolutionParams { tournament_size: 0, ..ok.clone() },
            EvolutionParams { num_genes: 0, ..ok.clone() },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    #[test]
    fn names_parse() {
        for k in CrossoverKind::ALL {
            assert_eq!(k.name().parse::<CrossoverKind>().unwrap(), k);
        }
        assert_eq!("two-point".parse::<CrossoverKind>().unwrap(), CrossoverKind::TwoPoint);
        assert_eq!("step".parse::<GenerationUnit>().unwrap(), GenerationUnit::Step);
        assert!("three_point".parse::<CrossoverKind>().is_err());
    }

    #[test]
    fn worse_offspring_leave_population_unchanged() {
        let ds = dataset();
        let set = primitives();
        let params = EvolutionParams { population_size: 4, ..EvolutionParams::default() };
        let mut evolver = Evolver::new(params, &ds, &set).unwrap();
        // x * y misses every target by exactly 3.
        let seed = Chromosome::from_genes(vec![
            Gene::Terminal(0),
            Gene::Terminal(1),
            Gene::Function { symbol: FunctionSymbol::Mul, operands: vec![0, 1] },
        ]);
        let member = evolver.evaluate(seed).unwrap();
        let mut pop = Population { members: vec![member; 4] };
        let mut rng = rng_from_seed(11);
        let mut unchanged_steps = 0;
        for _ in 0..200 {
            let before = pop.clone();
            let worst = before.members[before.worst_index()].fitness();
            let log = evolver.evolve_step(&mut pop, &mut rng).unwrap();
            let best_offspring = log.offspring_fitness.0.min(log.offspring_fitness.1);
            match log.replaced {
                None => {
                    assert!(best_offspring >= worst);
                    assert_eq!(pop, before);
                    unchanged_steps += 1;
                }
                Some(i) => {
                    assert!(best_offspring < worst);
                    assert_eq!(pop.members[i].fitness(), best_offspring);
                }
            }
        }
        assert!(unchanged_steps > 0);
    }

    #[test]
    fn perfect_offspring_becomes_best() {
        let ds = dataset();
        let set = primitives();
        let params = EvolutionParams {
            population_size: 6,
            mutation_rate: 0.0,
            crossover_rate: 0.0,
            ..EvolutionParams::default()
        };
        let mut evolver = Evolver::new(params, &ds, &set).unwrap();
        // Population: five poor individuals and one exact solution. With no
        // variation, offspring are clones; a clone of the perfect one must
        // displace the worst as soon as it is selected.
        let exact = Chromosome::from_genes(vec![
            Gene::Terminal(0),
            Gene::Terminal(1),
            Gene::Function { symbol: FunctionSymbol::Mul, operands: vec![0, 1] },
            Gene::Function { symbol: FunctionSymbol::Div, operands: vec![0, 0] },
            Gene::Function { symbol: FunctionSymbol::Add, operands: vec![3, 3] },
            Gene::Function { symbol: FunctionSymbol::Add, operands: vec![4, 3] },
            Gene::Function { symbol: FunctionSymbol::Add, operands: vec![2, 5] },
        ]);
        let exact = evolver.evaluate(exact).unwrap();
        assert_eq!(exact.fitness(), 0.0);
        let poor = evolver.evaluate(Chromosome::from_genes(vec![Gene::Terminal(1); 7])).unwrap();
        let mut pop = Population { members: vec![poor.clone(), poor.clone(), poor.clone(), poor.clone(), poor, exact] };
        let mut rng = rng_from_seed(12);
        let mut saw_perfect_offspring = false;
        for _ in 0..100 {
            let log = evolver.evolve_step(&mut pop, &mut rng).unwrap();
            if log.offspring_fitness.0 == 0.0 || log.offspring_fitness.1 == 0.0 {
                saw_perfect_offspring = true;
                assert_eq!(pop.best().fitness(), 0.0);
                break;
            }
        }
        assert!(saw_perfect_offspring);
    }

    #[test]
    fn run_is_deterministic_and_monotone() {
        let ds = dataset();
        let set = primitives();
        let params = EvolutionParams { generations: 30, seed: 99, ..EvolutionParams::default() };
        let a = run(&params, &ds, &set).unwrap();
        let b = run(&params, &ds, &set).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert_eq!(a.fitness_trace.len(), 30);
        assert!(a.fitness_trace.windows(2).all(|w| w[1].best_fitness <= w[0].best_fitness));
        assert_eq!(a.best_fitness, a.fitness_trace.last().unwrap().best_fitness);
        assert_eq!(a.evaluations, 40 + 2 * 20 * 30);
        assert!(a.best_chromosome.validate(&set).is_ok());
    }

    #[test]
    fn zero_generations_returns_initial_best() {
        let ds = dataset();
        let set = primitives();
        let params = EvolutionParams { generations: 0, seed: 5, ..EvolutionParams::default() };
        let r = run(&params, &ds, &set).unwrap();
        assert!(r.fitness_trace.is_empty());
        assert_eq!(r.best_fitness, r.initial_best_fitness);
        assert_eq!(r.generation_of_best, 0);
        assert_eq!(r.evaluations, 40);
    }

    #[test]
    fn step_unit_runs_one_step_per_generation() {
        let ds = dataset();
        let set = primitives();
        let params = EvolutionParams {
            generations: 25,
            generation_unit: GenerationUnit::Step,
            ..EvolutionParams::default()
        };
        assert_eq!(run(&params, &ds, &set).unwrap().evaluations, 40 + 2 * 25);
    }

    #[test]
    fn mismatched_primitives_rejected() {
        let ds = dataset();
        let set = PrimitiveSet::with_all_functions(vec!["x".into()]).unwrap();
        assert!(run(&EvolutionParams::default(), &ds, &set).is_err());
    }

    #[test]
    fn checkpoints_match_separate_runs() {
        let ds = dataset();
        let set = primitives();
        let base = EvolutionParams { population_size: 12, seed: 31, ..EvolutionParams::default() };
        let joint = Evolver::new(base.clone(), &ds, &set)
            .unwrap()
            .run_checkpoints(&[15, 0, 6])
            .unwrap();
        for (result, gens) in joint.iter().zip([15, 0, 6]) {
            let alone = run(&EvolutionParams { generations: gens, ..base.clone() }, &ds, &set).unwrap();
            assert_eq!(result, &alone);
        }
    }
}
