use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mep_core::evolution::{CrossoverKind, EvolutionParams, GenerationUnit};
use mep_core::experiments::benchmarks::{open_dataset, run_benchmarks, DatasetRequest};
use mep_core::experiments::config::ConfigFile;
use mep_core::experiments::report::run_experiment;
use mep_core::experiments::{emit_report, run_grid, GridSpec, OutputFormat, DEFAULT_SEEDS};
use mep_core::fitness::Metric;
use mep_core::genome::{export_dot, parse_with_inferred_terminals, Chromosome, PrimitiveSet};
use mep_core::{Error, Result};

/// Multi Expression Programming for software effort estimation.
#[derive(Parser)]
#[command(name = "mep", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve on one dataset with several seeds and write a report.
    Run(RunArgs),
    /// Sweep population sizes against generation counts.
    Grid(GridArgs),
    /// Run every benchmark CSV in a directory and compare with published values.
    Compare(CompareArgs),
    /// Print the expressions encoded by a chromosome file.
    Decode(DecodeArgs),
}

#[derive(Args, Clone, Default)]
struct DataArgs {
    /// CSV file to learn from.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Built-in schema (albrecht, bailey_basili, desharnais, heiat, kemerer, miyazaki).
    #[arg(long)]
    schema: Option<String>,
    #[arg(long)]
    effort_column: Option<String>,
    /// Size column for the power-law baseline.
    #[arg(long)]
    size_column: Option<String>,
    /// Rescale every feature to [0, 1].
    #[arg(long)]
    scale: bool,
}

#[derive(Args, Clone, Default)]
struct EvoArgs {
    #[arg(long)]
    crossover_rate: Option<f64>,
    #[arg(long)]
    mutation_rate: Option<f64>,
    /// one_point, two_point or uniform.
    #[arg(long)]
    crossover_kind: Option<CrossoverKind>,
    /// mmre or sum_abs_error.
    #[arg(long)]
    metric: Option<Metric>,
    /// sweep (population/2 steps) or step.
    #[arg(long)]
    generation_unit: Option<GenerationUnit>,
    /// Chromosome length.
    #[arg(long)]
    genes: Option<usize>,
    #[arg(long)]
    function_probability: Option<f64>,
    #[arg(long)]
    tournament_size: Option<usize>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of seeds.
    #[arg(long)]
    seeds: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// TOML file of `key = value` defaults; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    evo: EvoArgs,
    #[arg(long)]
    pop: Option<usize>,
    #[arg(long)]
    gens: Option<usize>,
    /// Comma-separated: csv, json, dot or all.
    #[arg(long)]
    format: Option<String>,
    /// Also report k-fold held-out fitness.
    #[arg(long)]
    folds: Option<usize>,
}

#[derive(Args)]
struct GridArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    evo: EvoArgs,
    /// test1 or test2; --pop/--gens replace its lists.
    #[arg(long)]
    preset: Option<String>,
    /// Population sizes, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pop: Option<Vec<usize>>,
    /// Generation counts, comma-separated.
    #[arg(long, value_delimiter = ',')]
    gens: Option<Vec<usize>>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    evo: EvoArgs,
    /// Directory holding <schema>.csv files.
    #[arg(long)]
    data_dir: Option<PathBuf>,
    #[arg(long)]
    pop: Option<usize>,
    #[arg(long)]
    gens: Option<usize>,
}

#[derive(Args)]
struct DecodeArgs {
    /// Chromosome text file; `-` reads standard input.
    chromosome: PathBuf,
    /// 1-based gene to decode; all genes when absent.
    #[arg(long)]
    gene: Option<usize>,
    /// infix or dot.
    #[arg(long, default_value = "infix")]
    format: String,
    /// Terminal names in order, comma-separated; inferred when absent.
    #[arg(long, value_delimiter = ',')]
    terminals: Option<Vec<String>>,
    /// Write here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => run(args),
        Command::Grid(args) => grid(args),
        Command::Compare(args) => compare(args),
        Command::Decode(args) => decode(args),
    }
}

fn load_config(evo: &EvoArgs) -> Result<ConfigFile> {
    evo.config.as_deref().map_or(Ok(ConfigFile::default()), ConfigFile::load)
}

/// Flags over config file over defaults.
fn params(evo: &EvoArgs, cfg: &ConfigFile, pop: Option<usize>, gens: Option<usize>) -> Result<EvolutionParams> {
    let d = EvolutionParams::default();
    let single = |counts: &Option<mep_core::experiments::config::Counts>, name: &str| -> Result<Option<usize>> {
        match counts.as_ref().map(|c| c.to_vec()) {
            None => Ok(None),
            Some(v) if v.len() == 1 => Ok(Some(v[0])),
            Some(_) => Err(Error::Config(format!("`{name}` must be a single value here"))),
        }
    };
    let params = EvolutionParams {
        population_size: pop.or(single(&cfg.pop, "pop")?).unwrap_or(d.population_size),
        generations: gens.or(single(&cfg.gens, "gens")?).unwrap_or(d.generations),
        crossover_rate: evo.crossover_rate.or(cfg.crossover_rate).unwrap_or(d.crossover_rate),
        mutation_rate: evo.mutation_rate.or(cfg.mutation_rate).unwrap_or(d.mutation_rate),
        crossover_kind: evo.crossover_kind.or(cfg.crossover_kind).unwrap_or(d.crossover_kind),
        tournament_size: evo.tournament_size.or(cfg.tournament_size).unwrap_or(d.tournament_size),
        num_genes: evo.genes.or(cfg.genes).unwrap_or(d.num_genes),
        function_probability: evo
            .function_probability
            .or(cfg.function_probability)
            .unwrap_or(d.function_probability),
        generation_unit: evo.generation_unit.or(cfg.generation_unit).unwrap_or(d.generation_unit),
        metric: evo.metric.or(cfg.metric).unwrap_or(d.metric),
        arithmetic: d.arithmetic,
        seed: evo.seed.or(cfg.seed).unwrap_or(d.seed),
    };
    params.validate()?;
    Ok(params)
}

fn dataset_request(data: &DataArgs, cfg: &ConfigFile) -> Result<DatasetRequest> {
    let path = data
        .dataset
        .clone()
        .or_else(|| cfg.dataset.clone())
        .ok_or_else(|| Error::input("no dataset given (use --dataset)"))?;
    Ok(DatasetRequest {
        path,
        schema: data.schema.clone().or_else(|| cfg.schema.clone()),
        effort_column: data.effort_column.clone().or_else(|| cfg.effort_column.clone()),
        size_column: data.size_column.clone().or_else(|| cfg.size_column.clone()),
        min_max_scale: data.scale || cfg.scale.unwrap_or(false),
    })
}

fn out_dir(evo: &EvoArgs, cfg: &ConfigFile, default: &str) -> PathBuf {
    evo.out.clone().or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from(default))
}

fn seeds(evo: &EvoArgs, cfg: &ConfigFile) -> usize {
    evo.seeds.or(cfg.seeds).unwrap_or(DEFAULT_SEEDS)
}

fn run(args: RunArgs) -> Result<()> {
    let cfg = load_config(&args.evo)?;
    let params = params(&args.evo, &cfg, args.pop, args.gens)?;
    let (dataset, size_column) = open_dataset(&dataset_request(&args.data, &cfg)?)?;
    let formats = OutputFormat::parse_list(args.format.as_deref().or(cfg.format.as_deref()).unwrap_or("all"))?;
    let report = run_experiment(
        &dataset,
        size_column.as_deref(),
        &params,
        seeds(&args.evo, &cfg),
        args.folds.or(cfg.folds),
    )?;
    for w in &report.dataset.warnings {
        eprintln!("warning: {w}");
    }
    let dir = out_dir(&args.evo, &cfg, "mep-out");
    let written = emit_report(&report, &dir, &formats)?;
    print!("{}", report.summary_text());
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn grid(args: GridArgs) -> Result<()> {
    let cfg = load_config(&args.evo)?;
    let base = params(&args.evo, &cfg, None, None)?;
    let preset = args.preset.clone().or_else(|| cfg.preset.clone()).unwrap_or_else(|| "test1".into());
    let mut spec = GridSpec::preset(&preset, base)?;
    if let Some(pops) = args.pop.clone().or_else(|| cfg.pop.as_ref().map(|c| c.to_vec())) {
        spec.population_sizes = pops;
    }
    if let Some(gens) = args.gens.clone().or_else(|| cfg.gens.as_ref().map(|c| c.to_vec())) {
        spec.generation_counts = gens;
    }
    spec.seeds = seeds(&args.evo, &cfg);
    let (dataset, _) = open_dataset(&dataset_request(&args.data, &cfg)?)?;
    let primitives = dataset.primitive_set()?;
    let dir = out_dir(&args.evo, &cfg, "mep-grid");
    let outcome = run_grid(&spec, &dataset, &primitives, Some(&dir.join("cells")))?;
    outcome.write(&dir)?;
    let failed = outcome.rows.iter().filter(|r| r.best_fitness.is_none()).count();
    println!(
        "{} cells ({} computed, {} reused, {} failed)",
        outcome.rows.len(),
        outcome.computed,
        outcome.reused,
        failed
    );
    for (gens, median) in outcome.median_by_generations() {
        println!("generations {gens}: median {median}");
    }
    println!("wrote {}", dir.join("grid.csv").display());
    Ok(())
}

fn compare(args: CompareArgs) -> Result<()> {
    let cfg = load_config(&args.evo)?;
    let params = params(&args.evo, &cfg, args.pop, args.gens)?;
    let data_dir = args
        .data_dir
        .clone()
        .or_else(|| cfg.data_dir.clone())
        .ok_or_else(|| Error::input("no benchmark directory given (use --data-dir)"))?;
    let suite = run_benchmarks(&data_dir, &params, seeds(&args.evo, &cfg))?;
    let dir = out_dir(&args.evo, &cfg, "mep-compare");
    for report in &suite.reports {
        emit_report(report, &dir.join(&report.dataset.name), &OutputFormat::ALL)?;
    }
    write(&dir.join("benchmarks.csv"), &suite.to_csv())?;
    write(&dir.join("comparison.csv"), &suite.comparison.to_csv())?;
    write(&dir.join("comparison.json"), &(serde_json::to_string_pretty(&suite.comparison)? + "\n"))?;
    for w in &suite.comparison.warnings {
        eprintln!("warning: {w}");
    }
    print!("{}", suite.to_csv());
    println!(
        "against reference: {} wins, {} ties, {} losses",
        suite.comparison.wins, suite.comparison.ties, suite.comparison.losses
    );
    Ok(())
}

fn decode(args: DecodeArgs) -> Result<()> {
    let text = if args.chromosome == Path::new("-") {
        std::io::read_to_string(std::io::stdin()).map_err(|e| Error::io(Path::new("-"), e))?
    } else {
        fs::read_to_string(&args.chromosome).map_err(|e| Error::io(&args.chromosome, e))?
    };
    let (chromosome, primitives) = match &args.terminals {
        Some(names) => {
            let primitives = PrimitiveSet::with_all_functions(names.clone())?;
            (Chromosome::parse_text(&text, &primitives)?, primitives)
        }
        None => parse_with_inferred_terminals(&text)?,
    };
    chromosome.validate(&primitives).into_result()?;
    let genes: Vec<usize> = match args.gene {
        Some(0) => return Err(Error::input("genes are numbered from 1")),
        Some(g) => vec![g - 1],
        None => (0..chromosome.len()).collect(),
    };
    let mut out = String::new();
    match args.format.as_str() {
        "infix" => {
            for g in genes {
                out.push_str(&format!("E{} = {}\n", g + 1, chromosome.decode(g, &primitives)?));
            }
        }
        "dot" => {
            let g = *genes.last().expect("non-empty chromosome");
            out.push_str(&export_dot(&chromosome.decode(g, &primitives)?));
        }
        other => return Err(Error::input(format!("unknown decode format `{other}` (expected infix or dot)"))),
    }
    match &args.out {
        Some(path) => write(path, &out),
        None => {
            print!("{out}");
            Ok(())
        }
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
