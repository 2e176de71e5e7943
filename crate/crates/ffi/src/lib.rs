//! C ABI over `mep-core`.
//!
//! Objects are opaque handles created by `*_load`, `*_parse` or `mep_run`
//! and released with the matching `*_free`. Every fallible call returns a
//! [`MepStatus`]; on failure `mep_last_error_message` describes the error
//! on the calling thread.
//!
//! Text outputs use caller buffers: the call stores the required size
//! including the terminating NUL in `*needed` and writes the string only
//! when `capacity` is large enough, otherwise it returns
//! `MEP_STATUS_BUFFER_TOO_SMALL`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use mep_core::datasets::{load_clean, Dataset, DatasetSchema, BENCHMARKS};
use mep_core::evolution::{self, CrossoverKind, EvolutionParams, GenerationUnit, RunResult};
use mep_core::fitness::{Metric, ProtectedArithmetic};
use mep_core::genome::{self, export_dot, parse_with_inferred_terminals, Chromosome, PrimitiveSet};
use mep_core::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MepStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    LoadError = 3,
    ParseError = 4,
    RunError = 5,
    BufferTooSmall = 6,
    IoError = 7,
    Panic = 8,
}

/// A cleaned dataset.
pub struct MepDataset {
    dataset: Dataset,
}

/// Outcome of one evolutionary run.
pub struct MepRunResult {
    result: RunResult,
    primitives: PrimitiveSet,
}

/// A chromosome with its terminal names.
pub struct MepChromosome {
    chromosome: Chromosome,
    primitives: PrimitiveSet,
}

/// Run parameters. Enumerations are numeric:
/// `crossover_kind` 0 one-point, 1 two-point, 2 uniform;
/// `generation_unit` 0 sweep, 1 step; `metric` 0 MMRE, 1 sum of absolute errors.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MepParams {
    pub population_size: u32,
    pub generations: u32,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub crossover_kind: u32,
    pub tournament_size: u32,
    pub num_genes: u32,
    pub function_probability: f64,
    pub generation_unit: u32,
    pub metric: u32,
    pub seed: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("NUL removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(error: &Error) -> MepStatus {
    match error {
        Error::Load { .. } => MepStatus::LoadError,
        Error::Parse { .. } | Error::Json(_) => MepStatus::ParseError,
        Error::Io { .. } => MepStatus::IoError,
        Error::Fit(_) => MepStatus::RunError,
        _ => MepStatus::InvalidArgument,
    }
}

/// Runs `body`, turning errors and panics into status codes.
fn guard(body: impl FnOnce() -> Result<(), (MepStatus, String)>) -> MepStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => MepStatus::Ok,
        Ok(Err((status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            MepStatus::Panic
        }
    }
}

fn core(e: Error) -> (MepStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(name: &str) -> (MepStatus, String) {
    (MepStatus::NullPointer, format!("`{name}` is null"))
}

fn invalid(message: impl Into<String>) -> (MepStatus, String) {
    (MepStatus::InvalidArgument, message.into())
}

/// Borrows a C string; `None` for a null pointer.
unsafe fn opt_str<'a>(p: *const c_char, name: &str) -> Result<Option<&'a str>, (MepStatus, String)> {
    if p.is_null() {
        return Ok(None);
    }
    CStr::from_ptr(p)
        .to_str()
        .map(Some)
        .map_err(|_| invalid(format!("`{name}` is not valid UTF-8")))
}

unsafe fn req_str<'a>(p: *const c_char, name: &str) -> Result<&'a str, (MepStatus, String)> {
    opt_str(p, name)?.ok_or_else(|| null(name))
}

unsafe fn write_text(
    text: &str,
    buffer: *mut c_char,
    capacity: usize,
    needed: *mut usize,
) -> Result<(), (MepStatus, String)> {
    let size = text.len() + 1;
    if !needed.is_null() {
        *needed = size;
    }
    if buffer.is_null() || capacity < size {
        return Err((
            MepStatus::BufferTooSmall,
            format!("buffer of {capacity} bytes is too small, {size} needed"),
        ));
    }
    ptr::copy_nonoverlapping(text.as_ptr(), buffer as *mut u8, text.len());
    *buffer.add(text.len()) = 0;
    Ok(())
}

fn params_from_c(p: &MepParams) -> Result<EvolutionParams, (MepStatus, String)> {
    let crossover_kind = match p.crossover_kind {
        0 => CrossoverKind::OnePoint,
        1 => CrossoverKind::TwoPoint,
        2 => CrossoverKind::Uniform,
        k => return Err(invalid(format!("unknown crossover kind {k}"))),
    };
    let generation_unit = match p.generation_unit {
        0 => GenerationUnit::Sweep,
        1 => GenerationUnit::Step,
        u => return Err(invalid(format!("unknown generation unit {u}"))),
    };
    let metric = match p.metric {
        0 => Metric::Mmre,
        1 => Metric::SumAbsError,
        m => return Err(invalid(format!("unknown metric {m}"))),
    };
    let params = EvolutionParams {
        population_size: p.population_size as usize,
        generations: p.generations as usize,
        crossover_rate: p.crossover_rate,
        mutation_rate: p.mutation_rate,
        crossover_kind,
        tournament_size: p.tournament_size as usize,
        num_genes: p.num_genes as usize,
        function_probability: p.function_probability,
        generation_unit,
        metric,
        arithmetic: ProtectedArithmetic::default(),
        seed: p.seed,
    };
    params.validate().map_err(core)?;
    Ok(params)
}

/// Fills `out` with the default parameters.
///
/// # Safety
/// `out` must be null or point to writable memory for one `MepParams`.
#[no_mangle]
pub unsafe extern "C" fn mep_params_default(out: *mut MepParams) -> MepStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let d = EvolutionParams::default();
        *out = MepParams {
            population_size: d.population_size as u32,
            generations: d.generations as u32,
            crossover_rate: d.crossover_rate,
            mutation_rate: d.mutation_rate,
            crossover_kind: 2,
            tournament_size: d.tournament_size as u32,
            num_genes: d.num_genes as u32,
            function_probability: d.function_probability,
            generation_unit: 0,
            metric: 0,
            seed: d.seed,
        };
        Ok(())
    })
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn mep_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// `(max_arity + 1) * (num_genes - 1) + 1`: the most symbols a chromosome of
/// `num_genes >= 1` genes can hold.
#[no_mangle]
pub extern "C" fn mep_capacity(max_arity: usize, num_genes: usize) -> usize {
    genome::capacity(max_arity, num_genes)
}

/// Loads and cleans a CSV. `schema` names a built-in layout; when null, the
/// file stem is tried as one. `effort_column` overrides the schema's effort
/// column and is required for files without a schema.
///
/// # Safety
/// String arguments must be null or NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mep_dataset_load(
    path: *const c_char,
    schema: *const c_char,
    effort_column: *const c_char,
    out: *mut *mut MepDataset,
) -> MepStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = ptr::null_mut();
        let path = Path::new(req_str(path, "path")?);
        let schema = opt_str(schema, "schema")?;
        let effort = opt_str(effort_column, "effort_column")?;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("dataset");
        let mut layout = match (schema, effort) {
            (Some(name), _) => DatasetSchema::builtin(name).map_err(core)?,
            (None, _) if BENCHMARKS.contains(&stem) => DatasetSchema::builtin(stem).map_err(core)?,
            (None, Some(col)) => DatasetSchema::custom(stem, col),
            (None, None) => return Err(invalid("no schema or effort column for a non-benchmark file")),
        };
        if let Some(col) = effort {
            layout.effort_column = col.to_string();
        }
        let dataset = load_clean(path, &layout).map_err(core)?;
        *out = Box::into_raw(Box::new(MepDataset { dataset }));
        Ok(())
    })
}

/// Number of cases, or 0 for null.
///
/// # Safety
/// `dataset` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mep_dataset_len(dataset: *const MepDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.dataset.len())
}

/// Number of feature columns, or 0 for null.
///
/// # Safety
/// `dataset` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mep_dataset_feature_count(dataset: *const MepDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.dataset.feature_names().len())
}

/// # Safety
/// `dataset` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mep_dataset_free(dataset: *mut MepDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// Evolves on `dataset`. Deterministic in `params->seed`.
///
/// # Safety
/// `dataset` and `params` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mep_run(
    dataset: *const MepDataset,
    params: *const MepParams,
    out: *mut *mut MepRunResult,
) -> MepStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = ptr::null_mut();
        let dataset = &dataset.as_ref().ok_or_else(|| null("dataset"))?.dataset;
        let params = params_from_c(params.as_ref().ok_or_else(|| null("params"))?)?;
        let primitives = dataset.primitive_set().map_err(core)?;
        let result = evolution::run(&params, dataset, &primitives).map_err(core)?;
        *out = Box::into_raw(Box::new(MepRunResult { result, primitives }));
        Ok(())
    })
}

/// # Safety
/// `result` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mep_run_best_fitness(result: *const MepRunResult, out: *mut f64) -> MepStatus {
    guard(|| {
        let r = result.as_ref().ok_or_else(|| null("result"))?;
        *out.as_mut().ok_or_else(|| null("out"))? = r.result.best_fitness;
        Ok(())
    })
}

/// First generation at which the best fitness was reached (0: initial
/// population).
///
/// # Safety
/// `result` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mep_run_generation_of_best(result: *const MepRunResult, out: *mut usize) -> MepStatus {
    guard(|| {
        let r = result.as_ref().ok_or_else(|| null("result"))?;
        *out.as_mut().ok_or_else(|| null("out"))? = r.result.generation_of_best;
        Ok(())
    })
}

/// Copies the per-generation best fitness into `buffer`. `*length` receives
/// the trace length; nothing is copied when `capacity` is smaller.
///
/// # Safety
/// `buffer` must hold `capacity` doubles; `length` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mep_run_trace(
    result: *const MepRunResult,
    buffer: *mut f64,
    capacity: usize,
    length: *mut usize,
) -> MepStatus {
    guard(|| {
        let r = result.as_ref().ok_or_else(|| null("result"))?;
        let length = length.as_mut().ok_or_else(|| null("length"))?;
        let trace = &r.result.fitness_trace;
        *length = trace.len();
        if trace.is_empty() {
            return Ok(());
        }
        if buffer.is_null() || capacity < trace.len() {
            return Err((MepStatus::BufferTooSmall, format!("trace needs {} entries", trace.len())));
        }
        for (i, rec) in trace.iter().enumerate() {
            *buffer.add(i) = rec.best_fitness;
        }
        Ok(())
    })
}

/// Best expression in infix form.
///
/// # Safety
/// `buffer` must hold `capacity` bytes; `needed` may be null.
#[no_mangle]
pub unsafe extern "C" fn mep_run_expression(
    result: *const MepRunResult,
    buffer: *mut c_char,
    capacity: usize,
    needed: *mut usize,
) -> MepStatus {
    guard(|| {
        let r = result.as_ref().ok_or_else(|| null("result"))?;
        write_text(&r.result.best_expression.infix(), buffer, capacity, needed)
    })
}

/// Full result as JSON.
///
/// # Safety
/// `buffer` must hold `capacity` bytes; `needed` may be null.
#[no_mangle]
pub unsafe extern "C" fn mep_run_json(
    result: *const MepRunResult,
    buffer: *mut c_char,
    capacity: usize,
    needed: *mut usize,
) -> MepStatus {
    guard(|| {
        let r = result.as_ref().ok_or_else(|| null("result"))?;
        let json = serde_json::to_string(&r.result).map_err(|e| core(e.into()))?;
        write_text(&json, buffer, capacity, needed)
    })
}

/// A new handle for the best chromosome of a run.
///
/// # Safety
/// `result` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mep_run_best_chromosome(
    result: *const MepRunResult,
    out: *mut *mut MepChromosome,
) -> MepStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let r = result.as_ref().ok_or_else(|| null("result"))?;
        *out = Box::into_raw(Box::new(MepChromosome {
            chromosome: r.result.best_chromosome.clone(),
            primitives: r.primitives.clone(),
        }));
        Ok(())
    })
}

/// # Safety
/// `result` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mep_run_free(result: *mut MepRunResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Parses chromosome text (`N: symbol operands` lines). Terminals are the
/// non-function symbols in order of first appearance.
///
/// # Safety
/// `text` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mep_chromosome_parse(text: *const c_char, out: *mut *mut MepChromosome) -> MepStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = ptr::null_mut();
        let (chromosome, primitives) = parse_with_inferred_terminals(req_str(text, "text")?).map_err(core)?;
        chromosome.validate(&primitives).into_result().map_err(core)?;
        *out = Box::into_raw(Box::new(MepChromosome { chromosome, primitives }));
        Ok(())
    })
}

/// Number of genes, or 0 for null.
///
/// # Safety
/// `chromosome` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mep_chromosome_len(chromosome: *const MepChromosome) -> usize {
    chromosome.as_ref().map_or(0, |c| c.chromosome.len())
}

/// Number of terminals, or 0 for null.
///
/// # Safety
/// `chromosome` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mep_chromosome_terminal_count(chromosome: *const MepChromosome) -> usize {
    chromosome.as_ref().map_or(0, |c| c.primitives.terminals().len())
}

/// Infix form of gene `gene` (0-based).
///
/// # Safety
/// `buffer` must hold `capacity` bytes; `needed` may be null.
#[no_mangle]
pub unsafe extern "C" fn mep_chromosome_decode(
    chromosome: *const MepChromosome,
    gene: usize,
    buffer: *mut c_char,
    capacity: usize,
    needed: *mut usize,
) -> MepStatus {
    guard(|| {
        let c = chromosome.as_ref().ok_or_else(|| null("chromosome"))?;
        let tree = c.chromosome.decode(gene, &c.primitives).map_err(core)?;
        write_text(&tree.infix(), buffer, capacity, needed)
    })
}

/// Graphviz DOT document for gene `gene` (0-based).
///
/// # Safety
/// `buffer` must hold `capacity` bytes; `needed` may be null.
#[no_mangle]
pub unsafe extern "C" fn mep_chromosome_dot(
    chromosome: *const MepChromosome,
    gene: usize,
    buffer: *mut c_char,
    capacity: usize,
    needed: *mut usize,
) -> MepStatus {
    guard(|| {
        let c = chromosome.as_ref().ok_or_else(|| null("chromosome"))?;
        let tree = c.chromosome.decode(gene, &c.primitives).map_err(core)?;
        write_text(&export_dot(&tree), buffer, capacity, needed)
    })
}

/// Evaluates every gene on one case. `values` holds one value per terminal
/// in terminal order; `outputs` receives one value per gene.
///
/// # Safety
/// `values` must hold `value_count` doubles and `outputs` `output_capacity`.
#[no_mangle]
pub unsafe extern "C" fn mep_chromosome_evaluate(
    chromosome: *const MepChromosome,
    values: *const f64,
    value_count: usize,
    outputs: *mut f64,
    output_capacity: usize,
) -> MepStatus {
    guard(|| {
        let c = chromosome.as_ref().ok_or_else(|| null("chromosome"))?;
        if value_count != c.primitives.terminals().len() {
            return Err(invalid(format!(
                "expected {} terminal values, got {value_count}",
                c.primitives.terminals().len()
            )));
        }
        if values.is_null() && value_count > 0 {
            return Err(null("values"));
        }
        let case = if value_count == 0 { &[][..] } else { std::slice::from_raw_parts(values, value_count) };
        let result = c.chromosome.evaluate_all(case, &ProtectedArithmetic::default()).map_err(core)?;
        if outputs.is_null() || output_capacity < result.len() {
            return Err((MepStatus::BufferTooSmall, format!("outputs need {} entries", result.len())));
        }
        ptr::copy_nonoverlapping(result.as_ptr(), outputs, result.len());
        Ok(())
    })
}

/// # Safety
/// `chromosome` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mep_chromosome_free(chromosome: *mut MepChromosome) {
    if !chromosome.is_null() {
        drop(Box::from_raw(chromosome));
    }
}
