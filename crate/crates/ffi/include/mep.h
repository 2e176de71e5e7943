#ifndef MEP_H
#define MEP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

typedef enum MepStatus {
  MEP_STATUS_OK = 0,
  MEP_STATUS_NULL_POINTER = 1,
  MEP_STATUS_INVALID_ARGUMENT = 2,
  MEP_STATUS_LOAD_ERROR = 3,
  MEP_STATUS_PARSE_ERROR = 4,
  MEP_STATUS_RUN_ERROR = 5,
  MEP_STATUS_BUFFER_TOO_SMALL = 6,
  MEP_STATUS_IO_ERROR = 7,
  MEP_STATUS_PANIC = 8,
} MepStatus;

/**
 * A chromosome with its terminal names.
 */
typedef struct MepChromosome MepChromosome;

/**
 * A cleaned dataset.
 */
typedef struct MepDataset MepDataset;

/**
 * Outcome of one evolutionary run.
 */
typedef struct MepRunResult MepRunResult;

/**
 * Run parameters. Enumerations are numeric:
 * `crossover_kind` 0 one-point, 1 two-point, 2 uniform;
 * `generation_unit` 0 sweep, 1 step; `metric` 0 MMRE, 1 sum of absolute errors.
 */
typedef struct MepParams {
  uint32_t population_size;
  uint32_t generations;
  double crossover_rate;
  double mutation_rate;
  uint32_t crossover_kind;
  uint32_t tournament_size;
  uint32_t num_genes;
  double function_probability;
  uint32_t generation_unit;
  uint32_t metric;
  uint64_t seed;
} MepParams;

/**
 * Fills `out` with the default parameters.
 *
 * # Safety
 * `out` must be null or point to writable memory for one `MepParams`.
 */
enum MepStatus mep_params_default(struct MepParams *out);

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next call into this library on the same thread.
 */
const char *mep_last_error_message(void);

/**
 * `(max_arity + 1) * (num_genes - 1) + 1`: the most symbols a chromosome of
 * `num_genes >= 1` genes can hold.
 */
size_t mep_capacity(size_t max_arity, size_t num_genes);

/**
 * Loads and cleans a CSV. `schema` names a built-in layout; when null, the
 * file stem is tried as one. `effort_column` overrides the schema's effort
 * column and is required for files without a schema.
 *
 * # Safety
 * String arguments must be null or NUL-terminated; `out` must be writable.
 */
enum MepStatus mep_dataset_load(const char *path,
                                const char *schema,
                                const char *effort_column,
                                struct MepDataset **out);

/**
 * Number of cases, or 0 for null.
 *
 * # Safety
 * `dataset` must be null or a live handle.
 */
size_t mep_dataset_len(const struct MepDataset *dataset);

/**
 * Number of feature columns, or 0 for null.
 *
 * # Safety
 * `dataset` must be null or a live handle.
 */
size_t mep_dataset_feature_count(const struct MepDataset *dataset);

/**
 * # Safety
 * `dataset` must be null or a handle not yet freed.
 */
void mep_dataset_free(struct MepDataset *dataset);

/**
 * Evolves on `dataset`. Deterministic in `params->seed`.
 *
 * # Safety
 * `dataset` and `params` must be live; `out` must be writable.
 */
enum MepStatus mep_run(const struct MepDataset *dataset,
                       const struct MepParams *params,
                       struct MepRunResult **out);

/**
 * # Safety
 * `result` must be live; `out` must be writable.
 */
enum MepStatus mep_run_best_fitness(const struct MepRunResult *result, double *out);

/**
 * First generation at which the best fitness was reached (0: initial
 * population).
 *
 * # Safety
 * `result` must be live; `out` must be writable.
 */
enum MepStatus mep_run_generation_of_best(const struct MepRunResult *result, size_t *out);

/**
 * Copies the per-generation best fitness into `buffer`. `*length` receives
 * the trace length; nothing is copied when `capacity` is smaller.
 *
 * # Safety
 * `buffer` must hold `capacity` doubles; `length` must be writable.
 */
enum MepStatus mep_run_trace(const struct MepRunResult *result,
                             double *buffer,
                             size_t capacity,
                             size_t *length);

/**
 * Best expression in infix form.
 *
 * # Safety
 * `buffer` must hold `capacity` bytes; `needed` may be null.
 */
enum MepStatus mep_run_expression(const struct MepRunResult *result,
                                  char *buffer,
                                  size_t capacity,
                                  size_t *needed);

/**
 * Full result as JSON.
 *
 * # Safety
 * `buffer` must hold `capacity` bytes; `needed` may be null.
 */
enum MepStatus mep_run_json(const struct MepRunResult *result,
                            char *buffer,
                            size_t capacity,
                            size_t *needed);

/**
 * A new handle for the best chromosome of a run.
 *
 * # Safety
 * `result` must be live; `out` must be writable.
 */
enum MepStatus mep_run_best_chromosome(const struct MepRunResult *result,
                                       struct MepChromosome **out);

/**
 * # Safety
 * `result` must be null or a handle not yet freed.
 */
void mep_run_free(struct MepRunResult *result);

/**
 * Parses chromosome text (`N: symbol operands` lines). Terminals are the
 * non-function symbols in order of first appearance.
 *
 * # Safety
 * `text` must be NUL-terminated; `out` must be writable.
 */
enum MepStatus mep_chromosome_parse(const char *text, struct MepChromosome **out);

/**
 * Number of genes, or 0 for null.
 *
 * # Safety
 * `chromosome` must be null or a live handle.
 */
size_t mep_chromosome_len(const struct MepChromosome *chromosome);

/**
 * Number of terminals, or 0 for null.
 *
 * # Safety
 * `chromosome` must be null or a live handle.
 */
size_t mep_chromosome_terminal_count(const struct MepChromosome *chromosome);

/**
 * Infix form of gene `gene` (0-based).
 *
 * # Safety
 * `buffer` must hold `capacity` bytes; `needed` may be null.
 */
enum MepStatus mep_chromosome_decode(const struct MepChromosome *chromosome,
                                     size_t gene,
                                     char *buffer,
                                     size_t capacity,
                                     size_t *needed);

/**
 * Graphviz DOT document for gene `gene` (0-based).
 *
 * # Safety
 * `buffer` must hold `capacity` bytes; `needed` may be null.
 */
enum MepStatus mep_chromosome_dot(const struct MepChromosome *chromosome,
                                  size_t gene,
                                  char *buffer,
                                  size_t capacity,
                                  size_t *needed);

/**
 * Evaluates every gene on one case. `values` holds one value per terminal
 * in terminal order; `outputs` receives one value per gene.
 *
 * # Safety
 * `values` must hold `value_count` doubles and `outputs` `output_capacity`.
 */
enum MepStatus mep_chromosome_evaluate(const struct MepChromosome *chromosome,
                                       const double *values,
                                       size_t value_count,
                                       double *outputs,
                                       size_t output_capacity);

/**
 * # Safety
 * `chromosome` must be null or a handle not yet freed.
 */
void mep_chromosome_free(struct MepChromosome *chromosome);

#endif  /* MEP_H */
