#ifndef NBFEM_H
#define NBFEM_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every call. The numeric values 2, 3 and 4 match the exit
 * codes of the command-line driver.
 */
typedef enum {
  NBFEM_STATUS_OK = 0,
  NBFEM_STATUS_FAILED = 1,
  NBFEM_STATUS_CONFIG = 2,
  NBFEM_STATUS_RESOURCE = 3,
  NBFEM_STATUS_SOLVER = 4,
  NBFEM_STATUS_NULL_POINTER = 5,
  NBFEM_STATUS_INVALID_UTF8 = 6,
  NBFEM_STATUS_OUT_OF_RANGE = 7,
  NBFEM_STATUS_PANIC = 8,
} NbfemStatus;

/**
 * Run configuration. Create with [`nbfem_config_new`] or [`nbfem_config_from_json`].
 */
typedef struct NbfemConfig NbfemConfig;

/**
 * Table produced by a run.
 */
typedef struct NbfemReport NbfemReport;

/**
 * One row of a report. EOC fields are NaN where undefined (first level).
 */
typedef struct {
  uint32_t level;
  double h;
  double d;
  uint64_t dofs;
  uint64_t active_cells;
  double l2_gamma;
  double eoc_l2;
  double h1_gamma;
  double eoc_h1;
  double h1_band;
  double eoc_band;
  uint64_t cg_iters;
  double relative_residual;
  double gamma_measure;
  double seconds;
} NbfemRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer
 * stays valid until the next call into this library on the same thread.
 */
const char *nbfem_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *nbfem_version(void);

/**
 * New configuration with default values (circle preset and its experiment levels).
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for a handle.
 */
NbfemStatus nbfem_config_new(NbfemConfig **out);

/**
 * Parse a configuration from JSON text with the same keys as `--config`.
 *
 * # Safety
 * `json` must be NUL-terminated; `out` must be writable.
 */
NbfemStatus nbfem_config_from_json(const char *json, NbfemConfig **out);

/**
 * Set one configuration key. `value` is parsed as JSON when possible and
 * taken as a string otherwise, so both `"3"` and `"circle-p2"` work.
 * An empty value or `null` resets the key to its default.
 *
 * # Safety
 * `config` must be a live handle; `key` and `value` NUL-terminated.
 */
NbfemStatus nbfem_config_set(NbfemConfig *config, const char *key, const char *value);

/**
 * Configuration as JSON. Free the result with [`nbfem_string_free`].
 *
 * # Safety
 * `config` must be a live handle; `out` writable.
 */
NbfemStatus nbfem_config_to_json(const NbfemConfig *config, char **out);

/**
 * # Safety
 * `config` must be NULL or a handle not yet freed.
 */
void nbfem_config_free(NbfemConfig *config);

/**
 * Run a refinement study over the configured levels. Output paths in the
 * configuration are honoured.
 *
 * # Safety
 * `config` must be a live handle; `out` writable.
 */
NbfemStatus nbfem_run_convergence(const NbfemConfig *config, NbfemReport **out);

/**
 * Solve on one level; the report has a single row. Writes VTK if the
 * configuration sets `vtk`.
 *
 * # Safety
 * `config` must be a live handle; `out` writable.
 */
NbfemStatus nbfem_run_single(const NbfemConfig *config, uint32_t level, NbfemReport **out);

/**
 * Number of rows in a report (0 for NULL).
 *
 * # Safety
 * `report` must be NULL or a live handle.
 */
size_t nbfem_report_len(const NbfemReport *report);

/**
 * Copy row `index` into `row`.
 *
 * # Safety
 * `report` must be a live handle; `row` writable.
 */
NbfemStatus nbfem_report_row(const NbfemReport *report, size_t index, NbfemRow *row);

/**
 * Report as CSV text. Free the result with [`nbfem_string_free`].
 *
 * # Safety
 * `report` must be a live handle; `out` writable.
 */
NbfemStatus nbfem_report_csv(const NbfemReport *report, char **out);

/**
 * Report as a Markdown table with the configuration header.
 *
 * # Safety
 * `report` must be a live handle; `out` writable.
 */
NbfemStatus nbfem_report_markdown(const NbfemReport *report, char **out);

/**
 * # Safety
 * `report` must be NULL or a handle not yet freed.
 */
void nbfem_report_free(NbfemReport *report);

/**
 * Release a string returned by this library.
 *
 * # Safety
 * `s` must be NULL or a string obtained from this library, not yet freed.
 */
void nbfem_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NBFEM_H */
