#ifndef NEHARI_KIRCHHOFF_H
#define NEHARI_KIRCHHOFF_H

/* Generated by cbindgen from nehari-kirchhoff-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes shared by every entry point: `NK_STATUS_OK` on success,
 * positive values mirror the library's diagnostic codes, negative values
 * are boundary failures.
 */
#define NK_STATUS_OK 0

#define NK_STATUS_NULL_ARGUMENT -1

#define NK_STATUS_INVALID_STRING -2

#define NK_STATUS_PANIC -3

#define NK_STATUS_BUFFER_TOO_SMALL -4

/**
 * Branch selector.
 */
typedef enum NkBranch {
  NkBranch_Plus = 0,
  NkBranch_Minus = 1,
} NkBranch;

/**
 * Nehari class of a certified solution.
 */
typedef enum NkClass {
  NkClass_Plus = 0,
  NkClass_Minus = 1,
  NkClass_Zero = 2,
  NkClass_Off = 3,
} NkClass;

/**
 * Opaque validated configuration handle.
 */
typedef struct NkConfig NkConfig;

/**
 * Opaque solve-report handle.
 */
typedef struct NkReport NkReport;

/**
 * Threshold bundle (plain struct, no ownership).
 */
typedef struct NkThresholds {
  double lambda_star;
  double lambda_dstar;
  double lambda_tstar;
  double eta0;
  double eta_lambda;
  double c_level;
  double s_p;
  double coercivity_c;
  double s_m;
  double omega_measure;
} NkThresholds;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parse and validate a configuration from the plain-text `key = value`
 * format. On success writes a newly allocated handle to `out`.
 *
 * # Safety
 * `text` must be a valid NUL-terminated string and `out` a valid pointer.
 */
int32_t nk_config_parse(const char *text, struct NkConfig **out);

/**
 * Load and validate a configuration file.
 *
 * # Safety
 * `path` must be a valid NUL-terminated string and `out` a valid pointer.
 */
int32_t nk_config_load(const char *path, struct NkConfig **out);

/**
 * Release a configuration handle.
 *
 * # Safety
 * `cfg` must be a handle from `nk_config_parse`/`nk_config_load` or null.
 */
void nk_config_free(struct NkConfig *cfg);

/**
 * Replace lambda (revalidates the configuration).
 *
 * # Safety
 * `cfg` must be a live configuration handle.
 */
int32_t nk_config_set_lambda(struct NkConfig *cfg, double lambda);

/**
 * # Safety
 * `cfg` must be a live configuration handle.
 */
double nk_config_lambda(const struct NkConfig *cfg);

/**
 * Critical Sobolev exponent of the configuration.
 *
 * # Safety
 * `cfg` must be a live configuration handle.
 */
double nk_config_p_star(const struct NkConfig *cfg);

/**
 * Compute the admissibility-constant bundle on a mesh with `mesh_nodes`
 * nodes (the Sobolev constant estimate runs on the same mesh).
 *
 * # Safety
 * `cfg` must be a live handle and `out` a valid pointer.
 */
int32_t nk_thresholds(const struct NkConfig *cfg, uintptr_t mesh_nodes, struct NkThresholds *out);

/**
 * Run the branch minimizer from the documented initialization and hand
 * back a certified report. In the critical regime the minus branch first
 * solves the plus branch internally to seed the crossing path.
 *
 * # Safety
 * `cfg` must be a live handle and `out` a valid pointer.
 */
int32_t nk_solve(const struct NkConfig *cfg,
                 enum NkBranch branch,
                 uintptr_t mesh_nodes,
                 struct NkReport **out);

/**
 * # Safety
 * `report` must be a live report handle.
 */
double nk_report_energy(const struct NkReport *report);

/**
 * Dual-norm residual of the certified weak form.
 *
 * # Safety
 * `report` must be a live report handle.
 */
double nk_report_residual(const struct NkReport *report);

/**
 * Scale against which the residual tolerance is applied.
 *
 * # Safety
 * `report` must be a live report handle.
 */
double nk_report_residual_scale(const struct NkReport *report);

/**
 * X-norm of the solution.
 *
 * # Safety
 * `report` must be a live report handle.
 */
double nk_report_norm(const struct NkReport *report);

/**
 * # Safety
 * `report` must be a live report handle.
 */
uintptr_t nk_report_iterations(const struct NkReport *report);

/**
 * # Safety
 * `report` must be a live report handle.
 */
enum NkClass nk_report_class(const struct NkReport *report);

/**
 * Number of nodal values of the solution.
 *
 * # Safety
 * `report` must be a live report handle.
 */
uintptr_t nk_report_solution_len(const struct NkReport *report);

/**
 * Copy the nodal values into `buf` (capacity `len`).
 *
 * # Safety
 * `report` must be a live report handle and `buf` must point to at least
 * `len` doubles.
 */
int32_t nk_report_solution_copy(const struct NkReport *report, double *buf, uintptr_t len);

/**
 * Release a report handle.
 *
 * # Safety
 * `report` must be a handle from `nk_solve` or null.
 */
void nk_report_free(struct NkReport *report);

/**
 * Static description of a status code; never null.
 */
const char *nk_error_message(int32_t code);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* NEHARI_KIRCHHOFF_H */
