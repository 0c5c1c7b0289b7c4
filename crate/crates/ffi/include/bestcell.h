#ifndef BESTCELL_H
#define BESTCELL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum BcStatus {
  BC_STATUS_OK = 0,
  BC_STATUS_NULL_POINTER = 1,
  BC_STATUS_DOMAIN = 2,
  BC_STATUS_MODEL_DOMAIN = 3,
  BC_STATUS_CONVERGENCE = 4,
  BC_STATUS_INFEASIBLE_LOAD = 5,
  BC_STATUS_RANGE = 6,
  BC_STATUS_CONFIG = 7,
  BC_STATUS_PANIC = 8,
} BcStatus;

/**
 * Network configuration handle.
 */
typedef struct BcModel BcModel;

/**
 * Simulation result handle.
 */
typedef struct BcSimResult BcSimResult;

/**
 * Per-bin simulation statistics.
 */
typedef struct BcBin {
  double r_lo;
  double r_hi;
  uint64_t dropped;
  uint64_t attached;
  double attach_freq;
  double attach_freq_se;
  double own_gain;
  double ocif;
  double ocif_se;
  double f_mean;
  double f_mean_se;
  double f_sq_mean;
} BcBin;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message into `buf` (NUL-terminated, truncated to
 * `len`) and returns the full message length in bytes.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t bc_last_error_message(char *buf, size_t len);

/**
 * Creates a model with default `k0`, `r0`, term count and grid.
 *
 * # Safety
 * `out` must be null or a valid pointer to write the handle to.
 */
enum BcStatus bc_model_new(double eta, double sigma_db, double cell_radius, struct BcModel **out);

/**
 * # Safety
 * `model` must be null or a handle from [`bc_model_new`] not yet freed.
 */
void bc_model_free(struct BcModel *model);

/**
 * # Safety
 * `model` must be a live handle.
 */
enum BcStatus bc_model_set_k0(struct BcModel *model, double k0);

/**
 * # Safety
 * `model` must be a live handle.
 */
enum BcStatus bc_model_set_r0(struct BcModel *model, double r0);

/**
 * `terms` is 0 for automatic selection, otherwise 2 or 3.
 *
 * # Safety
 * `model` must be a live handle.
 */
enum BcStatus bc_model_set_marginal_terms(struct BcModel *model, uint32_t terms);

/**
 * # Safety
 * `model` must be a live handle.
 */
enum BcStatus bc_model_set_grid_points(struct BcModel *model, size_t n);

double bc_q_function(double x);

/**
 * # Safety
 * `out` must be a valid pointer.
 */
enum BcStatus bc_q_inverse(double p, double *out);

/**
 * # Safety
 * `model` must be a live handle and `out` a valid pointer.
 */
enum BcStatus bc_attach_probability(const struct BcModel *model, double r_b, double *out);

/**
 * Writes the two near-neighbour OCIF terms and the far-field term.
 * Pass `INFINITY` for an unbounded network.
 *
 * # Safety
 * `model` must be a live handle and `out` must point to 3 doubles.
 */
enum BcStatus bc_ocif_terms(const struct BcModel *model, double r_b, double r_inf, double *out);

/**
 * Conditional mean and second moment of the interference-to-own-power
 * ratio at `r_b`.
 *
 * # Safety
 * `model` must be a live handle; `mean` and `second` valid pointers.
 */
enum BcStatus bc_iopr_moments(const struct BcModel *model,
                              double r_b,
                              double r_inf,
                              double *mean,
                              double *second);

/**
 * Cell-wide mean OCIF gain and mean and variance of the IOPR.
 *
 * # Safety
 * `model` must be a live handle; out-pointers valid.
 */
enum BcStatus bc_spatial_stats(const struct BcModel *model,
                               double r_inf,
                               double *mu_g,
                               double *mu_f,
                               double *var_f);

/**
 * Cell-average outage at a linear SIR threshold.
 *
 * # Safety
 * `model` must be a live handle and `out` a valid pointer.
 */
enum BcStatus bc_cell_outage(const struct BcModel *model, double gamma, double r_inf, double *out);

/**
 * Maximum BS power at `cell_radius` with the default noise constants.
 *
 * # Safety
 * `model` must be a live handle and `out` a valid pointer.
 */
enum BcStatus bc_max_bs_power(const struct BcModel *model, double cell_radius, double *out);

/**
 * Runs the grid simulation. `workers = 0` uses all cores; results do not
 * depend on `workers`.
 *
 * # Safety
 * `model` must be a live handle and `out` a valid pointer.
 */
enum BcStatus bc_simulate(const struct BcModel *model,
                          uint64_t samples,
                          uint64_t seed,
                          size_t workers,
                          struct BcSimResult **out);

/**
 * # Safety
 * `res` must be null or a handle from [`bc_simulate`] not yet freed.
 */
void bc_sim_free(struct BcSimResult *res);

/**
 * Number of distance bins, or 0 for a null handle.
 *
 * # Safety
 * `res` must be null or a live handle.
 */
size_t bc_sim_bin_count(const struct BcSimResult *res);

/**
 * Attached fraction, mean IOPR and IOPR variance over attached mobiles.
 *
 * # Safety
 * `res` must be a live handle; out-pointers valid.
 */
enum BcStatus bc_sim_summary(const struct BcSimResult *res,
                             double *attached_fraction,
                             double *mu_f,
                             double *var_f);

/**
 * # Safety
 * `res` must be a live handle and `out` a valid pointer.
 */
enum BcStatus bc_sim_bin(const struct BcSimResult *res, size_t index, struct BcBin *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BESTCELL_H */
