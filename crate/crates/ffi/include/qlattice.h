#ifndef QLATTICE_H
#define QLATTICE_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum QlStatus {
  QL_STATUS_OK = 0,
  QL_STATUS_NULL_POINTER = 1,
  QL_STATUS_INVALID_ARGUMENT = 2,
  QL_STATUS_INVALID_Q_TENSOR = 3,
  QL_STATUS_DEGENERATE_GRID = 4,
  QL_STATUS_UNSUPPORTED = 5,
  QL_STATUS_INFEASIBLE = 6,
  QL_STATUS_DEGENERATE_LOOP = 7,
  QL_STATUS_SINGULAR_SITE = 8,
  QL_STATUS_OPTIMIZATION_FAILURE = 9,
  QL_STATUS_IO = 10,
  QL_STATUS_INTERNAL = 11,
  QL_STATUS_PANIC = 12,
} QlStatus;

/**
 * Interaction range of an energy evaluation.
 */
typedef enum QlBonds {
  QL_BONDS_NEAREST = 0,
  QL_BONDS_NEAREST_WITH_DIAGONAL_COMPETITION = 1,
} QlBonds;

typedef enum QlScaling {
  QL_SCALING_BULK = 0,
  QL_SCALING_FIRST_ORDER = 1,
  QL_SCALING_CONCENTRATION = 2,
} QlScaling;

/**
 * Opaque planar director field.
 */
typedef struct QlField2 QlField2;

/**
 * Opaque pair potential.
 */
typedef struct QlPotential QlPotential;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (nul
 * terminated, truncated to `len`). Returns the full message length, 0 if
 * there is none.
 */
size_t ql_last_error_message(char *buf, size_t len);

/**
 * Builds a potential from JSON such as `{"kind":"quartic-well","s":0.5}`.
 */
enum QlStatus ql_potential_from_json(const char *json, struct QlPotential **out_potential);

void ql_potential_free(struct QlPotential *p);

/**
 * Profile `h(x)` of an isotropic potential.
 */
enum QlStatus ql_potential_profile(const struct QlPotential *p, double x, double *out_value);

/**
 * Homogenized planar density `4 f̂**(Q)` at `Q = [[q11, q12], [q12, q22]]`.
 */
enum QlStatus ql_homogenized_density_2d(const struct QlPotential *p,
                                        double q11,
                                        double q12,
                                        double q22,
                                        double *out_value);

/**
 * Field of `e1` on the lattice `εZ² ∩ [x0, x1] × [y0, y1]`.
 */
enum QlStatus ql_field2_new(double x0,
                            double y0,
                            double x1,
                            double y1,
                            double eps,
                            struct QlField2 **out_field);

/**
 * Half vortex of the given sign on `[-1/2, 1/2]²` at spacing `1/n`.
 */
enum QlStatus ql_field2_half_vortex(size_t n,
                                    double cx,
                                    double cy,
                                    int32_t sign,
                                    struct QlField2 **out_field);

void ql_field2_free(struct QlField2 *f);

/**
 * Number of sites (row-major order, first index slowest).
 */
enum QlStatus ql_field2_len(const struct QlField2 *f, size_t *out_len);

/**
 * Replaces every director by `(cos a, sin a)` with `a` from `angles`.
 */
enum QlStatus ql_field2_set_angles(struct QlField2 *f, const double *angles, size_t len);

/**
 * Director angles in `(-π, π]`, written into `angles[0..len]`.
 */
enum QlStatus ql_field2_angles(const struct QlField2 *f, double *angles, size_t len);

/**
 * Discrete energy summed over ordered bonds.
 */
enum QlStatus ql_energy(const struct QlField2 *f,
                        const struct QlPotential *p,
                        enum QlBonds bonds,
                        enum QlScaling scaling,
                        double *out_value);

/**
 * Degree of the auxiliary map along the lattice circle of radius `r`.
 */
enum QlStatus ql_winding_number(const struct QlField2 *f,
                                double cx,
                                double cy,
                                double r,
                                int64_t *out_degree,
                                double *out_residual);

/**
 * Annealed cell problem; writes the per-site minimum and the distance of
 * the achieved mean from the target.
 */
enum QlStatus ql_cell_problem(const struct QlPotential *p,
                              double q11,
                              double q12,
                              double q22,
                              double radius,
                              size_t window,
                              size_t angles,
                              uint64_t seed,
                              double *out_value,
                              double *out_mean_distance);

/**
 * Runs a JSON experiment configuration and writes its artifacts into
 * `out_dir`. `out_exit_code` receives the command-line exit code
 * (0 pass, 1 tolerance failure, 2 configuration error).
 */
enum QlStatus ql_run_experiment(const char *config_json,
                                const char *out_dir,
                                int32_t *out_exit_code);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QLATTICE_H */
