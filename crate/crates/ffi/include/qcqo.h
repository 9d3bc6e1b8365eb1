#ifndef QCQO_H
#define QCQO_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum QcqoSolverKind {
  QCQO_SOLVER_KIND_EXHAUSTIVE = 0,
  QCQO_SOLVER_KIND_SIMULATED_ANNEALING = 1,
} QcqoSolverKind;

// Result codes. `QCQO_STATUS_OK` is zero; everything else is an error.
typedef enum QcqoStatus {
  QCQO_STATUS_OK = 0,
  QCQO_STATUS_NULL_POINTER = 1,
  QCQO_STATUS_DIMENSION_MISMATCH = 2,
  QCQO_STATUS_NOT_SQUARE = 3,
  QCQO_STATUS_NON_BINARY = 4,
  QCQO_STATUS_TOO_LARGE = 5,
  QCQO_STATUS_INVALID_PARAMETER = 6,
  QCQO_STATUS_SINGULAR = 7,
  QCQO_STATUS_NOT_CONVEX = 8,
  QCQO_STATUS_PARSE = 9,
  QCQO_STATUS_IO = 10,
  QCQO_STATUS_PANIC = 11,
} QcqoStatus;

// Opaque regression dataset.
typedef struct QcqoDataset QcqoDataset;

// Opaque quadratic program `wᵀAw + aᵀw + c`.
typedef struct QcqoProgram QcqoProgram;

// Opaque optimization result: final point plus per-iteration history.
typedef struct QcqoTrajectory QcqoTrajectory;

// QUBO solver selection. Obtain defaults from [`qcqo_solver_options_default`].
typedef struct QcqoSolverOptions {
  enum QcqoSolverKind kind;
  // Annealing restarts per QUBO.
  size_t reads;
  // Annealing sweeps per read.
  size_t sweeps;
  // Largest instance the exhaustive solver accepts.
  size_t max_vars;
} QcqoSolverOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent failure on this thread, or NULL. The pointer
// stays valid until the next failing call on the same thread.
const char *qcqo_last_error(void);

struct QcqoSolverOptions qcqo_solver_options_default(void);

// Creates the program `wᵀAw + aᵀw + c` from a row-major `d×d` matrix `a_mat`
// (symmetrized on input) and a length-`d` vector `a_vec`.
//
// # Safety
// `a_mat` must point to `d*d` doubles, `a_vec` to `d` doubles, `out` must be writable.
enum QcqoStatus qcqo_program_new(size_t d,
                                 const double *a_mat,
                                 const double *a_vec,
                                 double c,
                                 struct QcqoProgram **out);

// # Safety
// `program` must be NULL or a handle from this library not yet freed.
void qcqo_program_free(struct QcqoProgram *program);

// Dimension `d`, or 0 for a NULL handle.
//
// # Safety
// `program` must be NULL or a live handle.
size_t qcqo_program_dim(const struct QcqoProgram *program);

// # Safety
// `w` must point to `len` doubles and `out` must be writable.
enum QcqoStatus qcqo_program_loss(const struct QcqoProgram *program,
                                  const double *w,
                                  size_t len,
                                  double *out);

// Writes the gradient `2Aw + a` into `out` (length `len`).
//
// # Safety
// `w` and `out` must each point to `len` doubles.
enum QcqoStatus qcqo_program_gradient(const struct QcqoProgram *program,
                                      const double *w,
                                      size_t len,
                                      double *out);

// Synthetic noise-free regression data: `samples` rows, `d` columns with the
// last fixed to 1, true weights rescaled to norm `target_norm`.
//
// # Safety
// `out` must be writable.
enum QcqoStatus qcqo_dataset_generate(size_t d,
                                      size_t samples,
                                      double target_norm,
                                      uint64_t seed,
                                      struct QcqoDataset **out);

// # Safety
// `path` must be a nul-terminated string and `out` writable.
enum QcqoStatus qcqo_dataset_read_csv(const char *path, struct QcqoDataset **out);

// # Safety
// `dataset` must be live and `path` nul-terminated.
enum QcqoStatus qcqo_dataset_write_csv(const struct QcqoDataset *dataset, const char *path);

// # Safety
// `dataset` must be NULL or a handle from this library not yet freed.
void qcqo_dataset_free(struct QcqoDataset *dataset);

// # Safety
// `dataset` must be NULL or live.
size_t qcqo_dataset_dim(const struct QcqoDataset *dataset);

// # Safety
// `dataset` must be NULL or live.
size_t qcqo_dataset_num_samples(const struct QcqoDataset *dataset);

// Mean squared error of weights `w`.
//
// # Safety
// `w` must point to `len` doubles and `out` be writable.
enum QcqoStatus qcqo_dataset_mse(const struct QcqoDataset *dataset,
                                 const double *w,
                                 size_t len,
                                 double *out);

// Least-squares weights from the normal equations.
//
// # Safety
// `out` must point to `len` writable doubles.
enum QcqoStatus qcqo_dataset_closed_form(const struct QcqoDataset *dataset,
                                         double *out,
                                         size_t len);

// The MSE of the dataset as a quadratic program.
//
// # Safety
// `dataset` must be live and `out` writable.
enum QcqoStatus qcqo_dataset_to_program(const struct QcqoDataset *dataset,
                                        struct QcqoProgram **out);

// Runs `iterations` steps with fixed step variance `sigma` and `n` QUBO
// variables per step. `options` may be NULL for the exhaustive solver.
//
// # Safety
// `w0` must point to `len` doubles; `options` NULL or valid; `out` writable.
enum QcqoStatus qcqo_optimize_fixed(const struct QcqoProgram *program,
                                    const double *w0,
                                    size_t len,
                                    double sigma,
                                    size_t n,
                                    const struct QcqoSolverOptions *options,
                                    size_t iterations,
                                    uint64_t seed,
                                    struct QcqoTrajectory **out);

// Runs `iterations` steps with the step variance adapted over the last
// `window` step lengths.
//
// # Safety
// Same contract as [`qcqo_optimize_fixed`].
enum QcqoStatus qcqo_optimize_adaptive(const struct QcqoProgram *program,
                                       const double *w0,
                                       size_t len,
                                       size_t window,
                                       size_t n,
                                       const struct QcqoSolverOptions *options,
                                       size_t iterations,
                                       uint64_t seed,
                                       struct QcqoTrajectory **out);

// # Safety
// `trajectory` must be NULL or a handle from this library not yet freed.
void qcqo_trajectory_free(struct QcqoTrajectory *trajectory);

// Number of recorded iterations (excluding the initial point).
//
// # Safety
// `trajectory` must be NULL or live.
size_t qcqo_trajectory_len(const struct QcqoTrajectory *trajectory);

// Copies the loss at `t = 0, 1, …, len` into `out`, which must hold
// `qcqo_trajectory_len + 1` values.
//
// # Safety
// `out` must point to `len` writable doubles.
enum QcqoStatus qcqo_trajectory_losses(const struct QcqoTrajectory *trajectory,
                                       double *out,
                                       size_t len);

// Copies the step variance used at each iteration `1..=len` into `out`.
//
// # Safety
// `out` must point to `len` writable doubles.
enum QcqoStatus qcqo_trajectory_sigmas(const struct QcqoTrajectory *trajectory,
                                       double *out,
                                       size_t len);

// Copies the final point into `out` (length `d`).
//
// # Safety
// `out` must point to `len` writable doubles.
enum QcqoStatus qcqo_trajectory_final_point(const struct QcqoTrajectory *trajectory,
                                            double *out,
                                            size_t len);

// Minimizes `zᵀQz` over `z ∈ {0,1}ⁿ` for a row-major `n×n` matrix `q`.
// Writes the minimizer to `z_out` and its energy to `energy_out`.
//
// # Safety
// `q` must point to `n*n` doubles, `z_out` to `n` writable bytes, `energy_out` writable.
enum QcqoStatus qcqo_qubo_solve(size_t n,
                                const double *q,
                                const struct QcqoSolverOptions *options,
                                uint64_t seed,
                                uint8_t *z_out,
                                double *energy_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QCQO_H */
