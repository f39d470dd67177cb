#ifndef NBRW_H
#define NBRW_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Status codes; 0 is success.
typedef enum NbrwStatus {
  NBRW_STATUS_OK = 0,
  NBRW_STATUS_NULL_POINTER = 1,
  NBRW_STATUS_DOMAIN = 2,
  NBRW_STATUS_CAPACITY = 3,
  NBRW_STATUS_SCALE_INFEASIBLE = 4,
  NBRW_STATUS_INFEASIBLE = 5,
  NBRW_STATUS_PARSE = 6,
  NBRW_STATUS_SCHEMA = 7,
  NBRW_STATUS_IO = 8,
  NBRW_STATUS_INVALID_UTF8 = 9,
  NBRW_STATUS_BUFFER_TOO_SMALL = 10,
  NBRW_STATUS_PANIC = 11,
} NbrwStatus;

// Jump law families.
typedef enum NbrwFamily {
  NBRW_FAMILY_PARETO = 0,
  NBRW_FAMILY_PARETO_LOG = 1,
} NbrwFamily;

// Simulation engines.
typedef enum NbrwEngine {
  NBRW_ENGINE_DIRECT = 0,
  NBRW_ENGINE_BRW = 1,
} NbrwEngine;

// Opaque trajectory handle.
typedef struct NbrwTrajectory NbrwTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread; empty after a success.
// The pointer stays valid until the next call on the same thread.
const char *nbrw_last_error(void);

// Library version as a static NUL-terminated string.
const char *nbrw_version(void);

// `ℓ_N` and `a_N` for a law and population size.
//
// # Safety
// `ell` and `a` must be valid for writes.
enum NbrwStatus nbrw_scales(enum NbrwFamily family,
                            double alpha,
                            uint64_t n,
                            uint32_t *ell,
                            double *a);

// Simulate `[0, t]` from all particles at 0 and return a new handle.
//
// # Safety
// `out` must be valid for writes; on success it owns a handle.
enum NbrwStatus nbrw_simulate(enum NbrwFamily family,
                              double alpha,
                              uint64_t n,
                              uint32_t t,
                              uint64_t seed,
                              uint64_t replicate,
                              enum NbrwEngine engine,
                              struct NbrwTrajectory **out);

// Release a handle; null is ignored.
//
// # Safety
// `h` must come from this library and not be used afterwards.
void nbrw_trajectory_free(struct NbrwTrajectory *h);

// Population size, horizon, `ℓ_N` and `a_N` of a trajectory; any out
// pointer may be null.
//
// # Safety
// `h` must be a live handle; non-null out pointers must be valid for writes.
enum NbrwStatus nbrw_trajectory_info(const struct NbrwTrajectory *h,
                                     uint64_t *n,
                                     uint32_t *t,
                                     uint32_t *ell,
                                     double *a);

// Copy the sorted positions at time `s` into `buf`, which holds `len ≥ N` values.
//
// # Safety
// `h` must be a live handle and `buf` valid for `len` writes.
enum NbrwStatus nbrw_trajectory_positions(const struct NbrwTrajectory *h,
                                          uint32_t s,
                                          double *buf,
                                          size_t len);

// Copy the parent ranks of generation `s ≥ 1` into `buf` (`len ≥ N`).
//
// # Safety
// `h` must be a live handle and `buf` valid for `len` writes.
enum NbrwStatus nbrw_trajectory_parents(const struct NbrwTrajectory *h,
                                        uint32_t s,
                                        uint32_t *buf,
                                        size_t len);

// Whether two trajectories have bit-identical positions, links and jumps.
//
// # Safety
// Both handles must be live; `same` must be valid for writes.
enum NbrwStatus nbrw_trajectory_same_process(const struct NbrwTrajectory *a,
                                             const struct NbrwTrajectory *b,
                                             bool *same);

// Write a trajectory; a `.bin` extension selects the binary format.
//
// # Safety
// `h` must be a live handle and `path` a NUL-terminated string.
enum NbrwStatus nbrw_trajectory_save(const struct NbrwTrajectory *h, const char *path);

// Read a trajectory file of either format into a new handle.
//
// # Safety
// `path` must be NUL-terminated and `out` valid for writes.
enum NbrwStatus nbrw_trajectory_load(const char *path, struct NbrwTrajectory **out);

// Evaluate events at time `t` on a uniform sample of `m` particles and run
// every checker. The schedule is the probe schedule when `rho > 0`, and
// otherwise derived from `eta`. Writes the number of counterexamples and,
// when `json` is non-null, the full report as a string to free with
// `nbrw_string_free`.
//
// # Safety
// `h` must be a live handle; `counterexamples` valid for writes; `json`
// null or valid for writes.
enum NbrwStatus nbrw_verify(const struct NbrwTrajectory *h,
                            double eta,
                            double rho,
                            uint32_t t,
                            size_t m,
                            uint64_t seed,
                            uint32_t *counterexamples,
                            char **json);

// Release a string returned by this library; null is ignored.
//
// # Safety
// `s` must come from this library and not be used afterwards.
void nbrw_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NBRW_H */
