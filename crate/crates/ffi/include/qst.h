#ifndef QST_H
#define QST_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum QstStatus {
  QST_STATUS_OK = 0,
  QST_STATUS_NULL_POINTER = 1,
  QST_STATUS_INVALID_ARGUMENT = 2,
  QST_STATUS_INVALID_CONFIG = 3,
  // Eigensolver failure, loss of unitarity or training divergence.
  QST_STATUS_NUMERICAL = 4,
  QST_STATUS_BUFFER_TOO_SMALL = 5,
  QST_STATUS_IO = 6,
  QST_STATUS_PANIC = 7,
} QstStatus;

// Outcome of an optimization run.
typedef struct QstOptimizationResult QstOptimizationResult;

// Cached propagators of the 16 actions for one chain.
typedef struct QstPropagatorSet QstPropagatorSet;

typedef struct QstChainParams {
  size_t n_sites;
  double coupling;
  double field_strength;
  double dt;
} QstChainParams;

// GA settings; zero `horizon` selects ceil(2.5 * n_sites).
typedef struct QstGaParams {
  size_t population_size;
  size_t num_parents;
  size_t generations;
  double mutation_probability;
  size_t horizon;
  // Evaluation threads; 0 uses all cores, 1 runs serially.
  size_t workers;
  uint64_t seed;
} QstGaParams;

// DQN settings; zero `horizon` selects ceil(2.5 * n_sites).
typedef struct QstDqnParams {
  size_t episodes;
  double alpha;
  double gamma;
  double epsilon_decay;
  size_t horizon;
  uint64_t seed;
} QstDqnParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failure on this thread, or null.
//
// The pointer stays valid until the next failing call on the same thread.
const char *qst_last_error(void);

// Library version as a static NUL-terminated string.
const char *qst_version(void);

size_t qst_num_actions(void);

// Writes the three left-end and three right-end field flags (0 or 1) of an action.
enum QstStatus qst_action_masks(size_t id, uint8_t *left, uint8_t *right);

struct QstChainParams qst_chain_params_default(void);

enum QstStatus qst_propagator_set_new(const struct QstChainParams *params,
                                      struct QstPropagatorSet **out);

// Releases a set; null is ignored.
void qst_propagator_set_free(struct QstPropagatorSet *set);

size_t qst_propagator_set_n_sites(const struct QstPropagatorSet *set);

// Fidelity with the last site after each action of `sequence`.
//
// `fidelities` must hold `len` values.
enum QstStatus qst_sequence_profile(const struct QstPropagatorSet *set,
                                    const size_t *sequence,
                                    size_t len,
                                    double *fidelities);

// Uncontrolled transfer probability at `samples` evenly spaced times in `[0, t_max]`.
//
// `times` and `probabilities` must each hold `samples` values.
enum QstStatus qst_natural_evolution(const struct QstChainParams *params,
                                     double t_max,
                                     size_t samples,
                                     double *times,
                                     double *probabilities);

struct QstGaParams qst_ga_params_default(void);

struct QstDqnParams qst_dqn_params_default(void);

enum QstStatus qst_ga_run(const struct QstPropagatorSet *set,
                          const struct QstGaParams *params,
                          struct QstOptimizationResult **out);

enum QstStatus qst_dqn_run(const struct QstPropagatorSet *set,
                           const struct QstDqnParams *params,
                           struct QstOptimizationResult **out);

// Releases a result; null is ignored.
void qst_result_free(struct QstOptimizationResult *result);

enum QstStatus qst_result_best_fidelity(const struct QstOptimizationResult *result,
                                        double *fidelity);

// Copies the best sequence into `buf` and stores its length in `len`.
//
// Pass a null `buf` with zero capacity to query the length only.
enum QstStatus qst_result_sequence(const struct QstOptimizationResult *result,
                                   size_t *buf,
                                   size_t capacity,
                                   size_t *len);

// Copies the best-fidelity history; same buffer protocol as `qst_result_sequence`.
enum QstStatus qst_result_history(const struct QstOptimizationResult *result,
                                  double *buf,
                                  size_t capacity,
                                  size_t *len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QST_H */
