#ifndef OPE_FFI_H
#define OPE_FFI_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum OpeStatus {
  OPE_STATUS_OK = 0,
  OPE_STATUS_NULL_POINTER = 1,
  OPE_STATUS_INVALID_ARGUMENT = 2,
  OPE_STATUS_NON_ERGODIC = 3,
  OPE_STATUS_DEGENERATE = 4,
  OPE_STATUS_MISSING_LABEL = 5,
  OPE_STATUS_UNKNOWN_METHOD = 6,
  OPE_STATUS_UNKNOWN_ENVIRONMENT = 7,
  OPE_STATUS_IO = 8,
  OPE_STATUS_PANIC = 9,
} OpeStatus;

/**
 * Logged trajectories, each tagged with the index of its behavior policy.
 */
typedef struct OpeDataset OpeDataset;

/**
 * A tabular MDP.
 */
typedef struct OpeMdp OpeMdp;

/**
 * A row-stochastic tabular policy.
 */
typedef struct OpePolicy OpePolicy;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failed call on this thread, or an empty
 * string after a successful one. The pointer stays valid until the next
 * call into this library from the same thread.
 */
const char *ope_last_error_message(void);

/**
 * Builds one of the benchmark environments: `"taxi"`, `"gridworld"` or
 * `"singlepath"`.
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a writable pointer.
 */
enum OpeStatus ope_mdp_new_env(const char *name, struct OpeMdp **out);

/**
 * Builds an MDP from dense arrays: `transition[(s·A + a)·S + s']`,
 * `reward[s·A + a]` and `initial[s]`.
 *
 * # Safety
 * The arrays must hold `S·A·S`, `S·A` and `S` doubles respectively.
 */
enum OpeStatus ope_mdp_new(size_t num_states,
                           size_t num_actions,
                           const double *transition,
                           const double *reward,
                           const double *initial,
                           struct OpeMdp **out);

/**
 * # Safety
 * `mdp` must come from this library and not have been freed; null is ignored.
 */
void ope_mdp_free(struct OpeMdp *mdp);

/**
 * Number of states, or 0 for a null handle.
 *
 * # Safety
 * `mdp` must be null or a live handle.
 */
size_t ope_mdp_num_states(const struct OpeMdp *mdp);

/**
 * Number of actions, or 0 for a null handle.
 *
 * # Safety
 * `mdp` must be null or a live handle.
 */
size_t ope_mdp_num_actions(const struct OpeMdp *mdp);

/**
 * Builds a policy from row-major probabilities `probs[s·A + a]`.
 *
 * # Safety
 * `probs` must hold `num_states·num_actions` doubles.
 */
enum OpeStatus ope_policy_new(size_t num_states,
                              size_t num_actions,
                              const double *probs,
                              struct OpePolicy **out);

/**
 * # Safety
 * `out` must be a writable pointer.
 */
enum OpeStatus ope_policy_uniform(size_t num_states, size_t num_actions, struct OpePolicy **out);

/**
 * New policy `(1 − epsilon)·policy + epsilon·uniform`.
 *
 * # Safety
 * `policy` must be a live handle and `out` a writable pointer.
 */
enum OpeStatus ope_policy_soften(const struct OpePolicy *policy,
                                 double epsilon,
                                 struct OpePolicy **out);

/**
 * # Safety
 * `policy` must come from this library and not have been freed; null is ignored.
 */
void ope_policy_free(struct OpePolicy *policy);

/**
 * Copies the row-major probabilities into `out`, which must hold exactly
 * `num_states·num_actions` doubles.
 *
 * # Safety
 * `policy` must be a live handle and `out` must hold `len` doubles.
 */
enum OpeStatus ope_policy_copy_probs(const struct OpePolicy *policy, double *out, size_t len);

/**
 * Stationary state distribution of the chain `policy` induces on `mdp`.
 *
 * # Safety
 * Handles must be live and `out` must hold `len` doubles.
 */
enum OpeStatus ope_stationary_distribution(const struct OpeMdp *mdp,
                                           const struct OpePolicy *policy,
                                           double *out,
                                           size_t len);

/**
 * Exact long-run average reward of `policy` on `mdp`.
 *
 * # Safety
 * Handles must be live and `out` writable.
 */
enum OpeStatus ope_average_reward(const struct OpeMdp *mdp,
                                  const struct OpePolicy *policy,
                                  double *out);

/**
 * Rolls out `num_trajectories` trajectories of `horizon` steps, split
 * evenly across the behaviors; trajectory labels are behavior indices.
 *
 * # Safety
 * `behaviors` must point to `num_behaviors` live policy handles.
 */
enum OpeStatus ope_dataset_sample(const struct OpeMdp *mdp,
                                  const struct OpePolicy *const *behaviors,
                                  size_t num_behaviors,
                                  size_t num_trajectories,
                                  size_t horizon,
                                  uint64_t seed,
                                  struct OpeDataset **out);

/**
 * Total number of logged transitions, or 0 for a null handle.
 *
 * # Safety
 * `dataset` must be null or a live handle.
 */
size_t ope_dataset_num_transitions(const struct OpeDataset *dataset);

/**
 * # Safety
 * `dataset` must come from this library and not have been freed; null is ignored.
 */
void ope_dataset_free(struct OpeDataset *dataset);

/**
 * Estimates the average reward of `target` from `dataset` with one of the
 * methods `bch`, `emp`, `bch-pooled`, `bch-kl-pooled`, `emp-single`,
 * `kl-emp`, `sadl`, `mis` or `wis`, using delta kernels and default solver
 * settings. Policy-aware methods read `behaviors`, indexed by trajectory
 * label; the others accept `num_behaviors = 0`.
 *
 * # Safety
 * Handles must be live, `method` NUL-terminated, `behaviors` must point to
 * `num_behaviors` handles and `out` must be writable.
 */
enum OpeStatus ope_estimate(const struct OpeDataset *dataset,
                            const struct OpePolicy *target,
                            const struct OpePolicy *const *behaviors,
                            size_t num_behaviors,
                            const char *method,
                            double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OPE_FFI_H */
