#ifndef TRL_H
#define TRL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define TRL_RULE_REALIZABLE 0

#define TRL_RULE_AGNOSTIC 1

#define TRL_ATTACK_EXACT 0

#define TRL_ATTACK_GREEDY 1

#define TRL_ATTACK_RANDOM_RESTART 2

typedef enum TrlStatus {
  TRL_STATUS_OK = 0,
  TRL_STATUS_NULL_POINTER = 1,
  TRL_STATUS_INVALID_UTF8 = 2,
  /**
   * Malformed input: bad labels, indices, probabilities, configs.
   */
  TRL_STATUS_INVALID_INPUT = 3,
  /**
   * The realizable selector found no robustly consistent member.
   */
  TRL_STATUS_INFEASIBLE = 4,
  TRL_STATUS_DOMAIN_TOO_LARGE = 5,
  TRL_STATUS_BUDGET_EXCEEDED = 6,
  TRL_STATUS_PRECONDITION_VIOLATED = 7,
  TRL_STATUS_IO = 8,
  /**
   * A Rust panic was caught at the boundary.
   */
  TRL_STATUS_PANIC = 9,
} TrlStatus;

/**
 * A parsed and validated scenario.
 */
typedef struct TrlScenario TrlScenario;

typedef struct TrlAttackOutcome {
  /**
   * Test errors at the maximizer.
   */
  size_t errors;
  size_t total;
  double error;
  uint64_t evaluations;
  /**
   * Whether the search was exhaustive.
   */
  bool exact;
} TrlAttackOutcome;

/**
 * Bounds for one configuration, each clamped to `[0, 1]`.
 */
typedef struct TrlBounds {
  double realizable_eps;
  double agnostic_eps_vc;
  double agnostic_eps_rdim;
  double agnostic_eps;
} TrlBounds;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * The library version as a static NUL-terminated string.
 */
const char *trl_version(void);

/**
 * The message of the last failed call on this thread, or null if the last
 * call succeeded. Valid until the next call into the library on this thread.
 */
const char *trl_last_error_message(void);

/**
 * Releases a string returned by the library. Null is ignored.
 *
 * # Safety
 * `s` must be null or a pointer obtained from this library that has not
 * been freed yet.
 */
void trl_string_free(char *s);

/**
 * Parses a scenario from JSON text.
 *
 * # Safety
 * `json` must be null or a NUL-terminated string; `out` must be null or
 * writable.
 */
enum TrlStatus trl_scenario_from_json(const char *json, struct TrlScenario **out);

/**
 * Reads a scenario file.
 *
 * # Safety
 * As for [`trl_scenario_from_json`].
 */
enum TrlStatus trl_scenario_load(const char *path, struct TrlScenario **out);

/**
 * Releases a scenario. Null is ignored.
 *
 * # Safety
 * `s` must be null or a live handle from this library.
 */
void trl_scenario_free(struct TrlScenario *s);

/**
 * Domain size and class size of a scenario.
 *
 * # Safety
 * `s` must be a live handle; the outputs must be writable.
 */
enum TrlStatus trl_scenario_sizes(const struct TrlScenario *s,
                                  size_t *domain_size,
                                  size_t *class_size);

/**
 * VC dimension of the class and relaxed robust dimension for `U⁻¹`.
 *
 * # Safety
 * `s` must be a live handle; the outputs must be writable.
 */
enum TrlStatus trl_dims(const struct TrlScenario *s, size_t *vc, size_t *rdim);

/**
 * Runs a selector on perturbed training pairs and test points. Writes the
 * `m` predicted labels to `labels` and the chosen class index to `chosen`.
 *
 * # Safety
 * Each array must hold at least as many elements as its length argument.
 */
enum TrlStatus trl_select(const struct TrlScenario *s,
                          uint32_t rule_code,
                          const size_t *train_x,
                          const int8_t *train_y,
                          size_t n,
                          const size_t *test_x,
                          size_t m,
                          int8_t *labels,
                          size_t *chosen);

/**
 * Attacks a selector on a clean sample. `perturbed_test` receives the `m`
 * test points at the maximizer. The training points are attacked too when
 * `attack_train` is set.
 *
 * # Safety
 * Each array must hold at least as many elements as its length argument.
 */
enum TrlStatus trl_attack(const struct TrlScenario *s,
                          uint32_t rule_code,
                          uint32_t mode,
                          size_t restarts,
                          uint64_t seed,
                          bool attack_train,
                          const size_t *train_x,
                          const int8_t *train_y,
                          size_t n,
                          const size_t *test_x,
                          const int8_t *test_y,
                          size_t m,
                          size_t *perturbed_test,
                          struct TrlAttackOutcome *outcome);

/**
 * Evaluates every bound for the given dimensions and composed optimum.
 *
 * # Safety
 * `out` must be writable.
 */
enum TrlStatus trl_bounds(size_t vc,
                          size_t rdim,
                          double opt_composed,
                          size_t n,
                          double delta,
                          double vc_constant,
                          struct TrlBounds *out);

/**
 * Runs a Monte-Carlo experiment on `s` and returns its summary as JSON in
 * `summary`, to be released with [`trl_string_free`]. The config's
 * `scenario` path is ignored in favor of the handle and its `outputs` are
 * not written. `threads` of 0 picks the default pool size.
 *
 * # Safety
 * `config_json` must be a NUL-terminated string; `summary` must be writable.
 */
enum TrlStatus trl_experiment(const struct TrlScenario *s,
                              const char *config_json,
                              size_t threads,
                              char **summary);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TRL_H */
