#ifndef HARDY_H
#define HARDY_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HardyStatus {
  HARDY_STATUS_OK = 0,
  HARDY_STATUS_NULL_POINTER = 1,
  HARDY_STATUS_INVALID_ARGUMENT = 2,
  HARDY_STATUS_PARSE_ERROR = 3,
  HARDY_STATUS_INVALID_CONFIG = 4,
  HARDY_STATUS_NO_SALES = 5,
  HARDY_STATUS_NO_FEASIBLE_POINT = 6,
  HARDY_STATUS_PANIC = 7,
} HardyStatus;

typedef enum HardyVerdict {
  HARDY_VERDICT_LOCAL_REALISM_CONSISTENT = 0,
  HARDY_VERDICT_NON_CLASSICAL = 1,
  HARDY_VERDICT_CONSTRAINTS_VIOLATED = 2,
} HardyVerdict;

/**
 * A parsed daily sales table.
 */
typedef struct HardyDataset HardyDataset;

/**
 * Simulation parameters.
 */
typedef struct HardySimConfig HardySimConfig;

/**
 * The output of one simulation run.
 */
typedef struct HardySimRun HardySimRun;

typedef struct HardyWitness {
  double p1;
  double p2;
  double p3;
  double q;
  enum HardyVerdict verdict;
} HardyWitness;

typedef struct HardyOptimizerConfig {
  uint32_t restarts;
  uint32_t max_iterations;
  double penalty_initial;
  double penalty_growth;
  double constraint_tol;
  double step_tol;
  uint64_t seed;
  /**
   * When true, the Schmidt angle is pinned to `theta`.
   */
  bool fix_theta;
  double theta;
} HardyOptimizerConfig;

/**
 * Settings are ordered a1, a2, b1, b2.
 */
typedef struct HardyQuantumResult {
  double q;
  double theta;
  double polar[4];
  double azimuth[4];
  double residuals[3];
} HardyQuantumResult;

typedef struct HardyDailyAggregate {
  uint32_t day;
  uint64_t responded;
  uint64_t abandoned;
  uint64_t absent_sales;
  uint64_t present_sales;
} HardyDailyAggregate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failure on this thread. Valid until the next call
 * into the library on the same thread; never null.
 */
const char *hardy_last_error_message(void);

/**
 * Releases a string returned by the library. Null is ignored.
 */
void hardy_string_free(char *s);

/**
 * Parses CSV text in the daily sales table format.
 */
enum HardyStatus hardy_dataset_parse(const char *csv, struct HardyDataset **out);

/**
 * The published table bundled with the library.
 */
enum HardyStatus hardy_dataset_bundled(struct HardyDataset **out);

/**
 * Number of daily rows, or 0 for a null handle.
 */
size_t hardy_dataset_len(const struct HardyDataset *ds);

/**
 * Pooled absent share of sales value.
 */
enum HardyStatus hardy_dataset_compute_q(const struct HardyDataset *ds,
                                         bool exclude_interrupted,
                                         double *out_q);

/**
 * Number of mismatches between the declared SUM row and the rows (1 if there is no SUM row).
 */
enum HardyStatus hardy_dataset_finding_count(const struct HardyDataset *ds, size_t *out_count);

void hardy_dataset_free(struct HardyDataset *ds);

/**
 * Local hidden-variable maximum of q as an exact fraction. Bit k-1 of
 * `constraint_mask` keeps constraint k; 7 keeps all three.
 */
enum HardyStatus hardy_lhv_max_q(uint8_t constraint_mask, int64_t *out_num, int64_t *out_den);

/**
 * Evaluates the Hardy witness of a joint distribution given as 16
 * probabilities: four rows for settings (1,1), (1,2), (2,1), (2,2), each
 * over outcomes (+,+), (+,-), (-,+), (-,-).
 */
enum HardyStatus hardy_q_from_table(const double *probs, double tol, struct HardyWitness *out);

struct HardyOptimizerConfig hardy_optimizer_config_default(void);

/**
 * Maximizes q over two-qubit states and measurement settings.
 */
enum HardyStatus hardy_quantum_maximize(const struct HardyOptimizerConfig *config,
                                        struct HardyQuantumResult *out);

struct HardySimConfig *hardy_sim_config_default(void);

/**
 * Parses `key = value` configuration text; omitted keys keep their defaults.
 */
enum HardyStatus hardy_sim_config_from_toml(const char *text, struct HardySimConfig **out);

enum HardyStatus hardy_sim_config_set_seed(struct HardySimConfig *config, uint64_t seed);

enum HardyStatus hardy_sim_config_set_days(struct HardySimConfig *config, uint32_t days);

void hardy_sim_config_free(struct HardySimConfig *config);

enum HardyStatus hardy_sim_run(const struct HardySimConfig *config, struct HardySimRun **out);

/**
 * Number of daily aggregate rows, or 0 for a null handle.
 */
size_t hardy_sim_run_day_count(const struct HardySimRun *run);

enum HardyStatus hardy_sim_run_day(const struct HardySimRun *run,
                                   size_t index,
                                   struct HardyDailyAggregate *out);

enum HardyStatus hardy_sim_run_q(const struct HardySimRun *run, double *out_q);

/**
 * Daily aggregates as CSV. Release with `hardy_string_free`; null for a null handle.
 */
char *hardy_sim_run_aggregates_csv(const struct HardySimRun *run);

/**
 * The event log as CSV. Release with `hardy_string_free`; null for a null handle.
 */
char *hardy_sim_run_events_csv(const struct HardySimRun *run);

void hardy_sim_run_free(struct HardySimRun *run);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HARDY_H */
