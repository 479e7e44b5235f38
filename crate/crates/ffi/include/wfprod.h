#ifndef WFPROD_H
#define WFPROD_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum WfStatus {
  WF_STATUS_OK = 0,
  WF_STATUS_NULL_POINTER = 1,
  WF_STATUS_INVALID_ARGUMENT = 2,
  WF_STATUS_INPUT_ERROR = 3,
  WF_STATUS_RUNTIME_ERROR = 4,
  WF_STATUS_OUT_OF_RANGE = 5,
  WF_STATUS_PANIC = 6,
} WfStatus;

// Result of a simulation run.
typedef struct WfReport WfReport;

// Parsed, validated scenario.
typedef struct WfScenario WfScenario;

typedef struct WfNodeStats {
  uint64_t trials;
  uint64_t successes;
  double success_rate;
  double std_error;
  double mean_time;
  double entropy_bits;
  // NaN when too few completions were recorded.
  double flow_cv;
  double utilization;
  bool saturated;
} WfNodeStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread; empty after success.
// The pointer stays valid until the next `wf_*` call on the thread.
const char *wf_last_error(void);

// `a * b` for two probabilities.
//
// # Safety
// `out` must be a valid pointer to a `double`.
enum WfStatus wf_event_probability(double a, double b, double *out);

// `base^(1/ratio)`.
//
// # Safety
// `out` must be a valid pointer to a `double`.
enum WfStatus wf_tilt_precision(double base, double ratio, double *out);

// Shannon entropy in bits of `len` probabilities.
//
// # Safety
// `probs` must point to `len` readable doubles and `out` to a `double`.
enum WfStatus wf_shannon_entropy(const double *probs, size_t len, double *out);

// Parses TOML scenario text. With `lenient`, unknown keys are tolerated.
//
// # Safety
// `text` must be a NUL-terminated string and `out` a valid pointer.
enum WfStatus wf_scenario_parse(const char *text, bool lenient, struct WfScenario **out);

// Reads and parses a scenario file.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum WfStatus wf_scenario_load(const char *path, bool lenient, struct WfScenario **out);

// # Safety
// `scenario` must come from `wf_scenario_parse`/`wf_scenario_load` and not
// be freed twice. Null is ignored.
void wf_scenario_free(struct WfScenario *scenario);

// Runs the scenario with its own seed and trial count on `workers` threads
// (0 means 1).
//
// # Safety
// `scenario` must be a live handle and `out` a valid pointer.
enum WfStatus wf_simulate(const struct WfScenario *scenario,
                          uint32_t workers,
                          struct WfReport **out);

// # Safety
// `report` must come from `wf_simulate` and not be freed twice. Null is
// ignored.
void wf_report_free(struct WfReport *report);

// Number of workflow nodes in the report; 0 for a null handle.
//
// # Safety
// `report` must be null or a live handle.
size_t wf_report_node_count(const struct WfReport *report);

// Summary statistics of node `index` (declaration order).
//
// # Safety
// `report` must be a live handle and `out` a valid pointer.
enum WfStatus wf_report_node_stats(const struct WfReport *report,
                                   size_t index,
                                   struct WfNodeStats *out);

// Fraction of trials in which every node hit its target.
//
// # Safety
// `report` must be a live handle and `out` a valid pointer.
enum WfStatus wf_report_end_to_end(const struct WfReport *report, double *out);

// Writes the summary, histogram, observation and JSON report files into
// `dir`, creating it if needed.
//
// # Safety
// `report` must be a live handle and `dir` a NUL-terminated string.
enum WfStatus wf_report_write(const struct WfReport *report, const char *dir);

// Classifies an observation CSV. `regime` receives the letter `A`..`G`,
// `confidence` the bootstrap agreement in `[0, 1]`.
//
// # Safety
// `path` must be a NUL-terminated string; `regime` and `confidence` valid
// pointers.
enum WfStatus wf_classify_csv(const char *path,
                              double alpha,
                              uint32_t bootstrap,
                              uint64_t seed,
                              char *regime,
                              double *confidence);

// Library version as a static NUL-terminated string.
const char *wf_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WFPROD_H */
