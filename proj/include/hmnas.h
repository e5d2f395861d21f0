/*
 * hmnas - hardware-aware meta architecture search engine.
 *
 * C API over the C++ core: opaque handles, integer status codes, and JSON
 * strings for structured payloads. All returned strings are owned by the
 * caller and must be released with hmn_string_free(); handles with their
 * matching *_free(). Error details for the last failing call on the
 * current thread are available via hmn_last_error().
 */

#ifndef HMNAS_H
#define HMNAS_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define HMN_API __declspec(dllexport)
#else
#define HMN_API __attribute__((visibility("default")))
#endif

typedef enum hmn_status {
  HMN_OK = 0,
  HMN_ERR_INVALID_ARGUMENT = 1,
  HMN_ERR_PARSE = 2,
  HMN_ERR_VALIDATION = 3,
  HMN_ERR_INFEASIBLE = 4,
  HMN_ERR_MISSING_ENTRY = 5,
  HMN_ERR_IO = 6,
  HMN_ERR_ORACLE = 7,
  HMN_ERR_UNSUPPORTED = 8,
  HMN_ERR_INTERNAL = 9
} hmn_status;

HMN_API const char* hmn_status_name(hmn_status status);

/* Copies the current thread's last error message into buf (NUL-terminated,
 * truncated to cap). Returns the full message length. */
HMN_API size_t hmn_last_error(char* buf, size_t cap);

HMN_API void hmn_string_free(char* s);

typedef struct hmn_backbone hmn_backbone;
typedef struct hmn_arch hmn_arch;
typedef struct hmn_table hmn_table;

/* ---- backbone & search space ---- */

HMN_API hmn_status hmn_backbone_from_json(const char* json, hmn_backbone** out);
HMN_API hmn_status hmn_backbone_load(const char* path, hmn_backbone** out);
HMN_API void hmn_backbone_free(hmn_backbone* b);
HMN_API hmn_status hmn_backbone_to_json(const hmn_backbone* b, char** out_json);

/* Partial overrides as JSON, e.g. {"input_shape":{"channels":1,"height":28,
 * "width":28},"head":{"pool":1,"classes":20}}. Unknown keys are rejected. */
HMN_API hmn_status hmn_backbone_override(const hmn_backbone* b, const char* overrides_json,
                                         hmn_backbone** out);

/* Exact genome count as a decimal string plus a double approximation. */
HMN_API hmn_status hmn_space_size(const hmn_backbone* b, char** out_exact_decimal,
                                  double* out_approx);

/* Exact hours = space_size * seconds / 3600; seconds given as a decimal
 * string. out_exact_rational is "<numerator>/<denominator>" fully reduced. */
HMN_API hmn_status hmn_naive_traverse_hours(const hmn_backbone* b, const char* seconds_decimal,
                                            char** out_exact_rational, double* out_hours);

/* ---- architectures (genomes) ---- */

HMN_API hmn_status hmn_sample_uniform(const hmn_backbone* b, uint64_t seed, hmn_arch** out);
HMN_API hmn_status hmn_largest(const hmn_backbone* b, hmn_arch** out);
HMN_API hmn_status hmn_smallest(const hmn_backbone* b, hmn_arch** out);
HMN_API hmn_status hmn_mutate(const hmn_backbone* b, const hmn_arch* a, uint64_t seed,
                              int32_t n_moves, hmn_arch** out);
HMN_API hmn_status hmn_decode(const hmn_backbone* b, const char* genome, hmn_arch** out);
HMN_API hmn_status hmn_encode(const hmn_arch* a, char** out_genome);
/* JSON array of violation strings; empty array means valid. */
HMN_API hmn_status hmn_validate(const hmn_backbone* b, const hmn_arch* a,
                                char** out_violations_json);
HMN_API void hmn_arch_free(hmn_arch* a);

/* ---- cost model ---- */

/* CostReport JSON: exact parameter and MAC counts with per-layer breakdown,
 * at the backbone's input shape and class count. */
HMN_API hmn_status hmn_cost_report(const hmn_backbone* b, const hmn_arch* a, char** out_json);

/* ---- latency profiling & composition ---- */

/* JSON array of the canonical keys of every reachable layer config. */
HMN_API hmn_status hmn_layer_configs(const hmn_backbone* b, char** out_json);

/* device_json: {"device_name":...,"method":"measured"|"analytic"|"systolic",
 * ...provider parameters...}. out_report_json carries
 * {"benchmarks_run":N,"missing_keys":[...]}. */
HMN_API hmn_status hmn_profile(const hmn_backbone* b, const char* device_json, hmn_table** out,
                               char** out_report_json);
HMN_API hmn_status hmn_table_load(const char* path, hmn_table** out);
HMN_API hmn_status hmn_table_save(const hmn_table* t, const char* path);
HMN_API hmn_status hmn_table_to_json(const hmn_table* t, char** out_json);
HMN_API hmn_status hmn_table_from_json(const char* json, hmn_table** out);
HMN_API void hmn_table_free(hmn_table* t);

/* Sum of the table's entries over the architecture's active layers and
 * head, microseconds. Fails with HMN_ERR_MISSING_ENTRY listing absent keys. */
HMN_API hmn_status hmn_compose_latency(const hmn_backbone* b, const hmn_arch* a,
                                       const hmn_table* t, double* out_us);

/* Median of `repetitions` end-to-end runs of the reference kernels. */
HMN_API hmn_status hmn_measure_end_to_end(const hmn_backbone* b, const hmn_arch* a,
                                          int32_t repetitions, double* out_us);

/* ---- systolic-array simulation ---- */

/* CycleReport JSON for the whole network on the array described by
 * array_json (see the ArrayConfig schema in the repo docs). */
HMN_API hmn_status hmn_simulate(const hmn_backbone* b, const hmn_arch* a, const char* array_json,
                                char** out_report_json);

/* ---- progressive-shrinking schedule ---- */

/* schedule_json: {"p_i":1.0,"p_e":0.0,"alpha":5.0,"e_s":30,"e_m":100} (all
 * optional, defaults shown). */
HMN_API hmn_status hmn_shrink_probability(const char* schedule_json, int32_t epoch,
                                          double* out_p);
HMN_API hmn_status hmn_sample_epoch(const hmn_backbone* b, const char* schedule_json,
                                    int32_t epoch, uint64_t seed, hmn_arch** out);

/* ---- oracle ---- */

/* Deterministic surrogate losses for one genome over a task batch.
 * params_json: {"lambda":0.05,"difficulty_seed":0} (optional keys). */
HMN_API hmn_status hmn_surrogate_losses(const hmn_backbone* b, const char* params_json,
                                        const char* genome, const int64_t* tasks, size_t n_tasks,
                                        double* out_losses);

/* ---- adaptation ---- */

/* request_json:
 * {
 *   "constraint": {"metric":"params|macs|latency|cycles", "bound":<num>},
 *   "adaptation": {"pool_size":100,"iterations":200,"elite_fraction":0.1,
 *                  "moves":2,"attempt_budget":1000},
 *   "tasks": {"name":"val","n_tasks":600,"slice_size":16,"rng_seed":0},
 *   "oracle": "surrogate" | {"cmd":["prog","arg",...],"timeout_ms":60000},
 *   "surrogate": {"lambda":0.05,"difficulty_seed":0},
 *   "seed": 0,
 *   "array": {...},              // required for the cycles metric
 *   "expected_device": "name"    // optional; mismatch becomes a warning
 * }
 * `table` is required for the latency metric.
 * Returns the AdaptationResult JSON (best genome, losses, audit trail). */
HMN_API hmn_status hmn_adapt(const hmn_backbone* b, const char* request_json,
                             const hmn_table* table, char** out_result_json);

/* Same request plus {"bounds":[...ascending...]}; returns a JSON array of
 * per-bound outcomes. Infeasible bounds carry an "error" field. */
HMN_API hmn_status hmn_pareto(const hmn_backbone* b, const char* request_json,
                              const hmn_table* table, char** out_results_json);

#ifdef __cplusplus
}
#endif

#endif /* HMNAS_H */
