#include "hmnas.h"

#include <cstring>
#include <string>

#include <nlohmann/json.hpp>

#include "core/adaptation.hpp"
#include "core/cost_model.hpp"
#include "core/errors.hpp"
#include "core/latency.hpp"
#include "core/oracle.hpp"
#include "core/sampler.hpp"
#include "core/search_space.hpp"
#include "core/systolic.hpp"

using nlohmann::json;

namespace {

thread_local std::string g_last_error;

hmn_status status_of(hmnas::ErrorCode code) {
  using hmnas::ErrorCode;
  switch (code) {
    case ErrorCode::invalid_argument: return HMN_ERR_INVALID_ARGUMENT;
    case ErrorCode::parse: return HMN_ERR_PARSE;
    case ErrorCode::validation: return HMN_ERR_VALIDATION;
    case ErrorCode::infeasible: return HMN_ERR_INFEASIBLE;
    case ErrorCode::missing_entry: return HMN_ERR_MISSING_ENTRY;
    case ErrorCode::io: return HMN_ERR_IO;
    case ErrorCode::oracle: return HMN_ERR_ORACLE;
    case ErrorCode::unsupported: return HMN_ERR_UNSUPPORTED;
    case ErrorCode::internal: return HMN_ERR_INTERNAL;
  }
  return HMN_ERR_INTERNAL;
}

template <typename Fn>
hmn_status guarded(Fn&& fn) {
  try {
    fn();
    return HMN_OK;
  } catch (const hmnas::Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return HMN_ERR_INTERNAL;
  }
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

hmn_status require(bool ok, const char* what) {
  if (ok) return HMN_OK;
  g_last_error = std::string("null argument: ") + what;
  return HMN_ERR_INVALID_ARGUMENT;
}

hmnas::SurrogateParams surrogate_params_from_json(const json& doc) {
  hmnas::SurrogateParams p;
  if (doc.is_null()) return p;
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (it.key() != "lambda" && it.key() != "difficulty_seed")
      throw hmnas::Error(hmnas::ErrorCode::parse,
                         "surrogate params: unknown key '" + it.key() + "'");
  }
  p.lambda = doc.value("lambda", p.lambda);
  p.difficulty_seed = doc.value("difficulty_seed", p.difficulty_seed);
  return p;
}

struct AdaptRequest {
  hmnas::Constraint constraint;
  hmnas::AdaptationConfig config;
  hmnas::TaskSet tasks;
  std::unique_ptr<hmnas::OracleClient> oracle;
  std::vector<double> bounds;  // pareto only
};

AdaptRequest parse_adapt_request(const hmnas::Backbone& backbone, const char* request_json,
                                 const hmn_table* table, bool want_bounds);

}  // namespace

struct hmn_backbone {
  hmnas::Backbone value;
};
struct hmn_arch {
  hmnas::Architecture value;
};
struct hmn_table {
  hmnas::LatencyTable value;
};

extern "C" {

const char* hmn_status_name(hmn_status status) {
  switch (status) {
    case HMN_OK: return "ok";
    case HMN_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case HMN_ERR_PARSE: return "parse";
    case HMN_ERR_VALIDATION: return "validation";
    case HMN_ERR_INFEASIBLE: return "infeasible";
    case HMN_ERR_MISSING_ENTRY: return "missing_entry";
    case HMN_ERR_IO: return "io";
    case HMN_ERR_ORACLE: return "oracle";
    case HMN_ERR_UNSUPPORTED: return "unsupported";
    case HMN_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

size_t hmn_last_error(char* buf, size_t cap) {
  if (buf && cap > 0) {
    size_t n = std::min(cap - 1, g_last_error.size());
    std::memcpy(buf, g_last_error.data(), n);
    buf[n] = '\0';
  }
  return g_last_error.size();
}

void hmn_string_free(char* s) { delete[] s; }

hmn_status hmn_backbone_from_json(const char* json_text, hmn_backbone** out) {
  if (auto rc = require(json_text && out, "hmn_backbone_from_json")) return rc;
  return guarded([&] { *out = new hmn_backbone{hmnas::backbone_from_json(json_text)}; });
}

hmn_status hmn_backbone_load(const char* path, hmn_backbone** out) {
  if (auto rc = require(path && out, "hmn_backbone_load")) return rc;
  return guarded([&] { *out = new hmn_backbone{hmnas::load_backbone(path)}; });
}

void hmn_backbone_free(hmn_backbone* b) { delete b; }

hmn_status hmn_backbone_to_json(const hmn_backbone* b, char** out_json) {
  if (auto rc = require(b && out_json, "hmn_backbone_to_json")) return rc;
  return guarded([&] { *out_json = dup_string(hmnas::backbone_to_json(b->value)); });
}

hmn_status hmn_backbone_override(const hmn_backbone* b, const char* overrides_json,
                                 hmn_backbone** out) {
  if (auto rc = require(b && overrides_json && out, "hmn_backbone_override")) return rc;
  return guarded([&] {
    json doc = json::parse(overrides_json, nullptr, false);
    if (doc.is_discarded() || !doc.is_object())
      throw hmnas::Error(hmnas::ErrorCode::parse, "overrides must be a JSON object");
    hmnas::Backbone next = b->value;
    for (auto it = doc.begin(); it != doc.end(); ++it) {
      if (it.key() == "input_shape") {
        const json& s = it.value();
        next.input_shape.channels = s.value("channels", next.input_shape.channels);
        next.input_shape.height = s.value("height", next.input_shape.height);
        next.input_shape.width = s.value("width", next.input_shape.width);
      } else if (it.key() == "head") {
        const json& h = it.value();
        next.head.pool_n = h.value("pool", next.head.pool_n);
        next.head.classes = h.value("classes", next.head.classes);
      } else if (it.key() == "depth") {
        const json& d = it.value();
        next.min_depth = d.value("min", next.min_depth);
        next.max_depth = d.value("max", next.max_depth);
      } else {
        throw hmnas::Error(hmnas::ErrorCode::parse,
                           "overrides: unknown key '" + it.key() + "'");
      }
    }
    hmnas::require_valid_backbone(next);
    *out = new hmn_backbone{std::move(next)};
  });
}

hmn_status hmn_space_size(const hmn_backbone* b, char** out_exact_decimal, double* out_approx) {
  if (auto rc = require(b && out_exact_decimal && out_approx, "hmn_space_size")) return rc;
  return guarded([&] {
    hmnas::SpaceCardinality card = hmnas::space_size(b->value);
    *out_exact_decimal = dup_string(card.exact.str());
    *out_approx = card.as_float;
  });
}

hmn_status hmn_naive_traverse_hours(const hmn_backbone* b, const char* seconds_decimal,
                                    char** out_exact_rational, double* out_hours) {
  if (auto rc = require(b && seconds_decimal && out_exact_rational && out_hours,
                        "hmn_naive_traverse_hours"))
    return rc;
  return guarded([&] {
    hmnas::TraverseEstimate est = hmnas::naive_traverse_estimate(b->value, seconds_decimal);
    *out_exact_rational =
        dup_string(est.hours_numerator.str() + "/" + est.hours_denominator.str());
    *out_hours = est.hours;
  });
}

hmn_status hmn_sample_uniform(const hmn_backbone* b, uint64_t seed, hmn_arch** out) {
  if (auto rc = require(b && out, "hmn_sample_uniform")) return rc;
  return guarded([&] { *out = new hmn_arch{hmnas::sample_uniform(b->value, seed)}; });
}

hmn_status hmn_largest(const hmn_backbone* b, hmn_arch** out) {
  if (auto rc = require(b && out, "hmn_largest")) return rc;
  return guarded([&] { *out = new hmn_arch{hmnas::largest(b->value)}; });
}

hmn_status hmn_smallest(const hmn_backbone* b, hmn_arch** out) {
  if (auto rc = require(b && out, "hmn_smallest")) return rc;
  return guarded([&] { *out = new hmn_arch{hmnas::smallest(b->value)}; });
}

hmn_status hmn_mutate(const hmn_backbone* b, const hmn_arch* a, uint64_t seed, int32_t n_moves,
                      hmn_arch** out) {
  if (auto rc = require(b && a && out, "hmn_mutate")) return rc;
  return guarded([&] { *out = new hmn_arch{hmnas::mutate(b->value, a->value, seed, n_moves)}; });
}

hmn_status hmn_decode(const hmn_backbone* b, const char* genome, hmn_arch** out) {
  if (auto rc = require(b && genome && out, "hmn_decode")) return rc;
  return guarded([&] { *out = new hmn_arch{hmnas::decode(b->value, genome)}; });
}

hmn_status hmn_encode(const hmn_arch* a, char** out_genome) {
  if (auto rc = require(a && out_genome, "hmn_encode")) return rc;
  return guarded([&] { *out_genome = dup_string(hmnas::encode(a->value)); });
}

hmn_status hmn_validate(const hmn_backbone* b, const hmn_arch* a, char** out_violations_json) {
  if (auto rc = require(b && a && out_violations_json, "hmn_validate")) return rc;
  return guarded([&] {
    json arr = json::array();
    for (const std::string& v : hmnas::validate(b->value, a->value)) arr.push_back(v);
    *out_violations_json = dup_string(arr.dump());
  });
}

void hmn_arch_free(hmn_arch* a) { delete a; }

hmn_status hmn_cost_report(const hmn_backbone* b, const hmn_arch* a, char** out_json) {
  if (auto rc = require(b && a && out_json, "hmn_cost_report")) return rc;
  return guarded([&] {
    *out_json = dup_string(hmnas::cost_report_to_json(hmnas::count_costs(b->value, a->value)));
  });
}

hmn_status hmn_layer_configs(const hmn_backbone* b, char** out_json) {
  if (auto rc = require(b && out_json, "hmn_layer_configs")) return rc;
  return guarded([&] {
    json arr = json::array();
    for (const hmnas::LayerConfig& c : hmnas::enumerate_unique_layer_configs(b->value))
      arr.push_back(hmnas::layer_key(c));
    *out_json = dup_string(arr.dump());
  });
}

hmn_status hmn_profile(const hmn_backbone* b, const char* device_json, hmn_table** out,
                       char** out_report_json) {
  if (auto rc = require(b && device_json && out, "hmn_profile")) return rc;
  return guarded([&] {
    hmnas::DeviceProfile device = hmnas::device_profile_from_json(device_json);
    hmnas::ProfileOutcome outcome = hmnas::profile(b->value, device);
    *out = new hmn_table{std::move(outcome.table)};
    if (out_report_json) {
      json report{{"benchmarks_run", outcome.benchmarks_run},
                  {"missing_keys", outcome.missing_keys}};
      *out_report_json = dup_string(report.dump());
    }
  });
}

hmn_status hmn_table_load(const char* path, hmn_table** out) {
  if (auto rc = require(path && out, "hmn_table_load")) return rc;
  return guarded([&] { *out = new hmn_table{hmnas::load_table(path)}; });
}

hmn_status hmn_table_save(const hmn_table* t, const char* path) {
  if (auto rc = require(t && path, "hmn_table_save")) return rc;
  return guarded([&] { hmnas::save_table(t->value, path); });
}

hmn_status hmn_table_to_json(const hmn_table* t, char** out_json) {
  if (auto rc = require(t && out_json, "hmn_table_to_json")) return rc;
  return guarded([&] { *out_json = dup_string(hmnas::table_to_json(t->value)); });
}

hmn_status hmn_table_from_json(const char* json_text, hmn_table** out) {
  if (auto rc = require(json_text && out, "hmn_table_from_json")) return rc;
  return guarded([&] { *out = new hmn_table{hmnas::table_from_json(json_text)}; });
}

void hmn_table_free(hmn_table* t) { delete t; }

hmn_status hmn_compose_latency(const hmn_backbone* b, const hmn_arch* a, const hmn_table* t,
                               double* out_us) {
  if (auto rc = require(b && a && t && out_us, "hmn_compose_latency")) return rc;
  return guarded([&] { *out_us = hmnas::compose(b->value, a->value, t->value); });
}

hmn_status hmn_measure_end_to_end(const hmn_backbone* b, const hmn_arch* a, int32_t repetitions,
                                  double* out_us) {
  if (auto rc = require(b && a && out_us, "hmn_measure_end_to_end")) return rc;
  return guarded([&] { *out_us = hmnas::measure_end_to_end(b->value, a->value, repetitions); });
}

hmn_status hmn_simulate(const hmn_backbone* b, const hmn_arch* a, const char* array_json,
                        char** out_report_json) {
  if (auto rc = require(b && a && array_json && out_report_json, "hmn_simulate")) return rc;
  return guarded([&] {
    hmnas::ArrayConfig cfg = hmnas::array_config_from_json(array_json);
    hmnas::CycleReport report = hmnas::network_cycles(b->value, a->value, cfg);
    *out_report_json = dup_string(hmnas::cycle_report_to_json(report));
  });
}

hmn_status hmn_shrink_probability(const char* schedule_json, int32_t epoch, double* out_p) {
  if (auto rc = require(schedule_json && out_p, "hmn_shrink_probability")) return rc;
  return guarded([&] {
    hmnas::ShrinkSchedule s = hmnas::schedule_from_json(schedule_json);
    *out_p = hmnas::shrink_probability(s, epoch);
  });
}

hmn_status hmn_sample_epoch(const hmn_backbone* b, const char* schedule_json, int32_t epoch,
                            uint64_t seed, hmn_arch** out) {
  if (auto rc = require(b && schedule_json && out, "hmn_sample_epoch")) return rc;
  return guarded([&] {
    hmnas::ShrinkSchedule s = hmnas::schedule_from_json(schedule_json);
    *out = new hmn_arch{hmnas::sample_epoch_architecture(s, b->value, epoch, seed)};
  });
}

hmn_status hmn_surrogate_losses(const hmn_backbone* b, const char* params_json,
                                const char* genome, const int64_t* tasks, size_t n_tasks,
                                double* out_losses) {
  if (auto rc = require(b && genome && (tasks || n_tasks == 0) && out_losses,
                        "hmn_surrogate_losses"))
    return rc;
  return guarded([&] {
    json params = params_json ? json::parse(params_json) : json(nullptr);
    hmnas::SurrogateOracle oracle(b->value, surrogate_params_from_json(params));
    hmnas::Architecture arch = hmnas::decode(b->value, genome);
    for (size_t i = 0; i < n_tasks; ++i) out_losses[i] = oracle.loss(arch, tasks[i]);
  });
}

hmn_status hmn_adapt(const hmn_backbone* b, const char* request_json, const hmn_table* table,
                     char** out_result_json) {
  if (auto rc = require(b && request_json && out_result_json, "hmn_adapt")) return rc;
  return guarded([&] {
    AdaptRequest req = parse_adapt_request(b->value, request_json, table, false);
    hmnas::AdaptationResult result =
        hmnas::adapt(b->value, req.constraint, *req.oracle, req.tasks, req.config);
    *out_result_json = dup_string(hmnas::adaptation_result_to_json(result));
  });
}

hmn_status hmn_pareto(const hmn_backbone* b, const char* request_json, const hmn_table* table,
                      char** out_results_json) {
  if (auto rc = require(b && request_json && out_results_json, "hmn_pareto")) return rc;
  return guarded([&] {
    AdaptRequest req = parse_adapt_request(b->value, request_json, table, true);
    auto points = hmnas::pareto_sweep(b->value, req.constraint.metric, req.bounds, req.constraint,
                                      *req.oracle, req.tasks, req.config);
    json arr = json::array();
    for (const hmnas::ParetoPoint& p : points) {
      json row{{"bound", p.bound}};
      if (p.result) {
        row["result"] = json::parse(hmnas::adaptation_result_to_json(*p.result));
      } else {
        row["error"] = p.error;
      }
      arr.push_back(std::move(row));
    }
    *out_results_json = dup_string(arr.dump(2));
  });
}

}  // extern "C"

namespace {

AdaptRequest parse_adapt_request(const hmnas::Backbone& backbone, const char* request_json,
                                 const hmn_table* table, bool want_bounds) {
  json doc;
  try {
    doc = json::parse(request_json);
  } catch (const json::exception& e) {
    throw hmnas::Error(hmnas::ErrorCode::parse, std::string("adapt request JSON: ") + e.what());
  }
  static const char* allowed[] = {"constraint", "adaptation", "tasks",  "oracle",
                                  "surrogate",  "seed",       "array",  "expected_device",
                                  "bounds"};
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) ok = true;
    if (!ok)
      throw hmnas::Error(hmnas::ErrorCode::parse,
                         "adapt request: unknown key '" + it.key() + "'");
  }

  AdaptRequest req;
  const json& constraint = doc.at("constraint");
  auto metric = hmnas::metric_from_name(constraint.at("metric").get<std::string>());
  if (!metric)
    throw hmnas::Error(hmnas::ErrorCode::parse,
                       "constraint metric must be params | macs | latency | cycles");
  req.constraint.metric = *metric;
  req.constraint.bound = constraint.at("bound").get<double>();
  if (table) req.constraint.table = &table->value;
  if (doc.contains("array"))
    req.constraint.array = hmnas::array_config_from_json(doc.at("array").dump());
  if (doc.contains("expected_device"))
    req.constraint.expected_device = doc.at("expected_device").get<std::string>();

  if (doc.contains("adaptation")) {
    const json& a = doc.at("adaptation");
    req.config.pool_size = a.value("pool_size", req.config.pool_size);
    req.config.iterations = a.value("iterations", req.config.iterations);
    req.config.elite_fraction = a.value("elite_fraction", req.config.elite_fraction);
    req.config.n_moves = a.value("moves", req.config.n_moves);
    req.config.attempt_budget = a.value("attempt_budget", req.config.attempt_budget);
  }
  req.config.seed = doc.value("seed", req.config.seed);

  if (doc.contains("tasks")) {
    const json& t = doc.at("tasks");
    req.tasks.name = t.value("name", req.tasks.name);
    req.tasks.n_tasks = t.value("n_tasks", req.tasks.n_tasks);
    req.tasks.slice_size = t.value("slice_size", req.tasks.slice_size);
    req.tasks.rng_seed = t.value("rng_seed", req.tasks.rng_seed);
  }

  hmnas::SurrogateParams sp = surrogate_params_from_json(
      doc.contains("surrogate") ? doc.at("surrogate") : json(nullptr));
  json oracle_spec = doc.value("oracle", json("surrogate"));
  if (oracle_spec.is_string() && oracle_spec.get<std::string>() == "surrogate") {
    req.oracle = hmnas::make_surrogate_client(backbone, sp);
  } else if (oracle_spec.is_object() && oracle_spec.contains("cmd")) {
    std::vector<std::string> argv;
    for (const json& a : oracle_spec.at("cmd")) argv.push_back(a.get<std::string>());
    req.oracle = hmnas::make_subprocess_client(argv, oracle_spec.value("timeout_ms", 60000),
                                               oracle_spec.value("log", std::string{}));
  } else {
    throw hmnas::Error(hmnas::ErrorCode::parse,
                       "oracle must be \"surrogate\" or {\"cmd\":[...]}");
  }

  if (want_bounds) {
    if (!doc.contains("bounds"))
      throw hmnas::Error(hmnas::ErrorCode::parse, "pareto request requires \"bounds\"");
    req.bounds = doc.at("bounds").get<std::vector<double>>();
  }
  return req;
}

}  // namespace
