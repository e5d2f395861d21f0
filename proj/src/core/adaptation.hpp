#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "core/latency.hpp"
#include "core/oracle.hpp"
#include "core/search_space.hpp"
#include "core/systolic.hpp"

namespace hmnas {

enum class Metric : uint8_t { params, macs, latency, cycles };

const char* metric_name(Metric m);
std::optional<Metric> metric_from_name(const std::string& name);

// Hard per-device bound. latency requires a total lookup table; cycles
// requires an array config.
struct Constraint {
  Metric metric = Metric::macs;
  double bound = 0.0;
  const LatencyTable* table = nullptr;
  std::optional<ArrayConfig> array;
  std::optional<std::string> expected_device;  // warn when the table disagrees
};

struct AdaptationConfig {
  int pool_size = 100;
  int iterations = 200;
  double elite_fraction = 0.10;
  int n_moves = 2;
  int attempt_budget = 1000;  // feasibility attempts, x pool_size at init
  uint64_t seed = 0;
};

void require_valid_adaptation_config(const AdaptationConfig& config);

struct AuditEntry {
  int iteration = 0;
  double pool_mean_loss = 0.0;   // mean loss of the pool on this iteration's slice
  int feasible_count = 0;
  double best_so_far_loss = 0.0; // best fixed-slice loss among all candidates so far
  int fresh_samples = 0;         // refills that fell back to fresh uniform samples
};

struct AdaptationResult {
  Architecture best;
  std::string best_genome;
  double best_loss = 0.0;     // mean loss on the fixed evaluation slice
  double metric_value = 0.0;
  Metric metric = Metric::macs;
  double bound = 0.0;
  std::vector<AuditEntry> audit;  // length iterations + 1 (entry 0 = initialization)
  AdaptationConfig config;
  TaskSet tasks;
  std::vector<std::string> warnings;
  int64_t oracle_evaluations = 0;
};

// Metric evaluation for an architecture, closed over the backbone and the
// constraint's table/array references.
class CostEvaluator {
 public:
  CostEvaluator(const Backbone& backbone, const Constraint& constraint);
  double value(const Architecture& arch) const;
  bool feasible(const Architecture& arch) const;
  const Constraint& constraint() const { return constraint_; }

 private:
  const Backbone& backbone_;
  Constraint constraint_;
};

// Rejection-samples pool_size feasible architectures. Throws
// Error{infeasible} after attempt_budget * pool_size draws, reporting the
// tightest metric value seen.
std::vector<Architecture> init_pool(const Backbone& backbone, const Constraint& constraint,
                                    const AdaptationConfig& config);

// The genetic adaptation loop: per iteration draw a task slice, score the
// pool by mean loss, keep the feasible elite, refill with
// constraint-checked mutants. The returned best is the feasible candidate
// with the lowest mean loss re-evaluated on a fixed slice drawn up front.
AdaptationResult adapt(const Backbone& backbone, const Constraint& constraint,
                       OracleClient& oracle, const TaskSet& tasks,
                       const AdaptationConfig& config);

struct ParetoPoint {
  double bound = 0.0;
  std::optional<AdaptationResult> result;  // empty when this bound was infeasible
  std::string error;
};

// One adapt run per bound (ascending); per-bound infeasibility is recorded
// and the sweep continues.
std::vector<ParetoPoint> pareto_sweep(const Backbone& backbone, Metric metric,
                                      const std::vector<double>& bounds,
                                      const Constraint& references, OracleClient& oracle,
                                      const TaskSet& tasks, const AdaptationConfig& config);

std::string adaptation_result_to_json(const AdaptationResult& result);

}  // namespace hmnas
