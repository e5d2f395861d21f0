#include "core/adaptation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include <nlohmann/json.hpp>

#include "core/cost_model.hpp"
#include "core/errors.hpp"
#include "core/rng.hpp"

namespace hmnas {

using nlohmann::json;

const char* metric_name(Metric m) {
  switch (m) {
    case Metric::params: return "params";
    case Metric::macs: return "macs";
    case Metric::latency: return "latency";
    case Metric::cycles: return "cycles";
  }
  return "macs";
}

std::optional<Metric> metric_from_name(const std::string& name) {
  if (name == "params") return Metric::params;
  if (name == "macs") return Metric::macs;
  if (name == "latency") return Metric::latency;
  if (name == "cycles") return Metric::cycles;
  return std::nullopt;
}

void require_valid_adaptation_config(const AdaptationConfig& c) {
  if (c.pool_size < 2) throw Error(ErrorCode::validation, "pool size must be >= 2");
  if (c.iterations < 0) throw Error(ErrorCode::validation, "iterations must be >= 0");
  if (!(c.elite_fraction > 0.0 && c.elite_fraction <= 1.0))
    throw Error(ErrorCode::validation, "elite fraction must be in (0, 1]");
  if (c.n_moves < 1) throw Error(ErrorCode::validation, "moves per mutation must be >= 1");
  if (c.attempt_budget < 1) throw Error(ErrorCode::validation, "attempt budget must be >= 1");
}

CostEvaluator::CostEvaluator(const Backbone& backbone, const Constraint& constraint)
    : backbone_(backbone), constraint_(constraint) {
  if (!(constraint_.bound > 0))
    throw Error(ErrorCode::validation, "constraint bound must be > 0");
  if (constraint_.metric == Metric::latency) {
    if (!constraint_.table)
      throw Error(ErrorCode::validation, "latency constraint requires a lookup table");
    // The table must be total over the backbone before it can gate the GA;
    // a partial table would silently corrupt constraint enforcement.
    auto absent = missing_keys(*constraint_.table, enumerate_unique_layer_configs(backbone_));
    if (!absent.empty()) {
      std::string msg = "latency table is not total over backbone '" + backbone_.name +
                        "': missing " + std::to_string(absent.size()) + " entries, e.g.";
      for (size_t i = 0; i < absent.size() && i < 5; ++i) msg += " " + absent[i];
      throw Error(ErrorCode::missing_entry, msg);
    }
  }
  if (constraint_.metric == Metric::cycles && !constraint_.array)
    throw Error(ErrorCode::validation, "cycles constraint requires an array config");
}

double CostEvaluator::value(const Architecture& arch) const {
  switch (constraint_.metric) {
    case Metric::params:
      return static_cast<double>(count_costs(backbone_, arch).params);
    case Metric::macs:
      return static_cast<double>(count_costs(backbone_, arch).macs);
    case Metric::latency:
      return compose(backbone_, arch, *constraint_.table);
    case Metric::cycles:
      return static_cast<double>(network_cycles(backbone_, arch, *constraint_.array).compute_cycles);
  }
  return 0.0;
}

bool CostEvaluator::feasible(const Architecture& arch) const {
  return value(arch) <= constraint_.bound;
}

namespace {

std::vector<Architecture> init_pool_impl(const Backbone& b, const CostEvaluator& cost,
                                         const AdaptationConfig& config, Rng& rng) {
  std::vector<Architecture> pool;
  pool.reserve(static_cast<size_t>(config.pool_size));
  int64_t budget = static_cast<int64_t>(config.attempt_budget) * config.pool_size;
  double tightest = std::numeric_limits<double>::infinity();
  for (int64_t attempt = 0; attempt < budget && pool.size() < static_cast<size_t>(config.pool_size);
       ++attempt) {
    Architecture a = sample_uniform(b, rng.next());
    double v = cost.value(a);
    tightest = std::min(tightest, v);
    if (v <= cost.constraint().bound) pool.push_back(std::move(a));
  }
  if (pool.size() < static_cast<size_t>(config.pool_size))
    throw Error(ErrorCode::infeasible,
                "constraint infeasible or too tight: found " + std::to_string(pool.size()) +
                    "/" + std::to_string(config.pool_size) + " feasible samples in " +
                    std::to_string(budget) + " draws; tightest " +
                    std::string(metric_name(cost.constraint().metric)) + " seen was " +
                    std::to_string(tightest) + " against bound " +
                    std::to_string(cost.constraint().bound));
  return pool;
}

}  // namespace

std::vector<Architecture> init_pool(const Backbone& b, const Constraint& constraint,
                                    const AdaptationConfig& config) {
  require_valid_backbone(b);
  require_valid_adaptation_config(config);
  CostEvaluator cost(b, constraint);
  Rng rng(mix_seed(config.seed, 0x1217));
  return init_pool_impl(b, cost, config, rng);
}

namespace {

// Scores candidates on the fixed evaluation slice, caching by genome.
class FixedSliceScore {
 public:
  FixedSliceScore(OracleClient& oracle, std::vector<int64_t> slice, int64_t& eval_counter)
      : oracle_(oracle), slice_(std::move(slice)), evals_(eval_counter) {}

  double operator()(const std::string& genome) {
    auto it = cache_.find(genome);
    if (it != cache_.end()) return it->second;
    std::vector<double> losses = oracle_.eval(genome, slice_);
    evals_ += static_cast<int64_t>(losses.size());
    double mean = std::accumulate(losses.begin(), losses.end(), 0.0) /
                  static_cast<double>(losses.size());
    cache_.emplace(genome, mean);
    return mean;
  }

 private:
  OracleClient& oracle_;
  std::vector<int64_t> slice_;
  int64_t& evals_;
  std::map<std::string, double> cache_;
};

}  // namespace

AdaptationResult adapt(const Backbone& b, const Constraint& constraint, OracleClient& oracle,
                       const TaskSet& tasks, const AdaptationConfig& config) {
  require_valid_backbone(b);
  require_valid_adaptation_config(config);
  require_valid_task_set(tasks);
  CostEvaluator cost(b, constraint);

  AdaptationResult result;
  result.metric = constraint.metric;
  result.bound = constraint.bound;
  result.config = config;
  result.tasks = tasks;
  if (constraint.table && constraint.expected_device &&
      constraint.table->device_name != *constraint.expected_device)
    result.warnings.push_back("latency table was profiled on '" + constraint.table->device_name +
                              "' but this run targets '" + *constraint.expected_device + "'");

  // Independent deterministic streams: pool init, per-iteration slices,
  // mutation seeds, and the fixed evaluation slice.
  Rng init_rng(mix_seed(config.seed, 0x1217));
  Rng slice_rng(mix_seed(config.seed ^ tasks.rng_seed, 0x51ce));
  Rng mutate_rng(mix_seed(config.seed, 0x6047));
  Rng fixed_rng(mix_seed(config.seed ^ tasks.rng_seed, 0xf17e));

  std::vector<int64_t> fixed_slice =
      fixed_rng.sample_without_replacement(tasks.n_tasks, tasks.slice_size);
  FixedSliceScore fixed_score(oracle, fixed_slice, result.oracle_evaluations);

  std::vector<Architecture> pool = init_pool_impl(b, cost, config, init_rng);

  // Candidate registry: every architecture that ever entered the pool,
  // keyed by genome. The returned best comes from this set, re-scored on
  // the fixed slice.
  std::map<std::string, Architecture> candidates;
  double best_fixed = std::numeric_limits<double>::infinity();
  auto register_candidate = [&](const Architecture& a) {
    std::string genome = encode(a);
    if (candidates.emplace(genome, a).second)
      best_fixed = std::min(best_fixed, fixed_score(genome));
  };
  for (const Architecture& a : pool) register_candidate(a);

  const int elite_count =
      std::max(1, static_cast<int>(std::ceil(config.elite_fraction * config.pool_size)));

  {
    AuditEntry init_entry;
    init_entry.iteration = 0;
    double sum = 0.0;
    for (const Architecture& a : pool) sum += fixed_score(encode(a));
    init_entry.pool_mean_loss = sum / static_cast<double>(pool.size());
    init_entry.feasible_count = static_cast<int>(pool.size());
    init_entry.best_so_far_loss = best_fixed;
    result.audit.push_back(init_entry);
  }

  for (int iter = 1; iter <= config.iterations; ++iter) {
    std::vector<int64_t> slice =
        slice_rng.sample_without_replacement(tasks.n_tasks, tasks.slice_size);

    // Mean loss of every pool member on this iteration's slice, in pool
    // order (merging is index-ordered, never completion-ordered).
    std::vector<std::pair<double, size_t>> ranked;
    ranked.reserve(pool.size());
    double pool_sum = 0.0;
    for (size_t i = 0; i < pool.size(); ++i) {
      std::vector<double> losses = oracle.eval(encode(pool[i]), slice);
      result.oracle_evaluations += static_cast<int64_t>(losses.size());
      double mean = std::accumulate(losses.begin(), losses.end(), 0.0) /
                    static_cast<double>(losses.size());
      pool_sum += mean;
      ranked.emplace_back(mean, i);
    }
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& l, const auto& r) { return l.first < r.first; });

    // Keep the feasible elite. Pool members are feasible by construction,
    // but the filter mirrors the selection rule rather than assuming it.
    std::vector<Architecture> elites;
    for (const auto& [loss, idx] : ranked) {
      if (static_cast<int>(elites.size()) >= elite_count) break;
      if (cost.feasible(pool[idx])) elites.push_back(pool[idx]);
    }
    if (elites.empty()) elites.push_back(pool[ranked.front().second]);

    AuditEntry entry;
    entry.iteration = iter;
    entry.pool_mean_loss = pool_sum / static_cast<double>(pool.size());

    // Refill with constraint-checked mutants of uniformly chosen elites.
    std::vector<Architecture> next = elites;
    while (next.size() < static_cast<size_t>(config.pool_size)) {
      bool placed = false;
      for (int attempt = 0; attempt < config.attempt_budget; ++attempt) {
        const Architecture& parent = elites[mutate_rng.index(elites.size())];
        Architecture child = mutate(b, parent, mutate_rng.next(), config.n_moves);
        if (cost.feasible(child)) {
          next.push_back(std::move(child));
          placed = true;
          break;
        }
      }
      if (!placed) {
        // Mutation budget exhausted around this elite set: pad with a fresh
        // feasible uniform sample so the pool keeps its size.
        std::vector<Architecture> fresh;
        for (int attempt = 0; attempt < config.attempt_budget && fresh.empty(); ++attempt) {
          Architecture a = sample_uniform(b, mutate_rng.next());
          if (cost.feasible(a)) fresh.push_back(std::move(a));
        }
        if (fresh.empty())
          throw Error(ErrorCode::infeasible,
                      "refill failed: no feasible mutant or fresh sample within budget");
        next.push_back(std::move(fresh.front()));
        ++entry.fresh_samples;
      }
    }
    pool = std::move(next);
    for (const Architecture& a : pool) register_candidate(a);

    int feasible = 0;
    for (const Architecture& a : pool) feasible += cost.feasible(a) ? 1 : 0;
    entry.feasible_count = feasible;
    entry.best_so_far_loss = best_fixed;
    result.audit.push_back(entry);
  }

  // Final selection: lowest fixed-slice loss among all feasible candidates;
  // ties break toward the cheaper metric value, then lexicographic genome.
  std::string best_genome;
  double best_loss = std::numeric_limits<double>::infinity();
  double best_value = std::numeric_limits<double>::infinity();
  for (const auto& [genome, arch] : candidates) {
    if (!cost.feasible(arch)) continue;
    double loss = fixed_score(genome);
    double value = cost.value(arch);
    bool better = loss < best_loss ||
                  (loss == best_loss &&
                   (value < best_value || (value == best_value && genome < best_genome)));
    if (better) {
      best_loss = loss;
      best_value = value;
      best_genome = genome;
    }
  }
  if (best_genome.empty())
    throw Error(ErrorCode::infeasible, "no feasible candidate survived adaptation");

  result.best = candidates.at(best_genome);
  result.best_genome = best_genome;
  result.best_loss = best_loss;
  result.metric_value = best_value;
  return result;
}

std::vector<ParetoPoint> pareto_sweep(const Backbone& b, Metric metric,
                                      const std::vector<double>& bounds,
                                      const Constraint& references, OracleClient& oracle,
                                      const TaskSet& tasks, const AdaptationConfig& config) {
  if (!std::is_sorted(bounds.begin(), bounds.end()))
    throw Error(ErrorCode::invalid_argument, "bounds must be sorted ascending");
  std::vector<ParetoPoint> out;
  for (double bound : bounds) {
    ParetoPoint point;
    point.bound = bound;
    Constraint c = references;
    c.metric = metric;
    c.bound = bound;
    try {
      point.result = adapt(b, c, oracle, tasks, config);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::infeasible) throw;
      point.error = e.what();
    }
    out.push_back(std::move(point));
  }
  return out;
}

std::string adaptation_result_to_json(const AdaptationResult& r) {
  json audit = json::array();
  for (const AuditEntry& e : r.audit) {
    audit.push_back(json{{"iteration", e.iteration},
                         {"pool_mean_loss", e.pool_mean_loss},
                         {"feasible", e.feasible_count},
                         {"best_so_far", e.best_so_far_loss},
                         {"fresh_samples", e.fresh_samples}});
  }
  json doc{
      {"best",
       {{"genome", r.best_genome},
        {"mean_loss", r.best_loss},
        {"metric", metric_name(r.metric)},
        {"metric_value", r.metric_value}}},
      {"constraint", {{"metric", metric_name(r.metric)}, {"bound", r.bound}}},
      {"config",
       {{"pool_size", r.config.pool_size},
        {"iterations", r.config.iterations},
        {"elite_fraction", r.config.elite_fraction},
        {"moves", r.config.n_moves},
        {"attempt_budget", r.config.attempt_budget},
        {"seed", r.config.seed}}},
      {"tasks",
       {{"name", r.tasks.name},
        {"n_tasks", r.tasks.n_tasks},
        {"slice_size", r.tasks.slice_size},
        {"rng_seed", r.tasks.rng_seed}}},
      {"oracle_evaluations", r.oracle_evaluations},
      {"warnings", r.warnings},
      {"audit", audit}};
  return doc.dump(2);
}

}  // namespace hmnas
