#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <limits>

#include "core/adaptation.hpp"
#include "core/cost_model.hpp"
#include "core/errors.hpp"
#include "core/rng.hpp"
#include "support/toys.hpp"

using namespace hmnas;
using toys::make_toy;
using toys::ToySpec;

namespace {

// 200 genomes: enough structure for the GA, small enough to enumerate.
// Params span 14..2578, so a bound at the median (114) caps capacity well
// below typical task difficulties and the constraint actually binds.
Backbone ga_toy() {
  ToySpec spec;
  spec.name = "gatoy";
  spec.n_sites = 2;
  spec.kernels = {1, 3};
  spec.expansions = {25, 50, 100, 150, 200};
  spec.activations = {Activation::relu};
  spec.base_channels = 8;
  spec.input = {1, 12, 12};
  return make_toy(spec);
}

Constraint params_bound(double bound) {
  Constraint c;
  c.metric = Metric::params;
  c.bound = bound;
  return c;
}

// The same fixed slice the adaptation loop draws for final scoring.
std::vector<int64_t> fixed_slice_of(const TaskSet& tasks, uint64_t seed) {
  Rng fixed_rng(mix_seed(seed ^ tasks.rng_seed, 0xf17e));
  return fixed_rng.sample_without_replacement(tasks.n_tasks, tasks.slice_size);
}

double mean_loss_on(const SurrogateOracle& oracle, const Architecture& a,
                    const std::vector<int64_t>& slice) {
  double sum = 0;
  for (int64_t t : slice) sum += oracle.loss(a, t);
  return sum / static_cast<double>(slice.size());
}

// Exhaustive constrained argmin over the toy space on the given slice.
std::pair<std::string, double> brute_force_argmin(const Backbone& b,
                                                  const SurrogateOracle& oracle, double bound,
                                                  const std::vector<int64_t>& slice) {
  std::string best_genome;
  double best_loss = std::numeric_limits<double>::infinity();
  double best_value = std::numeric_limits<double>::infinity();
  for (const Architecture& a : enumerate_space(b, 1000000)) {
    double value = static_cast<double>(count_costs(b, a).params);
    if (value > bound) continue;
    double loss = mean_loss_on(oracle, a, slice);
    std::string genome = encode(a);
    bool better = loss < best_loss ||
                  (loss == best_loss &&
                   (value < best_value || (value == best_value && genome < best_genome)));
    if (better) {
      best_loss = loss;
      best_value = value;
      best_genome = genome;
    }
  }
  return {best_genome, best_loss};
}

}  // namespace

TEST_CASE("adaptation config validation") {
  AdaptationConfig c;
  c.pool_size = 1;
  CHECK_THROWS_AS(require_valid_adaptation_config(c), Error);
  c = {};
  c.elite_fraction = 0.0;
  CHECK_THROWS_AS(require_valid_adaptation_config(c), Error);
  c = {};
  c.iterations = -1;
  CHECK_THROWS_AS(require_valid_adaptation_config(c), Error);
  CHECK_NOTHROW(require_valid_adaptation_config({}));
}

TEST_CASE("unconstrained init pool is P deterministic uniform samples") {
  Backbone b = ga_toy();
  AdaptationConfig config;
  config.pool_size = 25;
  config.seed = 11;
  auto pool1 = init_pool(b, params_bound(1e18), config);
  auto pool2 = init_pool(b, params_bound(1e18), config);
  CHECK(pool1.size() == 25);
  CHECK(pool1 == pool2);
  for (const Architecture& a : pool1) CHECK(validate(b, a).empty());
}

TEST_CASE("every init pool member is re-checked feasible by the cost model") {
  Backbone b = ga_toy();
  double bound = static_cast<double>(count_costs(b, largest(b)).params) * 0.3;
  AdaptationConfig config;
  config.pool_size = 30;
  config.seed = 5;
  for (const Architecture& a : init_pool(b, params_bound(bound), config))
    CHECK(count_costs(b, a).params <= bound);
}

TEST_CASE("a bound below the space minimum is reported infeasible") {
  Backbone b = ga_toy();
  // brute-force verify the feasible set is empty
  int64_t min_params = std::numeric_limits<int64_t>::max();
  for (const Architecture& a : enumerate_space(b, 1000000))
    min_params = std::min(min_params, count_costs(b, a).params);
  double bound = static_cast<double>(min_params - 1);
  AdaptationConfig config;
  config.pool_size = 5;
  config.attempt_budget = 50;
  CHECK_THROWS_WITH_AS(init_pool(b, params_bound(bound), config),
                       doctest::Contains("infeasible"), Error);
}

TEST_CASE("zero iterations returns the best of the initial pool") {
  Backbone b = ga_toy();
  auto oracle = make_surrogate_client(b, {});
  TaskSet tasks{"val", 40, 8, 3};
  AdaptationConfig config;
  config.pool_size = 12;
  config.iterations = 0;
  config.seed = 21;
  AdaptationResult r = adapt(b, params_bound(1e18), *oracle, tasks, config);
  CHECK(r.audit.size() == 1);

  SurrogateOracle direct(b, {});
  auto slice = fixed_slice_of(tasks, config.seed);
  auto pool = init_pool(b, params_bound(1e18), config);
  double best = std::numeric_limits<double>::infinity();
  for (const Architecture& a : pool) best = std::min(best, mean_loss_on(direct, a, slice));
  CHECK(r.best_loss == best);
}

TEST_CASE("the GA finds the brute-force constrained argmin") {
  Backbone b = ga_toy();
  SurrogateOracle direct(b, {0.05, 2});
  const double bound = 114.0;  // median of the space's parameter counts
  TaskSet tasks{"val", 100, 16, 0};

  int matches = 0;
  const int runs = 25;
  for (int run = 0; run < runs; ++run) {
    auto oracle = make_surrogate_client(b, {0.05, 2});
    AdaptationConfig config;
    config.pool_size = 20;
    config.iterations = 50;
    config.seed = static_cast<uint64_t>(run);
    AdaptationResult r = adapt(b, params_bound(bound), *oracle, tasks, config);

    // hard invariant: returned architecture and audit satisfy the bound
    CHECK(count_costs(b, r.best).params <= bound);
    CHECK(r.metric_value <= bound);

    auto [expect_genome, expect_loss] =
        brute_force_argmin(b, direct, bound, fixed_slice_of(tasks, config.seed));
    if (r.best_genome == expect_genome) ++matches;
  }
  // acceptance runs the 100-seed version; this is the fast regression gate
  CHECK(matches >= runs - 1);
}

TEST_CASE("adaptation is deterministic given seed and oracle") {
  Backbone b = ga_toy();
  TaskSet tasks{"val", 60, 8, 9};
  AdaptationConfig config;
  config.pool_size = 10;
  config.iterations = 15;
  config.seed = 77;
  auto o1 = make_surrogate_client(b, {});
  auto o2 = make_surrogate_client(b, {});
  AdaptationResult r1 = adapt(b, params_bound(1e18), *o1, tasks, config);
  AdaptationResult r2 = adapt(b, params_bound(1e18), *o2, tasks, config);
  CHECK(adaptation_result_to_json(r1) == adaptation_result_to_json(r2));
}

TEST_CASE("audit best-so-far is non-increasing and has length M+1") {
  Backbone b = ga_toy();
  TaskSet tasks{"val", 80, 10, 2};
  AdaptationConfig config;
  config.pool_size = 14;
  config.iterations = 30;
  config.seed = 4;
  auto oracle = make_surrogate_client(b, {});
  AdaptationResult r = adapt(b, params_bound(1e18), *oracle, tasks, config);
  REQUIRE(r.audit.size() == 31);
  for (size_t i = 0; i < r.audit.size(); ++i) {
    CHECK(r.audit[i].iteration == static_cast<int>(i));
    CHECK(r.audit[i].feasible_count == 14);
    if (i) CHECK(r.audit[i].best_so_far_loss <= r.audit[i - 1].best_so_far_loss + 1e-15);
  }
  CHECK(r.best_loss == r.audit.back().best_so_far_loss);
}

TEST_CASE("feasibility holds under randomized tight constraints") {
  Backbone b = ga_toy();
  Rng rng(31);
  int64_t lo = std::numeric_limits<int64_t>::max(), hi = 0;
  for (const Architecture& a : enumerate_space(b, 1000000)) {
    int64_t p = count_costs(b, a).params;
    lo = std::min(lo, p);
    hi = std::max(hi, p);
  }
  for (int trial = 0; trial < 10; ++trial) {
    double bound = static_cast<double>(lo) +
                   rng.uniform01() * static_cast<double>(hi - lo) * 0.5;
    TaskSet tasks{"val", 50, 6, rng.next()};
    AdaptationConfig config;
    config.pool_size = 8;
    config.iterations = 10;
    config.seed = rng.next();
    auto oracle = make_surrogate_client(b, {});
    AdaptationResult r = adapt(b, params_bound(bound), *oracle, tasks, config);
    CHECK(count_costs(b, r.best).params <= bound);
    for (const AuditEntry& e : r.audit) CHECK(e.feasible_count == 8);
  }
}

TEST_CASE("latency constraints demand a total table") {
  Backbone b = ga_toy();
  DeviceProfile analytic;
  analytic.device_name = "analytic-test";
  analytic.method = LatencyMethod::analytic;
  analytic.macs_per_second = 1e9;
  ProfileOutcome out = profile(b, analytic);

  Constraint c;
  c.metric = Metric::latency;
  c.bound = 1e12;
  LatencyTable partial = out.table;
  partial.entries.erase(partial.entries.begin());
  c.table = &partial;
  AdaptationConfig config;
  config.pool_size = 4;
  auto oracle = make_surrogate_client(b, {});
  TaskSet tasks{"val", 20, 4, 0};
  CHECK_THROWS_WITH_AS(adapt(b, c, *oracle, tasks, config), doctest::Contains("not total"),
                       Error);

  c.table = &out.table;
  c.expected_device = "some-other-device";
  AdaptationResult r = adapt(b, c, *oracle, tasks, config);
  REQUIRE(r.warnings.size() == 1);
  CHECK(r.warnings[0].find("analytic-test") != std::string::npos);
  CHECK(compose(b, r.best, out.table) <= c.bound);
}

TEST_CASE("cycles constraints gate through the systolic model") {
  Backbone b = ga_toy();
  Constraint c;
  c.metric = Metric::cycles;
  c.bound = static_cast<double>(
      network_cycles(b, largest(b), ArrayConfig{}).compute_cycles);
  c.array = ArrayConfig{};
  AdaptationConfig config;
  config.pool_size = 6;
  config.iterations = 5;
  auto oracle = make_surrogate_client(b, {});
  TaskSet tasks{"val", 20, 4, 0};
  AdaptationResult r = adapt(b, c, *oracle, tasks, config);
  CHECK(network_cycles(b, r.best, *c.array).compute_cycles <= c.bound);
}

TEST_CASE("oracle failures abort the run") {
  Backbone b = ga_toy();
  auto bad = make_subprocess_client({HMNAS_ECHO_ORACLE, "--short"}, 10000);
  AdaptationConfig config;
  config.pool_size = 4;
  config.iterations = 3;
  TaskSet tasks{"val", 20, 4, 0};
  CHECK_THROWS_AS(adapt(b, params_bound(1e18), *bad, tasks, config), Error);
}

TEST_CASE("pareto sweep is reproducible, monotone, and records infeasibility") {
  Backbone b = ga_toy();
  SurrogateOracle direct(b, {0.05, 2});
  int64_t lo = std::numeric_limits<int64_t>::max(), hi = 0;
  for (const Architecture& a : enumerate_space(b, 1000000)) {
    int64_t p = count_costs(b, a).params;
    lo = std::min(lo, p);
    hi = std::max(hi, p);
  }
  TaskSet tasks{"val", 100, 16, 0};
  AdaptationConfig config;
  config.pool_size = 20;
  config.iterations = 50;
  config.seed = 12;
  Constraint refs;  // metric/bound filled per point by the sweep

  std::vector<double> bounds = {static_cast<double>(lo - 1),  // infeasible
                                114.0, 114.0, static_cast<double>(hi)};
  auto oracle = make_surrogate_client(b, {0.05, 2});
  auto points = pareto_sweep(b, Metric::params, bounds, refs, *oracle, tasks, config);
  REQUIRE(points.size() == 4);
  CHECK(!points[0].result.has_value());
  CHECK(points[0].error.find("infeasible") != std::string::npos);
  REQUIRE(points[1].result.has_value());
  REQUIRE(points[3].result.has_value());

  // duplicated bound, same seed -> identical results
  CHECK(adaptation_result_to_json(*points[1].result) ==
        adaptation_result_to_json(*points[2].result));

  // looser bound never loses: verified against brute-force minima as well
  auto slice = fixed_slice_of(tasks, config.seed);
  auto tight = brute_force_argmin(b, direct, bounds[1], slice);
  auto loose = brute_force_argmin(b, direct, bounds[3], slice);
  CHECK(loose.second <= tight.second);
  CHECK(points[3].result->best_loss <= points[1].result->best_loss + 1e-12);

  CHECK_THROWS_AS(
      pareto_sweep(b, Metric::params, {2.0, 1.0}, refs, *oracle, tasks, config), Error);
}
