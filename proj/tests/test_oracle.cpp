#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "core/cost_model.hpp"
#include "core/errors.hpp"
#include "core/oracle.hpp"
#include "core/search_space.hpp"
#include "support/toys.hpp"

using namespace hmnas;
using toys::make_toy;
using toys::ToySpec;

static Backbone toy() {
  ToySpec spec;
  spec.expansions = {50, 100, 150};
  return make_toy(spec);
}

TEST_CASE("task set validation") {
  CHECK_THROWS_AS(require_valid_task_set({"t", 0, 1, 0}), Error);
  CHECK_THROWS_AS(require_valid_task_set({"t", 10, 11, 0}), Error);
  CHECK_NOTHROW(require_valid_task_set({"t", 600, 16, 0}));
}

TEST_CASE("surrogate loss is the capacity-gap quadratic plus hash noise") {
  Backbone b = toy();
  SurrogateOracle zero_noise(b, {0.0, 42});
  for (uint64_t seed = 0; seed < 30; ++seed) {
    Architecture a = sample_uniform(b, seed);
    for (int64_t task : {0, 7, 599}) {
      double gap = zero_noise.capacity(a) - zero_noise.difficulty(task);
      CHECK(zero_noise.loss(a, task) == gap * gap);
    }
  }
  SurrogateOracle noisy(b, {0.05, 42});
  for (uint64_t seed = 0; seed < 30; ++seed) {
    Architecture a = sample_uniform(b, seed);
    double gap = noisy.capacity(a) - noisy.difficulty(3);
    double noise = noisy.loss(a, 3) - gap * gap;
    CHECK(noise >= 0.0);
    CHECK(noise <= 0.05);
  }
}

TEST_CASE("identical queries produce bitwise-identical losses") {
  Backbone b = toy();
  SurrogateOracle oracle(b, {});
  for (uint64_t seed = 0; seed < 20; ++seed) {
    Architecture a = sample_uniform(b, seed);
    for (int64_t task = 0; task < 10; ++task)
      CHECK(oracle.loss(a, task) == oracle.loss(a, task));
  }
  SurrogateOracle again(b, {});
  Architecture a = sample_uniform(b, 5);
  CHECK(oracle.loss(a, 123) == again.loss(a, 123));
}

TEST_CASE("capacity is monotone in parameter count and normalized") {
  Backbone b = toy();
  SurrogateOracle oracle(b, {});
  CHECK(oracle.capacity(smallest(b)) == 0.0);
  CHECK(oracle.capacity(largest(b)) == 1.0);
  for (uint64_t seed = 0; seed < 40; ++seed) {
    Architecture x = sample_uniform(b, seed);
    Architecture y = sample_uniform(b, seed + 1000);
    double cx = oracle.capacity(x), cy = oracle.capacity(y);
    CHECK(cx >= 0.0);
    CHECK(cx <= 1.0);
    if (count_costs(b, x).params > count_costs(b, y).params) CHECK(cx >= cy);
  }
}

TEST_CASE("the constrained argmin of the surrogate is capacity-matching") {
  // On the full enumeration, the best architecture under a tight parameter
  // bound sits close to the task difficulty from below (the quadratic
  // pushes toward d; the bound caps capacity).
  Backbone b = toy();
  SurrogateOracle oracle(b, {0.0, 9});
  auto all = enumerate_space(b, 100000);
  std::vector<int64_t> slice = {0, 1, 2, 3};
  int64_t bound = (count_costs(b, smallest(b)).params + count_costs(b, largest(b)).params) / 2;

  const Architecture* best = nullptr;
  double best_loss = 1e300;
  for (const Architecture& a : all) {
    if (count_costs(b, a).params > bound) continue;
    double mean = 0;
    for (int64_t t : slice) mean += oracle.loss(a, t);
    mean /= static_cast<double>(slice.size());
    if (mean < best_loss) {
      best_loss = mean;
      best = &a;
    }
  }
  REQUIRE(best != nullptr);
  double mean_d = 0;
  for (int64_t t : slice) mean_d += oracle.difficulty(t);
  mean_d /= static_cast<double>(slice.size());
  // no feasible architecture with capacity closer to the mean difficulty
  for (const Architecture& a : all) {
    if (count_costs(b, a).params > bound) continue;
    double gap_best = 0, gap_a = 0;
    for (int64_t t : slice) {
      gap_best += std::pow(oracle.capacity(*best) - oracle.difficulty(t), 2);
      gap_a += std::pow(oracle.capacity(a) - oracle.difficulty(t), 2);
    }
    CHECK(gap_best <= gap_a + 1e-12);
  }
}

TEST_CASE("surrogate client validates and answers in order") {
  Backbone b = toy();
  auto client = make_surrogate_client(b, {0.05, 0});
  SurrogateOracle direct(b, {0.05, 0});
  Architecture a = sample_uniform(b, 3);
  std::vector<int64_t> tasks = {5, 1, 9, 1};
  auto losses = client->eval(encode(a), tasks);
  REQUIRE(losses.size() == 4);
  for (size_t i = 0; i < tasks.size(); ++i) CHECK(losses[i] == direct.loss(a, tasks[i]));
  CHECK_THROWS_AS(client->eval("garbage genome", tasks), Error);
}

TEST_CASE("subprocess echo oracle returns its fixed loss") {
  Backbone b = toy();
  auto client = make_subprocess_client({HMNAS_ECHO_ORACLE, "--loss", "1.0"}, 10000);
  std::vector<int64_t> tasks = {1, 2, 3};
  auto losses = client->eval(encode(sample_uniform(b, 1)), tasks);
  REQUIRE(losses.size() == 3);
  for (double l : losses) CHECK(l == 1.0);
  // ids keep matching across many requests
  for (int i = 0; i < 50; ++i) {
    auto more = client->eval(encode(sample_uniform(b, static_cast<uint64_t>(i))), tasks);
    CHECK(more.size() == 3);
  }
}

TEST_CASE("protocol violations raise oracle errors echoing the query") {
  Backbone b = toy();
  std::vector<int64_t> tasks = {1, 2};
  std::string genome = encode(sample_uniform(b, 7));

  auto nan_client = make_subprocess_client({HMNAS_ECHO_ORACLE, "--nan"}, 10000);
  CHECK_THROWS_AS(nan_client->eval(genome, tasks), Error);

  auto short_client = make_subprocess_client({HMNAS_ECHO_ORACLE, "--short"}, 10000);
  CHECK_THROWS_WITH_AS(short_client->eval(genome, tasks), doctest::Contains(genome.c_str()), Error);

  auto garbage_client = make_subprocess_client({HMNAS_ECHO_ORACLE, "--garbage"}, 10000);
  CHECK_THROWS_AS(garbage_client->eval(genome, tasks), Error);

  CHECK_THROWS_AS(make_subprocess_client({HMNAS_ECHO_ORACLE, "--no-handshake", "--garbage"}, 2000),
                  Error);
}

TEST_CASE("negative losses are rejected at the boundary") {
  Backbone b = toy();
  auto client = make_subprocess_client({HMNAS_ECHO_ORACLE, "--loss", "-0.5"}, 10000);
  std::vector<int64_t> tasks = {1};
  CHECK_THROWS_AS(client->eval(encode(sample_uniform(b, 1)), tasks), Error);
}
