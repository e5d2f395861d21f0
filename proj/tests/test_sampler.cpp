#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "core/errors.hpp"
#include "core/rng.hpp"
#include "core/sampler.hpp"
#include "support/toys.hpp"

using namespace hmnas;

TEST_CASE("schedule validation") {
  CHECK_THROWS_AS(require_valid_schedule({0.5, 0.9, 5.0, 30, 100}), Error);  // p_e > p_i
  CHECK_THROWS_AS(require_valid_schedule({1.0, 0.0, 5.0, 100, 100}), Error); // e_s == e_m
  CHECK_THROWS_AS(require_valid_schedule({1.0, 0.0, 0.0, 30, 100}), Error);  // alpha = 0
  CHECK_THROWS_AS(require_valid_schedule({1.2, 0.0, 5.0, 30, 100}), Error);  // p_i > 1
  CHECK_NOTHROW(require_valid_schedule({1.0, 0.0, 5.0, 30, 100}));
}

TEST_CASE("schedule json round trip and strictness") {
  ShrinkSchedule s = schedule_from_json(R"({"p_i":0.9,"p_e":0.1,"alpha":2.5,"e_s":10,"e_m":50})");
  CHECK(s.p_i == 0.9);
  CHECK(s.e_m == 50);
  CHECK_THROWS_AS(schedule_from_json(R"({"pi":1.0})"), Error);
  ShrinkSchedule defaults = schedule_from_json("{}");
  CHECK(defaults.p_i == 1.0);
  CHECK(defaults.e_s == 30);
  CHECK(defaults.alpha == 5.0);
  CHECK(defaults.e_m == 100);
  CHECK(defaults.p_e == 0.0);
}

TEST_CASE("decay boundaries match the closed form") {
  ShrinkSchedule s;  // defaults p_i=1, p_e=0, alpha=5, e_s=30, e_m=100
  CHECK(shrink_probability(s, s.e_s) == 1.0);           // exp(0) = 1
  CHECK(shrink_probability(s, 0) == 1.0);               // pre-decay clamp
  CHECK(std::abs(shrink_probability(s, s.e_m) - std::exp(-5.0)) <= 1e-12);
  CHECK(shrink_probability(s, s.e_m + 50) == shrink_probability(s, s.e_m));  // hold at end
}

TEST_CASE("constant schedule when p_i equals p_e") {
  ShrinkSchedule s{0.3, 0.3, 5.0, 10, 20};
  for (int e = 0; e < 40; ++e) CHECK(shrink_probability(s, e) == doctest::Approx(0.3));
}

TEST_CASE("property: non-increasing and within range over random schedules") {
  Rng rng(2024);
  for (int trial = 0; trial < 10000; ++trial) {
    ShrinkSchedule s;
    s.p_i = rng.uniform01();
    s.p_e = s.p_i * rng.uniform01();
    s.alpha = 0.01 + 60.0 * rng.uniform01();
    s.e_s = static_cast<int>(rng.bounded(80));
    s.e_m = s.e_s + 1 + static_cast<int>(rng.bounded(120));
    double prev = shrink_probability(s, 0);
    for (int e = 0; e <= s.e_m + 10; ++e) {
      double p = shrink_probability(s, e);
      CHECK(p <= prev + 1e-15);
      CHECK(p >= s.p_e - 1e-15);
      CHECK(p <= s.p_i + 1e-15);
      prev = p;
    }
    CHECK(shrink_probability(s, s.e_s) == doctest::Approx(s.p_i).epsilon(1e-12));
    double end = s.p_e + (s.p_i - s.p_e) * std::exp(-s.alpha);
    CHECK(std::abs(shrink_probability(s, s.e_m) - end) <= 1e-12);
  }
}

TEST_CASE("epoch zero with defaults always draws the largest network") {
  toys::ToySpec spec;
  Backbone b = toys::make_toy(spec);
  ShrinkSchedule s;
  Architecture big = largest(b);
  for (uint64_t seed = 0; seed < 200; ++seed)
    CHECK(sample_epoch_architecture(s, b, 0, seed) == big);
}

TEST_CASE("draw frequency at p half stays within 5 sigma") {
  toys::ToySpec spec;
  Backbone b = toys::make_toy(spec);
  ShrinkSchedule s{0.5, 0.5, 5.0, 0, 1};  // constant 0.5
  Architecture big = largest(b);
  const int n = 100000;
  int hits = 0;
  for (int i = 0; i < n; ++i)
    if (sample_epoch_architecture(s, b, 5, static_cast<uint64_t>(i)) == big) ++hits;
  // Non-largest draws can also produce the largest genome by chance, at
  // rate (1-p) / |space|.
  double space = space_size(b).as_float;
  double p_hit = 0.5 + 0.5 / space;
  double sigma = std::sqrt(n * p_hit * (1 - p_hit));
  CHECK(std::abs(hits - n * p_hit) < 5 * sigma);
}

TEST_CASE("epoch sampling is reproducible") {
  toys::ToySpec spec;
  Backbone b = toys::make_toy(spec);
  ShrinkSchedule s;
  for (int epoch : {0, 31, 60, 100, 140})
    CHECK(sample_epoch_architecture(s, b, epoch, 99) ==
          sample_epoch_architecture(s, b, epoch, 99));
}
