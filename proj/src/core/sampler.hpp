#pragma once

#include <string>

#include "core/search_space.hpp"

namespace hmnas {

// Progressive-shrinking schedule: the probability of drawing the largest
// network starts at p_i, decays exponentially from epoch e_s to e_m, and
// holds at the e_m value afterwards.
struct ShrinkSchedule {
  double p_i = 1.0;
  double p_e = 0.0;
  double alpha = 5.0;
  int e_s = 30;
  int e_m = 100;
};

// Throws Error{validation} unless 0 <= p_e <= p_i <= 1, e_s < e_m, alpha > 0.
void require_valid_schedule(const ShrinkSchedule& schedule);

ShrinkSchedule schedule_from_json(const std::string& json_text);
std::string schedule_to_json(const ShrinkSchedule& schedule);

//   e <  e_s:        p = p_i
//   e_s <= e <= e_m: p = p_e + (p_i - p_e) * exp(-alpha * (e - e_s)/(e_m - e_s))
//   e >  e_m:        p = value at e_m
double shrink_probability(const ShrinkSchedule& schedule, int epoch);

// largest(backbone) with probability shrink_probability(schedule, epoch),
// otherwise a uniform sample. Deterministic given the seed.
Architecture sample_epoch_architecture(const ShrinkSchedule& schedule, const Backbone& backbone,
                                       int epoch, uint64_t seed);

}  // namespace hmnas
