#include "core/sampler.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "core/errors.hpp"
#include "core/rng.hpp"

namespace hmnas {

using nlohmann::json;

void require_valid_schedule(const ShrinkSchedule& s) {
  if (!(s.p_e >= 0.0 && s.p_e <= s.p_i && s.p_i <= 1.0))
    throw Error(ErrorCode::validation, "schedule requires 0 <= p_e <= p_i <= 1");
  if (!(s.e_s < s.e_m)) throw Error(ErrorCode::validation, "schedule requires e_s < e_m");
  if (!(s.alpha > 0.0)) throw Error(ErrorCode::validation, "schedule requires alpha > 0");
}

ShrinkSchedule schedule_from_json(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse, std::string("schedule JSON: ") + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::parse, "schedule: expected an object");
  static const char* allowed[] = {"p_i", "p_e", "alpha", "e_s", "e_m"};
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) ok = true;
    if (!ok) throw Error(ErrorCode::parse, "schedule: unknown key '" + it.key() + "'");
  }
  ShrinkSchedule s;
  s.p_i = doc.value("p_i", s.p_i);
  s.p_e = doc.value("p_e", s.p_e);
  s.alpha = doc.value("alpha", s.alpha);
  s.e_s = doc.value("e_s", s.e_s);
  s.e_m = doc.value("e_m", s.e_m);
  require_valid_schedule(s);
  return s;
}

std::string schedule_to_json(const ShrinkSchedule& s) {
  return json{{"p_i", s.p_i}, {"p_e", s.p_e}, {"alpha", s.alpha}, {"e_s", s.e_s}, {"e_m", s.e_m}}
      .dump(2);
}

double shrink_probability(const ShrinkSchedule& s, int epoch) {
  require_valid_schedule(s);
  int e = epoch;
  if (e < s.e_s) return s.p_i;
  if (e > s.e_m) e = s.e_m;
  double progress = static_cast<double>(e - s.e_s) / static_cast<double>(s.e_m - s.e_s);
  return s.p_e + (s.p_i - s.p_e) * std::exp(-s.alpha * progress);
}

Architecture sample_epoch_architecture(const ShrinkSchedule& s, const Backbone& b, int epoch,
                                       uint64_t seed) {
  double p = shrink_probability(s, epoch);
  Rng rng(mix_seed(seed, 0xe90c));
  if (rng.uniform01() < p) return largest(b);
  return sample_uniform(b, rng.next());
}

}  // namespace hmnas
