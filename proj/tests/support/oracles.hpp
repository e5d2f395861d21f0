#pragma once

// Independent oracles shared by the unit and acceptance suites. These
// deliberately re-derive results through different machinery than the
// implementation paths they check.

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "core/latency_key.hpp"
#include "core/search_space.hpp"
#include "core/systolic.hpp"

namespace oracles {

struct EventSimResult {
  int64_t cycles = 0;
  int64_t mac_events = 0;
  int64_t row_folds = 0;
  int64_t col_folds = 0;
};

// Event-driven model of the weight-stationary mapping, built from the
// dataflow itself rather than the closed form: activation vector t enters
// the array at cycle t, PE (r, c) fires its multiply for vector t at cycle
// t + r + c, and the result drains through the full physical skew, exiting
// after stage (rows-1) + (cols-1). Folds run back to back; every event is
// enumerated and the fold length is the last event cycle plus one.
inline EventSimResult event_sim(const hmnas::LayerConfig& layer, const hmnas::ArrayConfig& cfg) {
  const int64_t window = static_cast<int64_t>(layer.in_c) * layer.kernel * layer.kernel;
  const int64_t t_steps = static_cast<int64_t>(layer.in_h) * layer.in_w;
  EventSimResult out;
  for (int64_t row_base = 0; row_base < window; row_base += cfg.rows) {
    ++out.row_folds;
    int64_t rows_used = std::min<int64_t>(cfg.rows, window - row_base);
    for (int64_t col_base = 0; col_base < layer.out_c; col_base += cfg.cols) {
      if (row_base == 0) ++out.col_folds;
      int64_t cols_used = std::min<int64_t>(cfg.cols, layer.out_c - col_base);
      int64_t last_event = 0;
      for (int64_t t = 0; t < t_steps; ++t) {
        for (int64_t r = 0; r < rows_used; ++r)
          for (int64_t c = 0; c < cols_used; ++c) {
            ++out.mac_events;
            last_event = std::max(last_event, t + r + c);
          }
        // drain event: vector t leaves the physical pipeline after the
        // full skew, even through unused pass-through PEs
        last_event = std::max(last_event, t + cfg.rows - 1 + cfg.cols - 1);
      }
      out.cycles += last_event + 1;
    }
  }
  return out;
}

// Brute-force reachable-set oracle: drives trace-based per-architecture
// config extraction over every (previous expansion, site choice)
// combination and every (depth, last expansion) head, instead of the
// enumerator's direct set construction.
inline std::set<std::string> reachable_keys(const hmnas::Backbone& b) {
  using namespace hmnas;
  std::set<std::string> keys;
  Architecture probe = smallest(b);
  probe.active_depth = b.max_depth;
  int max_sites = b.active_sites(b.max_depth);
  for (int site = 0; site < max_sites; ++site) {
    const LayerSite& s = b.layers[static_cast<size_t>(site)];
    std::vector<int> prev_exps =
        site == 0 ? std::vector<int>{0}
                  : b.layers[static_cast<size_t>(site - 1)].expansion_choices;
    for (int prev : prev_exps) {
      for (int k : s.kernel_choices)
        for (int e : s.expansion_choices)
          for (Activation act : s.activation_choices) {
            Architecture a = probe;
            if (site > 0) a.per_layer[static_cast<size_t>(site - 1)].expansion = prev;
            a.per_layer[static_cast<size_t>(site)] = {k, e, act};
            keys.insert(layer_key(arch_layer_configs(b, a)[static_cast<size_t>(site)]));
          }
    }
  }
  for (int depth = b.min_depth; depth <= b.max_depth; ++depth) {
    int last = b.active_sites(depth) - 1;
    for (int e : b.layers[static_cast<size_t>(last)].expansion_choices) {
      Architecture a = probe;
      a.active_depth = depth;
      a.per_layer[static_cast<size_t>(last)].expansion = e;
      auto configs = arch_layer_configs(b, a);
      keys.insert(layer_key(configs[configs.size() - 2]));  // head pool
      keys.insert(layer_key(configs[configs.size() - 1]));  // head linear
    }
  }
  return keys;
}

}  // namespace oracles
