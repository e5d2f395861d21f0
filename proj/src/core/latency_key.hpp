#pragma once

#include <optional>
#include <string>
#include <vector>

#include "core/cost_model.hpp"
#include "core/search_space.hpp"

namespace hmnas {

enum class OpKind : uint8_t { conv, linear, pool };

const char* op_kind_name(OpKind k);

// One profiled unit of work. A conv config covers the whole layer site
// (conv + activation + downsampling pool); activation latency measurably
// differs on small CPUs, so it is part of the key. Two sites at different
// positions with identical fields share one key.
struct LayerConfig {
  OpKind kind = OpKind::conv;
  int in_c = 0;
  int out_c = 0;
  int kernel = 1;
  int stride = 1;
  int in_h = 1;
  int in_w = 1;
  std::optional<Activation> activation;  // conv only

  bool operator==(const LayerConfig&) const = default;
  auto operator<=>(const LayerConfig&) const = default;
};

// Canonical key: field-ordered, exact-decimal rendering, bit-stable across
// platforms. Examples:
//   conv:ic3:oc48:k3:s2:h84:w84:relu
//   pool:c64:n5:h6:w6
//   linear:i1200:o5
std::string layer_key(const LayerConfig& config);
// Throws Error{parse} on malformed keys.
LayerConfig parse_layer_key(const std::string& key);

int64_t layer_macs(const LayerConfig& config);

// The LayerConfigs of one concrete architecture, in execution order:
// active conv sites, head pool, head linear.
std::vector<LayerConfig> arch_layer_configs(const Backbone& backbone, const Architecture& arch);

// Exactly the set of LayerConfigs reachable by any valid architecture of
// the backbone (in_c at site i ranges over the previous site's expansion
// choices), deduplicated and sorted by key.
std::vector<LayerConfig> enumerate_unique_layer_configs(const Backbone& backbone);

}  // namespace hmnas
