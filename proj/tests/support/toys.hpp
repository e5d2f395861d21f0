#pragma once

// Shared toy search spaces and brute-force helpers for the test suites.

#include <string>
#include <vector>

#include "core/search_space.hpp"

namespace toys {

struct ToySpec {
  std::string name = "toy";
  int n_sites = 3;
  std::vector<int> kernels = {1, 3};
  std::vector<int> expansions = {50, 100};  // hundredths
  std::vector<hmnas::Activation> activations = {hmnas::Activation::relu};
  int base_channels = 8;
  int stride = 2;
  int min_depth = 1;
  int max_depth = -1;  // -1: all sites
  hmnas::Shape input{1, 16, 16};
  int pool_n = 1;
  int classes = 2;
  int block_size = 1;
  std::vector<int> ge_choices = {};
  bool conv_bias = true;
  int norm_params = 2;
};

inline hmnas::Backbone make_toy(const ToySpec& spec) {
  hmnas::Backbone b;
  b.name = spec.name;
  b.input_shape = spec.input;
  b.head = {spec.pool_n, spec.classes};
  b.block_size = spec.block_size;
  b.min_depth = spec.min_depth;
  b.max_depth = spec.max_depth < 0 ? spec.n_sites / spec.block_size : spec.max_depth;
  b.global_expansion_choices = spec.ge_choices;
  b.conventions.conv_bias = spec.conv_bias;
  b.conventions.norm_params_per_channel = spec.norm_params;
  for (int i = 0; i < spec.n_sites; ++i) {
    hmnas::LayerSite s;
    s.position = i;
    s.name = "site" + std::to_string(i);
    s.base_channels = spec.base_channels;
    s.stride = spec.stride;
    s.kernel_choices = spec.kernels;
    s.expansion_choices = spec.expansions;
    s.activation_choices = spec.activations;
    b.layers.push_back(std::move(s));
  }
  return b;
}

// Genome Hamming distance over (per-site kernel/expansion/activation slots,
// the depth slot, and the ge slot).
inline int hamming(const hmnas::Architecture& a, const hmnas::Architecture& b) {
  int d = 0;
  for (size_t i = 0; i < a.per_layer.size(); ++i) {
    if (a.per_layer[i].kernel != b.per_layer[i].kernel) ++d;
    if (a.per_layer[i].expansion != b.per_layer[i].expansion) ++d;
    if (a.per_layer[i].activation != b.per_layer[i].activation) ++d;
  }
  if (a.active_depth != b.active_depth) ++d;
  if (a.global_expansion != b.global_expansion) ++d;
  return d;
}

}  // namespace toys
