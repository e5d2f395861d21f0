#pragma once

#include <vector>

#include "core/latency_key.hpp"

namespace hmnas {

// Direct-convolution reference kernels used by the measured latency
// provider and the end-to-end measurement oracle. Single-threaded,
// deterministic fills, float32.
//
// A conv config executes the full layer site: conv(k, stride 1, 'same')
// with bias, activation, then the stride-s max pool (ceil semantics).
// A pool config is an adaptive average pool to an n x n target (handles
// both down- and upsampling). A linear config is a dense layer with bias.

struct Tensor {
  int c = 0, h = 0, w = 0;
  std::vector<float> data;

  Tensor() = default;
  Tensor(int c_, int h_, int w_) : c(c_), h(h_), w(w_), data(static_cast<size_t>(c_) * h_ * w_) {}
  size_t size() const { return data.size(); }
};

// Deterministic pseudo-random fill in [-1, 1].
void fill_tensor(Tensor& t, uint64_t seed);

// Executes one layer config; input shape must match the config.
Tensor run_layer(const LayerConfig& config, const Tensor& input, uint64_t weight_seed);

// One timed execution of a layer config on a fresh deterministic input.
// Returns microseconds.
double time_layer_once(const LayerConfig& config);

// Runs the configs as a chained network on a deterministic input and
// returns the total wall time of one pass, microseconds.
double time_network_once(const std::vector<LayerConfig>& configs);

}  // namespace hmnas
