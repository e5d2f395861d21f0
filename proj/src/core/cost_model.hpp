#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/search_space.hpp"

namespace hmnas {

// Shape bookkeeping for one active layer site. The site is
// conv(k, stride 1, 'same') + activation + max-pool realizing the site
// stride with ceil division, so the conv itself runs at the incoming
// resolution and out_h = ceil(in_h / stride) is the post-pool size.
struct LayerShape {
  int site = 0;
  int in_c = 0, out_c = 0;
  int kernel = 0, stride = 1;
  int in_h = 0, in_w = 0;
  int out_h = 0, out_w = 0;
  Activation activation = Activation::relu;
};

struct HeadShape {
  int in_c = 0, in_h = 0, in_w = 0;
  int pool_n = 1;
  int64_t features = 0;  // pool_n^2 * in_c
  int classes = 0;
};

struct ShapeTrace {
  std::vector<LayerShape> layers;  // active sites only
  HeadShape head;
};

struct LayerCost {
  int64_t params = 0;
  int64_t macs = 0;
};

struct CostReport {
  int64_t params = 0;
  int64_t macs = 0;
  std::vector<LayerCost> per_layer;  // active sites, then the head as last entry
  LayerCost head;
};

// Throws Error{validation} naming the layer on spatial underflow.
ShapeTrace trace_shapes(const Backbone& backbone, const Architecture& arch, Shape input);

// Per-layer accounting under the backbone's conventions:
//   conv params = in_c*out_c*k^2 (+ out_c bias) (+ norm_params_per_channel*out_c)
//   conv MACs   = in_h*in_w*out_c*in_c*k^2   (stride-1 'same' resolution)
//   head linear = features*classes + classes params, features*classes MACs
// Pooling and activations contribute zero to both totals.
CostReport count_costs(const Backbone& backbone, const Architecture& arch, Shape input,
                       int classes);

inline CostReport count_costs(const Backbone& backbone, const Architecture& arch) {
  return count_costs(backbone, arch, backbone.input_shape, backbone.head.classes);
}

std::string cost_report_to_json(const CostReport& report);

}  // namespace hmnas
