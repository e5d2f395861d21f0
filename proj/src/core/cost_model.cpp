#include "core/cost_model.hpp"

#include <nlohmann/json.hpp>

#include "core/errors.hpp"

namespace hmnas {

namespace {

int ceil_div(int a, int b) { return (a + b - 1) / b; }

}  // namespace

ShapeTrace trace_shapes(const Backbone& b, const Architecture& a, Shape input) {
  require_valid(b, a);
  if (input.channels < 1 || input.height < 1 || input.width < 1)
    throw Error(ErrorCode::invalid_argument, "input shape dimensions must be positive");

  ShapeTrace trace;
  int c = input.channels;
  int h = input.height;
  int w = input.width;
  int active = b.active_sites(a.active_depth);
  for (int i = 0; i < active; ++i) {
    const LayerSite& site = b.layers[static_cast<size_t>(i)];
    LayerShape ls;
    ls.site = i;
    ls.in_c = c;
    ls.out_c = arch_channels(b, a, i);
    ls.kernel = a.per_layer[static_cast<size_t>(i)].kernel;
    ls.stride = site.stride;
    ls.in_h = h;
    ls.in_w = w;
    ls.out_h = ceil_div(h, site.stride);
    ls.out_w = ceil_div(w, site.stride);
    ls.activation = a.per_layer[static_cast<size_t>(i)].activation;
    if (ls.out_h < 1 || ls.out_w < 1)
      throw Error(ErrorCode::validation,
                  "spatial size underflow at layer " + std::to_string(i) + " (" + site.name + ")");
    trace.layers.push_back(ls);
    c = ls.out_c;
    h = ls.out_h;
    w = ls.out_w;
  }
  trace.head.in_c = c;
  trace.head.in_h = h;
  trace.head.in_w = w;
  trace.head.pool_n = b.head.pool_n;
  trace.head.features = static_cast<int64_t>(b.head.pool_n) * b.head.pool_n * c;
  trace.head.classes = b.head.classes;
  return trace;
}

CostReport count_costs(const Backbone& b, const Architecture& a, Shape input, int classes) {
  if (classes < 1) throw Error(ErrorCode::invalid_argument, "classes must be >= 1");
  ShapeTrace trace = trace_shapes(b, a, input);

  CostReport report;
  for (const LayerShape& l : trace.layers) {
    LayerCost cost;
    cost.params = static_cast<int64_t>(l.in_c) * l.out_c * l.kernel * l.kernel;
    if (b.conventions.conv_bias) cost.params += l.out_c;
    cost.params += static_cast<int64_t>(b.conventions.norm_params_per_channel) * l.out_c;
    cost.macs = static_cast<int64_t>(l.in_h) * l.in_w * l.out_c * l.in_c * l.kernel * l.kernel;
    report.per_layer.push_back(cost);
    report.params += cost.params;
    report.macs += cost.macs;
  }
  report.head.params = trace.head.features * classes + classes;
  report.head.macs = trace.head.features * classes;
  report.params += report.head.params;
  report.macs += report.head.macs;
  return report;
}

std::string cost_report_to_json(const CostReport& report) {
  nlohmann::json per_layer = nlohmann::json::array();
  for (const LayerCost& c : report.per_layer)
    per_layer.push_back({{"params", c.params}, {"macs", c.macs}});
  nlohmann::json doc{{"params", report.params},
                     {"macs", report.macs},
                     {"per_layer", per_layer},
                     {"head", {{"params", report.head.params}, {"macs", report.head.macs}}}};
  return doc.dump(2);
}

}  // namespace hmnas
