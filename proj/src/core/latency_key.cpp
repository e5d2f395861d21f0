#include "core/latency_key.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "core/errors.hpp"

namespace hmnas {

const char* op_kind_name(OpKind k) {
  switch (k) {
    case OpKind::conv: return "conv";
    case OpKind::linear: return "linear";
    case OpKind::pool: return "pool";
  }
  return "conv";
}

std::string layer_key(const LayerConfig& c) {
  switch (c.kind) {
    case OpKind::conv:
      return "conv:ic" + std::to_string(c.in_c) + ":oc" + std::to_string(c.out_c) + ":k" +
             std::to_string(c.kernel) + ":s" + std::to_string(c.stride) + ":h" +
             std::to_string(c.in_h) + ":w" + std::to_string(c.in_w) + ":" +
             activation_name(c.activation.value_or(Activation::relu));
    case OpKind::pool:
      return "pool:c" + std::to_string(c.in_c) + ":n" + std::to_string(c.kernel) + ":h" +
             std::to_string(c.in_h) + ":w" + std::to_string(c.in_w);
    case OpKind::linear:
      return "linear:i" + std::to_string(c.in_c) + ":o" + std::to_string(c.out_c);
  }
  throw Error(ErrorCode::internal, "unreachable op kind");
}

namespace {

struct KeyReader {
  const std::string& key;
  size_t pos = 0;

  explicit KeyReader(const std::string& k) : key(k) {}

  [[noreturn]] void fail(const std::string& why) {
    throw Error(ErrorCode::parse, "malformed layer key '" + key + "': " + why);
  }

  std::string field() {
    size_t end = key.find(':', pos);
    if (end == std::string::npos) end = key.size();
    std::string out = key.substr(pos, end - pos);
    pos = end < key.size() ? end + 1 : end;
    return out;
  }

  int tagged_int(const std::string& tag) {
    std::string f = field();
    if (f.size() <= tag.size() || f.compare(0, tag.size(), tag) != 0)
      fail("expected field '" + tag + "<int>', got '" + f + "'");
    std::string digits = f.substr(tag.size());
    for (char ch : digits)
      if (ch < '0' || ch > '9') fail("non-numeric value in '" + f + "'");
    return std::stoi(digits);
  }

  bool done() const { return pos >= key.size(); }
};

}  // namespace

LayerConfig parse_layer_key(const std::string& key) {
  KeyReader r(key);
  std::string kind = r.field();
  LayerConfig c;
  if (kind == "conv") {
    c.kind = OpKind::conv;
    c.in_c = r.tagged_int("ic");
    c.out_c = r.tagged_int("oc");
    c.kernel = r.tagged_int("k");
    c.stride = r.tagged_int("s");
    c.in_h = r.tagged_int("h");
    c.in_w = r.tagged_int("w");
    auto a = activation_from_name(r.field());
    if (!a) r.fail("unknown activation");
    c.activation = *a;
  } else if (kind == "pool") {
    c.kind = OpKind::pool;
    c.in_c = r.tagged_int("c");
    c.out_c = c.in_c;
    c.kernel = r.tagged_int("n");
    c.in_h = r.tagged_int("h");
    c.in_w = r.tagged_int("w");
  } else if (kind == "linear") {
    c.kind = OpKind::linear;
    c.in_c = r.tagged_int("i");
    c.out_c = r.tagged_int("o");
  } else {
    r.fail("unknown op kind '" + kind + "'");
  }
  if (!r.done()) r.fail("trailing fields");
  return c;
}

int64_t layer_macs(const LayerConfig& c) {
  switch (c.kind) {
    case OpKind::conv:
      // conv at stride-1 'same' resolution; the site stride is realized by
      // the fused pool, which contributes no MACs.
      return static_cast<int64_t>(c.in_h) * c.in_w * c.out_c * c.in_c * c.kernel * c.kernel;
    case OpKind::linear:
      return static_cast<int64_t>(c.in_c) * c.out_c;
    case OpKind::pool:
      return 0;
  }
  return 0;
}

std::vector<LayerConfig> arch_layer_configs(const Backbone& b, const Architecture& a) {
  ShapeTrace trace = trace_shapes(b, a, b.input_shape);
  std::vector<LayerConfig> out;
  for (const LayerShape& l : trace.layers) {
    LayerConfig c;
    c.kind = OpKind::conv;
    c.in_c = l.in_c;
    c.out_c = l.out_c;
    c.kernel = l.kernel;
    c.stride = l.stride;
    c.in_h = l.in_h;
    c.in_w = l.in_w;
    c.activation = l.activation;
    out.push_back(c);
  }
  LayerConfig pool;
  pool.kind = OpKind::pool;
  pool.in_c = trace.head.in_c;
  pool.out_c = trace.head.in_c;
  pool.kernel = trace.head.pool_n;
  pool.in_h = trace.head.in_h;
  pool.in_w = trace.head.in_w;
  out.push_back(pool);
  LayerConfig linear;
  linear.kind = OpKind::linear;
  linear.in_c = static_cast<int>(trace.head.features);
  linear.out_c = trace.head.classes;
  out.push_back(linear);
  return out;
}

std::vector<LayerConfig> enumerate_unique_layer_configs(const Backbone& b) {
  require_valid_backbone(b);

  // Possible global-expansion factors (nullopt when the gene is disabled).
  std::vector<std::optional<int>> ges;
  if (b.global_expansion_choices.empty()) {
    ges.push_back(std::nullopt);
  } else {
    for (int g : b.global_expansion_choices) ges.push_back(g);
  }

  std::set<LayerConfig> configs;
  for (std::optional<int> ge : ges) {
    int h = b.input_shape.height;
    int w = b.input_shape.width;
    std::set<int> in_channels = {b.input_shape.channels};
    // Track (spatial, in-channel set) along positions; strides are fixed per
    // site so spatial size depends only on the position.
    std::vector<std::pair<std::pair<int, int>, std::set<int>>> per_site;
    for (const LayerSite& site : b.layers) {
      per_site.push_back({{h, w}, in_channels});
      std::set<int> next;
      for (int e : site.expansion_choices) next.insert(scaled_channels(site.base_channels, e, ge));
      in_channels = std::move(next);
      h = (h + site.stride - 1) / site.stride;
      w = (w + site.stride - 1) / site.stride;
    }

    int max_sites = b.active_sites(b.max_depth);
    for (int i = 0; i < max_sites; ++i) {
      const LayerSite& site = b.layers[static_cast<size_t>(i)];
      const auto& [spatial, ics] = per_site[static_cast<size_t>(i)];
      for (int ic : ics) {
        for (int k : site.kernel_choices) {
          for (int e : site.expansion_choices) {
            for (Activation act : site.activation_choices) {
              LayerConfig c;
              c.kind = OpKind::conv;
              c.in_c = ic;
              c.out_c = scaled_channels(site.base_channels, e, ge);
              c.kernel = k;
              c.stride = site.stride;
              c.in_h = spatial.first;
              c.in_w = spatial.second;
              c.activation = act;
              configs.insert(c);
            }
          }
        }
      }
    }

    // Head variants: one per reachable (depth, last-site channel count).
    for (int depth = b.min_depth; depth <= b.max_depth; ++depth) {
      int sites = b.active_sites(depth);
      int hh = b.input_shape.height;
      int ww = b.input_shape.width;
      for (int i = 0; i < sites; ++i) {
        hh = (hh + b.layers[static_cast<size_t>(i)].stride - 1) / b.layers[static_cast<size_t>(i)].stride;
        ww = (ww + b.layers[static_cast<size_t>(i)].stride - 1) / b.layers[static_cast<size_t>(i)].stride;
      }
      std::set<int> last_channels;
      if (sites == 0) {
        last_channels.insert(b.input_shape.channels);
      } else {
        const LayerSite& last = b.layers[static_cast<size_t>(sites - 1)];
        for (int e : last.expansion_choices)
          last_channels.insert(scaled_channels(last.base_channels, e, ge));
      }
      for (int c : last_channels) {
        LayerConfig pool;
        pool.kind = OpKind::pool;
        pool.in_c = c;
        pool.out_c = c;
        pool.kernel = b.head.pool_n;
        pool.in_h = hh;
        pool.in_w = ww;
        configs.insert(pool);
        LayerConfig linear;
        linear.kind = OpKind::linear;
        linear.in_c = b.head.pool_n * b.head.pool_n * c;
        linear.out_c = b.head.classes;
        configs.insert(linear);
      }
    }
  }

  std::vector<LayerConfig> out(configs.begin(), configs.end());
  std::sort(out.begin(), out.end(),
            [](const LayerConfig& a, const LayerConfig& c) { return layer_key(a) < layer_key(c); });
  return out;
}

}  // namespace hmnas
