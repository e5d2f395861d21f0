#include "core/search_space.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "core/errors.hpp"
#include "core/rng.hpp"

namespace hmnas {

using nlohmann::json;

const char* activation_name(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::elu: return "elu";
    case Activation::selu: return "selu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::relu6: return "relu6";
    case Activation::leakyrelu: return "leakyrelu";
  }
  return "relu";
}

std::optional<Activation> activation_from_name(const std::string& name) {
  static const std::pair<const char*, Activation> table[] = {
      {"relu", Activation::relu},       {"elu", Activation::elu},
      {"selu", Activation::selu},       {"sigmoid", Activation::sigmoid},
      {"relu6", Activation::relu6},     {"leakyrelu", Activation::leakyrelu},
  };
  for (const auto& [n, a] : table) {
    if (name == n) return a;
  }
  return std::nullopt;
}

std::string render_expansion(int hundredths) {
  int whole = hundredths / 100;
  int frac = hundredths % 100;
  if (frac == 0) return std::to_string(whole);
  if (frac % 10 == 0) return std::to_string(whole) + "." + std::to_string(frac / 10);
  std::string f = std::to_string(frac);
  if (frac < 10) f = "0" + f;
  return std::to_string(whole) + "." + f;
}

std::optional<int> parse_expansion(const std::string& text) {
  if (text.empty()) return std::nullopt;
  size_t dot = text.find('.');
  std::string whole = dot == std::string::npos ? text : text.substr(0, dot);
  std::string frac = dot == std::string::npos ? "" : text.substr(dot + 1);
  if (whole.empty() || frac.size() > 2) return std::nullopt;
  for (char c : whole)
    if (c < '0' || c > '9') return std::nullopt;
  for (char c : frac)
    if (c < '0' || c > '9') return std::nullopt;
  int value = 0;
  for (char c : whole) {
    value = value * 10 + (c - '0');
    if (value > 1000000) return std::nullopt;
  }
  value *= 100;
  if (frac.size() == 1) value += 10 * (frac[0] - '0');
  if (frac.size() == 2) value += 10 * (frac[0] - '0') + (frac[1] - '0');
  return value;
}

int scaled_channels(int base_channels, int expansion, std::optional<int> global_expansion) {
  int64_t num = static_cast<int64_t>(base_channels) * expansion;
  int64_t den = 100;
  if (global_expansion) {
    num *= *global_expansion;
    den *= 100;
  }
  int64_t rounded = (num + den / 2) / den;  // round half up
  return static_cast<int>(std::max<int64_t>(1, rounded));
}

int arch_channels(const Backbone& backbone, const Architecture& arch, int site) {
  return scaled_channels(backbone.layers[static_cast<size_t>(site)].base_channels,
                         arch.per_layer[static_cast<size_t>(site)].expansion,
                         arch.global_expansion);
}

namespace {

template <typename T>
bool has_duplicates(const std::vector<T>& v) {
  std::set<T> s(v.begin(), v.end());
  return s.size() != v.size();
}

bool valid_name(const std::string& name) {
  if (name.empty()) return false;
  for (char c : name) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
              (c >= '0' && c <= '9') || c == '_' || c == '-';
    if (!ok) return false;
  }
  return true;
}

}  // namespace

std::vector<std::string> validate_backbone(const Backbone& b) {
  std::vector<std::string> out;
  if (!valid_name(b.name)) out.push_back("backbone name must be non-empty [A-Za-z0-9_-]+");
  if (b.layers.empty()) out.push_back("backbone has no layer sites");
  if (b.input_shape.channels < 1 || b.input_shape.height < 1 || b.input_shape.width < 1)
    out.push_back("input shape dimensions must be positive");
  if (b.head.pool_n < 1) out.push_back("head pool target must be >= 1");
  if (b.head.classes < 1) out.push_back("head classes must be >= 1");
  if (b.block_size < 1) out.push_back("block size must be >= 1");
  if (b.block_size >= 1 && !b.layers.empty() &&
      b.layers.size() % static_cast<size_t>(b.block_size) != 0)
    out.push_back("layer count must be a multiple of the block size");
  int units = b.block_size >= 1 && !b.layers.empty() ? b.depth_unit_count() : 0;
  if (b.min_depth < 1 || b.min_depth > b.max_depth)
    out.push_back("depth range requires 1 <= min <= max");
  if (b.max_depth > units && units > 0)
    out.push_back("max depth exceeds the number of depth units");
  for (size_t i = 0; i < b.layers.size(); ++i) {
    const LayerSite& s = b.layers[i];
    std::string at = "site " + std::to_string(i);
    if (s.position != static_cast<int>(i)) out.push_back(at + ": position mismatch");
    if (s.base_channels < 1) out.push_back(at + ": base channels must be >= 1");
    if (s.stride < 1) out.push_back(at + ": stride must be >= 1");
    if (s.kernel_choices.empty()) out.push_back(at + ": empty kernel choices");
    if (s.expansion_choices.empty()) out.push_back(at + ": empty expansion choices");
    if (s.activation_choices.empty()) out.push_back(at + ": empty activation choices");
    if (has_duplicates(s.kernel_choices)) out.push_back(at + ": duplicate kernel choices");
    if (has_duplicates(s.expansion_choices)) out.push_back(at + ": duplicate expansion choices");
    if (has_duplicates(s.activation_choices)) out.push_back(at + ": duplicate activation choices");
    for (int k : s.kernel_choices)
      if (k < 1 || k % 2 == 0) out.push_back(at + ": kernels must be odd and >= 1");
    for (int e : s.expansion_choices)
      if (e < 1) out.push_back(at + ": expansions must be positive");
  }
  if (has_duplicates(b.global_expansion_choices))
    out.push_back("duplicate global expansion choices");
  for (int g : b.global_expansion_choices)
    if (g < 1) out.push_back("global expansions must be positive");
  if (b.conventions.norm_params_per_channel != 0 && b.conventions.norm_params_per_channel != 2)
    out.push_back("norm params per channel must be 0 or 2");
  return out;
}

void require_valid_backbone(const Backbone& b) {
  auto violations = validate_backbone(b);
  if (violations.empty()) return;
  std::string msg = "invalid backbone";
  if (!b.name.empty()) msg += " '" + b.name + "'";
  for (const auto& v : violations) msg += "; " + v;
  throw Error(ErrorCode::validation, msg);
}

namespace {

json shape_to_json(const Shape& s) {
  return json{{"channels", s.channels}, {"height", s.height}, {"width", s.width}};
}

void check_keys(const json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) ok = true;
    if (!ok)
      throw Error(ErrorCode::parse, where + ": unknown key '" + it.key() + "'");
  }
}

std::vector<int> parse_expansion_array(const json& arr, const std::string& where) {
  std::vector<int> out;
  for (const auto& e : arr) {
    std::optional<int> v;
    if (e.is_string()) {
      v = parse_expansion(e.get<std::string>());
    } else if (e.is_number()) {
      // Accept numeric literals that are exact hundredths.
      double d = e.get<double>();
      int h = static_cast<int>(d * 100.0 + (d >= 0 ? 0.5 : -0.5));
      if (h >= 1 && std::abs(d * 100.0 - h) < 1e-9) v = h;
    }
    if (!v) throw Error(ErrorCode::parse, where + ": expansion not an exact hundredth: " + e.dump());
    out.push_back(*v);
  }
  return out;
}

std::vector<Activation> parse_activation_array(const json& arr, const std::string& where) {
  std::vector<Activation> out;
  for (const auto& e : arr) {
    auto a = activation_from_name(e.get<std::string>());
    if (!a) throw Error(ErrorCode::parse, where + ": unknown activation " + e.dump());
    out.push_back(*a);
  }
  return out;
}

}  // namespace

Backbone backbone_from_json(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse, std::string("backbone JSON: ") + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::parse, "backbone JSON: expected an object");
  check_keys(doc, "backbone",
             {"name", "input_shape", "head", "depth", "layers", "defaults",
              "global_expansion_choices", "conventions", "notes"});

  Backbone b;
  b.name = doc.at("name").get<std::string>();

  const json& shp = doc.at("input_shape");
  check_keys(shp, "input_shape", {"channels", "height", "width"});
  b.input_shape = {shp.at("channels").get<int>(), shp.at("height").get<int>(),
                   shp.at("width").get<int>()};

  const json& head = doc.at("head");
  check_keys(head, "head", {"pool", "classes"});
  b.head = {head.at("pool").get<int>(), head.at("classes").get<int>()};

  const json& depth = doc.at("depth");
  check_keys(depth, "depth", {"unit", "block_size", "min", "max"});
  std::string unit = depth.value("unit", "layer");
  if (unit == "layer") {
    b.block_size = 1;
    if (depth.contains("block_size") && depth.at("block_size").get<int>() != 1)
      throw Error(ErrorCode::parse, "depth: unit 'layer' requires block_size 1");
  } else if (unit == "block") {
    b.block_size = depth.value("block_size", 3);
  } else {
    throw Error(ErrorCode::parse, "depth: unit must be 'layer' or 'block'");
  }
  b.min_depth = depth.at("min").get<int>();
  b.max_depth = depth.at("max").get<int>();

  std::vector<int> default_kernels = {1, 3, 5};
  std::vector<int> default_expansions = {25, 50, 75, 100, 150, 200, 225};
  std::vector<Activation> default_activations = {
      Activation::relu,    Activation::elu,   Activation::selu,
      Activation::sigmoid, Activation::relu6, Activation::leakyrelu};
  if (doc.contains("defaults")) {
    const json& d = doc.at("defaults");
    check_keys(d, "defaults", {"kernels", "expansions", "activations"});
    if (d.contains("kernels")) default_kernels = d.at("kernels").get<std::vector<int>>();
    if (d.contains("expansions"))
      default_expansions = parse_expansion_array(d.at("expansions"), "defaults");
    if (d.contains("activations"))
      default_activations = parse_activation_array(d.at("activations"), "defaults");
  }

  int pos = 0;
  for (const json& l : doc.at("layers")) {
    check_keys(l, "layer " + std::to_string(pos),
               {"name", "base_channels", "stride", "kernels", "expansions", "activations"});
    LayerSite s;
    s.position = pos;
    s.name = l.value("name", "layer" + std::to_string(pos));
    s.base_channels = l.at("base_channels").get<int>();
    s.stride = l.value("stride", 1);
    s.kernel_choices =
        l.contains("kernels") ? l.at("kernels").get<std::vector<int>>() : default_kernels;
    s.expansion_choices =
        l.contains("expansions")
            ? parse_expansion_array(l.at("expansions"), "layer " + std::to_string(pos))
            : default_expansions;
    s.activation_choices =
        l.contains("activations")
            ? parse_activation_array(l.at("activations"), "layer " + std::to_string(pos))
            : default_activations;
    std::sort(s.kernel_choices.begin(), s.kernel_choices.end());
    std::sort(s.expansion_choices.begin(), s.expansion_choices.end());
    b.layers.push_back(std::move(s));
    ++pos;
  }

  if (doc.contains("global_expansion_choices"))
    b.global_expansion_choices =
        parse_expansion_array(doc.at("global_expansion_choices"), "global_expansion_choices");
  std::sort(b.global_expansion_choices.begin(), b.global_expansion_choices.end());

  if (doc.contains("conventions")) {
    const json& c = doc.at("conventions");
    check_keys(c, "conventions",
               {"conv_bias", "norm_params_per_channel", "padding", "downsample"});
    b.conventions.conv_bias = c.value("conv_bias", true);
    b.conventions.norm_params_per_channel = c.value("norm_params_per_channel", 2);
    std::string padding = c.value("padding", "same");
    if (padding != "same")
      throw Error(ErrorCode::unsupported, "conventions: only 'same' padding is supported");
    std::string down = c.value("downsample", "pool-ceil");
    if (down != "pool-ceil")
      throw Error(ErrorCode::unsupported, "conventions: only 'pool-ceil' downsampling is supported");
  }
  b.notes = doc.value("notes", "");

  require_valid_backbone(b);
  return b;
}

Backbone load_backbone(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open backbone file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return backbone_from_json(ss.str());
}

std::string backbone_to_json(const Backbone& b) {
  json layers = json::array();
  for (const LayerSite& s : b.layers) {
    json exps = json::array();
    for (int e : s.expansion_choices) exps.push_back(render_expansion(e));
    json acts = json::array();
    for (Activation a : s.activation_choices) acts.push_back(activation_name(a));
    layers.push_back(json{{"name", s.name},
                          {"base_channels", s.base_channels},
                          {"stride", s.stride},
                          {"kernels", s.kernel_choices},
                          {"expansions", exps},
                          {"activations", acts}});
  }
  json ges = json::array();
  for (int g : b.global_expansion_choices) ges.push_back(render_expansion(g));
  json doc{{"name", b.name},
           {"input_shape", shape_to_json(b.input_shape)},
           {"head", {{"pool", b.head.pool_n}, {"classes", b.head.classes}}},
           {"depth",
            {{"unit", b.block_size == 1 ? "layer" : "block"},
             {"block_size", b.block_size},
             {"min", b.min_depth},
             {"max", b.max_depth}}},
           {"layers", layers},
           {"global_expansion_choices", ges},
           {"conventions",
            {{"conv_bias", b.conventions.conv_bias},
             {"norm_params_per_channel", b.conventions.norm_params_per_channel},
             {"padding", "same"},
             {"downsample", "pool-ceil"}}}};
  if (!b.notes.empty()) doc["notes"] = b.notes;
  return doc.dump(2);
}

SpaceCardinality space_size(const Backbone& b) {
  require_valid_backbone(b);
  BigInt exact = 1;
  for (const LayerSite& s : b.layers) {
    exact *= static_cast<int64_t>(s.kernel_choices.size()) *
             static_cast<int64_t>(s.expansion_choices.size()) *
             static_cast<int64_t>(s.activation_choices.size());
  }
  exact *= b.max_depth - b.min_depth + 1;
  if (!b.global_expansion_choices.empty())
    exact *= static_cast<int64_t>(b.global_expansion_choices.size());
  SpaceCardinality out;
  out.exact = exact;
  out.as_float = exact.convert_to<double>();
  return out;
}

Architecture sample_uniform(const Backbone& b, uint64_t seed) {
  require_valid_backbone(b);
  Rng rng(mix_seed(seed, 0x5a3f));
  Architecture a;
  a.backbone_name = b.name;
  for (const LayerSite& s : b.layers) {
    LayerChoice c;
    c.kernel = s.kernel_choices[rng.index(s.kernel_choices.size())];
    c.expansion = s.expansion_choices[rng.index(s.expansion_choices.size())];
    c.activation = s.activation_choices[rng.index(s.activation_choices.size())];
    a.per_layer.push_back(c);
  }
  a.active_depth = b.min_depth + static_cast<int>(rng.bounded(
                                     static_cast<uint64_t>(b.max_depth - b.min_depth + 1)));
  if (!b.global_expansion_choices.empty())
    a.global_expansion =
        b.global_expansion_choices[rng.index(b.global_expansion_choices.size())];
  return a;
}

Architecture largest(const Backbone& b) {
  require_valid_backbone(b);
  Architecture a;
  a.backbone_name = b.name;
  for (const LayerSite& s : b.layers) {
    LayerChoice c;
    c.kernel = s.kernel_choices.back();
    c.expansion = s.expansion_choices.back();
    // Activations carry no size ordering; relu is the canonical pick so that
    // "largest network" is a single deterministic architecture.
    c.activation = std::find(s.activation_choices.begin(), s.activation_choices.end(),
                             Activation::relu) != s.activation_choices.end()
                       ? Activation::relu
                       : s.activation_choices.front();
    a.per_layer.push_back(c);
  }
  a.active_depth = b.max_depth;
  if (!b.global_expansion_choices.empty())
    a.global_expansion = b.global_expansion_choices.back();
  return a;
}

Architecture smallest(const Backbone& b) {
  require_valid_backbone(b);
  Architecture a;
  a.backbone_name = b.name;
  for (const LayerSite& s : b.layers) {
    LayerChoice c;
    c.kernel = s.kernel_choices.front();
    c.expansion = s.expansion_choices.front();
    c.activation = std::find(s.activation_choices.begin(), s.activation_choices.end(),
                             Activation::relu) != s.activation_choices.end()
                       ? Activation::relu
                       : s.activation_choices.front();
    a.per_layer.push_back(c);
  }
  a.active_depth = b.min_depth;
  if (!b.global_expansion_choices.empty())
    a.global_expansion = b.global_expansion_choices.front();
  return a;
}

namespace {

// Genome coordinates: 3 slots per site (kernel, expansion, activation),
// then the depth slot, then the ge slot when the gene is enabled.
enum class SlotKind { kernel, expansion, activation, depth, global_expansion };

struct Slot {
  SlotKind kind;
  int site;     // -1 for depth/ge
  size_t arity; // number of choices
};

std::vector<Slot> genome_slots(const Backbone& b) {
  std::vector<Slot> slots;
  for (size_t i = 0; i < b.layers.size(); ++i) {
    const LayerSite& s = b.layers[i];
    slots.push_back({SlotKind::kernel, static_cast<int>(i), s.kernel_choices.size()});
    slots.push_back({SlotKind::expansion, static_cast<int>(i), s.expansion_choices.size()});
    slots.push_back({SlotKind::activation, static_cast<int>(i), s.activation_choices.size()});
  }
  slots.push_back({SlotKind::depth, -1,
                   static_cast<size_t>(b.max_depth - b.min_depth + 1)});
  if (!b.global_expansion_choices.empty())
    slots.push_back({SlotKind::global_expansion, -1, b.global_expansion_choices.size()});
  return slots;
}

}  // namespace

Architecture mutate(const Backbone& b, const Architecture& arch, uint64_t seed, int n_moves) {
  require_valid_backbone(b);
  require_valid(b, arch);
  if (n_moves < 1) throw Error(ErrorCode::invalid_argument, "n_moves must be >= 1");

  std::vector<Slot> slots = genome_slots(b);
  std::vector<size_t> mutable_slots;
  for (size_t i = 0; i < slots.size(); ++i)
    if (slots[i].arity >= 2) mutable_slots.push_back(i);
  if (mutable_slots.empty())
    throw Error(ErrorCode::invalid_argument, "immutable architecture");
  if (mutable_slots.size() < static_cast<size_t>(n_moves))
    throw Error(ErrorCode::invalid_argument,
                "only " + std::to_string(mutable_slots.size()) +
                    " mutable positions, need " + std::to_string(n_moves));

  Rng rng(mix_seed(seed, 0x6d75));
  // Partial Fisher-Yates: pick n_moves distinct slots.
  for (int i = 0; i < n_moves; ++i) {
    size_t j = static_cast<size_t>(i) + rng.index(mutable_slots.size() - static_cast<size_t>(i));
    std::swap(mutable_slots[static_cast<size_t>(i)], mutable_slots[j]);
  }

  Architecture out = arch;
  for (int i = 0; i < n_moves; ++i) {
    const Slot& slot = slots[mutable_slots[static_cast<size_t>(i)]];
    // Pick a replacement different from the current value: draw from the
    // remaining arity-1 options and skip over the original.
    size_t pick = rng.index(slot.arity - 1);
    switch (slot.kind) {
      case SlotKind::kernel: {
        const auto& choices = b.layers[static_cast<size_t>(slot.site)].kernel_choices;
        LayerChoice& c = out.per_layer[static_cast<size_t>(slot.site)];
        size_t cur = static_cast<size_t>(
            std::find(choices.begin(), choices.end(), c.kernel) - choices.begin());
        c.kernel = choices[pick >= cur ? pick + 1 : pick];
        break;
      }
      case SlotKind::expansion: {
        const auto& choices = b.layers[static_cast<size_t>(slot.site)].expansion_choices;
        LayerChoice& c = out.per_layer[static_cast<size_t>(slot.site)];
        size_t cur = static_cast<size_t>(
            std::find(choices.begin(), choices.end(), c.expansion) - choices.begin());
        c.expansion = choices[pick >= cur ? pick + 1 : pick];
        break;
      }
      case SlotKind::activation: {
        const auto& choices = b.layers[static_cast<size_t>(slot.site)].activation_choices;
        LayerChoice& c = out.per_layer[static_cast<size_t>(slot.site)];
        size_t cur = static_cast<size_t>(
            std::find(choices.begin(), choices.end(), c.activation) - choices.begin());
        c.activation = choices[pick >= cur ? pick + 1 : pick];
        break;
      }
      case SlotKind::depth: {
        size_t cur = static_cast<size_t>(out.active_depth - b.min_depth);
        out.active_depth = b.min_depth + static_cast<int>(pick >= cur ? pick + 1 : pick);
        break;
      }
      case SlotKind::global_expansion: {
        const auto& choices = b.global_expansion_choices;
        size_t cur = static_cast<size_t>(
            std::find(choices.begin(), choices.end(), *out.global_expansion) - choices.begin());
        out.global_expansion = choices[pick >= cur ? pick + 1 : pick];
        break;
      }
    }
  }
  return out;
}

std::vector<std::string> validate(const Backbone& b, const Architecture& a) {
  std::vector<std::string> out;
  if (a.backbone_name != b.name)
    out.push_back("backbone name mismatch: genome is for '" + a.backbone_name + "'");
  if (a.per_layer.size() != b.layers.size())
    out.push_back("per-layer choice count " + std::to_string(a.per_layer.size()) +
                  " != site count " + std::to_string(b.layers.size()));
  if (a.active_depth < b.min_depth || a.active_depth > b.max_depth)
    out.push_back("depth out of range: " + std::to_string(a.active_depth) + " not in [" +
                  std::to_string(b.min_depth) + ", " + std::to_string(b.max_depth) + "]");
  size_t n = std::min(a.per_layer.size(), b.layers.size());
  for (size_t i = 0; i < n; ++i) {
    const LayerSite& s = b.layers[i];
    const LayerChoice& c = a.per_layer[i];
    std::string at = "site " + std::to_string(i);
    if (std::find(s.kernel_choices.begin(), s.kernel_choices.end(), c.kernel) ==
        s.kernel_choices.end())
      out.push_back(at + ": choice not in set: kernel " + std::to_string(c.kernel));
    if (std::find(s.expansion_choices.begin(), s.expansion_choices.end(), c.expansion) ==
        s.expansion_choices.end())
      out.push_back(at + ": choice not in set: expansion " + render_expansion(c.expansion));
    if (std::find(s.activation_choices.begin(), s.activation_choices.end(), c.activation) ==
        s.activation_choices.end())
      out.push_back(at + ": choice not in set: activation " +
                    std::string(activation_name(c.activation)));
  }
  if (a.global_expansion) {
    if (b.global_expansion_choices.empty()) {
      out.push_back("global expansion gene set but the backbone defines no choices");
    } else if (std::find(b.global_expansion_choices.begin(), b.global_expansion_choices.end(),
                         *a.global_expansion) == b.global_expansion_choices.end()) {
      out.push_back("choice not in set: global expansion " +
                    render_expansion(*a.global_expansion));
    }
  } else if (!b.global_expansion_choices.empty()) {
    out.push_back("global expansion gene missing but the backbone enables it");
  }
  return out;
}

void require_valid(const Backbone& b, const Architecture& a) {
  auto violations = validate(b, a);
  if (violations.empty()) return;
  std::string msg = "invalid architecture";
  for (const auto& v : violations) msg += "; " + v;
  throw Error(ErrorCode::validation, msg);
}

std::string encode(const Architecture& a) {
  std::string out = a.backbone_name + ":d" + std::to_string(a.active_depth);
  if (a.global_expansion) out += ":g" + render_expansion(*a.global_expansion);
  out += "/";
  for (size_t i = 0; i < a.per_layer.size(); ++i) {
    if (i) out += ";";
    const LayerChoice& c = a.per_layer[i];
    out += std::to_string(c.kernel) + "," + render_expansion(c.expansion) + "," +
           activation_name(c.activation);
  }
  return out;
}

namespace {

[[noreturn]] void decode_fail(size_t pos, const std::string& why) {
  throw Error(ErrorCode::parse,
              "genome parse error at position " + std::to_string(pos) + ": " + why);
}

}  // namespace

Architecture decode(const Backbone& b, const std::string& text) {
  if (text.empty()) decode_fail(0, "empty genome");
  size_t colon = text.find(':');
  if (colon == std::string::npos) decode_fail(text.size(), "missing ':' after backbone name");
  Architecture a;
  a.backbone_name = text.substr(0, colon);

  size_t pos = colon + 1;
  if (pos >= text.size() || text[pos] != 'd') decode_fail(pos, "expected 'd<depth>'");
  ++pos;
  size_t end = text.find_first_not_of("0123456789", pos);
  if (end == pos) decode_fail(pos, "expected depth digits");
  a.active_depth = std::stoi(text.substr(pos, end - pos));
  pos = end;

  if (pos < text.size() && text[pos] == ':') {
    ++pos;
    if (pos >= text.size() || text[pos] != 'g') decode_fail(pos, "expected 'g<expansion>'");
    ++pos;
    end = text.find('/', pos);
    if (end == std::string::npos) decode_fail(text.size(), "missing '/' after global expansion");
    auto g = parse_expansion(text.substr(pos, end - pos));
    if (!g) decode_fail(pos, "malformed global expansion");
    a.global_expansion = *g;
    pos = end;
  }

  if (pos >= text.size() || text[pos] != '/') decode_fail(pos, "expected '/'");
  ++pos;

  while (pos < text.size()) {
    size_t triple_end = text.find(';', pos);
    if (triple_end == std::string::npos) triple_end = text.size();
    std::string triple = text.substr(pos, triple_end - pos);
    size_t c1 = triple.find(',');
    size_t c2 = c1 == std::string::npos ? std::string::npos : triple.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
      decode_fail(pos, "layer entry needs '<kernel>,<expansion>,<activation>'");
    LayerChoice c;
    try {
      size_t used = 0;
      c.kernel = std::stoi(triple.substr(0, c1), &used);
      if (used != c1) decode_fail(pos, "malformed kernel");
    } catch (const std::exception&) {
      decode_fail(pos, "malformed kernel");
    }
    auto e = parse_expansion(triple.substr(c1 + 1, c2 - c1 - 1));
    if (!e) decode_fail(pos + c1 + 1, "malformed expansion");
    c.expansion = *e;
    auto act = activation_from_name(triple.substr(c2 + 1));
    if (!act) decode_fail(pos + c2 + 1, "unknown activation '" + triple.substr(c2 + 1) + "'");
    c.activation = *act;
    a.per_layer.push_back(c);
    pos = triple_end + (triple_end < text.size() ? 1 : 0);
    if (triple_end == text.size()) break;
  }

  require_valid(b, a);
  return a;
}

std::vector<Architecture> enumerate_space(const Backbone& b, size_t limit) {
  SpaceCardinality card = space_size(b);
  if (card.exact > BigInt(limit))
    throw Error(ErrorCode::invalid_argument,
                "space too large to enumerate: " + card.exact.str());
  size_t total = card.exact.convert_to<size_t>();
  std::vector<Architecture> out;
  out.reserve(total);

  Architecture a;
  a.backbone_name = b.name;
  a.per_layer.resize(b.layers.size());

  // Odometer over (site choices..., depth, ge).
  size_t n_sites = b.layers.size();
  std::vector<size_t> idx(3 * n_sites + 2, 0);
  size_t depth_options = static_cast<size_t>(b.max_depth - b.min_depth + 1);
  size_t ge_options = b.global_expansion_choices.empty() ? 1 : b.global_expansion_choices.size();
  for (;;) {
    for (size_t i = 0; i < n_sites; ++i) {
      const LayerSite& s = b.layers[i];
      a.per_layer[i].kernel = s.kernel_choices[idx[3 * i]];
      a.per_layer[i].expansion = s.expansion_choices[idx[3 * i + 1]];
      a.per_layer[i].activation = s.activation_choices[idx[3 * i + 2]];
    }
    a.active_depth = b.min_depth + static_cast<int>(idx[3 * n_sites]);
    if (!b.global_expansion_choices.empty())
      a.global_expansion = b.global_expansion_choices[idx[3 * n_sites + 1]];
    out.push_back(a);

    // advance odometer
    size_t d = 0;
    for (; d < idx.size(); ++d) {
      size_t arity;
      if (d < 3 * n_sites) {
        const LayerSite& s = b.layers[d / 3];
        arity = d % 3 == 0   ? s.kernel_choices.size()
                : d % 3 == 1 ? s.expansion_choices.size()
                             : s.activation_choices.size();
      } else if (d == 3 * n_sites) {
        arity = depth_options;
      } else {
        arity = ge_options;
      }
      if (++idx[d] < arity) break;
      idx[d] = 0;
    }
    if (d == idx.size()) break;
  }
  return out;
}

}  // namespace hmnas
