#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace hmnas {

using BigInt = boost::multiprecision::cpp_int;

enum class Activation : uint8_t { relu, elu, selu, sigmoid, relu6, leakyrelu };

const char* activation_name(Activation a);
std::optional<Activation> activation_from_name(const std::string& name);

// Channel expansions and the global-expansion gene are exact hundredths
// (0.25 -> 25, 2.25 -> 225). All channel arithmetic stays in integers.
std::string render_expansion(int hundredths);
std::optional<int> parse_expansion(const std::string& text);

struct LayerSite {
  int position = 0;
  std::string name;
  int base_channels = 0;
  int stride = 1;
  std::vector<int> kernel_choices;            // sorted, unique
  std::vector<int> expansion_choices;         // hundredths, sorted, unique
  std::vector<Activation> activation_choices; // unique
};

struct Shape {
  int channels = 0;
  int height = 0;
  int width = 0;
};

struct Head {
  int pool_n = 1;   // adaptive pooling target n x n before the classifier
  int classes = 0;
};

struct CostConventions {
  bool conv_bias = true;
  int norm_params_per_channel = 2;  // 0 disables normalization accounting
};

// Static description of a supernet. Depth is counted in units of
// `block_size` consecutive layer sites (1 for plain stacks; 3 for the
// ResNet backbone, where truncation below block granularity would break
// residual connections).
struct Backbone {
  std::string name;
  Shape input_shape;
  Head head;
  std::vector<LayerSite> layers;
  int block_size = 1;
  int min_depth = 1;  // in depth units
  int max_depth = 1;  // in depth units
  std::vector<int> global_expansion_choices;  // hundredths; empty = gene disabled
  CostConventions conventions;
  std::string notes;

  int depth_unit_count() const { return static_cast<int>(layers.size()) / block_size; }
  int active_sites(int active_depth) const { return active_depth * block_size; }
};

struct LayerChoice {
  int kernel = 0;
  int expansion = 0;  // hundredths
  Activation activation = Activation::relu;

  bool operator==(const LayerChoice&) const = default;
};

// One concrete sub-network: a full per-site assignment plus the active
// depth (ANL) and the optional global-expansion gene. Sites beyond the
// active depth keep their choices but are inert.
struct Architecture {
  std::string backbone_name;
  std::vector<LayerChoice> per_layer;
  int active_depth = 1;  // in depth units
  std::optional<int> global_expansion;  // hundredths

  bool operator==(const Architecture&) const = default;
};

struct SpaceCardinality {
  BigInt exact;
  double as_float = 0.0;
};

// Round-half-up channel scaling, floored at one channel. expansion and
// global expansion are hundredths; a single rounding is applied to the
// combined factor.
int scaled_channels(int base_channels, int expansion, std::optional<int> global_expansion);

int arch_channels(const Backbone& backbone, const Architecture& arch, int site);

std::vector<std::string> validate_backbone(const Backbone& backbone);
// Throws Error{validation} naming the offending site if invalid.
void require_valid_backbone(const Backbone& backbone);

Backbone backbone_from_json(const std::string& json_text);
Backbone load_backbone(const std::string& path);
std::string backbone_to_json(const Backbone& backbone);

// Number of distinct genomes: product of per-site option counts over all
// sites, times the number of depth options (times the number of
// global-expansion options when that gene is enabled). This matches
// brute-force enumeration of (per-site assignment, depth, ge) tuples.
SpaceCardinality space_size(const Backbone& backbone);

Architecture sample_uniform(const Backbone& backbone, uint64_t seed);
Architecture largest(const Backbone& backbone);
Architecture smallest(const Backbone& backbone);

// Changes exactly n_moves distinct genome positions (a per-site choice
// dimension, the depth slot, or the ge slot), each to a different value.
// Positions with fewer than two choices are excluded. Throws
// Error{invalid_argument} "immutable architecture" if no position is
// mutable, Error{invalid_argument} if fewer mutable positions than n_moves.
Architecture mutate(const Backbone& backbone, const Architecture& arch,
                    uint64_t seed, int n_moves = 2);

// All invariant violations, not just the first. Empty means ok.
std::vector<std::string> validate(const Backbone& backbone, const Architecture& arch);
void require_valid(const Backbone& backbone, const Architecture& arch);

// Canonical genome text: <name>:d<depth>[:g<ge>]/<k>,<e>,<act>;...
// one triple per layer site, expansions rendered as exact decimals.
std::string encode(const Architecture& arch);
// Throws Error{parse} with a character position on malformed input.
Architecture decode(const Backbone& backbone, const std::string& text);

// Every genome in the space, in lexicographic choice order. Throws
// Error{invalid_argument} if the space exceeds `limit`.
std::vector<Architecture> enumerate_space(const Backbone& backbone, size_t limit);

}  // namespace hmnas
