#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "core/latency_key.hpp"
#include "core/search_space.hpp"
#include "core/systolic.hpp"

namespace hmnas {

enum class LatencyMethod : uint8_t { measured, analytic, systolic };

const char* latency_method_name(LatencyMethod m);
std::optional<LatencyMethod> latency_method_from_name(const std::string& name);

struct DeviceProfile {
  std::string device_name;
  LatencyMethod method = LatencyMethod::analytic;
  // measured
  int repetitions = 5;
  int warmup = 1;
  bool pin_thread = true;
  // analytic
  double macs_per_second = 1e9;
  // systolic
  std::optional<ArrayConfig> array;
};

DeviceProfile device_profile_from_json(const std::string& json_text);
DeviceProfile load_device_profile(const std::string& path);

struct LatencyEntry {
  double latency_us = 0.0;
  double iqr_us = 0.0;
  int samples = 0;

  bool operator==(const LatencyEntry&) const = default;
};

struct LatencyTable {
  int format_version = 1;
  std::string device_name;
  LatencyMethod method = LatencyMethod::analytic;
  std::string created_at;
  std::map<std::string, LatencyEntry> entries;  // canonical key -> entry

  bool operator==(const LatencyTable&) const = default;
};

struct ProfileOutcome {
  LatencyTable table;
  std::vector<std::string> missing_keys;  // configs whose benchmark failed
  int64_t benchmarks_run = 0;
};

using ProfileProgress = std::function<void(size_t done, size_t total)>;

// One entry per unique reachable LayerConfig of the backbone. Measured
// entries are medians of `repetitions` runs after `warmup` discarded runs,
// executed strictly sequentially (optionally pinned to one CPU). Analytic
// and systolic providers are pure. A failed benchmark is recorded in
// missing_keys and profiling continues.
ProfileOutcome profile(const Backbone& backbone, const DeviceProfile& device,
                       const ProfileProgress& progress = {});

// Exact sum of the table entries over the architecture's active layers and
// head; O(depth) lookups. Throws Error{missing_entry} listing every absent
// key.
double compose(const Backbone& backbone, const Architecture& arch, const LatencyTable& table);

// Keys of `configs` absent from the table.
std::vector<std::string> missing_keys(const LatencyTable& table,
                                      const std::vector<LayerConfig>& configs);

// Direct end-to-end measurement of the same reference kernels the measured
// provider benchmarks per layer; median over `repetitions` after one
// warmup run. Microseconds.
double measure_end_to_end(const Backbone& backbone, const Architecture& arch, int repetitions);

void save_table(const LatencyTable& table, const std::string& path);
LatencyTable load_table(const std::string& path);
LatencyTable table_from_json(const std::string& json_text);
std::string table_to_json(const LatencyTable& table);

struct TraverseEstimate {
  BigInt hours_numerator;    // exact hours = numerator / denominator
  BigInt hours_denominator;
  double hours = 0.0;
};

// space_size(backbone).exact * per_network_seconds / 3600, kept exact.
// Seconds are given as a decimal string so no precision is lost.
TraverseEstimate naive_traverse_estimate(const Backbone& backbone,
                                         const std::string& per_network_seconds);

}  // namespace hmnas
