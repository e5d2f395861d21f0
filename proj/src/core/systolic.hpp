#pragma once

#include <cstdint>
#include <string>

#include "core/cost_model.hpp"
#include "core/latency_key.hpp"
#include "core/search_space.hpp"

namespace hmnas {

struct ArrayConfig {
  std::string label = "eyeriss-like";
  int rows = 12;
  int cols = 14;
  double frequency_hz = 200e6;
  int64_t sram_ifmap_bytes = 65536;
  int64_t sram_filter_bytes = 131072;
  int64_t sram_ofmap_bytes = 65536;
  int dtype_bytes = 2;
  bool dram_report_only = true;
};

ArrayConfig array_config_from_json(const std::string& json_text);
ArrayConfig load_array_config(const std::string& path);
std::string array_config_to_json(const ArrayConfig& cfg);

struct CycleReport {
  int64_t compute_cycles = 0;
  int64_t row_folds = 0;
  int64_t col_folds = 0;
  int64_t total_macs = 0;
  double utilization = 0.0;  // total_macs / (compute_cycles * rows * cols)
  double latency_us = 0.0;
  double dram_read_bw = 0.0;   // bytes/s requirement, assumed satisfied
  double dram_write_bw = 0.0;
  int64_t read_bytes = 0;
  int64_t write_bytes = 0;
};

// Weight-stationary mapping: filter-window elements (in_c*k^2) onto rows,
// output filters (out_c) onto columns. Row folds Fr = ceil(in_c*k^2/rows),
// column folds Fc = ceil(out_c/cols). Each fold streams T = out_h*out_w
// activation vectors through a fixed pipeline of depth rows+cols-2, so
// compute_cycles = Fr*Fc*(rows+cols-2+T). The conv runs at stride-1 'same'
// resolution (T = in_h*in_w of the layer config); the site's downsampling
// pool is not modeled.
// Throws Error{unsupported} for non-conv layer configs.
CycleReport conv_cycles(const LayerConfig& layer, const ArrayConfig& cfg);

// Sum over active conv sites; the head linear layer is mapped as a 1x1
// conv with T = 1. Pooling is not mapped.
CycleReport network_cycles(const Backbone& backbone, const Architecture& arch,
                           const ArrayConfig& cfg);

std::string cycle_report_to_json(const CycleReport& report);

}  // namespace hmnas
