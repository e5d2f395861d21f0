#include "core/systolic.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "core/errors.hpp"

namespace hmnas {

using nlohmann::json;

namespace {

void check_array_keys(const json& obj) {
  static const char* allowed[] = {"label",
                                  "rows",
                                  "cols",
                                  "frequency_hz",
                                  "sram_ifmap_bytes",
                                  "sram_filter_bytes",
                                  "sram_ofmap_bytes",
                                  "dtype_bytes",
                                  "dram_report_only"};
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) ok = true;
    if (!ok) throw Error(ErrorCode::parse, "array config: unknown key '" + it.key() + "'");
  }
}

}  // namespace

ArrayConfig array_config_from_json(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse, std::string("array config JSON: ") + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::parse, "array config: expected an object");
  check_array_keys(doc);
  ArrayConfig cfg;
  cfg.label = doc.value("label", cfg.label);
  cfg.rows = doc.value("rows", cfg.rows);
  cfg.cols = doc.value("cols", cfg.cols);
  cfg.frequency_hz = doc.value("frequency_hz", cfg.frequency_hz);
  cfg.sram_ifmap_bytes = doc.value("sram_ifmap_bytes", cfg.sram_ifmap_bytes);
  cfg.sram_filter_bytes = doc.value("sram_filter_bytes", cfg.sram_filter_bytes);
  cfg.sram_ofmap_bytes = doc.value("sram_ofmap_bytes", cfg.sram_ofmap_bytes);
  cfg.dtype_bytes = doc.value("dtype_bytes", cfg.dtype_bytes);
  cfg.dram_report_only = doc.value("dram_report_only", cfg.dram_report_only);
  if (cfg.rows < 1 || cfg.cols < 1)
    throw Error(ErrorCode::validation, "array config: rows and cols must be >= 1");
  if (cfg.frequency_hz <= 0)
    throw Error(ErrorCode::validation, "array config: frequency must be positive");
  if (cfg.dtype_bytes < 1)
    throw Error(ErrorCode::validation, "array config: dtype_bytes must be >= 1");
  return cfg;
}

ArrayConfig load_array_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open array config: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return array_config_from_json(ss.str());
}

std::string array_config_to_json(const ArrayConfig& cfg) {
  json doc{{"label", cfg.label},
           {"rows", cfg.rows},
           {"cols", cfg.cols},
           {"frequency_hz", cfg.frequency_hz},
           {"sram_ifmap_bytes", cfg.sram_ifmap_bytes},
           {"sram_filter_bytes", cfg.sram_filter_bytes},
           {"sram_ofmap_bytes", cfg.sram_ofmap_bytes},
           {"dtype_bytes", cfg.dtype_bytes},
           {"dram_report_only", cfg.dram_report_only}};
  return doc.dump(2);
}

CycleReport conv_cycles(const LayerConfig& layer, const ArrayConfig& cfg) {
  if (layer.kind == OpKind::pool)
    throw Error(ErrorCode::unsupported, "unsupported op for systolic mapping: pool");
  LayerConfig conv = layer;
  if (layer.kind == OpKind::linear) {
    // features x classes dense layer as a 1x1 conv over a single position
    conv.kind = OpKind::conv;
    conv.kernel = 1;
    conv.in_h = 1;
    conv.in_w = 1;
  }

  const int64_t window = static_cast<int64_t>(conv.in_c) * conv.kernel * conv.kernel;
  const int64_t t_steps = static_cast<int64_t>(conv.in_h) * conv.in_w;
  const int64_t fr = (window + cfg.rows - 1) / cfg.rows;
  const int64_t fc = (conv.out_c + cfg.cols - 1) / cfg.cols;
  const int64_t per_fold = cfg.rows + cfg.cols - 2 + t_steps;

  CycleReport report;
  report.row_folds = fr;
  report.col_folds = fc;
  report.compute_cycles = fr * fc * per_fold;
  report.total_macs = t_steps * window * conv.out_c;
  report.utilization = static_cast<double>(report.total_macs) /
                       (static_cast<double>(report.compute_cycles) * cfg.rows * cfg.cols);
  report.latency_us = static_cast<double>(report.compute_cycles) / cfg.frequency_hz * 1e6;

  // Per fold: stream T activation vectors of rows_used elements, load the
  // rows_used x cols_used weight tile, write T outputs of cols_used elements.
  for (int64_t i = 0; i < fr; ++i) {
    int64_t rows_used = std::min<int64_t>(cfg.rows, window - i * cfg.rows);
    for (int64_t j = 0; j < fc; ++j) {
      int64_t cols_used = std::min<int64_t>(cfg.cols, conv.out_c - j * cfg.cols);
      report.read_bytes += (t_steps * rows_used + rows_used * cols_used) * cfg.dtype_bytes;
      report.write_bytes += t_steps * cols_used * cfg.dtype_bytes;
    }
  }
  double seconds = static_cast<double>(report.compute_cycles) / cfg.frequency_hz;
  report.dram_read_bw = static_cast<double>(report.read_bytes) / seconds;
  report.dram_write_bw = static_cast<double>(report.write_bytes) / seconds;
  return report;
}

CycleReport network_cycles(const Backbone& b, const Architecture& a, const ArrayConfig& cfg) {
  CycleReport total;
  for (const LayerConfig& layer : arch_layer_configs(b, a)) {
    if (layer.kind == OpKind::pool) continue;
    CycleReport r = conv_cycles(layer, cfg);
    total.compute_cycles += r.compute_cycles;
    total.row_folds += r.row_folds;
    total.col_folds += r.col_folds;
    total.total_macs += r.total_macs;
    total.read_bytes += r.read_bytes;
    total.write_bytes += r.write_bytes;
  }
  total.utilization = static_cast<double>(total.total_macs) /
                      (static_cast<double>(total.compute_cycles) * cfg.rows * cfg.cols);
  total.latency_us = static_cast<double>(total.compute_cycles) / cfg.frequency_hz * 1e6;
  double seconds = static_cast<double>(total.compute_cycles) / cfg.frequency_hz;
  total.dram_read_bw = static_cast<double>(total.read_bytes) / seconds;
  total.dram_write_bw = static_cast<double>(total.write_bytes) / seconds;
  return total;
}

std::string cycle_report_to_json(const CycleReport& r) {
  json doc{{"compute_cycles", r.compute_cycles},
           {"row_folds", r.row_folds},
           {"col_folds", r.col_folds},
           {"total_macs", r.total_macs},
           {"utilization", r.utilization},
           {"latency_us", r.latency_us},
           {"dram_read_bandwidth_bytes_per_s", r.dram_read_bw},
           {"dram_write_bandwidth_bytes_per_s", r.dram_write_bw},
           {"read_bytes", r.read_bytes},
           {"write_bytes", r.write_bytes}};
  return doc.dump(2);
}

}  // namespace hmnas
