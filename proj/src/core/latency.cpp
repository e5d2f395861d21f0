#include "core/latency.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#ifdef __linux__
#include <sched.h>
#endif

#include "core/errors.hpp"
#include "core/kernels.hpp"

namespace hmnas {

using nlohmann::json;

const char* latency_method_name(LatencyMethod m) {
  switch (m) {
    case LatencyMethod::measured: return "measured";
    case LatencyMethod::analytic: return "analytic";
    case LatencyMethod::systolic: return "systolic";
  }
  return "analytic";
}

std::optional<LatencyMethod> latency_method_from_name(const std::string& name) {
  if (name == "measured") return LatencyMethod::measured;
  if (name == "analytic") return LatencyMethod::analytic;
  if (name == "systolic") return LatencyMethod::systolic;
  return std::nullopt;
}

DeviceProfile device_profile_from_json(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse, std::string("device profile JSON: ") + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::parse, "device profile: expected an object");
  static const char* allowed[] = {"device_name", "method",          "repetitions", "warmup",
                                  "pin_thread",  "macs_per_second", "array"};
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) ok = true;
    if (!ok) throw Error(ErrorCode::parse, "device profile: unknown key '" + it.key() + "'");
  }
  DeviceProfile d;
  d.device_name = doc.at("device_name").get<std::string>();
  auto method = latency_method_from_name(doc.at("method").get<std::string>());
  if (!method)
    throw Error(ErrorCode::parse,
                "device profile: method must be measured | analytic | systolic");
  d.method = *method;
  d.repetitions = doc.value("repetitions", d.repetitions);
  d.warmup = doc.value("warmup", d.warmup);
  d.pin_thread = doc.value("pin_thread", d.pin_thread);
  d.macs_per_second = doc.value("macs_per_second", d.macs_per_second);
  if (doc.contains("array")) d.array = array_config_from_json(doc.at("array").dump());

  if (d.method == LatencyMethod::measured && d.repetitions < 3)
    throw Error(ErrorCode::validation, "measured profiling requires repetitions >= 3");
  if (d.method == LatencyMethod::analytic && d.macs_per_second <= 0)
    throw Error(ErrorCode::validation, "analytic profiling requires macs_per_second > 0");
  if (d.method == LatencyMethod::systolic && !d.array)
    throw Error(ErrorCode::validation, "systolic profiling requires an array config");
  return d;
}

DeviceProfile load_device_profile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open device profile: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return device_profile_from_json(ss.str());
}

namespace {

std::string timestamp_utc() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Analytic latency: MACs / throughput. Zero-MAC ops (pooling) are charged
// one accumulate per input element so every table entry stays positive.
double analytic_latency_us(const LayerConfig& c, double macs_per_second) {
  int64_t work = layer_macs(c);
  if (work == 0) work = static_cast<int64_t>(c.in_c) * c.in_h * c.in_w;
  return static_cast<double>(work) / macs_per_second * 1e6;
}

double systolic_latency_us(const LayerConfig& c, const ArrayConfig& cfg) {
  if (c.kind == OpKind::pool) {
    // Not mapped to the array; charged as element moves at one lane per PE.
    int64_t elements = static_cast<int64_t>(c.in_c) * c.in_h * c.in_w;
    int64_t cycles = (elements + static_cast<int64_t>(cfg.rows) * cfg.cols - 1) /
                     (static_cast<int64_t>(cfg.rows) * cfg.cols);
    return static_cast<double>(std::max<int64_t>(1, cycles)) / cfg.frequency_hz * 1e6;
  }
  return conv_cycles(c, cfg).latency_us;
}

struct ScopedPin {
#ifdef __linux__
  cpu_set_t previous;
  bool restore = false;

  explicit ScopedPin(bool enable) {
    if (!enable) return;
    if (sched_getaffinity(0, sizeof(previous), &previous) != 0) return;
    cpu_set_t one;
    CPU_ZERO(&one);
    CPU_SET(0, &one);
    if (sched_setaffinity(0, sizeof(one), &one) == 0) restore = true;
  }
  ~ScopedPin() {
    if (restore) sched_setaffinity(0, sizeof(previous), &previous);
  }
#else
  explicit ScopedPin(bool) {}
#endif
};

LatencyEntry measure_config(const LayerConfig& config, int repetitions, int warmup) {
  for (int i = 0; i < warmup; ++i) time_layer_once(config);
  std::vector<double> runs;
  runs.reserve(static_cast<size_t>(repetitions));
  for (int i = 0; i < repetitions; ++i) runs.push_back(time_layer_once(config));
  std::sort(runs.begin(), runs.end());
  size_t n = runs.size();
  double median = n % 2 ? runs[n / 2] : 0.5 * (runs[n / 2 - 1] + runs[n / 2]);
  double q1 = runs[n / 4];
  double q3 = runs[(3 * n) / 4];
  LatencyEntry e;
  e.latency_us = std::max(median, 1e-3);  // clock granularity floor
  e.iqr_us = q3 - q1;
  e.samples = repetitions;
  return e;
}

}  // namespace

ProfileOutcome profile(const Backbone& b, const DeviceProfile& device,
                       const ProfileProgress& progress) {
  std::vector<LayerConfig> configs = enumerate_unique_layer_configs(b);

  ProfileOutcome out;
  out.table.format_version = 1;
  out.table.device_name = device.device_name;
  out.table.method = device.method;
  out.table.created_at = timestamp_utc();

  ScopedPin pin(device.method == LatencyMethod::measured && device.pin_thread);

  size_t done = 0;
  for (const LayerConfig& c : configs) {
    std::string key = layer_key(c);
    try {
      LatencyEntry entry;
      switch (device.method) {
        case LatencyMethod::analytic:
          entry = {analytic_latency_us(c, device.macs_per_second), 0.0, 1};
          break;
        case LatencyMethod::systolic:
          entry = {systolic_latency_us(c, *device.array), 0.0, 1};
          break;
        case LatencyMethod::measured:
          entry = measure_config(c, device.repetitions, device.warmup);
          break;
      }
      out.table.entries.emplace(std::move(key), entry);
    } catch (const std::exception&) {
      out.missing_keys.push_back(key);
    }
    ++out.benchmarks_run;
    ++done;
    if (progress) progress(done, configs.size());
  }
  return out;
}

std::vector<std::string> missing_keys(const LatencyTable& table,
                                      const std::vector<LayerConfig>& configs) {
  std::vector<std::string> out;
  for (const LayerConfig& c : configs) {
    std::string key = layer_key(c);
    if (!table.entries.count(key)) out.push_back(std::move(key));
  }
  return out;
}

double compose(const Backbone& b, const Architecture& a, const LatencyTable& table) {
  std::vector<LayerConfig> configs = arch_layer_configs(b, a);
  std::vector<std::string> absent = missing_keys(table, configs);
  if (!absent.empty()) {
    std::string msg = "latency table is missing " + std::to_string(absent.size()) + " entries:";
    for (const std::string& k : absent) msg += " " + k;
    throw Error(ErrorCode::missing_entry, msg);
  }
  double total = 0.0;
  for (const LayerConfig& c : configs) total += table.entries.at(layer_key(c)).latency_us;
  return total;
}

double measure_end_to_end(const Backbone& b, const Architecture& a, int repetitions) {
  if (repetitions < 1) throw Error(ErrorCode::invalid_argument, "repetitions must be >= 1");
  std::vector<LayerConfig> configs = arch_layer_configs(b, a);
  time_network_once(configs);  // warmup
  std::vector<double> runs;
  runs.reserve(static_cast<size_t>(repetitions));
  for (int i = 0; i < repetitions; ++i) runs.push_back(time_network_once(configs));
  std::sort(runs.begin(), runs.end());
  size_t n = runs.size();
  return n % 2 ? runs[n / 2] : 0.5 * (runs[n / 2 - 1] + runs[n / 2]);
}

std::string table_to_json(const LatencyTable& t) {
  json entries = json::array();
  for (const auto& [key, e] : t.entries) {
    entries.push_back(json{{"key", key},
                           {"latency_us", e.latency_us},
                           {"iqr_us", e.iqr_us},
                           {"samples", e.samples}});
  }
  json doc{{"format_version", t.format_version},
           {"device_name", t.device_name},
           {"method", latency_method_name(t.method)},
           {"created_at", t.created_at},
           {"entries", entries}};
  return doc.dump(2);
}

LatencyTable table_from_json(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse, std::string("latency table JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("format_version"))
    throw Error(ErrorCode::parse, "latency table: missing format_version header");
  int version = doc.at("format_version").get<int>();
  if (version != 1)
    throw Error(ErrorCode::unsupported,
                "latency table format_version " + std::to_string(version) + " not supported");
  LatencyTable t;
  t.format_version = version;
  t.device_name = doc.at("device_name").get<std::string>();
  auto method = latency_method_from_name(doc.at("method").get<std::string>());
  if (!method) throw Error(ErrorCode::parse, "latency table: unknown method");
  t.method = *method;
  t.created_at = doc.at("created_at").get<std::string>();
  for (const json& e : doc.at("entries")) {
    std::string key = e.at("key").get<std::string>();
    parse_layer_key(key);  // every key must decode back to a LayerConfig
    LatencyEntry entry{e.at("latency_us").get<double>(), e.at("iqr_us").get<double>(),
                       e.at("samples").get<int>()};
    if (!(entry.latency_us > 0))
      throw Error(ErrorCode::validation, "latency table: non-positive latency for " + key);
    t.entries.emplace(std::move(key), entry);
  }
  return t;
}

void save_table(const LatencyTable& t, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::io, "cannot write latency table: " + path);
  out << table_to_json(t) << "\n";
  if (!out) throw Error(ErrorCode::io, "write failed: " + path);
}

LatencyTable load_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open latency table: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return table_from_json(ss.str());
}

TraverseEstimate naive_traverse_estimate(const Backbone& b,
                                         const std::string& per_network_seconds) {
  // Parse the decimal exactly: digits[.digits] -> numerator / 10^frac.
  std::string text = per_network_seconds;
  size_t dot = text.find('.');
  std::string digits = dot == std::string::npos ? text : text.substr(0, dot) + text.substr(dot + 1);
  size_t frac = dot == std::string::npos ? 0 : text.size() - dot - 1;
  if (digits.empty()) throw Error(ErrorCode::parse, "malformed seconds: " + per_network_seconds);
  for (char c : digits)
    if (c < '0' || c > '9')
      throw Error(ErrorCode::parse, "malformed seconds: " + per_network_seconds);
  BigInt seconds_num(digits);
  BigInt seconds_den = 1;
  for (size_t i = 0; i < frac; ++i) seconds_den *= 10;
  if (seconds_num == 0)
    throw Error(ErrorCode::invalid_argument, "per-network seconds must be > 0");

  TraverseEstimate out;
  out.hours_numerator = space_size(b).exact * seconds_num;
  out.hours_denominator = seconds_den * 3600;
  BigInt g = boost::multiprecision::gcd(out.hours_numerator, out.hours_denominator);
  out.hours_numerator /= g;
  out.hours_denominator /= g;
  out.hours = out.hours_numerator.convert_to<double>() / out.hours_denominator.convert_to<double>();
  return out;
}

}  // namespace hmnas
