// hmnas command-line tool. Drives the engine exclusively through the
// public C API in include/hmnas.h; file handling, report emission, and the
// oracle wire protocol live here.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "hmnas.h"
#include "report.hpp"

using nlohmann::json;

namespace {

struct CliError : std::runtime_error {
  int exit_code;
  std::string code_name;
  CliError(int exit_code_, std::string code_name_, const std::string& msg)
      : std::runtime_error(msg), exit_code(exit_code_), code_name(std::move(code_name_)) {}
};

std::string last_api_error() {
  size_t n = hmn_last_error(nullptr, 0);
  std::string msg(n, '\0');
  hmn_last_error(msg.data(), n + 1);
  return msg;
}

// Domain failures (infeasibility, missing table entries, oracle faults)
// exit 1; usage and configuration problems exit 2.
int exit_code_for(hmn_status status) {
  switch (status) {
    case HMN_ERR_INFEASIBLE:
    case HMN_ERR_MISSING_ENTRY:
    case HMN_ERR_ORACLE:
      return 1;
    default:
      return 2;
  }
}

void check(hmn_status status) {
  if (status == HMN_OK) return;
  throw CliError(exit_code_for(status), hmn_status_name(status), last_api_error());
}

struct StringDeleter {
  void operator()(char* s) const { hmn_string_free(s); }
};
using ApiString = std::unique_ptr<char, StringDeleter>;

std::string take_string(char* s) {
  ApiString holder(s);
  return std::string(holder.get());
}

struct BackboneDeleter {
  void operator()(hmn_backbone* b) const { hmn_backbone_free(b); }
};
using BackbonePtr = std::unique_ptr<hmn_backbone, BackboneDeleter>;

struct ArchDeleter {
  void operator()(hmn_arch* a) const { hmn_arch_free(a); }
};
using ArchPtr = std::unique_ptr<hmn_arch, ArchDeleter>;

struct TableDeleter {
  void operator()(hmn_table* t) const { hmn_table_free(t); }
};
using TablePtr = std::unique_ptr<hmn_table, TableDeleter>;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CliError(2, "io", "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string group_digits(const std::string& digits) {
  std::string out;
  int run = 0;
  for (auto it = digits.rbegin(); it != digits.rend(); ++it) {
    if (run && run % 3 == 0) out.push_back(',');
    out.push_back(*it);
    ++run;
  }
  return std::string(out.rbegin(), out.rend());
}

// ---- shared option state ----

struct BackboneOptions {
  std::string backbone_path;
  std::string input_shape;  // CxHxW
  int classes = 0;
  int pool = 0;

  BackbonePtr load() const {
    hmn_backbone* raw = nullptr;
    check(hmn_backbone_load(backbone_path.c_str(), &raw));
    BackbonePtr b(raw);
    json overrides = json::object();
    if (!input_shape.empty()) {
      int c = 0, h = 0, w = 0;
      if (std::sscanf(input_shape.c_str(), "%dx%dx%d", &c, &h, &w) != 3)
        throw CliError(2, "parse", "--input must be CxHxW, got '" + input_shape + "'");
      overrides["input_shape"] = {{"channels", c}, {"height", h}, {"width", w}};
    }
    if (classes > 0) overrides["head"]["classes"] = classes;
    if (pool > 0) overrides["head"]["pool"] = pool;
    if (overrides.empty()) return b;
    hmn_backbone* adjusted = nullptr;
    check(hmn_backbone_override(b.get(), overrides.dump().c_str(), &adjusted));
    return BackbonePtr(adjusted);
  }

  void attach(CLI::App* cmd) {
    cmd->add_option("--backbone", backbone_path, "backbone definition JSON")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--input", input_shape, "input shape override, CxHxW");
    cmd->add_option("--classes", classes, "class count override");
    cmd->add_option("--pool", pool, "head pool target override");
  }
};

ArchPtr resolve_arch(const hmn_backbone* b, const std::string& genome, bool use_largest,
                     bool use_smallest, std::optional<uint64_t> sample_seed) {
  int picked = (!genome.empty() ? 1 : 0) + (use_largest ? 1 : 0) + (use_smallest ? 1 : 0) +
               (sample_seed ? 1 : 0);
  if (picked != 1)
    throw CliError(2, "usage",
                   "specify exactly one of --arch, --largest, --smallest, --sample-seed");
  hmn_arch* raw = nullptr;
  if (!genome.empty()) {
    check(hmn_decode(b, genome.c_str(), &raw));
  } else if (use_largest) {
    check(hmn_largest(b, &raw));
  } else if (use_smallest) {
    check(hmn_smallest(b, &raw));
  } else {
    check(hmn_sample_uniform(b, *sample_seed, &raw));
  }
  return ArchPtr(raw);
}

// seed precedence: flag > NAS_SEED env > config file > 0
uint64_t resolve_seed(const std::optional<uint64_t>& flag_seed, const json& config) {
  if (flag_seed) return *flag_seed;
  if (const char* env = std::getenv("NAS_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw CliError(2, "parse", std::string("NAS_SEED is not an integer: ") + env);
    }
  }
  if (config.contains("seed")) return config.at("seed").get<uint64_t>();
  return 0;
}

void echo_config(const std::string& out_path, const json& resolved) {
  std::filesystem::path p(out_path);
  std::filesystem::path echo = p.parent_path() / (p.stem().string() + ".config.json");
  cli::write_file_atomic(echo.string(), resolved.dump(2) + "\n");
}

// ---- run configuration (adapt / pareto) ----

json load_run_config(const std::string& path) {
  if (path.empty()) return json::object();
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw CliError(2, "parse", "config " + path + ": " + e.what());
  }
  static const char* allowed[] = {"backbone", "overrides", "constraint", "adaptation",
                                  "tasks",    "schedule",  "oracle",     "surrogate",
                                  "table",    "array",     "expected_device", "out",
                                  "seed",     "bounds"};
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) ok = true;
    if (!ok) throw CliError(2, "parse", "config " + path + ": unknown key '" + it.key() + "'");
  }
  for (const char* file_key : {"backbone", "table"}) {
    if (doc.contains(file_key) && !std::filesystem::exists(doc.at(file_key).get<std::string>()))
      throw CliError(2, "io", "config " + path + ": file not found: " +
                                  doc.at(file_key).get<std::string>());
  }
  if (doc.contains("array") && doc.at("array").is_string() &&
      !std::filesystem::exists(doc.at("array").get<std::string>()))
    throw CliError(2, "io",
                   "config " + path + ": file not found: " + doc.at("array").get<std::string>());
  return doc;
}

json parse_oracle_flag(const std::string& oracle_flag) {
  if (oracle_flag == "surrogate") return json("surrogate");
  if (oracle_flag.rfind("cmd:", 0) == 0) {
    // Whitespace-split argv; quoting is not interpreted.
    std::istringstream ss(oracle_flag.substr(4));
    std::vector<std::string> argv;
    std::string word;
    while (ss >> word) argv.push_back(word);
    if (argv.empty()) throw CliError(2, "parse", "--oracle cmd: requires a command");
    return json{{"cmd", argv}};
  }
  throw CliError(2, "parse", "--oracle must be 'surrogate' or 'cmd:<argv>'");
}

// ---- subcommand state ----

struct SpaceStatsCmd {
  BackboneOptions backbone;
  std::string traverse_seconds;
  bool as_json = false;
};

struct CostsCmd {
  BackboneOptions backbone;
  std::string genome;
  bool use_largest = false, use_smallest = false;
  std::optional<uint64_t> sample_seed;
  bool as_json = false;
};

struct ProfileCmd {
  BackboneOptions backbone;
  std::string device_path;
  std::string out_path;
};

struct LatencyCmd {
  BackboneOptions backbone;
  std::string genome;
  std::string table_path;
  bool as_json = false;
};

struct SimulateCmd {
  BackboneOptions backbone;
  std::string genome;
  bool use_largest = false, use_smallest = false;
  std::optional<uint64_t> sample_seed;
  std::string array_path;
};

struct ScheduleCmd {
  std::string config_path;
  std::optional<double> p_i, p_e, alpha;
  std::optional<int> e_s, e_m;
  std::optional<int> epoch;
  std::string plot_path;
  std::string svg_path;
  int epochs = -1;
};

struct AdaptCmd {
  BackboneOptions backbone;
  std::string config_path;
  std::string constraint_flag;
  std::string table_path;
  std::string array_path;
  std::string oracle_flag;
  std::string oracle_log;
  std::string expected_device;
  std::optional<uint64_t> seed;
  int pool_size = 0, iterations = -1, moves = 0, slice_size = 0, attempt_budget = 0;
  int64_t n_tasks = 0;
  double elite_fraction = 0.0, lambda = -1.0;
  std::optional<uint64_t> task_seed, difficulty_seed;
  std::string out_path;
  std::string bounds_flag;   // pareto only
  std::string metric_flag;   // pareto only
  std::string out_prefix;    // pareto only
  bool as_json = false;
};

json build_adapt_request(AdaptCmd& cmd, const json& config, bool pareto) {
  json request = json::object();

  std::string metric;
  double bound = 0.0;
  if (!cmd.constraint_flag.empty()) {
    size_t colon = cmd.constraint_flag.find(':');
    if (colon == std::string::npos)
      throw CliError(2, "parse", "--constraint must be <metric>:<bound>");
    metric = cmd.constraint_flag.substr(0, colon);
    try {
      bound = std::stod(cmd.constraint_flag.substr(colon + 1));
    } catch (const std::exception&) {
      throw CliError(2, "parse", "--constraint bound is not a number");
    }
  } else if (config.contains("constraint")) {
    metric = config.at("constraint").at("metric").get<std::string>();
    bound = config.at("constraint").value("bound", 0.0);
  } else if (!pareto) {
    throw CliError(2, "usage", "a constraint is required (--constraint or config)");
  }
  if (pareto && !cmd.metric_flag.empty()) metric = cmd.metric_flag;
  if (metric.empty()) throw CliError(2, "usage", "a constraint metric is required");
  request["constraint"] = {{"metric", metric}, {"bound", bound}};

  json adaptation = config.value("adaptation", json::object());
  if (cmd.pool_size > 0) adaptation["pool_size"] = cmd.pool_size;
  if (cmd.iterations >= 0) adaptation["iterations"] = cmd.iterations;
  if (cmd.elite_fraction > 0) adaptation["elite_fraction"] = cmd.elite_fraction;
  if (cmd.moves > 0) adaptation["moves"] = cmd.moves;
  if (cmd.attempt_budget > 0) adaptation["attempt_budget"] = cmd.attempt_budget;
  if (!adaptation.empty()) request["adaptation"] = adaptation;

  json tasks = config.value("tasks", json::object());
  if (cmd.n_tasks > 0) tasks["n_tasks"] = cmd.n_tasks;
  if (cmd.slice_size > 0) tasks["slice_size"] = cmd.slice_size;
  if (cmd.task_seed) tasks["rng_seed"] = *cmd.task_seed;
  if (!tasks.empty()) request["tasks"] = tasks;

  json surrogate = config.value("surrogate", json::object());
  if (cmd.lambda >= 0) surrogate["lambda"] = cmd.lambda;
  if (cmd.difficulty_seed) surrogate["difficulty_seed"] = *cmd.difficulty_seed;
  if (!surrogate.empty()) request["surrogate"] = surrogate;

  if (!cmd.oracle_flag.empty()) {
    request["oracle"] = parse_oracle_flag(cmd.oracle_flag);
  } else if (config.contains("oracle")) {
    request["oracle"] = config.at("oracle");
  }
  if (!cmd.oracle_log.empty()) {
    if (!request.contains("oracle") || !request.at("oracle").is_object())
      throw CliError(2, "usage", "--oracle-log needs a cmd: oracle");
    request["oracle"]["log"] = cmd.oracle_log;
  }

  if (!cmd.array_path.empty()) {
    request["array"] = json::parse(read_file(cmd.array_path));
  } else if (config.contains("array")) {
    request["array"] = config.at("array").is_string()
                           ? json::parse(read_file(config.at("array").get<std::string>()))
                           : config.at("array");
  }

  if (!cmd.expected_device.empty()) {
    request["expected_device"] = cmd.expected_device;
  } else if (config.contains("expected_device")) {
    request["expected_device"] = config.at("expected_device");
  }

  request["seed"] = resolve_seed(cmd.seed, config);
  return request;
}

TablePtr load_table_if_any(const AdaptCmd& cmd, const json& config) {
  std::string path = cmd.table_path;
  if (path.empty() && config.contains("table")) path = config.at("table").get<std::string>();
  if (path.empty()) return nullptr;
  hmn_table* raw = nullptr;
  check(hmn_table_load(path.c_str(), &raw));
  return TablePtr(raw);
}

// ---- subcommand implementations ----

int run_space_stats(const SpaceStatsCmd& cmd) {
  BackbonePtr b = cmd.backbone.load();
  char* exact_raw = nullptr;
  double approx = 0.0;
  check(hmn_space_size(b.get(), &exact_raw, &approx));
  std::string exact = take_string(exact_raw);
  std::string configs_json = take_string([&] {
    char* raw = nullptr;
    check(hmn_layer_configs(b.get(), &raw));
    return raw;
  }());
  size_t n_configs = json::parse(configs_json).size();
  std::string name = json::parse(take_string([&] {
                       char* raw = nullptr;
                       check(hmn_backbone_to_json(b.get(), &raw));
                       return raw;
                     }()))
                         .at("name");
  double traverse_hours = 0.0;
  std::string traverse_exact;
  if (!cmd.traverse_seconds.empty()) {
    char* rational = nullptr;
    check(hmn_naive_traverse_hours(b.get(), cmd.traverse_seconds.c_str(), &rational,
                                   &traverse_hours));
    traverse_exact = take_string(rational);
  }
  if (cmd.as_json) {
    json out{{"backbone", name},
             {"architectures", exact},
             {"architectures_pretty", group_digits(exact)},
             {"approx", approx},
             {"unique_layer_configs", n_configs}};
    if (!cmd.traverse_seconds.empty()) {
      out["naive_traverse_hours"] = traverse_hours;
      out["naive_traverse_hours_exact"] = traverse_exact;
    }
    std::cout << out.dump(2) << "\n";
  } else {
    std::cout << "backbone: " << name << "\n";
    std::cout << "architectures: " << group_digits(exact) << "\n";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6e", approx);
    std::cout << "approx: " << buf << "\n";
    std::cout << "unique layer configs: " << n_configs << "\n";
    if (!cmd.traverse_seconds.empty()) {
      std::snprintf(buf, sizeof(buf), "%.1f", traverse_hours);
      std::cout << "naive traverse at " << cmd.traverse_seconds << " s/network: " << buf
                << " hours\n";
    }
  }
  return 0;
}

int run_costs(const CostsCmd& cmd) {
  BackbonePtr b = cmd.backbone.load();
  ArchPtr arch =
      resolve_arch(b.get(), cmd.genome, cmd.use_largest, cmd.use_smallest, cmd.sample_seed);
  char* report_raw = nullptr;
  check(hmn_cost_report(b.get(), arch.get(), &report_raw));
  std::string report = take_string(report_raw);
  std::string genome = take_string([&] {
    char* raw = nullptr;
    check(hmn_encode(arch.get(), &raw));
    return raw;
  }());
  if (cmd.as_json) {
    json out = json::parse(report);
    out["genome"] = genome;
    std::cout << out.dump(2) << "\n";
    return 0;
  }
  json doc = json::parse(report);
  std::cout << "genome: " << genome << "\n";
  std::printf("%-10s %14s %16s\n", "layer", "params", "macs");
  const auto& per_layer = doc.at("per_layer");
  for (size_t i = 0; i < per_layer.size(); ++i) {
    std::printf("%-10s %14s %16s\n", ("site" + std::to_string(i)).c_str(),
                group_digits(std::to_string(per_layer[i].at("params").get<int64_t>())).c_str(),
                group_digits(std::to_string(per_layer[i].at("macs").get<int64_t>())).c_str());
  }
  std::printf("%-10s %14s %16s\n", "head",
              group_digits(std::to_string(doc.at("head").at("params").get<int64_t>())).c_str(),
              group_digits(std::to_string(doc.at("head").at("macs").get<int64_t>())).c_str());
  std::printf("%-10s %14s %16s\n", "total",
              group_digits(std::to_string(doc.at("params").get<int64_t>())).c_str(),
              group_digits(std::to_string(doc.at("macs").get<int64_t>())).c_str());
  return 0;
}

int run_profile(const ProfileCmd& cmd) {
  BackbonePtr b = cmd.backbone.load();
  std::string device_json = read_file(cmd.device_path);
  hmn_table* table_raw = nullptr;
  char* report_raw = nullptr;
  check(hmn_profile(b.get(), device_json.c_str(), &table_raw, &report_raw));
  TablePtr table(table_raw);
  json report = json::parse(take_string(report_raw));

  std::string table_json = take_string([&] {
    char* raw = nullptr;
    check(hmn_table_to_json(table.get(), &raw));
    return raw;
  }());
  cli::write_file_atomic(cmd.out_path, table_json + "\n");
  echo_config(cmd.out_path, json{{"command", "profile"},
                                 {"backbone", cmd.backbone.backbone_path},
                                 {"device", json::parse(device_json)},
                                 {"out", cmd.out_path}});

  std::cout << "benchmarks run: " << report.at("benchmarks_run").get<int64_t>() << "\n";
  const auto& missing = report.at("missing_keys");
  std::cout << "missing entries: " << missing.size() << "\n";
  for (const auto& k : missing) std::cerr << "missing: " << k.get<std::string>() << "\n";
  std::cout << "table written: " << cmd.out_path << "\n";
  return 0;
}

int run_latency(const LatencyCmd& cmd) {
  BackbonePtr b = cmd.backbone.load();
  ArchPtr arch = resolve_arch(b.get(), cmd.genome, false, false, std::nullopt);
  hmn_table* table_raw = nullptr;
  check(hmn_table_load(cmd.table_path.c_str(), &table_raw));
  TablePtr table(table_raw);
  double us = 0.0;
  check(hmn_compose_latency(b.get(), arch.get(), table.get(), &us));
  if (cmd.as_json) {
    std::cout << json{{"latency_us", us}}.dump() << "\n";
  } else {
    std::printf("latency: %.3f us\n", us);
  }
  return 0;
}

int run_simulate(const SimulateCmd& cmd) {
  BackbonePtr b = cmd.backbone.load();
  ArchPtr arch =
      resolve_arch(b.get(), cmd.genome, cmd.use_largest, cmd.use_smallest, cmd.sample_seed);
  std::string array_json = read_file(cmd.array_path);
  char* report_raw = nullptr;
  check(hmn_simulate(b.get(), arch.get(), array_json.c_str(), &report_raw));
  std::cout << take_string(report_raw) << "\n";
  return 0;
}

int run_schedule(const ScheduleCmd& cmd) {
  json schedule = json::object();
  if (!cmd.config_path.empty()) {
    json config = load_run_config(cmd.config_path);
    if (!config.contains("schedule"))
      throw CliError(2, "usage", "config has no \"schedule\" block");
    schedule = config.at("schedule");
  }
  // explicit flags override the config block; engine defaults fill the rest
  if (cmd.p_i) schedule["p_i"] = *cmd.p_i;
  if (cmd.p_e) schedule["p_e"] = *cmd.p_e;
  if (cmd.alpha) schedule["alpha"] = *cmd.alpha;
  if (cmd.e_s) schedule["e_s"] = *cmd.e_s;
  if (cmd.e_m) schedule["e_m"] = *cmd.e_m;
  std::string schedule_str = schedule.dump();
  if (cmd.epoch) {
    double p = 0.0;
    check(hmn_shrink_probability(schedule_str.c_str(), *cmd.epoch, &p));
    std::cout << json{{"epoch", *cmd.epoch}, {"p", p}}.dump() << "\n";
    return 0;
  }
  if (cmd.plot_path.empty())
    throw CliError(2, "usage", "schedule requires --plot <csv> or --epoch <e>");
  int last = cmd.epochs >= 0 ? cmd.epochs : schedule.value("e_m", 100);
  std::ostringstream csv;
  csv << "epoch,p\n";
  cli::PlotSeries series;
  series.label = "p";
  series.line = true;
  for (int e = 0; e <= last; ++e) {
    double p = 0.0;
    check(hmn_shrink_probability(schedule_str.c_str(), e, &p));
    csv << e << "," << json(p).dump() << "\n";
    series.points.push_back({static_cast<double>(e), p});
  }
  cli::write_file_atomic(cmd.plot_path, csv.str());
  std::cout << "curve written: " << cmd.plot_path << "\n";
  if (!cmd.svg_path.empty()) {
    cli::SvgPlot plot("largest-network probability", "epoch", "p");
    plot.add(series);
    cli::write_file_atomic(cmd.svg_path, plot.render());
    std::cout << "plot written: " << cmd.svg_path << "\n";
  }
  return 0;
}

int run_adapt(AdaptCmd& cmd) {
  json config = load_run_config(cmd.config_path);
  if (cmd.backbone.backbone_path.empty() && config.contains("backbone"))
    cmd.backbone.backbone_path = config.at("backbone").get<std::string>();
  if (cmd.backbone.backbone_path.empty())
    throw CliError(2, "usage", "a backbone is required (--backbone or config)");
  BackbonePtr b = cmd.backbone.load();
  json request = build_adapt_request(cmd, config, false);
  TablePtr table = load_table_if_any(cmd, config);

  char* result_raw = nullptr;
  check(hmn_adapt(b.get(), request.dump().c_str(), table.get(), &result_raw));
  std::string result = take_string(result_raw);

  std::string out_path = cmd.out_path;
  if (out_path.empty() && config.contains("out")) out_path = config.at("out").get<std::string>();
  if (!out_path.empty()) {
    cli::write_file_atomic(out_path, result + "\n");
    json echo{{"command", "adapt"},
              {"backbone", cmd.backbone.backbone_path},
              {"request", request}};
    if (!cmd.table_path.empty()) echo["table"] = cmd.table_path;
    echo_config(out_path, echo);
  }

  json doc = json::parse(result);
  if (cmd.as_json) {
    std::cout << result << "\n";
  } else {
    const json& best = doc.at("best");
    std::cout << "best genome: " << best.at("genome").get<std::string>() << "\n";
    std::printf("mean loss: %.6f\n", best.at("mean_loss").get<double>());
    std::printf("%s: %.6g (bound %.6g)\n", best.at("metric").get<std::string>().c_str(),
                best.at("metric_value").get<double>(), doc.at("constraint").at("bound").get<double>());
    for (const auto& w : doc.at("warnings"))
      std::cerr << "warning: " << w.get<std::string>() << "\n";
    if (!out_path.empty()) std::cout << "result written: " << out_path << "\n";
  }
  return 0;
}

int run_pareto(AdaptCmd& cmd) {
  json config = load_run_config(cmd.config_path);
  if (cmd.backbone.backbone_path.empty() && config.contains("backbone"))
    cmd.backbone.backbone_path = config.at("backbone").get<std::string>();
  if (cmd.backbone.backbone_path.empty())
    throw CliError(2, "usage", "a backbone is required (--backbone or config)");
  BackbonePtr b = cmd.backbone.load();

  json request = build_adapt_request(cmd, config, true);
  std::vector<double> bounds;
  if (!cmd.bounds_flag.empty()) {
    std::stringstream ss(cmd.bounds_flag);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      try {
        bounds.push_back(std::stod(tok));
      } catch (const std::exception&) {
        throw CliError(2, "parse", "--bounds entry is not a number: '" + tok + "'");
      }
    }
  } else if (config.contains("bounds")) {
    bounds = config.at("bounds").get<std::vector<double>>();
  }
  if (bounds.empty()) throw CliError(2, "usage", "pareto requires --bounds or config bounds");
  std::sort(bounds.begin(), bounds.end());
  request["bounds"] = bounds;

  TablePtr table = load_table_if_any(cmd, config);
  char* results_raw = nullptr;
  check(hmn_pareto(b.get(), request.dump().c_str(), table.get(), &results_raw));
  json points = json::parse(take_string(results_raw));

  std::ostringstream csv;
  csv << "bound,feasible,metric_value,mean_loss,genome\n";
  cli::PlotSeries series;
  series.label = "frontier";
  for (const json& p : points) {
    if (p.contains("result")) {
      const json& best = p.at("result").at("best");
      csv << json(p.at("bound").get<double>()).dump() << ",1,"
          << json(best.at("metric_value").get<double>()).dump() << ","
          << json(best.at("mean_loss").get<double>()).dump() << ","
          << best.at("genome").get<std::string>() << "\n";
      series.points.push_back(
          {best.at("metric_value").get<double>(), best.at("mean_loss").get<double>()});
    } else {
      csv << json(p.at("bound").get<double>()).dump() << ",0,,,\n";
      std::cerr << "bound " << p.at("bound").get<double>()
                << " infeasible: " << p.at("error").get<std::string>() << "\n";
    }
  }
  std::string csv_path = cmd.out_prefix + ".csv";
  std::string svg_path = cmd.out_prefix + ".svg";
  std::string json_path = cmd.out_prefix + ".json";
  cli::write_file_atomic(csv_path, csv.str());
  std::string metric = request.at("constraint").at("metric").get<std::string>();
  cli::SvgPlot plot("constraint sweep", metric, "mean loss");
  plot.add(series);
  cli::write_file_atomic(svg_path, plot.render());
  cli::write_file_atomic(json_path, points.dump(2) + "\n");
  echo_config(csv_path, json{{"command", "pareto"},
                             {"backbone", cmd.backbone.backbone_path},
                             {"request", request}});
  std::cout << "sweep points: " << points.size() << "\n";
  std::cout << "frontier written: " << csv_path << ", " << svg_path << ", " << json_path << "\n";
  return 0;
}

int run_oracle_serve(const BackboneOptions& opts, double lambda,
                     std::optional<uint64_t> difficulty_seed) {
  BackbonePtr b = opts.load();
  json params = json::object();
  if (lambda >= 0) params["lambda"] = lambda;
  if (difficulty_seed) params["difficulty_seed"] = *difficulty_seed;
  std::string params_str = params.dump();

  // Handshake, then answer one request per line until stdin closes. Every
  // line is flushed whole so a killed process never leaves a torn line.
  std::cout << json{{"proto", 1}}.dump() << "\n" << std::flush;
  std::string line;
  bool peer_announced = false;
  while (std::getline(std::cin, line)) {
    if (line.empty()) continue;
    json doc = json::parse(line, nullptr, false);
    if (doc.is_discarded()) {
      std::cout << nlohmann::ordered_json{{"id", -1}, {"error", "malformed JSON line"}}.dump()
                << "\n"
                << std::flush;
      continue;
    }
    if (!peer_announced && doc.contains("proto")) {
      peer_announced = true;
      if (doc.at("proto").get<int>() != 1) {
        std::cout << nlohmann::ordered_json{{"id", -1}, {"error", "unsupported protocol version"}}
                         .dump()
                  << "\n"
                  << std::flush;
      }
      continue;
    }
    int64_t id = doc.value("id", static_cast<int64_t>(-1));
    if (!doc.contains("arch") || !doc.contains("tasks") || !doc.at("tasks").is_array()) {
      std::cout << nlohmann::ordered_json{{"id", id},
                                          {"error", "request needs \"arch\" and \"tasks\""}}
                       .dump()
                << "\n"
                << std::flush;
      continue;
    }
    std::string genome = doc.at("arch").get<std::string>();
    std::vector<int64_t> tasks = doc.at("tasks").get<std::vector<int64_t>>();
    std::vector<double> losses(tasks.size());
    hmn_status rc = hmn_surrogate_losses(b.get(), params_str.c_str(), genome.c_str(),
                                         tasks.data(), tasks.size(), losses.data());
    if (rc != HMN_OK) {
      std::cout << nlohmann::ordered_json{{"id", id}, {"error", last_api_error()}}.dump() << "\n"
                << std::flush;
      continue;
    }
    nlohmann::ordered_json response{{"id", id}, {"losses", losses}};
    std::cout << response.dump() << "\n" << std::flush;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hardware-aware meta architecture search engine"};
  app.require_subcommand(1);
  bool json_errors = false;
  app.add_flag("--json-errors", json_errors, "emit errors as JSON objects on stderr");

  SpaceStatsCmd space_stats;
  auto* space_cmd = app.add_subcommand("space-stats", "search-space cardinality and layer configs");
  space_stats.backbone.attach(space_cmd);
  space_cmd->add_option("--traverse-seconds", space_stats.traverse_seconds,
                        "also print the naive full-traverse estimate for this per-network time");
  space_cmd->add_flag("--json", space_stats.as_json, "JSON output");

  CostsCmd costs;
  auto* costs_cmd = app.add_subcommand("costs", "exact parameter and MAC counts");
  costs.backbone.attach(costs_cmd);
  costs_cmd->add_option("--arch", costs.genome, "genome text");
  costs_cmd->add_flag("--largest", costs.use_largest, "use the largest architecture");
  costs_cmd->add_flag("--smallest", costs.use_smallest, "use the smallest architecture");
  costs_cmd->add_option("--sample-seed", costs.sample_seed, "sample uniformly with this seed");
  costs_cmd->add_flag("--json", costs.as_json, "JSON output");

  ProfileCmd profile;
  auto* profile_cmd = app.add_subcommand("profile", "build a layer-wise latency table");
  profile.backbone.attach(profile_cmd);
  profile_cmd->add_option("--device", profile.device_path, "device profile JSON")
      ->required()
      ->check(CLI::ExistingFile);
  profile_cmd->add_option("--out", profile.out_path, "output table path")->required();

  LatencyCmd latency;
  auto* latency_cmd = app.add_subcommand("latency", "compose a genome's latency from a table");
  latency.backbone.attach(latency_cmd);
  latency_cmd->add_option("--arch", latency.genome, "genome text")->required();
  latency_cmd->add_option("--table", latency.table_path, "latency table")
      ->required()
      ->check(CLI::ExistingFile);
  latency_cmd->add_flag("--json", latency.as_json, "JSON output");

  SimulateCmd simulate;
  auto* simulate_cmd = app.add_subcommand("simulate", "systolic-array cycle report");
  simulate.backbone.attach(simulate_cmd);
  simulate_cmd->add_option("--arch", simulate.genome, "genome text");
  simulate_cmd->add_flag("--largest", simulate.use_largest, "use the largest architecture");
  simulate_cmd->add_flag("--smallest", simulate.use_smallest, "use the smallest architecture");
  simulate_cmd->add_option("--sample-seed", simulate.sample_seed, "sample with this seed");
  simulate_cmd->add_option("--array", simulate.array_path, "array config JSON")
      ->required()
      ->check(CLI::ExistingFile);

  ScheduleCmd schedule;
  auto* schedule_cmd = app.add_subcommand("schedule", "progressive-shrinking probability curve");
  schedule_cmd->add_option("--config", schedule.config_path, "run config with a schedule block")
      ->check(CLI::ExistingFile);
  schedule_cmd->add_option("--p-i", schedule.p_i, "initial probability");
  schedule_cmd->add_option("--p-e", schedule.p_e, "end probability");
  schedule_cmd->add_option("--alpha", schedule.alpha, "decay rate");
  schedule_cmd->add_option("--e-s", schedule.e_s, "decay start epoch");
  schedule_cmd->add_option("--e-m", schedule.e_m, "decay end epoch");
  schedule_cmd->add_option("--epoch", schedule.epoch, "print p at one epoch");
  schedule_cmd->add_option("--plot", schedule.plot_path, "write the p(e) curve as CSV");
  schedule_cmd->add_option("--svg", schedule.svg_path, "also write an SVG line plot");
  schedule_cmd->add_option("--epochs", schedule.epochs, "last epoch of the curve (default e_m)");

  AdaptCmd adapt;
  auto* adapt_cmd = app.add_subcommand("adapt", "constraint-filtered genetic adaptation");
  adapt_cmd->add_option("--backbone", adapt.backbone.backbone_path, "backbone definition JSON")
      ->check(CLI::ExistingFile);
  adapt_cmd->add_option("--input", adapt.backbone.input_shape, "input shape override, CxHxW");
  adapt_cmd->add_option("--classes", adapt.backbone.classes, "class count override");
  adapt_cmd->add_option("--pool", adapt.backbone.pool, "head pool target override");
  adapt_cmd->add_option("--config", adapt.config_path, "run config JSON")
      ->check(CLI::ExistingFile);
  adapt_cmd->add_option("--constraint", adapt.constraint_flag, "<metric>:<bound>");
  adapt_cmd->add_option("--table", adapt.table_path, "latency table")->check(CLI::ExistingFile);
  adapt_cmd->add_option("--array", adapt.array_path, "array config for the cycles metric")
      ->check(CLI::ExistingFile);
  adapt_cmd->add_option("--oracle", adapt.oracle_flag, "surrogate | cmd:<argv>");
  adapt_cmd->add_option("--oracle-log", adapt.oracle_log,
                        "append the oracle wire traffic to this file");
  adapt_cmd->add_option("--expected-device", adapt.expected_device,
                        "warn when the table's device differs");
  adapt_cmd->add_option("--seed", adapt.seed, "run seed (overrides NAS_SEED and config)");
  adapt_cmd->add_option("--pool-size", adapt.pool_size, "GA pool size");
  adapt_cmd->add_option("--iterations", adapt.iterations, "GA iterations");
  adapt_cmd->add_option("--elite", adapt.elite_fraction, "elite fraction");
  adapt_cmd->add_option("--moves", adapt.moves, "mutation moves");
  adapt_cmd->add_option("--slice", adapt.slice_size, "tasks per iteration slice");
  adapt_cmd->add_option("--n-tasks", adapt.n_tasks, "validation task count");
  adapt_cmd->add_option("--task-seed", adapt.task_seed, "task sampling seed");
  adapt_cmd->add_option("--attempt-budget", adapt.attempt_budget, "feasibility attempt budget");
  adapt_cmd->add_option("--lambda", adapt.lambda, "surrogate noise weight");
  adapt_cmd->add_option("--difficulty-seed", adapt.difficulty_seed, "surrogate difficulty seed");
  adapt_cmd->add_option("--out", adapt.out_path, "write AdaptationResult JSON here");
  adapt_cmd->add_flag("--json", adapt.as_json, "print the result JSON on stdout");

  AdaptCmd pareto;
  auto* pareto_cmd = app.add_subcommand("pareto", "adaptation sweep over constraint bounds");
  pareto_cmd->add_option("--backbone", pareto.backbone.backbone_path, "backbone definition JSON")
      ->check(CLI::ExistingFile);
  pareto_cmd->add_option("--input", pareto.backbone.input_shape, "input shape override");
  pareto_cmd->add_option("--classes", pareto.backbone.classes, "class count override");
  pareto_cmd->add_option("--pool", pareto.backbone.pool, "head pool target override");
  pareto_cmd->add_option("--config", pareto.config_path, "run config JSON")
      ->check(CLI::ExistingFile);
  pareto_cmd->add_option("--metric", pareto.metric_flag, "constraint metric");
  pareto_cmd->add_option("--bounds", pareto.bounds_flag, "comma-separated bounds");
  pareto_cmd->add_option("--table", pareto.table_path, "latency table")->check(CLI::ExistingFile);
  pareto_cmd->add_option("--array", pareto.array_path, "array config for the cycles metric")
      ->check(CLI::ExistingFile);
  pareto_cmd->add_option("--oracle", pareto.oracle_flag, "surrogate | cmd:<argv>");
  pareto_cmd->add_option("--oracle-log", pareto.oracle_log,
                        "append the oracle wire traffic to this file");
  pareto_cmd->add_option("--seed", pareto.seed, "run seed");
  pareto_cmd->add_option("--pool-size", pareto.pool_size, "GA pool size");
  pareto_cmd->add_option("--iterations", pareto.iterations, "GA iterations");
  pareto_cmd->add_option("--elite", pareto.elite_fraction, "elite fraction");
  pareto_cmd->add_option("--moves", pareto.moves, "mutation moves");
  pareto_cmd->add_option("--slice", pareto.slice_size, "tasks per iteration slice");
  pareto_cmd->add_option("--n-tasks", pareto.n_tasks, "validation task count");
  pareto_cmd->add_option("--task-seed", pareto.task_seed, "task sampling seed");
  pareto_cmd->add_option("--lambda", pareto.lambda, "surrogate noise weight");
  pareto_cmd->add_option("--difficulty-seed", pareto.difficulty_seed, "surrogate difficulty seed");
  pareto_cmd->add_option("--out-prefix", pareto.out_prefix, "output prefix for csv/svg/json")
      ->required();

  BackboneOptions serve_backbone;
  double serve_lambda = -1.0;
  std::optional<uint64_t> serve_difficulty_seed;
  auto* serve_cmd =
      app.add_subcommand("oracle-serve", "serve the surrogate over stdin/stdout NDJSON");
  serve_backbone.attach(serve_cmd);
  serve_cmd->add_option("--lambda", serve_lambda, "surrogate noise weight");
  serve_cmd->add_option("--difficulty-seed", serve_difficulty_seed, "surrogate difficulty seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }

  try {
    if (space_cmd->parsed()) return run_space_stats(space_stats);
    if (costs_cmd->parsed()) return run_costs(costs);
    if (profile_cmd->parsed()) return run_profile(profile);
    if (latency_cmd->parsed()) return run_latency(latency);
    if (simulate_cmd->parsed()) return run_simulate(simulate);
    if (schedule_cmd->parsed()) return run_schedule(schedule);
    if (adapt_cmd->parsed()) return run_adapt(adapt);
    if (pareto_cmd->parsed()) return run_pareto(pareto);
    if (serve_cmd->parsed())
      return run_oracle_serve(serve_backbone, serve_lambda, serve_difficulty_seed);
  } catch (const CliError& e) {
    if (json_errors) {
      std::cerr << json{{"error", {{"code", e.code_name}, {"message", e.what()}}}}.dump() << "\n";
    } else {
      std::cerr << "error (" << e.code_name << "): " << e.what() << "\n";
    }
    return e.exit_code;
  } catch (const std::exception& e) {
    if (json_errors) {
      std::cerr << json{{"error", {{"code", "internal"}, {"message", e.what()}}}}.dump() << "\n";
    } else {
      std::cerr << "error: " << e.what() << "\n";
    }
    return 2;
  }
  return 2;
}
