#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <nlohmann/json.hpp>

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr interleaved
};

RunResult run_cli(const std::string& args) {
  std::string cmd = std::string(HMNAS_CLI) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  RunResult r;
  char buf[4096];
  while (size_t n = fread(buf, 1, sizeof(buf), pipe)) r.output.append(buf, n);
  int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string data(const std::string& rel) { return std::string(HMNAS_DATA_DIR) + "/" + rel; }

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("hmnas_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

const char* kToyBackbone = R"({
  "name": "clitoy",
  "input_shape": {"channels": 1, "height": 12, "width": 12},
  "head": {"pool": 1, "classes": 2},
  "depth": {"unit": "layer", "min": 1, "max": 2},
  "defaults": {"kernels": [1, 3], "expansions": ["0.5", "1"], "activations": ["relu"]},
  "layers": [
    {"name": "l0", "base_channels": 8, "stride": 2},
    {"name": "l1", "base_channels": 8, "stride": 2}
  ]
})";

}  // namespace

TEST_CASE("space-stats prints the exact vgg9 cardinality") {
  RunResult r = run_cli("space-stats --backbone " + data("backbones/vgg9.json"));
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("1,008,189,504") != std::string::npos);
  CHECK(r.output.find("unique layer configs: 2807") != std::string::npos);

  RunResult j = run_cli("space-stats --json --backbone " + data("backbones/vgg9.json"));
  CHECK(j.exit_code == 0);
  json doc = json::parse(j.output);
  CHECK(doc.at("architectures") == "1008189504");
}

TEST_CASE("space-stats can include the naive traverse estimate") {
  RunResult r = run_cli("space-stats --json --traverse-seconds 2.365 --backbone " +
                        data("backbones/vgg9.json"));
  CHECK(r.exit_code == 0);
  json doc = json::parse(r.output);
  double hours = doc.at("naive_traverse_hours").get<double>();
  CHECK(hours > 5e5);
  CHECK(hours < 8e5);
  CHECK(run_cli("space-stats --traverse-seconds nonsense --backbone " +
                data("backbones/vgg9.json"))
            .exit_code == 2);
}

TEST_CASE("usage errors exit 2") {
  CHECK(run_cli("space-stats --no-such-flag").exit_code == 2);
  CHECK(run_cli("frobnicate").exit_code == 2);
  CHECK(run_cli("space-stats --backbone /nonexistent.json").exit_code == 2);
  CHECK(run_cli("").exit_code == 2);
}

TEST_CASE("infeasible adapt exits 1 with a JSON error object") {
  TempDir tmp;
  write_file(tmp.file("toy.json"), kToyBackbone);
  RunResult r = run_cli("--json-errors adapt --backbone " + tmp.file("toy.json") +
                        " --constraint params:1 --pool-size 5 --iterations 2");
  CHECK(r.exit_code == 1);
  json err = json::parse(r.output);
  CHECK(err.at("error").at("code") == "infeasible");
}

TEST_CASE("costs emits matching table and json") {
  RunResult table = run_cli("costs --backbone " + data("backbones/vgg9.json") +
                            " --arch 'vgg9:d4/3,0.75,relu;3,0.75,relu;3,0.75,relu;3,0.75,relu'");
  CHECK(table.exit_code == 0);
  CHECK(table.output.find("70,085") != std::string::npos);
  CHECK(table.output.find("57,382,512") != std::string::npos);

  RunResult j = run_cli("costs --json --backbone " + data("backbones/vgg9.json") + " --largest");
  json doc = json::parse(j.output);
  CHECK(doc.at("params").get<int64_t>() > 0);
  CHECK(doc.at("genome") == "vgg9:d4/5,2.25,relu;5,2.25,relu;5,2.25,relu;5,2.25,relu");
}

TEST_CASE("cost overrides reproduce the 28x28 20-way reference row") {
  RunResult r = run_cli("costs --json --backbone " + data("backbones/vgg9.json") +
                        " --input 1x28x28 --classes 20 --pool 1" +
                        " --arch 'vgg9:d4/3,1,relu;3,1,relu;3,1,relu;3,1,relu'");
  CHECK(r.exit_code == 0);
  json doc = json::parse(r.output);
  CHECK(doc.at("params") == 113236);
  CHECK(doc.at("macs") == 10074368);
}

TEST_CASE("profile then latency composes from the emitted table") {
  TempDir tmp;
  write_file(tmp.file("toy.json"), kToyBackbone);
  write_file(tmp.file("device.json"),
             R"({"device_name":"a1","method":"analytic","macs_per_second":1e9})");
  RunResult p = run_cli("profile --backbone " + tmp.file("toy.json") + " --device " +
                        tmp.file("device.json") + " --out " + tmp.file("table.json"));
  CHECK(p.exit_code == 0);
  CHECK(p.output.find("missing entries: 0") != std::string::npos);
  CHECK(fs::exists(tmp.file("table.json")));
  CHECK(fs::exists(tmp.file("table.config.json")));  // config echo

  RunResult l = run_cli("latency --json --backbone " + tmp.file("toy.json") +
                        " --arch 'clitoy:d2/3,1,relu;3,1,relu' --table " + tmp.file("table.json"));
  CHECK(l.exit_code == 0);
  CHECK(json::parse(l.output).at("latency_us").get<double>() > 0);

  // a genome whose entries cannot all be present -> domain error, exit 1
  write_file(tmp.file("tiny.json"), std::string(kToyBackbone));
  json doc = json::parse(read_file(tmp.file("table.json")));
  doc["entries"] = json::array({doc.at("entries").at(0)});
  write_file(tmp.file("partial.json"), doc.dump());
  RunResult m = run_cli("latency --backbone " + tmp.file("toy.json") +
                        " --arch 'clitoy:d2/3,1,relu;3,1,relu' --table " + tmp.file("partial.json"));
  CHECK(m.exit_code == 1);
}

TEST_CASE("simulate prints a cycle report") {
  RunResult r = run_cli("simulate --backbone " + data("backbones/vgg9.json") +
                        " --largest --array " + data("arrays/eyeriss-like.json"));
  CHECK(r.exit_code == 0);
  json doc = json::parse(r.output);
  CHECK(doc.at("compute_cycles").get<int64_t>() > 0);
  CHECK(doc.at("dram_read_bandwidth_bytes_per_s").get<double>() > 0);
}

TEST_CASE("schedule emits csv and svg with the same numbers") {
  TempDir tmp;
  RunResult r = run_cli("schedule --plot " + tmp.file("curve.csv") + " --svg " +
                        tmp.file("curve.svg") + " --epochs 100");
  CHECK(r.exit_code == 0);
  std::string csv = read_file(tmp.file("curve.csv"));
  CHECK(csv.rfind("epoch,p\n", 0) == 0);
  int lines = 0;
  for (char c : csv)
    if (c == '\n') ++lines;
  CHECK(lines == 102);  // header + epochs 0..100
  CHECK(csv.find("0.006737946999085467") != std::string::npos);  // p at e_m
  std::string svg = read_file(tmp.file("curve.svg"));
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("polyline") != std::string::npos);

  RunResult point = run_cli("schedule --epoch 30");
  CHECK(json::parse(point.output).at("p") == 1.0);

  CHECK(run_cli("schedule").exit_code == 2);
  CHECK(run_cli("schedule --alpha 0 --plot x.csv").exit_code == 2);
}

TEST_CASE("schedule reads the config block with flags taking precedence") {
  TempDir tmp;
  write_file(tmp.file("run.json"),
             json{{"schedule", {{"p_i", 0.8}, {"p_e", 0.2}, {"alpha", 2.0},
                                {"e_s", 0}, {"e_m", 10}}}}
                 .dump());
  RunResult r = run_cli("schedule --config " + tmp.file("run.json") + " --epoch 0");
  CHECK(r.exit_code == 0);
  CHECK(json::parse(r.output).at("p") == 0.8);
  RunResult o = run_cli("schedule --config " + tmp.file("run.json") + " --p-i 0.6 --epoch 0");
  CHECK(json::parse(o.output).at("p") == 0.6);
}

TEST_CASE("the oracle wire log captures request and response lines") {
  TempDir tmp;
  write_file(tmp.file("toy.json"), kToyBackbone);
  std::string serve = std::string(HMNAS_CLI) + " oracle-serve --backbone " + tmp.file("toy.json");
  RunResult r = run_cli("adapt --backbone " + tmp.file("toy.json") +
                        " --constraint macs:1000000 --pool-size 4 --iterations 2 --seed 1" +
                        " --n-tasks 10 --slice 3 --oracle 'cmd:" + serve + "' --oracle-log " +
                        tmp.file("wire.log"));
  CHECK(r.exit_code == 0);
  std::string log = read_file(tmp.file("wire.log"));
  CHECK(log.find("> {\"proto\":1}") != std::string::npos);
  CHECK(log.find("< {\"proto\":1}") != std::string::npos);
  CHECK(log.find("\"arch\"") != std::string::npos);
  CHECK(log.find("\"losses\"") != std::string::npos);
  // every request line has a matching response line
  int requests = 0, responses = 0;
  std::stringstream ss(log);
  std::string line;
  while (std::getline(ss, line)) {
    if (line.rfind("> ", 0) == 0 && line.find("\"arch\"") != std::string::npos) ++requests;
    if (line.rfind("< ", 0) == 0 && line.find("\"losses\"") != std::string::npos) ++responses;
  }
  CHECK(requests > 0);
  CHECK(requests == responses);
}

TEST_CASE("adapt writes result and config echo atomically") {
  TempDir tmp;
  write_file(tmp.file("toy.json"), kToyBackbone);
  RunResult r = run_cli("adapt --backbone " + tmp.file("toy.json") +
                        " --constraint macs:1000000 --pool-size 8 --iterations 5 --seed 3" +
                        " --n-tasks 30 --slice 6 --out " + tmp.file("result.json"));
  CHECK(r.exit_code == 0);
  json result = json::parse(read_file(tmp.file("result.json")));
  CHECK(result.at("best").at("metric_value").get<double>() <= 1000000);
  CHECK(result.at("audit").size() == 6);
  json echo = json::parse(read_file(tmp.file("result.config.json")));
  CHECK(echo.at("request").at("seed") == 3);

  // NAS_SEED is honored when no flag is given; a flag overrides it
  RunResult env_run = run_cli("adapt --backbone " + tmp.file("toy.json") +
                              " --constraint macs:1000000 --pool-size 8 --iterations 5" +
                              " --n-tasks 30 --slice 6 --json");
  RunResult env_run2;
  {
    std::string cmd = "NAS_SEED=3 " + std::string(HMNAS_CLI) + " adapt --backbone " +
                      tmp.file("toy.json") +
                      " --constraint macs:1000000 --pool-size 8 --iterations 5" +
                      " --n-tasks 30 --slice 6 --json 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    char buf[4096];
    while (size_t n = fread(buf, 1, sizeof(buf), pipe)) env_run2.output.append(buf, n);
    env_run2.exit_code = WEXITSTATUS(pclose(pipe));
  }
  CHECK(env_run2.exit_code == 0);
  CHECK(json::parse(env_run2.output) == result);     // NAS_SEED=3 == --seed 3
  CHECK(json::parse(env_run.output) != result);      // default seed 0 differs
}

TEST_CASE("adapt accepts a strict run config file") {
  TempDir tmp;
  write_file(tmp.file("toy.json"), kToyBackbone);
  json config{{"backbone", tmp.file("toy.json")},
              {"constraint", {{"metric", "macs"}, {"bound", 1000000}}},
              {"adaptation", {{"pool_size", 8}, {"iterations", 4}}},
              {"tasks", {{"n_tasks", 30}, {"slice_size", 6}}},
              {"seed", 11},
              {"out", tmp.file("from_config.json")}};
  write_file(tmp.file("run.json"), config.dump());
  RunResult r = run_cli("adapt --config " + tmp.file("run.json"));
  CHECK(r.exit_code == 0);
  CHECK(fs::exists(tmp.file("from_config.json")));

  config["mystery"] = 1;
  write_file(tmp.file("bad.json"), config.dump());
  RunResult bad = run_cli("adapt --config " + tmp.file("bad.json"));
  CHECK(bad.exit_code == 2);
  CHECK(bad.output.find("mystery") != std::string::npos);

  config.erase("mystery");
  config["backbone"] = tmp.file("missing.json");
  write_file(tmp.file("badref.json"), config.dump());
  CHECK(run_cli("adapt --config " + tmp.file("badref.json")).exit_code == 2);
}

TEST_CASE("adapt can evaluate through a served oracle subprocess") {
  TempDir tmp;
  write_file(tmp.file("toy.json"), kToyBackbone);
  std::string serve = std::string(HMNAS_CLI) + " oracle-serve --backbone " + tmp.file("toy.json");
  RunResult direct = run_cli("adapt --backbone " + tmp.file("toy.json") +
                             " --constraint macs:1000000 --pool-size 6 --iterations 4 --seed 9" +
                             " --n-tasks 20 --slice 4 --json");
  RunResult served = run_cli("adapt --backbone " + tmp.file("toy.json") +
                             " --constraint macs:1000000 --pool-size 6 --iterations 4 --seed 9" +
                             " --n-tasks 20 --slice 4 --json --oracle 'cmd:" + serve + "'");
  CHECK(direct.exit_code == 0);
  CHECK(served.exit_code == 0);
  CHECK(json::parse(direct.output) == json::parse(served.output));
}

TEST_CASE("pareto emits csv, svg, json, and a config echo") {
  TempDir tmp;
  write_file(tmp.file("toy.json"), kToyBackbone);
  RunResult r = run_cli("pareto --backbone " + tmp.file("toy.json") +
                        " --metric params --bounds 1,600,100000 --pool-size 8 --iterations 4" +
                        " --n-tasks 30 --slice 6 --seed 2 --out-prefix " + tmp.file("sweep"));
  CHECK(r.exit_code == 0);
  std::string csv = read_file(tmp.file("sweep.csv"));
  CHECK(csv.rfind("bound,feasible,metric_value,mean_loss,genome\n", 0) == 0);
  json points = json::parse(read_file(tmp.file("sweep.json")));
  REQUIRE(points.size() == 3);
  CHECK(points[0].contains("error"));

  // every plotted point appears in the CSV with identical numbers
  std::string svg = read_file(tmp.file("sweep.svg"));
  CHECK(svg.find("circle") != std::string::npos);
  for (const json& p : points) {
    if (!p.contains("result")) continue;
    std::string value = json(p.at("result").at("best").at("metric_value").get<double>()).dump();
    CHECK(csv.find(value) != std::string::npos);
  }
  CHECK(fs::exists(tmp.file("sweep.config.json")));
}

TEST_CASE("oracle-serve answers well-formed and malformed lines") {
  TempDir tmp;
  write_file(tmp.file("toy.json"), kToyBackbone);
  std::string cmd = "printf '%s\n' "
                    "'{\"proto\":1}' "
                    "'{\"id\":7,\"arch\":\"clitoy:d2/3,1,relu;3,1,relu\",\"tasks\":[0,1,2]}' "
                    "'this is not json' "
                    "'{\"id\":9,\"tasks\":[0]}' | " +
                    std::string(HMNAS_CLI) + " oracle-serve --backbone " + tmp.file("toy.json");
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string output;
  char buf[4096];
  while (size_t n = fread(buf, 1, sizeof(buf), pipe)) output.append(buf, n);
  pclose(pipe);

  std::vector<json> lines;
  std::stringstream ss(output);
  std::string line;
  while (std::getline(ss, line))
    if (!line.empty()) lines.push_back(json::parse(line));
  REQUIRE(lines.size() == 4);
  CHECK(lines[0].at("proto") == 1);         // handshake
  CHECK(lines[1].at("id") == 7);
  CHECK(lines[1].at("losses").size() == 3);
  CHECK(lines[2].at("id") == -1);           // malformed line
  CHECK(lines[2].contains("error"));
  CHECK(lines[3].at("id") == 9);            // missing fields, id echoed
  CHECK(lines[3].contains("error"));
}

TEST_CASE("protocol lines carry keys in the documented order") {
  TempDir tmp;
  write_file(tmp.file("toy.json"), kToyBackbone);
  std::string cmd = "printf '%s\n' "
                    "'{\"proto\":1}' "
                    "'{\"id\":3,\"arch\":\"clitoy:d1/3,1,relu;3,1,relu\",\"tasks\":[4]}' | " +
                    std::string(HMNAS_CLI) + " oracle-serve --backbone " + tmp.file("toy.json");
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string output;
  char buf[4096];
  while (size_t n = fread(buf, 1, sizeof(buf), pipe)) output.append(buf, n);
  pclose(pipe);
  CHECK(output.find("{\"proto\":1}") != std::string::npos);
  CHECK(output.find("{\"id\":3,\"losses\":[") != std::string::npos);
}
