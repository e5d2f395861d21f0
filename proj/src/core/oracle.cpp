#include "core/oracle.hpp"

#include <cerrno>
#include <cmath>
#include <csignal>
#include <cstring>
#include <fstream>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#include <nlohmann/json.hpp>

#include "core/cost_model.hpp"
#include "core/errors.hpp"
#include "core/rng.hpp"

namespace hmnas {

using nlohmann::json;

void require_valid_task_set(const TaskSet& t) {
  if (t.n_tasks < 1) throw Error(ErrorCode::validation, "task set: n_tasks must be >= 1");
  if (t.slice_size < 1 || t.slice_size > t.n_tasks)
    throw Error(ErrorCode::validation, "task set: slice_size must be in [1, n_tasks]");
}

SurrogateOracle::SurrogateOracle(const Backbone& backbone, SurrogateParams params)
    : backbone_(backbone), params_(params) {
  require_valid_backbone(backbone_);
  if (params_.lambda < 0)
    throw Error(ErrorCode::validation, "surrogate lambda must be >= 0");
  int64_t min_params = count_costs(backbone_, smallest(backbone_)).params;
  int64_t max_params = count_costs(backbone_, largest(backbone_)).params;
  log_min_params_ = std::log(static_cast<double>(min_params));
  log_max_params_ = std::log(static_cast<double>(max_params));
}

double SurrogateOracle::capacity(const Architecture& arch) const {
  double lp = std::log(static_cast<double>(count_costs(backbone_, arch).params));
  if (log_max_params_ <= log_min_params_) return 0.5;
  double c = (lp - log_min_params_) / (log_max_params_ - log_min_params_);
  return std::min(1.0, std::max(0.0, c));
}

double SurrogateOracle::difficulty(int64_t task_id) const {
  uint64_t h = splitmix64(static_cast<uint64_t>(task_id) ^
                          splitmix64(params_.difficulty_seed ^ 0xd1f0ULL));
  return unit_double(h);
}

double SurrogateOracle::loss(const Architecture& arch, int64_t task_id) const {
  double gap = capacity(arch) - difficulty(task_id);
  std::string genome = encode(arch);
  uint64_t h = splitmix64(fnv1a(genome.data(), genome.size()) ^
                          splitmix64(static_cast<uint64_t>(task_id) ^ params_.difficulty_seed));
  return gap * gap + params_.lambda * unit_double(h);
}

double SurrogateOracle::loss_for_genome(const std::string& genome, int64_t task_id) const {
  return loss(decode(backbone_, genome), task_id);
}

namespace {

void validate_losses(const std::string& genome, size_t expected, const std::vector<double>& losses) {
  if (losses.size() != expected)
    throw Error(ErrorCode::oracle, "oracle returned " + std::to_string(losses.size()) +
                                       " losses for " + std::to_string(expected) +
                                       " tasks (genome " + genome + ")");
  for (double l : losses) {
    if (!std::isfinite(l) || l < 0)
      throw Error(ErrorCode::oracle,
                  "oracle returned a non-finite or negative loss for genome " + genome);
  }
}

class SurrogateClient final : public OracleClient {
 public:
  SurrogateClient(const Backbone& backbone, SurrogateParams params)
      : oracle_(backbone, params) {}

  std::vector<double> eval(const std::string& genome, std::span<const int64_t> tasks) override {
    Architecture arch = decode(oracle_.backbone(), genome);
    std::vector<double> out;
    out.reserve(tasks.size());
    for (int64_t t : tasks) out.push_back(oracle_.loss(arch, t));
    validate_losses(genome, tasks.size(), out);
    return out;
  }

  std::string describe() const override { return "surrogate"; }

 private:
  SurrogateOracle oracle_;
};

class SubprocessClient final : public OracleClient {
 public:
  SubprocessClient(std::vector<std::string> argv, int timeout_ms, std::string log_path)
      : argv_(std::move(argv)), timeout_ms_(timeout_ms) {
    if (argv_.empty()) throw Error(ErrorCode::invalid_argument, "oracle command is empty");
    if (!log_path.empty()) {
      log_.open(log_path, std::ios::app);
      if (!log_) throw Error(ErrorCode::io, "cannot open oracle log: " + log_path);
    }
    spawn();
    // Handshake: announce ourselves, then require the peer's announcement.
    write_line(json{{"proto", 1}}.dump());
    json hello = read_json_line("handshake");
    if (!hello.is_object() || hello.value("proto", 0) != 1)
      fail("oracle handshake rejected: " + hello.dump());
  }

  ~SubprocessClient() override {
    if (stdin_fd_ >= 0) close(stdin_fd_);
    if (stdout_fd_ >= 0) close(stdout_fd_);
    if (pid_ > 0) {
      kill(pid_, SIGTERM);
      int status = 0;
      waitpid(pid_, &status, 0);
    }
  }

  std::vector<double> eval(const std::string& genome, std::span<const int64_t> tasks) override {
    // documented line format, keys in order: {"id":..,"arch":..,"tasks":[..]}
    nlohmann::ordered_json request{{"id", next_id_}, {"arch", genome},
                                   {"tasks", nlohmann::ordered_json::array()}};
    for (int64_t t : tasks) request["tasks"].push_back(t);
    std::string line = request.dump();
    write_line(line);
    json response = read_json_line(line);
    if (!response.is_object() || !response.contains("id") || !response.contains("losses"))
      fail("malformed oracle response " + response.dump() + " to query " + line);
    if (response.at("id").get<int64_t>() != next_id_)
      fail("oracle response id mismatch: query " + line + ", response " + response.dump());
    ++next_id_;
    std::vector<double> losses;
    for (const json& l : response.at("losses")) {
      if (!l.is_number()) fail("non-numeric loss in response to " + line);
      losses.push_back(l.get<double>());
    }
    validate_losses(genome, tasks.size(), losses);
    return losses;
  }

  std::string describe() const override {
    std::string out = "cmd:";
    for (size_t i = 0; i < argv_.size(); ++i) out += (i ? " " : "") + argv_[i];
    return out;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) { throw Error(ErrorCode::oracle, msg); }

  void spawn() {
    int to_child[2];
    int from_child[2];
    if (pipe(to_child) != 0 || pipe(from_child) != 0)
      throw Error(ErrorCode::internal, "pipe() failed");
    pid_ = fork();
    if (pid_ < 0) throw Error(ErrorCode::internal, "fork() failed");
    if (pid_ == 0) {
      dup2(to_child[0], STDIN_FILENO);
      dup2(from_child[1], STDOUT_FILENO);
      close(to_child[0]);
      close(to_child[1]);
      close(from_child[0]);
      close(from_child[1]);
      std::vector<char*> args;
      for (const std::string& a : argv_) args.push_back(const_cast<char*>(a.c_str()));
      args.push_back(nullptr);
      execvp(args[0], args.data());
      std::perror("execvp");
      _exit(127);
    }
    close(to_child[0]);
    close(from_child[1]);
    stdin_fd_ = to_child[1];
    stdout_fd_ = from_child[0];
  }

  void write_line(const std::string& line) {
    if (log_.is_open()) log_ << "> " << line << "\n" << std::flush;
    std::string payload = line + "\n";
    size_t off = 0;
    while (off < payload.size()) {
      ssize_t n = write(stdin_fd_, payload.data() + off, payload.size() - off);
      if (n < 0) {
        if (errno == EINTR) continue;
        fail("oracle pipe write failed: " + std::string(std::strerror(errno)));
      }
      off += static_cast<size_t>(n);
    }
  }

  std::string read_line(const std::string& context) {
    for (;;) {
      size_t nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        if (log_.is_open()) log_ << "< " << line << "\n" << std::flush;
        return line;
      }
      pollfd pfd{stdout_fd_, POLLIN, 0};
      int ready = poll(&pfd, 1, timeout_ms_);
      if (ready == 0) fail("oracle timed out after " + std::to_string(timeout_ms_) +
                           " ms awaiting response to " + context);
      if (ready < 0) {
        if (errno == EINTR) continue;
        fail("oracle poll failed: " + std::string(std::strerror(errno)));
      }
      char chunk[4096];
      ssize_t n = read(stdout_fd_, chunk, sizeof(chunk));
      if (n == 0) fail("oracle closed its output while handling " + context);
      if (n < 0) {
        if (errno == EINTR) continue;
        fail("oracle pipe read failed: " + std::string(std::strerror(errno)));
      }
      buffer_.append(chunk, static_cast<size_t>(n));
    }
  }

  json read_json_line(const std::string& context) {
    std::string line = read_line(context);
    try {
      return json::parse(line);
    } catch (const json::exception&) {
      fail("oracle emitted a non-JSON line '" + line + "' while handling " + context);
    }
  }

  std::vector<std::string> argv_;
  int timeout_ms_;
  pid_t pid_ = -1;
  int stdin_fd_ = -1;
  int stdout_fd_ = -1;
  int64_t next_id_ = 0;
  std::string buffer_;
  std::ofstream log_;
};

}  // namespace

std::unique_ptr<OracleClient> make_surrogate_client(const Backbone& backbone,
                                                    SurrogateParams params) {
  return std::make_unique<SurrogateClient>(backbone, params);
}

std::unique_ptr<OracleClient> make_subprocess_client(std::vector<std::string> argv,
                                                     int timeout_ms, std::string log_path) {
  return std::make_unique<SubprocessClient>(std::move(argv), timeout_ms, std::move(log_path));
}

}  // namespace hmnas
