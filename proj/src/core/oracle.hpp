#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "core/search_space.hpp"

namespace hmnas {

struct TaskSet {
  std::string name = "val";
  int64_t n_tasks = 600;   // validation tasks available for adaptation
  int slice_size = 16;     // tasks drawn per GA iteration
  uint64_t rng_seed = 0;
};

void require_valid_task_set(const TaskSet& tasks);

struct SurrogateParams {
  double lambda = 0.05;         // hash-noise weight
  uint64_t difficulty_seed = 0; // seeds the per-task difficulty draw
};

// Deterministic stand-in for a meta-learned task loss. The loss is a
// capacity-matching quadratic: architectures whose normalized log-parameter
// count is far from the task's difficulty score poorly in either direction,
// plus bounded hash noise keyed on (genome, task). Uses only integer
// hashing and fixed-order IEEE arithmetic, so results are bitwise
// reproducible across platforms.
class SurrogateOracle {
 public:
  SurrogateOracle(const Backbone& backbone, SurrogateParams params);

  double loss(const Architecture& arch, int64_t task_id) const;
  double loss_for_genome(const std::string& genome, int64_t task_id) const;

  // Normalized log-capacity in [0, 1] over the backbone's space.
  double capacity(const Architecture& arch) const;
  double difficulty(int64_t task_id) const;

  const Backbone& backbone() const { return backbone_; }
  const SurrogateParams& params() const { return params_; }

 private:
  Backbone backbone_;
  SurrogateParams params_;
  double log_min_params_ = 0.0;
  double log_max_params_ = 0.0;
};

// Evaluation boundary used by the adaptation loop: one genome, a batch of
// task ids, one loss per task. Responses are validated to be finite, >= 0,
// and of matching length.
class OracleClient {
 public:
  virtual ~OracleClient() = default;
  virtual std::vector<double> eval(const std::string& genome, std::span<const int64_t> tasks) = 0;
  virtual std::string describe() const = 0;
};

std::unique_ptr<OracleClient> make_surrogate_client(const Backbone& backbone,
                                                    SurrogateParams params);

// Speaks the newline-delimited JSON protocol with a subprocess:
//   handshake (both sides):  {"proto":1}
//   request:                 {"id":<int>,"arch":"<genome>","tasks":[<int>...]}
//   response:                {"id":<int>,"losses":[<float>...]}
// Malformed responses, timeouts, and non-finite losses raise Error{oracle}
// echoing the offending query. When log_path is non-empty every protocol
// line is appended there as it crosses the pipe (flushed per line, so the
// log is complete up to the failure point if the run aborts).
std::unique_ptr<OracleClient> make_subprocess_client(std::vector<std::string> argv,
                                                     int timeout_ms = 60000,
                                                     std::string log_path = {});

}  // namespace hmnas
