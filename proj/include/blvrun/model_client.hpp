#pragma once

#include <chrono>
#include <stdexcept>
#include <string>

namespace blvrun {

struct BackendConfig {
  std::string endpoint = "http://127.0.0.1:11434";
  std::string model_name = "blvrun";
  std::chrono::milliseconds timeout{15000};
  bool enabled = true;
};

// Throws std::invalid_argument when the endpoint is not an http:// URL or the
// timeout is not positive.
void validate(const BackendConfig& config);

class ModelError : public std::runtime_error {
 public:
  enum class Kind { Timeout, Unreachable, Protocol };

  ModelError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

const char* to_string(ModelError::Kind kind);

// POST {endpoint}/api/generate with {"model","prompt","stream":false} and
// returns the "response" field. The whole exchange is bounded by
// config.timeout; throws ModelError on failure.
std::string generate(const BackendConfig& config, const std::string& prompt);

// True iff GET {endpoint}/ answers with any status within min(timeout, 2 s).
bool health_check(const BackendConfig& config);

}  // namespace blvrun
