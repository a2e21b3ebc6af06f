#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace ctra::llm {

class LlmError : public std::runtime_error {
 public:
  enum class Kind { transport, timeout, replay_miss, bad_response };

  LlmError(Kind kind, std::string message) : std::runtime_error(std::move(message)), kind_(kind) {}

  Kind kind() const { return kind_; }

  std::optional<int> http_status;
  /// Seconds from a Retry-After header, when the server sent one.
  std::optional<double> retry_after;
  /// Set for replay misses.
  std::string prompt_hash;

 private:
  Kind kind_;
};

class ExtractError : public std::runtime_error {
 public:
  enum class Kind { no_json_found, wrong_shape, no_select_found };

  ExtractError(Kind kind, std::string message) : std::runtime_error(std::move(message)), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

}  // namespace ctra::llm
