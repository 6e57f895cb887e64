#pragma once

#include <stdexcept>
#include <string>

namespace smagdi {

// Contract/validation failures (bad arguments, malformed inputs).
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

// Malformed serialized data; carries a JSON-path-style locator like "$.edges".
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::string path)
      : std::runtime_error(what + " at " + path), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

// Backend transport failure. Carries the agent/round it interrupted.
class BackendError : public std::runtime_error {
 public:
  explicit BackendError(const std::string& what, bool retryable = true,
                        std::string agent_id = {}, int round = 0)
      : std::runtime_error(what),
        retryable_(retryable),
        agent_id_(std::move(agent_id)),
        round_(round) {}

  bool retryable() const noexcept { return retryable_; }
  const std::string& agent_id() const noexcept { return agent_id_; }
  int round() const noexcept { return round_; }

 private:
  bool retryable_;
  std::string agent_id_;
  int round_;
};

// Non-finite values where finite ones are required (e.g. NaN loss components).
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace smagdi
