#pragma once

#include <stdexcept>
#include <string>

namespace palcas {

/// Violated precondition of a public operation (bad argument, unknown id).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Checkpoint or weight-set whose architecture signature or layout does not
/// match what the reader expects.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid experiment configuration; `line` is 1-based, 0 when unknown.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

/// Non-finite network output or loss.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A learner failed mid-round; the round is retried from its starting weights.
class AgentFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool ok, const char* what) {
  if (!ok) throw ContractError(what);
}

}  // namespace palcas
