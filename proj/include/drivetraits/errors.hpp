#pragma once

#include <stdexcept>
#include <string>

namespace drivetraits {

// Every failure the library reports carries a stable machine-readable kind
// so the CLI can emit structured error JSON.
class Error : public std::runtime_error {
public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const { return kind_; }

private:
  std::string kind_;
};

struct ParseError : Error {
  explicit ParseError(const std::string& msg) : Error("parse", msg) {}
};

struct SchemaError : Error {
  explicit SchemaError(const std::string& msg) : Error("schema", msg) {}
};

struct ValidationError : Error {
  explicit ValidationError(const std::string& msg) : Error("validation", msg) {}
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& msg) : Error("config", msg) {}
};

struct IoError : Error {
  explicit IoError(const std::string& msg) : Error("io", msg) {}
};

struct InsufficientDataError : Error {
  explicit InsufficientDataError(const std::string& msg)
      : Error("insufficient_data", msg) {}
};

struct ConsistencyError : Error {
  explicit ConsistencyError(const std::string& msg) : Error("consistency", msg) {}
};

struct ConvergenceError : Error {
  explicit ConvergenceError(const std::string& msg) : Error("convergence", msg) {}
};

struct DegenerateError : Error {
  explicit DegenerateError(const std::string& msg) : Error("degenerate", msg) {}
};

struct UndefinedValueError : Error {
  explicit UndefinedValueError(const std::string& msg) : Error("undefined", msg) {}
};

struct UnsupportedKindError : Error {
  explicit UnsupportedKindError(const std::string& msg)
      : Error("unsupported_kind", msg) {}
};

struct EmptyMatrixError : Error {
  explicit EmptyMatrixError(const std::string& msg) : Error("empty_matrix", msg) {}
};

}  // namespace drivetraits
