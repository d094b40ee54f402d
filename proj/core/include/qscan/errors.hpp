#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qscan {

// Every failure the library raises on purpose derives from Error and carries
// a short machine-parsable class slug next to the human message. The CLI
// prints "error[<slug>]: <message>" and exits nonzero.
class Error : public std::runtime_error {
public:
  Error(std::string slug, const std::string& msg)
      : std::runtime_error(msg), slug_(std::move(slug)) {}
  const std::string& error_class() const noexcept { return slug_; }

private:
  std::string slug_;
};

struct DimensionError : Error {
  explicit DimensionError(const std::string& msg) : Error("dimension-mismatch", msg) {}
};

struct SingularDesignError : Error {
  explicit SingularDesignError(const std::string& msg) : Error("singular-design", msg) {}
};

struct DegenerateVarianceError : Error {
  explicit DegenerateVarianceError(const std::string& msg) : Error("degenerate-variance", msg) {}
};

struct SeparationError : Error {
  explicit SeparationError(const std::string& msg) : Error("separation", msg) {}
};

// IRLS gave up; keeps the per-iteration max coefficient change so the caller
// can see whether it was oscillating or crawling.
struct ConvergenceError : Error {
  ConvergenceError(const std::string& msg, std::vector<double> trace)
      : Error("no-convergence", msg), iteration_trace(std::move(trace)) {}
  std::vector<double> iteration_trace;
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& msg) : Error("config-error", msg) {}
};

struct DegenerateWindowError : Error {
  explicit DegenerateWindowError(const std::string& msg) : Error("degenerate-window", msg) {}
};

struct NoValidWindowError : Error {
  explicit NoValidWindowError(const std::string& msg) : Error("no-valid-window", msg) {}
};

struct NoVariantsError : Error {
  explicit NoVariantsError(const std::string& msg) : Error("no-variants", msg) {}
};

struct NotPositiveDefiniteError : Error {
  explicit NotPositiveDefiniteError(const std::string& msg) : Error("not-positive-definite", msg) {}
};

struct PlacementError : Error {
  explicit PlacementError(const std::string& msg) : Error("placement-error", msg) {}
};

struct SamplingError : Error {
  explicit SamplingError(const std::string& msg) : Error("sampling-error", msg) {}
};

// Parse failures point at the offending file, line and (when known) record.
struct ParseError : Error {
  ParseError(const std::string& file, long line, const std::string& msg)
      : Error("parse-error", file + ":" + std::to_string(line) + ": " + msg),
        source_file(file), source_line(line) {}
  std::string source_file;
  long source_line;
};

struct FormatError : Error {
  explicit FormatError(const std::string& msg) : Error("format-error", msg) {}
};

struct IoError : Error {
  explicit IoError(const std::string& msg) : Error("io-error", msg) {}
};

struct UsageError : Error {
  explicit UsageError(const std::string& msg) : Error("usage-error", msg) {}
};

}  // namespace qscan
