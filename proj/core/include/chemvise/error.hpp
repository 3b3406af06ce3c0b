#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace chemvise {

// Every failure the library raises carries a kind, and each kind maps onto
// one process exit code of the command-line tool.
enum class ErrorKind {
  kConfig,      // malformed or inconsistent configuration
  kSchedule,    // non-positive exposure schedule
  kCapacity,    // more analytes than a target space can hold
  kLookup,      // unknown analyte id
  kDimension,   // shape mismatch between vectors, traces or models
  kRange,       // window or index outside its container
  kParse,       // malformed file content
  kIo,          // filesystem failure
  kDegenerate,  // data the algorithm cannot use (single class, zero variance)
  kHygiene,     // holdout data touched before hyperparameters were frozen
  kNumeric,     // NaN/Inf in inputs or parameters
  kTraining,    // divergence during optimisation
};

std::string_view to_string(ErrorKind kind);

// 2 config/validation, 3 data/parse, 4 numeric/training.
int exit_code(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void raise(ErrorKind kind, const std::string& message);

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) raise(kind, message);
}

}  // namespace chemvise
