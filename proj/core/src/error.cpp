#include "chemvise/error.hpp"

namespace chemvise {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kSchedule: return "schedule";
    case ErrorKind::kCapacity: return "capacity";
    case ErrorKind::kLookup: return "lookup";
    case ErrorKind::kDimension: return "dimension";
    case ErrorKind::kRange: return "range";
    case ErrorKind::kParse: return "parse";
    case ErrorKind::kIo: return "io";
    case ErrorKind::kDegenerate: return "degenerate";
    case ErrorKind::kHygiene: return "hygiene";
    case ErrorKind::kNumeric: return "numeric";
    case ErrorKind::kTraining: return "training";
  }
  return "unknown";
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
    case ErrorKind::kSchedule:
    case ErrorKind::kCapacity:
    case ErrorKind::kLookup:
    case ErrorKind::kDimension:
    case ErrorKind::kRange:
      return 2;
    case ErrorKind::kParse:
    case ErrorKind::kIo:
    case ErrorKind::kDegenerate:
    case ErrorKind::kHygiene:
      return 3;
    case ErrorKind::kNumeric:
    case ErrorKind::kTraining:
      return 4;
  }
  return 1;
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + " error: " + message), kind_(kind) {}

void raise(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace chemvise
