#pragma once

#include <stdexcept>
#include <string>

namespace masklab {

enum class Errc {
  NegativeProbability,
  NotNormalized,
  RewardOutOfRange,
  BadRho,
  EmptyStratum,
  DimensionMismatch,
  SameStratum,
  RhoTooLarge,
  DegenerateNormalization,
  NoUsableStrata,
  MalformedProgram,
  DomainError,
  MissingColumn,
  NonBinaryProtected,
  EmptyTable,
  DegenerateCovariate,
  ParseError,
  IoError,
};

const char* to_string(Errc code) noexcept;

/// Library-wide exception. `code()` identifies the failed check, the
/// message names the offending field/index.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message);
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] void fail(Errc code, const std::string& message);

}  // namespace masklab
