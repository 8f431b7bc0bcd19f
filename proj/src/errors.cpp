#include "masklab/errors.hpp"

namespace masklab {

const char* to_string(Errc code) noexcept {
  switch (code) {
    case Errc::NegativeProbability: return "NegativeProbability";
    case Errc::NotNormalized: return "NotNormalized";
    case Errc::RewardOutOfRange: return "RewardOutOfRange";
    case Errc::BadRho: return "BadRho";
    case Errc::EmptyStratum: return "EmptyStratum";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::SameStratum: return "SameStratum";
    case Errc::RhoTooLarge: return "RhoTooLarge";
    case Errc::DegenerateNormalization: return "DegenerateNormalization";
    case Errc::NoUsableStrata: return "NoUsableStrata";
    case Errc::MalformedProgram: return "MalformedProgram";
    case Errc::DomainError: return "DomainError";
    case Errc::MissingColumn: return "MissingColumn";
    case Errc::NonBinaryProtected: return "NonBinaryProtected";
    case Errc::EmptyTable: return "EmptyTable";
    case Errc::DegenerateCovariate: return "DegenerateCovariate";
    case Errc::ParseError: return "ParseError";
    case Errc::IoError: return "IoError";
  }
  return "UnknownError";
}

Error::Error(Errc code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

void fail(Errc code, const std::string& message) { throw Error(code, message); }

}  // namespace masklab
