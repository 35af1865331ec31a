#include "hydrolimit/error.hpp"

namespace hydrolimit {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::UnknownSpecies: return "UnknownSpecies";
    case Errc::ProfileNotStochastic: return "ProfileNotStochastic";
    case Errc::RatePositivity: return "RatePositivity";
    case Errc::BadN: return "BadN";
    case Errc::FoldOnOddAlphabet: return "FoldOnOddAlphabet";
    case Errc::Frozen: return "Frozen";
    case Errc::BinMismatch: return "BinMismatch";
    case Errc::GridTooCoarse: return "GridTooCoarse";
    case Errc::CflViolation: return "CflViolation";
    case Errc::OutOfRange: return "OutOfRange";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::ParseError: return "ParseError";
    case Errc::UnknownKey: return "UnknownKey";
    case Errc::ConstraintViolation: return "ConstraintViolation";
    case Errc::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace hydrolimit
