#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hydrolimit {

enum class Errc {
  LengthMismatch,
  UnknownSpecies,
  ProfileNotStochastic,
  RatePositivity,
  BadN,
  FoldOnOddAlphabet,
  Frozen,
  BinMismatch,
  GridTooCoarse,
  CflViolation,
  OutOfRange,
  InvalidArgument,
  ParseError,
  UnknownKey,
  ConstraintViolation,
  IoError,
};

std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  [[nodiscard]] Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace hydrolimit
