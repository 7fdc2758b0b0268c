#pragma once

#include <stdexcept>
#include <string>

namespace carpetdim {

enum class ErrorCode {
  InvalidSystem,
  EmptyInput,
  RatioOutOfRange,
  NotBMType,
  NotOnSimplex,
  NotInterior,
  NonRationalInput,
  NonHomogeneous,
  BudgetExceeded,
  InternalInequalityViolation,
  DegenerateLogs,
  InvalidArgument,
};

const char* to_string(ErrorCode code);

class CarpetError : public std::runtime_error {
 public:
  CarpetError(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace carpetdim
