#include "carpetdim/error.hpp"

namespace carpetdim {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidSystem: return "InvalidSystem";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::RatioOutOfRange: return "RatioOutOfRange";
    case ErrorCode::NotBMType: return "NotBMType";
    case ErrorCode::NotOnSimplex: return "NotOnSimplex";
    case ErrorCode::NotInterior: return "NotInterior";
    case ErrorCode::NonRationalInput: return "NonRationalInput";
    case ErrorCode::NonHomogeneous: return "NonHomogeneous";
    case ErrorCode::BudgetExceeded: return "BudgetExceeded";
    case ErrorCode::InternalInequalityViolation: return "InternalInequalityViolation";
    case ErrorCode::DegenerateLogs: return "DegenerateLogs";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace carpetdim
