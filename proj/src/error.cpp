#include "grand/error.hpp"

namespace grand {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid argument";
    case ErrorCode::Parse: return "parse error";
    case ErrorCode::Model: return "model error";
    case ErrorCode::UnboundedSet: return "unbounded configuration set";
    case ErrorCode::Infeasible: return "infeasible";
    case ErrorCode::NoConvergence: return "no convergence";
    case ErrorCode::DegenerateAvailability: return "degenerate availability";
    case ErrorCode::Domain: return "domain error";
    case ErrorCode::StepSize: return "step-size error";
    case ErrorCode::InsufficientData: return "insufficient data";
    case ErrorCode::Io: return "i/o error";
  }
  return "error";
}

}  // namespace grand
