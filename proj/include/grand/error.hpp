#pragma once

#include <stdexcept>
#include <string>

namespace grand {

enum class ErrorCode {
  InvalidArgument,
  Parse,
  Model,
  UnboundedSet,
  Infeasible,
  NoConvergence,
  DegenerateAvailability,
  Domain,
  StepSize,
  InsufficientData,
  Io,
};

const char* to_string(ErrorCode code);

// All library failures surface as grand::Error; the C API maps code() onto
// grand_status values.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace grand
