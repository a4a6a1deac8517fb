#pragma once

#include <stdexcept>
#include <string>

namespace lmcf {

enum class ErrorCode {
  kInvalidCurve,
  kDegenerateCurve,
  kSingularAngle,
  kSingularForcing,
  kStall,
  kNumericalBlowup,
  kUnsupportedSurgery,
  kInfeasible,
  kShootingBracket,
  kBranch,
  kConfig,
  kIo,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace lmcf
