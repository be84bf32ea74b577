#pragma once

#include <stdexcept>
#include <string>

namespace drape {

enum class ErrorCode {
  invalid_argument,
  invalid_mesh,
  no_path,
  degenerate_triangle,
  orientation,
  ambiguous_seed,
  open_mesh,
  pose_mismatch,
  self_intersection,
  solver_failure,
  io,
  schema,
};

const char* to_string(ErrorCode code);

// Every failure raised by the engine carries a machine-readable code so the
// service layer can map it onto a structured 4xx body.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace drape
