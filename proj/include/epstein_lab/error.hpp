#pragma once

#include <stdexcept>
#include <string>

namespace el {

enum class ErrorCode {
  invalid_argument = 1,
  domain,
  singular,
  degenerate,
  not_converged,
  divergence,
  certificate,
  io,
  unknown_command,
  outside_collar,
  not_filling,
  chart_mismatch,
  internal = 99
};

const char* error_code_name(ErrorCode c);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

}  // namespace el
