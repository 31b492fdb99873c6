#include "epstein_lab/error.hpp"

namespace el {

const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::domain: return "domain";
    case ErrorCode::singular: return "singular";
    case ErrorCode::degenerate: return "degenerate";
    case ErrorCode::not_converged: return "not_converged";
    case ErrorCode::divergence: return "divergence";
    case ErrorCode::certificate: return "certificate";
    case ErrorCode::io: return "io";
    case ErrorCode::unknown_command: return "unknown_command";
    case ErrorCode::outside_collar: return "outside_collar";
    case ErrorCode::not_filling: return "not_filling";
    case ErrorCode::chart_mismatch: return "chart_mismatch";
    case ErrorCode::internal: return "internal";
  }
  return "unknown";
}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace el
