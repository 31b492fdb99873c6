#pragma once

#include <string>

#include "json.hpp"

namespace el {

inline constexpr const char* kArtifactVersion = "0.1.0";

// Config document:
//   {"command": "...", "seed": int, "out": "dir", "params": {...}}
// Keys are emitted in sorted order, so manifests diff cleanly.
nlohmann::json normalize_config(const nlohmann::json& config);  // validates and fills defaults

struct RunResult {
  nlohmann::json manifest;
  int status = 0;  // 0 all certificates pass, 1 a certificate failed, 3 pipeline error
  std::string message;
};

// Throws Error(invalid_argument | unknown_command) for bad configs; pipeline
// failures are reported in the result with the failing stage named.
RunResult run(const nlohmann::json& config);

std::string sha256_hex(const std::string& bytes);

}  // namespace el
