#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "epstein_lab/error.hpp"
#include "epstein_lab/run.hpp"

using namespace el;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / "epstein_lab_test_run" / name;
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string config_error(const json& cfg, ErrorCode expect = ErrorCode::invalid_argument) {
  try {
    normalize_config(cfg);
  } catch (const Error& e) {
    CHECK(e.code() == expect);
    return e.what();
  }
  FAIL("config was accepted: " << cfg.dump());
  return {};
}

}  // namespace

TEST_SUITE("run") {

TEST_CASE("sha256 known answers") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("config normalization fills defaults") {
  json n = normalize_config({{"command", "cmc-foliate"}});
  CHECK(n["seed"] == 1);
  CHECK(n["out"] == "out");
  CHECK(n["params"]["backend"] == "disk");
  CHECK(n["params"]["h_lo"] == -0.9);
  CHECK(n["params"]["steps"] == 19);
  json t = normalize_config({{"command", "torus-line"}, {"seed", 5}, {"params", {{"F", {2, 1, 0.5}}}}});
  CHECK(t["seed"] == 5);
  CHECK(t["params"]["F"] == json::array({2, 1, 0.5}));
  CHECK(t["params"]["G"] == json::array({0, 1, 1.0}));
  CHECK(t["params"].contains("t_grid"));
  // normalization is idempotent
  CHECK(normalize_config(t) == t);
}

TEST_CASE("config errors name the field") {
  CHECK(config_error({{"command", "cmc-foliate"}, {"params", {{"h_lo", 1.5}}}}).find("params.h_lo") != std::string::npos);
  CHECK(config_error({{"command", "cmc-foliate"}, {"params", {{"h_lo", 0.5}, {"h_hi", 0.1}}}}).find("params.h_lo") !=
        std::string::npos);
  CHECK(config_error({{"command", "cmc-foliate"}, {"params", {{"backend", "sphere"}}}}).find("params.backend") !=
        std::string::npos);
  CHECK(config_error({{"command", "torus-line"}, {"params", {{"bogus", 1}}}}).find("params.bogus") != std::string::npos);
  CHECK(config_error({{"command", "torus-critical"}, {"params", {{"F", {1.5, 0, 1}}}}}).find("params.F") !=
        std::string::npos);
  CHECK(config_error({{"command", "minimal-path"}, {"params", {{"s_list", {0.01, -1}}}}}).find("params.s_list") !=
        std::string::npos);
  CHECK(config_error({{"command", "selftest"}, {"seed", -3}}).find("seed") != std::string::npos);
  CHECK(config_error({{"command", "selftest"}, {"extra", 1}}).find("extra") != std::string::npos);
  CHECK(config_error({{"seed", 1}}).find("command") != std::string::npos);
  CHECK(config_error(json::array()).find("object") != std::string::npos);
  CHECK(config_error({{"command", "flat-periods"}, {"params", {{"surface", "none.json"}}}}).find("params.cycles") !=
        std::string::npos);
  CHECK(config_error({{"command", "launch"}}, ErrorCode::unknown_command).find("launch") != std::string::npos);
}

TEST_CASE("run writes a manifest with a checked file inventory") {
  fs::path out = scratch("torus");
  RunResult r = run({{"command", "torus-critical"}, {"out", out.string()}});
  CHECK(r.status == 0);
  const json& m = r.manifest;
  CHECK(m["status"] == "pass");
  CHECK(m["artifact_version"] == kArtifactVersion);
  CHECK(m["seed"] == 1);
  CHECK(m["config"] == normalize_config({{"command", "torus-critical"}, {"out", out.string()}}));
  REQUIRE(!m["certificates"].empty());
  for (const auto& c : m["certificates"]) CHECK(c["pass"] == true);
  REQUIRE(!m["files"].empty());
  std::string prev;
  for (const auto& f : m["files"]) {
    std::string rel = f["path"];
    CHECK(rel > prev);
    prev = rel;
    std::string bytes = slurp(out / rel);
    CHECK(f["bytes"] == bytes.size());
    CHECK(f["sha256"] == sha256_hex(bytes));
  }
  CHECK(json::parse(slurp(out / "manifest.json")) == m);
}

TEST_CASE("pipeline errors carry the stage") {
  fs::path out = scratch("not_filling");
  RunResult r = run({{"command", "torus-critical"}, {"out", out.string()}, {"params", {{"G", {2, 0, 1}}}}});
  CHECK(r.status == 3);
  CHECK(r.manifest["status"] == "error");
  CHECK(r.message.find("stage '") == 0);
  CHECK(r.message.find("fill") != std::string::npos);
  CHECK(fs::exists(out / "manifest.json"));
}

TEST_CASE("identical configs give identical bytes") {
  json cfg = {{"command", "cmc-foliate"},
              {"out", scratch("det").string()},
              {"seed", 4},
              {"params", {{"backend", "disk"}, {"n", 41}, {"steps", 5}}}};
  RunResult a = run(cfg);
  std::string first = slurp(fs::path(cfg["out"].get<std::string>()) / "manifest.json");
  RunResult b = run(cfg);
  std::string second = slurp(fs::path(cfg["out"].get<std::string>()) / "manifest.json");
  CHECK(a.status == 0);
  CHECK(first == second);
  CHECK(a.manifest["files"] == b.manifest["files"]);
}

}
