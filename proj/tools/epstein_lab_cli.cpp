// Command-line front end. Flags compile into a JSON config that goes through
// el_run, so the CLI and library callers share one code path.
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "epstein_lab/epstein_lab.h"

using nlohmann::json;

namespace {

enum Exit { kPass = 0, kCertificate = 1, kBadConfig = 2, kPipeline = 3 };

struct Command {
  CLI::App* app = nullptr;
  std::string config_file;
  std::string out;
  std::optional<long long> seed;
  std::map<std::string, std::optional<double>> numbers;
  std::map<std::string, std::optional<int>> integers;
  std::map<std::string, std::optional<std::string>> texts;
  std::map<std::string, std::vector<double>> lists;
  std::map<std::string, std::vector<std::string>> triples;  // "--F m n w"
};

// Flag name with dashes -> params key with underscores.
std::string key_of(const std::string& flag) {
  std::string k = flag;
  for (char& c : k)
    if (c == '-') c = '_';
  return k;
}

void add_number(Command& c, const std::string& flag, const std::string& help) {
  c.app->add_option("--" + flag, c.numbers[key_of(flag)], help)->allow_extra_args(false);
}
void add_integer(Command& c, const std::string& flag, const std::string& help) {
  c.app->add_option("--" + flag, c.integers[key_of(flag)], help);
}
void add_text(Command& c, const std::string& flag, const std::string& help) {
  c.app->add_option("--" + flag, c.texts[key_of(flag)], help);
}
void add_list(Command& c, const std::string& flag, const std::string& help) {
  c.app->add_option("--" + flag, c.lists[key_of(flag)], help)->expected(1, 64);
}
void add_triple(Command& c, const std::string& flag, const std::string& help) {
  c.app->add_option("--" + flag, c.triples[flag], help)->expected(3);
}

json compile(const Command& c) {
  json cfg = json::object();
  if (!c.config_file.empty()) {
    std::ifstream in(c.config_file);
    if (!in) throw std::runtime_error("cannot read config file '" + c.config_file + "'");
    try {
      cfg = json::parse(in);
    } catch (const json::parse_error& e) {
      throw std::runtime_error("config file is not valid JSON: " + std::string(e.what()));
    }
    if (!cfg.is_object()) throw std::runtime_error("config file must hold a JSON object");
  }
  cfg["command"] = c.app->get_name();
  if (c.seed) cfg["seed"] = *c.seed;
  if (!c.out.empty()) cfg["out"] = c.out;
  json& p = cfg["params"];
  if (p.is_null()) p = json::object();
  for (const auto& [k, v] : c.numbers)
    if (v) p[k] = *v;
  for (const auto& [k, v] : c.integers)
    if (v) p[k] = *v;
  for (const auto& [k, v] : c.texts)
    if (v) p[k] = *v;
  for (const auto& [k, v] : c.lists)
    if (!v.empty()) p[k] = v;
  for (const auto& [k, v] : c.triples) {
    if (v.empty()) continue;
    // integers stay integers so the config validator can check them
    json t = json::array();
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i < 2) {
        std::size_t used = 0;
        long long n = 0;
        try {
          n = std::stoll(v[i], &used);
        } catch (const std::exception&) {
          used = 0;
        }
        if (used != v[i].size()) throw std::runtime_error("field 'params." + k + "': m and n must be integers");
        t.push_back(n);
      } else {
        t.push_back(std::stod(v[i]));
      }
    }
    p[k] = t;
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical laboratory for Epstein surfaces, CMC foliations and measured foliations"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(el_version()));

  std::vector<Command> cmds(8);
  const char* names[] = {"epstein-surface", "cmc-foliate",  "minimal-path", "halfpipe-limit",
                         "torus-critical",  "torus-line",   "flat-periods", "selftest"};
  const char* blurbs[] = {"Epstein surface of a conformal metric, with curvature checks",
                          "CMC foliation by Newton continuation in H",
                          "Gauss-equation path of minimal surfaces and its data at infinity",
                          "Half-pipe limit of a rescaled holonomy path",
                          "Critical point of ext(F) + ext(G) on the torus moduli space",
                          "Teichmueller line p(sqrt(t) F, G / sqrt(t)) on the torus",
                          "Periods of a flat polygon surface",
                          "Small deterministic run of every pipeline"};
  for (std::size_t i = 0; i < cmds.size(); ++i) {
    Command& c = cmds[i];
    c.app = app.add_subcommand(names[i], blurbs[i]);
    c.app->add_option("--config", c.config_file, "JSON config; flags override its params");
    c.app->add_option("--out", c.out, "output directory");
    c.app->add_option("--seed", c.seed, "seed for randomized data");
  }
  add_text(cmds[0], "metric", "flat | scaled-flat | poincare | scaled-poincare | perturbed-poincare");
  add_number(cmds[0], "t", "log scale factor");
  add_integer(cmds[0], "n", "grid points per side");
  add_number(cmds[0], "half", "half width of the chart");
  add_number(cmds[0], "amplitude", "perturbation amplitude");

  add_text(cmds[1], "backend", "homogeneous | mesh | disk");
  add_number(cmds[1], "phi-scale", "size of the quadratic differential");
  add_number(cmds[1], "h-lo", "lowest mean curvature");
  add_number(cmds[1], "h-hi", "highest mean curvature");
  add_integer(cmds[1], "steps", "number of leaves");
  add_number(cmds[1], "tol", "Newton tolerance");
  add_integer(cmds[1], "n", "disk grid points per side");
  add_number(cmds[1], "half", "disk patch half width");
  add_integer(cmds[1], "subdiv", "mesh refinement level");
  add_integer(cmds[1], "probe-stride", "spacing of separation probes");

  add_integer(cmds[2], "subdiv", "mesh refinement level");
  add_number(cmds[2], "detq-scale", "size of det Re q");
  add_list(cmds[2], "s-list", "path parameters");
  add_number(cmds[2], "tol", "Newton tolerance");

  add_text(cmds[3], "mode", "synthetic | lorentz");
  add_integer(cmds[3], "generators", "number of generators");
  add_list(cmds[3], "t-list", "rescaling parameters");
  add_number(cmds[3], "tol", "extrapolation tolerance");

  add_triple(cmds[4], "F", "m n weight");
  add_triple(cmds[4], "G", "m n weight");
  add_triple(cmds[5], "F", "m n weight");
  add_triple(cmds[5], "G", "m n weight");
  add_list(cmds[5], "t-grid", "line parameters");

  add_text(cmds[6], "surface", "JSON file or builtin:octagon | builtin:square-torus");
  add_text(cmds[6], "cycles", "JSON file of edge-path cycles");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kPass : kBadConfig;
  }

  const Command* chosen = nullptr;
  for (const auto& c : cmds)
    if (c.app->parsed()) chosen = &c;

  json cfg;
  try {
    cfg = compile(*chosen);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kBadConfig;
  }

  char* manifest = nullptr;
  int run_status = 0;
  auto start = std::chrono::steady_clock::now();
  el_status st = el_run(cfg.dump().c_str(), &manifest, &run_status);
  double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (st == EL_INVALID_ARGUMENT || st == EL_UNKNOWN_COMMAND) {
    std::cerr << "error: " << el_last_error() << '\n';
    return kBadConfig;
  }
  if (st != EL_OK) {
    std::cerr << "error (" << el_status_name(st) << "): " << el_last_error() << '\n';
    return kPipeline;
  }
  json m = json::parse(manifest);
  el_string_free(manifest);

  for (const auto& c : m["certificates"]) {
    std::printf("%-4s %-32s %s %s %s\n", c["pass"].get<bool>() ? "ok" : "FAIL", c["name"].get<std::string>().c_str(),
                c["value"].dump().c_str(), c["op"].get<std::string>().c_str(), c["threshold"].dump().c_str());
  }
  // wall-clock stays out of the manifest so reruns are byte-identical
  std::printf("status: %s (%.2f s)\n", m["status"].get<std::string>().c_str(), elapsed);
  if (m.contains("message")) std::fprintf(stderr, "%s\n", m["message"].get<std::string>().c_str());
  return run_status == 0 ? kPass : run_status == 1 ? kCertificate : kPipeline;
}
