#include "epstein_lab/run.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

#include "epstein_lab/cmc.hpp"
#include "epstein_lab/epstein.hpp"
#include "epstein_lab/error.hpp"
#include "epstein_lab/foliation.hpp"
#include "epstein_lab/minimal.hpp"
#include "epstein_lab/schwarzian.hpp"
#include "epstein_lab/surface.hpp"

namespace el {

using nlohmann::json;
namespace fs = std::filesystem;

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    fail(ErrorCode::internal, "SHA-256 digest failed");
  std::ostringstream out;
  for (unsigned int i = 0; i < len; ++i) out << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return out.str();
}

namespace {

const std::vector<std::string> kCommands = {"epstein-surface", "cmc-foliate",    "minimal-path", "halfpipe-limit",
                                            "torus-critical",  "torus-line",     "flat-periods", "selftest"};

[[noreturn]] void bad_field(const std::string& field, const std::string& why) {
  fail(ErrorCode::invalid_argument, "field '" + field + "': " + why);
}

// Reads params.<key>, applies the default and range checks, and records the value.
class Params {
 public:
  Params(const json& in, json& out) : in_(in), out_(out) {
    if (!in_.is_object()) bad_field("params", "must be an object");
  }

  double number(const std::string& key, double def, double lo = -HUGE_VAL, double hi = HUGE_VAL, bool open = false) {
    double v = def;
    if (in_.contains(key)) {
      if (!in_[key].is_number()) bad_field("params." + key, "must be a number");
      v = in_[key].get<double>();
    }
    if (!std::isfinite(v) || (open ? !(v > lo && v < hi) : !(v >= lo && v <= hi))) {
      std::ostringstream msg;
      msg << "must lie in " << (open ? "(" : "[") << lo << ", " << hi << (open ? ")" : "]") << ", got " << v;
      bad_field("params." + key, msg.str());
    }
    used_.insert(key);
    out_[key] = v;
    return v;
  }

  int integer(const std::string& key, int def, int lo, int hi) {
    int v = def;
    if (in_.contains(key)) {
      if (!in_[key].is_number_integer()) bad_field("params." + key, "must be an integer");
      v = in_[key].get<int>();
    }
    if (v < lo || v > hi) {
      std::ostringstream msg;
      msg << "must lie in [" << lo << ", " << hi << "], got " << v;
      bad_field("params." + key, msg.str());
    }
    used_.insert(key);
    out_[key] = v;
    return v;
  }

  std::string text(const std::string& key, const std::string& def, const std::vector<std::string>& allowed = {}) {
    std::string v = def;
    if (in_.contains(key)) {
      if (!in_[key].is_string()) bad_field("params." + key, "must be a string");
      v = in_[key].get<std::string>();
    }
    if (!allowed.empty() && std::find(allowed.begin(), allowed.end(), v) == allowed.end()) {
      std::string list;
      for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
      bad_field("params." + key, "must be one of {" + list + "}, got '" + v + "'");
    }
    used_.insert(key);
    out_[key] = v;
    return v;
  }

  std::vector<double> list(const std::string& key, const std::vector<double>& def, double lo, std::size_t min_len) {
    std::vector<double> v = def;
    if (in_.contains(key)) {
      if (!in_[key].is_array()) bad_field("params." + key, "must be an array of numbers");
      v.clear();
      for (const auto& x : in_[key]) {
        if (!x.is_number()) bad_field("params." + key, "must be an array of numbers");
        v.push_back(x.get<double>());
      }
    }
    if (v.size() < min_len) bad_field("params." + key, "needs at least " + std::to_string(min_len) + " entries");
    for (double x : v)
      if (!std::isfinite(x) || !(x > lo)) bad_field("params." + key, "entries must be finite and > " + std::to_string(lo));
    used_.insert(key);
    out_[key] = v;
    return v;
  }

  TorusFoliation foliation(const std::string& key, std::array<double, 3> def) {
    std::array<double, 3> v = def;
    if (in_.contains(key)) {
      const json& a = in_[key];
      if (!a.is_array() || a.size() != 3 || !a[0].is_number_integer() || !a[1].is_number_integer() || !a[2].is_number())
        bad_field("params." + key, "must be [m, n, weight] with integer m, n");
      v = {double(a[0].get<int>()), double(a[1].get<int>()), a[2].get<double>()};
    }
    if (v[0] == 0 && v[1] == 0) bad_field("params." + key, "class must be nonzero");
    if (!(v[2] > 0.0)) bad_field("params." + key, "weight must be positive");
    used_.insert(key);
    out_[key] = json::array({int(v[0]), int(v[1]), v[2]});
    return TorusFoliation(int(v[0]), int(v[1]), v[2]);
  }

  void reject_unknown() const {
    for (auto it = in_.begin(); it != in_.end(); ++it)
      if (!used_.count(it.key())) bad_field("params." + it.key(), "unknown parameter");
  }

 private:
  const json& in_;
  json& out_;
  std::set<std::string> used_;
};

void check_range(double lo, double hi, const std::string& lo_name, const std::string& hi_name) {
  if (!(lo < hi)) bad_field("params." + lo_name, "must be smaller than params." + hi_name);
}

// Fills defaults for one command; the same code path validates.
json normalize_params(const std::string& cmd, const json& in) {
  json out = json::object();
  Params p(in, out);
  if (cmd == "epstein-surface") {
    p.text("metric", "perturbed-poincare", {"flat", "scaled-flat", "poincare", "scaled-poincare", "perturbed-poincare"});
    p.number("t", 0.5, -5.0, 5.0);
    p.integer("n", 61, 13, 1001);
    p.number("half", 0.5, 0.0, 0.7, true);
    p.number("amplitude", 0.05, 0.0, 0.5);
  } else if (cmd == "cmc-foliate") {
    p.text("backend", "disk", {"homogeneous", "mesh", "disk"});
    p.number("phi_scale", 0.01, 0.0, 10.0);
    double lo = p.number("h_lo", -0.9, -1.0, 1.0, true);
    double hi = p.number("h_hi", 0.9, -1.0, 1.0, true);
    int steps = p.integer("steps", 19, 1, 1000);
    if (steps > 1) check_range(lo, hi, "h_lo", "h_hi");
    p.number("tol", 1e-10, 0.0, 1.0, true);
    p.integer("n", 81, 13, 401);
    p.number("half", 0.5, 0.0, 0.7, true);
    p.integer("subdiv", 3, 1, 6);
    p.integer("probe_stride", 4, 1, 64);
  } else if (cmd == "minimal-path") {
    p.integer("subdiv", 3, 1, 6);
    p.number("detq_scale", 1.0, 0.0, 100.0);
    p.list("s_list", {0.01, 0.005, 0.0025}, 0.0, 2);
    p.number("tol", 1e-11, 0.0, 1.0, true);
  } else if (cmd == "halfpipe-limit") {
    p.text("mode", "synthetic", {"synthetic", "lorentz"});
    p.integer("generators", 2, 1, 16);
    p.list("t_list", {0.1, 0.05, 0.025, 0.0125, 0.00625}, 0.0, 3);
    p.number("tol", 1e-6, 0.0, 1.0, true);
  } else if (cmd == "torus-critical") {
    p.foliation("F", {1, 0, 1});
    p.foliation("G", {0, 1, 1});
  } else if (cmd == "torus-line") {
    p.foliation("F", {1, 0, 1});
    p.foliation("G", {0, 1, 1});
    p.list("t_grid", {0.25, 0.5, 1.0, 2.0, 4.0}, 0.0, 2);
  } else if (cmd == "flat-periods") {
    std::string s = p.text("surface", "builtin:octagon");
    std::string c = p.text("cycles", "");
    if (s.rfind("builtin:", 0) == 0) {
      if (s != "builtin:octagon" && s != "builtin:square-torus")
        bad_field("params.surface", "unknown builtin; use builtin:octagon or builtin:square-torus");
    } else if (c.empty()) {
      bad_field("params.cycles", "required when the surface is read from a file");
    }
  } else if (cmd == "selftest") {
    // no parameters
  }
  p.reject_unknown();
  return out;
}

struct StageFailure {
  std::string stage;
  std::string message;
};

class Runner {
 public:
  Runner(json config) : config_(std::move(config)), out_(config_["out"].get<std::string>()) {
    fs::create_directories(out_);
  }

  const json& config() const { return config_; }
  const json& params() const { return config_["params"]; }
  std::uint64_t seed() const { return config_["seed"].get<std::uint64_t>(); }
  const fs::path& out() const { return out_; }

  template <class F>
  void stage(const std::string& name, F&& body) {
    json values = json::object();
    try {
      body(values);
    } catch (const Error& e) {
      stages_.push_back({{"name", name}, {"values", values}, {"error", e.what()}});
      throw StageFailure{name, e.what()};
    } catch (const std::exception& e) {
      stages_.push_back({{"name", name}, {"values", values}, {"error", e.what()}});
      throw StageFailure{name, e.what()};
    }
    stages_.push_back({{"name", name}, {"values", values}});
  }

  void certify(const std::string& name, double value, const std::string& op, double threshold) {
    bool pass = false;
    if (op == "<") pass = value < threshold;
    else if (op == "<=") pass = value <= threshold;
    else if (op == ">") pass = value > threshold;
    else if (op == ">=") pass = value >= threshold;
    else if (op == "==") pass = value == threshold;
    json c = {{"name", name}, {"op", op}, {"threshold", threshold}, {"pass", pass}};
    c["value"] = std::isfinite(value) ? json(value) : json(nullptr);
    certs_.push_back(c);
    if (!pass) failed_ = true;
  }
  void certify_flag(const std::string& name, bool ok) { certify(name, ok ? 1.0 : 0.0, "==", 1.0); }

  std::ofstream create(const std::string& rel) {
    files_.push_back(rel);
    fs::create_directories((out_ / rel).parent_path());
    std::ofstream f(out_ / rel, std::ios::binary);
    if (!f) fail(ErrorCode::io, "cannot write " + (out_ / rel).string());
    f << std::setprecision(17);
    return f;
  }
  void adopt_file(const std::string& rel) { files_.push_back(rel); }

  json manifest(const std::string& status, const std::string& message) const {
    json files = json::array();
    std::vector<std::string> sorted = files_;
    std::sort(sorted.begin(), sorted.end());
    for (const auto& rel : sorted) {
      std::ifstream f(out_ / rel, std::ios::binary);
      std::stringstream ss;
      ss << f.rdbuf();
      std::string bytes = ss.str();
      files.push_back({{"path", rel}, {"bytes", bytes.size()}, {"sha256", sha256_hex(bytes)}});
    }
    json m = {{"artifact_version", kArtifactVersion},
              {"config", config_},
              {"seed", config_["seed"]},
              {"stages", stages_},
              {"certificates", certs_},
              {"files", files},
              {"status", status}};
    if (!message.empty()) m["message"] = message;
    return m;
  }

  bool failed() const { return failed_; }

 private:
  json config_;
  fs::path out_;
  json stages_ = json::array();
  json certs_ = json::array();
  std::vector<std::string> files_;
  bool failed_ = false;
};

double sup(const ScalarField& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

// least-squares slope of log y against log x
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double n = double(x.size()), sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double a = std::log(x[i]), b = std::log(y[i]);
    sx += a;
    sy += b;
    sxx += a * a;
    sxy += a * b;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// ---------------------------------------------------------------- epstein-surface

void run_epstein_surface(Runner& r) {
  const json& p = r.params();
  const std::string metric = p["metric"];
  const double t = p["t"], half = p["half"], amp = p["amplitude"];
  const int n = p["n"];
  ChartGrid g = ChartGrid::centered(0.0, half, n);
  std::mt19937_64 rng(r.seed());
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::array<Complex, 4> modes;
  for (auto& m : modes) m = Complex(U(rng), U(rng));
  auto eta = [&](Complex z) {
    double base = 0.0;
    if (metric == "scaled-flat") base = t;
    if (metric == "poincare" || metric == "scaled-poincare" || metric == "perturbed-poincare")
      base = std::log(2.0 / (1.0 - std::norm(z)));
    if (metric == "scaled-poincare") base += t;
    if (metric == "perturbed-poincare") {
      double bump = 0.0;
      for (std::size_t k = 0; k < modes.size(); ++k)
        bump += (modes[k] * std::exp(Complex(0.0, double(k + 1)) * (z * std::conj(modes[k])))).real();
      base += amp * bump / double(modes.size());
    }
    return base;
  };
  ConformalMetric s = ConformalMetric::sample(g, eta);
  EpsteinSurface e;
  r.stage("epstein_map", [&](json& v) {
    e = epstein_map(s);
    double err = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k)
      if (e.defined(k)) err = std::max(err, std::abs(std::log(visual_metric_density(e.samples[k], g.point(k))) - s.eta[k]));
    v["defining_property_error"] = err;
    v["immersion"] = e.immersion;
    r.certify("defining_property", err, "<", 1e-6);
    r.certify_flag("immersion", e.immersion);
  });
  ImmersionData forms;
  r.stage("mean_curvature", [&](json& v) {
    forms = fundamental_forms_fd(e);
    std::vector<double> H = mean_curvature_formula(s);
    double err = 0.0, hmin = HUGE_VAL, hmax = -HUGE_VAL;
    for (std::size_t q = 0; q < forms.size(); ++q) {
      double hf = H[forms.site[q]];
      err = std::max(err, std::abs(forms.mean_curvature(q) - hf) / std::max(1.0, std::abs(hf)));
      hmin = std::min(hmin, hf);
      hmax = std::max(hmax, hf);
    }
    v["formula_vs_fd"] = err;
    v["H_min"] = hmin;
    v["H_max"] = hmax;
    v["form_defect"] = forms.max_form_defect();
    r.certify("formula_vs_fd", err, "<", 1e-3);
  });
  r.stage("export", [&](json&) {
    auto obj = r.create("surface.obj");
    write_surface_obj(obj, e);
    auto csv = r.create("surface.csv");
    write_surface_csv(csv, e, forms);
  });
}

// ---------------------------------------------------------------- cmc-foliate

Complex disk_lambda(std::uint64_t seed, Complex z) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  Complex acc = 1.0, zk = 1.0;
  for (int k = 1; k <= 3; ++k) {
    zk *= z;
    acc += 0.5 * Complex(U(rng), U(rng)) * zk;
  }
  return acc;
}

void run_cmc_foliate(Runner& r) {
  const json& p = r.params();
  const std::string backend = p["backend"];
  const double scale = p["phi_scale"], lo = p["h_lo"], hi = p["h_hi"], tol = p["tol"];
  const int steps = p["steps"];
  CmcProblem prob, flat;
  r.stage("setup", [&](json& v) {
    if (backend == "homogeneous") {
      prob = CmcProblem::homogeneous(scale);
      flat = CmcProblem::homogeneous(0.0);
    } else if (backend == "mesh") {
      auto mesh = std::make_shared<HyperbolicMesh>(build_genus2_octagon(p["subdiv"].get<int>()));
      ScalarField prof = smooth_random_field(*mesh, r.seed());
      ScalarField norm = (scale * (1.0 + 0.5 * prof.array())).matrix();
      prob = CmcProblem::mesh(mesh, norm);
      flat = CmcProblem::mesh(mesh, ScalarField::Zero(mesh->num_vertices));
      v["vertices"] = mesh->num_vertices;
    } else {
      std::uint64_t seed = r.seed();
      auto lambda = [seed](Complex z) { return disk_lambda(seed, z); };
      prob = CmcProblem::disk(p["n"].get<int>(), p["half"].get<double>(), scale, lambda);
      flat = CmcProblem::disk(p["n"].get<int>(), p["half"].get<double>(), 0.0, lambda);
    }
    v["unknowns"] = prob.size();
    // the phi = 0 anchor solves the equation for every H in [-1, 1]
    ScalarField zero = ScalarField::Zero(prob.size());
    double anchor = 0.0;
    for (int k = 0; k <= 20; ++k) anchor = std::max(anchor, sup(residual_G(flat, -1.0 + 0.1 * k, zero)));
    v["anchor_residual"] = anchor;
    r.certify("anchor_identity", anchor, "<", 1e-10);
  });
  CmcLeafFamily fam;
  r.stage("continuation", [&](json& v) {
    ContinuationOptions opt;
    opt.newton.tol = tol;
    fam = continuation(prob, lo, hi, steps, opt);
    double worst = 0.0;
    int iters = 0;
    for (const auto& s : fam.solutions) {
      worst = std::max(worst, s.residual_norm);
      iters = std::max(iters, s.newton_iters);
    }
    v["max_residual"] = worst;
    v["max_newton_iters"] = iters;
    r.certify("newton_residuals", worst, "<", tol);
  });
  bool leaves = backend == "disk";
  if (leaves) {
    std::string violation;
    r.stage("foliation", [&](json& v) {
      FoliationOptions fo;
      fo.probe_stride = p["probe_stride"].get<int>();
      try {
        fam = assemble_foliation(fam, fo);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::certificate) throw;
        violation = e.what();
      }
      v["certified"] = fam.certified;
      if (!violation.empty()) v["violation"] = violation;
      r.certify_flag("monotone_foliation", fam.certified);
      if (fam.certified) {
        double herr = 0.0, pmin = HUGE_VAL, pmax = -HUGE_VAL, smin = HUGE_VAL;
        for (std::size_t k = 0; k < fam.solutions.size(); ++k) {
          herr = std::max(herr, fam.leaf_mean_curvature_error[k]);
          pmin = std::min(pmin, fam.leaf_min_principal[k]);
          pmax = std::max(pmax, fam.leaf_max_principal[k]);
        }
        for (double s : fam.separation_min) smin = std::min(smin, s);
        v["max_leaf_mean_curvature_error"] = herr;
        v["principal_min"] = pmin;
        v["principal_max"] = pmax;
        if (!fam.separation_min.empty()) v["min_separation"] = smin;
        r.certify("leaf_mean_curvature", herr, "<", 2e-3);
        r.certify("principal_curvature_max", pmax, "<", 1.0);
        r.certify("principal_curvature_min", pmin, ">", -1.0);
      }
    });
  }
  r.stage("export", [&](json&) {
    auto csv = r.create("leaves.csv");
    csv << "H,residual,newton_iters,v_sup,min_principal,max_principal,mean_curvature_error,separation_min,separation_max\n";
    for (std::size_t k = 0; k < fam.solutions.size(); ++k) {
      const auto& s = fam.solutions[k];
      csv << s.H << ',' << s.residual_norm << ',' << s.newton_iters << ',' << sup(s.v);
      if (fam.certified) {
        csv << ',' << fam.leaf_min_principal[k] << ',' << fam.leaf_max_principal[k] << ','
            << fam.leaf_mean_curvature_error[k];
        if (k + 1 < fam.solutions.size()) csv << ',' << fam.separation_min[k] << ',' << fam.separation_max[k];
        else csv << ",,";
      } else {
        csv << ",,,,";
      }
      csv << '\n';
    }
    for (std::size_t k = 0; k < fam.leaves.size(); ++k) {
      std::ostringstream name;
      name << "leaf_" << std::setw(3) << std::setfill('0') << k << ".obj";
      auto obj = r.create(name.str());
      write_surface_obj(obj, fam.leaves[k]);
    }
  });
}

// ---------------------------------------------------------------- minimal-path

void run_minimal_path(Runner& r) {
  const json& p = r.params();
  const double C = p["detq_scale"], tol = p["tol"];
  std::vector<double> s_list = p["s_list"].get<std::vector<double>>();
  HyperbolicMesh mesh;
  TracelessField q;
  std::vector<MinimalPathPoint> path;
  r.stage("setup", [&](json& v) {
    mesh = build_genus2_octagon(p["subdiv"].get<int>());
    q = synthetic_traceless_field(mesh, r.seed(), std::sqrt(C));
    v["vertices"] = mesh.num_vertices;
    v["detq_min"] = traceless_det(q).minCoeff();
  });
  r.stage("gauss_path", [&](json& v) {
    GaussOptions go;
    go.tol = tol;
    path.push_back(solve_gauss_equation(mesh, q, 0.0, go));
    for (double s : s_list) path.push_back(solve_gauss_equation(mesh, q, s, go));
    double worst = 0.0;
    for (const auto& pt : path) worst = std::max(worst, pt.gauss_residual);
    v["max_gauss_residual"] = worst;
    v["s0_iterations"] = path[0].newton_iters;
    r.certify("gauss_residual", worst, "<", 1e-9);
  });
  std::vector<double> xs, usup, ksup;
  r.stage("scaling", [&](json& v) {
    for (std::size_t i = 1; i < path.size(); ++i) {
      FormsAtInfinity f = forms_at_infinity(path[i].forms);
      double km = 0.0;
      for (double k : f.Kstar) km = std::max(km, std::abs(k + 1.0));
      xs.push_back(path[i].s);
      usup.push_back(sup(path[i].u));
      ksup.push_back(km);
    }
    if (C > 0.0) {
      double eu = loglog_slope(xs, usup), ek = loglog_slope(xs, ksup);
      v["u_exponent"] = eu;
      v["kstar_exponent"] = ek;
      r.certify("u_exponent", eu, ">=", 2.0);
      r.certify("kstar_exponent", ek, ">=", 2.0);
    }
  });
  r.stage("first_order", [&](json& v) {
    FirstOrderEstimate e = first_order_schwarzian(path);
    double qmax = 0.0, errII = 0.0, errI = 0.0, sum = 0.0, dk = 0.0;
    for (std::size_t k = 0; k < q.size(); ++k) {
      qmax = std::max(qmax, q[k].norm());
      errII = std::max(errII, (e.dIIstar_traceless[k] + q[k]).norm());
      errI = std::max(errI, (e.dIstar[k] - q[k]).norm());
      sum = std::max(sum, (e.dIstar[k] + e.dIIstar_traceless[k]).norm());
      dk = std::max(dk, std::abs(e.dKstar[k]));
    }
    double rel = qmax > 0 ? errII / qmax : errII;
    v["dIIstar0_rel_error"] = rel;
    v["dIstar_rel_error"] = qmax > 0 ? errI / qmax : errI;
    v["dIstar_plus_dIIstar0"] = sum;
    v["dKstar_sup"] = dk;
    r.certify("first_order_IIstar0", rel, "<", 0.05);
  });
  r.stage("export", [&](json&) {
    auto csv = r.create("path.csv");
    csv << "s,u_sup,kstar_plus_one_sup,gauss_residual,newton_iters\n";
    csv << path[0].s << ',' << sup(path[0].u) << ",0," << path[0].gauss_residual << ',' << path[0].newton_iters << '\n';
    for (std::size_t i = 1; i < path.size(); ++i)
      csv << path[i].s << ',' << usup[i - 1] << ',' << ksup[i - 1] << ',' << path[i].gauss_residual << ','
          << path[i].newton_iters << '\n';
    auto js = r.create("extrapolation.json");
    json rep = {{"s", xs}, {"u_sup", usup}, {"kstar_plus_one_sup", ksup}};
    js << rep.dump(2) << '\n';
  });
}

// ---------------------------------------------------------------- halfpipe-limit

Eigen::Matrix3d random_o21(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  double b = U(rng), th = 3.0 * U(rng);
  Eigen::Matrix3d boost, rot;
  boost << std::cosh(b), std::sinh(b), 0, std::sinh(b), std::cosh(b), 0, 0, 0, 1;
  rot << 1, 0, 0, 0, std::cos(th), -std::sin(th), 0, std::sin(th), std::cos(th);
  return rot * boost;
}

void run_halfpipe(Runner& r) {
  const json& p = r.params();
  const std::string mode = p["mode"];
  const int ng = p["generators"];
  std::vector<double> ts = p["t_list"].get<std::vector<double>>();
  std::mt19937_64 rng(r.seed());
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  HolonomyPath4 path;
  std::vector<Mat4> expected;
  r.stage("path", [&](json& v) {
    path.t = ts;
    path.rho.assign(ts.size(), {});
    for (int g = 0; g < ng; ++g) {
      Eigen::Matrix3d A = random_o21(rng);
      Eigen::Vector3d w(U(rng), U(rng), U(rng)), vv(U(rng), U(rng), U(rng));
      Mat4 lim = Mat4::Identity();
      lim.block<3, 3>(0, 0) = A;
      Mat4 Y = Mat4::Zero();
      if (mode == "lorentz") {
        // infinitesimal isometry of diag(-1, 1, 1, 1) mixing the last coordinate
        Y(0, 3) = Y(3, 0) = w[0];
        Y(1, 3) = w[1];
        Y(3, 1) = -w[1];
        Y(2, 3) = w[2];
        Y(3, 2) = -w[2];
        lim.block<1, 3>(3, 0) = Y.block<1, 3>(3, 0) * A;
      } else {
        lim.block<1, 3>(3, 0) = vv.transpose();
      }
      expected.push_back(lim);
      for (std::size_t i = 0; i < ts.size(); ++i) {
        double t = ts[i];
        Mat4 m = Mat4::Identity();
        m.block<3, 3>(0, 0) = A;
        if (mode == "lorentz") {
          Mat4 e = (t * Y).exp();
          m = e * m;
        } else {
          m.block<3, 1>(0, 3) = t * w;
          m.block<1, 3>(3, 0) = t * vv.transpose();
        }
        path.rho[i].push_back(m);
      }
    }
    v["samples"] = ts.size();
    v["generators"] = ng;
  });
  HalfPipeLimit lim;
  r.stage("limit", [&](json& v) {
    lim = halfpipe_limit_holonomy(path, p["tol"].get<double>());
    double err = 0.0;
    for (int g = 0; g < ng; ++g) err = std::max(err, (lim.limit[g] - expected[g]).cwiseAbs().maxCoeff());
    v["extrapolation_error"] = lim.extrapolation_error;
    v["constraint_residual"] = lim.constraint_residual;
    v["error_vs_expected"] = err;
    r.certify("extrapolation_settled", lim.extrapolation_error, "<", p["tol"].get<double>());
    r.certify_flag("halfpipe_group", lim.in_group);
    r.certify("limit_error", err, "<", mode == "synthetic" ? 1e-8 : 1e-6);
  });
  r.stage("export", [&](json&) {
    json out = json::array();
    for (int g = 0; g < ng; ++g) {
      json rows = json::array(), exp_rows = json::array();
      for (int i = 0; i < 4; ++i) {
        rows.push_back({lim.limit[g](i, 0), lim.limit[g](i, 1), lim.limit[g](i, 2), lim.limit[g](i, 3)});
        exp_rows.push_back({expected[g](i, 0), expected[g](i, 1), expected[g](i, 2), expected[g](i, 3)});
      }
      out.push_back({{"generator", g}, {"limit", rows}, {"expected", exp_rows}});
    }
    auto js = r.create("limit.json");
    js << json{{"mode", mode}, {"generators", out}}.dump(2) << '\n';
  });
}

// ---------------------------------------------------------------- torus

void run_torus_critical(Runner& r) {
  json scratch = json::object();
  Params p(r.params(), scratch);
  TorusFoliation F = p.foliation("F", {1, 0, 1}), G = p.foliation("G", {0, 1, 1});
  CriticalPoint cp;
  r.stage("critical_point", [&](json& v) {
    cp = critical_point(F, G);
    double eF = extremal_length(cp.point, F), eG = extremal_length(cp.point, G);
    v["tau"] = {cp.point.tau.real(), cp.point.tau.imag()};
    v["gradient_norm"] = cp.gradient_norm;
    v["certificate"] = cp.certificate;
    v["iterations"] = cp.iterations;
    v["ext_F"] = eF;
    v["ext_G"] = eG;
    r.certify("gradient_norm", cp.gradient_norm, "<", 1e-10);
    r.certify("qF_plus_qG", cp.certificate, "<", 1e-10);
    r.certify("balanced_extremal_lengths", std::abs(eF - eG) / std::max(eF, eG), "<", 1e-8);
  });
  r.stage("export", [&](json&) {
    auto js = r.create("critical.json");
    js << json{{"tau", {cp.point.tau.real(), cp.point.tau.imag()}},
               {"gradient_norm", cp.gradient_norm},
               {"certificate", cp.certificate},
               {"ext_F", extremal_length(cp.point, F)},
               {"ext_G", extremal_length(cp.point, G)}}
              .dump(2)
       << '\n';
  });
}

void run_torus_line(Runner& r) {
  json scratch = json::object();
  Params p(r.params(), scratch);
  TorusFoliation F = p.foliation("F", {1, 0, 1}), G = p.foliation("G", {0, 1, 1});
  std::vector<double> ts = r.params()["t_grid"].get<std::vector<double>>();
  std::vector<CriticalPoint> line;
  r.stage("teich_line", [&](json& v) {
    line = teich_line(F, G, ts);
    std::vector<Complex> pts;
    double worst_cert = 0.0;
    for (const auto& c : line) {
      pts.push_back(c.point.tau);
      worst_cert = std::max(worst_cert, c.certificate);
    }
    double col = geodesic_collinearity(pts);
    double sep = HUGE_VAL;
    for (std::size_t i = 0; i < pts.size(); ++i)
      for (std::size_t j = i + 1; j < pts.size(); ++j) sep = std::min(sep, h2_distance(pts[i], pts[j]));
    v["collinearity"] = col;
    v["min_pairwise_distance"] = sep;
    v["max_certificate"] = worst_cert;
    r.certify("collinearity", col, "<", 1e-6);
    r.certify("injective", sep, ">", 1e-8);
    r.certify("certificates", worst_cert, "<", 1e-10);
  });
  r.stage("export", [&](json&) {
    auto csv = r.create("line.csv");
    csv << "t,tau_re,tau_im,ext_sum\n";
    for (std::size_t i = 0; i < ts.size(); ++i) {
      double rt = std::sqrt(ts[i]);
      double e = extremal_length(line[i].point, F.scaled(rt)) + extremal_length(line[i].point, G.scaled(1.0 / rt));
      csv << ts[i] << ',' << line[i].point.tau.real() << ',' << line[i].point.tau.imag() << ',' << e << '\n';
    }
  });
}

// ---------------------------------------------------------------- flat-periods

std::string builtin_surface(const std::string& name, std::string& cycles) {
  if (name == "builtin:square-torus") {
    cycles = R"({"cycles": [[[0, 0, 1]], [[0, 1, 1]]]})";
    return R"({"polygons": [[[0, 0], [1, 0], [1, 1], [0, 1]]], "pairings": [[0, 0, 0, 2], [0, 1, 0, 3]]})";
  }
  // regular octagon, opposite sides glued by translation: genus 2, one cone point of angle 6 pi
  json poly = json::array();
  const double pi = 3.14159265358979323846;
  for (int k = 0; k < 8; ++k) poly.push_back({std::cos(pi * k / 4.0), std::sin(pi * k / 4.0)});
  json pairs = json::array();
  for (int k = 0; k < 4; ++k) pairs.push_back({0, k, 0, k + 4});
  cycles = R"({"cycles": [[[0, 0, 1]], [[0, 1, 1]], [[0, 2, 1]], [[0, 3, 1]]]})";
  return json{{"polygons", {poly}}, {"pairings", pairs}}.dump();
}

std::string slurp(const std::string& path, const std::string& field) {
  std::ifstream f(path, std::ios::binary);
  if (!f) bad_field(field, "cannot read file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void run_flat_periods(Runner& r) {
  const json& p = r.params();
  std::string sname = p["surface"], cname = p["cycles"];
  std::string cycles_text, surface_text;
  if (sname.rfind("builtin:", 0) == 0) surface_text = builtin_surface(sname, cycles_text);
  else surface_text = slurp(sname, "params.surface");
  if (!cname.empty()) cycles_text = slurp(cname, "params.cycles");
  FlatSurface s;
  std::vector<CyclePath> cycles;
  std::vector<Complex> per;
  r.stage("surface", [&](json& v) {
    s = parse_flat_surface(surface_text);
    v["genus"] = s.genus;
    v["translation"] = s.translation;
    v["cone_angles_over_pi"] = json::array();
    for (double a : s.cone_angles) v["cone_angles_over_pi"].push_back(a / 3.14159265358979323846);
  });
  r.stage("periods", [&](json& v) {
    cycles = parse_cycles(cycles_text);
    per = periods(s, cycles);
    v["cycles"] = cycles.size();
    r.certify("cycles_closed", double(per.size()), "==", double(cycles.size()));
  });
  r.stage("export", [&](json&) {
    auto csv = r.create("periods.csv");
    csv << "cycle,re,im,horizontal,vertical\n";
    for (std::size_t i = 0; i < per.size(); ++i)
      csv << i << ',' << per[i].real() << ',' << per[i].imag() << ',' << std::abs(per[i].imag()) << ','
          << std::abs(per[i].real()) << '\n';
  });
}

// ---------------------------------------------------------------- selftest

void run_selftest(Runner& r) {
  const std::vector<json> cases = {
      {{"command", "epstein-surface"}, {"params", {{"metric", "perturbed-poincare"}, {"n", 41}}}},
      {{"command", "cmc-foliate"},
       {"params", {{"backend", "homogeneous"}, {"phi_scale", 0.0}, {"h_lo", -0.9}, {"h_hi", 0.9}, {"steps", 19}}}},
      {{"command", "cmc-foliate"},
       {"params", {{"backend", "mesh"}, {"subdiv", 2}, {"phi_scale", 0.01}, {"h_lo", -0.5}, {"h_hi", 0.5}, {"steps", 5}}}},
      {{"command", "cmc-foliate"},
       {"params", {{"backend", "disk"}, {"n", 41}, {"phi_scale", 0.01}, {"h_lo", -0.6}, {"h_hi", 0.6}, {"steps", 5}}}},
      {{"command", "minimal-path"}, {"params", {{"subdiv", 2}}}},
      {{"command", "halfpipe-limit"}, {"params", {{"mode", "synthetic"}}}},
      {{"command", "halfpipe-limit"}, {"params", {{"mode", "lorentz"}}}},
      {{"command", "torus-critical"}, {"params", json::object()}},
      {{"command", "torus-line"}, {"params", json::object()}},
      {{"command", "flat-periods"}, {"params", {{"surface", "builtin:octagon"}}}},
      {{"command", "flat-periods"}, {"params", {{"surface", "builtin:square-torus"}}}},
  };
  auto summary = r.create("selftest.csv");
  summary << "case,command,status,certificates_passed,certificates_total\n";
  for (std::size_t i = 0; i < cases.size(); ++i) {
    std::ostringstream dir;
    dir << "case_" << std::setw(2) << std::setfill('0') << i << '_' << cases[i]["command"].get<std::string>();
    json cfg = cases[i];
    cfg["seed"] = r.config()["seed"];
    cfg["out"] = (r.out() / dir.str()).string();
    RunResult sub;
    r.stage(dir.str(), [&](json& v) {
      sub = run(cfg);
      int pass = 0, total = 0;
      for (const auto& c : sub.manifest["certificates"]) {
        ++total;
        if (c["pass"].get<bool>()) ++pass;
      }
      v["status"] = sub.manifest["status"];
      v["certificates_passed"] = pass;
      v["certificates_total"] = total;
      r.certify(dir.str(), double(sub.status), "==", 0.0);
      summary << i << ',' << cfg["command"].get<std::string>() << ',' << sub.manifest["status"].get<std::string>() << ','
              << pass << ',' << total << '\n';
      for (const auto& f : sub.manifest["files"]) r.adopt_file(dir.str() + "/" + f["path"].get<std::string>());
      r.adopt_file(dir.str() + "/manifest.json");
    });
  }
  summary.close();
}

}  // namespace

json normalize_config(const json& config) {
  if (!config.is_object()) bad_field("(root)", "config must be a JSON object");
  for (auto it = config.begin(); it != config.end(); ++it)
    if (it.key() != "command" && it.key() != "seed" && it.key() != "out" && it.key() != "params")
      bad_field(it.key(), "unknown top-level field");
  if (!config.contains("command") || !config["command"].is_string()) bad_field("command", "missing or not a string");
  std::string cmd = config["command"];
  if (std::find(kCommands.begin(), kCommands.end(), cmd) == kCommands.end())
    fail(ErrorCode::unknown_command, "field 'command': unknown command '" + cmd + "'");
  json out = json::object();
  out["command"] = cmd;
  std::uint64_t seed = 1;
  if (config.contains("seed")) {
    const json& s = config["seed"];
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<std::int64_t>() >= 0))
      bad_field("seed", "must be a non-negative integer");
    seed = s.get<std::uint64_t>();
  }
  out["seed"] = seed;
  std::string dir = "out";
  if (config.contains("out")) {
    if (!config["out"].is_string() || config["out"].get<std::string>().empty()) bad_field("out", "must be a non-empty string");
    dir = config["out"];
  }
  out["out"] = dir;
  out["params"] = normalize_params(cmd, config.contains("params") ? config["params"] : json::object());
  return out;
}

RunResult run(const json& config) {
  json cfg = normalize_config(config);
  Runner r(cfg);
  RunResult res;
  const std::string cmd = cfg["command"];
  try {
    if (cmd == "epstein-surface") run_epstein_surface(r);
    else if (cmd == "cmc-foliate") run_cmc_foliate(r);
    else if (cmd == "minimal-path") run_minimal_path(r);
    else if (cmd == "halfpipe-limit") run_halfpipe(r);
    else if (cmd == "torus-critical") run_torus_critical(r);
    else if (cmd == "torus-line") run_torus_line(r);
    else if (cmd == "flat-periods") run_flat_periods(r);
    else if (cmd == "selftest") run_selftest(r);
    res.status = r.failed() ? 1 : 0;
  } catch (const StageFailure& f) {
    res.status = 3;
    res.message = "stage '" + f.stage + "': " + f.message;
  }
  const char* status = res.status == 0 ? "pass" : res.status == 1 ? "fail" : "error";
  res.manifest = r.manifest(status, res.message);
  std::ofstream m(r.out() / "manifest.json", std::ios::binary);
  if (!m) fail(ErrorCode::io, "cannot write manifest");
  m << res.manifest.dump(2) << '\n';
  return res;
}

}  // namespace el
