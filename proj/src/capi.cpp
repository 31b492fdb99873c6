#include "epstein_lab/epstein_lab.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <string>

#include "epstein_lab/cmc.hpp"
#include "epstein_lab/epstein.hpp"
#include "epstein_lab/error.hpp"
#include "epstein_lab/foliation.hpp"
#include "epstein_lab/run.hpp"
#include "epstein_lab/schwarzian.hpp"
#include "epstein_lab/surface.hpp"

struct el_metric {
  el::ConformalMetric m;
};
struct el_surface {
  el::EpsteinSurface s;
};
struct el_mesh {
  el::HyperbolicMesh m;
};

namespace {

thread_local std::string last_error;

template <class F>
el_status guard(F&& f) {
  try {
    f();
    last_error.clear();
    return EL_OK;
  } catch (const el::Error& e) {
    last_error = e.what();
    return static_cast<el_status>(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return EL_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return EL_INTERNAL;
  }
}

void need(const void* p, const char* name) {
  if (!p) el::fail(el::ErrorCode::invalid_argument, std::string(name) + " is null");
}

el::Complex cx(el_complex z) { return {z.re, z.im}; }
el_complex cx(el::Complex z) { return {z.real(), z.imag()}; }
el::MoebiusTransform mob(const el_moebius& m) { return {cx(m.a), cx(m.b), cx(m.c), cx(m.d)}; }
el_moebius mob(const el::MoebiusTransform& m) { return {cx(m.a()), cx(m.b()), cx(m.c()), cx(m.d())}; }
el::H3Point pt(el_h3_point p) { return {cx(p.z), p.t}; }
el_h3_point pt(const el::H3Point& p) { return {cx(p.z), p.t}; }

el::ChartGrid grid(int n, double half) {
  if (n < 5) el::fail(el::ErrorCode::invalid_argument, "grid needs n >= 5");
  if (!(half > 0.0)) el::fail(el::ErrorCode::invalid_argument, "half width must be positive");
  return el::ChartGrid::centered(0.0, half, n);
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

extern "C" {

const char* el_version(void) { return el::kArtifactVersion; }
const char* el_last_error(void) { return last_error.c_str(); }

const char* el_status_name(el_status s) {
  if (s == EL_OK) return "ok";
  return el::error_code_name(static_cast<el::ErrorCode>(s));
}

el_status el_moebius_normalize(const el_moebius* in, el_moebius* out) {
  return guard([&] {
    need(in, "in");
    need(out, "out");
    *out = mob(mob(*in));
  });
}

el_status el_moebius_compose(const el_moebius* m1, const el_moebius* m2, el_moebius* out) {
  return guard([&] {
    need(m1, "m1");
    need(m2, "m2");
    need(out, "out");
    *out = mob(mob(*m1) * mob(*m2));
  });
}

el_status el_moebius_apply(const el_moebius* m, el_complex z, el_complex* out) {
  return guard([&] {
    need(m, "m");
    need(out, "out");
    el::BoundaryPoint w = el::apply_boundary(mob(*m), el::BoundaryPoint::finite(cx(z)));
    if (w.is_infinite()) el::fail(el::ErrorCode::domain, "image is the point at infinity");
    *out = cx(w.value());
  });
}

el_status el_moebius_apply_h3(const el_moebius* m, el_h3_point p, el_h3_point* out) {
  return guard([&] {
    need(m, "m");
    need(out, "out");
    *out = pt(el::apply_h3(mob(*m), pt(p)));
  });
}

el_status el_h3_distance(el_h3_point p, el_h3_point q, double* out) {
  return guard([&] {
    need(out, "out");
    *out = el::h3_distance(pt(p), pt(q));
  });
}

el_status el_visual_density(el_h3_point p, el_complex z, double* out) {
  return guard([&] {
    need(out, "out");
    *out = el::visual_metric_density(pt(p), cx(z));
  });
}

el_status el_metric_flat(int n, double half, el_metric** out) {
  return guard([&] {
    need(out, "out");
    *out = new el_metric{el::ConformalMetric::flat(grid(n, half))};
  });
}

el_status el_metric_poincare(int n, double half, el_metric** out) {
  return guard([&] {
    need(out, "out");
    if (!(half * std::sqrt(2.0) < 1.0)) el::fail(el::ErrorCode::domain, "patch must lie inside the unit disk");
    *out = new el_metric{el::ConformalMetric::poincare_disk(grid(n, half))};
  });
}

el_status el_metric_from_samples(int n, double half, const double* eta, el_metric** out) {
  return guard([&] {
    need(eta, "eta");
    need(out, "out");
    el::ChartGrid g = grid(n, half);
    *out = new el_metric{el::ConformalMetric(g, std::vector<double>(eta, eta + g.size()))};
  });
}

el_status el_metric_scale(const el_metric* m, double t, el_metric** out) {
  return guard([&] {
    need(m, "m");
    need(out, "out");
    *out = new el_metric{m->m.scaled(t)};
  });
}

void el_metric_free(el_metric* m) { delete m; }
size_t el_metric_size(const el_metric* m) { return m ? m->m.grid.size() : 0; }

el_status el_metric_mobius_deviation(const el_metric* m, double* out) {
  return guard([&] {
    need(m, "m");
    need(out, "out");
    *out = el::mobius_flat_deviation(m->m).max_abs();
  });
}

el_status el_metric_mean_curvature(const el_metric* m, double* values, size_t count) {
  return guard([&] {
    need(m, "m");
    need(values, "values");
    if (count != m->m.grid.size()) el::fail(el::ErrorCode::invalid_argument, "count must equal the grid size");
    std::vector<double> H = el::mean_curvature_formula(m->m);
    for (size_t k = 0; k < count; ++k) values[k] = m->m.grid.interior(k, 2) ? H[k] : kNaN;
  });
}

el_status el_surface_epstein(const el_metric* m, el_surface** out) {
  return guard([&] {
    need(m, "m");
    need(out, "out");
    *out = new el_surface{el::epstein_map(m->m)};
  });
}

void el_surface_free(el_surface* s) { delete s; }
size_t el_surface_size(const el_surface* s) { return s ? s->s.samples.size() : 0; }

el_status el_surface_point(const el_surface* s, size_t k, el_h3_point* out) {
  return guard([&] {
    need(s, "s");
    need(out, "out");
    if (k >= s->s.samples.size()) el::fail(el::ErrorCode::invalid_argument, "sample index out of range");
    if (!s->s.defined(k)) {
      *out = {cx(s->s.grid.point(k)), kNaN};
      return;
    }
    *out = pt(s->s.samples[k]);
  });
}

int el_surface_is_immersion(const el_surface* s) { return s && s->s.immersion ? 1 : 0; }

el_status el_surface_mean_curvature_fd(const el_surface* s, double* values, size_t count) {
  return guard([&] {
    need(s, "s");
    need(values, "values");
    if (count != s->s.samples.size()) el::fail(el::ErrorCode::invalid_argument, "count must equal the grid size");
    el::ImmersionData d = el::fundamental_forms_fd(s->s);
    for (size_t k = 0; k < count; ++k) values[k] = kNaN;
    for (size_t q = 0; q < d.size(); ++q) values[d.site[q]] = d.mean_curvature(q);
  });
}

el_status el_mesh_octagon(int subdiv, el_mesh** out) {
  return guard([&] {
    need(out, "out");
    *out = new el_mesh{el::build_genus2_octagon(subdiv)};
  });
}

void el_mesh_free(el_mesh* m) { delete m; }

el_status el_mesh_counts(const el_mesh* m, int* vertices, int* edges, int* faces) {
  return guard([&] {
    need(m, "m");
    if (vertices) *vertices = m->m.num_vertices;
    if (edges) *edges = m->m.num_edges();
    if (faces) *faces = static_cast<int>(m->m.triangles.size());
  });
}

el_status el_mesh_area(const el_mesh* m, double* out) {
  return guard([&] {
    need(m, "m");
    need(out, "out");
    *out = m->m.area();
  });
}

el_status el_mesh_solve_helmholtz(const el_mesh* m, const double* f, const double* lam, double* u) {
  return guard([&] {
    need(m, "m");
    need(f, "f");
    need(lam, "lam");
    need(u, "u");
    const int n = m->m.num_vertices;
    el::ScalarField F = Eigen::Map<const el::ScalarField>(f, n);
    el::ScalarField L = Eigen::Map<const el::ScalarField>(lam, n);
    el::ScalarField U = el::solve_helmholtz(m->m, F, L);
    Eigen::Map<el::ScalarField>(u, n) = U;
  });
}

el_status el_cmc_homogeneous_residual(double H, double v, double phi_norm, double* out) {
  return guard([&] {
    need(out, "out");
    if (!(std::abs(H) <= 1.0)) el::fail(el::ErrorCode::domain, "|H| must be at most 1");
    el::CmcProblem p = el::CmcProblem::homogeneous(phi_norm);
    *out = el::residual_G(p, H, el::ScalarField::Constant(1, v))[0];
  });
}

el_status el_torus_extremal_length(el_complex tau, int m, int n, double weight, double* out) {
  return guard([&] {
    need(out, "out");
    *out = el::extremal_length(el::TorusPoint(cx(tau)), el::TorusFoliation(m, n, weight));
  });
}

el_status el_torus_critical_point(int mF, int nF, double wF, int mG, int nG, double wG, el_complex* tau,
                                  double* certificate) {
  return guard([&] {
    need(tau, "tau");
    el::CriticalPoint c = el::critical_point(el::TorusFoliation(mF, nF, wF), el::TorusFoliation(mG, nG, wG));
    *tau = cx(c.point.tau);
    if (certificate) *certificate = c.certificate;
  });
}

el_status el_run(const char* config_json, char** manifest, int* run_status) {
  if (manifest) *manifest = nullptr;
  return guard([&] {
    need(config_json, "config_json");
    nlohmann::json cfg;
    try {
      cfg = nlohmann::json::parse(config_json);
    } catch (const nlohmann::json::parse_error& e) {
      el::fail(el::ErrorCode::invalid_argument, std::string("config is not valid JSON: ") + e.what());
    }
    el::RunResult r = el::run(cfg);
    if (run_status) *run_status = r.status;
    if (manifest) {
      std::string text = r.manifest.dump(2);
      char* buf = static_cast<char*>(std::malloc(text.size() + 1));
      if (!buf) throw std::bad_alloc();
      std::memcpy(buf, text.c_str(), text.size() + 1);
      *manifest = buf;
    }
  });
}

void el_string_free(char* s) { std::free(s); }

}  // extern "C"
