#include "epstein_lab/schwarzian.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "epstein_lab/error.hpp"

namespace el {

ConformalMetric::ConformalMetric(ChartGrid g, std::vector<double> e) : grid(g), eta(std::move(e)) {
  if (eta.size() != grid.size()) fail(ErrorCode::invalid_argument, "eta size does not match the chart");
  for (double v : eta)
    if (!std::isfinite(v)) fail(ErrorCode::domain, "non-finite eta");
}

ConformalMetric ConformalMetric::sample(const ChartGrid& g, const std::function<double(Complex)>& fn) {
  std::vector<double> e(g.size());
  for (std::size_t k = 0; k < e.size(); ++k) e[k] = fn(g.point(k));
  return {g, std::move(e)};
}

ConformalMetric ConformalMetric::poincare_disk(const ChartGrid& g) {
  return sample(g, [](Complex z) {
    double r2 = std::norm(z);
    if (r2 >= 1.0) fail(ErrorCode::domain, "Poincare metric sampled outside the unit disk");
    return std::log(2.0 / (1.0 - r2));
  });
}

ConformalMetric ConformalMetric::scaled(double t) const {
  ConformalMetric out = *this;
  for (double& v : out.eta) v += t;
  return out;
}

QuadDifferential::QuadDifferential(ChartGrid g, std::vector<Complex> l, int margin_)
    : grid(g), lambda(std::move(l)), margin(margin_) {
  if (lambda.size() != grid.size()) fail(ErrorCode::invalid_argument, "lambda size does not match the chart");
}

QuadDifferential QuadDifferential::sample(const ChartGrid& g, const std::function<Complex(Complex)>& f) {
  std::vector<Complex> l(g.size());
  for (std::size_t k = 0; k < l.size(); ++k) l[k] = f(g.point(k));
  return {g, std::move(l), 0};
}

QuadDifferential QuadDifferential::holomorphic_sample(const ChartGrid& g, const std::function<Complex(Complex)>& f,
                                                      double rel_tol) {
  QuadDifferential q = sample(g, f);
  q.holomorphic = true;
  q.holomorphy_tol = rel_tol;
  double scale = q.max_abs();
  double dzb = q.max_dzbar();
  if (dzb > rel_tol * std::max(scale, 1e-300) && scale > 0.0) {
    std::ostringstream msg;
    msg << "quadratic differential is not holomorphic: max |d/dzbar| = " << dzb << " vs max |lambda| = " << scale;
    fail(ErrorCode::domain, msg.str());
  }
  return q;
}

double QuadDifferential::max_abs() const {
  double m = 0.0;
  for (std::size_t k = 0; k < lambda.size(); ++k)
    if (grid.interior(k, margin)) m = std::max(m, std::abs(lambda[k]));
  return m;
}

double QuadDifferential::max_dzbar() const {
  double m = 0.0;
  int mg = margin + 2;
  for (int j = mg; j < grid.ny - mg; ++j)
    for (int i = mg; i < grid.nx - mg; ++i) m = std::max(m, std::abs(Stencil<Complex>::dzbar(lambda, grid, i, j)));
  return m;
}

HolomorphicMap HolomorphicMap::moebius(const MoebiusTransform& m) {
  HolomorphicMap f;
  f.f = [m](Complex z) { return apply_boundary(m, z); };
  f.d1 = [m](Complex z) { Complex q = m.c() * z + m.d(); return 1.0 / (q * q); };
  f.d2 = [m](Complex z) { Complex q = m.c() * z + m.d(); return -2.0 * m.c() / (q * q * q); };
  f.d3 = [m](Complex z) { Complex q = m.c() * z + m.d(); return 6.0 * m.c() * m.c() / (q * q * q * q); };
  return f;
}

Complex schwarzian_at(const HolomorphicMap& f, Complex z) {
  const double h = f.fd_step;
  auto F = [&](int k) { return f.f(z + double(k) * h); };
  Complex f1, f2, f3;
  if (f.d1) f1 = f.d1(z);
  else f1 = (-F(2) + 8.0 * F(1) - 8.0 * F(-1) + F(-2)) / (12.0 * h);
  if (f.d2) f2 = f.d2(z);
  else f2 = (-F(2) + 16.0 * F(1) - 30.0 * F(0) + 16.0 * F(-1) - F(-2)) / (12.0 * h * h);
  if (f.d3) f3 = f.d3(z);
  else f3 = (-F(3) + 8.0 * F(2) - 13.0 * F(1) + 13.0 * F(-1) - 8.0 * F(-2) + F(-3)) / (8.0 * h * h * h);
  if (std::abs(f1) < 1e-10) {
    std::ostringstream msg;
    msg << "map is singular at z = " << z << " (|f'| = " << std::abs(f1) << ")";
    fail(ErrorCode::singular, msg.str());
  }
  Complex r = f2 / f1;
  return f3 / f1 - 1.5 * r * r;
}

QuadDifferential schwarzian_derivative(const HolomorphicMap& f, const ChartGrid& chart) {
  std::vector<Complex> l(chart.size());
  for (std::size_t k = 0; k < l.size(); ++k) l[k] = schwarzian_at(f, chart.point(k));
  return {chart, std::move(l), 0};
}

namespace {
std::vector<Complex> deviation(const ConformalMetric& s) {
  std::vector<Complex> out(s.grid.size(), 0.0);
  for (int j = 2; j < s.grid.ny - 2; ++j)
    for (int i = 2; i < s.grid.nx - 2; ++i) {
      Complex ez = wirtinger_z(s.eta, s.grid, i, j);
      out[s.grid.index(i, j)] = wirtinger_zz(s.eta, s.grid, i, j) - ez * ez;
    }
  return out;
}
}  // namespace

QuadDifferential schwarzian_tensor(const ConformalMetric& s1, const ConformalMetric& s2) {
  if (!s1.grid.same_as(s2.grid)) fail(ErrorCode::chart_mismatch, "Schwarzian tensor needs both metrics on one chart");
  std::vector<Complex> a = deviation(s1), b = deviation(s2);
  for (std::size_t k = 0; k < a.size(); ++k) b[k] -= a[k];
  return {s1.grid, std::move(b), 2};
}

QuadDifferential mobius_flat_deviation(const ConformalMetric& s) { return {s.grid, deviation(s), 2}; }

std::vector<double> qd_norm(const QuadDifferential& phi, const ConformalMetric& s) {
  if (!phi.grid.same_as(s.grid)) fail(ErrorCode::chart_mismatch, "norm needs phi and sigma on one chart");
  std::vector<double> out(s.grid.size(), 0.0);
  for (std::size_t k = 0; k < out.size(); ++k)
    if (s.grid.interior(k, phi.margin)) out[k] = std::exp(-2.0 * s.eta[k]) * std::abs(phi.lambda[k]);
  return out;
}

void write_field_csv(std::ostream& out, const ChartGrid& g, const std::vector<Complex>& values) {
  if (values.size() != g.size()) fail(ErrorCode::invalid_argument, "field size does not match the chart");
  out << "chart,origin_re,origin_im,spacing,nx,ny\n";
  out << std::setprecision(17) << "planar," << g.origin.real() << ',' << g.origin.imag() << ',' << g.spacing << ','
      << g.nx << ',' << g.ny << '\n';
  for (const Complex& v : values) out << v.real() << ',' << v.imag() << '\n';
}

std::pair<ChartGrid, std::vector<Complex>> read_field_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("chart,", 0) != 0) fail(ErrorCode::io, "field CSV: missing header");
  if (!std::getline(in, line)) fail(ErrorCode::io, "field CSV: missing chart line");
  std::vector<std::string> tok;
  {
    std::istringstream ls(line);
    std::string t;
    while (std::getline(ls, t, ',')) tok.push_back(t);
  }
  if (tok.size() != 6) fail(ErrorCode::io, "field CSV: chart line needs 6 columns");
  double v[3];
  int n[2];
  try {
    for (int k = 0; k < 3; ++k) v[k] = std::stod(tok[1 + k]);
    for (int k = 0; k < 2; ++k) n[k] = std::stoi(tok[4 + k]);
  } catch (const std::exception&) {
    fail(ErrorCode::io, "field CSV: malformed chart line");
  }
  ChartGrid g({v[0], v[1]}, v[2], n[0], n[1]);
  std::vector<Complex> vals;
  vals.reserve(g.size());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto comma = line.find(',');
    if (comma == std::string::npos) fail(ErrorCode::io, "field CSV: malformed row");
    vals.emplace_back(std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1)));
  }
  if (vals.size() != g.size()) fail(ErrorCode::io, "field CSV: row count does not match nx*ny");
  return {g, std::move(vals)};
}

}  // namespace el
