#include "epstein_lab/foliation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "epstein_lab/error.hpp"
#include "epstein_lab/geom.hpp"
#include "epstein_lab/parallel.hpp"

namespace el {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TorusPoint::TorusPoint(Complex t) : tau(t) {
  if (!(t.imag() > 0.0) || !std::isfinite(t.real())) fail(ErrorCode::domain, "torus modulus needs Im tau > 0");
}

TorusFoliation::TorusFoliation(int m_, int n_, double w) : m(m_), n(n_), weight(w) {
  if (m_ == 0 && n_ == 0) fail(ErrorCode::invalid_argument, "foliation class must be nonzero");
  if (!(w > 0.0) || !std::isfinite(w)) fail(ErrorCode::invalid_argument, "foliation weight must be positive");
  multiplicity = std::gcd(std::abs(m_), std::abs(n_));
  reduced_m = m_ / multiplicity;
  reduced_n = n_ / multiplicity;
}

// The straight foliation of class (m, n) is hor(c dz^2) when sqrt(c) (m + n tau) is real;
// matching the transverse measure fixes sqrt(c) = w conj(m + n tau) / Im tau.
Complex hm_section_torus(const TorusPoint& p, const TorusFoliation& F) {
  Complex omega = double(F.m) + double(F.n) * p.tau;
  Complex root = F.weight * std::conj(omega) / p.tau.imag();
  return root * root;
}

Complex hm_section_torus_vertical(const TorusPoint& p, const TorusFoliation& F) { return -hm_section_torus(p, F); }

double extremal_length(const TorusPoint& p, const TorusFoliation& F) {
  // |q|_1 = |c| area
  return std::abs(hm_section_torus(p, F)) * p.tau.imag();
}

double gardiner_pairing(const TorusPoint& p, Complex c, Complex dtau) {
  // the affine map with tau -> tau + dtau has mu = i dtau / (2 Im tau); pairing over |dz ^ dzbar|
  Complex mu = Complex(0.0, 1.0) * dtau / (2.0 * p.tau.imag());
  return (2.0 * c * mu * p.tau.imag()).real();
}

Complex gardiner_gradient(const TorusPoint& p, const TorusFoliation& F) {
  return Complex(0.0, 1.0) * hm_section_torus(p, F);
}

double intersection_number(const TorusPoint& p, Complex c, int a, int b, Which which) {
  if (a == 0 && b == 0) fail(ErrorCode::invalid_argument, "curve class must be nonzero");
  Complex w = std::sqrt(c) * (double(a) + double(b) * p.tau);
  return which == Which::horizontal ? std::abs(w.imag()) : std::abs(w.real());
}

int torus_intersection(const TorusFoliation& F, int a, int b) { return std::abs(a * F.n - b * F.m); }

double filling_scan(const TorusPoint& p, Complex c, int N) {
  std::vector<std::pair<int, int>> classes;
  for (int a = -N; a <= N; ++a)
    for (int b = -N; b <= N; ++b)
      if (std::gcd(std::abs(a), std::abs(b)) == 1) classes.emplace_back(a, b);
  std::vector<double> v(classes.size());
  parallel_for(classes.size(), [&](std::size_t k) {
    auto [a, b] = classes[k];
    v[k] = intersection_number(p, c, a, b, Which::horizontal) + intersection_number(p, c, a, b, Which::vertical);
  });
  return v.empty() ? 0.0 : *std::min_element(v.begin(), v.end());
}

CriticalPoint critical_point(const TorusFoliation& F, const TorusFoliation& G, Complex start) {
  if (F.m * G.n - F.n * G.m == 0) fail(ErrorCode::not_filling, "proportional classes do not fill the torus");
  if (!(start.imag() > 0.0)) fail(ErrorCode::domain, "start point needs Im tau > 0");
  auto value = [&](Complex t) { return extremal_length(TorusPoint(t), F) + extremal_length(TorusPoint(t), G); };
  auto grad = [&](Complex t) { return gardiner_gradient(TorusPoint(t), F) + gardiner_gradient(TorusPoint(t), G); };
  CriticalPoint out;
  Complex tau = start;
  for (;;) {
    Complex g = grad(tau);
    // d f = Re(g dtau): df/dx = Re g, df/dy = -Im g
    double gx = g.real(), gy = -g.imag();
    double gn = std::hypot(gx, gy);
    out.gradient_norm = gn;
    if (gn < 1e-10) break;
    if (out.iterations >= 10000) fail(ErrorCode::not_converged, "critical point search hit the iteration cap");
    ++out.iterations;
    // Near the minimum the value is flat to rounding and Armijo stalls, so finish with
    // Newton on the analytic gradient, kept only while it shrinks the gradient.
    if (gn < 1e-4) {
      const double h = 1e-6 * tau.imag();
      auto gvec = [&](Complex t) {
        Complex q = grad(t);
        return std::array<double, 2>{q.real(), -q.imag()};
      };
      auto px = gvec(tau + h), mx = gvec(tau - h), py = gvec(tau + Complex(0.0, h)), my = gvec(tau - Complex(0.0, h));
      double a = (px[0] - mx[0]) / (2 * h), b = (py[0] - my[0]) / (2 * h);
      double c = (px[1] - mx[1]) / (2 * h), d = (py[1] - my[1]) / (2 * h);
      double det = a * d - b * c;
      if (det != 0.0) {
        Complex next = tau - Complex((d * gx - b * gy) / det, (a * gy - c * gx) / det);
        if (next.imag() > 0.0) {
          Complex gn2 = grad(next);
          if (std::hypot(gn2.real(), gn2.imag()) < gn) {
            tau = next;
            continue;
          }
        }
      }
    }
    // descend along the hyperbolic gradient
    double y2 = tau.imag() * tau.imag();
    Complex d(-y2 * gx, -y2 * gy);
    double slope = gx * d.real() + gy * d.imag();
    double f0 = value(tau), alpha = 0.5;
    for (;;) {
      Complex next = tau + alpha * d;
      if (next.imag() > 0.0 && value(next) <= f0 + 1e-4 * alpha * slope + 4e-16 * std::abs(f0)) break;
      alpha *= 0.5;
      if (alpha < 1e-20) fail(ErrorCode::not_converged, "line search failed in critical point search");
    }
    tau += alpha * d;
  }
  out.point = TorusPoint(tau);
  out.certificate = std::abs(hm_section_torus(out.point, F) + hm_section_torus(out.point, G));
  return out;
}

std::vector<CriticalPoint> teich_line(const TorusFoliation& F, const TorusFoliation& G, const std::vector<double>& t_grid) {
  for (double t : t_grid)
    if (!(t > 0.0)) fail(ErrorCode::invalid_argument, "teich_line parameters must be positive");
  std::vector<CriticalPoint> out(t_grid.size());
  parallel_for(t_grid.size(), [&](std::size_t k) {
    double r = std::sqrt(t_grid[k]);
    out[k] = critical_point(F.scaled(r), G.scaled(1.0 / r));
  });
  return out;
}

double geodesic_collinearity(const std::vector<Complex>& pts) {
  if (pts.size() < 3) return 0.0;
  double m = 0.0;
  for (std::size_t k = 1; k + 1 < pts.size(); ++k)
    m = std::max(m, h2_distance_to_geodesic(pts[k], pts.front(), pts.back()));
  return m;
}

Complex FlatSurface::edge_vector(int poly, int edge) const {
  const auto& P = polygons.at(poly);
  int n = static_cast<int>(P.size());
  return P[(edge + 1) % n] - P[edge];
}

namespace {
struct DisjointSets {
  std::vector<int> parent;
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
};
}  // namespace

void FlatSurface::finalize() {
  if (polygons.empty()) fail(ErrorCode::invalid_argument, "flat surface needs at least one polygon");
  std::vector<int> offset;
  int corners = 0, edges = 0;
  partner.assign(polygons.size(), {});
  for (std::size_t p = 0; p < polygons.size(); ++p) {
    const auto& P = polygons[p];
    if (P.size() < 3) fail(ErrorCode::invalid_argument, "polygon needs at least 3 vertices");
    double area2 = 0.0;
    for (std::size_t k = 0; k < P.size(); ++k) area2 += std::imag(std::conj(P[k]) * P[(k + 1) % P.size()]);
    if (!(area2 > 0.0)) fail(ErrorCode::invalid_argument, "polygons must be counterclockwise and non-degenerate");
    Complex closure = 0.0;
    for (std::size_t k = 0; k < P.size(); ++k) closure += edge_vector(static_cast<int>(p), static_cast<int>(k));
    if (std::abs(closure) > 1e-9) fail(ErrorCode::invalid_argument, "polygon does not close");
    offset.push_back(corners);
    corners += static_cast<int>(P.size());
    edges += static_cast<int>(P.size());
    partner[p].assign(P.size(), {-1, -1});
  }
  translation = true;
  for (const auto& pr : pairings) {
    auto [p1, e1, p2, e2] = pr;
    if (p1 < 0 || p2 < 0 || p1 >= int(polygons.size()) || p2 >= int(polygons.size()) || e1 < 0 || e2 < 0 ||
        e1 >= int(polygons[p1].size()) || e2 >= int(polygons[p2].size()))
      fail(ErrorCode::invalid_argument, "pairing references a missing edge");
    if (partner[p1][e1][0] >= 0 || partner[p2][e2][0] >= 0 || (p1 == p2 && e1 == e2))
      fail(ErrorCode::invalid_argument, "pairings must be an involution without fixed edges");
    partner[p1][e1] = {p2, e2};
    partner[p2][e2] = {p1, e1};
    Complex v1 = edge_vector(p1, e1), v2 = edge_vector(p2, e2);
    double tol = 1e-9 * (1.0 + std::abs(v1));
    if (std::abs(v1 + v2) < tol) continue;
    if (std::abs(v1 - v2) < tol) {
      translation = false;
      continue;
    }
    fail(ErrorCode::invalid_argument, "paired edges are not related by a translation or half-turn");
  }
  for (const auto& P : partner)
    for (const auto& q : P)
      if (q[0] < 0) fail(ErrorCode::invalid_argument, "every edge must be paired");

  // the start of an edge is glued to the end of its partner, in both cases
  DisjointSets ds;
  ds.parent.resize(corners);
  std::iota(ds.parent.begin(), ds.parent.end(), 0);
  auto corner = [&](int p, int k) { return offset[p] + k % static_cast<int>(polygons[p].size()); };
  for (const auto& pr : pairings) {
    auto [p1, e1, p2, e2] = pr;
    auto unite = [&](int a, int b) {
      a = ds.find(a);
      b = ds.find(b);
      if (a != b) ds.parent[std::max(a, b)] = std::min(a, b);
    };
    unite(corner(p1, e1), corner(p2, e2 + 1));
    unite(corner(p1, e1 + 1), corner(p2, e2));
  }
  std::vector<int> id(corners, -1);
  int classes = 0;
  corner_class.assign(polygons.size(), {});
  cone_angles.clear();
  for (std::size_t p = 0; p < polygons.size(); ++p) {
    const auto& P = polygons[p];
    const int n = static_cast<int>(P.size());
    for (int k = 0; k < n; ++k) {
      int root = ds.find(corner(static_cast<int>(p), k));
      if (id[root] < 0) {
        id[root] = classes++;
        cone_angles.push_back(0.0);
      }
      corner_class[p].push_back(id[root]);
      double ang = std::arg((P[(k + n - 1) % n] - P[k]) / (P[(k + 1) % n] - P[k]));
      if (ang <= 0.0) ang += 2.0 * kPi;
      cone_angles[id[root]] += ang;
    }
  }
  int chi = classes - edges / 2 + static_cast<int>(polygons.size());
  if (chi > 2 || chi % 2 != 0) fail(ErrorCode::invalid_argument, "gluing does not produce a closed orientable surface");
  genus = (2 - chi) / 2;
  int degree_sum = 0;
  for (double a : cone_angles) {
    double k = a / kPi;
    if (std::abs(k - std::round(k)) > 1e-9) fail(ErrorCode::invalid_argument, "cone angle is not a multiple of pi");
    degree_sum += static_cast<int>(std::lround(k)) - 2;
  }
  if (degree_sum != 4 * genus - 4) {
    std::ostringstream msg;
    msg << "cone angles give total degree " << degree_sum << ", expected " << 4 * genus - 4;
    fail(ErrorCode::invalid_argument, msg.str());
  }
}

FlatSurface parse_flat_surface(const std::string& text) {
  FlatSurface s;
  try {
    auto j = nlohmann::json::parse(text);
    for (const auto& poly : j.at("polygons")) {
      std::vector<Complex> P;
      for (const auto& v : poly) P.emplace_back(v.at(0).get<double>(), v.at(1).get<double>());
      s.polygons.push_back(std::move(P));
    }
    for (const auto& pr : j.at("pairings"))
      s.pairings.push_back({pr.at(0).get<int>(), pr.at(1).get<int>(), pr.at(2).get<int>(), pr.at(3).get<int>()});
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::invalid_argument, std::string("flat surface JSON: ") + e.what());
  }
  s.finalize();
  return s;
}

std::vector<CyclePath> parse_cycles(const std::string& text) {
  std::vector<CyclePath> out;
  try {
    auto j = nlohmann::json::parse(text);
    for (const auto& c : j.at("cycles")) {
      CyclePath path;
      for (const auto& st : c) path.push_back({st.at(0).get<int>(), st.at(1).get<int>(), st.at(2).get<int>()});
      out.push_back(std::move(path));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::invalid_argument, std::string("cycles JSON: ") + e.what());
  }
  return out;
}

namespace {
Complex cycle_period(const FlatSurface& s, const CyclePath& c) {
  if (c.empty()) fail(ErrorCode::invalid_argument, "empty cycle");
  Complex sum = 0.0;
  int first_start = -1, prev_end = -1;
  for (const auto& st : c) {
    if (st.poly < 0 || st.poly >= int(s.polygons.size()) || st.edge < 0 || st.edge >= int(s.polygons[st.poly].size()) ||
        (st.dir != 1 && st.dir != -1))
      fail(ErrorCode::invalid_argument, "cycle step references a missing edge or has dir other than +-1");
    int n = static_cast<int>(s.polygons[st.poly].size());
    int a = s.corner_class[st.poly][st.edge], b = s.corner_class[st.poly][(st.edge + 1) % n];
    int start = st.dir > 0 ? a : b, end = st.dir > 0 ? b : a;
    if (first_start < 0) first_start = start;
    else if (start != prev_end) fail(ErrorCode::invalid_argument, "cycle is not a connected edge path");
    prev_end = end;
    sum += double(st.dir) * s.edge_vector(st.poly, st.edge);
  }
  if (prev_end != first_start) fail(ErrorCode::invalid_argument, "cycle path is not closed");
  return sum;
}
}  // namespace

std::vector<Complex> periods(const FlatSurface& s, const std::vector<CyclePath>& cycles) {
  if (!s.translation) fail(ErrorCode::invalid_argument, "periods need a translation surface (no half-turn pairings)");
  std::vector<Complex> out;
  for (const auto& c : cycles) out.push_back(cycle_period(s, c));
  return out;
}

double intersection_number(const FlatSurface& s, const CyclePath& cycle, Which which) {
  Complex p = periods(s, {cycle})[0];
  if (std::abs(p) == 0.0) fail(ErrorCode::invalid_argument, "cycle has zero period");
  return which == Which::horizontal ? std::abs(p.imag()) : std::abs(p.real());
}

}  // namespace el
