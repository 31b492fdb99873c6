#include "epstein_lab/epstein.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include <Eigen/Dense>

#include "epstein_lab/error.hpp"
#include "epstein_lab/parallel.hpp"

namespace el {

ImmersionData ImmersionData::from_forms(std::vector<Mat2> first, std::vector<Mat2> second) {
  if (first.size() != second.size()) fail(ErrorCode::invalid_argument, "form fields differ in size");
  ImmersionData d;
  d.first = std::move(first);
  d.second = std::move(second);
  d.shape.resize(d.first.size());
  d.third.resize(d.first.size());
  for (std::size_t k = 0; k < d.first.size(); ++k) {
    if (d.first[k].determinant() <= 0.0) fail(ErrorCode::degenerate, "first fundamental form is not positive definite");
    d.shape[k] = d.first[k].inverse() * d.second[k];
    d.third[k] = d.first[k] * d.shape[k] * d.shape[k];
  }
  return d;
}

std::pair<double, double> ImmersionData::principal_curvatures(std::size_t k) const {
  double h = 0.5 * shape[k].trace();
  double disc = std::max(0.0, h * h - shape[k].determinant());
  double s = std::sqrt(disc);
  return {h - s, h + s};
}

double ImmersionData::max_form_defect() const {
  double m = 0.0;
  for (std::size_t k = 0; k < size(); ++k) {
    Mat2 ib = first[k] * shape[k];
    double scale = first[k].norm();
    m = std::max(m, (second[k] - ib).norm() / scale);
    m = std::max(m, (ib - ib.transpose()).norm() / scale);
  }
  return m;
}

H3Point epstein_point(Complex z, double eta, Complex eta_z) {
  double D = std::exp(2.0 * eta) + 4.0 * std::norm(eta_z);
  return {z + 4.0 * std::conj(eta_z) / D, 2.0 * std::exp(eta) / D};
}

namespace {

// Euclidean first derivatives of the samples at (i, j).
std::pair<Vec3, Vec3> tangents(const std::vector<Vec3>& X, const ChartGrid& g, int i, int j) {
  using S = Stencil<Vec3>;
  return {S::dx(X, g, i, j), S::dy(X, g, i, j)};
}

std::vector<Vec3> euclidean(const EpsteinSurface& e) {
  std::vector<Vec3> X(e.samples.size());
  for (std::size_t k = 0; k < X.size(); ++k) X[k] = e.samples[k].euclidean();
  return X;
}

}  // namespace

EpsteinSurface epstein_map(const ConformalMetric& s, const std::vector<Complex>& eta_z, int margin) {
  const ChartGrid& g = s.grid;
  if (eta_z.size() != g.size()) fail(ErrorCode::invalid_argument, "eta_z size does not match the chart");
  if (g.nx <= 2 * margin || g.ny <= 2 * margin) fail(ErrorCode::invalid_argument, "chart too small for its margin");
  EpsteinSurface e;
  e.grid = g;
  e.margin = margin;
  e.source = s;
  e.samples.assign(g.size(), H3Point());
  e.normal.assign(g.size(), Vec3(0, 0, -1));
  parallel_for(g.size(), [&](std::size_t k) {
    if (!g.interior(k, margin)) return;
    Complex z = g.point(k);
    e.samples[k] = epstein_point(z, s.eta[k], eta_z[k]);
    e.normal[k] = direction_to_boundary(e.samples[k], z);
  });
  // immersion: FD first fundamental form positive definite where it can be formed
  std::vector<Vec3> X = euclidean(e);
  bool ok = g.nx > 2 * (margin + 2) && g.ny > 2 * (margin + 2);
  for (int j = margin + 2; ok && j < g.ny - margin - 2; ++j)
    for (int i = margin + 2; i < g.nx - margin - 2; ++i) {
      auto [xa, xb] = tangents(X, g, i, j);
      double a = xa.squaredNorm(), b = xa.dot(xb), c = xb.squaredNorm();
      if (!(a > 0.0) || !(a * c - b * b > 1e-14 * a * c)) {
        ok = false;
        break;
      }
    }
  e.immersion = ok;
  return e;
}

EpsteinSurface epstein_map(const ConformalMetric& s) {
  std::vector<Complex> ez(s.grid.size(), 0.0);
  for (int j = 2; j < s.grid.ny - 2; ++j)
    for (int i = 2; i < s.grid.nx - 2; ++i) ez[s.grid.index(i, j)] = wirtinger_z(s.eta, s.grid, i, j);
  return epstein_map(s, ez, 2);
}

double mean_curvature_value(double K, Complex B, Complex lambda, double eta) {
  double N = std::exp(-4.0 * eta) * std::norm(B - 0.5 * lambda);
  double den = (K - 1.0) * (K - 1.0) - 16.0 * N;
  if (std::abs(den) < 1e-12) fail(ErrorCode::degenerate, "mean curvature denominator vanishes");
  return (K * K - 1.0 - 16.0 * N) / den;
}

std::vector<double> mean_curvature_formula(const ConformalMetric& s, const QuadDifferential* phi) {
  const ChartGrid& g = s.grid;
  if (phi && !phi->grid.same_as(g)) fail(ErrorCode::chart_mismatch, "phi and sigma live on different charts");
  std::vector<double> H(g.size(), std::numeric_limits<double>::quiet_NaN());
  std::vector<std::size_t> bad;
  for (int j = 2; j < g.ny - 2; ++j)
    for (int i = 2; i < g.nx - 2; ++i) {
      std::size_t k = g.index(i, j);
      double eta = s.eta[k];
      double K = -std::exp(-2.0 * eta) * flat_laplacian(s.eta, g, i, j);
      Complex ez = wirtinger_z(s.eta, g, i, j);
      Complex B = wirtinger_zz(s.eta, g, i, j) - ez * ez;
      Complex lam = phi ? phi->lambda[k] : Complex(0.0);
      double N = std::exp(-4.0 * eta) * std::norm(B - 0.5 * lam);
      double den = (K - 1.0) * (K - 1.0) - 16.0 * N;
      if (std::abs(den) < 1e-12) {
        bad.push_back(k);
        continue;
      }
      H[k] = (K * K - 1.0 - 16.0 * N) / den;
    }
  if (!bad.empty()) {
    std::ostringstream msg;
    msg << "mean curvature denominator vanishes at " << bad.size() << " sample(s):";
    for (std::size_t n = 0; n < std::min<std::size_t>(bad.size(), 16); ++n)
      msg << " (" << bad[n] % g.nx << "," << bad[n] / g.nx << ")";
    fail(ErrorCode::degenerate, msg.str());
  }
  return H;
}

ImmersionData fundamental_forms_fd(const EpsteinSurface& e) {
  const ChartGrid& g = e.grid;
  const int m = e.margin + 2;
  if (g.nx <= 2 * m || g.ny <= 2 * m) fail(ErrorCode::invalid_argument, "chart too small for finite differences");
  std::vector<Vec3> X = euclidean(e);
  std::vector<std::size_t> sites;
  for (int j = m; j < g.ny - m; ++j)
    for (int i = m; i < g.nx - m; ++i) sites.push_back(g.index(i, j));
  std::vector<Mat2> I(sites.size()), II(sites.size());
  std::vector<int> degenerate(sites.size(), 0);
  using S = Stencil<Vec3>;
  parallel_for(sites.size(), [&](std::size_t n) {
    std::size_t k = sites[n];
    int i = static_cast<int>(k % g.nx), j = static_cast<int>(k / g.nx);
    double t = X[k].z();
    Vec3 xa = S::dx(X, g, i, j), xb = S::dy(X, g, i, j);
    Vec3 xaa = S::dxx(X, g, i, j), xab = S::dxy(X, g, i, j), xbb = S::dyy(X, g, i, j);
    Vec3 n_e = xa.cross(xb);
    double len = n_e.norm();
    if (!(len > 0.0)) {
      degenerate[n] = 1;
      return;
    }
    n_e /= len;
    // orient toward the chart point
    if (n_e.dot(direction_to_boundary(e.samples[k], g.point(k))) < 0.0) n_e = -n_e;
    double t2 = t * t;
    Mat2 first;
    first << xa.dot(xa) / t2, xa.dot(xb) / t2, xa.dot(xb) / t2, xb.dot(xb) / t2;
    // Levi-Civita of |dx|^2/t^2: the normal part of Gamma(U,V) is (U.V) n_z / t
    auto sec = [&](const Vec3& uv, const Vec3& u, const Vec3& v) { return (uv.dot(n_e) + u.dot(v) * n_e.z() / t) / t; };
    Mat2 second;
    second << sec(xaa, xa, xa), sec(xab, xa, xb), sec(xab, xa, xb), sec(xbb, xb, xb);
    if (first.determinant() <= 0.0) degenerate[n] = 1;
    I[n] = first;
    II[n] = second;
  });
  for (std::size_t n = 0; n < sites.size(); ++n)
    if (degenerate[n]) {
      std::ostringstream msg;
      msg << "degenerate first fundamental form at sample (" << sites[n] % g.nx << "," << sites[n] / g.nx << ")";
      fail(ErrorCode::degenerate, msg.str());
    }
  ImmersionData d = ImmersionData::from_forms(std::move(I), std::move(II));
  d.site = std::move(sites);
  return d;
}

ImmersionData equidistant_flow(const ImmersionData& d, double r) {
  ImmersionData out;
  out.site = d.site;
  const std::size_t n = d.size();
  out.first.resize(n);
  out.second.resize(n);
  out.third.resize(n);
  out.shape.resize(n);
  const double ch = std::cosh(r), sh = std::sinh(r);
  for (std::size_t k = 0; k < n; ++k) {
    const Mat2& G = d.first[k];
    const Mat2& B = d.shape[k];
    Mat2 P = ch * Mat2::Identity() + sh * B;
    Mat2 Q = sh * Mat2::Identity() + ch * B;
    double det = P.determinant();
    if (std::abs(det) < 1e-12) {
      std::ostringstream msg;
      msg << "equidistant flow at r = " << r << " is singular at entry " << k;
      fail(ErrorCode::singular, msg.str());
    }
    out.first[k] = P.transpose() * G * P;
    out.second[k] = 0.5 * (Q.transpose() * G * P + P.transpose() * G * Q);
    out.shape[k] = P.inverse() * Q;
    out.third[k] = out.first[k] * out.shape[k] * out.shape[k];
  }
  return out;
}

namespace {

double catmull_rom(double fm1, double f0, double f1, double f2, double s) {
  return 0.5 * (2.0 * f0 + (f1 - fm1) * s + (2.0 * fm1 - 5.0 * f0 + 4.0 * f1 - f2) * s * s +
                (-fm1 + 3.0 * f0 - 3.0 * f1 + f2) * s * s * s);
}

struct Interpolant {
  const EpsteinSurface& e;
  std::vector<Vec3> X;
  double lo_i, hi_i, lo_j, hi_j;  // admissible range of index coordinates

  explicit Interpolant(const EpsteinSurface& s) : e(s), X(euclidean(s)) {
    lo_i = s.margin + 1;
    hi_i = s.grid.nx - s.margin - 2;
    lo_j = s.margin + 1;
    hi_j = s.grid.ny - s.margin - 2;
  }
  bool inside(double a, double b) const { return a >= lo_i && a <= hi_i && b >= lo_j && b <= hi_j; }

  Vec3 at(double a, double b) const {
    int i = std::clamp(static_cast<int>(std::floor(a)), static_cast<int>(lo_i), static_cast<int>(hi_i) - 1);
    int j = std::clamp(static_cast<int>(std::floor(b)), static_cast<int>(lo_j), static_cast<int>(hi_j) - 1);
    double sa = a - i, sb = b - j;
    Vec3 out;
    for (int c = 0; c < 3; ++c) {
      double row[4];
      for (int q = -1; q <= 2; ++q) {
        auto v = [&](int p) { return X[e.grid.index(i + p, j + q)][c]; };
        row[q + 1] = catmull_rom(v(-1), v(0), v(1), v(2), sa);
      }
      out[c] = catmull_rom(row[0], row[1], row[2], row[3], sb);
    }
    return out;
  }
};

}  // namespace

ProbeResult signed_distance_probe(const EpsteinSurface& leaf, const H3Point& p) {
  Interpolant ip(leaf);
  const ChartGrid& g = leaf.grid;
  if (ip.hi_i - ip.lo_i < 1 || ip.hi_j - ip.lo_j < 1) fail(ErrorCode::invalid_argument, "leaf has too few samples");
  // nearest defined sample
  double best = std::numeric_limits<double>::infinity();
  int bi = -1, bj = -1;
  for (int j = static_cast<int>(ip.lo_j); j <= static_cast<int>(ip.hi_j); ++j)
    for (int i = static_cast<int>(ip.lo_i); i <= static_cast<int>(ip.hi_i); ++i) {
      double c = h3_cosh_distance(p, leaf.samples[g.index(i, j)]);
      if (c < best) {
        best = c;
        bi = i;
        bj = j;
      }
    }
  auto objective = [&](double a, double b) { return h3_cosh_distance(p, H3Point::from_euclidean(ip.at(a, b))); };
  double a = bi, b = bj;
  const double eps = 1e-3;
  for (int it = 0; it < 60; ++it) {
    double f0 = objective(a, b);
    double fa = (objective(a + eps, b) - objective(a - eps, b)) / (2 * eps);
    double fb = (objective(a, b + eps) - objective(a, b - eps)) / (2 * eps);
    double faa = (objective(a + eps, b) - 2 * f0 + objective(a - eps, b)) / (eps * eps);
    double fbb = (objective(a, b + eps) - 2 * f0 + objective(a, b - eps)) / (eps * eps);
    double fab = (objective(a + eps, b + eps) - objective(a + eps, b - eps) - objective(a - eps, b + eps) +
                  objective(a - eps, b - eps)) /
                 (4 * eps * eps);
    Eigen::Matrix2d Hm;
    Hm << faa, fab, fab, fbb;
    Eigen::Vector2d grad(fa, fb), step;
    if (Hm.determinant() > 0 && Hm.trace() > 0) step = -Hm.ldlt().solve(grad);
    else step = -grad / std::max(1.0, grad.norm());
    if (step.norm() > 1.0) step *= 1.0 / step.norm();
    // backtrack so the objective never increases
    double lam = 1.0;
    while (lam > 1e-6) {
      double na = a + lam * step[0], nb = b + lam * step[1];
      if (ip.inside(na, nb) && objective(na, nb) <= f0) break;
      lam *= 0.5;
    }
    if (lam <= 1e-6) break;
    a += lam * step[0];
    b += lam * step[1];
    if (lam * step.norm() < 1e-10) break;
  }
  Vec3 foot = ip.at(a, b);
  H3Point fp = H3Point::from_euclidean(foot);
  double d = h3_distance(p, fp);
  // A genuine foot sees p along the normal. d/da cosh(dist) = -sinh(dist) cos(angle) |X_a|/t,
  // so the cosines of the angles to both tangents must vanish. Very close to the leaf the
  // cosine is dominated by difference noise and only the clamped-foot test applies.
  bool edge = a <= ip.lo_i + 1e-6 || a >= ip.hi_i - 1e-6 || b <= ip.lo_j + 1e-6 || b >= ip.hi_j - 1e-6;
  if (d > 1e-6) {
    const double h = 1e-4;
    double ca = std::min(a + h, ip.hi_i), cb = std::min(b + h, ip.hi_j);
    double sa = std::max(a - h, ip.lo_i), sb = std::max(b - h, ip.lo_j);
    Vec3 Xa = (ip.at(ca, b) - ip.at(sa, b)) / (ca - sa), Xb = (ip.at(a, cb) - ip.at(a, sb)) / (cb - sb);
    double fa = (objective(ca, b) - objective(sa, b)) / (ca - sa);
    double fb = (objective(a, cb) - objective(a, sb)) / (cb - sb);
    double scale = std::sinh(d) / foot.z();
    double cos_a = std::abs(fa) / (scale * Xa.norm()), cos_b = std::abs(fb) / (scale * Xb.norm());
    if (std::max(cos_a, cos_b) > 1e-3) edge = true;
  }
  if (edge) {
    std::ostringstream msg;
    msg << "probe point (" << p.z << ", " << p.t << ") lies outside the sampled collar of the leaf";
    fail(ErrorCode::outside_collar, msg.str());
  }
  Vec3 n = direction_to_boundary(fp, g.origin + g.spacing * Complex(a, b));
  double side = (p.euclidean() - foot).dot(n);
  return {side > 0 ? -d : d, a, b};
}

void write_surface_obj(std::ostream& out, const EpsteinSurface& e) {
  const ChartGrid& g = e.grid;
  const int m = e.margin;
  out << std::setprecision(12);
  std::vector<long> id(g.size(), 0);
  long next = 1;
  for (int j = m; j < g.ny - m; ++j)
    for (int i = m; i < g.nx - m; ++i) {
      const H3Point& p = e.samples[g.index(i, j)];
      out << "v " << p.z.real() << ' ' << p.z.imag() << ' ' << p.t << '\n';
      id[g.index(i, j)] = next++;
    }
  for (int j = m; j + 1 < g.ny - m; ++j)
    for (int i = m; i + 1 < g.nx - m; ++i) {
      long a = id[g.index(i, j)], b = id[g.index(i + 1, j)], c = id[g.index(i + 1, j + 1)], d = id[g.index(i, j + 1)];
      out << "f " << a << ' ' << b << ' ' << c << '\n' << "f " << a << ' ' << c << ' ' << d << '\n';
    }
}

void write_surface_csv(std::ostream& out, const EpsteinSurface& e, const ImmersionData& forms) {
  out << "z_re,z_im,height,H,lambda1,lambda2\n" << std::setprecision(12);
  for (std::size_t n = 0; n < forms.size(); ++n) {
    std::size_t k = forms.site.empty() ? n : forms.site[n];
    Complex z = e.grid.point(k);
    auto [l1, l2] = forms.principal_curvatures(n);
    out << z.real() << ',' << z.imag() << ',' << e.samples[k].t << ',' << forms.mean_curvature(n) << ',' << l1 << ','
        << l2 << '\n';
  }
}

}  // namespace el
