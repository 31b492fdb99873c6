#include "epstein_lab/minimal.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>

#include "epstein_lab/error.hpp"

namespace el {

TracelessField synthetic_traceless_field(const HyperbolicMesh& m, std::uint64_t seed, double scale) {
  ScalarField a = smooth_random_field(m, seed);
  ScalarField b = smooth_random_field(m, seed + 1);
  TracelessField q(m.num_vertices);
  for (int v = 0; v < m.num_vertices; ++v) q[v] << scale * a[v], scale * b[v], scale * b[v], -scale * a[v];
  return q;
}

ScalarField traceless_det(const TracelessField& q) {
  ScalarField d(static_cast<Eigen::Index>(q.size()));
  for (std::size_t v = 0; v < q.size(); ++v) d[static_cast<Eigen::Index>(v)] = q[v].determinant();
  return d;
}

double gauss_residual(const HyperbolicMesh& m, const ScalarField& u, const ScalarField& detq, double s) {
  ScalarField lap = laplacian(m).apply(u);
  double r = 0.0;
  for (Eigen::Index v = 0; v < u.size(); ++v) {
    double lhs = std::exp(-2.0 * u[v]) * (-lap[v] - 1.0);
    double rhs = -1.0 + std::exp(-4.0 * u[v]) * s * s * detq[v];
    r = std::max(r, std::abs(lhs - rhs));
  }
  return r;
}

MinimalPathPoint solve_gauss_equation(const HyperbolicMesh& m, const ScalarField& detq, double s, const GaussOptions& opt,
                                      const ScalarField* u0) {
  if (!(s >= 0.0) || !std::isfinite(s)) fail(ErrorCode::invalid_argument, "path parameter s must be >= 0");
  if (detq.size() != m.num_vertices) fail(ErrorCode::invalid_argument, "detq needs one value per vertex");
  LinearOperator L = laplacian(m);
  const ScalarField& M = L.mass;
  MinimalPathPoint p;
  p.s = s;
  p.detq = detq;
  p.u = u0 ? *u0 : ScalarField::Zero(m.num_vertices);
  const double s2 = s * s;
  auto residual = [&](const ScalarField& u) {
    ScalarField F = -L.apply(u);
    for (Eigen::Index v = 0; v < u.size(); ++v) F[v] += -1.0 + std::exp(2.0 * u[v]) - std::exp(-2.0 * u[v]) * s2 * detq[v];
    return F;
  };
  ScalarField F = residual(p.u);
  double r = F.lpNorm<Eigen::Infinity>();
  int increases = 0;
  while (!(r < opt.tol)) {
    if (p.newton_iters >= opt.max_iter || !std::isfinite(r)) {
      std::ostringstream msg;
      msg << "Gauss equation Newton failed at s = " << s << " (residual " << r << "); s is outside the working range";
      fail(ErrorCode::not_converged, msg.str());
    }
    ScalarField c(m.num_vertices);
    for (Eigen::Index v = 0; v < c.size(); ++v) {
      c[v] = 2.0 * (std::exp(2.0 * p.u[v]) + std::exp(-2.0 * p.u[v]) * s2 * detq[v]);
      if (!(c[v] > 0.0)) {
        std::ostringstream msg;
        msg << "Gauss linearization loses positivity at s = " << s << "; s is outside the working range";
        fail(ErrorCode::divergence, msg.str());
      }
    }
    SparseMatrix A = -L.weak;
    for (Eigen::Index v = 0; v < c.size(); ++v) A.coeffRef(v, v) += M[v] * c[v];
    Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper, Eigen::DiagonalPreconditioner<double>> cg;
    cg.setTolerance(1e-14);
    cg.setMaxIterations(10 * m.num_vertices);
    cg.compute(A);
    ScalarField du = cg.solve(-M.cwiseProduct(F));
    if (cg.info() != Eigen::Success && cg.error() > 1e-10)
      fail(ErrorCode::not_converged, "conjugate gradient failed inside the Gauss Newton step");
    p.u += du;
    ++p.newton_iters;
    F = residual(p.u);
    double rn = F.lpNorm<Eigen::Infinity>();
    increases = rn > r ? increases + 1 : 0;
    r = rn;
    if (increases >= 2) {
      std::ostringstream msg;
      msg << "Gauss equation Newton diverged at s = " << s << "; s is outside the working range";
      fail(ErrorCode::divergence, msg.str());
    }
  }
  p.gauss_residual = gauss_residual(m, p.u, detq, s);
  return p;
}

MinimalPathPoint solve_gauss_equation(const HyperbolicMesh& m, const TracelessField& q, double s, const GaussOptions& opt,
                                      const ScalarField* u0) {
  if (static_cast<int>(q.size()) != m.num_vertices) fail(ErrorCode::invalid_argument, "q needs one form per vertex");
  MinimalPathPoint p = solve_gauss_equation(m, traceless_det(q), s, opt, u0);
  std::vector<Mat2> I(q.size()), II(q.size());
  for (std::size_t v = 0; v < q.size(); ++v) {
    I[v] = std::exp(2.0 * p.u[static_cast<Eigen::Index>(v)]) * Mat2::Identity();
    II[v] = s * q[v];
  }
  p.forms = ImmersionData::from_forms(std::move(I), std::move(II));
  return p;
}

double solve_gauss_homogeneous(double detq, double s) {
  // x = e^{2u}: x^2 - x - s^2 detq = 0, Newton from x = 1
  double c = s * s * detq;
  if (1.0 + 4.0 * c < 0.0) fail(ErrorCode::domain, "homogeneous Gauss equation has no solution for this s");
  double x = 1.0;
  for (int it = 0; it < 100; ++it) {
    double f = x * x - x - c, df = 2.0 * x - 1.0;
    double dx = f / df;
    x -= dx;
    if (std::abs(dx) < 1e-17 * std::abs(x)) break;
  }
  return 0.5 * std::log(x);
}

FormsAtInfinity forms_at_infinity(const ImmersionData& d, End end) {
  const double sg = end == End::positive ? 1.0 : -1.0;
  FormsAtInfinity f;
  const std::size_t n = d.size();
  f.Istar.resize(n);
  f.IIstar.resize(n);
  f.IIstar_traceless.resize(n);
  f.Kstar.resize(n);
  f.Hstar.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const Mat2& B = d.shape[k];
    double det = (Mat2::Identity() + sg * B).determinant();
    if (std::abs(det) < 1e-14) {
      std::ostringstream msg;
      msg << "det(E " << (sg > 0 ? "+" : "-") << " B) vanishes at entry " << k;
      fail(ErrorCode::singular, msg.str());
    }
    f.Istar[k] = 0.5 * (d.first[k] + 2.0 * sg * d.second[k] + d.third[k]);
    f.IIstar[k] = 0.5 * (d.first[k] - d.third[k]);
    f.Kstar[k] = (-1.0 + B.determinant()) / det;
    Mat2 Bs = f.Istar[k].inverse() * f.IIstar[k];
    f.Hstar[k] = 0.5 * Bs.trace();
    f.IIstar_traceless[k] = f.IIstar[k] - f.Hstar[k] * f.Istar[k];
  }
  return f;
}

std::vector<double> extrapolation_weights_at_zero(const std::vector<double>& x) {
  std::vector<double> w(x.size(), 1.0);
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < x.size(); ++j)
      if (j != i) w[i] *= (0.0 - x[j]) / (x[i] - x[j]);
  return w;
}

std::vector<double> derivative_weights_at_zero(const std::vector<double>& x) {
  std::vector<double> w(x.size(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t k = 0; k < x.size(); ++k) {
      if (k == i) continue;
      double term = 1.0 / (x[i] - x[k]);
      for (std::size_t j = 0; j < x.size(); ++j)
        if (j != i && j != k) term *= (0.0 - x[j]) / (x[i] - x[j]);
      w[i] += term;
    }
  return w;
}

namespace {
void check_distinct(const std::vector<double>& x) {
  std::vector<double> s = x;
  std::sort(s.begin(), s.end());
  if (std::adjacent_find(s.begin(), s.end()) != s.end()) fail(ErrorCode::invalid_argument, "path samples must be distinct");
}
}  // namespace

FirstOrderEstimate first_order_schwarzian(const std::vector<MinimalPathPoint>& path, End end) {
  if (path.size() < 3) fail(ErrorCode::invalid_argument, "first-order estimate needs at least 3 path samples");
  std::vector<double> s;
  for (const auto& p : path) {
    if (p.forms.size() == 0) fail(ErrorCode::invalid_argument, "path point carries no forms");
    if (p.s < 0.0) fail(ErrorCode::invalid_argument, "path samples must have s >= 0");
    s.push_back(p.s);
  }
  check_distinct(s);
  const std::size_t n = path[0].forms.size();
  for (const auto& p : path)
    if (p.forms.size() != n) fail(ErrorCode::invalid_argument, "path points differ in size");
  std::vector<double> w = derivative_weights_at_zero(s);
  FirstOrderEstimate e;
  e.dIstar.assign(n, Mat2::Zero());
  e.dIIstar_traceless.assign(n, Mat2::Zero());
  e.dKstar.assign(n, 0.0);
  for (std::size_t i = 0; i < path.size(); ++i) {
    FormsAtInfinity f = forms_at_infinity(path[i].forms, end);
    for (std::size_t k = 0; k < n; ++k) {
      e.dIstar[k] += w[i] * f.Istar[k];
      e.dIIstar_traceless[k] += w[i] * f.IIstar_traceless[k];
      e.dKstar[k] += w[i] * f.Kstar[k];
    }
  }
  return e;
}

void HolonomyPath4::validate() const {
  if (t.size() < 2) fail(ErrorCode::invalid_argument, "holonomy path needs at least two samples");
  if (rho.size() != t.size()) fail(ErrorCode::invalid_argument, "one matrix list per sample");
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!(t[i] > 0.0)) fail(ErrorCode::invalid_argument, "holonomy samples need t > 0");
    if (rho[i].size() != rho[0].size() || rho[0].empty())
      fail(ErrorCode::invalid_argument, "every sample needs the same nonempty set of generators");
    for (const Mat4& m : rho[i])
      if (!m.allFinite() || m.determinant() == 0.0) fail(ErrorCode::invalid_argument, "holonomy sample is singular");
  }
  check_distinct(t);
}

HalfPipeLimit halfpipe_limit_holonomy(const HolonomyPath4& p, double tol) {
  p.validate();
  const std::size_t ns = p.t.size(), ng = p.rho[0].size();
  std::vector<std::size_t> order(ns);
  for (std::size_t i = 0; i < ns; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p.t[a] > p.t[b]; });
  std::vector<double> t_all, t_fine;
  for (std::size_t i : order) t_all.push_back(p.t[i]);
  t_fine.assign(t_all.begin() + 1, t_all.end());
  std::vector<double> w_all = extrapolation_weights_at_zero(t_all);
  std::vector<double> w_fine = extrapolation_weights_at_zero(t_fine);

  HalfPipeLimit out;
  const Eigen::Matrix3d J = Eigen::Vector3d(-1.0, 1.0, 1.0).asDiagonal();
  for (std::size_t g = 0; g < ng; ++g) {
    Mat4 all = Mat4::Zero(), fine = Mat4::Zero();
    for (std::size_t n = 0; n < ns; ++n) {
      double t = t_all[n];
      Mat4 c = p.rho[order[n]][g];
      // g_t rho g_t^{-1}, g_t = diag(1, 1, 1, 1/t)
      c.block<1, 3>(3, 0) /= t;
      c.block<3, 1>(0, 3) *= t;
      all += w_all[n] * c;
      if (n > 0) fine += w_fine[n - 1] * c;
    }
    double err = (all - fine).cwiseAbs().maxCoeff() / (1.0 + all.cwiseAbs().maxCoeff());
    out.extrapolation_error = std::max(out.extrapolation_error, err);
    Eigen::Matrix3d A = all.block<3, 3>(0, 0);
    double res = all.block<3, 1>(0, 3).cwiseAbs().maxCoeff();
    res = std::max(res, std::abs(std::abs(all(3, 3)) - 1.0));
    res = std::max(res, (A.transpose() * J * A - J).cwiseAbs().maxCoeff());
    out.constraint_residual = std::max(out.constraint_residual, res);
    out.limit.push_back(all);
  }
  if (out.extrapolation_error > tol) {
    std::ostringstream msg;
    msg << "half-pipe extrapolation did not settle (change " << out.extrapolation_error << " > " << tol << ")";
    fail(ErrorCode::not_converged, msg.str());
  }
  out.in_group = out.constraint_residual < 1e-8;
  return out;
}

HalfPipeImmersion halfpipe_limit_immersion(const std::vector<MinimalPathPoint>& path) {
  if (path.size() < 3) fail(ErrorCode::invalid_argument, "immersion limit needs at least 3 path samples");
  const std::size_t n = path[0].forms.size();
  std::vector<double> t_all, t_pos;
  std::vector<std::size_t> pos;
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (path[i].forms.size() != n || n == 0) fail(ErrorCode::invalid_argument, "path points need forms of equal size");
    t_all.push_back(path[i].s);
    if (path[i].s > 0.0) {
      t_pos.push_back(path[i].s);
      pos.push_back(i);
    }
  }
  check_distinct(t_all);
  if (t_pos.size() < 2) fail(ErrorCode::invalid_argument, "need at least two samples with t > 0");
  std::vector<double> wI = extrapolation_weights_at_zero(t_all);
  std::vector<double> wII = extrapolation_weights_at_zero(t_pos);
  HalfPipeImmersion out;
  out.I.assign(n, Mat2::Zero());
  out.II.assign(n, Mat2::Zero());
  for (std::size_t i = 0; i < path.size(); ++i)
    for (std::size_t k = 0; k < n; ++k) out.I[k] += wI[i] * path[i].forms.first[k];
  for (std::size_t q = 0; q < pos.size(); ++q) {
    const auto& p = path[pos[q]];
    for (std::size_t k = 0; k < n; ++k) out.II[k] += wII[q] * p.forms.second[k] / p.s;
  }
  // spread of II_t / t across samples measures how far from linear II_t is
  for (std::size_t q = 0; q < pos.size(); ++q) {
    const auto& p = path[pos[q]];
    for (std::size_t k = 0; k < n; ++k)
      out.extrapolation_error =
          std::max(out.extrapolation_error, (p.forms.second[k] / p.s - out.II[k]).cwiseAbs().maxCoeff());
  }
  FirstOrderEstimate plus = first_order_schwarzian(path, End::positive);
  FirstOrderEstimate minus = first_order_schwarzian(path, End::negative);
  out.sigma_plus.resize(n);
  out.sigma_minus.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    out.sigma_plus[k] = -plus.dIIstar_traceless[k];
    out.sigma_minus[k] = -minus.dIIstar_traceless[k];
  }
  return out;
}

}  // namespace el
