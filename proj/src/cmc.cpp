#include "epstein_lab/cmc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/SparseLU>

#include "epstein_lab/error.hpp"
#include "epstein_lab/parallel.hpp"

namespace el {

const char* backend_name(CmcBackendKind k) {
  switch (k) {
    case CmcBackendKind::homogeneous: return "homogeneous";
    case CmcBackendKind::mesh: return "mesh";
    case CmcBackendKind::disk: return "disk";
  }
  return "unknown";
}

namespace {

SparseMatrix diagonal(const ScalarField& d) {
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(d.size());
  for (Eigen::Index i = 0; i < d.size(); ++i) t.emplace_back(i, i, d[i]);
  SparseMatrix m(d.size(), d.size());
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

void check_size(const CmcBackend& b, const ScalarField& v) {
  if (v.size() != b.size()) {
    std::ostringstream msg;
    msg << "field has " << v.size() << " entries, the problem has " << b.size() << " unknowns";
    fail(ErrorCode::invalid_argument, msg.str());
  }
}

}  // namespace

HomogeneousBackend::HomogeneousBackend(double phi_norm) : phi_norm_(phi_norm) {
  if (!(phi_norm >= 0.0) || !std::isfinite(phi_norm)) fail(ErrorCode::invalid_argument, "phi norm must be >= 0");
}

void HomogeneousBackend::evaluate(const ScalarField& v, ScalarField& K, ScalarField& N) const {
  K = ScalarField::Constant(1, -std::exp(-2.0 * v[0]));
  N = ScalarField::Constant(1, 0.25 * std::exp(-4.0 * v[0]) * phi_norm_ * phi_norm_);
}

void HomogeneousBackend::differentiate(const ScalarField&, const ScalarField& K, const ScalarField& N, SparseMatrix& dK,
                                       SparseMatrix& dN) const {
  dK = diagonal(-2.0 * K);
  dN = diagonal(-4.0 * N);
}

MeshBackend::MeshBackend(std::shared_ptr<const HyperbolicMesh> mesh, ScalarField phi_norm)
    : mesh_(std::move(mesh)), lap_(laplacian(*mesh_)), phi_norm_(std::move(phi_norm)) {
  if (phi_norm_.size() != mesh_->num_vertices) fail(ErrorCode::invalid_argument, "phi norm needs one value per vertex");
  if ((phi_norm_.array() < 0.0).any() || !phi_norm_.allFinite())
    fail(ErrorCode::invalid_argument, "phi norm must be finite and nonnegative");
}

void MeshBackend::evaluate(const ScalarField& v, ScalarField& K, ScalarField& N) const {
  ScalarField lap = lap_.apply(v);
  K.resize(v.size());
  N.resize(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    K[i] = std::exp(-2.0 * v[i]) * (-lap[i] - 1.0);
    N[i] = 0.25 * std::exp(-4.0 * v[i]) * phi_norm_[i] * phi_norm_[i];
  }
}

void MeshBackend::differentiate(const ScalarField& v, const ScalarField& K, const ScalarField& N, SparseMatrix& dK,
                                SparseMatrix& dN) const {
  ScalarField e2 = (-2.0 * v).array().exp();
  SparseMatrix lap = lap_.pointwise();
  dK = diagonal(-2.0 * K) - diagonal(e2) * lap;
  dN = diagonal(-4.0 * N);
}

double DiskPatchBackend::eta_h(Complex z) { return std::log(2.0 / (1.0 - std::norm(z))); }
Complex DiskPatchBackend::eta_h_z(Complex z) { return std::conj(z) / (1.0 - std::norm(z)); }

DiskPatchBackend::DiskPatchBackend(const ChartGrid& grid, QuadDifferential phi) : grid_(grid), phi_(std::move(phi)) {
  if (!phi_.grid.same_as(grid_)) fail(ErrorCode::chart_mismatch, "phi must be sampled on the patch grid");
  if (grid_.nx < 9 || grid_.ny < 9) fail(ErrorCode::invalid_argument, "disk patch needs at least 9x9 nodes");
  double scale = phi_.max_abs();
  if (scale > 0.0 && phi_.max_dzbar() > phi_.holomorphy_tol * scale)
    fail(ErrorCode::domain, "phi on the disk patch is not holomorphic within tolerance");
  slot_.assign(grid_.size(), -1);
  eta_.resize(grid_.size());
  eta_z_.resize(grid_.size());
  for (std::size_t k = 0; k < grid_.size(); ++k) {
    Complex z = grid_.point(k);
    if (std::norm(z) >= 1.0) fail(ErrorCode::domain, "disk patch must lie inside the unit disk");
    eta_[k] = eta_h(z);
    eta_z_[k] = eta_h_z(z);
    if (grid_.interior(k, 2)) {
      slot_[k] = static_cast<int>(nodes_.size());
      nodes_.push_back(k);
    }
  }
}

std::vector<double> DiskPatchBackend::expand(const ScalarField& v) const {
  check_size(*this, v);
  std::vector<double> full(grid_.size(), 0.0);
  for (std::size_t n = 0; n < nodes_.size(); ++n) full[nodes_[n]] = v[static_cast<Eigen::Index>(n)];
  return full;
}

void DiskPatchBackend::evaluate(const ScalarField& v, ScalarField& K, ScalarField& N) const {
  std::vector<double> full = expand(v);
  K.resize(size());
  N.resize(size());
  parallel_for(nodes_.size(), [&](std::size_t n) {
    std::size_t k = nodes_[n];
    int i = static_cast<int>(k % grid_.nx), j = static_cast<int>(k / grid_.nx);
    double vk = full[k];
    double lap_h = std::exp(-2.0 * eta_[k]) * flat_laplacian(full, grid_, i, j);
    Complex vz = wirtinger_z(full, grid_, i, j);
    Complex B = wirtinger_zz(full, grid_, i, j) - 2.0 * eta_z_[k] * vz - vz * vz;
    Complex C = B - 0.5 * phi_.lambda[k];
    K[n] = std::exp(-2.0 * vk) * (-lap_h - 1.0);
    N[n] = std::exp(-4.0 * (eta_[k] + vk)) * std::norm(C);
  });
}

void DiskPatchBackend::differentiate(const ScalarField& v, const ScalarField& K, const ScalarField& N, SparseMatrix& dK,
                                     SparseMatrix& dN) const {
  std::vector<double> full = expand(v);
  const auto sz = stencil_dz(grid_.spacing);
  const auto szz = stencil_dzz(grid_.spacing);
  const auto sl = stencil_laplacian(grid_.spacing);
  std::vector<Eigen::Triplet<double>> tk, tn;
  for (std::size_t n = 0; n < nodes_.size(); ++n) {
    std::size_t k = nodes_[n];
    int i = static_cast<int>(k % grid_.nx), j = static_cast<int>(k / grid_.nx);
    const int row = static_cast<int>(n);
    double vk = full[k];
    Complex vz = wirtinger_z(full, grid_, i, j);
    Complex B = wirtinger_zz(full, grid_, i, j) - 2.0 * eta_z_[k] * vz - vz * vz;
    Complex C = B - 0.5 * phi_.lambda[k];
    double ck = -std::exp(-2.0 * vk) * std::exp(-2.0 * eta_[k]);
    double cn = 2.0 * std::exp(-4.0 * (eta_[k] + vk));
    Complex wz = eta_z_[k] + vz;
    tk.emplace_back(row, row, -2.0 * K[n]);
    tn.emplace_back(row, row, -4.0 * N[n]);
    auto column = [&](int di, int dj) { return slot_[grid_.index(i + di, j + dj)]; };
    for (const auto& e : sl) {
      int c = column(e.di, e.dj);
      if (c >= 0) tk.emplace_back(row, c, ck * e.w.real());
    }
    // dB = v_zz - 2 (eta_z + v_z) v_z, contracted against conj(C)
    for (const auto& e : szz) {
      int c = column(e.di, e.dj);
      if (c >= 0) tn.emplace_back(row, c, cn * (std::conj(C) * e.w).real());
    }
    for (const auto& e : sz) {
      int c = column(e.di, e.dj);
      if (c >= 0) tn.emplace_back(row, c, cn * (std::conj(C) * (-2.0 * wz) * e.w).real());
    }
  }
  dK.resize(size(), size());
  dN.resize(size(), size());
  dK.setFromTriplets(tk.begin(), tk.end());
  dN.setFromTriplets(tn.begin(), tn.end());
}

EpsteinSurface DiskPatchBackend::leaf(const ScalarField& v, double H) const {
  if (!(std::abs(H) < 1.0)) fail(ErrorCode::domain, "leaf needs |H| < 1");
  std::vector<double> full = expand(v);
  const double shift = std::atanh(H);
  for (double& x : full) x -= shift;
  std::vector<double> eta(grid_.size());
  for (std::size_t k = 0; k < grid_.size(); ++k) eta[k] = eta_[k] + full[k];
  ConformalMetric s(grid_, eta);
  std::vector<Complex> ez(grid_.size(), 0.0);
  for (std::size_t n = 0; n < nodes_.size(); ++n) {
    std::size_t k = nodes_[n];
    int i = static_cast<int>(k % grid_.nx), j = static_cast<int>(k / grid_.nx);
    if (grid_.interior(i, j, 2)) ez[k] = eta_z_[k] + wirtinger_z(full, grid_, i, j);
  }
  EpsteinSurface e = epstein_map(s, ez, 2);
  e.phi = phi_;
  return e;
}

CmcProblem CmcProblem::homogeneous(double phi_norm) {
  return {std::make_shared<HomogeneousBackend>(phi_norm), EndOrientation::positive};
}

CmcProblem CmcProblem::mesh(std::shared_ptr<const HyperbolicMesh> m, ScalarField phi_norm) {
  return {std::make_shared<MeshBackend>(std::move(m), std::move(phi_norm)), EndOrientation::positive};
}

CmcProblem CmcProblem::disk(int n, double half, double scale, const std::function<Complex(Complex)>& lambda) {
  if (!(half > 0.0) || half * std::sqrt(2.0) >= 1.0) fail(ErrorCode::invalid_argument, "disk patch half-width must be in (0, 1/sqrt 2)");
  ChartGrid g = ChartGrid::centered(0.0, half, n);
  QuadDifferential phi = QuadDifferential::sample(g, [&](Complex z) { return scale * lambda(z); });
  phi.holomorphic = true;
  return {std::make_shared<DiskPatchBackend>(g, std::move(phi)), EndOrientation::positive};
}

ScalarField change_variables(const ScalarField& u, double H) {
  if (!(std::abs(H) < 1.0)) fail(ErrorCode::domain, "change of variables needs |H| < 1");
  return (u.array() + std::atanh(H)).matrix();
}

ScalarField change_variables_inverse(const ScalarField& v, double H) {
  if (!(std::abs(H) < 1.0)) fail(ErrorCode::domain, "change of variables needs |H| < 1");
  return (v.array() - std::atanh(H)).matrix();
}

ScalarField residual_G(const CmcProblem& p, double H, const ScalarField& v) {
  check_size(*p.backend, v);
  const double h = p.oriented(H);
  if (!(std::abs(h) <= 1.0)) fail(ErrorCode::domain, "residual needs |H| <= 1");
  ScalarField K, N;
  p.backend->evaluate(v, K, N);
  ScalarField G(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i)
    G[i] = 1.0 - h - 2.0 * h * K[i] + (-1.0 - h) * (K[i] * K[i] - 16.0 * N[i]);
  return G;
}

LinearOperator linearize_G(const CmcProblem& p, double H, const ScalarField& v) {
  check_size(*p.backend, v);
  const double h = p.oriented(H);
  if (!(h < 1.0 && h >= -1.0)) fail(ErrorCode::degenerate, "linearization is degenerate at H = 1");
  ScalarField K, N;
  p.backend->evaluate(v, K, N);
  SparseMatrix dK, dN;
  p.backend->differentiate(v, K, N, dK, dN);
  ScalarField a = (-2.0 * h - 2.0 * (1.0 + h) * K.array()).matrix();
  SparseMatrix J = diagonal(a) * dK + 16.0 * (1.0 + h) * dN;
  LinearOperator op;
  op.kind = LinearOperator::Kind::jacobian;
  op.mass = p.backend->mass();
  op.weak = diagonal(op.mass) * J;
  return op;
}

CmcSolution newton_solve(const CmcProblem& p, double H, const ScalarField& v0, const NewtonOptions& opt) {
  const double h = p.oriented(H);
  if (!(std::abs(h) < 1.0 || h == -1.0)) fail(ErrorCode::domain, "Newton solve needs |H| < 1 or the anchor H = -1");
  CmcSolution s;
  s.H = H;
  s.v = v0;
  ScalarField G = residual_G(p, H, s.v);
  double r = G.lpNorm<Eigen::Infinity>();
  s.residual_history.push_back(r);
  int increases = 0;
  while (!(r < opt.tol)) {
    if (!std::isfinite(r)) fail(ErrorCode::divergence, "Newton residual became non-finite");
    if (s.newton_iters >= opt.max_iter) {
      std::ostringstream msg;
      msg << "Newton did not reach tol " << opt.tol << " at H = " << H << " (residual " << r << ")";
      fail(ErrorCode::not_converged, msg.str());
    }
    LinearOperator J = linearize_G(p, H, s.v);
    SparseMatrix A = J.pointwise();
    A.makeCompressed();
    Eigen::SparseLU<SparseMatrix> lu;
    lu.compute(A);
    if (lu.info() != Eigen::Success) fail(ErrorCode::singular, "Newton linear solve failed (singular Jacobian)");
    ScalarField dv = lu.solve(-G);
    if (lu.info() != Eigen::Success) fail(ErrorCode::singular, "Newton linear solve failed");
    s.v += dv;
    ++s.newton_iters;
    G = residual_G(p, H, s.v);
    double rn = G.lpNorm<Eigen::Infinity>();
    s.residual_history.push_back(rn);
    increases = rn > r ? increases + 1 : 0;
    r = rn;
    if (increases >= 2) {
      std::ostringstream msg;
      msg << "Newton diverged at H = " << H << " (residual increased twice, now " << r << ")";
      fail(ErrorCode::divergence, msg.str());
    }
  }
  s.residual_norm = r;
  if (std::abs(h) < 1.0) s.u = change_variables_inverse(s.v, h);
  return s;
}

CmcLeafFamily continuation(const CmcProblem& p, double H_lo, double H_hi, int steps, const ContinuationOptions& opt) {
  if (steps < 1) fail(ErrorCode::invalid_argument, "continuation needs at least one step");
  if (!(H_lo > -1.0 && H_hi < 1.0 && (H_lo < H_hi || (steps == 1 && H_lo <= H_hi))))
    fail(ErrorCode::invalid_argument, "continuation needs -1 < H_lo < H_hi < 1");
  std::vector<double> grid(steps);
  for (int k = 0; k < steps; ++k)
    grid[k] = steps == 1 ? H_lo : H_lo + (H_hi - H_lo) * static_cast<double>(k) / (steps - 1);
  if (opt.descending) std::reverse(grid.begin(), grid.end());

  CmcLeafFamily fam;
  fam.problem = p;
  ScalarField v = ScalarField::Zero(p.size());
  double H_prev = std::numeric_limits<double>::quiet_NaN();
  for (double target : grid) {
    if (std::isnan(H_prev)) {
      CmcSolution s = newton_solve(p, target, v, opt.newton);
      v = s.v;
      H_prev = target;
      fam.solutions.push_back(std::move(s));
      continue;
    }
    try {
      CmcSolution s = newton_solve(p, target, v, opt.newton);
      v = s.v;
      H_prev = target;
      fam.solutions.push_back(std::move(s));
      continue;
    } catch (const Error&) {
    }
    // bisect the step, advancing through intermediate values of H
    double h = H_prev, step = 0.5 * (target - H_prev);
    while (h != target) {
      if (std::abs(step) < opt.min_step) {
        std::ostringstream msg;
        msg << "continuation failed near H = " << h << " while stepping to " << target;
        fail(ErrorCode::not_converged, msg.str());
      }
      double next = std::abs(target - h) <= std::abs(step) ? target : h + step;
      try {
        CmcSolution s = newton_solve(p, next, v, opt.newton);
        v = s.v;
        h = next;
        if (h == target) fam.solutions.push_back(std::move(s));
      } catch (const Error&) {
        step *= 0.5;
      }
    }
    H_prev = target;
  }
  if (opt.descending) std::reverse(fam.solutions.begin(), fam.solutions.end());
  return fam;
}

CmcLeafFamily assemble_foliation(CmcLeafFamily fam, const FoliationOptions& opt) {
  auto disk = std::dynamic_pointer_cast<const DiskPatchBackend>(fam.problem.backend);
  if (!disk) fail(ErrorCode::invalid_argument, "leaves as Epstein surfaces need the disk backend");
  const std::size_t n = fam.solutions.size();
  fam.leaves.clear();
  fam.leaf_mean_curvature_error.assign(n, 0.0);
  fam.leaf_min_principal.assign(n, 0.0);
  fam.leaf_max_principal.assign(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const CmcSolution& s = fam.solutions[k];
    if (s.u.size() != s.v.size()) fail(ErrorCode::invalid_argument, "leaf needs |H| < 1");
    if (k > 0 && !(s.H > fam.solutions[k - 1].H)) fail(ErrorCode::invalid_argument, "family H must increase strictly");
    double h = fam.problem.oriented(s.H);
    EpsteinSurface leaf = disk->leaf(s.v, h);
    ImmersionData forms = fundamental_forms_fd(leaf);
    double err = 0.0, lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t q = 0; q < forms.size(); ++q) {
      err = std::max(err, std::abs(forms.mean_curvature(q) - h));
      auto [l1, l2] = forms.principal_curvatures(q);
      lo = std::min(lo, l1);
      hi = std::max(hi, l2);
    }
    fam.leaf_mean_curvature_error[k] = err;
    fam.leaf_min_principal[k] = lo;
    fam.leaf_max_principal[k] = hi;
    fam.leaves.push_back(std::move(leaf));
  }
  fam.separation_min.assign(n > 0 ? n - 1 : 0, 0.0);
  fam.separation_max.assign(n > 0 ? n - 1 : 0, 0.0);
  const ChartGrid& g = disk->grid();
  std::vector<std::size_t> probes;
  for (int j = opt.probe_margin; j < g.ny - opt.probe_margin; j += opt.probe_stride)
    for (int i = opt.probe_margin; i < g.nx - opt.probe_margin; i += opt.probe_stride) probes.push_back(g.index(i, j));
  for (std::size_t k = 0; k + 1 < n; ++k) {
    std::vector<double> d(probes.size());
    parallel_for(probes.size(), [&](std::size_t q) {
      d[q] = signed_distance_probe(fam.leaves[k], fam.leaves[k + 1].samples[probes[q]]).distance;
    });
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (double x : d) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
    fam.separation_min[k] = lo;
    fam.separation_max[k] = hi;
    if (!(lo > 0.0)) {
      std::ostringstream msg;
      msg << "monotonicity violated between the leaves at H = " << fam.solutions[k].H << " and H = "
          << fam.solutions[k + 1].H << " (min signed separation " << lo << ")";
      fail(ErrorCode::certificate, msg.str());
    }
  }
  fam.certified = true;
  return fam;
}

}  // namespace el
