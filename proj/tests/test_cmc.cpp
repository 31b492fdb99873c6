#include <cmath>
#include <memory>
#include <random>

#include "doctest.h"
#include "epstein_lab/cmc.hpp"
#include "epstein_lab/error.hpp"

using namespace el;

namespace {

// G for constant fields: K = -e^{-2t}, N = |phi|^2 e^{-4t} / 4
double scalar_G(double H, double t, double phi) {
  double K = -std::exp(-2 * t), N = 0.25 * phi * phi * std::exp(-4 * t);
  return 1 - H - 2 * H * K - (1 + H) * (K * K - 16 * N);
}

// root of scalar_G in t by bisection, bracketing near 0
double scalar_root(double H, double phi) {
  double a = -0.5, b = 0.5;
  double fa = scalar_G(H, a, phi);
  for (int i = 0; i < 200; ++i) {
    double m = 0.5 * (a + b), fm = scalar_G(H, m, phi);
    if ((fm < 0) == (fa < 0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

Complex lambda_poly(Complex z) { return 1.0 + 0.3 * z - Complex(0.2, 0.1) * z * z; }

std::shared_ptr<const HyperbolicMesh> small_mesh() {
  static auto m = std::make_shared<const HyperbolicMesh>(build_genus2_octagon(2));
  return m;
}

ScalarField disk_field(const CmcProblem& p, double amp, int mode) {
  auto d = std::dynamic_pointer_cast<const DiskPatchBackend>(p.backend);
  ScalarField v(p.size());
  for (int n = 0; n < p.size(); ++n) {
    Complex z = d->grid().point(d->nodes()[n]);
    // tapered so the field meets the zero ring smoothly
    double bump = 16 * (0.25 - z.real() * z.real()) * (0.25 - z.imag() * z.imag());
    v[n] = amp * bump * bump * std::cos(3 * z.real() + mode) * std::sin(2 * z.imag() + 0.5 * mode + 0.3);
  }
  return v;
}

double rel_fd_error(const CmcProblem& p, double H, const ScalarField& v, const ScalarField& dir) {
  const double h = 1e-6;
  ScalarField fd = (residual_G(p, H, v + h * dir) - residual_G(p, H, v - h * dir)) / (2 * h);
  ScalarField an = linearize_G(p, H, v).apply(dir);
  return (fd - an).norm() / an.norm();
}

}  // namespace

TEST_SUITE("cmc") {

TEST_CASE("change of variables") {
  ScalarField u = ScalarField::Constant(4, 0.3);
  CHECK((change_variables(u, 0.0) - u).cwiseAbs().maxCoeff() == 0.0);
  ScalarField z = ScalarField::Zero(3);
  CHECK((change_variables(z, std::tanh(1.0)).array() - 1.0).abs().maxCoeff() < 1e-15);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-1, 1);
  ScalarField r(10);
  for (auto& x : r) x = U(rng);
  for (double H : {-0.9, -0.2, 0.5}) CHECK((change_variables_inverse(change_variables(r, H), H) - r).cwiseAbs().maxCoeff() < 1e-15);
  CHECK_THROWS_AS(change_variables(r, 1.0), Error);
}

TEST_CASE("anchor identity on all backends") {
  CmcProblem probs[] = {CmcProblem::homogeneous(0.0),
                        CmcProblem::mesh(small_mesh(), ScalarField::Zero(small_mesh()->num_vertices)),
                        CmcProblem::disk(41, 0.5, 0.0, lambda_poly)};
  for (const auto& p : probs) {
    ScalarField zero = ScalarField::Zero(p.size());
    for (int k = 0; k <= 20; ++k) {
      double H = -1.0 + 0.1 * k;
      CHECK(residual_G(p, H, zero).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("constant fields match the scalar closed form") {
  auto hom = CmcProblem::homogeneous(0.0);
  auto mesh = CmcProblem::mesh(small_mesh(), ScalarField::Zero(small_mesh()->num_vertices));
  auto disk = CmcProblem::disk(41, 0.5, 0.0, lambda_poly);
  auto d = std::dynamic_pointer_cast<const DiskPatchBackend>(disk.backend);
  for (double H : {-0.7, 0.0, 0.4}) {
    for (double t : {-0.2, 0.15}) {
      double ref = scalar_G(H, t, 0.0);
      CHECK(residual_G(hom, H, ScalarField::Constant(1, t))[0] == doctest::Approx(ref).epsilon(1e-13));
      ScalarField gm = residual_G(mesh, H, ScalarField::Constant(mesh.size(), t));
      CHECK((gm.array() - ref).abs().maxCoeff() < 1e-10);
      // away from the Dirichlet ring the stencils only see the constant
      ScalarField gd = residual_G(disk, H, ScalarField::Constant(disk.size(), t));
      for (int n = 0; n < disk.size(); ++n)
        if (d->grid().interior(d->nodes()[n], 4)) REQUIRE(std::abs(gd[n] - ref) < 1e-12);
    }
  }
  // phi enters through N on the homogeneous backend
  CHECK(residual_G(CmcProblem::homogeneous(0.3), 0.2, ScalarField::Constant(1, 0.1))[0] ==
        doctest::Approx(scalar_G(0.2, 0.1, 0.3)).epsilon(1e-13));
}

TEST_CASE("linearization at the anchor is 2(2 id - Laplacian)") {
  auto m = small_mesh();
  auto p = CmcProblem::mesh(m, ScalarField::Zero(m->num_vertices));
  ScalarField zero = ScalarField::Zero(m->num_vertices);
  Eigen::MatrixXd ref = 2.0 * Eigen::MatrixXd(helmholtz(*m, ScalarField::Constant(m->num_vertices, 2.0)).pointwise());
  // dG/dK = -2H - 2(1 + H)K = 2 at K = -1 for every H, and dK = (2 - Delta) dv
  for (double H : {-1.0, -0.5, 0.0, 0.6}) {
    Eigen::MatrixXd J = linearize_G(p, H, zero).pointwise();
    CHECK((J - ref).cwiseAbs().maxCoeff() < 1e-12 * ref.cwiseAbs().maxCoeff());
  }
  CHECK_THROWS_AS(linearize_G(p, 1.0, zero), Error);
}

TEST_CASE("linearization matches finite differences") {
  auto m = small_mesh();
  ScalarField prof = smooth_random_field(*m, 9);
  auto mesh = CmcProblem::mesh(m, (0.1 * (1.0 + 0.5 * prof.array())).matrix());
  auto disk = CmcProblem::disk(41, 0.5, 0.05, lambda_poly);
  auto hom = CmcProblem::homogeneous(0.2);
  for (int s = 0; s < 5; ++s) {
    double H = -0.8 + 0.4 * s;
    ScalarField vm = 0.2 * smooth_random_field(*m, 100 + s), dm = smooth_random_field(*m, 200 + s);
    CHECK(rel_fd_error(mesh, H, vm, dm) < 1e-5);
    CHECK(rel_fd_error(disk, H, disk_field(disk, 0.1, s), disk_field(disk, 1.0, s + 7)) < 1e-5);
    CHECK(rel_fd_error(hom, H, ScalarField::Constant(1, 0.1 * s - 0.2), ScalarField::Ones(1)) < 1e-5);
  }
}

TEST_CASE("Newton solve") {
  auto flat = CmcProblem::disk(41, 0.5, 0.0, lambda_poly);
  CmcSolution s0 = newton_solve(flat, 0.3, ScalarField::Zero(flat.size()));
  CHECK(s0.newton_iters == 0);
  CHECK(s0.v.cwiseAbs().maxCoeff() == 0.0);
  CHECK((s0.u.array() + std::atanh(0.3)).abs().maxCoeff() < 1e-15);

  // homogeneous backend against the scalar root
  for (double H : {-0.6, 0.0, 0.7}) {
    CmcSolution s = newton_solve(CmcProblem::homogeneous(0.1), H, ScalarField::Zero(1), {1e-14, 50});
    CHECK(s.v[0] == doctest::Approx(scalar_root(H, 0.1)).epsilon(1e-10));
  }

  // phi enters quadratically, so the solution does too
  double sup[2];
  for (int k = 0; k < 2; ++k) {
    auto p = CmcProblem::disk(41, 0.5, k == 0 ? 1e-2 : 5e-3, lambda_poly);
    CmcSolution s = newton_solve(p, 0.0, ScalarField::Zero(p.size()));
    CHECK(s.residual_norm < 1e-10);
    sup[k] = s.v.cwiseAbs().maxCoeff();
  }
  CHECK(sup[0] / sup[1] == doctest::Approx(4.0).epsilon(0.05));

  // basin: a perturbed start converges to the same solution
  auto p = CmcProblem::disk(41, 0.5, 1e-2, lambda_poly);
  CmcSolution a = newton_solve(p, 0.0, ScalarField::Zero(p.size()), {1e-13, 50});
  CmcSolution b = newton_solve(p, 0.0, disk_field(p, 0.1, 2), {1e-13, 50});
  CHECK((a.v - b.v).cwiseAbs().maxCoeff() < 1e-8);

  // quadratic convergence: e_{k+1} / e_k^2 stays bounded
  const auto& hist = b.residual_history;
  REQUIRE(hist.size() >= 4);
  for (std::size_t k = hist.size() - 3; k + 1 < hist.size(); ++k)
    if (hist[k] > 1e-9) CHECK(hist[k + 1] / (hist[k] * hist[k]) < 100.0);
}

TEST_CASE("negative orientation mirrors H") {
  auto p = CmcProblem::homogeneous(0.2);
  CmcProblem q = p;
  q.orientation = EndOrientation::negative;
  ScalarField v = ScalarField::Constant(1, 0.05);
  for (double H : {-0.5, 0.3}) CHECK(residual_G(q, H, v)[0] == residual_G(p, -H, v)[0]);
}

TEST_CASE("continuation of the Fuchsian family") {
  auto p = CmcProblem::disk(41, 0.5, 0.0, lambda_poly);
  CmcLeafFamily fam = continuation(p, -0.9, 0.9, 19);
  REQUIRE(fam.solutions.size() == 19);
  for (const auto& s : fam.solutions) {
    CHECK(s.v.cwiseAbs().maxCoeff() == 0.0);
    CHECK((s.u.array() + 0.5 * std::log((1 + s.H) / (1 - s.H))).abs().maxCoeff() < 1e-14);
  }
  fam = assemble_foliation(fam);
  CHECK(fam.certified);
  for (std::size_t k = 0; k + 1 < fam.solutions.size(); ++k) {
    double expect = std::atanh(fam.solutions[k + 1].H) - std::atanh(fam.solutions[k].H);
    CHECK(std::abs(fam.separation_min[k] - expect) < 1e-4);
    CHECK(std::abs(fam.separation_max[k] - expect) < 1e-4);
  }
  CHECK_THROWS_AS(continuation(p, 0.5, -0.5, 5), Error);

  CmcLeafFamily one = assemble_foliation(continuation(p, 0.2, 0.2, 1));
  CHECK(one.certified);
  CHECK(one.separation_min.empty());
}

TEST_CASE("continuation with small phi") {
  auto p = CmcProblem::disk(41, 0.5, 1e-2, lambda_poly);
  ContinuationOptions up, down;
  up.newton.tol = down.newton.tol = 1e-12;
  down.descending = true;
  CmcLeafFamily a = continuation(p, -0.9, 0.9, 10, up);
  CmcLeafFamily b = continuation(p, -0.9, 0.9, 10, down);
  REQUIRE(a.solutions.size() == b.solutions.size());
  for (std::size_t k = 0; k < a.solutions.size(); ++k) {
    CHECK(a.solutions[k].H == b.solutions[k].H);
    CHECK(a.solutions[k].residual_norm < 1e-12);
    CHECK((a.solutions[k].v - b.solutions[k].v).cwiseAbs().maxCoeff() < 1e-8);
  }
  a = assemble_foliation(a);
  CHECK(a.certified);
  for (std::size_t k = 0; k < a.solutions.size(); ++k) {
    CHECK(a.leaf_mean_curvature_error[k] < 2e-3);
    CHECK(a.leaf_min_principal[k] > -1.0);
    CHECK(a.leaf_max_principal[k] < 1.0);
  }
}

TEST_CASE("leaves from independent grids agree") {
  auto coarse = CmcProblem::disk(41, 0.5, 1e-2, lambda_poly);
  auto fine = CmcProblem::disk(61, 0.5, 1e-2, lambda_poly);
  auto dc = std::dynamic_pointer_cast<const DiskPatchBackend>(coarse.backend);
  auto df = std::dynamic_pointer_cast<const DiskPatchBackend>(fine.backend);
  for (double H : {-0.5, 0.0, 0.5}) {
    EpsteinSurface a = dc->leaf(newton_solve(coarse, H, ScalarField::Zero(coarse.size())).v, H);
    EpsteinSurface b = df->leaf(newton_solve(fine, H, ScalarField::Zero(fine.size())).v, H);
    double worst = 0.0;
    for (std::size_t k = 0; k < a.samples.size(); ++k)
      if (a.grid.interior(k, 10)) worst = std::max(worst, std::abs(signed_distance_probe(b, a.samples[k]).distance));
    CHECK(worst < 1e-3);
  }
}

TEST_CASE("disk backend rejects bad data") {
  CHECK_THROWS_AS(CmcProblem::disk(41, 0.8, 0.0, lambda_poly), Error);
  ChartGrid g = ChartGrid::centered(0.0, 0.5, 41);
  QuadDifferential q = QuadDifferential::sample(g, [](Complex z) { return Complex(std::conj(z)); });
  try {
    DiskPatchBackend bad(g, q);
    FAIL("expected a domain error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::domain);
  }
}

}
