#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include <Eigen/Core>

#include "epstein_lab/epstein.hpp"
#include "epstein_lab/surface.hpp"

namespace el {

using Mat4 = Eigen::Matrix4d;

enum class End { positive, negative };

// Re q per vertex as a traceless symmetric matrix in an h-orthonormal frame.
using TracelessField = std::vector<Mat2>;

TracelessField synthetic_traceless_field(const HyperbolicMesh& m, std::uint64_t seed, double scale);
// det_h(Re q) per vertex; non-positive for traceless forms.
ScalarField traceless_det(const TracelessField& q);

struct MinimalPathPoint {
  double s = 0.0;
  ScalarField u;
  ScalarField detq;
  ImmersionData forms;  // I = e^{2u} h, II = s Re q; empty when built from detq alone
  double gauss_residual = 0.0;
  int newton_iters = 0;
};

struct GaussOptions {
  double tol = 1e-11;
  int max_iter = 40;
};

// Newton on -Delta u - 1 + e^{2u} - e^{-2u} s^2 detq = 0.
MinimalPathPoint solve_gauss_equation(const HyperbolicMesh& m, const ScalarField& detq, double s,
                                      const GaussOptions& opt = {}, const ScalarField* u0 = nullptr);
MinimalPathPoint solve_gauss_equation(const HyperbolicMesh& m, const TracelessField& q, double s,
                                      const GaussOptions& opt = {}, const ScalarField* u0 = nullptr);
// Constant data: e^{2u} solves x^2 - x - s^2 c = 0 (scalar Newton, independent of the mesh).
double solve_gauss_homogeneous(double detq, double s);
// Largest |residual| of e^{-2u}(-Delta u - 1) - (-1 + e^{-4u} s^2 detq).
double gauss_residual(const HyperbolicMesh& m, const ScalarField& u, const ScalarField& detq, double s);

struct FormsAtInfinity {
  std::vector<Mat2> Istar, IIstar, IIstar_traceless;
  std::vector<double> Kstar, Hstar;
};
FormsAtInfinity forms_at_infinity(const ImmersionData& d, End end = End::positive);

struct FirstOrderEstimate {
  std::vector<Mat2> dIstar, dIIstar_traceless;
  std::vector<double> dKstar;
};
// Derivatives at s = 0 from the interpolating polynomial through all samples.
FirstOrderEstimate first_order_schwarzian(const std::vector<MinimalPathPoint>& path, End end = End::positive);

// Weights w_i with p'(0) = sum w_i f(x_i) for the interpolant through (x_i, f_i).
std::vector<double> derivative_weights_at_zero(const std::vector<double>& x);
// Weights w_i with p(0) = sum w_i f(x_i).
std::vector<double> extrapolation_weights_at_zero(const std::vector<double>& x);

struct HolonomyPath4 {
  std::vector<double> t;                 // samples, geometric sequence towards 0
  std::vector<std::vector<Mat4>> rho;    // rho[sample][generator]
  void validate() const;
};

struct HalfPipeLimit {
  std::vector<Mat4> limit;
  double extrapolation_error = 0.0;  // change when the coarsest sample is dropped
  double constraint_residual = 0.0;  // block form and O(2,1) membership
  bool in_group = false;
};
HalfPipeLimit halfpipe_limit_holonomy(const HolonomyPath4& p, double tol = 1e-6);

struct HalfPipeImmersion {
  std::vector<Mat2> I, II;               // lim I_t and lim II_t / t
  std::vector<Mat2> sigma_plus, sigma_minus;  // -d(II*)_0/dt at the two ends
  double extrapolation_error = 0.0;
};
// The path parameter is used as t; samples at t = 0 are skipped for II_t / t.
HalfPipeImmersion halfpipe_limit_immersion(const std::vector<MinimalPathPoint>& path);

}  // namespace el
