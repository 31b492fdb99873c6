#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "epstein_lab/geom.hpp"
#include "epstein_lab/grid.hpp"

namespace el {

// sigma = e^{2 eta}|dz|^2 sampled on a planar chart.
struct ConformalMetric {
  ChartGrid grid;
  std::vector<double> eta;

  ConformalMetric() = default;
  ConformalMetric(ChartGrid g, std::vector<double> e);
  static ConformalMetric sample(const ChartGrid& g, const std::function<double(Complex)>& eta);
  static ConformalMetric flat(const ChartGrid& g) { return sample(g, [](Complex) { return 0.0; }); }
  static ConformalMetric poincare_disk(const ChartGrid& g);  // eta = log(2/(1-|z|^2))

  ConformalMetric scaled(double t) const;  // e^{2t} sigma
};

// phi = lambda(z) dz^2. Samples closer than `margin` to the chart edge are untrusted.
struct QuadDifferential {
  ChartGrid grid;
  std::vector<Complex> lambda;
  int margin = 0;
  bool holomorphic = false;
  double holomorphy_tol = 1e-6;  // relative to max|lambda|

  QuadDifferential() = default;
  QuadDifferential(ChartGrid g, std::vector<Complex> l, int margin_ = 0);
  static QuadDifferential sample(const ChartGrid& g, const std::function<Complex(Complex)>& f);
  // Same as sample, additionally checks the dzbar-derivative against the tolerance.
  static QuadDifferential holomorphic_sample(const ChartGrid& g, const std::function<Complex(Complex)>& f,
                                             double rel_tol = 1e-6);

  double max_abs() const;  // over trusted samples
  double max_dzbar() const;
};

struct HolomorphicMap {
  std::function<Complex(Complex)> f;
  std::function<Complex(Complex)> d1, d2, d3;  // optional analytic derivatives
  double fd_step = 1e-2;                       // used when derivatives are missing

  static HolomorphicMap moebius(const MoebiusTransform& m);
};

QuadDifferential schwarzian_derivative(const HolomorphicMap& f, const ChartGrid& chart);
Complex schwarzian_at(const HolomorphicMap& f, Complex z);

QuadDifferential schwarzian_tensor(const ConformalMetric& s1, const ConformalMetric& s2);
QuadDifferential mobius_flat_deviation(const ConformalMetric& s);
// e^{-2 eta}|lambda|, zero on untrusted samples
std::vector<double> qd_norm(const QuadDifferential& phi, const ConformalMetric& s);

// CSV: header line, one chart line, then nx*ny rows "re,im".
void write_field_csv(std::ostream& out, const ChartGrid& g, const std::vector<Complex>& values);
std::pair<ChartGrid, std::vector<Complex>> read_field_csv(std::istream& in);

}  // namespace el
