#pragma once

#include <iosfwd>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "epstein_lab/geom.hpp"
#include "epstein_lab/grid.hpp"
#include "epstein_lab/schwarzian.hpp"

namespace el {

using Mat2 = Eigen::Matrix2d;

// Pointwise I, II, III and B = I^{-1} II, in whatever frame the producer uses.
// `site` maps entries back to chart samples when the data came from a chart.
struct ImmersionData {
  std::vector<Mat2> first, second, third, shape;
  std::vector<std::size_t> site;

  std::size_t size() const { return first.size(); }
  static ImmersionData from_forms(std::vector<Mat2> first, std::vector<Mat2> second);
  double mean_curvature(std::size_t k) const { return 0.5 * shape[k].trace(); }
  std::pair<double, double> principal_curvatures(std::size_t k) const;
  // max |II - I B| and max |I B - (I B)^T|, relative to |I|
  double max_form_defect() const;
};

struct EpsteinSurface {
  ChartGrid grid;
  int margin = 2;                // samples with grid.interior(k, margin) are defined
  std::vector<H3Point> samples;  // one per grid point; undefined outside the margin
  std::vector<Vec3> normal;      // Euclidean unit normal, pointing at the chart point
  ConformalMetric source;
  std::optional<QuadDifferential> phi;
  bool immersion = false;

  bool defined(std::size_t k) const { return grid.interior(k, margin); }
};

EpsteinSurface epstein_map(const ConformalMetric& s);
// Same map with eta_z supplied by the caller (values inside `margin` are used).
EpsteinSurface epstein_map(const ConformalMetric& s, const std::vector<Complex>& eta_z, int margin);
H3Point epstein_point(Complex z, double eta, Complex eta_z);

// (K^2 - 1 - 16N) / ((K - 1)^2 - 16N), N = e^{-4 eta}|B - lambda/2|^2
double mean_curvature_value(double K, Complex B, Complex lambda, double eta);
std::vector<double> mean_curvature_formula(const ConformalMetric& s, const QuadDifferential* phi = nullptr);

ImmersionData fundamental_forms_fd(const EpsteinSurface& e);
ImmersionData equidistant_flow(const ImmersionData& d, double r);

struct ProbeResult {
  double distance;  // signed; positive on the side opposite to the normal
  double foot_i, foot_j;  // chart index coordinates of the nearest point
};
ProbeResult signed_distance_probe(const EpsteinSurface& leaf, const H3Point& p);

void write_surface_obj(std::ostream& out, const EpsteinSurface& e);
// z_re,z_im,height,H,lambda1,lambda2 for each site of the forms
void write_surface_csv(std::ostream& out, const EpsteinSurface& e, const ImmersionData& forms);

}  // namespace el
