#pragma once

#include <array>
#include <complex>

#include <Eigen/Core>

namespace el {

using Complex = std::complex<double>;
using Vec3 = Eigen::Vector3d;

class BoundaryPoint {
 public:
  static BoundaryPoint infinity() { return BoundaryPoint(Complex{}, true); }
  static BoundaryPoint finite(Complex z) { return BoundaryPoint(z, false); }

  bool is_infinite() const { return inf_; }
  Complex value() const;  // throws on infinity

 private:
  BoundaryPoint(Complex z, bool inf) : z_(z), inf_(inf) {}
  Complex z_;
  bool inf_;
};

struct H3Point {
  Complex z;
  double t;

  H3Point() : z(0.0), t(1.0) {}
  H3Point(Complex z_, double t_);
  Vec3 euclidean() const { return {z.real(), z.imag(), t}; }
  static H3Point from_euclidean(const Vec3& x) { return H3Point({x.x(), x.y()}, x.z()); }
};

// z -> (az+b)/(cz+d), stored with ad - bc = 1 up to a global sign.
class MoebiusTransform {
 public:
  MoebiusTransform() : a_(1.0), b_(0.0), c_(0.0), d_(1.0) {}
  MoebiusTransform(Complex a, Complex b, Complex c, Complex d);  // normalizes

  static MoebiusTransform identity() { return {}; }
  static MoebiusTransform translation(Complex b) { return {1.0, b, 0.0, 1.0}; }

  Complex a() const { return a_; }
  Complex b() const { return b_; }
  Complex c() const { return c_; }
  Complex d() const { return d_; }

  MoebiusTransform operator*(const MoebiusTransform& o) const;
  MoebiusTransform inverse() const;
  Complex derivative(Complex z) const;  // 1/(cz+d)^2
  double max_deviation(const MoebiusTransform& o) const;  // entrywise, minimized over sign

 private:
  Complex a_, b_, c_, d_;
};

BoundaryPoint apply_boundary(const MoebiusTransform& m, const BoundaryPoint& z);
Complex apply_boundary(const MoebiusTransform& m, Complex z);
H3Point apply_h3(const MoebiusTransform& m, const H3Point& p);

double h3_distance(const H3Point& p, const H3Point& q);
// cosh of the distance, better conditioned near zero
double h3_cosh_distance(const H3Point& p, const H3Point& q);

// e^eta where V_p = e^{2 eta}|dz|^2
double visual_metric_density(const H3Point& p, const BoundaryPoint& z);
double visual_metric_density(const H3Point& p, Complex z);

// Euclidean unit tangent at p of the geodesic ray from p to the boundary point z.
Vec3 direction_to_boundary(const H3Point& p, Complex z);
Vec3 direction_to_infinity(const H3Point& p);

// Point at hyperbolic distance r along the geodesic leaving p with Euclidean
// unit direction e.
H3Point geodesic_point(const H3Point& p, const Vec3& e, double r);

// Boundary endpoint of the geodesic ray from p in Euclidean unit direction e.
BoundaryPoint geodesic_endpoint(const H3Point& p, const Vec3& e);

// Upper half-plane helpers, used for the torus moduli space.
double h2_distance(Complex z, Complex w);
// hyperbolic distance from z to the complete geodesic through a and b
double h2_distance_to_geodesic(Complex z, Complex a, Complex b);

}  // namespace el
