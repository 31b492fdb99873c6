#include "epstein_lab/geom.hpp"

#include <cmath>

#include "epstein_lab/error.hpp"

namespace el {

Complex BoundaryPoint::value() const {
  if (inf_) fail(ErrorCode::domain, "boundary point is at infinity");
  return z_;
}

H3Point::H3Point(Complex z_, double t_) : z(z_), t(t_) {
  if (!(t_ > 0.0) || !std::isfinite(t_) || !std::isfinite(z_.real()) || !std::isfinite(z_.imag()))
    fail(ErrorCode::domain, "H3Point needs finite horizontal part and positive height");
}

MoebiusTransform::MoebiusTransform(Complex a, Complex b, Complex c, Complex d) {
  Complex det = a * d - b * c;
  if (std::abs(det) == 0.0) fail(ErrorCode::singular, "Moebius transform with zero determinant");
  Complex s = std::sqrt(det);
  a_ = a / s;
  b_ = b / s;
  c_ = c / s;
  d_ = d / s;
}

MoebiusTransform MoebiusTransform::operator*(const MoebiusTransform& o) const {
  return {a_ * o.a_ + b_ * o.c_, a_ * o.b_ + b_ * o.d_, c_ * o.a_ + d_ * o.c_, c_ * o.b_ + d_ * o.d_};
}

MoebiusTransform MoebiusTransform::inverse() const { return {d_, -b_, -c_, a_}; }

Complex MoebiusTransform::derivative(Complex z) const {
  Complex den = c_ * z + d_;
  return 1.0 / (den * den);
}

double MoebiusTransform::max_deviation(const MoebiusTransform& o) const {
  auto dev = [&](double s) {
    return std::max({std::abs(a_ - s * o.a_), std::abs(b_ - s * o.b_), std::abs(c_ - s * o.c_),
                     std::abs(d_ - s * o.d_)});
  };
  return std::min(dev(1.0), dev(-1.0));
}

BoundaryPoint apply_boundary(const MoebiusTransform& m, const BoundaryPoint& z) {
  if (z.is_infinite()) {
    if (m.c() == 0.0) return BoundaryPoint::infinity();
    return BoundaryPoint::finite(m.a() / m.c());
  }
  Complex w = z.value();
  Complex den = m.c() * w + m.d();
  if (den == 0.0) return BoundaryPoint::infinity();
  return BoundaryPoint::finite((m.a() * w + m.b()) / den);
}

Complex apply_boundary(const MoebiusTransform& m, Complex z) {
  return apply_boundary(m, BoundaryPoint::finite(z)).value();
}

H3Point apply_h3(const MoebiusTransform& m, const H3Point& p) {
  Complex cz_d = m.c() * p.z + m.d();
  double t2 = p.t * p.t;
  double den = std::norm(cz_d) + std::norm(m.c()) * t2;
  Complex z = ((m.a() * p.z + m.b()) * std::conj(cz_d) + m.a() * std::conj(m.c()) * t2) / den;
  return {z, p.t / den};
}

double h3_cosh_distance(const H3Point& p, const H3Point& q) {
  double dt = p.t - q.t;
  return 1.0 + (std::norm(p.z - q.z) + dt * dt) / (2.0 * p.t * q.t);
}

double h3_distance(const H3Point& p, const H3Point& q) {
  // 2 asinh(chord / 2) avoids the cancellation of acosh near 1
  double dt = p.t - q.t;
  double chord2 = (std::norm(p.z - q.z) + dt * dt) / (p.t * q.t);
  return 2.0 * std::asinh(0.5 * std::sqrt(chord2));
}

double visual_metric_density(const H3Point& p, Complex z) {
  return 2.0 * p.t / (p.t * p.t + std::norm(z - p.z));
}

double visual_metric_density(const H3Point& p, const BoundaryPoint& z) {
  if (z.is_infinite()) fail(ErrorCode::domain, "visual metric needs a finite boundary point; rotate the chart");
  return visual_metric_density(p, z.value());
}

Vec3 direction_to_boundary(const H3Point& p, Complex z) {
  Complex dz = z - p.z;
  Vec3 v(2.0 * p.t * dz.real(), 2.0 * p.t * dz.imag(), std::norm(dz) - p.t * p.t);
  return v.normalized();
}

Vec3 direction_to_infinity(const H3Point&) { return {0.0, 0.0, 1.0}; }

H3Point geodesic_point(const H3Point& p, const Vec3& e, double r) {
  // Along the circle orthogonal to the boundary through p tangent to e:
  // horizontal shift t T e_h / (1 - bT), height t sech r / (1 - bT), T = tanh r.
  Vec3 u = e.normalized();
  double b = u.z();
  double T = std::tanh(r);
  double den = 1.0 - b * T;
  Complex shift(u.x(), u.y());
  return {p.z + p.t * T * shift / den, p.t / (std::cosh(r) * den)};
}

BoundaryPoint geodesic_endpoint(const H3Point& p, const Vec3& e) {
  Vec3 u = e.normalized();
  double a = std::hypot(u.x(), u.y());
  double b = u.z();
  if (a < 1e-15) return b > 0 ? BoundaryPoint::infinity() : BoundaryPoint::finite(p.z);
  if (b >= 1.0) return BoundaryPoint::infinity();
  Complex h(u.x() / a, u.y() / a);
  // (1 + b) / a, rewritten where it cancels
  double k = b < 0 ? a / (1.0 - b) : (1.0 + b) / a;
  return BoundaryPoint::finite(p.z + p.t * k * h);
}

double h2_distance(Complex z, Complex w) {
  double chord2 = std::norm(z - w) / (z.imag() * w.imag());
  return 2.0 * std::asinh(0.5 * std::sqrt(chord2));
}

double h2_distance_to_geodesic(Complex z, Complex a, Complex b) {
  Complex w;
  double dx = a.real() - b.real();
  if (std::abs(dx) < 1e-14 * (1.0 + std::abs(a) + std::abs(b))) {
    w = z - a.real();
  } else {
    double c = (std::norm(a) - std::norm(b)) / (2.0 * dx);
    double R = std::abs(a - c);
    w = -(z - (c - R)) / (z - (c + R));
  }
  return std::asinh(std::abs(w.real()) / w.imag());
}

}  // namespace el
