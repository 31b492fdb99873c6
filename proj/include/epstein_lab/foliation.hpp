#pragma once

#include <array>
#include <complex>
#include <string>
#include <vector>

namespace el {

using Complex = std::complex<double>;

struct TorusPoint {
  Complex tau{0.0, 1.0};

  TorusPoint() = default;
  explicit TorusPoint(Complex t);
};

// Measured foliation of class (m, n) in H_1 of C/(Z + tau Z), scaled by weight.
struct TorusFoliation {
  int m = 1, n = 0;
  double weight = 1.0;
  int reduced_m = 1, reduced_n = 0;  // primitive class
  int multiplicity = 1;              // gcd(m, n)

  TorusFoliation() = default;
  TorusFoliation(int m_, int n_, double w);
  TorusFoliation scaled(double t) const { return {m, n, weight * t}; }
};

enum class Which { horizontal, vertical };

// Coefficient c of the unique q = c dz^2 whose horizontal foliation is F.
Complex hm_section_torus(const TorusPoint& p, const TorusFoliation& F);
// The q whose vertical foliation is F; equals -hm_section_torus(p, F).
Complex hm_section_torus_vertical(const TorusPoint& p, const TorusFoliation& F);
double extremal_length(const TorusPoint& p, const TorusFoliation& F);
// Covector g at tau: d ext(F)(delta tau) = Re(g delta tau).
Complex gardiner_gradient(const TorusPoint& p, const TorusFoliation& F);
// Re <q, mu> for the Beltrami differential of the affine deformation tau -> tau + dtau.
double gardiner_pairing(const TorusPoint& p, Complex c, Complex dtau);

double intersection_number(const TorusPoint& p, Complex c, int a, int b, Which which);
int torus_intersection(const TorusFoliation& F, int a, int b);  // geometric intersection of classes, unweighted
// min over primitive (a, b), |a|, |b| <= N of i(hor) + i(ver)
double filling_scan(const TorusPoint& p, Complex c, int N);

struct CriticalPoint {
  TorusPoint point;
  double gradient_norm = 0.0;
  double certificate = 0.0;  // |q^F + q^G|
  int iterations = 0;
};
CriticalPoint critical_point(const TorusFoliation& F, const TorusFoliation& G, Complex start = Complex(0.0, 1.0));
std::vector<CriticalPoint> teich_line(const TorusFoliation& F, const TorusFoliation& G, const std::vector<double>& t_grid);
// Largest hyperbolic distance from the points to the geodesic through the first and last.
double geodesic_collinearity(const std::vector<Complex>& points);

struct FlatSurface {
  std::vector<std::vector<Complex>> polygons;     // counterclockwise vertex lists
  std::vector<std::array<int, 4>> pairings;       // (poly, edge, poly', edge')
  // derived by finalize()
  std::vector<std::vector<std::array<int, 2>>> partner;
  std::vector<std::vector<int>> corner_class;
  std::vector<double> cone_angles;  // per vertex class
  int genus = 0;
  bool translation = true;          // false when some pairing is a half-turn

  Complex edge_vector(int poly, int edge) const;
  void finalize();
};

struct CycleStep {
  int poly, edge, dir;  // dir = +1 along the polygon orientation, -1 against it
};
using CyclePath = std::vector<CycleStep>;

FlatSurface parse_flat_surface(const std::string& json_text);
std::vector<CyclePath> parse_cycles(const std::string& json_text);
std::vector<Complex> periods(const FlatSurface& s, const std::vector<CyclePath>& cycles);
double intersection_number(const FlatSurface& s, const CyclePath& cycle, Which which);

}  // namespace el
