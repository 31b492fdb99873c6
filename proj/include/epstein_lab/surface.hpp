#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace el {

using Complex = std::complex<double>;
using ScalarField = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

// Closed triangulated surface whose metric is given by edge lengths; each
// triangle is flat with those side lengths, so curvature sits at vertices.
struct HyperbolicMesh {
  int genus = 0;
  int num_vertices = 0;
  std::vector<std::array<int, 3>> triangles;
  // edge_lengths[f][k] is the length of the side from triangles[f][k] to triangles[f][(k+1)%3]
  std::vector<std::array<double, 3>> edge_lengths;
  std::vector<Complex> positions;  // disk position of one lift per vertex (export only)
  std::vector<double> vertex_angle_defect;
  std::vector<std::vector<int>> fans;  // triangles around each vertex

  int num_edges() const { return static_cast<int>(3 * triangles.size() / 2); }
  int euler_characteristic() const { return num_vertices - num_edges() + static_cast<int>(triangles.size()); }
  double area() const;
  ScalarField vertex_area() const;  // lumped mass, a third of each incident triangle
  double max_edge_length() const;

  // Fills vertex_angle_defect and fans; validates lengths and genus.
  void finalize();
};

HyperbolicMesh build_genus2_octagon(int subdiv);

struct LinearOperator {
  enum class Kind { laplacian, helmholtz, jacobian };
  Kind kind = Kind::laplacian;
  SparseMatrix weak;      // pointwise action is mass^{-1} * weak
  ScalarField mass;

  ScalarField apply(const ScalarField& u) const;
  SparseMatrix pointwise() const;
  double symmetry_defect() const;  // of the weak matrix, relative
};

LinearOperator laplacian(const HyperbolicMesh& m);
LinearOperator helmholtz(const HyperbolicMesh& m, const ScalarField& f);  // f - Delta

ScalarField curvature_of_conformal(const HyperbolicMesh& m, const ScalarField& u);
// Integral of K(e^{2u} h) against the area of e^{2u} h.
double total_curvature(const HyperbolicMesh& m, const ScalarField& u);

struct HelmholtzOptions {
  double tol = 1e-12;
  int max_iter = -1;  // default 10 n
  std::optional<ScalarField> guess;
};
// Solves f u - Delta u = lam.
ScalarField solve_helmholtz(const HyperbolicMesh& m, const ScalarField& f, const ScalarField& lam,
                            const HelmholtzOptions& opt = {});
double helmholtz_residual(const HyperbolicMesh& m, const ScalarField& f, const ScalarField& u, const ScalarField& lam);

// Smooth field with max |value| = 1, from filtering seeded white noise through (f - Delta)^{-1}.
ScalarField smooth_random_field(const HyperbolicMesh& m, std::uint64_t seed, double f = 1.0);

void write_mesh(std::ostream& obj, std::ostream& lengths_csv, const HyperbolicMesh& m);
HyperbolicMesh read_mesh(std::istream& obj, std::istream& lengths_csv);
void write_vertex_field(std::ostream& out, const ScalarField& u, const char* name = "value");

}  // namespace el
