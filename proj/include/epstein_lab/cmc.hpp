#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "epstein_lab/epstein.hpp"
#include "epstein_lab/surface.hpp"

namespace el {

enum class CmcBackendKind { homogeneous, mesh, disk };
const char* backend_name(CmcBackendKind k);

// Which end of the foliation the equation is written for. The negative end
// mirrors H -> -H in both the equation and the change of variables.
enum class EndOrientation { positive, negative };

// Supplies K(tau_h(v)) and N = |B(tau_h(v)) - phi/2|^2_tau per unknown, with derivatives.
class CmcBackend {
 public:
  virtual ~CmcBackend() = default;
  virtual CmcBackendKind kind() const = 0;
  virtual int size() const = 0;
  virtual void evaluate(const ScalarField& v, ScalarField& K, ScalarField& N) const = 0;
  virtual void differentiate(const ScalarField& v, const ScalarField& K, const ScalarField& N, SparseMatrix& dK,
                             SparseMatrix& dN) const = 0;
  virtual ScalarField mass() const { return ScalarField::Ones(size()); }
};

// Constant fields: B vanishes and |phi|_h is a single number.
class HomogeneousBackend : public CmcBackend {
 public:
  explicit HomogeneousBackend(double phi_norm);
  CmcBackendKind kind() const override { return CmcBackendKind::homogeneous; }
  int size() const override { return 1; }
  void evaluate(const ScalarField& v, ScalarField& K, ScalarField& N) const override;
  void differentiate(const ScalarField& v, const ScalarField& K, const ScalarField& N, SparseMatrix& dK,
                     SparseMatrix& dN) const override;
  double phi_norm() const { return phi_norm_; }

 private:
  double phi_norm_;
};

// Genus-2 mesh; phi enters through its pointwise h-norm only.
class MeshBackend : public CmcBackend {
 public:
  MeshBackend(std::shared_ptr<const HyperbolicMesh> mesh, ScalarField phi_norm);
  CmcBackendKind kind() const override { return CmcBackendKind::mesh; }
  int size() const override { return mesh_->num_vertices; }
  void evaluate(const ScalarField& v, ScalarField& K, ScalarField& N) const override;
  void differentiate(const ScalarField& v, const ScalarField& K, const ScalarField& N, SparseMatrix& dK,
                     SparseMatrix& dN) const override;
  ScalarField mass() const override { return lap_.mass; }
  const HyperbolicMesh& mesh() const { return *mesh_; }
  const LinearOperator& laplacian_operator() const { return lap_; }

 private:
  std::shared_ptr<const HyperbolicMesh> mesh_;
  LinearOperator lap_;
  ScalarField phi_norm_;
};

// Square patch of the Poincare disk with v = 0 on two boundary layers.
// Unknowns are the nodes at least two cells from the patch edge.
class DiskPatchBackend : public CmcBackend {
 public:
  DiskPatchBackend(const ChartGrid& grid, QuadDifferential phi);
  CmcBackendKind kind() const override { return CmcBackendKind::disk; }
  int size() const override { return static_cast<int>(nodes_.size()); }
  void evaluate(const ScalarField& v, ScalarField& K, ScalarField& N) const override;
  void differentiate(const ScalarField& v, const ScalarField& K, const ScalarField& N, SparseMatrix& dK,
                     SparseMatrix& dN) const override;

  const ChartGrid& grid() const { return grid_; }
  const QuadDifferential& phi() const { return phi_; }
  const std::vector<std::size_t>& nodes() const { return nodes_; }
  std::vector<double> expand(const ScalarField& v) const;  // to the full grid, zero on the ring
  static double eta_h(Complex z);
  static Complex eta_h_z(Complex z);
  // Epstein leaf of e^{2u} h with u = v - atanh(H), including the boundary ring.
  EpsteinSurface leaf(const ScalarField& v, double H) const;

 private:
  ChartGrid grid_;
  QuadDifferential phi_;
  std::vector<std::size_t> nodes_;
  std::vector<int> slot_;  // grid index -> unknown index or -1
  std::vector<double> eta_;
  std::vector<Complex> eta_z_;
};

struct CmcProblem {
  std::shared_ptr<const CmcBackend> backend;
  EndOrientation orientation = EndOrientation::positive;

  static CmcProblem homogeneous(double phi_norm);
  static CmcProblem mesh(std::shared_ptr<const HyperbolicMesh> m, ScalarField phi_norm);
  // phi = scale * lambda(z) dz^2 on a (2 half)-wide square centered at 0
  static CmcProblem disk(int n, double half, double scale, const std::function<Complex(Complex)>& lambda);
  CmcBackendKind kind() const { return backend->kind(); }
  int size() const { return backend->size(); }
  double oriented(double H) const { return orientation == EndOrientation::positive ? H : -H; }
};

struct CmcSolution {
  double H = 0.0;
  ScalarField v, u;
  double residual_norm = 0.0;
  int newton_iters = 0;
  std::vector<double> residual_history;
};

struct CmcLeafFamily {
  CmcProblem problem;
  std::vector<CmcSolution> solutions;
  std::vector<EpsteinSurface> leaves;
  std::vector<double> leaf_mean_curvature_error;  // max |H_fd - H| per leaf
  std::vector<double> leaf_min_principal, leaf_max_principal;
  std::vector<double> separation_min, separation_max;  // between leaves k and k+1
  bool certified = false;
};

ScalarField change_variables(const ScalarField& u, double H);
ScalarField change_variables_inverse(const ScalarField& v, double H);

ScalarField residual_G(const CmcProblem& p, double H, const ScalarField& v);
LinearOperator linearize_G(const CmcProblem& p, double H, const ScalarField& v);

struct NewtonOptions {
  double tol = 1e-10;
  int max_iter = 50;
};
CmcSolution newton_solve(const CmcProblem& p, double H, const ScalarField& v0, const NewtonOptions& opt = {});

struct ContinuationOptions {
  NewtonOptions newton;
  bool descending = false;      // sweep from H_hi down to H_lo
  double min_step = 1e-4;       // bisection floor
};
CmcLeafFamily continuation(const CmcProblem& p, double H_lo, double H_hi, int steps,
                           const ContinuationOptions& opt = {});

struct FoliationOptions {
  int probe_stride = 4;
  int probe_margin = 8;  // probes stay this many cells away from the patch edge
};
CmcLeafFamily assemble_foliation(CmcLeafFamily fam, const FoliationOptions& opt = {});

}  // namespace el
