#include "epstein_lab/surface.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

#include <Eigen/IterativeLinearSolvers>

#include "epstein_lab/error.hpp"

namespace el {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Kahan's stable Heron formula.
double triangle_area(double a, double b, double c) {
  std::array<double, 3> s{a, b, c};
  std::sort(s.begin(), s.end(), std::greater<>());
  a = s[0];
  b = s[1];
  c = s[2];
  double p = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c));
  return 0.25 * std::sqrt(std::max(0.0, p));
}

// Cotangent of the angle opposite side `a` in the triangle with sides a, b, c.
double cot_opposite(double a, double b, double c, double area) { return (b * b + c * c - a * a) / (4.0 * area); }

double angle_opposite(double a, double b, double c) {
  double cs = (b * b + c * c - a * a) / (2.0 * b * c);
  return std::acos(std::clamp(cs, -1.0, 1.0));
}

using HPoint = Eigen::Vector3d;  // hyperboloid (x0, x1, x2), x0^2 - x1^2 - x2^2 = 1

HPoint from_disk(Complex z) {
  double r2 = std::norm(z);
  double s = 1.0 / (1.0 - r2);
  return {(1.0 + r2) * s, 2.0 * z.real() * s, 2.0 * z.imag() * s};
}

Complex to_disk(const HPoint& p) { return Complex(p[1], p[2]) / (1.0 + p[0]); }

double minkowski(const HPoint& a, const HPoint& b) { return -a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

double hyperboloid_distance(const HPoint& p, const HPoint& q) {
  HPoint d = p - q;
  return 2.0 * std::asinh(0.5 * std::sqrt(std::max(0.0, minkowski(d, d))));
}

HPoint midpoint(const HPoint& p, const HPoint& q) {
  HPoint s = p + q;
  return s / std::sqrt(-minkowski(s, s));
}

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace

double HyperbolicMesh::area() const {
  double a = 0.0;
  for (const auto& l : edge_lengths) a += triangle_area(l[0], l[1], l[2]);
  return a;
}

ScalarField HyperbolicMesh::vertex_area() const {
  ScalarField m = ScalarField::Zero(num_vertices);
  for (std::size_t f = 0; f < triangles.size(); ++f) {
    const auto& l = edge_lengths[f];
    double a = triangle_area(l[0], l[1], l[2]) / 3.0;
    for (int v : triangles[f]) m[v] += a;
  }
  return m;
}

double HyperbolicMesh::max_edge_length() const {
  double m = 0.0;
  for (const auto& l : edge_lengths) m = std::max({m, l[0], l[1], l[2]});
  return m;
}

void HyperbolicMesh::finalize() {
  if (triangles.size() != edge_lengths.size()) fail(ErrorCode::invalid_argument, "one length triple per triangle");
  if (triangles.size() % 2 != 0) fail(ErrorCode::invalid_argument, "closed triangle mesh needs an even face count");
  fans.assign(num_vertices, {});
  vertex_angle_defect.assign(num_vertices, 2.0 * kPi);
  for (std::size_t f = 0; f < triangles.size(); ++f) {
    const auto& t = triangles[f];
    const auto& l = edge_lengths[f];
    for (int k = 0; k < 3; ++k) {
      if (t[k] < 0 || t[k] >= num_vertices) fail(ErrorCode::invalid_argument, "triangle references a missing vertex");
      if (!(l[k] > 0.0) || !std::isfinite(l[k])) fail(ErrorCode::invalid_argument, "edge lengths must be positive");
    }
    if (!(l[0] < l[1] + l[2] && l[1] < l[0] + l[2] && l[2] < l[0] + l[1])) {
      std::ostringstream msg;
      msg << "triangle " << f << " violates the triangle inequality";
      fail(ErrorCode::degenerate, msg.str());
    }
    // angle at t[k] is opposite the side (k+1, k+2), i.e. l[(k+1)%3]
    for (int k = 0; k < 3; ++k) {
      vertex_angle_defect[t[k]] -= angle_opposite(l[(k + 1) % 3], l[k], l[(k + 2) % 3]);
      fans[t[k]].push_back(static_cast<int>(f));
    }
  }
  int chi = euler_characteristic();
  if (chi > -2 || chi % 2 != 0) {
    std::ostringstream msg;
    msg << "mesh has Euler characteristic " << chi << "; genus >= 2 required";
    fail(ErrorCode::invalid_argument, msg.str());
  }
  genus = (2 - chi) / 2;
}

HyperbolicMesh build_genus2_octagon(int subdiv) {
  if (subdiv < 1) fail(ErrorCode::invalid_argument, "subdiv must be at least 1");
  if (subdiv > 9) fail(ErrorCode::invalid_argument, "subdiv above 9 is not supported");
  // regular octagon with interior angles pi/4: cosh R = cot^2(pi/8)
  double cot8 = 1.0 / std::tan(kPi / 8.0);
  double R = std::acosh(cot8 * cot8);
  double rd = std::tanh(0.5 * R);

  std::vector<HPoint> pts;
  pts.push_back(from_disk(0.0));
  for (int k = 0; k < 8; ++k) pts.push_back(from_disk(std::polar(rd, kPi * k / 4.0)));
  std::vector<std::array<int, 3>> tris;
  for (int k = 0; k < 8; ++k) tris.push_back({0, 1 + k, 1 + (k + 1) % 8});

  std::map<std::pair<int, int>, int> mids;
  auto mid = [&](int a, int b) {
    auto key = std::minmax(a, b);
    auto it = mids.find(key);
    if (it != mids.end()) return it->second;
    pts.push_back(midpoint(pts[a], pts[b]));
    int id = static_cast<int>(pts.size()) - 1;
    mids.emplace(key, id);
    return id;
  };
  for (int level = 0; level < subdiv; ++level) {
    std::vector<std::array<int, 3>> next;
    next.reserve(tris.size() * 4);
    for (const auto& t : tris) {
      int ab = mid(t[0], t[1]), bc = mid(t[1], t[2]), ca = mid(t[2], t[0]);
      next.push_back({t[0], ab, ca});
      next.push_back({ab, t[1], bc});
      next.push_back({ca, bc, t[2]});
      next.push_back({ab, bc, ca});
    }
    tris.swap(next);
  }

  // ordered points along octagon side k, corner k to corner k+1
  std::function<void(int, int, int, std::vector<int>&)> walk = [&](int a, int b, int depth, std::vector<int>& out) {
    if (depth == 0) {
      out.push_back(b);
      return;
    }
    int m = mids.at(std::minmax(a, b));
    walk(a, m, depth - 1, out);
    walk(m, b, depth - 1, out);
  };
  std::array<std::vector<int>, 8> side;
  for (int k = 0; k < 8; ++k) {
    side[k].push_back(1 + k);
    walk(1 + k, 1 + (k + 1) % 8, subdiv, side[k]);
  }
  // a b a^-1 b^-1 c d c^-1 d^-1: side k glued to side k+2 with reversed orientation
  UnionFind uf(static_cast<int>(pts.size()));
  const int n = static_cast<int>(side[0].size()) - 1;
  for (int k : {0, 1, 4, 5})
    for (int j = 0; j <= n; ++j) uf.unite(side[k][j], side[k + 2][n - j]);

  HyperbolicMesh mesh;
  std::vector<int> id(pts.size(), -1);
  for (std::size_t p = 0; p < pts.size(); ++p) {
    int root = uf.find(static_cast<int>(p));
    if (id[root] < 0) {
      id[root] = mesh.num_vertices++;
      mesh.positions.push_back(to_disk(pts[root]));
    }
    id[p] = id[root];
  }
  for (const auto& t : tris) {
    mesh.triangles.push_back({id[t[0]], id[t[1]], id[t[2]]});
    mesh.edge_lengths.push_back({hyperboloid_distance(pts[t[0]], pts[t[1]]), hyperboloid_distance(pts[t[1]], pts[t[2]]),
                                 hyperboloid_distance(pts[t[2]], pts[t[0]])});
  }
  mesh.finalize();
  return mesh;
}

ScalarField LinearOperator::apply(const ScalarField& u) const { return (weak * u).cwiseQuotient(mass); }

SparseMatrix LinearOperator::pointwise() const {
  ScalarField inv = mass.cwiseInverse();
  return inv.asDiagonal() * weak;
}

double LinearOperator::symmetry_defect() const {
  SparseMatrix d = weak - SparseMatrix(weak.transpose());
  return d.norm() / std::max(weak.norm(), 1e-300);
}

LinearOperator laplacian(const HyperbolicMesh& m) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(m.triangles.size() * 12);
  for (std::size_t f = 0; f < m.triangles.size(); ++f) {
    const auto& t = m.triangles[f];
    const auto& l = m.edge_lengths[f];
    double A = triangle_area(l[0], l[1], l[2]);
    if (!(A > 0.0)) fail(ErrorCode::degenerate, "degenerate triangle in Laplacian assembly");
    for (int k = 0; k < 3; ++k) {
      // side (k, k+1) is opposite vertex k+2
      int i = t[k], j = t[(k + 1) % 3];
      double w = 0.5 * cot_opposite(l[k], l[(k + 1) % 3], l[(k + 2) % 3], A);
      trip.emplace_back(i, j, w);
      trip.emplace_back(j, i, w);
      trip.emplace_back(i, i, -w);
      trip.emplace_back(j, j, -w);
    }
  }
  LinearOperator op;
  op.kind = LinearOperator::Kind::laplacian;
  op.weak.resize(m.num_vertices, m.num_vertices);
  op.weak.setFromTriplets(trip.begin(), trip.end());
  op.mass = m.vertex_area();
  return op;
}

LinearOperator helmholtz(const HyperbolicMesh& m, const ScalarField& f) {
  if (f.size() != m.num_vertices) fail(ErrorCode::invalid_argument, "f must have one value per vertex");
  LinearOperator L = laplacian(m);
  LinearOperator op;
  op.kind = LinearOperator::Kind::helmholtz;
  op.mass = L.mass;
  SparseMatrix D(m.num_vertices, m.num_vertices);
  D.setIdentity();
  ScalarField mf = L.mass.cwiseProduct(f);
  op.weak = SparseMatrix(mf.asDiagonal() * D) - L.weak;
  return op;
}

ScalarField curvature_of_conformal(const HyperbolicMesh& m, const ScalarField& u) {
  if (u.size() != m.num_vertices) fail(ErrorCode::invalid_argument, "u must have one value per vertex");
  ScalarField lap = laplacian(m).apply(u);
  ScalarField K(u.size());
  for (Eigen::Index v = 0; v < u.size(); ++v) K[v] = std::exp(-2.0 * u[v]) * (-lap[v] - 1.0);
  return K;
}

double total_curvature(const HyperbolicMesh& m, const ScalarField& u) {
  ScalarField K = curvature_of_conformal(m, u);
  ScalarField A = m.vertex_area();
  double s = 0.0;
  for (Eigen::Index v = 0; v < u.size(); ++v) s += K[v] * std::exp(2.0 * u[v]) * A[v];
  return s;
}

ScalarField solve_helmholtz(const HyperbolicMesh& m, const ScalarField& f, const ScalarField& lam,
                            const HelmholtzOptions& opt) {
  if (f.size() != m.num_vertices || lam.size() != m.num_vertices)
    fail(ErrorCode::invalid_argument, "f and lam must have one value per vertex");
  for (Eigen::Index v = 0; v < f.size(); ++v)
    if (!(f[v] > 0.0)) {
      std::ostringstream msg;
      msg << "Helmholtz coefficient f must be positive; f = " << f[v] << " at vertex " << v;
      fail(ErrorCode::domain, msg.str());
    }
  LinearOperator T = helmholtz(m, f);
  ScalarField rhs = T.mass.cwiseProduct(lam);
  Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper, Eigen::DiagonalPreconditioner<double>> cg;
  cg.setTolerance(opt.tol);
  cg.setMaxIterations(opt.max_iter > 0 ? opt.max_iter : 10 * m.num_vertices);
  cg.compute(T.weak);
  ScalarField u;
  if (opt.guess) u = cg.solveWithGuess(rhs, *opt.guess);
  else u = cg.solve(rhs);
  if (cg.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "conjugate gradient did not converge after " << cg.iterations() << " iterations (error " << cg.error() << ")";
    fail(ErrorCode::not_converged, msg.str());
  }
  return u;
}

double helmholtz_residual(const HyperbolicMesh& m, const ScalarField& f, const ScalarField& u, const ScalarField& lam) {
  ScalarField r = helmholtz(m, f).apply(u) - lam;
  return r.norm() / std::max(lam.norm(), 1e-300);
}

ScalarField smooth_random_field(const HyperbolicMesh& m, std::uint64_t seed, double f) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  ScalarField xi(m.num_vertices);
  for (Eigen::Index v = 0; v < xi.size(); ++v) xi[v] = U(rng);
  ScalarField fv = ScalarField::Constant(m.num_vertices, f);
  ScalarField u = solve_helmholtz(m, fv, f * xi);
  double mx = u.cwiseAbs().maxCoeff();
  return mx > 0 ? ScalarField(u / mx) : u;
}

void write_mesh(std::ostream& obj, std::ostream& csv, const HyperbolicMesh& m) {
  obj << std::setprecision(17);
  for (const Complex& p : m.positions) obj << "v " << p.real() << ' ' << p.imag() << " 0\n";
  for (const auto& t : m.triangles) obj << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
  csv << "face,l01,l12,l20\n" << std::setprecision(17);
  for (std::size_t f = 0; f < m.edge_lengths.size(); ++f) {
    const auto& l = m.edge_lengths[f];
    csv << f << ',' << l[0] << ',' << l[1] << ',' << l[2] << '\n';
  }
}

HyperbolicMesh read_mesh(std::istream& obj, std::istream& csv) {
  HyperbolicMesh m;
  std::string line;
  while (std::getline(obj, line)) {
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "v") {
      double x = 0, y = 0;
      ls >> x >> y;
      m.positions.emplace_back(x, y);
    } else if (tag == "f") {
      std::array<int, 3> t{};
      for (int& v : t) {
        std::string tok;
        ls >> tok;
        v = std::stoi(tok.substr(0, tok.find('/'))) - 1;
      }
      m.triangles.push_back(t);
    }
  }
  m.num_vertices = static_cast<int>(m.positions.size());
  if (!std::getline(csv, line)) fail(ErrorCode::io, "edge length CSV is empty");
  while (std::getline(csv, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tok;
    std::array<double, 4> v{};
    for (double& x : v) {
      if (!std::getline(ls, tok, ',')) fail(ErrorCode::io, "edge length CSV row needs 4 columns");
      x = std::stod(tok);
    }
    std::size_t f = static_cast<std::size_t>(v[0]);
    if (f != m.edge_lengths.size()) fail(ErrorCode::io, "edge length CSV rows must be in face order");
    m.edge_lengths.push_back({v[1], v[2], v[3]});
  }
  m.finalize();
  return m;
}

void write_vertex_field(std::ostream& out, const ScalarField& u, const char* name) {
  out << "vertex," << name << '\n' << std::setprecision(17);
  for (Eigen::Index v = 0; v < u.size(); ++v) out << v << ',' << u[v] << '\n';
}

}  // namespace el
