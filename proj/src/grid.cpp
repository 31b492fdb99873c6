#include "epstein_lab/grid.hpp"

#include <cmath>

#include "epstein_lab/error.hpp"

namespace el {

ChartGrid::ChartGrid(Complex origin_, double spacing_, int nx_, int ny_)
    : origin(origin_), spacing(spacing_), nx(nx_), ny(ny_) {
  if (!(spacing_ > 0.0) || !std::isfinite(spacing_)) fail(ErrorCode::invalid_argument, "grid spacing must be positive");
  if (nx_ < 1 || ny_ < 1) fail(ErrorCode::invalid_argument, "grid needs at least one point per axis");
}

ChartGrid ChartGrid::centered(Complex center, double half, int n) {
  if (n < 2) fail(ErrorCode::invalid_argument, "centered grid needs n >= 2");
  double h = 2.0 * half / (n - 1);
  return ChartGrid(center - Complex(half, half), h, n, n);
}

bool ChartGrid::same_as(const ChartGrid& o) const {
  return nx == o.nx && ny == o.ny && origin == o.origin && spacing == o.spacing;
}

Complex wirtinger_z(const std::vector<double>& f, const ChartGrid& g, int i, int j) {
  using S = Stencil<double>;
  return Complex(0.5 * S::dx(f, g, i, j), -0.5 * S::dy(f, g, i, j));
}

Complex wirtinger_zz(const std::vector<double>& f, const ChartGrid& g, int i, int j) {
  using S = Stencil<double>;
  return Complex(0.25 * (S::dxx(f, g, i, j) - S::dyy(f, g, i, j)), -0.5 * S::dxy(f, g, i, j));
}

double flat_laplacian(const std::vector<double>& f, const ChartGrid& g, int i, int j) {
  return Stencil<double>::lap(f, g, i, j);
}

namespace {
constexpr double d1[5] = {1.0, -8.0, 0.0, 8.0, -1.0};     // / 12h
constexpr double d2[5] = {-1.0, 16.0, -30.0, 16.0, -1.0};  // / 12h^2

void add(std::vector<StencilEntry>& out, int di, int dj, Complex w) {
  for (auto& e : out)
    if (e.di == di && e.dj == dj) {
      e.w += w;
      return;
    }
  out.push_back({di, dj, w});
}
}  // namespace

std::vector<StencilEntry> stencil_dz(double h) {
  std::vector<StencilEntry> out;
  for (int k = 0; k < 5; ++k) {
    if (d1[k] == 0.0) continue;
    double w = d1[k] / (12.0 * h);
    add(out, k - 2, 0, Complex(0.5 * w, 0.0));
    add(out, 0, k - 2, Complex(0.0, -0.5 * w));
  }
  return out;
}

std::vector<StencilEntry> stencil_dzz(double h) {
  std::vector<StencilEntry> out;
  for (int k = 0; k < 5; ++k) {
    double w = d2[k] / (12.0 * h * h);
    add(out, k - 2, 0, Complex(0.25 * w, 0.0));
    add(out, 0, k - 2, Complex(-0.25 * w, 0.0));
  }
  for (int a = 0; a < 5; ++a)
    for (int b = 0; b < 5; ++b)
      if (d1[a] != 0.0 && d1[b] != 0.0)
        add(out, a - 2, b - 2, Complex(0.0, -0.5 * d1[a] * d1[b] / (144.0 * h * h)));
  return out;
}

std::vector<StencilEntry> stencil_laplacian(double h) {
  std::vector<StencilEntry> out;
  for (int k = 0; k < 5; ++k) {
    double w = d2[k] / (12.0 * h * h);
    add(out, k - 2, 0, w);
    add(out, 0, k - 2, w);
  }
  return out;
}

}  // namespace el
