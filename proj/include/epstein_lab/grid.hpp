#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace el {

using Complex = std::complex<double>;

// Rectangular planar chart: z(i, j) = origin + spacing * (i + I j), row-major in j.
struct ChartGrid {
  Complex origin{0.0, 0.0};
  double spacing = 0.0;
  int nx = 0;
  int ny = 0;

  ChartGrid() = default;
  ChartGrid(Complex origin_, double spacing_, int nx_, int ny_);

  // Square grid of n x n points covering [-half, half]^2 around center.
  static ChartGrid centered(Complex center, double half, int n);

  std::size_t size() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * nx + i; }
  Complex point(int i, int j) const { return origin + spacing * Complex(i, j); }
  Complex point(std::size_t k) const { return point(static_cast<int>(k % nx), static_cast<int>(k / nx)); }
  bool interior(int i, int j, int margin) const {
    return i >= margin && j >= margin && i < nx - margin && j < ny - margin;
  }
  bool interior(std::size_t k, int margin) const {
    return interior(static_cast<int>(k % nx), static_cast<int>(k / nx), margin);
  }
  bool same_as(const ChartGrid& o) const;
};

// Fourth-order central differences at an interior node (margin >= 2).
template <class T>
struct Stencil {
  static T dx(const std::vector<T>& f, const ChartGrid& g, int i, int j) {
    auto at = [&](int di) { return f[g.index(i + di, j)]; };
    return (-at(2) + 8.0 * at(1) - 8.0 * at(-1) + at(-2)) / (12.0 * g.spacing);
  }
  static T dy(const std::vector<T>& f, const ChartGrid& g, int i, int j) {
    auto at = [&](int dj) { return f[g.index(i, j + dj)]; };
    return (-at(2) + 8.0 * at(1) - 8.0 * at(-1) + at(-2)) / (12.0 * g.spacing);
  }
  static T dxx(const std::vector<T>& f, const ChartGrid& g, int i, int j) {
    auto at = [&](int di) { return f[g.index(i + di, j)]; };
    return (-at(2) + 16.0 * at(1) - 30.0 * at(0) + 16.0 * at(-1) - at(-2)) / (12.0 * g.spacing * g.spacing);
  }
  static T dyy(const std::vector<T>& f, const ChartGrid& g, int i, int j) {
    auto at = [&](int dj) { return f[g.index(i, j + dj)]; };
    return (-at(2) + 16.0 * at(1) - 30.0 * at(0) + 16.0 * at(-1) - at(-2)) / (12.0 * g.spacing * g.spacing);
  }
  static T dxy(const std::vector<T>& f, const ChartGrid& g, int i, int j) {
    static constexpr double w[5] = {1.0, -8.0, 0.0, 8.0, -1.0};
    T acc = f[g.index(i, j)] * 0.0;
    for (int a = 0; a < 5; ++a)
      for (int b = 0; b < 5; ++b)
        if (w[a] != 0.0 && w[b] != 0.0) acc += w[a] * w[b] * f[g.index(i + a - 2, j + b - 2)];
    return acc / (144.0 * g.spacing * g.spacing);
  }
  static T dz(const std::vector<T>& f, const ChartGrid& g, int i, int j) {
    return Complex(0.5, 0.0) * dx(f, g, i, j) - Complex(0.0, 0.5) * dy(f, g, i, j);
  }
  static T dzbar(const std::vector<T>& f, const ChartGrid& g, int i, int j) {
    return Complex(0.5, 0.0) * dx(f, g, i, j) + Complex(0.0, 0.5) * dy(f, g, i, j);
  }
  static T dzz(const std::vector<T>& f, const ChartGrid& g, int i, int j) {
    return Complex(0.25, 0.0) * (dxx(f, g, i, j) - dyy(f, g, i, j)) - Complex(0.0, 0.5) * dxy(f, g, i, j);
  }
  static T lap(const std::vector<T>& f, const ChartGrid& g, int i, int j) {
    return dxx(f, g, i, j) + dyy(f, g, i, j);
  }
};

// Complex Wirtinger derivatives of a real field.
Complex wirtinger_z(const std::vector<double>& f, const ChartGrid& g, int i, int j);
Complex wirtinger_zz(const std::vector<double>& f, const ChartGrid& g, int i, int j);
double flat_laplacian(const std::vector<double>& f, const ChartGrid& g, int i, int j);

// Nonzero weights of the stencils above as (di, dj, weight).
struct StencilEntry {
  int di, dj;
  Complex w;
};
std::vector<StencilEntry> stencil_dz(double h);
std::vector<StencilEntry> stencil_dzz(double h);
std::vector<StencilEntry> stencil_laplacian(double h);

}  // namespace el
