#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "snch/error.hpp"

namespace snch {

/// Axis-aligned box [0, L_x] (x [0, L_y]) sampled at cell centres.
///
/// Flat index of node (i, j) is i * points[1] + j; for dim == 1 the second
/// axis is a dummy of size one.
struct GridSpec {
  int dim = 1;
  std::array<double, 2> extent{1.0, 1.0};
  std::array<int, 2> points{64, 1};

  static GridSpec line(int n, double length = 1.0) { return GridSpec{1, {length, 1.0}, {n, 1}}; }
  static GridSpec box(int nx, int ny, double lx = 1.0, double ly = 1.0) { return GridSpec{2, {lx, ly}, {nx, ny}}; }

  int n(int axis) const { return axis < dim ? points[static_cast<std::size_t>(axis)] : 1; }
  double length(int axis) const { return axis < dim ? extent[static_cast<std::size_t>(axis)] : 1.0; }
  double spacing(int axis) const { return length(axis) / n(axis); }
  double max_spacing() const { return dim == 2 ? std::max(spacing(0), spacing(1)) : spacing(0); }
  std::size_t size() const { return static_cast<std::size_t>(n(0)) * static_cast<std::size_t>(n(1)); }
  double cell_volume() const { return dim == 2 ? spacing(0) * spacing(1) : spacing(0); }
  double volume() const { return dim == 2 ? length(0) * length(1) : length(0); }
  double node(int axis, int i) const { return (i + 0.5) * spacing(axis); }

  void validate() const {
    if (dim != 1 && dim != 2) throw ValidationError("grid", "dim must be 1 or 2");
    for (int a = 0; a < dim; ++a) {
      if (!(extent[static_cast<std::size_t>(a)] > 0.0)) throw ValidationError("grid", "extent must be positive");
      if (points[static_cast<std::size_t>(a)] < 8) throw ValidationError("grid", "at least 8 points per axis");
    }
  }

  friend bool operator==(const GridSpec& a, const GridSpec& b) {
    if (a.dim != b.dim) return false;
    for (int ax = 0; ax < a.dim; ++ax)
      if (a.n(ax) != b.n(ax) || a.length(ax) != b.length(ax)) return false;
    return true;
  }
};

inline void require_same_grid(const GridSpec& a, const GridSpec& b, const char* where) {
  if (!(a == b)) throw GridMismatch(std::string(where) + ": grids differ");
}

/// Nodal values on the midpoint grid.
struct Field {
  GridSpec grid;
  std::vector<double> values;

  static Field zeros(const GridSpec& g) { return Field{g, std::vector<double>(g.size(), 0.0)}; }
  static Field constant(const GridSpec& g, double c) { return Field{g, std::vector<double>(g.size(), c)}; }

  /// Samples f(x, y) at every node (y = 0 in one dimension).
  static Field sample(const GridSpec& g, const std::function<double(double, double)>& f) {
    Field out = zeros(g);
    for (int i = 0; i < g.n(0); ++i)
      for (int j = 0; j < g.n(1); ++j)
        out.values[static_cast<std::size_t>(i) * g.n(1) + j] = f(g.node(0, i), g.dim == 2 ? g.node(1, j) : 0.0);
    return out;
  }

  std::size_t size() const { return values.size(); }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }

  bool all_finite() const {
    for (double v : values)
      if (!std::isfinite(v)) return false;
    return true;
  }

  Field& operator+=(const Field& o) {
    require_same_grid(grid, o.grid, "Field +=");
    for (std::size_t i = 0; i < values.size(); ++i) values[i] += o.values[i];
    return *this;
  }
  Field& operator-=(const Field& o) {
    require_same_grid(grid, o.grid, "Field -=");
    for (std::size_t i = 0; i < values.size(); ++i) values[i] -= o.values[i];
    return *this;
  }
  Field& operator*=(double s) {
    for (double& v : values) v *= s;
    return *this;
  }
  friend Field operator+(Field a, const Field& b) { return a += b; }
  friend Field operator-(Field a, const Field& b) { return a -= b; }
  friend Field operator*(double s, Field a) { return a *= s; }
};

/// Coefficients in the orthonormal Neumann cosine basis, indexed like Field.
struct SpectralField {
  GridSpec grid;
  std::vector<double> coeffs;

  static SpectralField zeros(const GridSpec& g) { return SpectralField{g, std::vector<double>(g.size(), 0.0)}; }

  std::size_t size() const { return coeffs.size(); }
  double& operator[](std::size_t i) { return coeffs[i]; }
  double operator[](std::size_t i) const { return coeffs[i]; }
};

}  // namespace snch
