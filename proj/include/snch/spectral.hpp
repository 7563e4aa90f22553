#pragma once

// Neumann-Laplacian cosine eigenbasis on the midpoint grid.
//
// With cell-centred nodes the DCT-II/DCT-III pair is exactly orthogonal, so
// the discrete coefficients c_j = h * sum_i f(x_i) e_j(x_i) satisfy Parseval
// with the midpoint rule and every integral below uses that same rule.

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <numeric>
#include <span>
#include <tuple>
#include <vector>

#include "snch/detail/fftw.hpp"
#include "snch/error.hpp"
#include "snch/grid.hpp"

namespace snch {

class SpectralBasis {
 public:
  explicit SpectralBasis(const GridSpec& grid) : grid_(grid) {
    grid_.validate();
    const std::array<int, 2> n{grid_.n(0), grid_.n(1)};
    forward_ = detail::make_r2r_inplace(grid_.dim, n, FFTW_REDFT10);
    inverse_ = detail::make_r2r_inplace(grid_.dim, n, FFTW_REDFT01);

    for (int a = 0; a < 2; ++a) {
      const int na = grid_.n(a);
      const double len = grid_.length(a);
      const double h = grid_.spacing(a);
      auto& fs = fwd_scale_[static_cast<std::size_t>(a)];
      auto& is = inv_scale_[static_cast<std::size_t>(a)];
      fs.resize(static_cast<std::size_t>(na));
      is.resize(static_cast<std::size_t>(na));
      for (int j = 0; j < na; ++j) {
        if (a >= grid_.dim) {
          fs[0] = 1.0;
          is[0] = 1.0;
          continue;
        }
        const double w = j == 0 ? 1.0 / std::sqrt(len) : std::sqrt(2.0 / len);
        // REDFT10 returns 2 * sum f cos(...); REDFT01 doubles every j > 0 term.
        fs[static_cast<std::size_t>(j)] = 0.5 * h * w;
        is[static_cast<std::size_t>(j)] = j == 0 ? w : 0.5 * w;
      }
    }

    eigenvalues_.resize(grid_.size());
    for (int i = 0; i < grid_.n(0); ++i)
      for (int j = 0; j < grid_.n(1); ++j) {
        double ell = 0.0;
        const double k0 = std::numbers::pi * i / grid_.length(0);
        ell += k0 * k0;
        if (grid_.dim == 2) {
          const double k1 = std::numbers::pi * j / grid_.length(1);
          ell += k1 * k1;
        }
        eigenvalues_[flat(i, j)] = ell;
      }

    by_eigenvalue_.resize(grid_.size());
    std::iota(by_eigenvalue_.begin(), by_eigenvalue_.end(), std::size_t{0});
    std::stable_sort(by_eigenvalue_.begin(), by_eigenvalue_.end(),
                     [this](std::size_t a, std::size_t b) { return eigenvalues_[a] < eigenvalues_[b]; });
  }

  SpectralBasis(const SpectralBasis&) = delete;
  SpectralBasis& operator=(const SpectralBasis&) = delete;

  /// Shared, cached basis for a grid. Safe to call from several threads.
  static std::shared_ptr<const SpectralBasis> get(const GridSpec& grid) {
    static std::mutex m;
    static std::map<std::tuple<int, int, int, double, double>, std::shared_ptr<const SpectralBasis>> cache;
    const auto key = std::make_tuple(grid.dim, grid.n(0), grid.n(1), grid.length(0), grid.length(1));
    std::lock_guard lock(m);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    auto basis = std::make_shared<const SpectralBasis>(grid);
    cache.emplace(key, basis);
    return basis;
  }

  const GridSpec& grid() const { return grid_; }

  /// ell_j = sum_i (pi j_i / L_i)^2, indexed like the coefficient array.
  const std::vector<double>& eigenvalues() const { return eigenvalues_; }

  /// Flat mode indices sorted by eigenvalue (ties by index); entry 0 is the constant mode.
  const std::vector<std::size_t>& modes_by_eigenvalue() const { return by_eigenvalue_; }

  std::size_t flat(int i, int j) const { return static_cast<std::size_t>(i) * grid_.n(1) + j; }
  std::pair<int, int> multi_index(std::size_t k) const {
    return {static_cast<int>(k / grid_.n(1)), static_cast<int>(k % grid_.n(1))};
  }

  void forward(std::span<const double> nodal, std::span<double> coeffs) const {
    std::copy(nodal.begin(), nodal.end(), coeffs.begin());
    detail::execute_r2r(forward_, coeffs);
    scale(coeffs, fwd_scale_);
  }

  void inverse(std::span<const double> coeffs, std::span<double> nodal) const {
    std::copy(coeffs.begin(), coeffs.end(), nodal.begin());
    scale(nodal, inv_scale_);
    detail::execute_r2r(inverse_, nodal);
  }

  /// Value of the orthonormal basis function with flat index k at (x, y).
  double basis_value(std::size_t k, double x, double y = 0.0) const {
    const auto [i, j] = multi_index(k);
    double v = axis_function(0, i, x);
    if (grid_.dim == 2) v *= axis_function(1, j, y);
    return v;
  }

  /// sup-norm of basis function k over the box.
  double basis_sup_norm(std::size_t k) const {
    const auto [i, j] = multi_index(k);
    double v = i == 0 ? 1.0 / std::sqrt(grid_.length(0)) : std::sqrt(2.0 / grid_.length(0));
    if (grid_.dim == 2) v *= j == 0 ? 1.0 / std::sqrt(grid_.length(1)) : std::sqrt(2.0 / grid_.length(1));
    return v;
  }

 private:
  double axis_function(int axis, int j, double x) const {
    const double len = grid_.length(axis);
    if (j == 0) return 1.0 / std::sqrt(len);
    return std::sqrt(2.0 / len) * std::cos(std::numbers::pi * j * x / len);
  }

  void scale(std::span<double> data, const std::array<std::vector<double>, 2>& s) const {
    const int n0 = grid_.n(0), n1 = grid_.n(1);
    for (int i = 0; i < n0; ++i) {
      const double si = s[0][static_cast<std::size_t>(i)];
      for (int j = 0; j < n1; ++j) data[flat(i, j)] *= si * s[1][static_cast<std::size_t>(j)];
    }
  }

  GridSpec grid_;
  detail::FftwPlan forward_;
  detail::FftwPlan inverse_;
  std::array<std::vector<double>, 2> fwd_scale_;
  std::array<std::vector<double>, 2> inv_scale_;
  std::vector<double> eigenvalues_;
  std::vector<std::size_t> by_eigenvalue_;
};

inline SpectralField to_spectral(const Field& f) {
  auto basis = SpectralBasis::get(f.grid);
  SpectralField out = SpectralField::zeros(f.grid);
  basis->forward(f.values, out.coeffs);
  return out;
}

inline Field to_physical(const SpectralField& u) {
  auto basis = SpectralBasis::get(u.grid);
  Field out = Field::zeros(u.grid);
  basis->inverse(u.coeffs, out.values);
  return out;
}

inline SpectralField laplacian(const SpectralField& u) {
  const auto& ell = SpectralBasis::get(u.grid)->eigenvalues();
  SpectralField out = u;
  for (std::size_t k = 0; k < out.size(); ++k) out[k] *= -ell[k];
  return out;
}

inline double mean(const Field& f) {
  return std::accumulate(f.values.begin(), f.values.end(), 0.0) / static_cast<double>(f.size());
}

inline double mean(const SpectralField& u) { return u[0] / std::sqrt(u.grid.volume()); }

inline double norm_h(const SpectralField& u) {
  double s = 0.0;
  for (double c : u.coeffs) s += c * c;
  return std::sqrt(s);
}

inline double norm_h(const Field& f) {
  double s = 0.0;
  for (double v : f.values) s += v * v;
  return std::sqrt(s * f.grid.cell_volume());
}

/// ||grad u||_H.
inline double seminorm_v(const SpectralField& u) {
  const auto& ell = SpectralBasis::get(u.grid)->eigenvalues();
  double s = 0.0;
  for (std::size_t k = 1; k < u.size(); ++k) s += ell[k] * u[k] * u[k];
  return std::sqrt(s);
}

inline double seminorm_v(const Field& f) { return seminorm_v(to_spectral(f)); }

/// Dual norm: ||grad N(u - mean u)||_H combined in quadrature with |mean u| sqrt|O|.
inline double norm_vstar(const SpectralField& u) {
  const auto& ell = SpectralBasis::get(u.grid)->eigenvalues();
  double s = u[0] * u[0];
  for (std::size_t k = 1; k < u.size(); ++k) s += u[k] * u[k] / ell[k];
  return std::sqrt(s);
}

inline double norm_vstar(const Field& f) { return norm_vstar(to_spectral(f)); }

/// Inverse of the negative Neumann Laplacian on mean-zero data.
inline SpectralField inverse_neumann_laplacian(const SpectralField& u, double mean_tol = 1e-12) {
  const double m = std::abs(mean(u));
  if (m > mean_tol * norm_h(u))
    throw NotMeanZero("inverse_neumann_laplacian: input mean " + std::to_string(m) + " exceeds tolerance");
  const auto& ell = SpectralBasis::get(u.grid)->eigenvalues();
  SpectralField out = u;
  out[0] = 0.0;
  for (std::size_t k = 1; k < out.size(); ++k) out[k] /= ell[k];
  return out;
}

/// Inner product (f, g)_H by the midpoint rule.
inline double inner_h(const Field& f, const Field& g) {
  require_same_grid(f.grid, g.grid, "inner_h");
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += f[i] * g[i];
  return s * f.grid.cell_volume();
}

inline double inner_h(const SpectralField& u, const SpectralField& v) {
  require_same_grid(u.grid, v.grid, "inner_h");
  double s = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) s += u[k] * v[k];
  return s;
}

}  // namespace snch
