#pragma once

// Nonlocal interaction kernels K_eps(x) = rho_eps(|x|) / |x|^2, convolution
// restricted to the box, the operator L_eps u = a u - K * u, the bilinear
// form B(h, g) and the nonlocal free energy.

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "snch/detail/fftw.hpp"
#include "snch/error.hpp"
#include "snch/grid.hpp"
#include "snch/potential.hpp"
#include "snch/spectral.hpp"

namespace snch {

enum class MollifierFamily { gaussian_r2, annular };

inline const char* to_string(MollifierFamily f) { return f == MollifierFamily::gaussian_r2 ? "gaussian_r2" : "annular"; }

struct MollifierSpec {
  MollifierFamily family = MollifierFamily::gaussian_r2;
  double epsilon = 0.1;
  int dim_n = 1;  ///< dimension used in the normalization

  void validate() const {
    if (!(epsilon > 0.0)) throw ValidationError("A5", "epsilon must be positive");
    if (dim_n < 1 || dim_n > 3) throw ValidationError("A5", "normalization dimension must be 1, 2 or 3");
  }
};

/// C_n = integral over S^{n-1} of |e_1 . sigma|^2, i.e. |S^{n-1}| / n.
inline double cn_constant(int n) {
  switch (n) {
    case 1: return 2.0;
    case 2: return std::numbers::pi;
    case 3: return 4.0 * std::numbers::pi / 3.0;
    default: throw Error("cn_constant: unsupported dimension " + std::to_string(n));
  }
}

/// Radial mollifier rho_eps(r), normalized so that int_0^inf rho r^{n-1} dr = 2 / C_n.
inline double mollifier_rho(const MollifierSpec& m, double r) {
  r = std::abs(r);
  const int n = m.dim_n;
  const double eps = m.epsilon;
  if (m.family == MollifierFamily::gaussian_r2) {
    const double b = 4.0 / (cn_constant(n) * std::tgamma(0.5 * (n + 2)));
    return b * r * r * std::pow(eps, -(n + 2)) * std::exp(-(r * r) / (eps * eps));
  }
  const double c = 2.0 * n / (cn_constant(n) * std::pow(eps, n) * (1.0 - std::pow(2.0, -n)));
  return (r >= 0.5 * eps && r <= eps) ? c : 0.0;
}

/// K_eps at distance r; the gaussian_r2 family is evaluated in the cancelled form (finite at 0).
inline double kernel_value(const MollifierSpec& m, double r) {
  r = std::abs(r);
  if (m.family == MollifierFamily::gaussian_r2) {
    const int n = m.dim_n;
    const double eps = m.epsilon;
    const double b = 4.0 / (cn_constant(n) * std::tgamma(0.5 * (n + 2)));
    return b * std::pow(eps, -(n + 2)) * std::exp(-(r * r) / (eps * eps));
  }
  if (r == 0.0) return 0.0;
  return mollifier_rho(m, r) / (r * r);
}

/// Radius beyond which the kernel is negligible (gaussian) or zero (annular).
inline double kernel_support_radius(const MollifierSpec& m) {
  return m.family == MollifierFamily::gaussian_r2 ? 8.0 * m.epsilon : m.epsilon;
}

/// Kernel sampled on the difference grid {k h : |k_i| < N_i} with a = K * 1 and the
/// FFT data needed for zero-padded linear convolution.
class KernelGrid {
 public:
  KernelGrid(const MollifierSpec& spec, const GridSpec& grid) : spec_(spec), grid_(grid) {
    spec_.validate();
    grid_.validate();
    if (spec_.epsilon < 2.0 * grid_.max_spacing())
      throw UnresolvedKernel("kernel resolution rule: epsilon " + std::to_string(spec_.epsilon) +
                             " < 2 * grid spacing " + std::to_string(grid_.max_spacing()));

    n_ = {grid_.n(0), grid_.n(1)};
    diff_ = {2 * n_[0] - 1, grid_.dim == 2 ? 2 * n_[1] - 1 : 1};
    samples_.resize(static_cast<std::size_t>(diff_[0]) * diff_[1]);
    for (int k0 = -(n_[0] - 1); k0 <= n_[0] - 1; ++k0)
      for (int k1 = -(diff_[1] / 2); k1 <= diff_[1] / 2; ++k1) {
        const double z0 = k0 * grid_.spacing(0);
        const double z1 = grid_.dim == 2 ? k1 * grid_.spacing(1) : 0.0;
        samples_[diff_index(k0, k1)] = kernel_value(spec_, std::hypot(z0, z1));
      }

    padded_ = {2 * n_[0], grid_.dim == 2 ? 2 * n_[1] : 1};
    r2c_ = detail::make_r2c(grid_.dim, padded_);
    c2r_ = detail::make_c2r(grid_.dim, padded_);

    std::vector<double> kpad(padded_size(), 0.0);
    for (int k0 = -(n_[0] - 1); k0 <= n_[0] - 1; ++k0)
      for (int k1 = -(diff_[1] / 2); k1 <= diff_[1] / 2; ++k1)
        kpad[pad_index(wrap(k0, padded_[0]), wrap(k1, padded_[1]))] = samples_[diff_index(k0, k1)];
    kernel_hat_.resize(complex_size());
    detail::execute_r2c(r2c_, kpad, kernel_hat_);

    a_field_ = convolve(Field::constant(grid_, 1.0));
    build_symbol();
  }

  KernelGrid(const KernelGrid&) = delete;
  KernelGrid& operator=(const KernelGrid&) = delete;

  const MollifierSpec& spec() const { return spec_; }
  const GridSpec& grid() const { return grid_; }
  double quad_weight() const { return grid_.cell_volume(); }
  const Field& a_field() const { return a_field_; }
  double a_min() const { return *std::min_element(a_field_.values.begin(), a_field_.values.end()); }
  double a_max() const { return *std::max_element(a_field_.values.begin(), a_field_.values.end()); }

  /// Sample at difference offset (k0, k1) * h, |k_i| <= N_i - 1.
  double sample(int k0, int k1 = 0) const { return samples_[diff_index(k0, k1)]; }
  const std::vector<double>& samples() const { return samples_; }

  /// ||K||_{L^1} over the difference box.
  double l1_norm() const {
    double s = 0.0;
    for (double v : samples_) s += std::abs(v);
    return s * quad_weight();
  }

  /// Cosine-mode multiplier of the evenly reflected, periodized operator. As a
  /// quadratic form it dominates L_eps restricted to the box, which makes it a
  /// safe implicit part for the time stepper.
  const std::vector<double>& symbol() const { return symbol_; }

  /// (K * f)(x_i) = w sum_j K(x_i - x_j) f(x_j), via zero-padded FFT.
  Field convolve(const Field& f) const {
    require_same_grid(grid_, f.grid, "convolve");
    std::vector<double> pad(padded_size(), 0.0);
    for (int i = 0; i < n_[0]; ++i)
      for (int j = 0; j < n_[1]; ++j) pad[pad_index(i, j)] = f.values[static_cast<std::size_t>(i) * n_[1] + j];
    std::vector<std::complex<double>> hat(complex_size());
    detail::execute_r2c(r2c_, pad, hat);
    for (std::size_t k = 0; k < hat.size(); ++k) hat[k] *= kernel_hat_[k];
    detail::execute_c2r(c2r_, hat, pad);
    const double scale = quad_weight() / static_cast<double>(padded_size());
    Field out = Field::zeros(grid_);
    for (int i = 0; i < n_[0]; ++i)
      for (int j = 0; j < n_[1]; ++j) out.values[static_cast<std::size_t>(i) * n_[1] + j] = scale * pad[pad_index(i, j)];
    return out;
  }

 private:
  static int wrap(int k, int p) { return ((k % p) + p) % p; }
  std::size_t diff_index(int k0, int k1) const {
    return static_cast<std::size_t>(k0 + n_[0] - 1) * diff_[1] + static_cast<std::size_t>(k1 + diff_[1] / 2);
  }
  std::size_t padded_size() const { return static_cast<std::size_t>(padded_[0]) * padded_[1]; }
  std::size_t pad_index(int i, int j) const { return static_cast<std::size_t>(i) * padded_[1] + j; }
  std::size_t complex_size() const {
    return grid_.dim == 2 ? static_cast<std::size_t>(padded_[0]) * (padded_[1] / 2 + 1)
                          : static_cast<std::size_t>(padded_[0] / 2 + 1);
  }
  std::size_t complex_index(int i, int j) const {
    return grid_.dim == 2 ? static_cast<std::size_t>(i) * (padded_[1] / 2 + 1) + j : static_cast<std::size_t>(i);
  }

  void build_symbol() {
    // Periodize the full-space kernel onto the 2N grid; mode j of the
    // midpoint DCT is an even 2N-periodic sequence, so its eigenvalue under
    // periodic convolution is the (real) DFT of the periodized kernel at j.
    const double reach = kernel_support_radius(spec_);
    std::array<int, 2> m{std::max(n_[0] - 1, static_cast<int>(std::ceil(reach / grid_.spacing(0)))), 0};
    if (grid_.dim == 2) m[1] = std::max(n_[1] - 1, static_cast<int>(std::ceil(reach / grid_.spacing(1))));
    std::vector<double> kper(padded_size(), 0.0);
    for (int k0 = -m[0]; k0 <= m[0]; ++k0)
      for (int k1 = -m[1]; k1 <= m[1]; ++k1) {
        const double z0 = k0 * grid_.spacing(0);
        const double z1 = grid_.dim == 2 ? k1 * grid_.spacing(1) : 0.0;
        kper[pad_index(wrap(k0, padded_[0]), wrap(k1, padded_[1]))] += kernel_value(spec_, std::hypot(z0, z1));
      }
    std::vector<std::complex<double>> hat(complex_size());
    detail::execute_r2c(r2c_, kper, hat);
    const double w = quad_weight();
    const double s0 = hat[0].real();
    symbol_.assign(grid_.size(), 0.0);
    for (int i = 0; i < n_[0]; ++i)
      for (int j = 0; j < n_[1]; ++j)
        symbol_[static_cast<std::size_t>(i) * n_[1] + j] = w * (s0 - hat[complex_index(i, j)].real());
  }

  MollifierSpec spec_;
  GridSpec grid_;
  std::array<int, 2> n_{};
  std::array<int, 2> diff_{};
  std::array<int, 2> padded_{};
  std::vector<double> samples_;
  detail::FftwPlan r2c_;
  detail::FftwPlan c2r_;
  std::vector<std::complex<double>> kernel_hat_;
  Field a_field_;
  std::vector<double> symbol_;
};

inline std::shared_ptr<const KernelGrid> build_kernel(const MollifierSpec& m, const GridSpec& g) {
  return std::make_shared<const KernelGrid>(m, g);
}

inline Field convolve(const KernelGrid& k, const Field& f) { return k.convolve(f); }

/// L_eps f = a f - K * f.
inline Field nonlocal_op(const KernelGrid& k, const Field& f) {
  Field out = k.convolve(f);
  const auto& a = k.a_field().values;
  for (std::size_t i = 0; i < out.size(); ++i) out.values[i] = a[i] * f.values[i] - out.values[i];
  return out;
}

/// B(h, g) = 2 (1, K * (h g))_H - 2 (h, K * g)_H, using (1, K*(hg)) = (a, h g).
inline double bilinear_B(const KernelGrid& k, const Field& h, const Field& g) {
  require_same_grid(k.grid(), h.grid, "bilinear_B");
  require_same_grid(k.grid(), g.grid, "bilinear_B");
  const Field kg = k.convolve(g);
  const auto& a = k.a_field().values;
  double first = 0.0, second = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    first += a[i] * h.values[i] * g.values[i];
    second += h.values[i] * kg.values[i];
  }
  return 2.0 * k.quad_weight() * (first - second);
}

/// E(f) = B(f, f) / 4 + int F_lambda(f); lambda = 0 uses F itself.
inline double nonlocal_energy(const KernelGrid& k, const Field& f, const Potential& pot, double lambda,
                              const YosidaParams& base = {}) {
  YosidaParams y = base;
  y.lambda = lambda;
  double bulk = 0.0;
  for (double v : f.values) bulk += pot.F_lambda_envelope(v, y);
  return 0.25 * bilinear_B(k, f, f) + bulk * f.grid.cell_volume();
}

/// Relative deviation of int_0^inf rho r^{n-1} dr from 2 / C_n.
inline double normalization_residual(const MollifierSpec& m) {
  const int n = m.dim_n;
  auto f = [&](double r) { return mollifier_rho(m, r) * std::pow(r, n - 1); };
  using Q = boost::math::quadrature::gauss_kronrod<double, 61>;
  const double integral = m.family == MollifierFamily::gaussian_r2
                              ? Q::integrate(f, 0.0, 12.0 * m.epsilon, 15, 1e-14)
                              : Q::integrate(f, 0.5 * m.epsilon, m.epsilon, 15, 1e-14);
  const double target = 2.0 / cn_constant(n);
  return std::abs(integral - target) / target;
}

/// max |L_eps u + Lap u| over nodes at distance >= window from the boundary,
/// for u = prod_a cos(pi x_a / L_a).
inline double consistency_error(const KernelGrid& k, double window) {
  const GridSpec& g = k.grid();
  Field u = Field::zeros(g);
  double lap = 0.0;
  for (int a = 0; a < g.dim; ++a) lap += std::pow(std::numbers::pi / g.length(a), 2);
  auto inside = [&](int axis, int i) {
    const double x = g.node(axis, i);
    return x >= window && g.length(axis) - x >= window;
  };
  for (int i = 0; i < g.n(0); ++i)
    for (int j = 0; j < g.n(1); ++j) {
      double v = std::cos(std::numbers::pi * g.node(0, i) / g.length(0));
      if (g.dim == 2) v *= std::cos(std::numbers::pi * g.node(1, j) / g.length(1));
      u.values[static_cast<std::size_t>(i) * g.n(1) + j] = v;
    }
  const Field lu = nonlocal_op(k, u);
  double err = 0.0;
  bool any = false;
  for (int i = 0; i < g.n(0); ++i)
    for (int j = 0; j < g.n(1); ++j) {
      if (!inside(0, i) || (g.dim == 2 && !inside(1, j))) continue;
      const std::size_t idx = static_cast<std::size_t>(i) * g.n(1) + j;
      err = std::max(err, std::abs(lu.values[idx] - lap * u.values[idx]));
      any = true;
    }
  if (!any) throw ValidationError("consistency", "interior window leaves no nodes");
  return err;
}

}  // namespace snch
