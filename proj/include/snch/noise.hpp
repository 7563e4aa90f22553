#pragma once

// Truncated cylindrical Wiener process W = sum_k beta_k u_k and the
// multiplicative channel model G(psi)[u_k] = b_k sat(<psi, e_k>_H) e_k.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "snch/error.hpp"
#include "snch/grid.hpp"
#include "snch/random.hpp"
#include "snch/spectral.hpp"

namespace snch {

/// `constant` replaces the saturation by 1 (psi-independent G).
enum class Saturation { tanh, clamp, identity_bounded, constant };

inline const char* to_string(Saturation s) {
  switch (s) {
    case Saturation::tanh: return "tanh";
    case Saturation::clamp: return "clamp";
    case Saturation::identity_bounded: return "identity_bounded";
    case Saturation::constant: return "constant";
  }
  return "?";
}

struct NoiseSpec {
  int modes = 0;  ///< m; 0 means deterministic dynamics
  double b0 = 0.1;
  double decay = 1.0;  ///< b_k = b0 (1 + ell_k)^{-decay}
  Saturation saturation = Saturation::tanh;
  double saturation_bound = 1.0;  ///< M for identity_bounded
  bool mean_zero = true;          ///< skip the constant mode (A4)
  std::uint64_t seed = 12345;

  void validate() const {
    if (modes < 0) throw ValidationError("A3", "noise modes must be nonnegative");
    if (!(b0 >= 0.0)) throw ValidationError("A3", "b0 must be nonnegative");
    if (!(decay >= 1.0)) throw ValidationError("A3-iii", "decay exponent must be at least 1");
    if (!(saturation_bound > 0.0)) throw ValidationError("A3", "saturation_bound must be positive");
  }
};

inline double saturate(Saturation kind, double s, double bound) {
  switch (kind) {
    case Saturation::tanh: return std::tanh(s);
    case Saturation::clamp: return std::clamp(s, -1.0, 1.0);
    case Saturation::identity_bounded: return std::clamp(s, -bound, bound);
    case Saturation::constant: return 1.0;
  }
  return 0.0;
}

inline double saturation_slope(Saturation kind) { return kind == Saturation::constant ? 0.0 : 1.0; }

inline double saturation_max(Saturation kind, double bound) {
  return kind == Saturation::identity_bounded ? bound : 1.0;
}

/// Constants witnessing the noise assumptions for a concrete channel set.
struct NoiseReport {
  int channels = 0;
  double lipschitz_h = 0.0;      ///< L_G in L_2(U, H)
  double lipschitz_vstar = 0.0;  ///< L_G in L_2(U, V*)
  double bound_h = 0.0;          ///< sqrt(sum b^2 satmax^2 ||e_k||_inf^2 |O|)
  double bound_v = 0.0;          ///< sqrt(sum b^2 satmax^2 (1 + ell_k))
  double max_channel_mean = 0.0;
  bool amplitude_rule = true;  ///< b_k <= b0 (1 + ell_k)^{-1}
  bool a4 = true;

  bool passed() const { return amplitude_rule && a4 && std::isfinite(bound_h) && std::isfinite(bound_v); }
};

/// Channel set of a NoiseSpec on a grid, optionally restricted to retained Galerkin modes.
class NoiseModel {
 public:
  NoiseModel(const NoiseSpec& spec, const GridSpec& grid, const std::vector<char>* retained = nullptr)
      : spec_(spec), grid_(grid) {
    spec_.validate();
    auto basis = SpectralBasis::get(grid_);
    const auto& order = basis->modes_by_eigenvalue();
    const auto& ell = basis->eigenvalues();
    for (std::size_t pos = spec_.mean_zero ? 1 : 0; pos < order.size() && static_cast<int>(mode_.size()) < spec_.modes;
         ++pos) {
      const std::size_t k = order[pos];
      if (retained && !(*retained)[k]) continue;
      mode_.push_back(k);
      amp_.push_back(spec_.b0 * std::pow(1.0 + ell[k], -spec_.decay));
    }
    if (static_cast<int>(mode_.size()) < spec_.modes && !retained)
      throw ValidationError("A3", "grid has fewer modes than requested noise channels");
  }

  const NoiseSpec& spec() const { return spec_; }
  const GridSpec& grid() const { return grid_; }
  std::size_t channels() const { return mode_.size(); }
  const std::vector<std::size_t>& modes() const { return mode_; }
  const std::vector<double>& amplitudes() const { return amp_; }

  /// b_k sat(<psi, e_k>) for each channel, given psi's coefficients.
  double channel_scale(std::size_t c, const SpectralField& psi) const {
    return amp_[c] * saturate(spec_.saturation, psi[mode_[c]], spec_.saturation_bound);
  }

  /// Nodal channel fields G(psi)[u_k].
  std::vector<Field> apply(const Field& psi) const {
    require_same_grid(grid_, psi.grid, "apply_G");
    std::vector<Field> out;
    if (mode_.empty()) return out;
    const SpectralField c = to_spectral(psi);
    for (std::size_t k = 0; k < mode_.size(); ++k) {
      SpectralField u = SpectralField::zeros(grid_);
      u[mode_[k]] = channel_scale(k, c);
      out.push_back(to_physical(u));
    }
    return out;
  }

  /// Spectral coefficients of G(psi) dW, accumulated into `out`.
  void add_increment(const SpectralField& psi, const std::vector<double>& dw, SpectralField& out) const {
    for (std::size_t k = 0; k < mode_.size(); ++k) out[mode_[k]] += channel_scale(k, psi) * dw[k];
  }

  /// m iid N(0, dt) draws for coarse step `step`, built from `substeps` fine
  /// draws keyed by (seed, path, fine step, channel) so that the same Brownian
  /// path is seen at every refinement level.
  std::vector<double> sample_increment(std::uint64_t step, double dt, std::uint32_t path, int substeps = 1) const {
    std::vector<double> dw(mode_.size(), 0.0);
    if (mode_.empty()) return dw;
    if (!(dt > 0.0)) throw Error("sample_increment: dt must be positive");
    const double scale = std::sqrt(dt / substeps);
    for (std::size_t k = 0; k < mode_.size(); ++k) {
      double s = 0.0;
      for (int r = 0; r < substeps; ++r) {
        const std::uint64_t fine = step * static_cast<std::uint64_t>(substeps) + static_cast<std::uint64_t>(r);
        s += keyed_normal(spec_.seed, static_cast<std::uint32_t>(fine), static_cast<std::uint32_t>(fine >> 32),
                          static_cast<std::uint32_t>(k), path);
      }
      dw[k] = scale * s;
    }
    return dw;
  }

  NoiseReport validate_assumptions() const {
    NoiseReport r;
    r.channels = static_cast<int>(mode_.size());
    if (mode_.empty()) return r;
    auto basis = SpectralBasis::get(grid_);
    const auto& ell = basis->eigenvalues();
    const double slope = saturation_slope(spec_.saturation);
    const double smax = saturation_max(spec_.saturation, spec_.saturation_bound);
    double bmax = 0.0, sh = 0.0, sv = 0.0;
    for (std::size_t k = 0; k < mode_.size(); ++k) {
      const double b = amp_[k];
      const double sup = basis->basis_sup_norm(mode_[k]);
      bmax = std::max(bmax, b);
      sh += b * b * smax * smax * sup * sup * grid_.volume();
      sv += b * b * smax * smax * (1.0 + ell[mode_[k]]);
      if (b > spec_.b0 / (1.0 + ell[mode_[k]]) * (1.0 + 1e-12)) r.amplitude_rule = false;
      if (mode_[k] == 0) r.max_channel_mean = std::max(r.max_channel_mean, b * smax / std::sqrt(grid_.volume()));
    }
    r.lipschitz_h = slope * bmax;
    r.lipschitz_vstar = slope * bmax;
    r.bound_h = std::sqrt(sh);
    r.bound_v = std::sqrt(sv);
    r.a4 = r.max_channel_mean <= 1e-14;
    return r;
  }

 private:
  NoiseSpec spec_;
  GridSpec grid_;
  std::vector<std::size_t> mode_;
  std::vector<double> amp_;
};

inline std::vector<Field> apply_G(const Field& psi, const NoiseModel& noise) { return noise.apply(psi); }

}  // namespace snch
