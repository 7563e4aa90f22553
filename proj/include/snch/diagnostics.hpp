#pragma once

// Per-path diagnostic series, the discrete Ito energy balance, V* distances
// between trajectories and sample L^p moment estimators.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include "snch/error.hpp"
#include "snch/grid.hpp"
#include "snch/potential.hpp"
#include "snch/spectral.hpp"

namespace snch {

/// Per-step energy-balance increments, kept only when requested.
struct ItoLedger {
  std::vector<double> dissipation;  ///< dt * ||grad mu||^2 at the left point
  std::vector<double> martingale;   ///< (mu, G dW)_H
  std::vector<double> trace;        ///< dt * sum_k Hess E [g_k, g_k]
  bool empty() const { return dissipation.empty(); }
};

/// Invariant: all series have the length of `times`; times[0] = 0.
struct PathRecord {
  std::vector<double> times;
  std::vector<std::size_t> steps;  ///< step index of each record
  std::vector<double> mass;
  std::vector<double> energy;
  std::vector<double> h_norm;
  std::vector<double> v_seminorm;
  std::vector<double> vstar_norm;
  std::vector<double> grad_mu_sq_cum;
  std::vector<double> ito_residual;  ///< empty unless the ledger was kept
  std::vector<std::vector<double>> snapshots;  ///< coefficients at record times, if kept
  double grad_phi_sq_integral = 0.0;  ///< int_0^T ||grad phi||^2
  double h3_integral = 0.0;           ///< int_0^T sum ell^3 alpha^2
  std::size_t total_steps = 0;
  ItoLedger ledger;
  Field final_field;

  std::size_t size() const { return times.size(); }
};

/// r(t) = E(t) + int ||grad mu||^2 - E(0) - M(t) - Q(t) / 2 at each record time.
inline std::vector<double> ito_energy_residual(const PathRecord& rec) {
  if (rec.total_steps > 0 && rec.ledger.dissipation.size() != rec.total_steps)
    throw MissingLedger("ito_energy_residual: the run did not retain its noise ledger");
  std::vector<double> r(rec.size(), 0.0);
  double d = 0.0, m = 0.0, q = 0.0;
  std::size_t done = 0;
  for (std::size_t i = 0; i < rec.size(); ++i) {
    for (; done < rec.steps[i]; ++done) {
      d += rec.ledger.dissipation[done];
      m += rec.ledger.martingale[done];
      q += rec.ledger.trace[done];
    }
    r[i] = rec.energy[i] + d - rec.energy[0] - m - 0.5 * q;
  }
  return r;
}

inline double vstar_distance(const Field& f, const Field& g) {
  require_same_grid(f.grid, g.grid, "vstar_distance");
  return norm_vstar(f - g);
}

inline double vstar_distance(const SpectralField& u, const SpectralField& v) {
  require_same_grid(u.grid, v.grid, "vstar_distance");
  SpectralField d = u;
  for (std::size_t k = 0; k < d.size(); ++k) d[k] -= v[k];
  return norm_vstar(d);
}

/// Local free energy 1/2 ||grad phi||^2 + int F_lambda(phi).
inline double local_energy(const Field& f, const Potential& pot, double lambda, const YosidaParams& base = {}) {
  YosidaParams y = base;
  y.lambda = lambda;
  double bulk = 0.0;
  for (double v : f.values) bulk += pot.F_lambda_envelope(v, y);
  const double g = seminorm_v(f);
  return 0.5 * g * g + bulk * f.grid.cell_volume();
}

enum class Reducer { sup_t, l2_t };

struct MomentEstimate {
  double estimate = 0.0;
  double stderr_ = 0.0;
};

/// (mean v^p)^{1/p} with a delta-method standard error.
inline MomentEstimate moment_estimate(const std::vector<double>& values, double p) {
  if (values.empty()) throw Error("moment_estimate: no paths");
  if (!(p > 0.0)) throw Error("moment_estimate: p must be positive");
  const double n = static_cast<double>(values.size());
  double m = 0.0;
  for (double v : values) m += std::pow(std::abs(v), p);
  m /= n;
  MomentEstimate out;
  out.estimate = std::pow(m, 1.0 / p);
  if (values.size() < 2 || m == 0.0) return out;
  double var = 0.0;
  for (double v : values) {
    const double d = std::pow(std::abs(v), p) - m;
    var += d * d;
  }
  var /= (n - 1.0);
  out.stderr_ = std::pow(m, 1.0 / p - 1.0) / p * std::sqrt(var / n);
  return out;
}

/// Reduces a series on record times: max, or the trapezoid L^2(0, T) norm.
inline double reduce_series(const std::vector<double>& times, const std::vector<double>& values, Reducer r) {
  if (values.empty()) return 0.0;
  if (r == Reducer::sup_t) {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
  }
  double s = 0.0;
  for (std::size_t i = 1; i < values.size(); ++i)
    s += 0.5 * (times[i] - times[i - 1]) * (values[i] * values[i] + values[i - 1] * values[i - 1]);
  return std::sqrt(s);
}

/// Pointwise-in-time distance series between two records with snapshots on the same record times.
inline std::vector<double> trajectory_distance(const PathRecord& a, const PathRecord& b, const GridSpec& grid,
                                               bool vstar) {
  if (a.snapshots.size() != b.snapshots.size() || a.snapshots.empty())
    throw Error("trajectory_distance: records need matching snapshots");
  std::vector<double> out(a.snapshots.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    SpectralField d{grid, a.snapshots[i]};
    for (std::size_t k = 0; k < d.size(); ++k) d[k] -= b.snapshots[i][k];
    out[i] = vstar ? norm_vstar(d) : norm_h(d);
  }
  return out;
}

/// sup_t ||a - b||_{V*} + ||a - b||_{L^2(0, T; H)}.
inline std::pair<double, double> trajectory_errors(const PathRecord& a, const PathRecord& b, const GridSpec& grid) {
  const auto dv = trajectory_distance(a, b, grid, true);
  const auto dh = trajectory_distance(a, b, grid, false);
  return {reduce_series(a.times, dv, Reducer::sup_t), reduce_series(a.times, dh, Reducer::l2_t)};
}

struct EnsembleStats {
  double p = 4.0;
  std::size_t n_paths = 0;
  MomentEstimate sup_h;        ///< E[sup_t ||phi||_H^p]^{1/p}
  MomentEstimate grad_phi_l2;  ///< E[(int ||grad phi||^2)^{p/2}]^{1/p}
  MomentEstimate grad_mu_l2;   ///< E[(int ||grad mu||^2)^{p/2}]^{1/p}
};

/// Aggregates records in path order.
inline EnsembleStats ensemble_stats(const std::vector<PathRecord>& recs, double p) {
  EnsembleStats s;
  s.p = p;
  s.n_paths = recs.size();
  std::vector<double> a, b, c;
  for (const auto& r : recs) {
    a.push_back(reduce_series(r.times, r.h_norm, Reducer::sup_t));
    b.push_back(std::sqrt(r.grad_phi_sq_integral));
    c.push_back(std::sqrt(r.grad_mu_sq_cum.empty() ? 0.0 : r.grad_mu_sq_cum.back()));
  }
  s.sup_h = moment_estimate(a, p);
  s.grad_phi_l2 = moment_estimate(b, p);
  s.grad_mu_l2 = moment_estimate(c, p);
  return s;
}

}  // namespace snch
