#pragma once

// Study harnesses: nonlocal-to-local rate, continuous dependence, Yosida
// limit, Galerkin / time refinement and the discrete Ito energy balance.
// Every study shares Brownian paths across its runs through keyed noise.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "snch/diagnostics.hpp"
#include "snch/error.hpp"
#include "snch/kernel.hpp"
#include "snch/noise.hpp"
#include "snch/potential.hpp"
#include "snch/solver.hpp"

namespace snch {

/// Everything a study needs besides its own sweep parameters.
struct StudySetup {
  GridSpec grid = GridSpec::line(256);
  MollifierSpec mollifier{MollifierFamily::gaussian_r2, 0.1, 1};
  PotentialSpec potential;
  NoiseSpec noise;
  SolverConfig solver;
  Field initial;
  std::size_t n_paths = 1;
  double p = 4.0;
  int workers = 1;

  std::shared_ptr<const KernelGrid> kernel(double eps) const {
    MollifierSpec m = mollifier;
    m.epsilon = eps;
    return build_kernel(m, grid);
  }

  Problem problem(SolverConfig cfg, std::shared_ptr<const KernelGrid> k = nullptr) const {
    if (cfg.model == Model::nonlocal && !k) k = kernel(mollifier.epsilon);
    return Problem(grid, std::move(cfg), Potential(potential), noise, std::move(k));
  }
};

/// Least-squares slope of log y against log x.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  double mx = 0.0, my = 0.0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) mx += std::log(x[i]), my += std::log(y[i]);
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

// ---------------------------------------------------------------- rate study

struct RateRow {
  double epsilon = 0.0;
  double err_vstar = 0.0;
  double err_l2h = 0.0;
  double err = 0.0;
  double stderr_ = 0.0;
  double floor = 0.0;  ///< |err_dt - err_{dt/2}| on the same Brownian paths
  bool fitted = false;
};

struct RateStudyResult {
  std::vector<RateRow> rows;
  double slope = std::numeric_limits<double>::quiet_NaN();
  double reference_floor = 0.0;  ///< dt self-convergence of the local reference alone
  double h3_proxy = 0.0;         ///< moment of (int ||phi||_{H^3}^2)^{1/2} for the reference
  bool monotone = false;
  bool passed = false;   ///< monotone and slope >= 0.35
  bool in_band = false;  ///< slope in [0.35, 1.0]
  std::vector<std::string> warnings;
};

inline constexpr double kRateSlopeMin = 0.35;
inline constexpr double kRateSlopeMax = 1.0;

/// err(eps) = ||sup_t ||phi_eps - phi||_{V*}||_{L^{p/4}} + ||phi_eps - phi||_{L^{p/4}(L^2(0,T;H))}.
/// The whole comparison is repeated at dt / 2 on the same Brownian paths;
/// epsilons whose err is below ten times that change are left out of the fit.
inline RateStudyResult rate_study(const StudySetup& setup, std::vector<double> epsilons) {
  if (setup.noise.modes > 0 && !setup.noise.mean_zero) throw ValidationError("A4", "rate study requires mean-zero noise");
  std::sort(epsilons.begin(), epsilons.end(), std::greater<>());
  const double q = setup.p / 4.0;

  SolverConfig coarse = setup.solver;
  coarse.keep_snapshots = true;
  coarse.keep_ledger = false;
  coarse.noise_substeps = 2;
  coarse.record_every = static_cast<int>(coarse.record_cadence());
  SolverConfig fine = coarse;
  fine.dt = coarse.dt / 2.0;
  fine.noise_substeps = 1;
  fine.record_every = 2 * coarse.record_every;

  struct Level {
    std::vector<PathRecord> reference;
    std::vector<RateRow> rows;
  };
  auto errors = [&](const std::vector<PathRecord>& runs, const std::vector<PathRecord>& ref) {
    std::vector<double> v(runs.size()), h(runs.size());
    for (std::size_t i = 0; i < runs.size(); ++i) {
      const auto e = trajectory_errors(runs[i], ref[i], setup.grid);
      v[i] = e.first;
      h[i] = e.second;
    }
    return std::make_pair(moment_estimate(v, q), moment_estimate(h, q));
  };
  auto run_level = [&](SolverConfig cfg) {
    Level lv;
    cfg.model = Model::local;
    lv.reference = setup.problem(cfg).run_paths(setup.initial, setup.n_paths, setup.workers);
    cfg.model = Model::nonlocal;
    for (double eps : epsilons) {
      const auto runs = setup.problem(cfg, setup.kernel(eps)).run_paths(setup.initial, setup.n_paths, setup.workers);
      const auto e = errors(runs, lv.reference);
      RateRow row;
      row.epsilon = eps;
      row.err_vstar = e.first.estimate;
      row.err_l2h = e.second.estimate;
      row.err = row.err_vstar + row.err_l2h;
      row.stderr_ = std::hypot(e.first.stderr_, e.second.stderr_);
      lv.rows.push_back(row);
    }
    return lv;
  };

  const Level lc = run_level(coarse);
  const Level lf = run_level(fine);

  RateStudyResult out;
  out.rows = lc.rows;
  for (std::size_t i = 0; i < out.rows.size(); ++i) out.rows[i].floor = std::abs(lc.rows[i].err - lf.rows[i].err);
  {
    const auto f = errors(lf.reference, lc.reference);
    out.reference_floor = f.first.estimate + f.second.estimate;
    std::vector<double> h3;
    for (const auto& r : lc.reference) h3.push_back(std::sqrt(r.h3_integral));
    out.h3_proxy = moment_estimate(h3, q).estimate;
  }

  out.monotone = true;
  for (std::size_t i = 1; i < out.rows.size(); ++i)
    if (!(out.rows[i].err < out.rows[i - 1].err)) out.monotone = false;
  if (!out.monotone) out.warnings.push_back("err(eps) is not strictly decreasing");

  std::vector<double> xs, ys;
  for (auto& row : out.rows)
    if (row.err >= 10.0 * row.floor) {
      row.fitted = true;
      xs.push_back(row.epsilon);
      ys.push_back(row.err);
    }
  if (xs.size() < 2) out.warnings.push_back("fewer than two epsilons above the discretization floor");
  out.slope = loglog_slope(xs, ys);
  out.passed = out.monotone && out.slope >= kRateSlopeMin;
  out.in_band = out.slope >= kRateSlopeMin && out.slope <= kRateSlopeMax;
  if (out.passed && !out.in_band) out.warnings.push_back("fitted slope above the accepted band");
  return out;
}

// ---------------------------------------------- continuous dependence study

/// The basis function of eigenvalue rank `rank` (rank 0 is the constant), as a nodal field.
inline Field basis_direction(const GridSpec& grid, int rank) {
  const auto& order = SpectralBasis::get(grid)->modes_by_eigenvalue();
  if (rank < 0 || static_cast<std::size_t>(rank) >= order.size())
    throw ValidationError("cdep", "direction rank out of range");
  SpectralField u = SpectralField::zeros(grid);
  u[order[static_cast<std::size_t>(rank)]] = 1.0;
  return to_physical(u);
}

struct CdepRow {
  double delta = 0.0;
  double distance = 0.0;  ///< moment of sup_t V* distance + L^2(0,T;H) distance
  double rho = 0.0;
  double stderr_ = 0.0;
};

struct CdepStudyResult {
  std::vector<CdepRow> rows;
  double spread = 0.0;  ///< max rho / min rho over positive deltas
  bool passed = false;  ///< spread < 2
};

inline constexpr double kCdepSpreadMax = 2.0;

inline CdepStudyResult cdep_study(const StudySetup& setup, const std::vector<double>& deltas, const Field& direction) {
  require_same_grid(setup.grid, direction.grid, "cdep_study");
  const double dm = std::abs(mean(direction));
  if (dm > 1e-12 * std::max(1.0, norm_h(direction)))
    throw NonMeanZeroDirection("cdep_study: direction has mean " + std::to_string(dm));
  if (setup.noise.modes > 0 && !setup.noise.mean_zero) throw ValidationError("A4", "cdep study requires mean-zero noise");
  const double q = setup.p / 4.0;
  const double dnorm = norm_vstar(direction);

  SolverConfig cfg = setup.solver;
  cfg.keep_snapshots = true;
  cfg.record_every = static_cast<int>(cfg.record_cadence());
  const Problem pb = setup.problem(cfg);
  const auto base = pb.run_paths(setup.initial, setup.n_paths, setup.workers);

  CdepStudyResult out;
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (double delta : deltas) {
    CdepRow row;
    row.delta = delta;
    if (delta == 0.0) {
      out.rows.push_back(row);
      continue;
    }
    const Field start = setup.initial + delta * direction;
    const auto runs = pb.run_paths(start, setup.n_paths, setup.workers);
    std::vector<double> d(runs.size()), r(runs.size());
    for (std::size_t i = 0; i < runs.size(); ++i) {
      const auto e = trajectory_errors(runs[i], base[i], setup.grid);
      d[i] = e.first + e.second;
      r[i] = d[i] / (delta * dnorm);
    }
    row.distance = moment_estimate(d, q).estimate;
    const auto m = moment_estimate(r, q);
    row.rho = m.estimate;
    row.stderr_ = m.stderr_;
    lo = std::min(lo, row.rho);
    hi = std::max(hi, row.rho);
    out.rows.push_back(row);
  }
  out.spread = hi > 0.0 ? hi / lo : 1.0;
  out.passed = out.spread < kCdepSpreadMax;
  return out;
}

// ----------------------------------------------------------- Yosida study

struct YosidaRow {
  double lambda = 0.0;
  double sup_h_distance = 0.0;
  double dpsi_at_1_5 = 0.0;  ///< Psi'_lambda(1.5), cross-check of the potential module
};

struct YosidaStudyResult {
  std::vector<YosidaRow> rows;
  bool monotone = false;
};

/// sup_t ||phi_lambda - phi_0||_H on path 0 for each lambda, listed in decreasing lambda.
inline YosidaStudyResult yosida_study(const StudySetup& setup, std::vector<double> lambdas) {
  std::sort(lambdas.begin(), lambdas.end(), std::greater<>());
  SolverConfig cfg = setup.solver;
  cfg.keep_snapshots = true;
  cfg.record_every = static_cast<int>(cfg.record_cadence());
  cfg.lambda = 0.0;
  auto kernel = cfg.model == Model::nonlocal ? setup.kernel(setup.mollifier.epsilon) : nullptr;
  const PathRecord reference = setup.problem(cfg, kernel).run_path(setup.initial, 0);

  YosidaStudyResult out;
  std::vector<PathRecord> runs(lambdas.size());
  detail::parallel_for(lambdas.size(), setup.workers, [&](std::size_t i) {
    SolverConfig c = cfg;
    c.lambda = lambdas[i];
    runs[i] = setup.problem(c, kernel).run_path(setup.initial, 0);
  });
  const Potential pot(setup.potential);
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    YosidaRow row;
    row.lambda = lambdas[i];
    row.sup_h_distance = reduce_series(reference.times, trajectory_distance(runs[i], reference, setup.grid, false),
                                       Reducer::sup_t);
    YosidaParams y = cfg.yosida();
    y.lambda = lambdas[i];
    row.dpsi_at_1_5 = pot.yosida_dpsi(1.5, y);
    out.rows.push_back(row);
  }
  out.monotone = true;
  for (std::size_t i = 1; i < out.rows.size(); ++i)
    if (!(out.rows[i].sup_h_distance < out.rows[i - 1].sup_h_distance)) out.monotone = false;
  return out;
}

// ------------------------------------------------------- refinement study

struct RefinementRow {
  std::string kind;  ///< "modes" or "dt"
  double parameter = 0.0;
  double value = 0.0;       ///< sup_t ||phi||_H (modes) or strong difference to the next level (dt)
  double difference = 0.0;  ///< Cauchy difference to the previous level
  double ratio = 0.0;       ///< previous difference / this difference
};

struct RefinementStudyResult {
  std::vector<RefinementRow> rows;
  bool modes_decreasing = true;
  bool dt_ratios_in_band = true;
};

inline constexpr double kDtRatioMin = 1.3;
inline constexpr double kDtRatioMax = 2.2;

/// Mode-doubling Cauchy differences sup_t ||phi_n - phi_{2n}||_H on path 0, and the strong
/// dt-halving differences E||phi_dt(T) - phi_{dt/2}(T)||_H over the ensemble.
inline RefinementStudyResult refinement_study(const StudySetup& setup, const std::vector<int>& mode_counts,
                                              int dt_halvings) {
  RefinementStudyResult out;
  auto kernel = setup.solver.model == Model::nonlocal ? setup.kernel(setup.mollifier.epsilon) : nullptr;

  std::vector<PathRecord> by_modes(mode_counts.size());
  detail::parallel_for(mode_counts.size(), setup.workers, [&](std::size_t i) {
    SolverConfig c = setup.solver;
    c.galerkin_modes = mode_counts[i];
    c.keep_snapshots = true;
    c.record_every = static_cast<int>(c.record_cadence());
    by_modes[i] = setup.problem(c, kernel).run_path(setup.initial, 0);
  });
  double prev_diff = 0.0;
  for (std::size_t i = 0; i < mode_counts.size(); ++i) {
    const PathRecord& r = by_modes[i];
    RefinementRow row{"modes", static_cast<double>(mode_counts[i]), reduce_series(r.times, r.h_norm, Reducer::sup_t)};
    if (i > 0) {
      row.difference =
          reduce_series(r.times, trajectory_distance(r, by_modes[i - 1], setup.grid, false), Reducer::sup_t);
      if (i > 1) {
        row.ratio = prev_diff / row.difference;
        if (!(row.difference < prev_diff)) out.modes_decreasing = false;
      }
      prev_diff = row.difference;
    }
    out.rows.push_back(row);
  }

  if (dt_halvings > 0) {
    const int levels = dt_halvings + 1;
    std::vector<std::vector<PathRecord>> runs(static_cast<std::size_t>(levels));
    for (int lev = 0; lev < levels; ++lev) {
      SolverConfig c = setup.solver;
      c.dt = setup.solver.dt / static_cast<double>(1 << lev);
      c.noise_substeps = 1 << (dt_halvings - lev);
      c.record_every = static_cast<int>(c.steps());
      runs[static_cast<std::size_t>(lev)] = setup.problem(c, kernel).run_paths(setup.initial, setup.n_paths, setup.workers);
    }
    double prev = 0.0;
    for (int lev = 0; lev + 1 < levels; ++lev) {
      std::vector<double> d;
      for (std::size_t pth = 0; pth < setup.n_paths; ++pth)
        d.push_back(norm_h(runs[static_cast<std::size_t>(lev)][pth].final_field -
                           runs[static_cast<std::size_t>(lev) + 1][pth].final_field));
      RefinementRow row{"dt", setup.solver.dt / static_cast<double>(1 << lev), moment_estimate(d, 2.0).estimate};
      row.difference = row.value;
      if (lev > 0) {
        row.ratio = prev / row.value;
        if (!(row.ratio >= kDtRatioMin && row.ratio <= kDtRatioMax)) out.dt_ratios_in_band = false;
      }
      prev = row.value;
      out.rows.push_back(row);
    }
  }
  return out;
}

// ------------------------------------------------------ Ito energy study

struct ItoRow {
  double dt = 0.0;
  double max_residual = 0.0;
  double ratio = 0.0;
};

struct ItoStudyResult {
  std::vector<ItoRow> rows;
  bool passed = false;
};

inline constexpr double kItoRatioMin = 1.5;
inline constexpr double kItoRatioMax = 3.0;

/// max_t |r(t)| on path 0 for dt, dt/2, ..., dt/2^halvings on one Brownian path.
inline ItoStudyResult ito_study(const StudySetup& setup, int halvings) {
  auto kernel = setup.solver.model == Model::nonlocal ? setup.kernel(setup.mollifier.epsilon) : nullptr;
  ItoStudyResult out;
  out.rows.resize(static_cast<std::size_t>(halvings) + 1);
  detail::parallel_for(out.rows.size(), setup.workers, [&](std::size_t lev) {
    SolverConfig c = setup.solver;
    c.dt = setup.solver.dt / static_cast<double>(1 << lev);
    c.noise_substeps = 1 << (halvings - static_cast<int>(lev));
    c.keep_ledger = true;
    c.record_every = 1 << lev;
    const PathRecord r = setup.problem(c, kernel).run_path(setup.initial, 0);
    out.rows[lev].dt = c.dt;
    out.rows[lev].max_residual = reduce_series(r.times, r.ito_residual, Reducer::sup_t);
  });
  out.passed = true;
  for (std::size_t i = 1; i < out.rows.size(); ++i) {
    out.rows[i].ratio = out.rows[i - 1].max_residual / out.rows[i].max_residual;
    if (!(out.rows[i].ratio >= kItoRatioMin && out.rows[i].ratio <= kItoRatioMax)) out.passed = false;
  }
  return out;
}

}  // namespace snch
