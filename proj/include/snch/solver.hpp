#pragma once

// Stabilized IMEX Euler-Maruyama integration of the projected Galerkin SDE
// system for the nonlocal, Yosida-regularized and local Cahn-Hilliard models.
//
// Per retained mode i != 0 with stabilizer s_i:
//   alpha_i+ = [alpha_i - dt ell_i (beta_i - s_i alpha_i) + xi_i] / (1 + dt ell_i s_i)
// where beta = coefficients of mu at the current state and xi = G(phi) dW.
// s_i = sigma_i + S (nonlocal, sigma the reflected kernel symbol) or
// s_i = ell_i + S (local). Mode 0 only receives noise, which is zero under A4.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "snch/detail/pool.hpp"
#include "snch/diagnostics.hpp"
#include "snch/error.hpp"
#include "snch/grid.hpp"
#include "snch/kernel.hpp"
#include "snch/noise.hpp"
#include "snch/potential.hpp"
#include "snch/random.hpp"
#include "snch/spectral.hpp"

namespace snch {

enum class Model { nonlocal, local };
enum class Scheme { imex_em, explicit_em };

inline const char* to_string(Model m) { return m == Model::nonlocal ? "nonlocal" : "local"; }
inline const char* to_string(Scheme s) { return s == Scheme::imex_em ? "imex_em" : "explicit_em"; }

struct SolverConfig {
  Model model = Model::nonlocal;
  double lambda = 0.0;
  double dt = 1e-4;
  double t_end = 0.1;
  Scheme scheme = Scheme::imex_em;
  double stabilization = -1.0;  ///< S; negative selects max |F''| on [-2, 2]
  int record_every = 0;         ///< 0 selects max(1, steps / 512)
  int galerkin_modes = 0;       ///< retained modes by eigenvalue; 0 keeps all
  int noise_substeps = 1;       ///< fine Brownian draws summed per step
  double newton_tol = 1e-12;
  int newton_max_iter = 100;
  bool keep_ledger = false;
  bool keep_snapshots = false;

  void validate() const {
    if (!(dt > 0.0)) throw ValidationError("solver", "dt must be positive");
    if (!(t_end >= 0.0)) throw ValidationError("solver", "t_end must be nonnegative");
    if (record_every < 0) throw ValidationError("solver", "record_every must be nonnegative");
    if (galerkin_modes < 0) throw ValidationError("solver", "galerkin_modes must be nonnegative");
    if (noise_substeps < 1) throw ValidationError("solver", "noise_substeps must be at least 1");
    yosida().validate();
  }

  YosidaParams yosida() const { return YosidaParams{lambda, newton_tol, newton_max_iter}; }

  std::size_t steps() const {
    if (t_end == 0.0) return 0;
    return static_cast<std::size_t>(std::max(1.0, std::ceil(t_end / dt - 1e-9)));
  }

  std::size_t record_cadence() const {
    if (record_every > 0) return static_cast<std::size_t>(record_every);
    return std::max<std::size_t>(1, steps() / 512);
  }
};

struct SolverState {
  SpectralField alpha;
  double t = 0.0;
  std::size_t step = 0;
};

/// Immutable bundle of everything a path needs; shared across worker threads.
class Problem {
 public:
  Problem(const GridSpec& grid, SolverConfig cfg, Potential pot, const NoiseSpec& noise,
          std::shared_ptr<const KernelGrid> kernel = nullptr)
      : grid_(grid), cfg_(std::move(cfg)), pot_(std::move(pot)), kernel_(std::move(kernel)) {
    grid_.validate();
    cfg_.validate();
    if (cfg_.model == Model::nonlocal) {
      if (!kernel_) throw ValidationError("A1", "nonlocal model needs a kernel");
      require_same_grid(grid_, kernel_->grid(), "Problem");
    }
    basis_ = SpectralBasis::get(grid_);
    const auto& ell = basis_->eigenvalues();
    const auto& order = basis_->modes_by_eigenvalue();

    retained_.assign(grid_.size(), 0);
    const std::size_t keep =
        cfg_.galerkin_modes > 0 ? std::min<std::size_t>(grid_.size(), cfg_.galerkin_modes) : grid_.size();
    for (std::size_t p = 0; p < keep; ++p) retained_[order[p]] = 1;

    noise_ = std::make_unique<NoiseModel>(noise, grid_, cfg_.galerkin_modes > 0 ? &retained_ : nullptr);

    stab_const_ = cfg_.stabilization >= 0.0 ? cfg_.stabilization : pot_.max_abs_ddF(-2.0, 2.0);
    stab_.assign(grid_.size(), 0.0);
    for (std::size_t k = 0; k < grid_.size(); ++k)
      stab_[k] = stab_const_ + (cfg_.model == Model::local ? ell[k] : kernel_->symbol()[k]);

    if (cfg_.scheme == Scheme::explicit_em) {
      double ell_max = 0.0;
      for (std::size_t k = 0; k < grid_.size(); ++k)
        if (retained_[k]) ell_max = std::max(ell_max, ell[k]);
      const double lin = cfg_.model == Model::local ? ell_max : kernel_->a_max();
      if (cfg_.dt * ell_max * (lin + pot_.max_abs_ddF(-2.0, 2.0)) >= 2.0)
        warnings_.push_back("explicit_em: dt exceeds the linear stability heuristic");
    }

    // Per-channel pieces of the Ito trace term.
    for (std::size_t c = 0; c < noise_->channels(); ++c) {
      SpectralField e = SpectralField::zeros(grid_);
      e[noise_->modes()[c]] = 1.0;
      Field ef = to_physical(e);
      for (double& v : ef.values) v *= v;
      channel_sq_.push_back(std::move(ef.values));
      if (cfg_.model == Model::nonlocal)
        channel_hess_.push_back(0.5 * bilinear_B(*kernel_, to_physical(e), to_physical(e)));
      else
        channel_hess_.push_back(ell[noise_->modes()[c]]);
    }
  }

  const GridSpec& grid() const { return grid_; }
  const SolverConfig& config() const { return cfg_; }
  const Potential& potential() const { return pot_; }
  const NoiseModel& noise() const { return *noise_; }
  const KernelGrid* kernel() const { return kernel_.get(); }
  const SpectralBasis& basis() const { return *basis_; }
  const std::vector<char>& retained() const { return retained_; }
  const std::vector<double>& stabilizer() const { return stab_; }
  double stabilization_constant() const { return stab_const_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  SpectralField project(const SpectralField& u) const {
    SpectralField out = u;
    for (std::size_t k = 0; k < out.size(); ++k)
      if (!retained_[k]) out[k] = 0.0;
    return out;
  }

  /// Nodal chemical potential: a phi - K * phi + F'_lambda(phi), or -Lap phi + F'_lambda(phi).
  Field assemble_mu(const Field& phi) const {
    require_same_grid(grid_, phi.grid, "assemble_mu");
    const YosidaParams y = cfg_.yosida();
    Field fp = Field::zeros(grid_);
    for (std::size_t i = 0; i < phi.size(); ++i) fp[i] = pot_.dF_lambda(phi[i], y);
    if (cfg_.model == Model::nonlocal) return nonlocal_op(*kernel_, phi) + fp;
    return -1.0 * to_physical(laplacian(to_spectral(phi))) + fp;
  }

  /// Model-matching free energy of a coefficient vector.
  double energy(const SpectralField& alpha) const {
    const Field phi = to_physical(alpha);
    if (cfg_.model == Model::nonlocal) return nonlocal_energy(*kernel_, phi, pot_, cfg_.lambda, cfg_.yosida());
    return local_energy(phi, pot_, cfg_.lambda, cfg_.yosida());
  }

  struct StepInfo {
    double dissipation = 0.0;
    double martingale = 0.0;
    double trace = 0.0;
    double grad_phi_sq = 0.0;
    double h3 = 0.0;
  };

  /// Advances one step of length dt with Brownian increments dw.
  StepInfo step(SolverState& s, double dt, const std::vector<double>& dw, bool want_trace) const {
    const auto& ell = basis_->eigenvalues();
    const YosidaParams y = cfg_.yosida();
    const Field phi = to_physical(s.alpha);

    Field fp = Field::zeros(grid_);
    std::vector<double> fpp;
    if (want_trace) fpp.resize(phi.size());
    for (std::size_t i = 0; i < phi.size(); ++i) {
      fp[i] = pot_.dF_lambda(phi[i], y);
      if (want_trace) fpp[i] = pot_.ddF_lambda(phi[i], y);
    }
    SpectralField beta;
    if (cfg_.model == Model::nonlocal) {
      beta = to_spectral(nonlocal_op(*kernel_, phi) + fp);
    } else {
      beta = to_spectral(fp);
      for (std::size_t k = 0; k < beta.size(); ++k) beta[k] += ell[k] * s.alpha[k];
    }

    SpectralField xi = SpectralField::zeros(grid_);
    noise_->add_increment(s.alpha, dw, xi);

    StepInfo info;
    for (std::size_t k = 1; k < beta.size(); ++k)
      if (retained_[k]) {
        info.dissipation += dt * ell[k] * beta[k] * beta[k];
        info.grad_phi_sq += dt * ell[k] * s.alpha[k] * s.alpha[k];
        info.h3 += dt * ell[k] * ell[k] * ell[k] * s.alpha[k] * s.alpha[k];
      }
    for (std::size_t c = 0; c < noise_->channels(); ++c) info.martingale += beta[noise_->modes()[c]] * xi[noise_->modes()[c]];
    if (want_trace) {
      const double w = grid_.cell_volume();
      for (std::size_t c = 0; c < noise_->channels(); ++c) {
        const double g = noise_->channel_scale(c, s.alpha);
        double bulk = 0.0;
        for (std::size_t i = 0; i < fpp.size(); ++i) bulk += fpp[i] * channel_sq_[c][i];
        info.trace += dt * g * g * (channel_hess_[c] + bulk * w);
      }
    }

    const double alpha0 = s.alpha[0];
    for (std::size_t k = 1; k < beta.size(); ++k) {
      if (!retained_[k]) continue;
      const double a = s.alpha[k];
      if (cfg_.scheme == Scheme::explicit_em) {
        s.alpha[k] = a - dt * ell[k] * beta[k] + xi[k];
      } else {
        const double st = stab_[k];
        s.alpha[k] = (a - dt * ell[k] * (beta[k] - st * a) + xi[k]) / (1.0 + dt * ell[k] * st);
      }
      if (!std::isfinite(s.alpha[k]))
        throw NonFinite(s.step, "coefficient " + std::to_string(k) + " left the finite range");
    }
    s.alpha[0] = alpha0 + xi[0];
    if (!std::isfinite(s.alpha[0])) throw NonFinite(s.step, "mean coefficient left the finite range");
    if (noise_->spec().mean_zero && s.alpha[0] != alpha0) throw Error("mass drift under mean-zero noise");
    s.t += dt;
    ++s.step;
    return info;
  }

  /// Integrates one path from `initial`; deterministic in (noise seed, path index).
  PathRecord run_path(const Field& initial, std::uint32_t path_index) const {
    require_same_grid(grid_, initial.grid, "run_path");
    if (!initial.all_finite()) throw NonFinite(0, "initial data");
    SolverState s{project(to_spectral(initial)), 0.0, 0};
    const std::size_t n = cfg_.steps();
    const std::size_t cadence = cfg_.record_cadence();
    const bool ledger = cfg_.keep_ledger;

    PathRecord rec;
    rec.total_steps = n;
    double grad_mu_cum = 0.0;
    auto record = [&] {
      rec.times.push_back(s.t);
      rec.steps.push_back(s.step);
      rec.mass.push_back(mean(s.alpha));
      rec.energy.push_back(energy(s.alpha));
      rec.h_norm.push_back(norm_h(s.alpha));
      rec.v_seminorm.push_back(seminorm_v(s.alpha));
      rec.vstar_norm.push_back(norm_vstar(s.alpha));
      rec.grad_mu_sq_cum.push_back(grad_mu_cum);
      if (cfg_.keep_snapshots) rec.snapshots.push_back(s.alpha.coeffs);
    };
    record();
    if (ledger) {
      rec.ledger.dissipation.reserve(n);
      rec.ledger.martingale.reserve(n);
      rec.ledger.trace.reserve(n);
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double dt = std::min(cfg_.dt, cfg_.t_end - static_cast<double>(i) * cfg_.dt);
      const auto dw = noise_->sample_increment(i, dt, path_index, cfg_.noise_substeps);
      const StepInfo info = step(s, dt, dw, ledger);
      grad_mu_cum += info.dissipation;
      rec.grad_phi_sq_integral += info.grad_phi_sq;
      rec.h3_integral += info.h3;
      if (ledger) {
        rec.ledger.dissipation.push_back(info.dissipation);
        rec.ledger.martingale.push_back(info.martingale);
        rec.ledger.trace.push_back(info.trace);
      }
      if (s.step % cadence == 0 || s.step == n) record();
    }
    if (ledger) rec.ito_residual = ito_energy_residual(rec);
    rec.final_field = to_physical(s.alpha);
    return rec;
  }

  std::vector<PathRecord> run_paths(const Field& initial, std::size_t n_paths, int workers,
                                    std::uint32_t first_path = 0) const {
    std::vector<PathRecord> out(n_paths);
    detail::parallel_for(n_paths, workers, [&](std::size_t i) {
      out[i] = run_path(initial, first_path + static_cast<std::uint32_t>(i));
    });
    return out;
  }

  EnsembleStats run_ensemble(const Field& initial, std::size_t n_paths, int workers, double p = 4.0) const {
    if (n_paths < 1) throw Error("run_ensemble: n_paths must be at least 1");
    return ensemble_stats(run_paths(initial, n_paths, workers), p);
  }

 private:
  GridSpec grid_;
  SolverConfig cfg_;
  Potential pot_;
  std::shared_ptr<const KernelGrid> kernel_;
  std::shared_ptr<const SpectralBasis> basis_;
  std::vector<char> retained_;
  std::unique_ptr<NoiseModel> noise_;
  double stab_const_ = 0.0;
  std::vector<double> stab_;
  std::vector<std::string> warnings_;
  std::vector<std::vector<double>> channel_sq_;
  std::vector<double> channel_hess_;
};

/// mean + amplitude * sum_{k <= modes} z_k e_k with keyed normal z_k over the
/// lowest nonconstant modes.
inline Field initial_condition(const GridSpec& grid, double mean_value, double amplitude, int modes,
                               std::uint64_t seed) {
  auto basis = SpectralBasis::get(grid);
  const auto& order = basis->modes_by_eigenvalue();
  SpectralField u = SpectralField::zeros(grid);
  u[0] = mean_value * std::sqrt(grid.volume());
  for (int k = 1; k <= modes && static_cast<std::size_t>(k) < order.size(); ++k)
    u[order[static_cast<std::size_t>(k)]] = amplitude * keyed_normal(seed, static_cast<std::uint32_t>(k), 0, 0, 0xFFFFFFFFu);
  return to_physical(u);
}

}  // namespace snch
