#pragma once

// Flat INI run configuration, its validation against the modelling
// assumptions, and the canonical text form printed by `simulate --print-config`.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "snch/error.hpp"
#include "snch/experiments.hpp"
#include "snch/grid.hpp"
#include "snch/kernel.hpp"
#include "snch/noise.hpp"
#include "snch/potential.hpp"
#include "snch/solver.hpp"

namespace snch {

struct InitialSpec {
  double mean = 0.0;
  double amplitude = 0.1;
  int modes = 4;
  std::uint64_t seed = 7;
};

struct ExperimentSpec {
  std::vector<double> epsilons{0.4, 0.2, 0.1, 0.05};
  std::vector<double> deltas{1e-1, 1e-2, 1e-3};
  std::vector<double> lambdas{1e-1, 1e-2, 1e-3};
  std::vector<int> mode_counts{8, 16, 32, 64};
  int dt_halvings = 3;
  double p = 4.0;
  int direction_mode = 2;  ///< cdep direction is the basis function of this eigenvalue rank
};

struct RunSpec {
  std::string out_dir = "out";
  std::size_t paths = 1;
  int workers = 1;
};

struct RunConfig {
  GridSpec grid = GridSpec::line(256);
  MollifierSpec kernel{MollifierFamily::gaussian_r2, 0.1, 1};
  PotentialSpec potential;
  NoiseSpec noise;
  SolverConfig solver;
  InitialSpec initial;
  ExperimentSpec experiment;
  RunSpec run;

  std::uint64_t master_seed() const { return noise.seed; }

  StudySetup study_setup() const {
    StudySetup s;
    s.grid = grid;
    s.mollifier = kernel;
    s.potential = potential;
    s.noise = noise;
    s.solver = solver;
    s.initial = initial_condition(grid, initial.mean, initial.amplitude, initial.modes, initial.seed);
    s.n_paths = run.paths;
    s.p = experiment.p;
    s.workers = run.workers;
    return s;
  }
};

/// One checked assumption: identifier, verdict and the witnessing value.
struct AssumptionCheck {
  std::string id;
  bool passed = true;
  double value = 0.0;
  std::string note;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

/// Line number (1-based) of `key` inside `[section]`, or 0.
inline int find_line(const std::string& text, const std::string& section, const std::string& key) {
  std::istringstream in(text);
  std::string line, current;
  for (int n = 1; std::getline(in, line); ++n) {
    const std::string t = trim(line);
    if (t.empty() || t[0] == ';' || t[0] == '#') continue;
    if (t.front() == '[' && t.back() == ']') {
      current = trim(t.substr(1, t.size() - 2));
      if (key.empty() && current == section) return n;
      continue;
    }
    const auto eq = t.find('=');
    if (current == section && trim(t.substr(0, eq)) == key) return n;
  }
  return 0;
}

template <class T>
std::vector<T> parse_list(const std::string& s) {
  std::vector<T> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    std::istringstream is(item);
    T v;
    is >> v;
    if (!is || !is.eof()) throw std::invalid_argument(item);
    out.push_back(v);
  }
  return out;
}

template <class T>
std::string join(const std::vector<T>& v) {
  std::string out;
  char buf[64];
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto r = std::to_chars(buf, buf + sizeof buf, v[i]);
    out += (i ? ", " : "") + std::string(buf, r.ptr);
  }
  return out;
}

/// Shortest text that parses back to the same double.
inline std::string fmt(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

class Reader {
 public:
  Reader(const boost::property_tree::ptree& pt, const std::string& text) : pt_(pt), text_(text) {}

  template <class T>
  void get(const std::string& section, const std::string& key, T& target) {
    known_[section].insert(key);
    auto sec = pt_.get_child_optional(section);
    if (!sec) return;
    auto raw = sec->get_optional<std::string>(key);
    if (!raw) return;
    const std::string v = trim(*raw);
    const int line = find_line(text_, section, key);
    try {
      if constexpr (std::is_same_v<T, std::string>) {
        target = v;
      } else if constexpr (std::is_same_v<T, bool>) {
        if (v == "true" || v == "1" || v == "yes") target = true;
        else if (v == "false" || v == "0" || v == "no") target = false;
        else throw std::invalid_argument(v);
      } else if constexpr (std::is_same_v<T, std::vector<double>>) {
        target = parse_list<double>(v);
      } else if constexpr (std::is_same_v<T, std::vector<int>>) {
        target = parse_list<int>(v);
      } else {
        std::istringstream is(v);
        T x;
        is >> x;
        if (!is || !is.eof()) throw std::invalid_argument(v);
        target = x;
      }
    } catch (const std::invalid_argument&) {
      throw ParseError(line, "bad value '" + v + "' for " + section + "." + key);
    }
  }

  template <class E>
  void get_enum(const std::string& section, const std::string& key, E& target,
                const std::vector<std::pair<std::string, E>>& names) {
    std::string s;
    get(section, key, s);
    if (s.empty()) return;
    for (const auto& [n, e] : names)
      if (n == s) {
        target = e;
        return;
      }
    throw ParseError(find_line(text_, section, key), "unknown value '" + s + "' for " + section + "." + key);
  }

  /// Every key present must have been requested.
  void reject_unknown() const {
    for (const auto& [section, body] : pt_) {
      auto it = known_.find(section);
      if (it == known_.end())
        throw ParseError(find_line(text_, section, ""), "unknown section [" + section + "]");
      for (const auto& [key, value] : body)
        if (!it->second.count(key))
          throw ParseError(find_line(text_, section, key), "unknown key '" + key + "' in [" + section + "]");
    }
  }

 private:
  const boost::property_tree::ptree& pt_;
  const std::string& text_;
  std::map<std::string, std::set<std::string>> known_;
};

}  // namespace detail

/// Runs every assumption checker for the configuration; throws on the first failure when `strict`.
inline std::vector<AssumptionCheck> check_assumptions(const RunConfig& c, bool strict = true) {
  std::vector<AssumptionCheck> out;
  auto add = [&](AssumptionCheck a) {
    if (strict && !a.passed) throw ValidationError(a.id, a.note);
    out.push_back(std::move(a));
  };

  c.grid.validate();
  c.solver.validate();
  add({"A1", true, c.grid.volume(), "rectangular domain volume"});

  const Potential pot(c.potential);  // A2-i and lem:coercivity feasibility
  add({"A2-i", true, pot.F(0.0), "F'(0) = 0, F >= 0 on [-10, 10]"});
  add({"lem:coercivity", true, pot.gamma() - pot.alpha(), "gamma - alpha"});
  add({"A2-ii", std::isfinite(pot.growth_constant()), pot.growth_constant(), "empirical C_F on [-5, 5]"});
  add({"A6", std::isfinite(pot.polynomial_growth_constant(2.0)), pot.polynomial_growth_constant(2.0),
       "F'' <= C (1 + |s|^2) on [-10, 10]"});

  std::vector<double> eps{c.kernel.epsilon};
  for (double e : c.experiment.epsilons) eps.push_back(e);
  const double h2 = 2.0 * c.grid.max_spacing();
  for (double e : eps)
    if (e < h2)
      add({"kernel-resolution", false, e,
           "kernel resolution rule: epsilon " + detail::fmt(e) + " < 2 * grid spacing " + detail::fmt(h2)});
  add({"kernel-resolution", true, *std::min_element(eps.begin(), eps.end()), "smallest epsilon >= 2 * spacing"});
  c.kernel.validate();
  if (c.kernel.dim_n != c.grid.dim)
    add({"A5", true, static_cast<double>(c.kernel.dim_n), "normalization dimension differs from grid dimension"});

  if (c.solver.model == Model::nonlocal) {
    const auto k = build_kernel(c.kernel, c.grid);
    const double min_a = k->a_min();
    const double a2iii = min_a + pot.min_ddF();
    add({"A2-iii", a2iii >= c.potential.c0, a2iii,
         "min a + inf F'' = " + detail::fmt(a2iii) + " against C0 = " + detail::fmt(c.potential.c0)});
    const double margin = coercivity_margin(pot, min_a, c.solver.yosida());
    add({"lem:coercivity", margin >= 0.5 * c.potential.c0, margin,
         "inf Psi''_lambda - gamma + min a = " + detail::fmt(margin)});
  }

  const NoiseModel nm(c.noise, c.grid);
  const NoiseReport r = nm.validate_assumptions();
  add({"A3-i", std::isfinite(r.lipschitz_h), r.lipschitz_h, "L_G in L_2(U, H)"});
  add({"A3-ii", r.amplitude_rule && std::isfinite(r.bound_h), r.bound_h,
       r.amplitude_rule ? "sup_psi ||G(psi)||_{L_2(U,H)}" : "b_k exceeds b0 (1 + ell_k)^{-1}"});
  add({"A3-iii", std::isfinite(r.bound_v), r.bound_v, "sup_psi ||G(psi)||_{L_2(U,V)}"});
  add({"A4", r.a4, r.max_channel_mean, r.a4 ? "every channel has zero mean" : "a channel carries the constant mode"});
  add({"A7", std::isfinite(r.bound_v), r.bound_v, "V-bound of G"});
  return out;
}

inline RunConfig parse_config(const std::string& text, bool validate = true) {
  boost::property_tree::ptree pt;
  try {
    std::istringstream in(text);
    boost::property_tree::ini_parser::read_ini(in, pt);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ParseError(static_cast<int>(e.line()), e.message());
  }
  detail::Reader rd(pt, text);
  RunConfig c;

  int nx = c.grid.points[0], ny = 0;
  double lx = c.grid.extent[0], ly = c.grid.extent[1];
  rd.get("grid", "dim", c.grid.dim);
  rd.get("grid", "nx", nx);
  rd.get("grid", "ny", ny);
  rd.get("grid", "lx", lx);
  rd.get("grid", "ly", ly);
  c.grid.points = {nx, c.grid.dim == 2 ? (ny > 0 ? ny : nx) : 1};
  c.grid.extent = {lx, ly};

  c.kernel.dim_n = c.grid.dim;
  rd.get_enum("kernel", "family", c.kernel.family,
              {{"gaussian_r2", MollifierFamily::gaussian_r2}, {"annular", MollifierFamily::annular}});
  rd.get("kernel", "epsilon", c.kernel.epsilon);
  rd.get("kernel", "dim_n", c.kernel.dim_n);

  rd.get_enum("potential", "kind", c.potential.kind,
              {{"quartic", PotentialKind::quartic}, {"even_polynomial", PotentialKind::even_polynomial}});
  rd.get("potential", "coefficients", c.potential.coefficients);
  rd.get("potential", "gamma", c.potential.gamma);
  rd.get("potential", "c0", c.potential.c0);

  rd.get("noise", "modes", c.noise.modes);
  rd.get("noise", "b0", c.noise.b0);
  rd.get("noise", "decay", c.noise.decay);
  rd.get_enum("noise", "saturation", c.noise.saturation,
              {{"tanh", Saturation::tanh},
               {"clamp", Saturation::clamp},
               {"identity_bounded", Saturation::identity_bounded},
               {"constant", Saturation::constant}});
  rd.get("noise", "saturation_bound", c.noise.saturation_bound);
  rd.get("noise", "mean_zero", c.noise.mean_zero);
  rd.get("noise", "seed", c.noise.seed);

  rd.get_enum("solver", "model", c.solver.model, {{"nonlocal", Model::nonlocal}, {"local", Model::local}});
  rd.get("solver", "lambda", c.solver.lambda);
  rd.get("solver", "dt", c.solver.dt);
  rd.get("solver", "t_end", c.solver.t_end);
  rd.get_enum("solver", "scheme", c.solver.scheme,
              {{"imex_em", Scheme::imex_em}, {"explicit_em", Scheme::explicit_em}});
  rd.get("solver", "stabilization", c.solver.stabilization);
  rd.get("solver", "record_every", c.solver.record_every);
  rd.get("solver", "galerkin_modes", c.solver.galerkin_modes);
  rd.get("solver", "noise_substeps", c.solver.noise_substeps);
  rd.get("solver", "newton_tol", c.solver.newton_tol);
  rd.get("solver", "newton_max_iter", c.solver.newton_max_iter);

  rd.get("initial", "mean", c.initial.mean);
  rd.get("initial", "amplitude", c.initial.amplitude);
  rd.get("initial", "modes", c.initial.modes);
  rd.get("initial", "seed", c.initial.seed);

  rd.get("experiment", "epsilons", c.experiment.epsilons);
  rd.get("experiment", "deltas", c.experiment.deltas);
  rd.get("experiment", "lambdas", c.experiment.lambdas);
  rd.get("experiment", "mode_counts", c.experiment.mode_counts);
  rd.get("experiment", "dt_halvings", c.experiment.dt_halvings);
  rd.get("experiment", "p", c.experiment.p);
  rd.get("experiment", "direction_mode", c.experiment.direction_mode);

  rd.get("run", "out_dir", c.run.out_dir);
  rd.get("run", "paths", c.run.paths);
  rd.get("run", "workers", c.run.workers);

  rd.reject_unknown();
  if (c.run.paths < 1) throw ValidationError("run", "paths must be at least 1");
  if (c.run.workers < 1) throw ValidationError("run", "workers must be at least 1");
  if (!(c.experiment.p > 0.0)) throw ValidationError("experiment", "p must be positive");
  if (validate) check_assumptions(c);
  return c;
}

/// Canonical INI text with every field; parse_config(to_ini(c)) reproduces c.
inline std::string to_ini(const RunConfig& c) {
  using detail::fmt;
  std::ostringstream o;
  o << "[grid]\n"
    << "dim = " << c.grid.dim << "\n"
    << "nx = " << c.grid.points[0] << "\n";
  if (c.grid.dim == 2) o << "ny = " << c.grid.points[1] << "\n";
  o << "lx = " << fmt(c.grid.extent[0]) << "\n";
  if (c.grid.dim == 2) o << "ly = " << fmt(c.grid.extent[1]) << "\n";
  o << "\n[kernel]\n"
    << "family = " << to_string(c.kernel.family) << "\n"
    << "epsilon = " << fmt(c.kernel.epsilon) << "\n"
    << "dim_n = " << c.kernel.dim_n << "\n";
  o << "\n[potential]\n"
    << "kind = " << (c.potential.kind == PotentialKind::quartic ? "quartic" : "even_polynomial") << "\n";
  if (c.potential.kind == PotentialKind::even_polynomial)
    o << "coefficients = " << detail::join(c.potential.coefficients) << "\n";
  o << "gamma = " << fmt(c.potential.gamma) << "\n"
    << "c0 = " << fmt(c.potential.c0) << "\n";
  o << "\n[noise]\n"
    << "modes = " << c.noise.modes << "\n"
    << "b0 = " << fmt(c.noise.b0) << "\n"
    << "decay = " << fmt(c.noise.decay) << "\n"
    << "saturation = " << to_string(c.noise.saturation) << "\n"
    << "saturation_bound = " << fmt(c.noise.saturation_bound) << "\n"
    << "mean_zero = " << (c.noise.mean_zero ? "true" : "false") << "\n"
    << "seed = " << c.noise.seed << "\n";
  o << "\n[solver]\n"
    << "model = " << to_string(c.solver.model) << "\n"
    << "lambda = " << fmt(c.solver.lambda) << "\n"
    << "dt = " << fmt(c.solver.dt) << "\n"
    << "t_end = " << fmt(c.solver.t_end) << "\n"
    << "scheme = " << to_string(c.solver.scheme) << "\n"
    << "stabilization = " << fmt(c.solver.stabilization) << "\n"
    << "record_every = " << c.solver.record_every << "\n"
    << "galerkin_modes = " << c.solver.galerkin_modes << "\n"
    << "noise_substeps = " << c.solver.noise_substeps << "\n"
    << "newton_tol = " << fmt(c.solver.newton_tol) << "\n"
    << "newton_max_iter = " << c.solver.newton_max_iter << "\n";
  o << "\n[initial]\n"
    << "mean = " << fmt(c.initial.mean) << "\n"
    << "amplitude = " << fmt(c.initial.amplitude) << "\n"
    << "modes = " << c.initial.modes << "\n"
    << "seed = " << c.initial.seed << "\n";
  o << "\n[experiment]\n"
    << "epsilons = " << detail::join(c.experiment.epsilons) << "\n"
    << "deltas = " << detail::join(c.experiment.deltas) << "\n"
    << "lambdas = " << detail::join(c.experiment.lambdas) << "\n"
    << "mode_counts = " << detail::join(c.experiment.mode_counts) << "\n"
    << "dt_halvings = " << c.experiment.dt_halvings << "\n"
    << "p = " << fmt(c.experiment.p) << "\n"
    << "direction_mode = " << c.experiment.direction_mode << "\n";
  o << "\n[run]\n"
    << "out_dir = " << c.run.out_dir << "\n"
    << "paths = " << c.run.paths << "\n"
    << "workers = " << c.run.workers << "\n";
  return o.str();
}

}  // namespace snch
