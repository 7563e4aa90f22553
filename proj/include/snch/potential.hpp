#pragma once

// Regular double-well potentials, the convex split F = Psi - gamma s^2 / 2,
// and the Yosida regularization of Psi'.

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "snch/error.hpp"

namespace snch {

enum class PotentialKind { quartic, even_polynomial };

struct YosidaParams {
  double lambda = 0.0;  ///< 0 disables the regularization
  double newton_tol = 1e-12;
  int max_iter = 100;

  void validate() const {
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw ValidationError("yosida", "lambda must lie in [0, 1]");
    if (!(newton_tol > 0.0)) throw ValidationError("yosida", "newton_tol must be positive");
    if (max_iter < 1) throw ValidationError("yosida", "max_iter must be positive");
  }
};

/// Largest x > 0 with x^2 / (1 + x) <= c0 / 2.
inline double coercivity_split_bound(double c0) {
  const double c = 0.5 * c0;
  return 0.5 * (c + std::sqrt(c * c + 4.0 * c));
}

/// gamma = alpha + min(0.5, bound): keeps inf Psi''_lambda - gamma + a >= C0/2 for every lambda <= 1.
inline double select_gamma(double alpha, double c0) { return alpha + std::min(0.5, coercivity_split_bound(c0)); }

struct PotentialSpec {
  PotentialKind kind = PotentialKind::quartic;
  /// F(s) = sum_k coefficients[k] s^{2k}; ignored for the quartic kind.
  std::vector<double> coefficients;
  double gamma = 0.0;  ///< 0 selects gamma automatically
  double c0 = 1.0;
};

/// Evaluates F and the Yosida machinery for a validated PotentialSpec.
class Potential {
 public:
  Potential() : Potential(PotentialSpec{}) {}

  explicit Potential(PotentialSpec spec) : spec_(std::move(spec)) {
    if (spec_.kind == PotentialKind::quartic) spec_.coefficients = {0.25, -0.5, 0.25};
    if (spec_.coefficients.empty()) throw ValidationError("A2", "even_polynomial needs coefficients");
    if (spec_.coefficients.size() > 1 && !(spec_.coefficients.back() > 0.0))
      throw ValidationError("A2", "leading coefficient must be positive");
    if (!(spec_.c0 > 0.0)) throw ValidationError("A2-iii", "c0 must be positive");
    alpha_ = std::max(0.0, -min_ddF());
    if (spec_.gamma == 0.0) spec_.gamma = select_gamma(alpha_, spec_.c0);
    validate();
  }

  const PotentialSpec& spec() const { return spec_; }
  double gamma() const { return spec_.gamma; }
  double alpha() const { return alpha_; }
  double c0() const { return spec_.c0; }

  double F(double s) const {
    const double t = s * s;
    double acc = 0.0;
    for (auto it = spec_.coefficients.rbegin(); it != spec_.coefficients.rend(); ++it) acc = acc * t + *it;
    return acc;
  }

  double dF(double s) const {
    const double t = s * s;
    double acc = 0.0;
    for (std::size_t k = spec_.coefficients.size(); k-- > 1;) acc = acc * t + 2.0 * k * spec_.coefficients[k];
    return acc * s;
  }

  double ddF(double s) const {
    const double t = s * s;
    double acc = 0.0;
    for (std::size_t k = spec_.coefficients.size(); k-- > 1;)
      acc = acc * t + 2.0 * k * (2.0 * k - 1.0) * spec_.coefficients[k];
    return acc;
  }

  double psi(double s) const { return F(s) + 0.5 * spec_.gamma * s * s; }
  double dpsi(double s) const { return dF(s) + spec_.gamma * s; }
  double ddpsi(double s) const { return ddF(s) + spec_.gamma; }

  /// J_lambda(s) = (I + lambda Psi')^{-1}(s) by Newton safeguarded with bisection.
  double resolvent(double s, const YosidaParams& y) const {
    const double lambda = y.lambda;
    if (!(lambda > 0.0)) throw Error("resolvent requires lambda > 0");
    auto g = [&](double x) { return x + lambda * dpsi(x) - s; };
    const double tol = y.newton_tol * std::max(1.0, std::abs(s));

    const double spread = lambda * std::abs(dpsi(s)) + 1.0;
    double lo = s - spread, hi = s + spread;
    for (int grow = 0; g(lo) > 0.0; ++grow) {
      lo = s - (s - lo) * 2.0;
      if (grow > 200) throw NoConvergence("resolvent: no lower bracket");
    }
    for (int grow = 0; g(hi) < 0.0; ++grow) {
      hi = s + (hi - s) * 2.0;
      if (grow > 200) throw NoConvergence("resolvent: no upper bracket");
    }

    double x = std::clamp(s / (1.0 + lambda * (spec_.gamma - alpha_)), lo, hi);
    for (int it = 0; it < y.max_iter; ++it) {
      const double gx = g(x);
      if (std::abs(gx) <= tol) return x;
      if (gx > 0.0)
        hi = x;
      else
        lo = x;
      const double slope = 1.0 + lambda * ddpsi(x);
      double next = x - gx / slope;
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (next == x) return x;
      x = next;
    }
    if (std::abs(g(x)) <= tol) return x;
    throw NoConvergence("resolvent: residual above tolerance after " + std::to_string(y.max_iter) + " iterations");
  }

  /// Yosida approximation Psi'_lambda; evaluated as Psi'(J_lambda(s)), which equals (s - J)/lambda.
  double yosida_dpsi(double s, const YosidaParams& y) const {
    if (y.lambda == 0.0) return dpsi(s);
    return dpsi(resolvent(s, y));
  }

  /// Psi''_lambda(s) = Psi''(J) / (1 + lambda Psi''(J)).
  double yosida_ddpsi(double s, const YosidaParams& y) const {
    if (y.lambda == 0.0) return ddpsi(s);
    const double p2 = ddpsi(resolvent(s, y));
    return p2 / (1.0 + y.lambda * p2);
  }

  double dF_lambda(double s, const YosidaParams& y) const {
    if (y.lambda == 0.0) return dF(s);
    return yosida_dpsi(s, y) - spec_.gamma * s;
  }

  double ddF_lambda(double s, const YosidaParams& y) const {
    if (y.lambda == 0.0) return ddF(s);
    return yosida_ddpsi(s, y) - spec_.gamma;
  }

  /// F_lambda(s) = F(0) + int_0^s Psi'_lambda - gamma s^2 / 2 by adaptive Gauss-Kronrod quadrature.
  double F_lambda(double s, const YosidaParams& y) const {
    if (y.lambda == 0.0) return F(s);
    if (s == 0.0) return F(0.0);
    using boost::math::quadrature::gauss_kronrod;
    auto integrand = [&](double x) { return yosida_dpsi(x, y); };
    const double a = std::min(0.0, s), b = std::max(0.0, s);
    double integral = gauss_kronrod<double, 21>::integrate(integrand, a, b, 15, 1e-12);
    if (s < 0.0) integral = -integral;
    return F(0.0) + integral - 0.5 * spec_.gamma * s * s;
  }

  /// Same value as F_lambda via the Moreau envelope Psi(J) + lambda Psi'(J)^2 / 2; used in hot loops.
  double F_lambda_envelope(double s, const YosidaParams& y) const {
    if (y.lambda == 0.0) return F(s);
    const double j = resolvent(s, y);
    const double d = dpsi(j);
    return psi(j) + 0.5 * y.lambda * d * d - 0.5 * spec_.gamma * s * s;
  }

  /// inf_s F''(s), located by grid search refined with Brent's method.
  double min_ddF() const {
    double best_s = 0.0, best = ddF(0.0);
    const double range = 10.0;
    for (int i = 0; i <= 4000; ++i) {
      const double s = -range + 2.0 * range * i / 4000.0;
      const double v = ddF(s);
      if (v < best) best = v, best_s = s;
    }
    const double step = 2.0 * range / 4000.0;
    auto r = boost::math::tools::brent_find_minima([this](double s) { return ddF(s); }, best_s - step, best_s + step,
                                                   std::numeric_limits<double>::digits / 2);
    return std::min(best, r.second);
  }

  /// Empirical C_F with |F'| + |F''| <= C_F (1 + F) on [-range, range].
  double growth_constant(double range = 5.0) const {
    double c = 0.0;
    for (int i = 0; i <= 2000; ++i) {
      const double s = -range + 2.0 * range * i / 2000.0;
      c = std::max(c, (std::abs(dF(s)) + std::abs(ddF(s))) / (1.0 + F(s)));
    }
    return c;
  }

  /// Smallest C with F''(s) <= C (1 + |s|^q) on [-range, range].
  double polynomial_growth_constant(double q, double range = 10.0) const {
    double c = 0.0;
    for (int i = 0; i <= 4000; ++i) {
      const double s = -range + 2.0 * range * i / 4000.0;
      c = std::max(c, ddF(s) / (1.0 + std::pow(std::abs(s), q)));
    }
    return c;
  }

  double max_abs_ddF(double lo, double hi) const {
    double m = 0.0;
    for (int i = 0; i <= 2000; ++i) m = std::max(m, std::abs(ddF(lo + (hi - lo) * i / 2000.0)));
    return m;
  }

 private:
  void validate() const {
    if (std::abs(dF(0.0)) > 0.0) throw ValidationError("A2-i", "F'(0) must vanish");
    for (int i = 0; i <= 2000; ++i) {
      const double s = -10.0 + 20.0 * i / 2000.0;
      if (F(s) < -1e-14) throw ValidationError("A2-i", "F must be nonnegative");
    }
    if (!(spec_.gamma > alpha_))
      throw ValidationError("lem:coercivity", "gamma must exceed alpha = -inf F'' (convex split infeasible)");
    const double x = spec_.gamma - alpha_;
    if (x * x / (1.0 + x) > 0.5 * spec_.c0 + 1e-15)
      throw ValidationError("lem:coercivity", "(gamma - alpha)^2 / (1 + gamma - alpha) exceeds c0 / 2");
  }

  PotentialSpec spec_;
  double alpha_ = 0.0;
};

/// inf_s Psi''_lambda(s) - gamma + min_a, with Psi''_lambda taken by central differences of Psi'_lambda.
/// A value >= C0 / 2 witnesses the coercivity lemma for this configuration.
inline double coercivity_margin(const Potential& pot, double min_a, const YosidaParams& y, double range = 10.0,
                                int points = 4001) {
  const double h = 1e-4;
  double inf = std::numeric_limits<double>::infinity();
  for (int i = 0; i < points; ++i) {
    const double s = -range + 2.0 * range * i / (points - 1);
    const double d2 = (pot.yosida_dpsi(s + h, y) - pot.yosida_dpsi(s - h, y)) / (2.0 * h);
    inf = std::min(inf, d2);
  }
  return inf - pot.gamma() + min_a;
}

}  // namespace snch
