#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "snch/kernel.hpp"
#include "snch/spectral.hpp"

using namespace snch;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

constexpr double pi = std::numbers::pi;

Field random_field(const GridSpec& g, unsigned seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Field f = Field::zeros(g);
  for (double& v : f.values) v = u(rng);
  return f;
}

double x_of(const GridSpec& g, std::size_t idx, int axis) {
  return axis == 0 ? g.node(0, static_cast<int>(idx / g.n(1))) : g.node(1, static_cast<int>(idx % g.n(1)));
}

double dist(const GridSpec& g, std::size_t p, std::size_t q) {
  const double dx = x_of(g, p, 0) - x_of(g, q, 0);
  const double dy = g.dim == 2 ? x_of(g, p, 1) - x_of(g, q, 1) : 0.0;
  return std::hypot(dx, dy);
}

// Brute-force (K * f)(x_p) = w sum_q K(x_p - x_q) f(x_q).
Field direct_convolve(const MollifierSpec& m, const Field& f) {
  Field out = Field::zeros(f.grid);
  for (std::size_t p = 0; p < f.size(); ++p) {
    double s = 0.0;
    for (std::size_t q = 0; q < f.size(); ++q) s += kernel_value(m, dist(f.grid, p, q)) * f[q];
    out[p] = s * f.grid.cell_volume();
  }
  return out;
}

// Brute-force double sum of K(x - y)(h(x) - h(y))(g(x) - g(y)).
double direct_B(const MollifierSpec& m, const Field& h, const Field& g) {
  double s = 0.0;
  for (std::size_t p = 0; p < h.size(); ++p)
    for (std::size_t q = 0; q < h.size(); ++q)
      s += kernel_value(m, dist(h.grid, p, q)) * (h[p] - h[q]) * (g[p] - g[q]);
  const double w = h.grid.cell_volume();
  return s * w * w;
}

double simpson(const std::function<double(double)>& f, double a, double b, int n = 20000) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

}  // namespace

TEST_CASE("sphere constants by quadrature", "[kernel]") {
  CHECK(cn_constant(1) == 2.0);
  const double c2 = simpson([](double t) { return std::cos(t) * std::cos(t); }, 0.0, 2.0 * pi);
  CHECK_THAT(cn_constant(2), WithinRel(c2, 1e-10));
  // On S^2 with polar angle t: int cos^2 t sin t dt dphi.
  const double c3 = 2.0 * pi * simpson([](double t) { return std::cos(t) * std::cos(t) * std::sin(t); }, 0.0, pi);
  CHECK_THAT(cn_constant(3), WithinRel(c3, 1e-10));
  CHECK_THROWS(cn_constant(4));
}

TEST_CASE("mollifier normalization and vanishing tails", "[kernel]") {
  for (auto fam : {MollifierFamily::gaussian_r2, MollifierFamily::annular})
    for (int n : {1, 2, 3}) {
      double prev_tail = std::numeric_limits<double>::infinity();
      for (double eps : {0.2, 0.1, 0.05}) {
        MollifierSpec m{fam, eps, n};
        auto integrand = [&](double r) { return mollifier_rho(m, r) * std::pow(r, n - 1); };
        double total;
        if (fam == MollifierFamily::annular)
          total = simpson(integrand, 0.5 * eps, eps);
        else
          total = simpson(integrand, 0.0, 12.0 * eps);
        CHECK_THAT(total, WithinRel(2.0 / cn_constant(n), 1e-6));
        const double tail = fam == MollifierFamily::annular ? (eps > 0.25 ? total : 0.0)
                                                            : simpson(integrand, 0.25, 0.25 + 12.0 * eps);
        CHECK(tail <= prev_tail);
        prev_tail = tail;
      }
    }
  MollifierSpec g2{MollifierFamily::gaussian_r2, 0.1, 2};
  CHECK_THAT(kernel_value(g2, 0.0), WithinRel(4.0 / pi * std::pow(0.1, -4), 1e-14));
}

TEST_CASE("kernel samples: sign, symmetry, support", "[kernel]") {
  const auto g = GridSpec::box(24, 24);
  for (auto fam : {MollifierFamily::gaussian_r2, MollifierFamily::annular}) {
    const KernelGrid k({fam, 0.2, 2}, g);
    for (int a = -23; a <= 23; ++a)
      for (int b = -23; b <= 23; ++b) {
        CHECK(k.sample(a, b) >= 0.0);
        CHECK(k.sample(a, b) == k.sample(-a, -b));
        if (fam == MollifierFamily::annular) {
          const double r = std::hypot(a * g.spacing(0), b * g.spacing(1));
          if (r < 0.1 || r > 0.2) CHECK(k.sample(a, b) == 0.0);
        }
      }
    for (double v : k.a_field().values) CHECK(v >= 0.0);
  }
  CHECK_THROWS_AS(KernelGrid({MollifierFamily::gaussian_r2, 0.05, 2}, g), UnresolvedKernel);
}

TEST_CASE("fast convolution matches direct double loop", "[kernel]") {
  for (const auto& g : {GridSpec::box(32, 32), GridSpec::line(64, 2.0), GridSpec::box(16, 20, 1.0, 1.3)}) {
    const MollifierSpec m{MollifierFamily::gaussian_r2, 0.15, g.dim};
    const KernelGrid k(m, g);
    const Field f = random_field(g, 11);
    const Field fast = k.convolve(f);
    const Field slow = direct_convolve(m, f);
    double scale = 0.0;
    for (double v : slow.values) scale = std::max(scale, std::abs(v));
    for (std::size_t i = 0; i < f.size(); ++i) CHECK_THAT(fast[i], WithinAbs(slow[i], 1e-12 * scale));
    const Field c = k.convolve(Field::constant(g, 3.0));
    for (std::size_t i = 0; i < f.size(); ++i) CHECK_THAT(c[i], WithinRel(3.0 * k.a_field()[i], 1e-12));
    const Field pos = k.convolve(random_field(g, 12, 0.0, 1.0));
    for (double v : pos.values) CHECK(v >= 0.0);
  }
}

TEST_CASE("nonlocal operator annihilates constants and has zero mean", "[kernel]") {
  const auto g = GridSpec::box(32, 32);
  const KernelGrid k({MollifierFamily::gaussian_r2, 0.1, 2}, g);
  const Field z = nonlocal_op(k, Field::constant(g, 2.0));
  for (double v : z.values) CHECK_THAT(v, WithinAbs(0.0, 1e-10 * k.a_max()));
  const Field u = random_field(g, 5);
  const Field lu = nonlocal_op(k, u);
  CHECK(std::abs(mean(lu)) <= 1e-12 * k.a_max() * norm_h(u));
}

TEST_CASE("interior a approaches 4 / eps^2", "[kernel]") {
  const auto g = GridSpec::box(128, 128);
  for (double eps : {0.2, 0.1}) {
    const KernelGrid k({MollifierFamily::gaussian_r2, eps, 2}, g);
    const std::size_t centre = static_cast<std::size_t>(64) * 128 + 64;
    CHECK_THAT(k.a_field()[centre], WithinRel(4.0 / (eps * eps), 1e-3));
  }
  const KernelGrid k1({MollifierFamily::gaussian_r2, 0.1, 1}, GridSpec::line(256));
  CHECK_THAT(k1.a_field()[128], WithinRel(400.0, 1e-3));
}

TEST_CASE("nonlocal operator approximates the negative Laplacian in the interior", "[kernel]") {
  const auto g = GridSpec::box(128, 128);
  const auto u = Field::sample(g, [](double x, double y) { return std::cos(pi * x) * std::cos(pi * y); });
  const KernelGrid k({MollifierFamily::gaussian_r2, 0.1, 2}, g);
  const Field lu = nonlocal_op(k, u);
  double err = 0.0, ref = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double x = x_of(g, i, 0), y = x_of(g, i, 1);
    if (std::min({x, 1.0 - x, y, 1.0 - y}) < 0.45) continue;
    err = std::max(err, std::abs(lu[i] - 2.0 * pi * pi * u[i]));
    ref = std::max(ref, std::abs(2.0 * pi * pi * u[i]));
  }
  CHECK(err / ref < 0.05);
}

TEST_CASE("bilinear form: oracle, symmetry, bound, sign", "[kernel]") {
  const auto g = GridSpec::box(24, 24);
  for (auto fam : {MollifierFamily::gaussian_r2, MollifierFamily::annular}) {
    const MollifierSpec m{fam, 0.26, 2};
    const KernelGrid k(m, g);
    const double l1 = k.l1_norm();
    for (unsigned s = 0; s < 20; ++s) {
      const Field h = random_field(g, 2 * s), q = random_field(g, 2 * s + 1);
      const double fast = bilinear_B(k, h, q);
      CHECK_THAT(fast, WithinRel(direct_B(m, h, q), 1e-8));
      CHECK_THAT(bilinear_B(k, q, h), WithinAbs(fast, 1e-12 * std::abs(fast) + 1e-14));
      CHECK(std::abs(fast) <= 4.0 * l1 * norm_h(h) * norm_h(q));
      CHECK(bilinear_B(k, h, h) >= 0.0);
    }
    CHECK_THAT(bilinear_B(k, Field::constant(g, 1.5), random_field(g, 99)), WithinAbs(0.0, 1e-10));
  }
}

TEST_CASE("nonlocal energy", "[kernel]") {
  const auto g = GridSpec::box(24, 24, 1.0, 2.0);
  const MollifierSpec m{MollifierFamily::gaussian_r2, 0.25, 2};
  const KernelGrid k(m, g);
  const Potential pot;
  CHECK_THAT(nonlocal_energy(k, Field::constant(g, 1.0), pot, 0.0), WithinAbs(0.0, 1e-12));
  CHECK_THAT(nonlocal_energy(k, Field::constant(g, 0.0), pot, 0.0), WithinRel(0.5, 1e-14));
  const Field f = random_field(g, 4);
  double bulk = 0.0;
  for (double v : f.values) bulk += pot.F(v);
  const double direct = 0.25 * direct_B(m, f, f) + bulk * g.cell_volume();
  CHECK_THAT(nonlocal_energy(k, f, pot, 0.0), WithinRel(direct, 1e-8));
  CHECK(nonlocal_energy(k, f, pot, 0.1) <= nonlocal_energy(k, f, pot, 0.0));
}

TEST_CASE("reflected symbol dominates the restricted operator", "[kernel]") {
  for (const auto& g : {GridSpec::line(128), GridSpec::box(32, 32)}) {
    const KernelGrid k({MollifierFamily::gaussian_r2, 0.1, g.dim}, g);
    const auto& sigma = k.symbol();
    CHECK(sigma[0] == Catch::Approx(0.0).margin(1e-9));
    for (double v : sigma) CHECK(v >= -1e-9);
    for (unsigned s = 0; s < 20; ++s) {
      const Field u = random_field(g, 300 + s);
      const auto c = to_spectral(u);
      double bound = 0.0;
      for (std::size_t j = 0; j < c.size(); ++j) bound += sigma[j] * c[j] * c[j];
      const double form = inner_h(u, nonlocal_op(k, u));
      CHECK(form <= bound * (1.0 + 1e-10) + 1e-10);
    }
  }
}
