#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "snch/spectral.hpp"

using namespace snch;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

constexpr double pi = std::numbers::pi;

Field random_field(const GridSpec& g, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Field f = Field::zeros(g);
  for (double& v : f.values) v = n(rng);
  return f;
}

// Direct O(N^2) projection onto one orthonormal cosine mode by the midpoint rule.
double direct_coefficient(const Field& f, int i, int j) {
  const GridSpec& g = f.grid;
  auto axis = [&](int a, int k, double x) {
    const double len = g.length(a);
    return k == 0 ? 1.0 / std::sqrt(len) : std::sqrt(2.0 / len) * std::cos(pi * k * x / len);
  };
  double s = 0.0;
  for (int p = 0; p < g.n(0); ++p)
    for (int q = 0; q < g.n(1); ++q) {
      double e = axis(0, i, g.node(0, p));
      if (g.dim == 2) e *= axis(1, j, g.node(1, q));
      s += f.values[static_cast<std::size_t>(p) * g.n(1) + q] * e;
    }
  return s * g.cell_volume();
}

}  // namespace

TEST_CASE("constant field has only the mean mode", "[spectral]") {
  const auto g = GridSpec::line(64);
  const auto u = to_spectral(Field::constant(g, 2.5));
  CHECK_THAT(u[0], WithinRel(2.5, 1e-14));
  for (std::size_t k = 1; k < u.size(); ++k) CHECK_THAT(u[k], WithinAbs(0.0, 1e-13));
  CHECK_THAT(mean(u), WithinRel(2.5, 1e-14));
}

TEST_CASE("cos(pi x) is the first basis member", "[spectral]") {
  const auto g = GridSpec::line(64);
  const auto f = Field::sample(g, [](double x, double) { return std::cos(pi * x); });
  const auto u = to_spectral(f);
  CHECK_THAT(u[1], WithinRel(1.0 / std::sqrt(2.0), 1e-12));
  for (std::size_t k = 0; k < u.size(); ++k)
    if (k != 1) CHECK_THAT(u[k], WithinAbs(0.0, 1e-12));
  CHECK_THAT(norm_h(f), WithinRel(1.0 / std::sqrt(2.0), 1e-12));
  CHECK_THAT(norm_vstar(f), WithinRel(1.0 / (pi * std::sqrt(2.0)), 1e-12));
  CHECK_THAT(mean(f), WithinAbs(0.0, 1e-14));
}

TEST_CASE("fast transform matches direct projection", "[spectral]") {
  for (const auto& g : {GridSpec::line(24, 1.7), GridSpec::box(12, 10, 1.0, 2.0)}) {
    const Field f = random_field(g, 7);
    const auto u = to_spectral(f);
    auto basis = SpectralBasis::get(g);
    for (std::size_t k = 0; k < u.size(); ++k) {
      const auto [i, j] = basis->multi_index(k);
      CHECK_THAT(u[k], WithinAbs(direct_coefficient(f, i, j), 1e-12));
    }
  }
}

TEST_CASE("round trip, Parseval and zero coefficients", "[spectral]") {
  const auto g = GridSpec::box(16, 24, 1.0, 1.5);
  for (unsigned s = 0; s < 100; ++s) {
    const Field f = random_field(g, s);
    const auto u = to_spectral(f);
    const Field back = to_physical(u);
    double err = 0.0, ref = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
      err = std::max(err, std::abs(back[i] - f[i]));
      ref = std::max(ref, std::abs(f[i]));
    }
    CHECK(err <= 1e-12 * ref);
    CHECK_THAT(norm_h(u), WithinRel(norm_h(f), 1e-12));
  }
  const Field z = to_physical(SpectralField::zeros(g));
  for (double v : z.values) CHECK(v == 0.0);
  auto unit = SpectralField::zeros(g);
  unit[0] = 1.0;
  for (double v : to_physical(unit).values) CHECK_THAT(v, WithinRel(1.0 / std::sqrt(1.5), 1e-13));
}

TEST_CASE("laplacian acts on eigenfunctions", "[spectral]") {
  const auto g1 = GridSpec::line(64);
  const auto f1 = Field::sample(g1, [](double x, double) { return std::cos(pi * x); });
  const Field l1 = to_physical(laplacian(to_spectral(f1)));
  for (std::size_t i = 0; i < f1.size(); ++i) CHECK_THAT(l1[i], WithinAbs(-pi * pi * f1[i], 1e-10));

  const auto g2 = GridSpec::box(32, 32);
  const auto f2 = Field::sample(g2, [](double x, double y) { return std::cos(pi * x) * std::cos(pi * y); });
  const Field l2 = to_physical(laplacian(to_spectral(f2)));
  for (std::size_t i = 0; i < f2.size(); ++i) CHECK_THAT(l2[i], WithinAbs(-2.0 * pi * pi * f2[i], 1e-10));

  const auto c = laplacian(to_spectral(Field::constant(g2, 3.0)));
  for (double v : c.coeffs) CHECK_THAT(v, WithinAbs(0.0, 1e-12));
}

TEST_CASE("eigenvalues are ordered and vanish only at the mean mode", "[spectral]") {
  const auto g = GridSpec::box(8, 12, 1.0, 2.0);
  auto basis = SpectralBasis::get(g);
  const auto& ell = basis->eigenvalues();
  CHECK(ell[0] == 0.0);
  for (std::size_t k = 1; k < ell.size(); ++k) CHECK(ell[k] > 0.0);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j + 1 < 12; ++j) CHECK(ell[basis->flat(i, j + 1)] >= ell[basis->flat(i, j)]);
  CHECK_THAT(ell[basis->flat(1, 1)], WithinRel(pi * pi + pi * pi / 4.0, 1e-14));
  const auto& order = basis->modes_by_eigenvalue();
  CHECK(order[0] == 0);
  for (std::size_t k = 0; k + 1 < order.size(); ++k) CHECK(ell[order[k]] <= ell[order[k + 1]]);
}

TEST_CASE("inverse Neumann Laplacian", "[spectral]") {
  const auto g = GridSpec::line(64);
  const auto f = Field::sample(g, [](double x, double) { return std::cos(pi * x); });
  const Field nf = to_physical(inverse_neumann_laplacian(to_spectral(f)));
  for (std::size_t i = 0; i < f.size(); ++i) CHECK_THAT(nf[i], WithinAbs(f[i] / (pi * pi), 1e-12));

  const auto g2 = GridSpec::box(16, 16);
  Field r = random_field(g2, 3);
  const double m = mean(r);
  for (double& v : r.values) v -= m;
  const auto u = to_spectral(r);
  const auto back = laplacian(inverse_neumann_laplacian(u));
  for (std::size_t k = 0; k < u.size(); ++k) CHECK_THAT(-back[k], WithinAbs(u[k], 1e-12 * norm_h(u)));

  CHECK_THROWS_AS(inverse_neumann_laplacian(to_spectral(Field::constant(g, 1.0))), NotMeanZero);
}

TEST_CASE("norm relations", "[spectral]") {
  const auto g = GridSpec::box(16, 16, 1.0, 1.0);
  auto basis = SpectralBasis::get(g);
  const double ell1 = basis->eigenvalues()[basis->modes_by_eigenvalue()[1]];
  const double c = std::max(1.0 / std::sqrt(ell1), std::sqrt(g.volume()));
  for (unsigned s = 0; s < 50; ++s) {
    const Field f = random_field(g, 100 + s);
    CHECK(norm_vstar(f) <= norm_h(f) * c * (1.0 + 1e-14));
    const Field h = random_field(g, 500 + s);
    CHECK_THAT(mean(f + h), WithinAbs(mean(f) + mean(h), 1e-13));
  }
  CHECK_THAT(norm_vstar(Field::constant(g, -3.0)), WithinRel(3.0, 1e-13));
}

TEST_CASE("vstar norm matches quadrature of grad N", "[spectral]") {
  // Oracle: for mean-zero f on [0,1], w = N f solves -w'' = f with w' = 0 at
  // the ends, so w'(x) = -int_0^x f; ||grad N f||^2 = int |w'|^2.
  const auto g = GridSpec::line(2048);
  const auto f = Field::sample(g, [](double x, double) { return std::cos(pi * x) + 0.3 * std::cos(3 * pi * x); });
  double acc = 0.0, sq = 0.0;
  const double h = g.spacing(0);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double mid = acc + 0.5 * h * f[i];
    sq += mid * mid * h;
    acc += h * f[i];
  }
  CHECK_THAT(norm_vstar(f), WithinRel(std::sqrt(sq), 1e-6));
}
