#include <catch_amalgamated.hpp>

#include <filesystem>

#include "snch/config.hpp"
#include "snch/io.hpp"

using namespace snch;
using Catch::Matchers::ContainsSubstring;

namespace {

template <class F>
int parse_line(F&& f) {
  try {
    f();
  } catch (const ParseError& e) {
    return e.line();
  }
  return -1;
}

std::string assumption_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ValidationError& e) {
    return e.assumption();
  }
  return "";
}

}  // namespace

TEST_CASE("default configuration round-trips through its text form", "[config]") {
  const RunConfig c;
  const std::string text = to_ini(c);
  CHECK(to_ini(parse_config(text)) == text);
}

TEST_CASE("edited configuration round-trips", "[config]") {
  const std::string text =
      "[grid]\ndim = 2\nnx = 32\nny = 24\nlx = 1.5\n"
      "[kernel]\nfamily = annular\nepsilon = 0.3\n"
      "[noise]\nmodes = 5\nsaturation = identity_bounded\nsaturation_bound = 0.5\nseed = 99\n"
      "[solver]\nmodel = local\nlambda = 0.01\nscheme = explicit_em\n"
      "[experiment]\nepsilons = 0.4, 0.3\nmode_counts = 4, 8\n"
      "[run]\npaths = 3\nworkers = 2\n";
  const RunConfig c = parse_config(text);
  CHECK(c.grid.dim == 2);
  CHECK(c.grid.points[1] == 24);
  CHECK(c.grid.extent[0] == 1.5);
  CHECK(c.kernel.family == MollifierFamily::annular);
  CHECK(c.kernel.dim_n == 2);
  CHECK(c.noise.saturation == Saturation::identity_bounded);
  CHECK(c.noise.seed == 99);
  CHECK(c.solver.model == Model::local);
  CHECK(c.solver.scheme == Scheme::explicit_em);
  CHECK(c.experiment.epsilons == std::vector<double>{0.4, 0.3});
  CHECK(c.experiment.mode_counts == std::vector<int>{4, 8});
  CHECK(c.run.paths == 3);
  CHECK(to_ini(parse_config(to_ini(c))) == to_ini(c));
}

TEST_CASE("unknown keys and sections report their line", "[config]") {
  CHECK(parse_line([] { parse_config("[grid]\nnx = 64\n\n; note\nnxx = 3\n"); }) == 5);
  CHECK(parse_line([] { parse_config("[grid]\nnx = 64\n[gird]\nny = 3\n"); }) == 3);
}

TEST_CASE("malformed values report their line", "[config]") {
  CHECK(parse_line([] { parse_config("[solver]\ndt = 1e-4\nt_end = soon\n"); }) == 3);
  CHECK(parse_line([] { parse_config("[noise]\nmean_zero = maybe\n"); }) == 2);
  CHECK(parse_line([] { parse_config("[kernel]\nfamily = cubic\n"); }) == 2);
  CHECK(parse_line([] { parse_config("[experiment]\nepsilons = 0.1, x\n"); }) == 2);
  CHECK(parse_line([] { parse_config("[grid]\nnx 64\n"); }) == 2);
}

TEST_CASE("validation names the failing assumption", "[config]") {
  CHECK(assumption_of("[grid]\nnx = 16\n[kernel]\nepsilon = 0.05\n") == "kernel-resolution");
  CHECK(assumption_of("[grid]\nnx = 64\n[experiment]\nepsilons = 0.4, 0.01\n") == "kernel-resolution");
  CHECK(assumption_of("[noise]\nmodes = 4\nmean_zero = false\n") == "A4");
  CHECK(assumption_of("[noise]\nmodes = 4\ndecay = 0.5\n") == "A3-iii");
  CHECK(assumption_of("[solver]\nlambda = 3\n") == "yosida");
  CHECK(assumption_of("[potential]\nkind = even_polynomial\ncoefficients = 0, 1, -1\n") != "");
  CHECK_THROWS_AS(parse_config("[run]\nworkers = 0\n"), ValidationError);
}

TEST_CASE("assumption report for the default configuration", "[config]") {
  const auto checks = check_assumptions(RunConfig{});
  std::set<std::string> ids;
  for (const auto& c : checks) {
    CHECK(c.passed);
    ids.insert(c.id);
  }
  for (const char* id : {"A1", "A2-i", "A2-iii", "A3-i", "A3-ii", "A3-iii", "A4", "A6", "A7", "lem:coercivity"})
    CHECK(ids.count(id) == 1);
}

TEST_CASE("A2-iii witness is min a plus inf F''", "[config]") {
  RunConfig c;
  const auto checks = check_assumptions(c);
  const auto k = build_kernel(c.kernel, c.grid);
  for (const auto& a : checks)
    if (a.id == "A2-iii") CHECK(a.value == k->a_min() + Potential(c.potential).min_ddF());
  c.kernel.epsilon = 0.9;
  c.potential.c0 = 1.5;  // min a is about 2.19 here
  CHECK_THROWS_AS(check_assumptions(c), ValidationError);
}

TEST_CASE("doubles are written with 17 significant digits", "[io]") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("sha256 known answers", "[io]") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("csv tables keep their column order and width", "[io]") {
  CsvTable t({"a", "b"});
  t.row({"1", "2"});
  CHECK(t.str() == "a,b\n1,2\n");
  CHECK_THROWS_AS(t.row({"1"}), Error);
  PathRecord r;
  r.times = {0.0};
  r.mass = r.energy = r.h_norm = r.v_seminorm = r.vstar_norm = r.grad_mu_sq_cum = {1.0};
  CHECK_THAT(timeseries_table(r).str(),
             ContainsSubstring("t,mass,energy,h_norm,v_seminorm,vstar_norm,grad_mu_sq_cum,ito_residual\n"));
  CHECK(kernel_check_table({}).str() == "family,epsilon,n,normalization_residual,consistency_error,min_a\n");
}

TEST_CASE("atomic writes replace files and leave no temporaries", "[io]") {
  const auto dir = std::filesystem::temp_directory_path() / "snch_io_test";
  std::filesystem::remove_all(dir);
  atomic_write(dir / "a.csv", "first");
  atomic_write(dir / "a.csv", "second");
  CHECK(read_file(dir / "a.csv") == "second");
  CHECK_FALSE(std::filesystem::exists(dir / "a.csv.tmp"));

  OutputDir out(dir);
  out.write("b.csv", std::string("x,y\n"));
  out.write_manifest("test", RunConfig{}, {}, 0.5);
  const auto m = nlohmann::json::parse(read_file(dir / "manifest.json"));
  CHECK(m["files"]["b.csv"] == sha256_hex("x,y\n"));
  CHECK(m["config_sha256"] == sha256_hex(to_ini(RunConfig{})));
  CHECK(m["seed"] == RunConfig{}.noise.seed);
  std::filesystem::remove_all(dir);
}

TEST_CASE("mollifier normalization holds for every family and dimension", "[kernel-check]") {
  for (auto fam : {MollifierFamily::gaussian_r2, MollifierFamily::annular})
    for (int n : {1, 2, 3})
      for (double eps : {0.05, 0.1, 0.2}) CHECK(normalization_residual({fam, eps, n}) < 1e-6);
}

TEST_CASE("consistency error needs interior nodes", "[kernel-check]") {
  const auto g = GridSpec::line(64);
  const auto k = build_kernel({MollifierFamily::gaussian_r2, 0.1, 1}, g);
  CHECK(consistency_error(*k, 0.3) < consistency_error(*k, 0.0));
  CHECK_THROWS_AS(consistency_error(*k, 0.6), ValidationError);
}
