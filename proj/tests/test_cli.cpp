#include <catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "snch/io.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::temp_directory_path() / "snch_cli_test";

int run(const std::string& args, const std::string& redirect = "> /dev/null 2>&1") {
  const std::string cmd = std::string(SNCH_CLI) + " " + args + " " + redirect;
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path write_config(const std::string& name, const std::string& text) {
  fs::create_directories(kWork);
  const fs::path p = kWork / name;
  snch::atomic_write(p, text);
  return p;
}

const char* kSmall =
    "[grid]\nnx = 64\n[kernel]\nepsilon = 0.2\n[noise]\nmodes = 4\nb0 = 0.4\n"
    "[solver]\ndt = 1e-3\nt_end = 0.02\n[initial]\namplitude = 0.2\n"
    "[experiment]\ndeltas = 1e-2, 1e-3\nlambdas = 1e-1, 1e-2\n[run]\npaths = 3\n";

}  // namespace

TEST_CASE("exit codes", "[cli]") {
  CHECK(run("selftest") == 0);
  CHECK(run("simulate --print-config") == 0);
  const auto bad_key = write_config("bad_key.ini", "[grid]\nnx = 64\nwidth = 3\n");
  CHECK(run("simulate -c " + bad_key.string() + " --out-dir " + (kWork / "o").string()) == 2);
  const auto unresolved = write_config("unresolved.ini", "[grid]\nnx = 16\n[kernel]\nepsilon = 0.05\n");
  CHECK(run("simulate -c " + unresolved.string() + " --out-dir " + (kWork / "o").string()) == 2);
  const auto blowup = write_config(
      "blowup.ini", "[grid]\nnx = 128\n[solver]\nmodel = local\nscheme = explicit_em\ndt = 1e-3\nt_end = 1\n");
  CHECK(run("simulate -c " + blowup.string() + " --out-dir " + (kWork / "o").string()) == 3);
  CHECK(run("no-such-command") != 0);
}

TEST_CASE("print-config output parses back to itself", "[cli]") {
  const auto cfg = write_config("small.ini", kSmall);
  const fs::path out = kWork / "printed.ini";
  REQUIRE(run("simulate --print-config -c " + cfg.string() + " --seed 77", "> " + out.string()) == 0);
  const auto printed = snch::read_file(out);
  const auto parsed = snch::parse_config(printed);
  CHECK(parsed.noise.seed == 77);
  CHECK(snch::to_ini(parsed) == printed);
}

TEST_CASE("outputs are byte-identical across worker counts", "[cli]") {
  const auto cfg = write_config("small.ini", kSmall);
  for (const std::string cmd : {"simulate", "cdep-study", "yosida-study"}) {
    const fs::path a = kWork / (cmd + "_w1"), b = kWork / (cmd + "_w3");
    REQUIRE(run(cmd + " -c " + cfg.string() + " --workers 1 --out-dir " + a.string()) == 0);
    REQUIRE(run(cmd + " -c " + cfg.string() + " --workers 3 --out-dir " + b.string()) == 0);
    int compared = 0;
    for (const auto& e : fs::directory_iterator(a)) {
      if (e.path().extension() != ".csv") continue;
      CHECK(snch::read_file(e.path()) == snch::read_file(b / e.path().filename()));
      ++compared;
    }
    CHECK(compared > 0);
    const auto ma = nlohmann::json::parse(snch::read_file(a / "manifest.json"));
    const auto mb = nlohmann::json::parse(snch::read_file(b / "manifest.json"));
    CHECK(ma["files"] == mb["files"]);
  }
}
