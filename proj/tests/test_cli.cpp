#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "../tools/config.hpp"
#include "rlab/errors.hpp"

using namespace rlab;
using namespace rlab::cli;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("rlab_cli_test_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

int run(const std::string& args) {
  const std::string cmd = std::string(RLAB_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::string message_of(const std::string& text) {
  try {
    parse_config(text, "t.cfg");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("schema keys are unique across sections") {
  std::set<std::string> seen;
  for (const auto& k : schema()) CHECK(seen.insert(k.key).second);
}

TEST_CASE("unknown keys are reported with their line") {
  const std::string m = message_of("[system]\npreset = doubling\n\n[experiment]\nnn = 3\n");
  CHECK(m.find("t.cfg:5") != std::string::npos);
  CHECK(m.find("nn") != std::string::npos);
  CHECK(message_of("[sys]\npreset = doubling\n").find("t.cfg:2") != std::string::npos);
  CHECK_FALSE(message_of("[experiment]\nn = abc\n").empty());
  CHECK_FALSE(message_of("[experiment]\nn_range = 5..2\n").empty());
}

TEST_CASE("typed values, ranges and matrices") {
  const auto c = parse_config(
      "[system]\nmatrix = 2, 1 ; 2,2\n[experiment]\nn = 12\nepsilon_ball = 0.05\nn_range = 2..5\n"
      "n_list = 6,8,10\ninclude_level_n = true\n",
      "t");
  CHECK(c.text("system.matrix", "") == "2,1;2,2");
  CHECK(c.integer("experiment.n", 0) == 12);
  CHECK(c.real("experiment.epsilon_ball", 0) == 0.05);
  CHECK(c.ints("experiment.n_range", {}) == IntList{2, 3, 4, 5});
  CHECK(c.ints("experiment.n_list", {}) == IntList{6, 8, 10});
  CHECK(c.flag("experiment.include_level_n", false));
  CHECK(c.integer("experiment.depth", 7) == 7);
  const System s = make_system(c);
  CHECK(s.degree() == 2);
  CHECK(s.matrix()(0, 1) == 1);
}

TEST_CASE("canonical text round-trips") {
  for (const char* name : {"doubling", "mat2122", "mat2223", "example3", "example4"}) {
    const auto c = load_config(std::string(RLAB_CONFIG_DIR) + "/" + name + ".cfg");
    CHECK(parse_config(to_ini(c), "round") == c);
    CHECK(to_ini(parse_config(to_ini(c), "round")) == to_ini(c));
    CHECK_NOTHROW(make_system(c));
  }
  ExperimentConfig c;
  set_value(c, "system.epsilon", "0.1");
  CHECK(parse_config(to_ini(c), "r").real("system.epsilon", 0) == 0.1);
  set_value(c, "system.epsilon", "0.30000000000000004");
  CHECK(parse_config(to_ini(c), "r") == c);
}

TEST_CASE("overrides accept bare and qualified keys") {
  auto c = parse_config("[system]\npreset = mat2122\n", "t");
  apply_override(c, "n=40");
  apply_override(c, "run.seed=9");
  apply_override(c, "system.preset = mat2223");
  CHECK(c.integer("experiment.n", 0) == 40);
  CHECK(c.unsigned_integer("run.seed", 0) == 9);
  CHECK(c.text("system.preset", "") == "mat2223");
  CHECK_THROWS_AS(apply_override(c, "bogus=1"), ConfigError);
  CHECK_THROWS_AS(apply_override(c, "n"), ConfigError);
  CHECK_THROWS_AS(apply_override(c, "n=1.5"), ConfigError);
}

TEST_CASE("systems are built from presets and refused when not hyperbolic") {
  auto sys = [](const std::string& t) { return make_system(parse_config(t, "t")); };
  CHECK(sys("[system]\npreset = example3\n").degree() == 4);
  CHECK(sys("[system]\npreset = example4\nepsilon = 0.02\n").variant() == Variant::PerturbedSkew);
  CHECK(sys("[system]\nmatrix = 3\n").degree() == 3);
  CHECK_THROWS_AS(sys("[system]\nmatrix = 2,0;0,1\n"), NotHyperbolic);
  CHECK_THROWS_AS(sys("[system]\npreset = nope\n"), ConfigError);
  CHECK_THROWS_AS(sys("[system]\nmatrix = 1,2;3\n"), ConfigError);
  CHECK_THROWS_AS(sys("[experiment]\nn = 3\n"), ConfigError);
}

TEST_CASE("binary: doubling preimages of 0") {
  const fs::path out = scratch("pre");
  CHECK(run("preimages --config " RLAB_CONFIG_DIR "/doubling.cfg --set point=0 --out " + out.string()) == 0);
  const std::string csv = read_file(out / "preimages.csv");
  std::istringstream in(csv);
  std::string header, r0, r1, extra;
  std::getline(in, header);
  std::getline(in, r0);
  std::getline(in, r1);
  CHECK(header == "branch_label,coord_0");
  CHECK(r0 == "0,0");
  CHECK(r1 == "1,0.5");
  CHECK_FALSE(std::getline(in, extra));
  CHECK(fs::exists(out / "manifest.json"));
  CHECK(fs::exists(out / "report.txt"));
}

TEST_CASE("binary: errors exit with status 1") {
  const fs::path dir = scratch("bad");
  std::ofstream(dir / "bad.cfg") << "[system]\npreset = doubling\nfoo = 1\n";
  CHECK(run("tree --config " + (dir / "bad.cfg").string() + " --out " + (dir / "o").string()) == 1);
  CHECK(run("tree --config " + (dir / "missing.cfg").string()) == 1);
  CHECK(run("lyapunov --config " RLAB_CONFIG_DIR "/doubling.cfg --set 'matrix=2,0;0,1' --out " +
            (dir / "o").string()) == 1);
  CHECK(run("--version") == 0);
}

TEST_CASE("binary: thread count does not change the outputs") {
  const fs::path a = scratch("t1"), b = scratch("t4");
  const std::string base = "measure --config " RLAB_CONFIG_DIR "/mat2122.cfg --set depth=6 --seed 3 ";
  REQUIRE(run(base + "--threads 1 --out " + a.string()) == 0);
  REQUIRE(run(base + "--threads 4 --out " + b.string()) == 0);
  for (const char* f : {"atoms.csv", "fourier.csv", "histogram.csv"})
    CHECK(read_file(a / f) == read_file(b / f));
}
