#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "commands.hpp"
#include "config.hpp"
#include "rlab/errors.hpp"
#include "rlab/kernels.hpp"

#ifndef RLAB_VERSION
#define RLAB_VERSION "unknown"
#endif

namespace {

using namespace rlab;
using namespace rlab::cli;

struct Flags {
  std::string config;
  std::vector<std::string> sets;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  bool deterministic = false;
  bool svg = false;
};

void write_manifest(const Run& run, const std::string& command, double seconds,
                    const std::string& error) {
  const std::string ini = to_ini(run.cfg);
  nlohmann::ordered_json j;
  j["tool"] = "repellor-lab";
  j["version"] = RLAB_VERSION;
  j["command"] = command;
  j["config"] = ini;
  j["config_hash"] = sha256_hex(ini);
  j["seed"] = run.seed;
  j["threads"] = run.threads;
  j["deterministic"] = run.cfg.flag("run.deterministic", false);
  j["kernels"] = kernels::active().name;
  j["wall_clock_seconds"] = seconds;
  j["exit_code"] = run.status;
  if (!error.empty()) j["error"] = error;
  auto& files = j["files"];
  files = nlohmann::ordered_json::object();
  for (const auto& [name, hash] : run.files) files[name] = hash;
  std::ofstream f(run.out / "manifest.json");
  f << j.dump(2) << '\n';
}

int execute(const std::string& command, const Command& fn, const Flags& flags) {
  const auto t0 = std::chrono::steady_clock::now();
  Run run;
  try {
    if (!flags.config.empty()) run.cfg = load_config(flags.config);
    for (const auto& s : flags.sets) apply_override(run.cfg, s);
    if (flags.seed) run.cfg.values["run.seed"] = *flags.seed;
    if (flags.threads) run.cfg.values["run.threads"] = static_cast<std::int64_t>(*flags.threads);
    if (flags.deterministic) run.cfg.values["run.deterministic"] = true;
    if (!flags.out.empty()) run.cfg.values["run.output"] = flags.out;
    run.seed = run.cfg.unsigned_integer("run.seed", 1);
    const auto threads = run.cfg.integer("run.threads", 1);
    if (threads < 1 || threads > 1024) throw ConfigError("run.threads must lie in [1, 1024]");
    run.threads = static_cast<unsigned>(threads);
    run.svg = flags.svg;
    run.out = run.cfg.text("run.output", "out");
    std::filesystem::create_directories(run.out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.name() << ": " << e.what() << '\n';
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }

  std::string error;
  try {
    run.sys = make_system(run.cfg);
    fn(run);
  } catch (const Error& e) {
    error = e.name() + ": " + e.what();
  } catch (const std::exception& e) {
    error = e.what();
  }
  if (!error.empty()) {
    run.status = kExitError;
    run.field("error", error);
    std::cerr << "error: " << error << '\n';
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::ostringstream rep;
  rep << "command: " << command << '\n'
      << "seed: " << run.seed << '\n'
      << "config_hash: " << sha256_hex(to_ini(run.cfg)) << '\n'
      << run.report.str();
  try {
    std::ofstream(run.out / "report.txt") << rep.str();
    write_manifest(run, command, secs, error);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  std::cout << rep.str();
  return run.status;
}

std::string describe(const std::string& name) {
  static const std::map<std::string, std::string> text = {
      {"system-info", "matrix, degree, eigenvalues and stable dimension"},
      {"preimages", "all d preimages of a point"},
      {"tree", "preimage tree to a given depth"},
      {"measure", "empirical measure mu_n^z: atoms, Fourier coefficients, histogram"},
      {"converge", "Fourier discrepancy of mu_n^z over n"},
      {"pressure", "pressure of Phi^s - log d from separated sets"},
      {"lyapunov", "Lyapunov spectrum along a backward orbit"},
      {"pesin-check", "integral of Phi^s against the negative exponents"},
      {"jacobian-check", "mass ratios mu(f A) / mu(A) on random boxes"},
      {"correlations", "correlation sequence and decay fit"},
      {"repellor-check", "preimage count and separation over a grid"},
      {"tube-volume", "volume of f^n(B_n(y, eps)) against exp(S_n Phi^s)"},
      {"ball-measure", "Haar mass of Bowen balls against exp(S_n Phi^s - n log d)"},
  };
  const auto it = text.find(name);
  return it == text.end() ? std::string() : it->second;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerics laboratory for inverse SRB measures of hyperbolic endomorphisms",
               "repellor-lab"};
  app.set_version_flag("--version", RLAB_VERSION);
  app.require_subcommand(1);
  Flags flags;
  app.add_option("--config", flags.config, "INI config file")->check(CLI::ExistingFile);
  app.add_option("--set", flags.sets, "Override key=value (repeatable)")->expected(1)->take_all();
  app.add_option("--out", flags.out, "Output directory");
  app.add_option("--seed", flags.seed, "64-bit seed");
  app.add_option("--threads", flags.threads, "Worker threads")->check(CLI::Range(1u, 1024u));
  app.add_flag("--deterministic", flags.deterministic, "Record the deterministic flag");
  app.add_flag("--svg", flags.svg, "Also write SVG plots");

  std::string chosen;
  const Command* fn = nullptr;
  for (const auto& [name, cmd] : commands()) {
    auto* sub = app.add_subcommand(name, describe(name));
    sub->fallthrough();
    sub->callback([&chosen, &fn, n = name, c = &cmd] {
      chosen = n;
      fn = c;
    });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitError;
  }
  return execute(chosen, *fn, flags);
}
