#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>

#include <openssl/evp.h>

#include "rlab/correlations.hpp"
#include "rlab/errors.hpp"
#include "rlab/exponents.hpp"
#include "rlab/format.hpp"
#include "rlab/inverse.hpp"
#include "rlab/measure.hpp"
#include "rlab/thermo.hpp"

namespace rlab::cli {

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error("HashError", "SHA-256 failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i)
    os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

void Run::write(const std::string& name, const std::string& content) {
  std::ofstream f(out / name, std::ios::binary);
  if (!f) throw Error("IoError", "cannot write " + (out / name).string());
  f << content;
  files.emplace_back(name, sha256_hex(content));
}

namespace {

int require_int(const Run& r, const std::string& key, std::int64_t fallback, std::int64_t lo,
                std::int64_t hi = 1'000'000'000) {
  const auto v = r.cfg.integer("experiment." + key, fallback);
  if (v < lo || v > hi) {
    throw ConfigError("experiment." + key + " = " + std::to_string(v) + " outside [" +
                      std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  return static_cast<int>(v);
}

double require_real(const Run& r, const std::string& key, double fallback, double lo, double hi) {
  const double v = r.cfg.real("experiment." + key, fallback);
  if (!(v > lo && v < hi))
    throw ConfigError("experiment." + key + " = " + fmt(v) + " outside (" + fmt(lo) + ", " +
                      fmt(hi) + ")");
  return v;
}

std::vector<int> int_list(const Run& r, const std::string& key, const IntList& fallback,
                          int lo) {
  std::vector<int> out;
  for (auto v : r.cfg.ints("experiment." + key, fallback)) {
    if (v < lo) throw ConfigError("experiment." + key + " entries must be >= " + std::to_string(lo));
    out.push_back(static_cast<int>(v));
  }
  if (out.empty()) throw ConfigError("experiment." + key + " is empty");
  return out;
}

Point default_point(const System& sys) {
  Point p(sys.dim());
  if (sys.variant() == Variant::PerturbedSkew) {
    p[0] = 1.0;
    p[2] = 0.1;
    p[3] = 0.3;
  } else {
    for (int i = 0; i < p.dim; ++i) p[i] = 0.1 + 0.2 * i;
  }
  return p;
}

Point point_from(const Run& r) {
  if (!r.cfg.has("experiment.point")) return default_point(r.sys);
  const auto v = r.cfg.reals("experiment.point", {});
  if (static_cast<int>(v.size()) != r.sys.dim()) {
    throw ConfigError("experiment.point needs " + std::to_string(r.sys.dim()) +
                      " coordinates, got " + std::to_string(v.size()));
  }
  Point p(r.sys.dim());
  for (int i = 0; i < p.dim; ++i) p[i] = v[i];
  return reduce(r.sys, p);
}

// Root of an inverse cloud. For PerturbedSkew the configured point is first
// pulled back along a random branch, so that the forward orbits used by the
// stable frame stay in U.
Point cloud_root(const Run& r) {
  const Point p = point_from(r);
  if (r.sys.variant() == Variant::Toral) return p;
  return backward_orbit(r.sys, p, 2 * FrameOptions{}.n_conv, r.seed).front();
}

TreeOptions tree_options(const Run& r) {
  TreeOptions t;
  t.threads = r.threads;
  if (r.cfg.has("experiment.v_margin")) t.v_margin = r.cfg.real("experiment.v_margin", 0.0);
  return t;
}

EmpiricalOptions empirical_options(const Run& r) {
  EmpiricalOptions e;
  e.tree = tree_options(r);
  e.include_level_n = r.cfg.flag("experiment.include_level_n", false);
  return e;
}

std::string point_text(const Point& p) {
  std::ostringstream os;
  for (int i = 0; i < p.dim; ++i) os << (i ? "," : "") << fmt(p[i]);
  return os.str();
}

TrigObservable cosine_from(const Run& r, const std::string& key) {
  const int cd = r.sys.chart_dim();
  IntList def(cd, 0);
  def[cd - r.sys.torus_dim()] = 1;  // first torus coordinate
  const auto k = r.cfg.ints("experiment." + key, def);
  if (static_cast<int>(k.size()) != cd) {
    throw ConfigError("experiment." + key + " needs " + std::to_string(cd) +
                      " integer frequencies");
  }
  IntVector kv(cd);
  for (int i = 0; i < cd; ++i) kv[i] = k[i];
  return TrigObservable::cosine(kv);
}

// ---------------------------------------------------------------------------

void cmd_system_info(Run& r) {
  const System& s = r.sys;
  r.field("system", s.describe());
  r.field("dimension", s.dim());
  r.field("degree", s.degree());
  r.field("lipschitz_bound", fmt(s.lipschitz_bound()));
  std::ostringstream csv;
  csv << "index,re,im,abs\n";
  const auto ev = s.linear_eigenvalues();
  for (std::size_t i = 0; i < ev.size(); ++i)
    csv << i << ',' << Num{ev[i].real()} << ',' << Num{ev[i].imag()} << ',' << Num{std::abs(ev[i])}
        << '\n';
  r.write("eigenvalues.csv", csv.str());
  if (s.variant() == Variant::Toral) {
    r.field("cosets", coset_representatives(s.matrix()).reps.size());
  }
  try {
    const Point x = cloud_root(r);
    const auto f = stable_frame(s, x);
    r.field("frame_point", point_text(x));
    r.field("stable_dimension", f.s);
    r.field("phi_s", fmt(stable_potential(s, x)));
  } catch (const WeakHyperbolicity& e) {
    r.field("stable_frame", std::string("WeakHyperbolicity: ") + e.what());
  }
}

void cmd_preimages(Run& r) {
  const Point x = point_from(r);
  const auto pre = preimages(r.sys, x);
  std::ostringstream csv;
  csv << "branch_label";
  for (int i = 0; i < r.sys.dim(); ++i) csv << ",coord_" << i;
  csv << '\n';
  double worst = 0.0;
  for (const auto& p : pre) {
    csv << p.label;
    for (int i = 0; i < r.sys.dim(); ++i) csv << ',' << Num{p.point[i]};
    csv << '\n';
    worst = std::max(worst, distance(r.sys, apply(r.sys, p.point), x));
  }
  r.write("preimages.csv", csv.str());
  r.field("point", point_text(x));
  r.field("count", pre.size());
  r.field("max_residual", fmt(worst));
}

void cmd_tree(Run& r) {
  const Point z = point_from(r);
  const int depth = require_int(r, "depth", 6, 0, 40);
  const auto tree = preimage_tree(r.sys, z, depth, tree_options(r));
  std::ostringstream csv;
  write_tree_csv(csv, r.sys, tree);
  r.write("tree.csv", csv.str());
  r.field("root", point_text(z));
  r.field("depth", depth);
  std::ostringstream sizes;
  const auto ls = tree.level_sizes();
  for (std::size_t i = 0; i < ls.size(); ++i) sizes << (i ? "," : "") << ls[i];
  r.field("level_sizes", sizes.str());
  r.field("pruned", tree.pruned);
}

void cmd_measure(Run& r) {
  const Point z = cloud_root(r);
  const int n = require_int(r, "depth", 8, 1, 40);
  const int K = require_int(r, "K", 3, 1, 64);
  const int bins = require_int(r, "bins", 32, 1, 4096);
  const auto cloud = build_inverse_empirical(r.sys, z, n, empirical_options(r));
  const auto rep = fourier_discrepancy(r.sys, cloud, nullptr, K, r.threads);
  std::ostringstream atoms, four, hist;
  write_atoms_csv(atoms, cloud);
  write_fourier_csv(four, rep);
  const auto h = histogram(r.sys, cloud, bins);
  write_histogram_csv(hist, h);
  r.write("atoms.csv", atoms.str());
  r.write("fourier.csv", four.str());
  r.write("histogram.csv", hist.str());
  if (r.svg) {
    std::ostringstream svg;
    write_histogram_svg(svg, h);
    r.write("histogram.svg", svg.str());
  }
  r.field("root", point_text(z));
  r.field("n", n);
  r.field("atoms", cloud.size());
  r.field("raw_atoms", cloud.raw_atom_count);
  r.field("K", K);
  r.field("discrepancy_vs_haar", fmt(rep.discrepancy));
}

void cmd_converge(Run& r) {
  const auto ns = int_list(r, "n_list", {2, 4, 6, 8, 10}, 1);
  const int num_z = require_int(r, "num_z", 20, 1);
  const int K = require_int(r, "K", 3, 1, 64);
  ConvergenceOptions opt;
  opt.empirical = empirical_options(r);
  opt.n_ref = require_int(r, "n_ref", 0, 0, 40);
  const auto rows = convergence_experiment(r.sys, ns, num_z, K, r.seed, opt);
  std::ostringstream csv;
  csv << "n,mean_discrepancy,max_discrepancy\n";
  for (const auto& row : rows)
    csv << row.n << ',' << Num{row.mean_discrepancy} << ',' << Num{row.max_discrepancy} << '\n';
  r.write("converge.csv", csv.str());
  bool monotone = true;
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i - 1].n >= 4 && rows[i].mean_discrepancy > rows[i - 1].mean_discrepancy)
      monotone = false;
  r.field("num_z", num_z);
  r.field("K", K);
  r.field("reference", r.sys.variant() == Variant::Toral ? "haar" : "deepest cloud");
  r.field("final_mean_discrepancy", fmt(rows.back().mean_discrepancy));
  r.field("monotone_beyond_4", monotone ? "true" : "false");
}

PressureEstimate run_pressure(Run& r) {
  const double eps = require_real(r, "epsilon_ball", 0.05, 0.0, 0.5);
  const auto ns = int_list(r, "n_range", {2, 3, 4, 5, 6, 7, 8}, 1);
  SeparatedSetOptions opt;
  opt.seed = r.seed;
  if (r.cfg.has("experiment.grid_step")) opt.grid_step = r.cfg.real("experiment.grid_step", 0.0);
  const double logd = std::log(static_cast<double>(r.sys.degree()));
  return pressure_estimate(r.sys, Potential::stable(-logd), eps, ns, opt, r.threads);
}

void cmd_pressure(Run& r) {
  const auto est = run_pressure(r);
  std::ostringstream csv;
  write_pressure_csv(csv, est);
  r.write("pressure.csv", csv.str());
  r.field("potential", "phi_s - log d");
  r.field("epsilon", fmt(est.epsilon));
  r.field("extrapolated_pressure", fmt(est.extrapolated));
  r.field("intercept", fmt(est.intercept));
}

LyapunovSpectrum run_lyapunov(Run& r) {
  LyapunovOptions opt;
  opt.burn_in = require_int(r, "burn_in", 200, 0);
  const int n = require_int(r, "n", 10000, 100);
  return lyapunov_spectrum(r.sys, point_from(r), n, r.seed, opt);
}

void cmd_lyapunov(Run& r) {
  const auto s = run_lyapunov(r);
  std::ostringstream csv;
  write_lyapunov_csv(csv, s);
  r.write("lyapunov.csv", csv.str());
  r.field("steps", s.steps);
  r.field("log_det_rate", fmt(s.log_det_rate));
  r.field("sum_negative", fmt(s.sum_negative()));
}

void cmd_pesin_check(Run& r) {
  const int depth = require_int(r, "depth", 10, 1, 40);
  const auto cloud = build_inverse_empirical(r.sys, cloud_root(r), depth, empirical_options(r));
  const auto spec = run_lyapunov(r);
  std::optional<PressureEstimate> pressure;
  if (r.cfg.has("experiment.n_range")) {
    // P(phi_s) rather than P(phi_s - log d).
    auto est = run_pressure(r);
    const double logd = std::log(static_cast<double>(r.sys.degree()));
    est.extrapolated += logd;
    for (double& v : est.P) v += logd;
    pressure = est;
  }
  const auto rep = pesin_check(r.sys, cloud, spec, pressure ? &*pressure : nullptr, r.threads);
  std::ostringstream lyap, csv;
  write_lyapunov_csv(lyap, spec);
  r.write("lyapunov.csv", lyap.str());
  csv << "quantity,value\n";
  csv << "integral_phi_s," << Num{rep.integral_phi_s} << '\n';
  csv << "sum_negative," << Num{rep.sum_negative} << '\n';
  csv << "log_d," << Num{rep.log_d} << '\n';
  csv << "entropy_estimate," << Num{rep.entropy_estimate} << '\n';
  csv << "residual_1," << Num{rep.residual_1} << '\n';
  if (rep.residual_2) {
    csv << "pressure_phi_s," << Num{*rep.pressure_cross_check} << '\n';
    csv << "residual_2," << Num{*rep.residual_2} << '\n';
  }
  r.write("pesin.csv", csv.str());
  r.field("depth", depth);
  r.field("integral_phi_s", fmt(rep.integral_phi_s));
  r.field("sum_negative", fmt(rep.sum_negative));
  r.field("residual_1", fmt(rep.residual_1));
  r.field("entropy_estimate", fmt(rep.entropy_estimate));
  r.field("log_d", fmt(rep.log_d));
  r.field("exceeds_log_d", rep.exceeds_log_d ? "true" : "false");
  if (rep.residual_2) {
    r.field("pressure_phi_s", fmt(*rep.pressure_cross_check));
    r.field("residual_2", fmt(*rep.residual_2));
  }
}

void cmd_jacobian_check(Run& r) {
  const int depth = require_int(r, "depth", 12, 1, 40);
  const int boxes = require_int(r, "num_boxes", 50, 1);
  const double side = require_real(r, "box_size", 0.05, 0.0, 0.5);
  const auto cloud = build_inverse_empirical(r.sys, cloud_root(r), depth, empirical_options(r));
  const auto rep = jacobian_check(r.sys, cloud, static_cast<std::size_t>(boxes), side, r.seed,
                                  r.threads);
  std::ostringstream csv;
  csv << "index,ratio\n";
  for (std::size_t i = 0; i < rep.ratios.size(); ++i) csv << i << ',' << Num{rep.ratios[i]} << '\n';
  r.write("jacobian.csv", csv.str());
  r.field("boxes", rep.boxes);
  r.field("empty", rep.empty);
  r.field("flagged", rep.flagged);
  r.field("median_ratio", fmt(rep.median));
  r.field("mean_ratio", fmt(rep.mean));
  r.field("degree", fmt(rep.d));
}

void cmd_correlations(Run& r) {
  const int n_max = require_int(r, "n_max", 10, 1, 1000);
  const auto phi = cosine_from(r, "phi");
  const auto psi = cosine_from(r, "psi");
  const std::string def = r.sys.variant() == Variant::Toral ? "haar" : "cloud";
  const std::string sampler = r.cfg.text("experiment.sampler", def);
  WeightedAtomCloud cloud;
  if (sampler == "haar") {
    const auto N = r.cfg.unsigned_integer("experiment.num_samples", 200000);
    if (N < 1) throw ConfigError("experiment.num_samples must be >= 1");
    cloud = haar_cloud(r.sys, N, r.seed);
  } else if (sampler == "cloud") {
    // The root is the start of a backward orbit, so the forward orbits of
    // all atoms stay in U for n_max steps beyond the tree.
    const int depth = require_int(r, "depth", 9, 1, 40);
    const Point z = backward_orbit(r.sys, point_from(r), n_max, r.seed).front();
    cloud = build_inverse_empirical(r.sys, z, depth, empirical_options(r));
  } else {
    throw ConfigError("experiment.sampler must be haar or cloud");
  }
  auto seq = correlation_sequence(r.sys, cloud, phi, psi, n_max, r.threads);
  seq.sampler = sampler;
  const auto fit = decay_rate_fit(seq);
  std::ostringstream csv;
  write_correlations_csv(csv, seq);
  r.write("correlations.csv", csv.str());
  r.field("sampler", sampler);
  r.field("samples", seq.samples);
  r.field("n_eff", fmt(seq.n_eff));
  r.field("noise_floor", fmt(seq.noise_floor));
  r.field("fit.status", to_string(fit.status));
  r.field("fit.rate", fmt(fit.rate));
  r.field("fit.slope", fmt(fit.slope));
  r.field("fit.prefactor", fmt(fit.prefactor));
  r.field("fit.goodness", fmt(fit.goodness));
  r.field("fit.points", fit.used.size());
  r.field("fit.all_below_floor", fit.all_below_floor ? "true" : "false");
}

void cmd_repellor_check(Run& r) {
  const double step = require_real(r, "grid_step", 0.05, 0.0, 1.0);
  const auto rep = check_repellor(r.sys, step, {}, r.threads);
  std::ostringstream csv;
  csv << "index,count\n";
  for (std::size_t i = 0; i < rep.counts.size(); ++i) csv << i << ',' << rep.counts[i] << '\n';
  r.write("repellor.csv", csv.str());
  r.field("grid_points", rep.grid_points);
  r.field("fraction", fmt(rep.fraction));
  r.field("min_separation", fmt(rep.min_separation));
  r.field("min_count", rep.min_count);
  r.field("max_count", rep.max_count);
  r.field("count_constant", rep.count_constant ? "true" : "false");
  r.field("failures", rep.failures);
  r.field("ok", rep.ok() ? "true" : "false");
  if (!rep.ok()) r.status = kExitDiagnostic;
}

std::vector<Point> centers(const Run& r) {
  const int k = require_int(r, "num_centers", 10, 1);
  std::vector<Point> out;
  if (r.cfg.has("experiment.point")) out.push_back(cloud_root(r));
  for (int i = static_cast<int>(out.size()); i < k; ++i) {
    CounterRng rng(r.seed, rng_purpose::kCenters, static_cast<std::uint64_t>(i));
    const Point p = sample_region(r.sys, rng, default_v_margin(r.sys));
    if (r.sys.variant() == Variant::Toral) {
      out.push_back(p);
    } else {
      out.push_back(backward_orbit(r.sys, p, 2 * FrameOptions{}.n_conv, r.seed + i).front());
    }
  }
  return out;
}

// Writes ratios.csv and estimates.csv and reports the per-center spread.
void write_ratio_tables(Run& r, const std::vector<int>& ns, const std::vector<Point>& ys,
                        const std::vector<std::vector<double>>& ratio,
                        const std::vector<std::vector<double>>& est,
                        const std::vector<std::vector<double>>& err, const char* est_name) {
  std::ostringstream rc, ec;
  rc << "n,y_index,ratio\n";
  ec << "n,y_index," << est_name << ",stderr\n";
  double worst = 1.0;
  for (std::size_t y = 0; y < ys.size(); ++y) {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (std::size_t i = 0; i < ns.size(); ++i) {
      rc << ns[i] << ',' << y << ',' << Num{ratio[y][i]} << '\n';
      ec << ns[i] << ',' << y << ',' << Num{est[y][i]} << ',' << Num{err[y][i]} << '\n';
      lo = std::min(lo, ratio[y][i]);
      hi = std::max(hi, ratio[y][i]);
    }
    const double span = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
    worst = std::max(worst, span);
    r.field("span.y" + std::to_string(y), fmt(span));
  }
  r.write("ratios.csv", rc.str());
  r.write("estimates.csv", ec.str());
  r.field("max_span", fmt(worst));
}

void cmd_tube_volume(Run& r) {
  const auto ns = int_list(r, "n_range", {1, 2, 3, 4, 5, 6}, 1);
  const double eps = require_real(r, "epsilon_ball", 0.05, 0.0, 0.5);
  const auto N = r.cfg.unsigned_integer("experiment.num_samples", 20000);
  const auto ys = centers(r);
  std::vector<std::vector<double>> ratio(ys.size()), est(ys.size()), err(ys.size());
  for (std::size_t y = 0; y < ys.size(); ++y)
    for (int n : ns) {
      const auto t = tubular_volume(r.sys, ys[y], n, eps, N, r.seed + y, r.threads);
      ratio[y].push_back(t.ratio);
      est[y].push_back(t.volume);
      err[y].push_back(t.stderr_);
    }
  r.field("epsilon", fmt(eps));
  r.field("samples_per_estimate", N);
  write_ratio_tables(r, ns, ys, ratio, est, err, "volume");
}

void cmd_ball_measure(Run& r) {
  const auto ns = int_list(r, "n_range", {2, 3, 4, 5, 6, 7, 8}, 1);
  const double eps = require_real(r, "epsilon_ball", 0.05, 0.0, 0.5);
  const auto N = r.cfg.unsigned_integer("experiment.num_samples", 200000);
  const auto ys = centers(r);
  std::vector<std::vector<double>> ratio(ys.size()), est(ys.size()), err(ys.size());
  std::size_t zero = 0;
  for (std::size_t y = 0; y < ys.size(); ++y)
    for (int n : ns) {
      const auto b = bowen_ball_measure(r.sys, BowenBall{ys[y], n, eps}, N, r.seed + y, r.threads);
      zero += b.zero_hits ? 1 : 0;
      ratio[y].push_back(b.ratio);
      est[y].push_back(b.estimate);
      err[y].push_back(b.stderr_);
    }
  r.field("epsilon", fmt(eps));
  r.field("samples_per_estimate", N);
  r.field("zero_hit_estimates", zero);
  write_ratio_tables(r, ns, ys, ratio, est, err, "measure");
}

}  // namespace

const std::vector<std::pair<std::string, Command>>& commands() {
  static const std::vector<std::pair<std::string, Command>> c = {
      {"system-info", cmd_system_info},       {"preimages", cmd_preimages},
      {"tree", cmd_tree},                     {"measure", cmd_measure},
      {"converge", cmd_converge},             {"pressure", cmd_pressure},
      {"lyapunov", cmd_lyapunov},             {"pesin-check", cmd_pesin_check},
      {"jacobian-check", cmd_jacobian_check}, {"correlations", cmd_correlations},
      {"repellor-check", cmd_repellor_check}, {"tube-volume", cmd_tube_volume},
      {"ball-measure", cmd_ball_measure},
  };
  return c;
}

}  // namespace rlab::cli
