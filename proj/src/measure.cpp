#include "rlab/measure.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <ostream>

#include "rlab/errors.hpp"
#include "rlab/format.hpp"
#include "rlab/parallel.hpp"

namespace rlab {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

bool same_k(const IntVector& a, const IntVector& b) {
  return a.size() == b.size() && (a - b).cwiseAbs().sum() == 0;
}

}  // namespace

TrigObservable TrigObservable::constant(int dim, double c) {
  TrigObservable g(dim);
  g.add(IntVector::Zero(dim), c);
  return g;
}

TrigObservable TrigObservable::character(const IntVector& k) {
  TrigObservable g(static_cast<int>(k.size()));
  g.add(k, 1.0);
  return g;
}

TrigObservable TrigObservable::cosine(const IntVector& k, double amp) {
  TrigObservable g(static_cast<int>(k.size()));
  g.add(k, 0.5 * amp);
  g.add(-k, 0.5 * amp);
  return g;
}

TrigObservable TrigObservable::sine(const IntVector& k, double amp) {
  TrigObservable g(static_cast<int>(k.size()));
  g.add(k, std::complex<double>(0.0, -0.5 * amp));
  g.add(-k, std::complex<double>(0.0, 0.5 * amp));
  return g;
}

void TrigObservable::add(const IntVector& k, std::complex<double> c) {
  if (k.size() != dim_) throw InvalidArgument("frequency has the wrong dimension");
  for (auto& t : terms_)
    if (same_k(t.k, k)) {
      t.c += c;
      return;
    }
  terms_.push_back({k, c});
}

std::complex<double> TrigObservable::operator()(std::span<const double> x) const {
  std::complex<double> acc = 0.0;
  for (const auto& t : terms_) {
    double phase = 0.0;
    for (int i = 0; i < dim_; ++i) phase += static_cast<double>(t.k[i]) * x[i];
    acc += t.c * std::polar(1.0, kTwoPi * phase);
  }
  return acc;
}

bool TrigObservable::is_real() const {
  for (const auto& t : terms_) {
    const IntVector mk = -t.k;
    bool found = false;
    for (const auto& u : terms_)
      if (same_k(u.k, mk)) {
        found = std::abs(u.c - std::conj(t.c)) <= 1e-14 * (1.0 + std::abs(t.c));
        break;
      }
    if (!found && std::abs(t.c) != 0.0) return false;
  }
  return true;
}

double TrigObservable::sup_bound() const {
  double s = 0.0;
  for (const auto& t : terms_) s += std::abs(t.c);
  return s;
}

TrigObservable TrigObservable::scaled(std::complex<double> a) const {
  TrigObservable g = *this;
  for (auto& t : g.terms_) t.c *= a;
  return g;
}

TrigObservable operator+(const TrigObservable& a, const TrigObservable& b) {
  if (a.dim() != b.dim()) throw InvalidArgument("observables live on different charts");
  TrigObservable g = a;
  for (const auto& t : b.terms()) g.add(t.k, t.c);
  return g;
}

void WeightedAtomCloud::add(const Point& p, double w) {
  points_.push_back(p);
  weights_.push_back(w);
}

void WeightedAtomCloud::reserve(std::size_t n) {
  points_.reserve(n);
  weights_.reserve(n);
}

double WeightedAtomCloud::total_weight() const {
  return std::accumulate(weights_.begin(), weights_.end(), 0.0);
}

void WeightedAtomCloud::normalize() {
  const double t = total_weight();
  if (!(t > 0.0)) throw InsufficientMass("cloud has no mass");
  for (double& w : weights_) w /= t;
}

void WeightedAtomCloud::merge(const System& sys, double tol) {
  std::vector<std::size_t> idx(points_.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    const auto& pa = points_[a].x;
    const auto& pb = points_[b].x;
    for (int i = 0; i < dim_; ++i)
      if (pa[i] != pb[i]) return pa[i] < pb[i];
    return a < b;
  });
  const int off = sys.torus_offset();
  std::vector<Point> pts;
  std::vector<double> ws;
  for (std::size_t j : idx) {
    if (!pts.empty()) {
      const Point& r = pts.back();
      bool close = true;
      for (int i = 0; i < dim_ && close; ++i) {
        const double d = points_[j][i] - r[i];
        close = std::abs(i >= off ? wrap_diff(d) : d) <= tol;
      }
      if (close) {
        ws.back() += weights_[j];
        continue;
      }
    }
    pts.push_back(points_[j]);
    ws.push_back(weights_[j]);
  }
  points_ = std::move(pts);
  weights_ = std::move(ws);
}

std::vector<int> empirical_levels(int n, bool include_level_n) {
  std::vector<int> out;
  for (int j = include_level_n ? 1 : 0; j <= (include_level_n ? n : n - 1); ++j) out.push_back(j);
  return out;
}

WeightedAtomCloud build_inverse_empirical(const System& sys, const Point& z, int n,
                                          const EmpiricalOptions& opt) {
  if (n < 1) throw InvalidArgument("n must be >= 1");
  const std::vector<int> levels = empirical_levels(n, opt.include_level_n);
  const int depth = levels.back();
  WeightedAtomCloud cloud(sys.dim());
  std::size_t leaves = 0;
  const double share = 1.0 / static_cast<double>(n);
  for_each_level(sys, z, depth, opt.tree, [&](int l, const std::vector<TreeNode>& nodes) {
    if (l == depth) leaves = nodes.size();
    if (l < levels.front()) return;
    double mass = 0.0;
    for (const auto& nd : nodes) mass += nd.weight;
    if (!(mass > 0.0)) throw InsufficientMass("tree level has no surviving nodes");
    for (const auto& nd : nodes) cloud.add(nd.point, share * nd.weight / mass);
  });
  // f^i y for i = 1..n over the d^n leaves y of the depth-n tree.
  const double d = static_cast<double>(sys.degree());
  cloud.raw_atom_count = static_cast<std::uint64_t>(n) *
                         (opt.include_level_n ? leaves
                                              : static_cast<std::uint64_t>(leaves * d));
  if (opt.merge) cloud.merge(sys);
  return cloud;
}

Point sample_region(const System& sys, CounterRng& rng, double half_width) {
  if (sys.variant() == Variant::Toral) {
    Point p(sys.dim());
    for (int i = 0; i < sys.dim(); ++i) p[i] = rng.uniform();
    return p;
  }
  const double lo = 1.0 - half_width, hi = 1.0 + half_width;
  const double r = std::sqrt(rng.uniform(lo * lo, hi * hi));
  const double t = kTwoPi * rng.uniform();
  const double u = rng.uniform(), v = rng.uniform();
  return Point{r * std::cos(t), r * std::sin(t), u, v};
}

WeightedAtomCloud haar_cloud(const System& sys, std::size_t n, std::uint64_t seed) {
  WeightedAtomCloud cloud(sys.dim());
  cloud.reserve(n);
  const double w = 1.0 / static_cast<double>(n);
  const double hw = sys.variant() == Variant::Toral ? 0.0 : sys.delta();
  for (std::size_t i = 0; i < n; ++i) {
    CounterRng rng(seed, rng_purpose::kPoints, i);
    cloud.add(sample_region(sys, rng, hw), w);
  }
  cloud.raw_atom_count = n;
  return cloud;
}

std::complex<double> integrate(const System& sys, const WeightedAtomCloud& cloud,
                               const TrigObservable& g) {
  if (g.dim() != sys.chart_dim()) throw InvalidArgument("observable does not match the chart");
  std::complex<double> acc = 0.0;
  std::array<double, kMaxDim> c{};
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    chart(sys, cloud.point(i), c);
    acc += cloud.weight(i) * g(std::span<const double>(c.data(), sys.chart_dim()));
  }
  return acc;
}

std::vector<IntVector> frequency_box(int dim, int K) {
  std::vector<IntVector> out;
  IntVector k = IntVector::Constant(dim, -K);
  for (;;) {
    out.push_back(k);
    int i = dim - 1;
    while (i >= 0 && k[i] == K) {
      k[i] = -K;
      --i;
    }
    if (i < 0) break;
    ++k[i];
  }
  return out;
}

std::vector<std::complex<double>> fourier_coefficients(const System& sys,
                                                       std::span<const Point> points,
                                                       std::span<const double> weights,
                                                       const std::vector<IntVector>& ks,
                                                       unsigned threads,
                                                       const kernels::KernelTable& kt) {
  const int cd = sys.chart_dim();
  int K = 0;
  for (const auto& k : ks) {
    if (k.size() != cd) throw InvalidArgument("frequency does not match the chart");
    K = std::max<int>(K, static_cast<int>(k.cwiseAbs().maxCoeff()));
  }
  constexpr std::size_t kChunk = 2048;
  const std::size_t n_chunks = Executor::chunk_count(points.size(), kChunk);
  std::vector<std::vector<std::complex<double>>> partial(n_chunks);

  Executor(threads).for_chunks(points.size(), kChunk, [&](std::size_t c, std::size_t b,
                                                          std::size_t e) {
    const std::size_t L = e - b;
    // pw[d][j] holds exp(-2 pi i j x_d) for the chunk, j = 0..K.
    std::vector<std::vector<double>> pre(cd * (K + 1), std::vector<double>(L));
    std::vector<std::vector<double>> pim(cd * (K + 1), std::vector<double>(L));
    std::array<double, kMaxDim> x{};
    for (std::size_t i = 0; i < L; ++i) {
      chart(sys, points[b + i], x);
      for (int d = 0; d < cd; ++d) {
        pre[d * (K + 1)][i] = 1.0;
        pim[d * (K + 1)][i] = 0.0;
        if (K >= 1) {
          pre[d * (K + 1) + 1][i] = std::cos(kTwoPi * x[d]);
          pim[d * (K + 1) + 1][i] = -std::sin(kTwoPi * x[d]);
        }
      }
    }
    for (int d = 0; d < cd; ++d)
      for (int j = 2; j <= K; ++j) {
        const int t = d * (K + 1);
        kt.complex_mul(pre[t + j - 1].data(), pim[t + j - 1].data(), pre[t + 1].data(),
                       pim[t + 1].data(), false, pre[t + j].data(), pim[t + j].data(), L);
      }
    std::vector<double> are(L), aim(L), bre(L), bim(L);
    auto& out = partial[c];
    out.resize(ks.size());
    for (std::size_t q = 0; q < ks.size(); ++q) {
      const IntVector& k = ks[q];
      bool started = false;
      for (int d = 0; d < cd; ++d) {
        if (k[d] == 0) continue;
        const int t = d * (K + 1) + static_cast<int>(std::abs(k[d]));
        const bool neg = k[d] < 0;
        if (!started) {
          std::copy(pre[t].begin(), pre[t].end(), are.begin());
          if (neg)
            for (std::size_t i = 0; i < L; ++i) aim[i] = -pim[t][i];
          else
            std::copy(pim[t].begin(), pim[t].end(), aim.begin());
          started = true;
        } else {
          kt.complex_mul(are.data(), aim.data(), pre[t].data(), pim[t].data(), neg, bre.data(),
                         bim.data(), L);
          std::swap(are, bre);
          std::swap(aim, bim);
        }
      }
      double sr, si;
      if (!started) {
        sr = 0.0;
        for (std::size_t i = 0; i < L; ++i) sr += weights[b + i];
        si = 0.0;
      } else {
        kt.weighted_sum2(weights.data() + b, are.data(), aim.data(), L, &sr, &si);
      }
      out[q] = {sr, si};
    }
  });

  std::vector<std::complex<double>> total(ks.size(), 0.0);
  for (const auto& p : partial)
    for (std::size_t q = 0; q < ks.size(); ++q) total[q] += p[q];
  return total;
}

std::vector<std::complex<double>> fourier_coefficients(const System& sys,
                                                       const WeightedAtomCloud& cloud,
                                                       const std::vector<IntVector>& ks,
                                                       unsigned threads,
                                                       const kernels::KernelTable& kt) {
  return fourier_coefficients(sys, cloud.points(), cloud.weights(), ks, threads, kt);
}

std::complex<double> fourier_coefficient(const System& sys, const WeightedAtomCloud& cloud,
                                         const IntVector& k) {
  return fourier_coefficients(sys, cloud, {k})[0];
}

double discrepancy_from(const std::vector<IntVector>& ks,
                        const std::vector<std::complex<double>>& a,
                        const std::vector<std::complex<double>>* b) {
  double worst = 0.0;
  for (std::size_t q = 0; q < ks.size(); ++q) {
    if (ks[q].cwiseAbs().maxCoeff() == 0) continue;
    const std::complex<double> ref = b ? (*b)[q] : 0.0;
    worst = std::max(worst, std::abs(a[q] - ref));
  }
  return worst;
}

FourierReport fourier_discrepancy(const System& sys, const WeightedAtomCloud& cloud,
                                  const WeightedAtomCloud* reference, int K, unsigned threads) {
  if (K < 1) throw InvalidArgument("K must be >= 1");
  FourierReport rep;
  rep.ks = frequency_box(sys.chart_dim(), K);
  rep.coefficients = fourier_coefficients(sys, cloud, rep.ks, threads);
  std::vector<std::complex<double>> ref;
  if (reference) ref = fourier_coefficients(sys, *reference, rep.ks, threads);
  rep.worst_k = IntVector::Zero(sys.chart_dim());
  for (std::size_t q = 0; q < rep.ks.size(); ++q) {
    if (rep.ks[q].cwiseAbs().maxCoeff() == 0) continue;
    const double d = std::abs(rep.coefficients[q] - (reference ? ref[q] : 0.0));
    if (d > rep.discrepancy) {
      rep.discrepancy = d;
      rep.worst_k = rep.ks[q];
    }
  }
  return rep;
}

std::vector<ConvergenceRow> convergence_experiment(const System& sys,
                                                   const std::vector<int>& n_list, int num_z,
                                                   int K, std::uint64_t seed,
                                                   const ConvergenceOptions& opt) {
  if (K < 1) throw InvalidArgument("K must be >= 1");
  if (num_z <= 0 || n_list.empty()) return {};
  for (int n : n_list)
    if (n < 1) throw InvalidArgument("every n must be >= 1");
  const bool self_ref = sys.variant() != Variant::Toral;
  const int n_max = *std::max_element(n_list.begin(), n_list.end());
  const int n_ref = self_ref ? (opt.n_ref > 0 ? opt.n_ref : n_max) : 0;
  const bool lvl_n = opt.empirical.include_level_n;
  int depth = lvl_n ? n_max : n_max - 1;
  if (self_ref) depth = std::max(depth, lvl_n ? n_ref : n_ref - 1);

  const auto ks = frequency_box(sys.chart_dim(), K);
  const double margin = std::isnan(opt.empirical.tree.v_margin) ? default_v_margin(sys)
                                                                  : opt.empirical.tree.v_margin;
  std::vector<ConvergenceRow> rows(n_list.size());
  for (std::size_t r = 0; r < rows.size(); ++r) rows[r].n = n_list[r];

  for (int zi = 0; zi < num_z; ++zi) {
    CounterRng rng(seed, rng_purpose::kSampleRoot, static_cast<std::uint64_t>(zi));
    const Point z = sample_region(sys, rng, sys.variant() == Variant::Toral ? 0.0 : margin);
    // Per-level coefficient tables of the normalized level measures.
    std::vector<std::vector<std::complex<double>>> F(depth + 1);
    for_each_level(sys, z, depth, opt.empirical.tree,
                   [&](int l, const std::vector<TreeNode>& nodes) {
                     std::vector<Point> pts(nodes.size());
                     std::vector<double> ws(nodes.size());
                     double mass = 0.0;
                     for (const auto& nd : nodes) mass += nd.weight;
                     if (!(mass > 0.0)) throw InsufficientMass("tree level has no nodes");
                     for (std::size_t i = 0; i < nodes.size(); ++i) {
                       pts[i] = nodes[i].point;
                       ws[i] = nodes[i].weight / mass;
                     }
                     F[l] = fourier_coefficients(sys, pts, ws, ks, opt.empirical.tree.threads);
                   });
    auto mix = [&](int n) {
      std::vector<std::complex<double>> c(ks.size(), 0.0);
      for (int j : empirical_levels(n, lvl_n))
        for (std::size_t q = 0; q < ks.size(); ++q) c[q] += F[j][q];
      for (auto& v : c) v /= static_cast<double>(n);
      return c;
    };
    std::vector<std::complex<double>> ref;
    if (self_ref) ref = mix(n_ref);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const double d = discrepancy_from(ks, mix(rows[r].n), self_ref ? &ref : nullptr);
      rows[r].mean_discrepancy += d / num_z;
      rows[r].max_discrepancy = std::max(rows[r].max_discrepancy, d);
    }
  }
  return rows;
}

Histogram histogram(const System& sys, const WeightedAtomCloud& cloud, int bins_per_axis) {
  if (bins_per_axis < 1) throw InvalidArgument("bins_per_axis must be >= 1");
  Histogram h;
  h.dims = sys.torus_dim();
  h.bins = bins_per_axis;
  std::size_t cells = 1;
  for (int i = 0; i < h.dims; ++i) cells *= static_cast<std::size_t>(bins_per_axis);
  h.mass.assign(cells, 0.0);
  const int off = sys.torus_offset();
  for (std::size_t a = 0; a < cloud.size(); ++a) {
    std::size_t idx = 0;
    for (int i = 0; i < h.dims; ++i) {
      int b = static_cast<int>(std::floor(mod1(cloud.point(a)[off + i]) * bins_per_axis));
      b = std::clamp(b, 0, bins_per_axis - 1);
      idx = idx * static_cast<std::size_t>(bins_per_axis) + static_cast<std::size_t>(b);
    }
    h.mass[idx] += cloud.weight(a);
  }
  return h;
}

void write_atoms_csv(std::ostream& os, const WeightedAtomCloud& cloud) {
  for (int i = 0; i < cloud.dim(); ++i) os << "coord_" << i << ',';
  os << "weight\n";
  for (std::size_t a = 0; a < cloud.size(); ++a) {
    for (int i = 0; i < cloud.dim(); ++i) os << Num{cloud.point(a)[i]} << ',';
    os << Num{cloud.weight(a)} << '\n';
  }
}

void write_fourier_csv(std::ostream& os, const FourierReport& r) {
  const int dim = r.ks.empty() ? 0 : static_cast<int>(r.ks.front().size());
  for (int i = 0; i < dim; ++i) os << "k_" << i << ',';
  os << "re,im,abs\n";
  for (std::size_t j = 0; j < r.ks.size(); ++j) {
    for (int i = 0; i < dim; ++i) os << r.ks[j][i] << ',';
    os << Num{r.coefficients[j].real()} << ',' << Num{r.coefficients[j].imag()} << ','
       << Num{std::abs(r.coefficients[j])} << '\n';
  }
}

void write_histogram_csv(std::ostream& os, const Histogram& h) {
  for (int i = 0; i < h.dims; ++i) os << "bin_" << i << ',';
  os << "mass\n";
  for (std::size_t c = 0; c < h.mass.size(); ++c) {
    std::size_t rem = c;
    std::vector<std::size_t> b(h.dims);
    for (int i = h.dims - 1; i >= 0; --i) {
      b[i] = rem % h.bins;
      rem /= h.bins;
    }
    for (int i = 0; i < h.dims; ++i) os << b[i] << ',';
    os << Num{h.mass[c]} << '\n';
  }
}

void write_histogram_svg(std::ostream& os, const Histogram& h) {
  // Marginal on the first two torus coordinates (or a bar chart in 1D).
  const int nb = h.bins;
  const int ny = h.dims >= 2 ? nb : 1;
  std::vector<double> grid(static_cast<std::size_t>(nb) * ny, 0.0);
  std::size_t inner = 1;
  for (int i = 2; i < h.dims; ++i) inner *= nb;
  for (std::size_t c = 0; c < h.mass.size(); ++c) {
    const std::size_t outer = c / inner;
    const std::size_t bx = h.dims >= 2 ? outer / nb : outer;
    const std::size_t by = h.dims >= 2 ? outer % nb : 0;
    grid[bx * ny + by] += h.mass[c];
  }
  const double peak = std::max(1e-300, *std::max_element(grid.begin(), grid.end()));
  const int cell = std::max(2, 400 / nb);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << cell * nb << "\" height=\""
     << (h.dims >= 2 ? cell * nb : 200) << "\">\n";
  for (int x = 0; x < nb; ++x)
    for (int y = 0; y < ny; ++y) {
      const double v = grid[static_cast<std::size_t>(x) * ny + y] / peak;
      if (h.dims >= 2) {
        const int shade = static_cast<int>(255.0 * (1.0 - v));
        os << "<rect x=\"" << x * cell << "\" y=\"" << (nb - 1 - y) * cell << "\" width=\""
           << cell << "\" height=\"" << cell << "\" fill=\"rgb(" << shade << ',' << shade
           << ",255)\"/>\n";
      } else {
        const int hgt = static_cast<int>(200.0 * v);
        os << "<rect x=\"" << x * cell << "\" y=\"" << 200 - hgt << "\" width=\"" << cell
           << "\" height=\"" << hgt << "\" fill=\"steelblue\"/>\n";
      }
    }
  os << "</svg>\n";
}

}  // namespace rlab
