#include "rlab/inverse.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <ostream>
#include <sstream>

#include "rlab/errors.hpp"
#include "rlab/format.hpp"
#include "rlab/lattice.hpp"
#include "rlab/rng.hpp"

namespace rlab {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_collisions(const System& sys, const std::vector<Preimage>& pts, double min_sep) {
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      const double d = distance(sys, pts[i].point, pts[j].point);
      if (d < min_sep) {
        std::ostringstream os;
        os << "branches " << pts[i].label << " and " << pts[j].label << " are " << d
           << " apart (minimum " << min_sep << ")";
        throw BranchCollision(os.str());
      }
    }
}

}  // namespace

CosetSet coset_representatives(const IntMatrix& A) {
  const int m = static_cast<int>(A.rows());
  const long long det = int_det(A);
  if (det == 0) throw DegenerateMatrix("det A = 0");
  const IntMatrix adj = adjugate(A);

  IntVector lo(m), hi(m);
  for (int i = 0; i < m; ++i) {
    lo[i] = hi[i] = 0;
    for (int j = 0; j < m; ++j) {
      lo[i] += std::min<long long>(0, A(i, j));
      hi[i] += std::max<long long>(0, A(i, j));
    }
  }

  CosetSet out;
  IntVector k = lo;
  for (;;) {
    const IntVector t = adj * k;  // det * A^{-1} k
    bool inside = true;
    for (int i = 0; i < m && inside; ++i)
      inside = det > 0 ? (t[i] >= 0 && t[i] < det) : (t[i] <= 0 && t[i] > det);
    if (inside) out.reps.push_back(k);
    int i = m - 1;
    while (i >= 0 && k[i] == hi[i]) {
      k[i] = lo[i];
      --i;
    }
    if (i < 0) break;
    ++k[i];
  }
  return out;
}

InverseBranches::InverseBranches(const System& sys, NewtonConfig cfg)
    : sys_(sys), cfg_(cfg), cosets_(coset_representatives(sys.matrix())) {
  if (!(cfg_.tol > 0.0)) throw InvalidArgument("newton tol must be > 0");
  if (cfg_.max_iters < 1) throw InvalidArgument("newton max_iters must be >= 1");
  for (const auto& k : cosets_.reps) shifts_.push_back(sys_.matrix_inverse() * k.cast<double>());
}

Point InverseBranches::toral_branch(const Point& x, std::size_t coset) const {
  const int m = sys_.torus_dim();
  const Mat& Ai = sys_.matrix_inverse();
  const Vec& s = shifts_[coset];
  Point out(m);
  for (int i = 0; i < m; ++i) {
    double acc = 0.0;
    for (int j = 0; j < m; ++j) acc += Ai(i, j) * x[j];
    out[i] = mod1(acc + s[i]);
  }
  return out;
}

void InverseBranches::skew_torus_branch(double u1, double u2, std::size_t coset, double& v1,
                                        double& v2) const {
  const Mat& A = sys_.matrix_real();
  const Mat& Ai = sys_.matrix_inverse();
  const double eps = sys_.epsilon();
  const double t1 = u1 + static_cast<double>(cosets_.reps[coset][0]);
  const double t2 = u2 + static_cast<double>(cosets_.reps[coset][1]);
  v1 = Ai(0, 0) * t1 + Ai(0, 1) * t2;
  v2 = Ai(1, 0) * t1 + Ai(1, 1) * t2;
  if (eps == 0.0) return;
  for (int it = 0; it < cfg_.max_iters; ++it) {
    const double s = std::sin(kTwoPi * (v1 + v2));
    const double c4 = std::cos(2.0 * kTwoPi * v1);
    const double F1 = A(0, 0) * v1 + A(0, 1) * v2 + eps * s - t1;
    const double F2 = A(1, 0) * v1 + A(1, 1) * v2 + eps * c4 * c4 - t2;
    if (std::max(std::abs(F1), std::abs(F2)) <= cfg_.tol) return;
    const double cs = std::cos(kTwoPi * (v1 + v2));
    const double j11 = A(0, 0) + eps * kTwoPi * cs;
    const double j12 = A(0, 1) + eps * kTwoPi * cs;
    const double j21 = A(1, 0) - eps * 2.0 * kTwoPi * std::sin(4.0 * kTwoPi * v1);
    const double j22 = A(1, 1);
    const double det = j11 * j22 - j12 * j21;
    if (!std::isfinite(det) || det == 0.0) break;
    v1 -= (j22 * F1 - j12 * F2) / det;
    v2 -= (-j21 * F1 + j11 * F2) / det;
    if (!std::isfinite(v1) || !std::isfinite(v2)) break;
  }
  const double s = std::sin(kTwoPi * (v1 + v2));
  const double c4 = std::cos(2.0 * kTwoPi * v1);
  const double r = std::max(std::abs(A(0, 0) * v1 + A(0, 1) * v2 + eps * s - t1),
                            std::abs(A(1, 0) * v1 + A(1, 1) * v2 + eps * c4 * c4 - t2));
  if (r <= cfg_.tol) return;
  std::ostringstream os;
  os << "torus branch " << coset << " did not reach tol " << cfg_.tol << " within "
     << cfg_.max_iters << " iterations (residual " << r << ")";
  throw NewtonDivergence(os.str());
}

Point InverseBranches::branch(const Point& x, int label) const {
  if (sys_.variant() == Variant::Toral) return toral_branch(x, static_cast<std::size_t>(label));
  const std::size_t coset = static_cast<std::size_t>(label / 2);
  double v1, v2;
  skew_torus_branch(x[2], x[3], coset, v1, v2);
  const Mat& A = sys_.matrix_real();
  const double theta = kTwoPi * (A(0, 0) * v1 + A(0, 1) * v2);
  const std::complex<double> w =
      std::complex<double>(x[0], x[1]) - sys_.epsilon() * std::polar(1.0, theta);
  std::complex<double> r = std::sqrt(w);
  if (label % 2 == 1) r = -r;
  return Point{r.real(), r.imag(), mod1(v1), mod1(v2)};
}

void InverseBranches::preimages_into(const Point& x, std::vector<Preimage>& out) const {
  out.clear();
  if (sys_.variant() == Variant::Toral) {
    for (std::size_t c = 0; c < cosets_.size(); ++c)
      out.push_back({toral_branch(x, c), static_cast<int>(c)});
  } else {
    const Mat& A = sys_.matrix_real();
    const std::complex<double> z(x[0], x[1]);
    for (std::size_t c = 0; c < cosets_.size(); ++c) {
      double v1, v2;
      skew_torus_branch(x[2], x[3], c, v1, v2);
      const double theta = kTwoPi * (A(0, 0) * v1 + A(0, 1) * v2);
      const std::complex<double> r = std::sqrt(z - sys_.epsilon() * std::polar(1.0, theta));
      const double a = mod1(v1), b = mod1(v2);
      out.push_back({Point{r.real(), r.imag(), a, b}, static_cast<int>(2 * c)});
      out.push_back({Point{-r.real(), -r.imag(), a, b}, static_cast<int>(2 * c + 1)});
    }
  }
  check_collisions(sys_, out, cfg_.min_branch_separation);
}

std::vector<Preimage> InverseBranches::preimages(const Point& x) const {
  std::vector<Preimage> out;
  preimages_into(x, out);
  return out;
}

std::vector<Preimage> preimages(const System& sys, const Point& x, const NewtonConfig& cfg) {
  return InverseBranches(sys, cfg).preimages(x);
}

std::vector<std::size_t> PreimageTree::level_sizes() const {
  std::vector<std::size_t> out;
  for (const auto& l : levels) out.push_back(l.size());
  return out;
}

std::vector<TreeNode> expand_level(const InverseBranches& inv, const std::vector<TreeNode>& level,
                                   const Executor& exec, std::size_t* pruned) {
  constexpr std::size_t kChunk = 512;
  const std::size_t n_chunks = Executor::chunk_count(level.size(), kChunk);
  std::vector<std::vector<TreeNode>> parts(n_chunks);
  std::vector<std::size_t> dropped(n_chunks, 0);
  const System& sys = inv.system();
  exec.for_chunks(level.size(), kChunk, [&](std::size_t c, std::size_t b, std::size_t e) {
    std::vector<Preimage> pre;
    auto& out = parts[c];
    out.reserve((e - b) * static_cast<std::size_t>(inv.degree()));
    for (std::size_t i = b; i < e; ++i) {
      inv.preimages_into(level[i].point, pre);
      std::size_t kept = 0;
      for (const auto& p : pre) kept += in_region(sys, p.point) ? 1 : 0;
      dropped[c] += pre.size() - kept;
      if (kept == 0) continue;
      const double w = level[i].weight / static_cast<double>(kept);
      for (const auto& p : pre)
        if (in_region(sys, p.point))
          out.push_back({p.point, static_cast<std::int64_t>(i), p.label, w});
    }
  });
  std::size_t total = 0;
  for (const auto& p : parts) total += p.size();
  std::vector<TreeNode> next;
  next.reserve(total);
  for (auto& p : parts) next.insert(next.end(), p.begin(), p.end());
  if (pruned) {
    for (auto d : dropped) *pruned += d;
  }
  return next;
}

namespace {

Point checked_root(const System& sys, const Point& z, int n, const TreeOptions& opt) {
  if (n < 0) throw InvalidArgument("tree depth must be >= 0");
  if (z.dim != sys.dim()) throw InvalidArgument("root has the wrong dimension");
  const double margin = std::isnan(opt.v_margin) ? default_v_margin(sys) : opt.v_margin;
  const Point root = reduce(sys, z);
  if (!in_basin(sys, root, margin)) {
    std::ostringstream os;
    os << "root lies outside the basin (v_margin " << margin << ")";
    throw OutsideBasin(os.str());
  }
  const double leaves = std::pow(static_cast<double>(sys.degree()), n);
  if (leaves > static_cast<double>(opt.node_budget)) {
    std::ostringstream os;
    os << "d^n = " << leaves << " exceeds the node budget " << opt.node_budget;
    throw TreeBudgetExceeded(os.str());
  }
  return root;
}

}  // namespace

void for_each_level(const System& sys, const Point& z, int n, const TreeOptions& opt,
                    const std::function<void(int, const std::vector<TreeNode>&)>& visit) {
  const Point root = checked_root(sys, z, n, opt);
  const InverseBranches inv(sys, opt.newton);
  const Executor exec(opt.threads);
  std::vector<TreeNode> level{TreeNode{root, -1, -1, 1.0}};
  visit(0, level);
  for (int l = 1; l <= n; ++l) {
    level = expand_level(inv, level, exec);
    visit(l, level);
  }
}

PreimageTree preimage_tree(const System& sys, const Point& z, int n, const TreeOptions& opt) {
  PreimageTree tree;
  tree.root = checked_root(sys, z, n, opt);
  tree.depth = n;
  const InverseBranches inv(sys, opt.newton);
  const Executor exec(opt.threads);
  tree.levels.push_back({TreeNode{tree.root, -1, -1, 1.0}});
  for (int l = 1; l <= n; ++l)
    tree.levels.push_back(expand_level(inv, tree.levels.back(), exec, &tree.pruned));
  return tree;
}

void write_tree_csv(std::ostream& os, const System& sys, const PreimageTree& tree) {
  os << "level,node_index,parent_index,branch_label";
  for (int i = 0; i < sys.dim(); ++i) os << ",coord_" << i;
  os << '\n';
  for (std::size_t l = 0; l < tree.levels.size(); ++l) {
    const auto& level = tree.levels[l];
    for (std::size_t i = 0; i < level.size(); ++i) {
      const auto& nd = level[i];
      os << l << ',' << i << ',' << nd.parent << ',' << nd.label;
      for (int c = 0; c < sys.dim(); ++c) os << ',' << Num{nd.point[c]};
      os << '\n';
    }
  }
}

RepellorReport check_repellor(const System& sys, double grid_step, const NewtonConfig& cfg,
                              unsigned threads) {
  if (!(grid_step > 0.0)) throw InvalidArgument("grid_step must be > 0");

  // Grid axes: each axis is a list of sample values.
  std::vector<std::vector<double>> axes;
  auto periodic_axis = [&] {
    const auto g = static_cast<std::size_t>(std::ceil(1.0 / grid_step - 1e-9));
    std::vector<double> a(g);
    for (std::size_t i = 0; i < g; ++i) a[i] = static_cast<double>(i) / static_cast<double>(g);
    return a;
  };
  if (sys.variant() == Variant::Toral) {
    for (int i = 0; i < sys.torus_dim(); ++i) axes.push_back(periodic_axis());
  } else {
    // Closed annulus: both boundary radii are included.
    const double lo = 1.0 - sys.delta(), hi = 1.0 + sys.delta();
    const auto g = static_cast<std::size_t>(std::ceil((hi - lo) / grid_step - 1e-9));
    std::vector<double> radii(g + 1);
    for (std::size_t i = 0; i <= g; ++i)
      radii[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(g);
    axes.push_back(radii);
    axes.push_back(periodic_axis());  // angle in turns
    axes.push_back(periodic_axis());
    axes.push_back(periodic_axis());
  }
  std::size_t total = 1;
  for (const auto& a : axes) total *= a.size();

  auto grid_point = [&](std::size_t idx) {
    std::array<double, kMaxDim> v{};
    for (int a = static_cast<int>(axes.size()) - 1; a >= 0; --a) {
      v[a] = axes[a][idx % axes[a].size()];
      idx /= axes[a].size();
    }
    if (sys.variant() == Variant::Toral) {
      Point p(sys.dim());
      for (int i = 0; i < sys.dim(); ++i) p[i] = v[i];
      return p;
    }
    const double r = v[0], t = kTwoPi * v[1];
    return Point{r * std::cos(t), r * std::sin(t), v[2], v[3]};
  };

  RepellorReport rep;
  rep.grid_points = total;
  rep.counts.assign(total, 0);
  constexpr std::size_t kChunk = 1024;
  const std::size_t n_chunks = Executor::chunk_count(total, kChunk);
  std::vector<double> chunk_min(n_chunks, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> chunk_fail(n_chunks, 0);
  // Collision errors are part of what is being measured, so the check uses
  // an unchecked copy and records the separation itself.
  NewtonConfig loose = cfg;
  loose.min_branch_separation = 0.0;
  const InverseBranches probe(sys, loose);
  Executor(threads).for_chunks(total, kChunk, [&](std::size_t c, std::size_t b, std::size_t e) {
    std::vector<Preimage> pre;
    for (std::size_t i = b; i < e; ++i) {
      try {
        probe.preimages_into(grid_point(i), pre);
      } catch (const NewtonDivergence&) {
        ++chunk_fail[c];
        continue;
      }
      int cnt = 0;
      for (const auto& p : pre) cnt += in_region(sys, p.point) ? 1 : 0;
      rep.counts[i] = cnt;
      for (std::size_t a = 0; a < pre.size(); ++a)
        for (std::size_t q = a + 1; q < pre.size(); ++q)
          chunk_min[c] = std::min(chunk_min[c], distance(sys, pre[a].point, pre[q].point));
    }
  });
  for (std::size_t c = 0; c < n_chunks; ++c) {
    rep.min_separation = std::min(rep.min_separation, chunk_min[c]);
    rep.failures += chunk_fail[c];
  }
  for (int cnt : rep.counts) {
    rep.with_preimage_in_region += cnt > 0 ? 1 : 0;
    rep.min_count = std::min(rep.min_count, cnt);
    rep.max_count = std::max(rep.max_count, cnt);
  }
  rep.fraction = total ? static_cast<double>(rep.with_preimage_in_region) / total : 0.0;
  rep.count_constant = rep.min_count == rep.max_count;
  return rep;
}

std::vector<Point> backward_orbit(const System& sys, const Point& x, int m, std::uint64_t seed,
                                  const NewtonConfig& cfg) {
  if (m < 0) throw InvalidArgument("backward orbit length must be >= 0");
  const InverseBranches inv(sys, cfg);
  std::vector<Point> orbit(static_cast<std::size_t>(m) + 1);
  orbit[m] = reduce(sys, x);
  CounterRng rng(seed, rng_purpose::kBranch, 0);
  std::vector<Preimage> pre;
  std::vector<std::size_t> keep;
  for (int k = m - 1; k >= 0; --k) {
    inv.preimages_into(orbit[k + 1], pre);
    keep.clear();
    for (std::size_t i = 0; i < pre.size(); ++i)
      if (in_region(sys, pre[i].point)) keep.push_back(i);
    if (keep.empty()) throw OutsideBasin("backward orbit left the region");
    orbit[k] = pre[keep[rng.below(keep.size())]].point;
  }
  return orbit;
}

}  // namespace rlab
