#include "rlab/thermo.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "rlab/errors.hpp"
#include "rlab/format.hpp"
#include "rlab/inverse.hpp"
#include "rlab/kernels.hpp"
#include "rlab/parallel.hpp"
#include "rlab/rng.hpp"

namespace rlab {
namespace {

constexpr double kEscape = 1e100;

bool escaped(const Point& p) {
  for (int i = 0; i < p.dim; ++i)
    if (!std::isfinite(p[i]) || std::abs(p[i]) > kEscape) return true;
  return false;
}

// A fixed generic orthonormal frame; any frame in general position works.
Mat generic_frame(int q) {
  CounterRng rng(0x5EEDF00DULL, rng_purpose::kFrame, static_cast<std::uint64_t>(q));
  Mat M(q, q);
  for (int i = 0; i < q; ++i)
    for (int j = 0; j < q; ++j) M(i, j) = rng.uniform(-1.0, 1.0);
  Eigen::HouseholderQR<Mat> qr(M);
  return qr.householderQ() * Mat::Identity(q, q);
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Keyed bijection of [0, n): a balanced Feistel network on the smallest
// even-width power-of-two domain, with cycle walking back into range.
class ShufflePermutation {
 public:
  ShufflePermutation(std::uint64_t n, std::uint64_t seed) : n_(n) {
    int bits = 2;
    while (bits < 64 && (std::uint64_t{1} << bits) < n) bits += 2;
    half_ = bits / 2;
    mask_ = (std::uint64_t{1} << half_) - 1;
    for (std::uint32_t r = 0; r < kRounds; ++r) {
      const auto w = philox4x32({r, 0u, 0u, rng_purpose::kShuffle},
                                {static_cast<std::uint32_t>(seed),
                                 static_cast<std::uint32_t>(seed >> 32)});
      keys_[r] = (std::uint64_t{w[0]} << 32) | w[1];
    }
  }

  std::uint64_t operator()(std::uint64_t i) const {
    std::uint64_t v = feistel(i);
    while (v >= n_) v = feistel(v);
    return v;
  }

 private:
  static constexpr std::uint32_t kRounds = 4;

  std::uint64_t feistel(std::uint64_t v) const {
    std::uint64_t L = v >> half_, R = v & mask_;
    for (std::uint32_t r = 0; r < kRounds; ++r) {
      const std::uint64_t t = L ^ (splitmix64(R ^ keys_[r]) & mask_);
      L = R;
      R = t;
    }
    return (L << half_) | R;
  }

  std::uint64_t n_;
  int half_ = 1;
  std::uint64_t mask_ = 1;
  std::uint64_t keys_[kRounds]{};
};

// Open-addressing map from a cell key to the head of a linked list of point
// indices.
class CellIndex {
 public:
  static constexpr std::uint32_t kNone = 0xFFFFFFFFu;

  CellIndex() { rehash(1u << 12); }

  std::uint32_t head(std::uint64_t key) const {
    std::size_t i = splitmix64(key) & mask_;
    while (keys_[i] != kEmpty) {
      if (keys_[i] == key) return heads_[i];
      i = (i + 1) & mask_;
    }
    return kNone;
  }

  // Pushes `idx` at the front of the list for `key`; returns the old head.
  std::uint32_t push(std::uint64_t key, std::uint32_t idx) {
    if (2 * (used_ + 1) > keys_.size()) rehash(keys_.size() * 2);
    std::size_t i = splitmix64(key) & mask_;
    while (keys_[i] != kEmpty) {
      if (keys_[i] == key) {
        const std::uint32_t old = heads_[i];
        heads_[i] = idx;
        return old;
      }
      i = (i + 1) & mask_;
    }
    keys_[i] = key;
    heads_[i] = idx;
    ++used_;
    return kNone;
  }

 private:
  static constexpr std::uint64_t kEmpty = ~std::uint64_t{0};

  void rehash(std::size_t cap) {
    std::vector<std::uint64_t> ok = std::move(keys_);
    std::vector<std::uint32_t> oh = std::move(heads_);
    keys_.assign(cap, kEmpty);
    heads_.assign(cap, kNone);
    mask_ = cap - 1;
    for (std::size_t j = 0; j < ok.size(); ++j) {
      if (ok[j] == kEmpty) continue;
      std::size_t i = splitmix64(ok[j]) & mask_;
      while (keys_[i] != kEmpty) i = (i + 1) & mask_;
      keys_[i] = ok[j];
      heads_[i] = oh[j];
    }
  }

  std::vector<std::uint64_t> keys_;
  std::vector<std::uint32_t> heads_;
  std::size_t mask_ = 0;
  std::size_t used_ = 0;
};

class Keyer {
 public:
  virtual ~Keyer() = default;
  virtual std::uint64_t key(const double* p, const double* img) const = 0;
  // Every key that can hold a point within d_n distance eps of p.
  virtual void probes(const double* p, const double* img, std::vector<std::uint64_t>& out) const = 0;
  virtual bool needs_image() const { return true; }
};

// Cells of width >= 2 eps on each torus coordinate of p and of f^{n-1} p.
class CellGrid final : public Keyer {
 public:
  CellGrid(int m, double eps) : m_(m), eps_(eps * (1.0 + 1e-6)) {
    G_ = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::floor(1.0 / (2.0 * eps_))));
    const double bits = 2.0 * m * std::log2(static_cast<double>(G_));
    if (bits >= 63.0) throw InvalidArgument("epsilon too small for the cell index");
  }

  std::uint64_t key(const double* p, const double* img) const override {
    std::uint64_t k = 0;
    for (int i = 0; i < m_; ++i) k = k * G_ + cell(p[i]);
    for (int i = 0; i < m_; ++i) k = k * G_ + cell(img[i]);
    return k;
  }

  void probes(const double* p, const double* img, std::vector<std::uint64_t>& out) const override {
    std::array<std::array<std::uint64_t, 2>, 2 * kMaxDim> opt{};
    std::array<int, 2 * kMaxDim> nopt{};
    for (int i = 0; i < 2 * m_; ++i) {
      const double v = i < m_ ? p[i] : img[i - m_];
      const std::uint64_t a = cell(v - eps_), b = cell(v + eps_);
      opt[i][0] = a;
      opt[i][1] = b;
      nopt[i] = a == b ? 1 : 2;
    }
    out.clear();
    std::array<int, 2 * kMaxDim> sel{};
    for (;;) {
      std::uint64_t k = 0;
      for (int i = 0; i < 2 * m_; ++i) k = k * G_ + opt[i][sel[i]];
      out.push_back(k);
      int i = 2 * m_ - 1;
      while (i >= 0 && sel[i] + 1 == nopt[i]) sel[i--] = 0;
      if (i < 0) break;
      ++sel[i];
    }
  }

 private:
  std::uint64_t cell(double v) const {
    return std::min<std::uint64_t>(G_ - 1, static_cast<std::uint64_t>(mod1(v) * G_));
  }

  int m_;
  double eps_;
  std::uint64_t G_ = 1;
};

// For a linear map with ||A||_inf eps < 1/2 no wrap occurs while a
// difference stays eps-small, so d_n(p, q) < eps forces the wrapped
// difference into the convex set {|A^i v| < eps, i < n}. Its eigen
// coefficients satisfy |c_j| <= |f_j| eps min_i |lambda_j|^-i with f_j the
// rows of E^-1. Cells are twice that half-width along each eigen axis and
// are keyed on the coefficients of the representative in [0,1)^m, so a
// query visits at most 2^m cells per integer shift.
class EigenCells final : public Keyer {
 public:
  EigenCells(const Mat& E, const std::array<double, kMaxDim>& contraction, int m, double eps)
      : m_(m), eps_(eps * (1.0 + 1e-6)), F_(E.inverse()) {
    double total_bits = 0.0;
    for (int j = 0; j < m; ++j) {
      r_[j] = F_.row(j).norm() * eps * contraction[j] * (1.0 + 1e-6);
      w_[j] = 2.0 * r_[j];
      double mn = std::numeric_limits<double>::infinity(), mx = -mn;
      for (int mask = 0; mask < (1 << m); ++mask) {
        double c = 0.0;
        for (int i = 0; i < m; ++i) c += F_(j, i) * ((mask >> i) & 1 ? 2.0 : -1.0);
        mn = std::min(mn, c);
        mx = std::max(mx, c);
      }
      lo_[j] = static_cast<long long>(std::floor(mn / w_[j])) - 1;
      cnt_[j] = static_cast<std::uint64_t>(std::ceil(mx / w_[j]) - lo_[j]) + 2;
      total_bits += std::log2(static_cast<double>(cnt_[j]));
    }
    if (total_bits >= 63.0) throw InvalidArgument("epsilon too small for the eigen index");
  }

  static bool valid(const Mat& A, int n, double eps) {
    if (n == 1) return true;
    double norm = 0.0;
    for (int i = 0; i < A.rows(); ++i) norm = std::max(norm, A.row(i).cwiseAbs().sum());
    return norm * eps < 0.5;
  }

  std::uint64_t key(const double* p, const double*) const override {
    std::uint64_t k = 0;
    for (int j = 0; j < m_; ++j) k = k * cnt_[j] + cell(j, coef(j, p));
    return k;
  }

  void probes(const double* p, const double*, std::vector<std::uint64_t>& out) const override {
    out.clear();
    // Shifts k with p - v + k in [0,1)^m for some |v_i| < eps.
    std::array<std::array<int, 2>, kMaxDim> sh{};
    std::array<int, kMaxDim> nsh{};
    for (int i = 0; i < m_; ++i) {
      nsh[i] = 1;
      sh[i][0] = 0;
      if (p[i] < eps_) sh[i][nsh[i]++] = 1;
      else if (p[i] > 1.0 - eps_) sh[i][nsh[i]++] = -1;
    }
    std::array<int, kMaxDim> ss{};
    std::array<double, kMaxDim> q{};
    for (;;) {
      for (int i = 0; i < m_; ++i) q[i] = p[i] + sh[i][ss[i]];
      std::array<std::array<std::uint64_t, 2>, kMaxDim> opt{};
      std::array<int, kMaxDim> nopt{};
      for (int j = 0; j < m_; ++j) {
        const double c = coef(j, q.data());
        opt[j][0] = cell(j, c - r_[j]);
        opt[j][1] = cell(j, c + r_[j]);
        nopt[j] = opt[j][0] == opt[j][1] ? 1 : 2;
      }
      std::array<int, kMaxDim> sel{};
      for (;;) {
        std::uint64_t k = 0;
        for (int j = 0; j < m_; ++j) k = k * cnt_[j] + opt[j][sel[j]];
        out.push_back(k);
        int j = m_ - 1;
        while (j >= 0 && sel[j] + 1 == nopt[j]) sel[j--] = 0;
        if (j < 0) break;
        ++sel[j];
      }
      int i = m_ - 1;
      while (i >= 0 && ss[i] + 1 == nsh[i]) ss[i--] = 0;
      if (i < 0) break;
      ++ss[i];
    }
  }

  bool needs_image() const override { return false; }

 private:
  double coef(int j, const double* p) const {
    double c = 0.0;
    for (int i = 0; i < m_; ++i) c += F_(j, i) * p[i];
    return c;
  }

  std::uint64_t cell(int j, double c) const {
    const long long k = static_cast<long long>(std::floor(c / w_[j])) - lo_[j];
    return static_cast<std::uint64_t>(std::clamp<long long>(k, 0, static_cast<long long>(cnt_[j]) - 1));
  }

  int m_;
  double eps_;
  Mat F_;
  std::array<double, kMaxDim> r_{}, w_{};
  std::array<long long, kMaxDim> lo_{};
  std::array<std::uint64_t, kMaxDim> cnt_{};
};

struct Eigenframe {
  Mat E;
  std::array<double, kMaxDim> modulus{};
};

Eigenframe real_eigenframe(const Mat& A) {
  const int m = static_cast<int>(A.rows());
  Eigen::MatrixXd Ad = A;
  Eigen::EigenSolver<Eigen::MatrixXd> es(Ad);
  Eigenframe f;
  f.E = Mat(m, m);
  for (int j = 0; j < m; ++j) {
    const auto lam = es.eigenvalues()[j];
    if (std::abs(lam.imag()) > 1e-12) throw UnsupportedSystem("adapted grid needs a real spectrum");
    f.E.col(j) = es.eigenvectors().col(j).real().normalized();
    f.modulus[j] = std::abs(lam.real());
  }
  return f;
}

std::unique_ptr<Keyer> make_keyer(SeparationIndex want, const Mat& A, int m, int n, double eps,
                                  SeparationIndex& used) {
  const bool eigen_ok = EigenCells::valid(A, n, eps);
  if (want == SeparationIndex::Eigen && !eigen_ok)
    throw InvalidArgument("eigen index needs n == 1 or ||A||_inf epsilon < 1/2");
  if (want == SeparationIndex::Cells || !eigen_ok) {
    used = SeparationIndex::Cells;
    return std::make_unique<CellGrid>(m, eps);
  }
  const Eigenframe f = real_eigenframe(A);
  std::array<double, kMaxDim> contraction{};
  for (int j = 0; j < m; ++j)
    contraction[j] = f.modulus[j] > 1.0 ? std::pow(f.modulus[j], -(n - 1)) : 1.0;
  used = SeparationIndex::Eigen;
  return std::make_unique<EigenCells>(f.E, contraction, m, eps);
}

// Relative margin on admission; lattice pairs at exactly eps are common.
constexpr double kTie = 1e-9;

// d_n distance of torus points under a linear map, from a wrapped
// difference; exact up to rounding because A is integral. Compares against
// eps (1 + kTie).
bool linear_bowen_close(const Mat& A, int m, int n, const double* p, const double* q,
                        double eps) {
  const double e2 = eps * eps * (1.0 + kTie) * (1.0 + kTie);
  std::array<double, kMaxDim> d{}, t{};
  double s = 0.0;
  for (int i = 0; i < m; ++i) {
    d[i] = wrap_diff(p[i] - q[i]);
    s += d[i] * d[i];
  }
  if (s >= e2) return false;
  for (int step = 1; step < n; ++step) {
    s = 0.0;
    for (int i = 0; i < m; ++i) {
      double acc = 0.0;
      for (int j = 0; j < m; ++j) acc += A(i, j) * d[j];
      t[i] = wrap_diff(acc);
      s += t[i] * t[i];
    }
    if (s >= e2) return false;
    d = t;
  }
  return true;
}

}  // namespace

StableFrame stable_frame(const System& sys, const Point& x, const FrameOptions& opt) {
  if (opt.n_conv < 1) throw InvalidArgument("n_conv must be >= 1");
  const int q = sys.dim();
  std::vector<Point> orbit{x};
  for (int k = 0; k < opt.n_conv; ++k) {
    Point nx = apply(sys, orbit.back());
    if (escaped(nx) || !in_region(sys, nx)) break;
    orbit.push_back(nx);
  }
  const int N = static_cast<int>(orbit.size()) - 1;
  Mat Q = generic_frame(q);
  std::array<double, kMaxDim> logs{};
  for (int k = N - 1; k >= 0; --k) {
    const Mat J = jacobian(sys, orbit[k]);
    const Mat M = J.partialPivLu().solve(Q);
    Eigen::HouseholderQR<Mat> qr(M);
    const Mat& R = qr.matrixQR();
    Q = qr.householderQ() * Mat::Identity(q, q);
    for (int i = 0; i < q; ++i) {
      if (R(i, i) < 0.0) Q.col(i) *= -1.0;
      logs[i] += std::log(std::abs(R(i, i)));
    }
  }
  StableFrame f;
  f.base = x;
  f.steps = N;
  f.s = 0;
  for (int i = 0; i < q; ++i) f.s += logs[i] > 0.0 ? 1 : 0;
  f.basis = Q.leftCols(f.s);
  if (f.s > 0 && f.s < q) {
    f.gap = std::exp(logs[f.s - 1] - logs[f.s]);
    if (!(f.gap >= opt.gap_threshold)) {
      std::ostringstream os;
      os << "singular-value gap " << f.gap << " below threshold " << opt.gap_threshold
         << " after " << N << " steps";
      throw WeakHyperbolicity(os.str());
    }
  }
  return f;
}

double stable_potential(const System& sys, const Point& x, const FrameOptions& opt) {
  const StableFrame a = stable_frame(sys, x, opt);
  if (a.s == 0) return 0.0;
  const StableFrame b = stable_frame(sys, apply(sys, x), opt);
  if (b.s != a.s) throw WeakHyperbolicity("stable dimension changes along the orbit");
  const Mat M = b.basis.transpose() * jacobian(sys, x) * a.basis;
  return std::log(std::abs(M.determinant()));
}

Potential Potential::constant(double c) {
  Potential p;
  p.kind_ = Kind::Constant;
  p.shift_ = c;
  return p;
}

Potential Potential::stable(double shift, FrameOptions opt) {
  Potential p;
  p.kind_ = Kind::Stable;
  p.shift_ = shift;
  p.frame_ = opt;
  return p;
}

Potential Potential::observable(TrigObservable g, double shift) {
  Potential p;
  p.kind_ = Kind::Observable;
  p.shift_ = shift;
  p.g_ = std::move(g);
  return p;
}

Potential Potential::shifted(double c) const {
  Potential p = *this;
  p.shift_ += c;
  return p;
}

std::optional<double> Potential::constant_value(const System& sys) const {
  switch (kind_) {
    case Kind::Constant:
      return shift_;
    case Kind::Stable:
      if (sys.constant_jacobian()) return stable_potential(sys, Point(sys.dim()), frame_) + shift_;
      return std::nullopt;
    case Kind::Observable:
      for (const auto& t : g_.terms())
        if (t.k.cwiseAbs().maxCoeff() != 0 && t.c != 0.0) return std::nullopt;
      {
        double c = shift_;
        for (const auto& t : g_.terms()) c += t.c.real();
        return c;
      }
  }
  return std::nullopt;
}

double Potential::operator()(const System& sys, const Point& x) const {
  switch (kind_) {
    case Kind::Constant:
      return shift_;
    case Kind::Stable:
      if (sys.constant_jacobian()) return *constant_value(sys);
      return stable_potential(sys, x, frame_) + shift_;
    case Kind::Observable: {
      std::array<double, kMaxDim> c{};
      chart(sys, x, c);
      return g_(std::span<const double>(c.data(), sys.chart_dim())).real() + shift_;
    }
  }
  return 0.0;
}

double birkhoff_sum(const System& sys, const Potential& phi, const Point& x, int n) {
  if (n < 1) throw InvalidArgument("n must be >= 1");
  if (auto c = phi.constant_value(sys)) return n * *c;
  double acc = 0.0;
  Point p = x;
  for (int i = 0; i < n; ++i) {
    acc += phi(sys, p);
    if (i + 1 < n) p = apply(sys, p);
  }
  return acc;
}

bool bowen_ball_contains(const System& sys, const BowenBall& ball, const Point& z) {
  Point a = ball.center, b = z;
  for (int i = 0; i < ball.n; ++i) {
    if (!(distance(sys, a, b) < ball.eps)) return false;
    if (i + 1 < ball.n) {
      a = apply(sys, a);
      b = apply(sys, b);
    }
  }
  return true;
}

double bowen_distance(const System& sys, const Point& p, const Point& q, int n) {
  Point a = p, b = q;
  double d = 0.0;
  for (int i = 0; i < n; ++i) {
    d = std::max(d, distance(sys, a, b));
    if (i + 1 < n) {
      a = apply(sys, a);
      b = apply(sys, b);
    }
  }
  return d;
}

SeparatedSet maximal_separated_set(const System& sys, int n, double eps,
                                   const SeparatedSetOptions& opt) {
  if (sys.variant() != Variant::Toral)
    throw UnsupportedSystem("separated sets are implemented for toral systems only");
  if (n < 1) throw InvalidArgument("n must be >= 1");
  if (!(eps > 0.0)) throw InvalidArgument("epsilon must be > 0");
  const double h = std::isnan(opt.grid_step) ? eps / 2.0 : opt.grid_step;
  if (!(h > 0.0 && h < eps)) throw InvalidArgument("grid_step must lie in (0, epsilon)");

  const int m = sys.torus_dim();
  const Mat& A = sys.matrix_real();
  const Eigenframe frame = real_eigenframe(A);
  const Mat& E = frame.E;
  std::array<double, kMaxDim> step{};
  for (int j = 0; j < m; ++j)
    step[j] = frame.modulus[j] > 1.0 ? h * std::pow(frame.modulus[j], -(n - 1)) : h;

  // Cover radius: worst vertex of the coefficient box |c_j| <= h/2, which
  // bounds every iterate i < n.
  double worst = 0.0, rho = 0.0;
  for (int mask = 0; mask < (1 << m); ++mask) {
    Vec v = Vec::Zero(m), w = Vec::Zero(m);
    for (int j = 0; j < m; ++j) {
      const double sg = (mask >> j) & 1 ? -1.0 : 1.0;
      v += sg * E.col(j);
      w += sg * step[j] * E.col(j);
    }
    worst = std::max(worst, v.norm());
    rho = std::max(rho, 0.5 * w.norm());
  }
  SeparatedSet out;
  out.n = n;
  out.eps = eps;
  out.grid_step = h;
  out.cover_radius = 0.5 * h * worst;
  {
    std::ostringstream os;
    os << "eigenframe lattice, base step " << h << ", expanding steps scaled by |lambda|^-"
       << (n - 1);
    out.grid = os.str();
  }
  if (out.cover_radius > eps / 2.0) {
    std::ostringstream os;
    os << "grid cover radius " << out.cover_radius << " exceeds epsilon/2 = " << eps / 2.0;
    throw GridTooCoarse(os.str());
  }

  // Lattice M a, a integer, restricted to the box [-rho, 1+rho)^m.
  Mat M(m, m);
  for (int j = 0; j < m; ++j) M.col(j) = step[j] * E.col(j);
  const Mat Minv = M.inverse();
  std::array<long long, kMaxDim> lo{}, cnt{};
  for (int j = 0; j < m; ++j) {
    double mn = std::numeric_limits<double>::infinity(), mx = -mn;
    for (int mask = 0; mask < (1 << m); ++mask) {
      Vec c(m);
      for (int i = 0; i < m; ++i) c[i] = (mask >> i) & 1 ? 1.0 + rho : -rho;
      const double a = Minv.row(j).dot(c);
      mn = std::min(mn, a);
      mx = std::max(mx, a);
    }
    lo[j] = static_cast<long long>(std::floor(mn));
    cnt[j] = static_cast<long long>(std::ceil(mx)) - lo[j] + 1;
  }
  double total_d = 1.0;
  for (int j = 0; j < m; ++j) total_d *= static_cast<double>(cnt[j]);
  if (total_d > static_cast<double>(opt.candidate_budget)) {
    std::ostringstream os;
    os << total_d << " lattice candidates exceed the budget " << opt.candidate_budget;
    throw CandidateBudgetExceeded(os.str());
  }
  const auto total = static_cast<std::uint64_t>(total_d);

  const auto keyer = make_keyer(opt.index, A, m, n, eps, out.index);
  const bool need_img = keyer->needs_image();
  CellIndex index;
  std::vector<double> P;
  std::vector<std::uint32_t> next;
  std::vector<std::uint64_t> probes;
  const ShufflePermutation perm(total, opt.seed);

  std::array<double, kMaxDim> p{}, img{};
  for (std::uint64_t it = 0; it < total; ++it) {
    std::uint64_t idx = perm(it);
    std::array<double, kMaxDim> a{};
    for (int j = m - 1; j >= 0; --j) {
      a[j] = static_cast<double>(lo[j] + static_cast<long long>(idx % cnt[j]));
      idx /= cnt[j];
    }
    bool inside = true;
    for (int i = 0; i < m && inside; ++i) {
      double x = 0.0;
      for (int j = 0; j < m; ++j) x += M(i, j) * a[j];
      inside = x >= -rho && x < 1.0 + rho;
      p[i] = mod1(x);
    }
    if (!inside) continue;
    ++out.candidates;
    if (need_img) {
      // f^{n-1} p, step by step to keep the rounding of a single step.
      std::copy(p.begin(), p.end(), img.begin());
      for (int s = 1; s < n; ++s) {
        std::array<double, kMaxDim> t{};
        for (int i = 0; i < m; ++i) {
          double acc = 0.0;
          for (int j = 0; j < m; ++j) acc += A(i, j) * img[j];
          t[i] = mod1(acc);
        }
        img = t;
      }
    }
    keyer->probes(p.data(), img.data(), probes);
    bool clash = false;
    for (std::uint64_t key : probes) {
      for (std::uint32_t j = index.head(key); j != CellIndex::kNone && !clash; j = next[j])
        clash = linear_bowen_close(A, m, n, p.data(), &P[static_cast<std::size_t>(j) * m], eps);
      if (clash) break;
    }
    if (clash) continue;
    const auto id = static_cast<std::uint32_t>(next.size());
    P.insert(P.end(), p.begin(), p.begin() + m);
    next.push_back(index.push(keyer->key(p.data(), img.data()), id));
  }

  out.points.reserve(next.size());
  for (std::size_t j = 0; j < next.size(); ++j) {
    Point q(m);
    for (int i = 0; i < m; ++i) q[i] = P[j * m + i];
    out.points.push_back(q);
  }
  if (opt.verify && !verify_separated(sys, out.points, n, eps, out.index))
    throw Error("SeparationViolated", "post-hoc check found two points closer than epsilon");
  return out;
}

bool is_separated(const System& sys, const std::vector<Point>& pts, int n, double eps) {
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j)
      if (bowen_distance(sys, pts[i], pts[j], n) < eps) return false;
  return true;
}

bool verify_separated(const System& sys, const std::vector<Point>& pts, int n, double eps,
                      SeparationIndex index) {
  if (sys.variant() != Variant::Toral) return is_separated(sys, pts, n, eps);
  const int m = sys.torus_dim();
  SeparationIndex used{};
  const auto keyer = make_keyer(index, sys.matrix_real(), m, n, eps, used);
  std::vector<Point> img(pts.size());
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> buckets;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    Point q = pts[i];
    if (keyer->needs_image())
      for (int s = 1; s < n; ++s) q = apply(sys, q);
    img[i] = q;
    buckets[keyer->key(pts[i].x.data(), q.x.data())].push_back(i);
  }
  std::vector<std::uint64_t> probes;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    keyer->probes(pts[i].x.data(), img[i].x.data(), probes);
    for (std::uint64_t key : probes) {
      auto it = buckets.find(key);
      if (it == buckets.end()) continue;
      for (std::size_t j : it->second)
        if (j != i && bowen_distance(sys, pts[i], pts[j], n) < eps) return false;
    }
  }
  return true;
}

PressureEstimate pressure_from_sets(const System& sys, const Potential& phi,
                                    const std::vector<SeparatedSet>& sets, unsigned threads) {
  PressureEstimate est;
  const auto c = phi.constant_value(sys);
  for (const auto& set : sets) {
    const int n = set.n;
    est.epsilon = set.eps;
    est.ns.push_back(n);
    est.cardinality.push_back(set.points.size());
    double lse;
    if (c) {
      lse = std::log(static_cast<double>(set.points.size())) + n * *c;
    } else {
      std::vector<double> S(set.points.size());
      Executor(threads).for_chunks(S.size(), 1024, [&](std::size_t, std::size_t b,
                                                       std::size_t e) {
        for (std::size_t i = b; i < e; ++i) S[i] = birkhoff_sum(sys, phi, set.points[i], n);
      });
      const double mx = *std::max_element(S.begin(), S.end());
      double acc = 0.0;
      for (double s : S) acc += std::exp(s - mx);
      lse = mx + std::log(acc);
    }
    est.P.push_back(lse / n);
  }
  const std::size_t k = est.ns.size();
  if (k >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < k; ++i) {
      const double x = est.ns[i], y = est.ns[i] * est.P[i];
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    const double den = k * sxx - sx * sx;
    est.extrapolated = (k * sxy - sx * sy) / den;
    est.intercept = (sy - est.extrapolated * sx) / k;
  } else if (k == 1) {
    est.extrapolated = est.P[0];
  }
  return est;
}

PressureEstimate pressure_estimate(const System& sys, const Potential& phi, double eps,
                                   const std::vector<int>& n_range,
                                   const SeparatedSetOptions& opt, unsigned threads) {
  std::vector<SeparatedSet> sets;
  for (int n : n_range) sets.push_back(maximal_separated_set(sys, n, eps, opt));
  return pressure_from_sets(sys, phi, sets, threads);
}

double ball_volume(int d, double r) {
  return std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d + 1.0) * std::pow(r, d);
}

namespace {

double region_volume(const System& sys) {
  if (sys.variant() == Variant::Toral) return 1.0;
  const double d = sys.delta();
  return std::numbers::pi * ((1.0 + d) * (1.0 + d) - (1.0 - d) * (1.0 - d));
}

// Uniform point of the Euclidean q-ball of radius r, by rejection.
Vec ball_offset(CounterRng& rng, int q, double r) {
  Vec v(q);
  for (;;) {
    double s = 0.0;
    for (int i = 0; i < q; ++i) {
      v[i] = rng.uniform(-1.0, 1.0);
      s += v[i] * v[i];
    }
    if (s < 1.0) return r * v;
  }
}

double equilibrium_weight(const System& sys, const Point& y, int n) {
  const double S = birkhoff_sum(sys, Potential::stable(), y, n);
  return std::exp(S - n * std::log(static_cast<double>(sys.degree())));
}

}  // namespace

BallMeasure bowen_ball_measure(const System& sys, const BowenBall& ball,
                               std::uint64_t num_samples, std::uint64_t seed, unsigned threads) {
  if (num_samples < 1) throw InvalidArgument("num_samples must be >= 1");
  const int q = sys.dim();
  constexpr std::size_t kChunk = 4096;
  std::vector<std::uint64_t> hits(Executor::chunk_count(num_samples, kChunk), 0);
  auto draw = [&](std::size_t i) {
    CounterRng rng(seed, rng_purpose::kMonteCarlo, i);
    const Vec off = ball_offset(rng, q, ball.eps);
    Point z = ball.center;
    for (int k = 0; k < q; ++k) z[k] += off[k];
    return reduce(sys, z);
  };
  if (sys.variant() == Variant::Toral) {
    // Batched: the samples of a chunk advance together through the kernels.
    std::vector<Point> orb{ball.center};
    for (int k = 1; k < ball.n; ++k) orb.push_back(apply(sys, orb.back()));
    std::vector<double> Arow(static_cast<std::size_t>(q) * q);
    for (int i = 0; i < q; ++i)
      for (int j = 0; j < q; ++j) Arow[static_cast<std::size_t>(i) * q + j] = sys.matrix_real()(i, j);
    const double e2 = ball.eps * ball.eps;
    const auto& kt = kernels::active();
    Executor(threads).for_chunks(num_samples, kChunk, [&](std::size_t c, std::size_t b,
                                                          std::size_t e) {
      const std::size_t len = e - b;
      std::vector<double> buf(2 * static_cast<std::size_t>(q) * len), d2(len);
      std::vector<char> alive(len, 1);
      std::array<double*, kMaxDim> x{}, y{};
      for (int k = 0; k < q; ++k) {
        x[k] = buf.data() + static_cast<std::size_t>(k) * len;
        y[k] = buf.data() + static_cast<std::size_t>(q + k) * len;
      }
      for (std::size_t i = 0; i < len; ++i) {
        const Point z = draw(b + i);
        for (int k = 0; k < q; ++k) x[k][i] = z[k];
      }
      for (int step = 0; step < ball.n; ++step) {
        kt.wrapped_dist2(orb[step].x.data(), q, x.data(), d2.data(), len);
        for (std::size_t i = 0; i < len; ++i) alive[i] &= d2[i] < e2 ? 1 : 0;
        if (step + 1 < ball.n) {
          kt.linear_mod1(Arow.data(), q, x.data(), y.data(), len);
          std::swap(x, y);
        }
      }
      for (std::size_t i = 0; i < len; ++i) hits[c] += alive[i] ? 1 : 0;
    });
  } else {
    Executor(threads).for_chunks(num_samples, kChunk, [&](std::size_t c, std::size_t b,
                                                          std::size_t e) {
      for (std::size_t i = b; i < e; ++i) {
        const Point z = draw(i);
        if (in_region(sys, z) && bowen_ball_contains(sys, ball, z)) ++hits[c];
      }
    });
  }
  BallMeasure bm;
  bm.samples = num_samples;
  for (auto h : hits) bm.hits += h;
  const double vol = std::min(1.0, ball_volume(q, ball.eps) / region_volume(sys));
  const double p = static_cast<double>(bm.hits) / static_cast<double>(num_samples);
  bm.estimate = vol * p;
  bm.stderr_ = vol * std::sqrt(p * (1.0 - p) / static_cast<double>(num_samples));
  bm.zero_hits = bm.hits == 0;
  bm.ratio = bm.estimate / equilibrium_weight(sys, ball.center, ball.n);
  return bm;
}

BallMeasure bowen_ball_measure(const System& sys, const WeightedAtomCloud& cloud,
                               const BowenBall& ball) {
  BallMeasure bm;
  bm.samples = cloud.size();
  double w2 = 0.0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (!bowen_ball_contains(sys, ball, cloud.point(i))) continue;
    ++bm.hits;
    bm.estimate += cloud.weight(i);
    w2 += cloud.weight(i) * cloud.weight(i);
  }
  bm.stderr_ = std::sqrt(w2);
  bm.zero_hits = bm.hits == 0;
  bm.ratio = bm.estimate / equilibrium_weight(sys, ball.center, ball.n);
  return bm;
}

TubeVolume tubular_volume(const System& sys, const Point& y, int n, double eps,
                          std::uint64_t num_samples, std::uint64_t seed, unsigned threads,
                          const NewtonConfig& newton) {
  if (n < 1) throw InvalidArgument("n must be >= 1");
  if (num_samples < 1) throw InvalidArgument("num_samples must be >= 1");
  const double leaves = std::pow(static_cast<double>(sys.degree()), n);
  if (leaves > 1e7) throw TreeBudgetExceeded("d^n exceeds the node budget");
  const int q = sys.dim();
  std::vector<Point> orb{y};
  for (int i = 0; i < n; ++i) orb.push_back(apply(sys, orb.back()));

  // f^n B_n(y, eps) lies in the ball of radius Lip * eps around f^n y.
  const double R = sys.lipschitz_bound() * eps;
  const bool whole = sys.variant() == Variant::Toral && R >= 0.5;
  if (!whole && R >= 0.5) throw InvalidArgument("epsilon too large for the sampling ball");
  const double vol = whole ? 1.0 : ball_volume(q, R);

  const InverseBranches inv(sys, newton);
  constexpr std::size_t kChunk = 1024;
  std::vector<std::uint64_t> hits(Executor::chunk_count(num_samples, kChunk), 0);
  Executor(threads).for_chunks(num_samples, kChunk, [&](std::size_t c, std::size_t b,
                                                        std::size_t e) {
    std::vector<std::pair<Point, int>> stack;
    std::vector<Preimage> pre;
    for (std::size_t i = b; i < e; ++i) {
      CounterRng rng(seed, rng_purpose::kMonteCarlo, i);
      Point z(q);
      if (whole) {
        for (int k = 0; k < q; ++k) z[k] = rng.uniform();
      } else {
        const Vec off = ball_offset(rng, q, R);
        z = orb[n];
        for (int k = 0; k < q; ++k) z[k] += off[k];
        z = reduce(sys, z);
      }
      // Depth-first search for a branch w of f^{-n} z inside B_n(y, eps);
      // the node at depth j stands for f^{n-j} w.
      stack.clear();
      stack.emplace_back(z, 0);
      bool found = false;
      while (!stack.empty() && !found) {
        auto [pt, j] = stack.back();
        stack.pop_back();
        inv.preimages_into(pt, pre);
        for (const auto& c2 : pre) {
          if (!in_region(sys, c2.point)) continue;
          if (!(distance(sys, c2.point, orb[n - j - 1]) < eps)) continue;
          if (j + 1 == n) {
            found = true;
            break;
          }
          stack.emplace_back(c2.point, j + 1);
        }
      }
      if (found) ++hits[c];
    }
  });
  TubeVolume tv;
  tv.samples = num_samples;
  for (auto h : hits) tv.hits += h;
  const double p = static_cast<double>(tv.hits) / static_cast<double>(num_samples);
  tv.volume = vol * p;
  tv.stderr_ = vol * std::sqrt(p * (1.0 - p) / static_cast<double>(num_samples));
  tv.ratio = tv.volume / std::exp(birkhoff_sum(sys, Potential::stable(), y, n));
  return tv;
}

void write_pressure_csv(std::ostream& os, const PressureEstimate& p) {
  os << "n,epsilon,cardinality,P_n\n";
  for (std::size_t i = 0; i < p.ns.size(); ++i)
    os << p.ns[i] << ',' << Num{p.epsilon} << ',' << p.cardinality[i] << ',' << Num{p.P[i]}
       << '\n';
}

}  // namespace rlab
