#include "rlab/system.hpp"

#include <algorithm>
#include <numbers>
#include <sstream>

#include "rlab/errors.hpp"
#include "rlab/lattice.hpp"

namespace rlab {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void validate_linear_part(const IntMatrix& A) {
  if (A.rows() != A.cols() || A.rows() < 1 || A.rows() > kMaxDim)
    throw InvalidArgument("matrix must be square with 1..4 rows");
  const long long det = int_det(A);
  if (det == 0) throw DegenerateMatrix("det A = 0");
  if (std::llabs(det) < 2) throw InvalidArgument("|det A| must be at least 2");
  Eigen::MatrixXd Ad = A.cast<double>();
  Eigen::EigenSolver<Eigen::MatrixXd> es(Ad, false);
  for (int i = 0; i < es.eigenvalues().size(); ++i) {
    if (std::abs(std::abs(es.eigenvalues()[i]) - 1.0) < 1e-9) {
      std::ostringstream os;
      os << "eigenvalue " << es.eigenvalues()[i] << " lies on the unit circle";
      throw NotHyperbolic(os.str());
    }
  }
}

// Torus-part perturbation of the skew product and its derivative.
inline void skew_torus_perturbation(double u1, double u2, double& p1, double& p2) {
  p1 = std::sin(kTwoPi * (u1 + u2));
  const double c = std::cos(2.0 * kTwoPi * u1);
  p2 = c * c;
}

}  // namespace

System System::toral(const IntMatrix& A) {
  validate_linear_part(A);
  System s;
  s.variant_ = Variant::Toral;
  s.A_ = A;
  s.m_ = static_cast<int>(A.rows());
  s.det_ = int_det(A);
  s.degree_ = static_cast<int>(std::llabs(s.det_));
  s.Ar_ = A.cast<double>();
  s.Ainv_ = adjugate(A).cast<double>() / static_cast<double>(s.det_);
  return s;
}

System System::perturbed_skew(const IntMatrix& A, double epsilon, double delta) {
  if (A.rows() != 2 || A.cols() != 2)
    throw InvalidArgument("perturbed skew product needs a 2x2 torus matrix");
  validate_linear_part(A);
  if (!(epsilon >= 0.0)) throw InvalidArgument("epsilon must be >= 0");
  if (!(delta > 0.0 && delta < 0.5)) throw InvalidArgument("delta must lie in (0, 0.5)");
  // The square-root branches stay separated on U when |z - c| is bounded
  // away from zero, i.e. 1 - delta - eps > 0.
  if (1.0 - delta - epsilon <= 0.0)
    throw InvalidArgument("epsilon too large for the annulus: square-root branches may collide");
  System s;
  s.variant_ = Variant::PerturbedSkew;
  s.A_ = A;
  s.m_ = 2;
  s.det_ = int_det(A);
  s.degree_ = 2 * static_cast<int>(std::llabs(s.det_));
  s.eps_ = epsilon;
  s.delta_ = delta;
  s.Ar_ = A.cast<double>();
  s.Ainv_ = adjugate(A).cast<double>() / static_cast<double>(s.det_);
  return s;
}

std::vector<std::complex<double>> System::linear_eigenvalues() const {
  std::vector<std::complex<double>> out;
  if (variant_ == Variant::PerturbedSkew) {
    out.emplace_back(2.0, 0.0);
    out.emplace_back(2.0, 0.0);
  }
  Eigen::MatrixXd Ad = Ar_;
  Eigen::EigenSolver<Eigen::MatrixXd> es(Ad, false);
  for (int i = 0; i < es.eigenvalues().size(); ++i) out.push_back(es.eigenvalues()[i]);
  std::sort(out.begin(), out.end(),
            [](auto a, auto b) { return std::abs(a) < std::abs(b); });
  return out;
}

double System::lipschitz_bound() const {
  if (variant_ == Variant::Toral) {
    Eigen::MatrixXd Ad = Ar_;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(Ad);
    return svd.singularValues()[0];
  }
  // Frobenius bound from the supremum of each block over a slightly
  // enlarged annulus.
  const double rmax = 1.0 + delta_ + 0.1;
  double fro2 = 8.0 * rmax * rmax;
  const double r11 = Ar_(0, 0), r12 = Ar_(0, 1);
  fro2 += std::pow(kTwoPi * eps_, 2) * (r11 * r11 + r12 * r12);
  const double t11 = std::abs(Ar_(0, 0)) + kTwoPi * eps_;
  const double t12 = std::abs(Ar_(0, 1)) + kTwoPi * eps_;
  const double t21 = std::abs(Ar_(1, 0)) + 2.0 * kTwoPi * eps_;
  const double t22 = std::abs(Ar_(1, 1));
  fro2 += t11 * t11 + t12 * t12 + t21 * t21 + t22 * t22;
  return std::sqrt(fro2);
}

std::string System::describe() const {
  std::ostringstream os;
  os << (variant_ == Variant::Toral ? "toral" : "perturbed_skew") << " A=[";
  for (int i = 0; i < A_.rows(); ++i) {
    if (i) os << ';';
    for (int j = 0; j < A_.cols(); ++j) os << (j ? "," : "") << A_(i, j);
  }
  os << "] d=" << degree_;
  if (variant_ == Variant::PerturbedSkew) os << " epsilon=" << eps_ << " delta=" << delta_;
  return os.str();
}

Point apply_lift(const System& sys, const Point& p) {
  const Mat& A = sys.matrix_real();
  if (sys.variant() == Variant::Toral) {
    const int m = sys.torus_dim();
    Point out(m);
    for (int i = 0; i < m; ++i) {
      double acc = 0.0;
      for (int j = 0; j < m; ++j) acc += A(i, j) * p[j];
      out[i] = acc;
    }
    return out;
  }
  const double eps = sys.epsilon();
  const double a = p[0], b = p[1], u1 = p[2], u2 = p[3];
  const double theta = kTwoPi * (A(0, 0) * u1 + A(0, 1) * u2);
  Point out(4);
  out[0] = a * a - b * b + eps * std::cos(theta);
  out[1] = 2.0 * a * b + eps * std::sin(theta);
  double p1, p2;
  skew_torus_perturbation(u1, u2, p1, p2);
  out[2] = A(0, 0) * u1 + A(0, 1) * u2 + eps * p1;
  out[3] = A(1, 0) * u1 + A(1, 1) * u2 + eps * p2;
  return out;
}

Point reduce(const System& sys, Point p) {
  const int off = sys.torus_offset();
  for (int i = 0; i < sys.torus_dim(); ++i) p[off + i] = mod1(p[off + i]);
  return p;
}

Point apply(const System& sys, const Point& p) { return reduce(sys, apply_lift(sys, p)); }

Mat jacobian(const System& sys, const Point& p) {
  if (sys.variant() == Variant::Toral) return sys.matrix_real();
  const Mat& A = sys.matrix_real();
  const double eps = sys.epsilon();
  const double a = p[0], b = p[1], u1 = p[2], u2 = p[3];
  Mat J = Mat::Zero(4, 4);
  // 2z as a real conformal block.
  J(0, 0) = 2.0 * a;
  J(0, 1) = -2.0 * b;
  J(1, 0) = 2.0 * b;
  J(1, 1) = 2.0 * a;
  // d/du_j of eps * exp(i theta), theta = 2 pi <a_1, u>.
  const double theta = kTwoPi * (A(0, 0) * u1 + A(0, 1) * u2);
  const double s = std::sin(theta), c = std::cos(theta);
  for (int j = 0; j < 2; ++j) {
    const double g = eps * kTwoPi * A(0, j);
    J(0, 2 + j) = -g * s;
    J(1, 2 + j) = g * c;
  }
  const double cs = std::cos(kTwoPi * (u1 + u2));
  J(2, 2) = A(0, 0) + eps * kTwoPi * cs;
  J(2, 3) = A(0, 1) + eps * kTwoPi * cs;
  J(3, 2) = A(1, 0) - eps * 2.0 * kTwoPi * std::sin(4.0 * kTwoPi * u1);
  J(3, 3) = A(1, 1);
  return J;
}

Vec displacement(const System& sys, const Point& p, const Point& q) {
  const int n = sys.dim();
  const int off = sys.torus_offset();
  Vec d(n);
  for (int i = 0; i < n; ++i) {
    const double raw = q[i] - p[i];
    d[i] = (i >= off) ? wrap_diff(raw) : raw;
  }
  return d;
}

double distance(const System& sys, const Point& p, const Point& q) {
  const int n = sys.dim();
  const int off = sys.torus_offset();
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double raw = q[i] - p[i];
    const double d = (i >= off) ? wrap_diff(raw) : raw;
    acc += d * d;
  }
  return std::sqrt(acc);
}

bool in_region(const System& sys, const Point& p) {
  if (sys.variant() == Variant::Toral) return true;
  return std::abs(std::hypot(p[0], p[1]) - 1.0) < sys.delta();
}

bool in_basin(const System& sys, const Point& p, double v_margin) {
  if (sys.variant() == Variant::Toral) return true;
  return std::abs(std::hypot(p[0], p[1]) - 1.0) < v_margin;
}

double default_v_margin(const System& sys) {
  return sys.variant() == Variant::Toral ? 1.0 : 0.5 * sys.delta();
}

void chart(const System& sys, const Point& p, std::span<double> out) {
  if (sys.variant() == Variant::Toral) {
    for (int i = 0; i < sys.torus_dim(); ++i) out[i] = p[i];
    return;
  }
  out[0] = mod1(std::atan2(p[1], p[0]) / kTwoPi);
  out[1] = p[2];
  out[2] = p[3];
}

namespace catalog {

IntMatrix matrix(std::initializer_list<std::initializer_list<long long>> rows) {
  const int n = static_cast<int>(rows.size());
  const int m = n ? static_cast<int>(rows.begin()->size()) : 0;
  IntMatrix A(n, m);
  int i = 0;
  for (const auto& r : rows) {
    int j = 0;
    for (long long v : r) A(i, j++) = v;
    ++i;
  }
  return A;
}

System doubling_map() { return System::toral(matrix({{2}})); }
System toral_2122() { return System::toral(matrix({{2, 1}, {2, 2}})); }
System toral_2223() { return System::toral(matrix({{2, 2}, {2, 3}})); }
System example3_product() {
  return System::toral(matrix({{2, 0, 0}, {0, 2, 2}, {0, 2, 3}}));
}
System example4_perturbed(double epsilon, double delta) {
  return System::perturbed_skew(matrix({{2, 1}, {2, 2}}), epsilon, delta);
}

}  // namespace catalog

}  // namespace rlab
