#pragma once

#include <array>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>

#include <Eigen/Dense>

namespace rlab {

inline constexpr int kMaxDim = 4;

/// Fixed-capacity real matrices/vectors; phase spaces never exceed four real
/// dimensions, so nothing here touches the heap.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using IntMatrix =
    Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;
using IntVector = Eigen::Matrix<long long, Eigen::Dynamic, 1, 0, kMaxDim, 1>;

/// A phase-space state. Layout depends on the system variant:
///   Toral          x[0..m)   torus coordinates in [0,1)
///   PerturbedSkew  x[0],x[1] real/imaginary part of the planar coordinate z,
///                  x[2],x[3] torus coordinates in [0,1)
struct Point {
  std::array<double, kMaxDim> x{};
  int dim = 0;

  Point() = default;
  explicit Point(int d) : dim(d) { assert(d >= 0 && d <= kMaxDim); }
  Point(std::initializer_list<double> v) : dim(static_cast<int>(v.size())) {
    assert(dim <= kMaxDim);
    int i = 0;
    for (double c : v) x[i++] = c;
  }

  double& operator[](int i) { return x[i]; }
  double operator[](int i) const { return x[i]; }
  std::span<const double> coords() const { return {x.data(), static_cast<std::size_t>(dim)}; }

  Vec vec() const {
    Vec v(dim);
    for (int i = 0; i < dim; ++i) v[i] = x[i];
    return v;
  }
  static Point from(const Vec& v) {
    Point p(static_cast<int>(v.size()));
    for (int i = 0; i < p.dim; ++i) p.x[i] = v[i];
    return p;
  }

  friend bool operator==(const Point& a, const Point& b) {
    if (a.dim != b.dim) return false;
    for (int i = 0; i < a.dim; ++i)
      if (a.x[i] != b.x[i]) return false;
    return true;
  }
};

/// Reduction to [0,1). Exact integers map to 0, and values that round up to
/// 1.0 after subtraction fold back to 0.
inline double mod1(double v) {
  double r = v - std::floor(v);
  return r >= 1.0 ? 0.0 : r;
}

/// Signed representative of a coordinate difference in [-1/2, 1/2], with
/// round-half-down lifting so that a difference of exactly +-1/2 maps to +1/2.
inline double wrap_diff(double delta) { return delta - std::ceil(delta - 0.5); }

}  // namespace rlab
