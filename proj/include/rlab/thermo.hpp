#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "rlab/measure.hpp"
#include "rlab/point.hpp"
#include "rlab/system.hpp"

namespace rlab {

struct FrameOptions {
  int n_conv = 30;
  double gap_threshold = 10.0;
};

/// Orthonormal basis of the approximate stable subspace at `base`.
struct StableFrame {
  Point base;
  Mat basis;  // q x s
  int s = 0;
  /// sigma_{s+1} / sigma_s of Df^{n_conv}; infinite when s is 0 or q.
  double gap = std::numeric_limits<double>::infinity();
  /// Forward steps actually used (fewer than n_conv if the orbit left U).
  int steps = 0;
};

/// Backward product of inverse Jacobians along the forward orbit of x,
/// re-orthonormalized by QR at every step. Throws WeakHyperbolicity.
StableFrame stable_frame(const System& sys, const Point& x, const FrameOptions& opt = {});

/// log |det(B_{f(x)}^T Df_x B_x)|, and 0 when the stable bundle is empty.
double stable_potential(const System& sys, const Point& x, const FrameOptions& opt = {});

/// A real potential: a constant, the stable potential, or the real part of a
/// trigonometric observable, plus a constant shift.
class Potential {
 public:
  enum class Kind { Constant, Stable, Observable };

  static Potential constant(double c);
  static Potential stable(double shift = 0.0, FrameOptions opt = {});
  static Potential observable(TrigObservable g, double shift = 0.0);

  Kind kind() const { return kind_; }
  double shift() const { return shift_; }
  Potential shifted(double c) const;

  double operator()(const System& sys, const Point& x) const;
  /// The value if the potential does not depend on the point for this
  /// system (constants, and the stable potential of a linear map).
  std::optional<double> constant_value(const System& sys) const;

 private:
  Kind kind_ = Kind::Constant;
  double shift_ = 0.0;
  FrameOptions frame_;
  TrigObservable g_;
};

/// sum_{i<n} phi(f^i x).
double birkhoff_sum(const System& sys, const Potential& phi, const Point& x, int n);

struct BowenBall {
  Point center;
  int n = 1;
  double eps = 0.0;
};

bool bowen_ball_contains(const System& sys, const BowenBall& ball, const Point& z);

/// max_{i<n} d(f^i p, f^i q).
double bowen_distance(const System& sys, const Point& p, const Point& q, int n);

/// Neighbour index for the greedy admission. Eigen keys cells in the
/// eigen-coordinates of the lattice point and needs a linear map with
/// n == 1 or ||A||_inf eps < 1/2; Cells keys eps-cells of p and f^{n-1} p
/// and always applies. Auto picks Eigen when it is valid.
enum class SeparationIndex { Auto, Cells, Eigen };

struct SeparatedSetOptions {
  /// NaN selects eps / 2.
  double grid_step = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t seed = 0;
  /// Upper bound on enumerated lattice points.
  std::uint64_t candidate_budget = 2'000'000'000ULL;
  /// Re-check separation of the result through an independent index.
  bool verify = true;
  SeparationIndex index = SeparationIndex::Auto;
};

struct SeparatedSet {
  std::vector<Point> points;
  int n = 0;
  double eps = 0.0;
  double grid_step = 0.0;
  double cover_radius = 0.0;  // in the d_n metric
  std::uint64_t candidates = 0;
  std::string grid;
  SeparationIndex index = SeparationIndex::Auto;  // the one actually used
};

/// Greedy (n, eps)-separated set over a seeded shuffle of a lattice adapted
/// to the eigenframe of A: steps along expanding eigenvectors are scaled by
/// |lambda|^{-(n-1)} so that the grid covers the torus in the d_n metric.
/// Toral systems with real spectrum only.
SeparatedSet maximal_separated_set(const System& sys, int n, double eps,
                                   const SeparatedSetOptions& opt = {});

/// Brute-force check; quadratic, for small sets.
bool is_separated(const System& sys, const std::vector<Point>& pts, int n, double eps);

/// Hash-indexed check of the same property for large sets.
bool verify_separated(const System& sys, const std::vector<Point>& pts, int n, double eps,
                      SeparationIndex index = SeparationIndex::Auto);

struct PressureEstimate {
  double epsilon = 0.0;
  std::vector<int> ns;
  std::vector<double> P;  // (1/n) log sum_y exp(S_n phi(y))
  std::vector<std::size_t> cardinality;
  /// Least-squares fit n P_n ~ slope n + intercept.
  double extrapolated = 0.0;
  double intercept = 0.0;
};

PressureEstimate pressure_estimate(const System& sys, const Potential& phi, double eps,
                                   const std::vector<int>& n_range,
                                   const SeparatedSetOptions& opt = {}, unsigned threads = 1);

/// Pressure from ready-made separated sets (one per n).
PressureEstimate pressure_from_sets(const System& sys, const Potential& phi,
                                    const std::vector<SeparatedSet>& sets, unsigned threads = 1);

struct BallMeasure {
  double estimate = 0.0;
  double stderr_ = 0.0;
  std::uint64_t hits = 0;
  std::uint64_t samples = 0;
  bool zero_hits = false;
  /// estimate / exp(S_n Phi^s(y) - n log d).
  double ratio = 0.0;
};

/// Haar (normalized Lebesgue on U) mass of B_n(y, eps) by uniform sampling
/// in the Euclidean ball B(y, eps), which contains the Bowen ball.
BallMeasure bowen_ball_measure(const System& sys, const BowenBall& ball,
                               std::uint64_t num_samples, std::uint64_t seed,
                               unsigned threads = 1);

/// Cloud mass of the ball.
BallMeasure bowen_ball_measure(const System& sys, const WeightedAtomCloud& cloud,
                               const BowenBall& ball);

struct TubeVolume {
  double volume = 0.0;
  double stderr_ = 0.0;
  std::uint64_t hits = 0;
  std::uint64_t samples = 0;
  /// volume / exp(S_n Phi^s(y)).
  double ratio = 0.0;
};

/// Lebesgue volume of f^n(B_n(y, eps)): z is uniform in a ball around f^n y
/// that contains the image, and counts when a branch of its depth-n
/// preimage tree stays in the Bowen ball.
TubeVolume tubular_volume(const System& sys, const Point& y, int n, double eps,
                          std::uint64_t num_samples, std::uint64_t seed, unsigned threads = 1,
                          const NewtonConfig& newton = {});

/// Volume of the Euclidean d-ball of radius r.
double ball_volume(int d, double r);

void write_pressure_csv(std::ostream& os, const PressureEstimate& p);

}  // namespace rlab
