#pragma once

#include <complex>
#include <string>
#include <vector>

#include "rlab/point.hpp"

namespace rlab {

enum class Variant { Toral, PerturbedSkew };

/// One catalogued endomorphism.
///
/// Toral: the map x -> A x mod 1 on the m-torus.
/// PerturbedSkew: the map on (annulus) x T^2 given in the affine chart of the
/// projective line by
///   z      -> z^2 + eps * exp(2 pi i <a_1, u>)
///   u      -> A u + eps * (sin(2 pi (u_1 + u_2)), cos^2(4 pi u_1))   mod 1
/// where a_1 is the first row of the 2x2 matrix A. With A = [[2,1],[2,2]]
/// this is the perturbed product on P^1 x T^2 whose repellor stays near
/// S^1 x T^2 for small eps.
class System {
 public:
  static System toral(const IntMatrix& A);
  static System perturbed_skew(const IntMatrix& A, double epsilon, double delta = 0.1);

  Variant variant() const { return variant_; }
  const IntMatrix& matrix() const { return A_; }
  double epsilon() const { return eps_; }
  double delta() const { return delta_; }

  /// Real dimension q of the phase space.
  int dim() const { return variant_ == Variant::Toral ? m_ : 4; }
  /// Dimension of the torus factor (m for Toral, 2 for PerturbedSkew).
  int torus_dim() const { return m_; }
  /// Index of the first torus coordinate inside a Point.
  int torus_offset() const { return variant_ == Variant::Toral ? 0 : 2; }
  /// Dimension of the angle chart used by trigonometric observables.
  int chart_dim() const { return variant_ == Variant::Toral ? m_ : 3; }
  /// Number of preimages of a point of the repellor.
  int degree() const { return degree_; }
  long long det() const { return det_; }

  /// Derivative cocycle is the same matrix at every point.
  bool constant_jacobian() const { return variant_ == Variant::Toral; }

  /// Real matrix A as doubles and its inverse.
  const Mat& matrix_real() const { return Ar_; }
  const Mat& matrix_inverse() const { return Ainv_; }

  /// Eigenvalues of the linear part (for PerturbedSkew: of diag(2, A)).
  std::vector<std::complex<double>> linear_eigenvalues() const;

  /// Upper bound on the operator norm of Df over the region U.
  double lipschitz_bound() const;

  std::string describe() const;

 private:
  Variant variant_ = Variant::Toral;
  IntMatrix A_;
  Mat Ar_;
  Mat Ainv_;
  int m_ = 0;
  long long det_ = 0;
  int degree_ = 0;
  double eps_ = 0.0;
  double delta_ = 0.1;
};

/// f(p).
Point apply(const System& sys, const Point& p);

/// Derivative of the lifted map at p, a q x q real matrix.
Mat jacobian(const System& sys, const Point& p);

/// Flat product metric: torus coordinates use the shortest integer
/// translate, planar coordinates are Euclidean.
double distance(const System& sys, const Point& p, const Point& q);

/// Componentwise displacement q - p with torus coordinates wrapped into
/// [-1/2, 1/2].
Vec displacement(const System& sys, const Point& p, const Point& q);

/// Reduces torus coordinates mod 1.
Point reduce(const System& sys, Point p);

/// Membership in the repellor neighbourhood U (the whole torus for Toral,
/// the annulus ||z|-1| < delta times T^2 for PerturbedSkew).
bool in_region(const System& sys, const Point& p);

/// Membership in the basin V: for PerturbedSkew ||z|-1| < v_margin.
bool in_basin(const System& sys, const Point& p, double v_margin);

/// Default basin half-width: 0.5 * delta for PerturbedSkew.
double default_v_margin(const System& sys);

/// Angle-chart coordinates in [0,1)^chart_dim: the torus coordinates, with
/// arg(z)/2pi prepended for PerturbedSkew.
void chart(const System& sys, const Point& p, std::span<double> out);

/// Lifted map on R^q (torus coordinates not reduced). Satisfies
/// lift(p + w) = lift(p) + A w for integer shifts w of the torus coordinates.
Point apply_lift(const System& sys, const Point& p);

namespace catalog {

IntMatrix matrix(std::initializer_list<std::initializer_list<long long>> rows);

/// x -> 2x on the circle.
System doubling_map();
/// A = [[2,1],[2,2]].
System toral_2122();
/// A = [[2,2],[2,3]].
System toral_2223();
/// The product z -> z^2 on S^1 with A = [[2,2],[2,3]], written on T^3 as
/// diag(2, [[2,2],[2,3]]).
System example3_product();
/// The perturbed skew product with A = [[2,1],[2,2]].
System example4_perturbed(double epsilon, double delta = 0.1);

}  // namespace catalog

}  // namespace rlab
