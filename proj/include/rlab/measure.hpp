#pragma once

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "rlab/inverse.hpp"
#include "rlab/kernels.hpp"
#include "rlab/point.hpp"
#include "rlab/rng.hpp"
#include "rlab/system.hpp"

namespace rlab {

struct TrigTerm {
  IntVector k;
  std::complex<double> c;
};

/// Finite Fourier sum g(x) = sum_k c_k exp(2 pi i k.x) on the angle chart.
class TrigObservable {
 public:
  TrigObservable() = default;
  explicit TrigObservable(int dim) : dim_(dim) {}

  static TrigObservable constant(int dim, double c);
  static TrigObservable character(const IntVector& k);
  /// amp * cos(2 pi k.x)
  static TrigObservable cosine(const IntVector& k, double amp = 1.0);
  /// amp * sin(2 pi k.x)
  static TrigObservable sine(const IntVector& k, double amp = 1.0);

  int dim() const { return dim_; }
  const std::vector<TrigTerm>& terms() const { return terms_; }

  /// Adds c to the coefficient of k, merging repeated frequencies.
  void add(const IntVector& k, std::complex<double> c);

  std::complex<double> operator()(std::span<const double> x) const;
  /// Coefficients satisfy c_{-k} = conj(c_k).
  bool is_real() const;
  /// sum |c_k|, an upper bound for sup |g|.
  double sup_bound() const;

  TrigObservable scaled(std::complex<double> a) const;
  friend TrigObservable operator+(const TrigObservable& a, const TrigObservable& b);

 private:
  int dim_ = 0;
  std::vector<TrigTerm> terms_;
};

/// Finite weighted point measure.
class WeightedAtomCloud {
 public:
  WeightedAtomCloud() = default;
  explicit WeightedAtomCloud(int dim) : dim_(dim) {}

  int dim() const { return dim_; }
  std::size_t size() const { return points_.size(); }
  const Point& point(std::size_t i) const { return points_[i]; }
  double weight(std::size_t i) const { return weights_[i]; }
  const std::vector<Point>& points() const { return points_; }
  const std::vector<double>& weights() const { return weights_; }

  void add(const Point& p, double w);
  void reserve(std::size_t n);
  double total_weight() const;
  void normalize();

  /// Sorts atoms lexicographically and merges atoms whose coordinates agree
  /// within tol (torus coordinates compared modulo 1).
  void merge(const System& sys, double tol = 1e-12);

  /// Atom count before any merging (n d^n for an unpruned inverse cloud).
  std::uint64_t raw_atom_count = 0;

 private:
  int dim_ = 0;
  std::vector<Point> points_;
  std::vector<double> weights_;
};

struct EmpiricalOptions {
  TreeOptions tree;
  /// Use f^i y for i = 0..n-1 instead of i = 1..n.
  bool include_level_n = false;
  bool merge = true;
};

/// mu_n^z: the average over i of the uniform measures on the tree levels
/// that equal f^i(f^{-n} z).
WeightedAtomCloud build_inverse_empirical(const System& sys, const Point& z, int n,
                                          const EmpiricalOptions& opt = {});

/// Tree levels making up mu_n^z, in increasing order.
std::vector<int> empirical_levels(int n, bool include_level_n);

/// N Lebesgue-uniform points of U, weight 1/N each.
WeightedAtomCloud haar_cloud(const System& sys, std::size_t n, std::uint64_t seed);

/// A uniform point of U (Toral) or of the basin V (PerturbedSkew, radial
/// half-width v_margin), drawn from `rng`.
Point sample_region(const System& sys, CounterRng& rng, double half_width);

std::complex<double> integrate(const System& sys, const WeightedAtomCloud& cloud,
                               const TrigObservable& g);

/// All k with |k|_inf <= K in lexicographic order.
std::vector<IntVector> frequency_box(int dim, int K);

/// cloud-hat(k) = sum_a w_a exp(-2 pi i k.x_a) for every k, on the angle
/// chart. Partial sums are combined in a fixed chunk order.
std::vector<std::complex<double>> fourier_coefficients(
    const System& sys, std::span<const Point> points, std::span<const double> weights,
    const std::vector<IntVector>& ks, unsigned threads = 1,
    const kernels::KernelTable& kt = kernels::active());

std::vector<std::complex<double>> fourier_coefficients(
    const System& sys, const WeightedAtomCloud& cloud, const std::vector<IntVector>& ks,
    unsigned threads = 1, const kernels::KernelTable& kt = kernels::active());

std::complex<double> fourier_coefficient(const System& sys, const WeightedAtomCloud& cloud,
                                         const IntVector& k);

struct FourierReport {
  std::vector<IntVector> ks;
  std::vector<std::complex<double>> coefficients;
  double discrepancy = 0.0;
  IntVector worst_k;
};

/// Against Haar when `reference` is null, else against the given cloud.
FourierReport fourier_discrepancy(const System& sys, const WeightedAtomCloud& cloud,
                                  const WeightedAtomCloud* reference, int K,
                                  unsigned threads = 1);

/// Discrepancy from precomputed coefficient tables over frequency_box(dim, K).
double discrepancy_from(const std::vector<IntVector>& ks,
                        const std::vector<std::complex<double>>& a,
                        const std::vector<std::complex<double>>* b);

struct ConvergenceRow {
  int n = 0;
  double mean_discrepancy = 0.0;
  double max_discrepancy = 0.0;
};

struct ConvergenceOptions {
  EmpiricalOptions empirical;
  /// Reference depth for PerturbedSkew; 0 means max(n_list).
  int n_ref = 0;
};

/// Average over num_z sampled roots of the discrepancy of mu_n^z against
/// Haar (Toral) or against mu_{n_ref}^z (PerturbedSkew).
std::vector<ConvergenceRow> convergence_experiment(const System& sys,
                                                   const std::vector<int>& n_list, int num_z,
                                                   int K, std::uint64_t seed,
                                                   const ConvergenceOptions& opt = {});

struct Histogram {
  int dims = 0;
  int bins = 0;
  std::vector<double> mass;  // row-major, first torus coordinate slowest
};

Histogram histogram(const System& sys, const WeightedAtomCloud& cloud, int bins_per_axis);

void write_atoms_csv(std::ostream& os, const WeightedAtomCloud& cloud);
void write_fourier_csv(std::ostream& os, const FourierReport& r);
void write_histogram_csv(std::ostream& os, const Histogram& h);
void write_histogram_svg(std::ostream& os, const Histogram& h);

}  // namespace rlab
