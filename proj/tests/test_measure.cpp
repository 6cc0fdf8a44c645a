#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numbers>

#include "rlab/errors.hpp"
#include "rlab/lattice.hpp"
#include "rlab/measure.hpp"
#include "support.hpp"

using namespace rlab;
using rlab::test::random_point;

namespace {

// Uniform measure on the level-L preimages of z under x -> A x: its k-th
// coefficient is exp(-2 pi i j.z) when k = (A^T)^L j for an integer j, and
// zero otherwise. Exact integer arithmetic throughout.
std::complex<double> level_oracle(const IntMatrix& A, const Point& z, int L, const IntVector& k) {
  const int m = static_cast<int>(A.rows());
  IntMatrix B = IntMatrix::Identity(m, m);
  for (int i = 0; i < L; ++i) B = B * A.transpose();
  const long long det = int_det(B);
  const IntVector num = adjugate(B) * k;
  double phase = 0.0;
  for (int i = 0; i < m; ++i) {
    if (num[i] % det != 0) return 0.0;
    phase += static_cast<double>(num[i] / det) * z[i];
  }
  return std::polar(1.0, -2.0 * std::numbers::pi * phase);
}

std::complex<double> cloud_oracle(const IntMatrix& A, const Point& z, const std::vector<int>& levels,
                                  const IntVector& k) {
  std::complex<double> s = 0.0;
  for (int L : levels) s += level_oracle(A, z, L, k);
  return s / static_cast<double>(levels.size());
}

}  // namespace

TEST_CASE("empirical levels") {
  CHECK(empirical_levels(3, false) == std::vector<int>{0, 1, 2});
  CHECK(empirical_levels(3, true) == std::vector<int>{1, 2, 3});
}

TEST_CASE("frequency box") {
  const auto ks = frequency_box(2, 3);
  CHECK(ks.size() == 49);
  CHECK(ks.front() == IntVector::Constant(2, -3));
  CHECK(ks.back() == IntVector::Constant(2, 3));
  for (std::size_t i = 1; i < ks.size(); ++i)
    CHECK(std::lexicographical_compare(ks[i - 1].begin(), ks[i - 1].end(), ks[i].begin(), ks[i].end()));
  CHECK(frequency_box(3, 1).size() == 27);
}

TEST_CASE("trigonometric observables") {
  IntVector k(2);
  k << 1, -2;
  const auto c = TrigObservable::cosine(k, 3.0);
  const double x[2] = {0.1, 0.35};
  CHECK(c(std::span<const double>(x, 2)).real() ==
        doctest::Approx(3.0 * std::cos(2 * std::numbers::pi * (0.1 - 0.7))));
  CHECK(std::abs(c(std::span<const double>(x, 2)).imag()) < 1e-15);
  CHECK(c.is_real());
  CHECK(c.sup_bound() == doctest::Approx(3.0));
  CHECK_FALSE(TrigObservable::character(k).is_real());
  auto g = c + c.scaled(-1.0);
  CHECK(g(std::span<const double>(x, 2)) == std::complex<double>(0.0, 0.0));
  const auto s = TrigObservable::sine(k);
  CHECK(s(std::span<const double>(x, 2)).real() ==
        doctest::Approx(std::sin(2 * std::numbers::pi * (0.1 - 0.7))));
}

TEST_CASE("inverse cloud matches the character-sum oracle coefficient by coefficient") {
  struct Case {
    System sys;
    int n;
    int K;
  };
  for (const auto& c : {Case{catalog::toral_2122(), 10, 3}, Case{catalog::toral_2223(), 10, 3},
                        Case{catalog::doubling_map(), 12, 5}, Case{catalog::example3_product(), 6, 2}}) {
    for (bool last : {false, true}) {
      const Point z = random_point(c.sys, 31, last ? 1 : 0);
      EmpiricalOptions o;
      o.include_level_n = last;
      const auto cloud = build_inverse_empirical(c.sys, z, c.n, o);
      const auto ks = frequency_box(c.sys.chart_dim(), c.K);
      const auto got = fourier_coefficients(c.sys, cloud, ks);
      const auto levels = empirical_levels(c.n, last);
      for (std::size_t i = 0; i < ks.size(); ++i)
        CHECK(std::abs(got[i] - cloud_oracle(c.sys.matrix(), z, levels, ks[i])) < 1e-10);
    }
  }
}

TEST_CASE("inverse cloud bookkeeping") {
  const System s = catalog::toral_2122();
  EmpiricalOptions raw;
  raw.merge = false;
  const auto a = build_inverse_empirical(s, Point{0.3, 0.2}, 8, raw);
  const auto b = build_inverse_empirical(s, Point{0.3, 0.2}, 8);
  CHECK(a.total_weight() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(b.total_weight() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(a.raw_atom_count == 8u * 256u);
  CHECK(b.size() == 255u);  // distinct tree nodes of levels 0..7
  const auto ks = frequency_box(2, 2);
  const auto fa = fourier_coefficients(s, a, ks), fb = fourier_coefficients(s, b, ks);
  for (std::size_t i = 0; i < ks.size(); ++i) CHECK(std::abs(fa[i] - fb[i]) < 1e-12);
}

TEST_CASE("skew cloud stays in the region with unit mass") {
  const System s = catalog::example4_perturbed(0.02);
  const auto cloud = build_inverse_empirical(s, Point{1.0, 0.0, 0.2, 0.5}, 5);
  CHECK(cloud.total_weight() == doctest::Approx(1.0).epsilon(1e-12));
  for (std::size_t i = 0; i < cloud.size(); ++i) CHECK(in_region(s, cloud.point(i)));
}

TEST_CASE("integrate is the conjugate coefficient and merging preserves it") {
  const System s = catalog::example3_product();
  const auto cloud = haar_cloud(s, 2000, 5);
  CHECK(integrate(s, cloud, TrigObservable::constant(3, 2.5)).real() ==
        doctest::Approx(2.5).epsilon(1e-12));
  IntVector k(3);
  k << 1, -1, 2;
  CHECK(std::abs(integrate(s, cloud, TrigObservable::character(k)) -
                 std::conj(fourier_coefficient(s, cloud, k))) < 1e-12);
  WeightedAtomCloud dup(3);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    dup.add(cloud.point(i), 0.5 * cloud.weight(i));
    dup.add(cloud.point(i), 0.5 * cloud.weight(i));
  }
  dup.merge(s);
  CHECK(dup.size() == cloud.size());
  CHECK(std::abs(fourier_coefficient(s, dup, k) - fourier_coefficient(s, cloud, k)) < 1e-12);
}

TEST_CASE("Haar samples have small coefficients") {
  for (const System& s : {catalog::toral_2122(), catalog::example4_perturbed(0.02)}) {
    const std::size_t N = 20000;
    const auto cloud = haar_cloud(s, N, 6);
    const auto rep = fourier_discrepancy(s, cloud, nullptr, 2);
    CHECK(rep.discrepancy < 5.0 / std::sqrt(static_cast<double>(N)));
  }
}

TEST_CASE("discrepancy against itself is zero and threads do not matter") {
  const System s = catalog::toral_2223();
  const auto cloud = build_inverse_empirical(s, Point{0.1, 0.9}, 8);
  CHECK(fourier_discrepancy(s, cloud, &cloud, 3).discrepancy == 0.0);
  const auto a = fourier_discrepancy(s, cloud, nullptr, 3, 1);
  const auto b = fourier_discrepancy(s, cloud, nullptr, 3, 4);
  CHECK(a.discrepancy == b.discrepancy);
  for (std::size_t i = 0; i < a.coefficients.size(); ++i) CHECK(a.coefficients[i] == b.coefficients[i]);
}

TEST_CASE("convergence experiment decreases for a toral map") {
  const auto rows = convergence_experiment(catalog::toral_2122(), {4, 6, 8, 10}, 5, 3, 7);
  REQUIRE(rows.size() == 4);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    CHECK(rows[i].mean_discrepancy <= rows[i - 1].mean_discrepancy + 1e-12);
    CHECK(rows[i].max_discrepancy >= rows[i].mean_discrepancy);
  }
}

TEST_CASE("histogram carries the cloud mass") {
  const System s = catalog::toral_2122();
  const auto cloud = haar_cloud(s, 1000, 8);
  const auto h = histogram(s, cloud, 10);
  CHECK(h.mass.size() == 100u);
  double t = 0.0;
  for (double m : h.mass) t += m;
  CHECK(t == doctest::Approx(1.0).epsilon(1e-12));
}
