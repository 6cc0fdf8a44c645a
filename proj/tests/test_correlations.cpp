#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "rlab/correlations.hpp"
#include "rlab/inverse.hpp"
#include "support.hpp"

using namespace rlab;

namespace {

IntVector vec2(long long a, long long b) {
  IntVector k(2);
  k << a, b;
  return k;
}

// For a toral map psi(f^n x) = cos(2 pi ((A^T)^n j).x), so every term of C_n
// is a real part of a cloud Fourier coefficient:
//   <cos(2 pi k.x) cos(2 pi m.x)> = (Re c(k+m) + Re c(k-m)) / 2.
double pair_oracle(const System& s, const WeightedAtomCloud& c, const IntVector& k, const IntVector& j,
                   int n) {
  IntVector m = j;
  for (int i = 0; i < n; ++i) m = s.matrix().transpose() * m;
  const double joint =
      0.5 * (fourier_coefficient(s, c, k + m).real() + fourier_coefficient(s, c, k - m).real());
  return joint - fourier_coefficient(s, c, k).real() * fourier_coefficient(s, c, j).real();
}

}  // namespace

TEST_CASE("constant observables do not correlate") {
  const System s = catalog::toral_2122();
  const auto cloud = haar_cloud(s, 1000, 1);
  const auto seq = correlation_sequence(s, cloud, TrigObservable::cosine(vec2(1, 0)),
                                        TrigObservable::constant(2, 3.0), 5);
  for (double v : seq.values) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("Haar correlations of a character: half at lag zero, noise after") {
  const System s = catalog::toral_2223();
  const auto cloud = haar_cloud(s, 100000, 2);
  const auto c = TrigObservable::cosine(vec2(1, 0));
  const auto seq = correlation_sequence(s, cloud, c, c, 6);
  REQUIRE(seq.values.size() == 7);
  CHECK(seq.samples == 100000);
  CHECK(seq.n_eff == doctest::Approx(100000.0));
  CHECK(std::abs(seq.values[0] - 0.5) < 3 * seq.stderr_[0] + 1e-3);
  for (std::size_t n = 1; n < seq.values.size(); ++n)
    CHECK(std::abs(seq.values[n]) <= 3 * seq.stderr_[n] + 1e-12);
  CHECK(seq.noise_floor == doctest::Approx(3.0 / std::sqrt(100000.0)));
}

TEST_CASE("Haar sampling is invariant") {
  const System s = catalog::toral_2122();
  const auto cloud = haar_cloud(s, 50000, 3);
  // With phi = 1, C_1 = <psi o f> - <psi>.
  for (const auto& j : frequency_box(2, 2)) {
    const auto seq = correlation_sequence(s, cloud, TrigObservable::constant(2, 1.0), TrigObservable::cosine(j), 1);
    CHECK(std::abs(seq.values[1]) <= 3 * seq.stderr_[1] + 1e-12);
  }
}

TEST_CASE("Haar correlations follow the character-pair formula") {
  const System s = catalog::toral_2122();
  const auto cloud = haar_cloud(s, 20000, 4);
  const auto ks = frequency_box(2, 2);
  int outside = 0, total = 0;
  for (const auto& k : ks)
    for (const auto& j : ks) {
      if (k.isZero() || j.isZero()) continue;
      const auto seq = correlation_sequence(s, cloud, TrigObservable::cosine(k), TrigObservable::cosine(j), 6);
      IntVector m = j;
      for (int n = 0; n <= 6; ++n) {
        const double want = 0.5 * ((k == m ? 1.0 : 0.0) + (k == -m ? 1.0 : 0.0));
        ++total;
        if (std::abs(seq.values[n] - want) > 3 * seq.stderr_[n] + 1e-12) ++outside;
        m = s.matrix().transpose() * m;
      }
    }
  // 3 standard errors leave about 0.3% of the comparisons outside by chance.
  CAPTURE(outside);
  CHECK(outside <= total / 100);
}

TEST_CASE("correlations of characters match cloud Fourier coefficients") {
  for (const System& s : {catalog::toral_2122(), catalog::toral_2223()}) {
    const auto cloud = build_inverse_empirical(s, Point{0.23, 0.71}, 9);
    const IntVector k = vec2(1, -1), j = vec2(0, 2);
    const auto seq = correlation_sequence(s, cloud, TrigObservable::cosine(k), TrigObservable::cosine(j), 4);
    for (int n = 0; n <= 4; ++n) CHECK(std::abs(seq.values[n] - pair_oracle(s, cloud, k, j, n)) < 1e-12);
  }
}

TEST_CASE("correlations are bilinear") {
  const System s = catalog::example4_perturbed(0.02);
  const auto cloud = build_inverse_empirical(s, backward_orbit(s, Point{1, 0, 0.2, 0.3}, 60, 1).front(), 6);
  IntVector a(3), b(3);
  a << 1, 0, 1;
  b << 0, 1, -1;
  const auto fa = TrigObservable::cosine(a), fb = TrigObservable::sine(b);
  const auto psi = TrigObservable::cosine(b, 0.5);
  const auto sa = correlation_sequence(s, cloud, fa, psi, 3), sb = correlation_sequence(s, cloud, fb, psi, 3);
  const auto sc = correlation_sequence(s, cloud, fa.scaled(2.0) + fb.scaled(-3.0), psi, 3);
  for (int n = 0; n <= 3; ++n) CHECK(std::abs(sc.values[n] - (2 * sa.values[n] - 3 * sb.values[n])) < 1e-12);
}

TEST_CASE("thread count does not change the sequence") {
  const System s = catalog::example4_perturbed(0.02);
  const auto cloud = build_inverse_empirical(s, backward_orbit(s, Point{1, 0, 0.2, 0.3}, 60, 1).front(), 6);
  IntVector a(3);
  a << 1, 0, 0;
  const auto c = TrigObservable::cosine(a);
  CHECK(correlation_sequence(s, cloud, c, c, 5, 1).values == correlation_sequence(s, cloud, c, c, 5, 4).values);
}

TEST_CASE("decay fit on a synthetic geometric sequence") {
  std::vector<double> v;
  for (int n = 0; n <= 10; ++n) v.push_back(2.0 * std::pow(0.5, n));
  const auto f = decay_rate_fit(v, 1e-6);
  CHECK(f.status == FitStatus::Ok);
  CHECK(f.rate == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(f.prefactor == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(f.goodness == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(f.used.size() == 10);
  CHECK(f.used.front() == 1);

  const auto cut = decay_rate_fit(v, 2.0 * std::pow(0.5, 6));
  CHECK(cut.used == std::vector<int>{1, 2, 3, 4, 5});
}

TEST_CASE("decay fit refusals") {
  const auto z = decay_rate_fit(std::vector<double>(8, 0.0), 1e-3);
  CHECK(z.status == FitStatus::Inconclusive);
  CHECK(z.all_below_floor);
  CHECK(decay_rate_fit({1.0, 0.5, 0.25}, 1e-3).status == FitStatus::Inconclusive);
  CHECK(decay_rate_fit({1.0, 0.5, 0.6, 0.7, 0.8}, 1e-3).status == FitStatus::NonDecaying);
  CHECK(std::string(to_string(FitStatus::Ok)) != to_string(FitStatus::Inconclusive));
}

TEST_CASE("csv has one row per lag") {
  CorrelationSequence seq;
  seq.values = {0.5, 0.1, 0.01};
  seq.stderr_ = {0.0, 0.0, 0.0};
  std::ostringstream os;
  write_correlations_csv(os, seq);
  const std::string t = os.str();
  CHECK(std::count(t.begin(), t.end(), '\n') == 4);
}
