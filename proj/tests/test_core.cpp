#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numbers>

#include "rlab/errors.hpp"
#include "rlab/lattice.hpp"
#include "rlab/parallel.hpp"
#include "rlab/rng.hpp"
#include "support.hpp"

using namespace rlab;
using rlab::test::random_point;

TEST_CASE("toral map is A x mod 1") {
  const System s = catalog::toral_2122();
  const Point y = apply(s, Point{0.3, 0.4});
  CHECK(y[0] == doctest::Approx(0.0).epsilon(1e-15));  // 2*0.3 + 0.4 = 1.0
  CHECK(y[1] == doctest::Approx(0.4).epsilon(1e-15));  // 0.6 + 0.8 = 1.4
  CHECK(apply(catalog::doubling_map(), Point{0.75})[0] == 0.5);
}

TEST_CASE("degrees and determinants") {
  CHECK(catalog::doubling_map().degree() == 2);
  CHECK(catalog::toral_2122().degree() == 2);
  CHECK(catalog::toral_2223().degree() == 2);
  CHECK(catalog::example3_product().degree() == 4);
  CHECK(catalog::example4_perturbed(0.01).degree() == 4);
}

TEST_CASE("non-hyperbolic and singular matrices are refused") {
  CHECK_THROWS_AS(System::toral(catalog::matrix({{2, 0}, {0, 1}})), NotHyperbolic);
  CHECK_THROWS_AS(System::toral(catalog::matrix({{2, 0, 0}, {0, 0, -1}, {0, 1, 0}})),
                  NotHyperbolic);
  CHECK_THROWS_AS(System::toral(catalog::matrix({{1, 2}, {2, 4}})), DegenerateMatrix);
}

TEST_CASE("integer determinant and adjugate") {
  const IntMatrix A = catalog::matrix({{2, 0, 0}, {0, 2, 2}, {0, 2, 3}});
  CHECK(int_det(A) == 4);
  const IntMatrix P = adjugate(A) * A;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(P(i, j) == (i == j ? 4 : 0));
}

TEST_CASE("jacobian agrees with central differences") {
  for (const System& s : test::catalogue()) {
    for (std::uint64_t i = 0; i < 20; ++i) {
      const Point p = random_point(s, 11, i);
      const Mat J = jacobian(s, p);
      const double h = 1e-6;
      for (int j = 0; j < s.dim(); ++j) {
        Point a = p, b = p;
        a[j] += h;
        b[j] -= h;
        const Point fa = apply_lift(s, a), fb = apply_lift(s, b);
        for (int k = 0; k < s.dim(); ++k)
          CHECK(J(k, j) == doctest::Approx((fa[k] - fb[k]) / (2 * h)).epsilon(1e-6));
      }
    }
  }
}

TEST_CASE("lift is equivariant under integer shifts of the torus") {
  for (const System& s : test::catalogue()) {
    const int off = s.torus_offset();
    for (std::uint64_t i = 0; i < 20; ++i) {
      const Point p = random_point(s, 12, i);
      Point q = p;
      IntVector w(s.torus_dim());
      for (int k = 0; k < s.torus_dim(); ++k) {
        w[k] = static_cast<long long>(i % 3) - 1 + k;
        q[off + k] += static_cast<double>(w[k]);
      }
      const Point fp = apply_lift(s, p), fq = apply_lift(s, q);
      const Vec Aw = s.matrix_real() * w.cast<double>();
      for (int k = 0; k < off; ++k) CHECK(fq[k] == doctest::Approx(fp[k]).epsilon(1e-12));
      for (int k = 0; k < s.torus_dim(); ++k)
        CHECK(fq[off + k] - fp[off + k] == doctest::Approx(Aw[k]).epsilon(1e-9));
    }
  }
}

TEST_CASE("distance is a metric on random triples") {
  for (const System& s : test::catalogue()) {
    for (std::uint64_t i = 0; i < 50; ++i) {
      const Point a = random_point(s, 13, 3 * i), b = random_point(s, 13, 3 * i + 1),
                  c = random_point(s, 13, 3 * i + 2);
      CHECK(distance(s, a, a) == 0.0);
      CHECK(distance(s, a, b) == distance(s, b, a));
      CHECK(distance(s, a, c) <= distance(s, a, b) + distance(s, b, c) + 1e-15);
      if (s.variant() == Variant::Toral) CHECK(distance(s, a, b) <= 0.5 * std::sqrt(s.dim()) + 1e-15);
    }
  }
}

TEST_CASE("torus distance wraps") {
  const System s = catalog::toral_2122();
  CHECK(distance(s, Point{0.01, 0.5}, Point{0.99, 0.5}) == doctest::Approx(0.02));
}

TEST_CASE("chart lies in the unit cube") {
  for (const System& s : test::catalogue()) {
    std::array<double, kMaxDim> c{};
    for (std::uint64_t i = 0; i < 50; ++i) {
      chart(s, random_point(s, 14, i), c);
      for (int k = 0; k < s.chart_dim(); ++k) {
        CHECK(c[k] >= 0.0);
        CHECK(c[k] < 1.0);
      }
    }
  }
}

TEST_CASE("region and basin membership for the skew product") {
  const System s = catalog::example4_perturbed(0.02);
  CHECK(in_region(s, Point{1.0, 0.0, 0.2, 0.3}));
  CHECK_FALSE(in_region(s, Point{1.2, 0.0, 0.2, 0.3}));
  CHECK(in_basin(s, Point{1.04, 0.0, 0.2, 0.3}, 0.05));
  CHECK_FALSE(in_basin(s, Point{1.06, 0.0, 0.2, 0.3}, 0.05));
}

TEST_CASE("skew product at zero perturbation splits") {
  const System s = catalog::example4_perturbed(0.0);
  const double th = 0.3;
  const Point p{std::cos(2 * std::numbers::pi * th), std::sin(2 * std::numbers::pi * th), 0.2, 0.7};
  const Point y = apply(s, p);
  CHECK(std::atan2(y[1], y[0]) == doctest::Approx(std::remainder(4 * std::numbers::pi * th, 2 * std::numbers::pi)));
  const Point t = apply(catalog::toral_2122(), Point{0.2, 0.7});
  CHECK(y[2] == doctest::Approx(t[0]).epsilon(1e-14));
  CHECK(y[3] == doctest::Approx(t[1]).epsilon(1e-14));
}

TEST_CASE("philox known-answer vectors") {
  // Reference outputs of the Random123 distribution (kat_vectors).
  const auto z = philox4x32({0, 0, 0, 0}, {0, 0});
  CHECK(z[0] == 0x6627e8d5u);
  CHECK(z[1] == 0xe169c58du);
  CHECK(z[2] == 0xbc57ac4cu);
  CHECK(z[3] == 0x9b00dbd8u);
  const auto f = philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                            {0xffffffffu, 0xffffffffu});
  CHECK(f[0] == 0x408f276du);
  CHECK(f[1] == 0x41c83b0eu);
  CHECK(f[2] == 0xa20bc7c6u);
  CHECK(f[3] == 0x6d5451fdu);
}

TEST_CASE("counter streams are reproducible and distinct") {
  CounterRng a(5, 1, 7), b(5, 1, 7), c(5, 1, 8), d(5, 2, 7);
  for (int i = 0; i < 10; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    CHECK(x != c.next_u64());
    CHECK(x != d.next_u64());
  }
}

TEST_CASE("uniform draws have the right mean and bounded integers") {
  CounterRng r(9, 3, 0);
  double s = 0.0;
  const int N = 200000;
  for (int i = 0; i < N; ++i) {
    const double u = r.uniform();
    CHECK_UNARY(u >= 0.0 && u < 1.0);
    s += u;
  }
  CHECK(std::abs(s / N - 0.5) < 4.0 * std::sqrt(1.0 / 12.0 / N));
  std::array<int, 3> counts{};
  for (int i = 0; i < 30000; ++i) ++counts[r.below(3)];
  for (int c : counts) CHECK(std::abs(c - 10000) < 400);
}

TEST_CASE("chunked reductions do not depend on the thread count") {
  const std::size_t N = 100003;
  auto run = [&](unsigned t) {
    std::vector<double> part(Executor::chunk_count(N, 1000), 0.0);
    Executor(t).for_chunks(N, 1000, [&](std::size_t c, std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) part[c] += 1.0 / (1.0 + static_cast<double>(i));
    });
    double s = 0.0;
    for (double v : part) s += v;
    return s;
  };
  const double one = run(1);
  CHECK(run(2) == one);
  CHECK(run(4) == one);
  CHECK(run(7) == one);
}

TEST_CASE("executor rethrows the lowest failing chunk") {
  try {
    Executor(4).for_chunks(100, 10, [](std::size_t c, std::size_t, std::size_t) {
      if (c == 3 || c == 7) throw InvalidArgument("chunk " + std::to_string(c));
    });
    FAIL("no exception");
  } catch (const InvalidArgument& e) {
    CHECK(std::string(e.what()) == "chunk 3");
  }
}
