#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>

#include "rlab/kernels.hpp"
#include "rlab/measure.hpp"
#include "support.hpp"

using namespace rlab;
using namespace rlab::kernels;

namespace {

const KernelTable* vector_table() {
  const KernelTable* t = avx2_table();
  return t && cpu_supports(Isa::Avx2) ? t : nullptr;
}

std::vector<double> draws(std::size_t n, std::uint64_t idx, double lo, double hi) {
  CounterRng r(77, test::kTestPurpose, idx);
  std::vector<double> v(n);
  for (auto& x : v) x = r.uniform(lo, hi);
  return v;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("active table is one of the compiled variants") {
  const KernelTable& a = active();
  CHECK((a.isa == Isa::Scalar || (a.isa == Isa::Avx2 && cpu_supports(Isa::Avx2))));
  CHECK(scalar_table().isa == Isa::Scalar);
}

TEST_CASE("scalar kernels on hand-computed input") {
  const KernelTable& s = scalar_table();
  const double A[4] = {2, 1, 2, 2};
  std::vector<double> x0{0.3, 0.9}, x1{0.4, 0.05}, y0(2), y1(2);
  const double* in[2] = {x0.data(), x1.data()};
  double* out[2] = {y0.data(), y1.data()};
  s.linear_mod1(A, 2, in, out, 2);
  CHECK(y0[0] == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(y1[0] == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(y0[1] == doctest::Approx(0.85).epsilon(1e-15));
  CHECK(y1[1] == doctest::Approx(0.9).epsilon(1e-15));

  const double c[2] = {0.95, 0.5};
  std::vector<double> d(2);
  s.wrapped_dist2(c, 2, in, d.data(), 2);
  CHECK(d[0] == doctest::Approx(0.35 * 0.35 + 0.1 * 0.1));
  CHECK(d[1] == doctest::Approx(0.05 * 0.05 + 0.45 * 0.45));

  double re = 0, im = 0;
  const double w[3] = {1, 2, 3}, r[3] = {1, 1, 1}, i3[3] = {0, 1, 2};
  s.weighted_sum2(w, r, i3, 3, &re, &im);
  CHECK(re == 6.0);
  CHECK(im == 8.0);
}

TEST_CASE("vector kernels reproduce the scalar reference") {
  const KernelTable* v = vector_table();
  if (!v) {
    MESSAGE("AVX2 variant unavailable on this host; equivalence not exercised");
    return;
  }
  const KernelTable& s = scalar_table();
  for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 8u, 17u, 64u, 1001u}) {
    CAPTURE(n);
    for (int m = 1; m <= 3; ++m) {
      std::vector<double> A(m * m);
      CounterRng r(3, test::kTestPurpose, static_cast<std::uint64_t>(n * 10 + m));
      for (auto& a : A) a = static_cast<double>(static_cast<int>(r.below(7)) - 3);
      std::vector<std::vector<double>> x(m), ys(m, std::vector<double>(n)), yv(m, std::vector<double>(n));
      std::vector<const double*> in(m);
      std::vector<double*> os(m), ov(m);
      for (int k = 0; k < m; ++k) {
        x[k] = draws(n, 100 + k, -2.0, 3.0);
        in[k] = x[k].data();
        os[k] = ys[k].data();
        ov[k] = yv[k].data();
      }
      s.linear_mod1(A.data(), m, in.data(), os.data(), n);
      v->linear_mod1(A.data(), m, in.data(), ov.data(), n);
      for (int k = 0; k < m; ++k) CHECK(same_bits(ys[k], yv[k]));

      std::vector<double> c = draws(m, 200, 0.0, 1.0), ds(n), dv(n);
      s.wrapped_dist2(c.data(), m, in.data(), ds.data(), n);
      v->wrapped_dist2(c.data(), m, in.data(), dv.data(), n);
      CHECK(same_bits(ds, dv));
    }
    const auto ar = draws(n, 1, -1, 1), ai = draws(n, 2, -1, 1), br = draws(n, 3, -1, 1),
               bi = draws(n, 4, -1, 1);
    for (bool conj : {false, true}) {
      std::vector<double> rs(n), is(n), rv(n), iv(n);
      s.complex_mul(ar.data(), ai.data(), br.data(), bi.data(), conj, rs.data(), is.data(), n);
      v->complex_mul(ar.data(), ai.data(), br.data(), bi.data(), conj, rv.data(), iv.data(), n);
      CHECK(same_bits(rs, rv));
      CHECK(same_bits(is, iv));
    }
    const auto w = draws(n, 5, 0, 1);
    double sr = 0, si = 0, vr = 0, vi = 0;
    s.weighted_sum2(w.data(), ar.data(), ai.data(), n, &sr, &si);
    v->weighted_sum2(w.data(), ar.data(), ai.data(), n, &vr, &vi);
    CHECK(vr == doctest::Approx(sr).epsilon(1e-12).scale(1.0));
    CHECK(vi == doctest::Approx(si).epsilon(1e-12).scale(1.0));
  }
}

TEST_CASE("fourier coefficients agree across kernel variants") {
  const KernelTable* v = vector_table();
  if (!v) {
    MESSAGE("AVX2 variant unavailable on this host; equivalence not exercised");
    return;
  }
  for (const System& sys : {catalog::toral_2122(), catalog::example4_perturbed(0.02)}) {
    const auto cloud = haar_cloud(sys, 5003, 4);
    const auto ks = frequency_box(sys.chart_dim(), 2);
    const auto a = fourier_coefficients(sys, cloud, ks, 1, scalar_table());
    const auto b = fourier_coefficients(sys, cloud, ks, 1, *v);
    for (std::size_t i = 0; i < ks.size(); ++i) CHECK(std::abs(a[i] - b[i]) < 1e-12);
  }
}
