// Compiled with -mavx2 only. FMA is deliberately left disabled so that the
// element-wise kernels round exactly like the scalar reference.
#include <immintrin.h>

#include <cmath>

#include "rlab/kernels.hpp"

namespace rlab::kernels {
namespace {

inline __m256d mod1_pd(__m256d v) {
  const __m256d r = _mm256_sub_pd(v, _mm256_floor_pd(v));
  const __m256d ge1 = _mm256_cmp_pd(r, _mm256_set1_pd(1.0), _CMP_GE_OQ);
  return _mm256_blendv_pd(r, _mm256_setzero_pd(), ge1);
}

void linear_mod1(const double* A, int m, const double* const* in, double* const* out,
                 std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d x[4];
    for (int j = 0; j < m; ++j) x[j] = _mm256_loadu_pd(in[j] + i);
    for (int r = 0; r < m; ++r) {
      __m256d acc = _mm256_mul_pd(_mm256_set1_pd(A[r * m]), x[0]);
      for (int j = 1; j < m; ++j)
        acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_set1_pd(A[r * m + j]), x[j]));
      _mm256_storeu_pd(out[r] + i, mod1_pd(acc));
    }
  }
  for (; i < n; ++i) {
    for (int r = 0; r < m; ++r) {
      double acc = A[r * m] * in[0][i];
      for (int j = 1; j < m; ++j) acc = acc + A[r * m + j] * in[j][i];
      double v = acc - std::floor(acc);
      out[r][i] = v >= 1.0 ? 0.0 : v;
    }
  }
}

void wrapped_dist2(const double* c, int m, const double* const* x, double* out, std::size_t n) {
  std::size_t i = 0;
  const __m256d half = _mm256_set1_pd(0.5);
  for (; i + 4 <= n; i += 4) {
    __m256d acc = _mm256_setzero_pd();
    for (int d = 0; d < m; ++d) {
      const __m256d raw = _mm256_sub_pd(_mm256_loadu_pd(x[d] + i), _mm256_set1_pd(c[d]));
      const __m256d w = _mm256_sub_pd(raw, _mm256_ceil_pd(_mm256_sub_pd(raw, half)));
      acc = _mm256_add_pd(acc, _mm256_mul_pd(w, w));
    }
    _mm256_storeu_pd(out + i, acc);
  }
  for (; i < n; ++i) {
    double acc = 0.0;
    for (int d = 0; d < m; ++d) {
      const double raw = x[d][i] - c[d];
      const double w = raw - std::ceil(raw - 0.5);
      acc = acc + w * w;
    }
    out[i] = acc;
  }
}

void complex_mul(const double* are, const double* aim, const double* bre, const double* bim,
                 bool conj_b, double* ore, double* oim, std::size_t n) {
  const double s = conj_b ? -1.0 : 1.0;
  const __m256d vs = _mm256_set1_pd(s);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d br = _mm256_loadu_pd(bre + i);
    const __m256d bi = _mm256_mul_pd(vs, _mm256_loadu_pd(bim + i));
    const __m256d ar = _mm256_loadu_pd(are + i);
    const __m256d ai = _mm256_loadu_pd(aim + i);
    _mm256_storeu_pd(ore + i, _mm256_sub_pd(_mm256_mul_pd(ar, br), _mm256_mul_pd(ai, bi)));
    _mm256_storeu_pd(oim + i, _mm256_add_pd(_mm256_mul_pd(ar, bi), _mm256_mul_pd(ai, br)));
  }
  for (; i < n; ++i) {
    const double br = bre[i], bi = s * bim[i];
    const double ar = are[i], ai = aim[i];
    ore[i] = ar * br - ai * bi;
    oim[i] = ar * bi + ai * br;
  }
}

inline double hsum(__m256d v) {
  alignas(32) double t[4];
  _mm256_store_pd(t, v);
  return (t[0] + t[1]) + (t[2] + t[3]);
}

void weighted_sum2(const double* w, const double* re, const double* im, std::size_t n,
                   double* sre, double* sim) {
  __m256d a = _mm256_setzero_pd(), b = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d wv = _mm256_loadu_pd(w + i);
    a = _mm256_add_pd(a, _mm256_mul_pd(wv, _mm256_loadu_pd(re + i)));
    b = _mm256_add_pd(b, _mm256_mul_pd(wv, _mm256_loadu_pd(im + i)));
  }
  double ra = hsum(a), rb = hsum(b);
  for (; i < n; ++i) {
    ra += w[i] * re[i];
    rb += w[i] * im[i];
  }
  *sre = ra;
  *sim = rb;
}

}  // namespace

const KernelTable* avx2_table() {
  static const KernelTable table{Isa::Avx2, "avx2", linear_mod1, wrapped_dist2, complex_mul,
                                 weighted_sum2};
  return &table;
}

}  // namespace rlab::kernels
