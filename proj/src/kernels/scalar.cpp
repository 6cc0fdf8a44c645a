#include <cmath>

#include "rlab/kernels.hpp"

namespace rlab::kernels {
namespace {

void linear_mod1(const double* A, int m, const double* const* in, double* const* out,
                 std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    for (int r = 0; r < m; ++r) {
      double acc = A[r * m] * in[0][i];
      for (int j = 1; j < m; ++j) acc = acc + A[r * m + j] * in[j][i];
      double v = acc - std::floor(acc);
      out[r][i] = v >= 1.0 ? 0.0 : v;
    }
  }
}

void wrapped_dist2(const double* c, int m, const double* const* x, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
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
  for (std::size_t i = 0; i < n; ++i) {
    const double br = bre[i], bi = s * bim[i];
    const double ar = are[i], ai = aim[i];
    ore[i] = ar * br - ai * bi;
    oim[i] = ar * bi + ai * br;
  }
}

void weighted_sum2(const double* w, const double* re, const double* im, std::size_t n,
                   double* sre, double* sim) {
  double a = 0.0, b = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    a += w[i] * re[i];
    b += w[i] * im[i];
  }
  *sre = a;
  *sim = b;
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{Isa::Scalar, "scalar", linear_mod1, wrapped_dist2, complex_mul,
                                 weighted_sum2};
  return table;
}

}  // namespace rlab::kernels
