#pragma once

#include <cstddef>

namespace rlab::kernels {

enum class Isa { Scalar, Avx2 };

/// Data-parallel inner loops over structure-of-arrays batches. Every ISA
/// variant implements the same contract as the scalar reference:
/// `linear_mod1`, `wrapped_dist2` and `complex_mul` are bit-identical across
/// variants (no fused multiply-add, same operation order per element);
/// `weighted_sum2` may differ in the last bits because lanes are reduced
/// in a different order.
struct KernelTable {
  Isa isa;
  const char* name;

  /// out_r[i] = mod1(sum_j A[r*m + j] * in_j[i]) for r < m. `in` and `out`
  /// must not alias.
  void (*linear_mod1)(const double* A, int m, const double* const* in, double* const* out,
                      std::size_t n);

  /// out[i] = sum_d wrap(x_d[i] - c[d])^2, wrap into [-1/2, 1/2].
  void (*wrapped_dist2)(const double* c, int m, const double* const* x, double* out,
                        std::size_t n);

  /// (ore + i oim) = (are + i aim) * (bre +- i bim), minus sign when conj_b.
  void (*complex_mul)(const double* are, const double* aim, const double* bre,
                      const double* bim, bool conj_b, double* ore, double* oim,
                      std::size_t n);

  /// *sre = sum_i w[i] re[i], *sim = sum_i w[i] im[i].
  void (*weighted_sum2)(const double* w, const double* re, const double* im, std::size_t n,
                        double* sre, double* sim);
};

const KernelTable& scalar_table();

/// nullptr when the AVX2 variant was not compiled in.
const KernelTable* avx2_table();

bool cpu_supports(Isa isa);

/// The fastest variant supported by the running CPU; resolved once.
const KernelTable& active();

}  // namespace rlab::kernels
