#include "rlab/kernels.hpp"

namespace rlab::kernels {

#ifndef RLAB_HAVE_AVX2
const KernelTable* avx2_table() { return nullptr; }
#endif

bool cpu_supports(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2:
#if defined(RLAB_HAVE_AVX2) && (defined(__x86_64__) || defined(__i386__))
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& active() {
  static const KernelTable& chosen = []() -> const KernelTable& {
    if (avx2_table() != nullptr && cpu_supports(Isa::Avx2)) return *avx2_table();
    return scalar_table();
  }();
  return chosen;
}

}  // namespace rlab::kernels
