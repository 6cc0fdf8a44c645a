#pragma once

#include <cmath>
#include <vector>

#include "rlab/measure.hpp"
#include "rlab/rng.hpp"
#include "rlab/system.hpp"

namespace rlab::test {

// Test-only stream purpose, disjoint from the library's.
inline constexpr std::uint32_t kTestPurpose = 0x7e57;

inline Point random_point(const System& sys, std::uint64_t seed, std::uint64_t i) {
  CounterRng rng(seed, kTestPurpose, i);
  const double hw = sys.variant() == Variant::Toral ? 0.0 : 0.5 * sys.delta();
  return sample_region(sys, rng, hw);
}

inline std::vector<System> catalogue() {
  return {catalog::doubling_map(), catalog::toral_2122(), catalog::toral_2223(),
          catalog::example3_product(), catalog::example4_perturbed(0.02)};
}

inline double log_abs_sorted(const System& sys, std::size_t i) {
  std::vector<double> v;
  for (auto l : sys.linear_eigenvalues()) v.push_back(std::log(std::abs(l)));
  std::sort(v.begin(), v.end());
  return v[i];
}

}  // namespace rlab::test
