#pragma once

#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "rlab/measure.hpp"
#include "rlab/system.hpp"

namespace rlab {

struct CorrelationSequence {
  std::vector<double> values;  // C_n, n = 0..n_max
  std::vector<double> stderr_;
  std::size_t samples = 0;
  double n_eff = 0.0;  // 1 / sum w^2
  /// 3 / sqrt(n_eff) times the sup bounds of both observables; n_eff is the
  /// sample count for equal weights.
  double noise_floor = 0.0;
  std::string sampler;
};

/// C_n = <phi . psi o f^n> - <phi><psi> under the sampler's weights (real
/// parts of the observables). Each sample's forward orbit is computed once.
CorrelationSequence correlation_sequence(const System& sys, const WeightedAtomCloud& sampler,
                                         const TrigObservable& phi, const TrigObservable& psi,
                                         int n_max, unsigned threads = 1);

enum class FitStatus { Ok, Inconclusive, NonDecaying };

const char* to_string(FitStatus s);

struct DecayFit {
  FitStatus status = FitStatus::Inconclusive;
  double rate = std::numeric_limits<double>::quiet_NaN();  // lambda = exp(slope)
  double slope = std::numeric_limits<double>::quiet_NaN();
  double prefactor = std::numeric_limits<double>::quiet_NaN();
  double goodness = std::numeric_limits<double>::quiet_NaN();  // R^2
  std::vector<int> used;  // indices n entering the fit
  bool all_below_floor = false;
};

/// Least squares on (n, log|C_n|) over n >= 1 with |C_n| above the floor.
/// NaN noise_floor uses the sequence's own.
DecayFit decay_rate_fit(const CorrelationSequence& seq,
                        double noise_floor = std::numeric_limits<double>::quiet_NaN());

/// Same fit on a bare sequence.
DecayFit decay_rate_fit(const std::vector<double>& values, double noise_floor);

void write_correlations_csv(std::ostream& os, const CorrelationSequence& seq);

}  // namespace rlab
