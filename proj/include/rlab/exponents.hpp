#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "rlab/inverse.hpp"
#include "rlab/measure.hpp"
#include "rlab/system.hpp"
#include "rlab/thermo.hpp"

namespace rlab {

struct LyapunovOptions {
  int burn_in = 200;
  double group_tol = 1e-3;
  NewtonConfig newton;
};

struct LyapunovSpectrum {
  /// q values, ascending, one per direction.
  std::vector<double> values;
  /// (exponent, multiplicity), ascending; consecutive values closer than
  /// group_tol are grouped and averaged.
  std::vector<std::pair<double, int>> exponents;
  int steps = 0;
  /// (1/n) log |det Df^n| along the orbit.
  double log_det_rate = 0.0;

  /// sum over lambda_i < threshold of lambda_i m_i.
  double sum_negative(double threshold = -1e-6) const;
};

/// QR-accumulated exponents of the derivative cocycle. The orbit is a
/// backward orbit of x0 with branches drawn from `seed`, traversed forward;
/// it stays on the repellor, whereas forward orbits of the perturbed system
/// leave the annulus.
LyapunovSpectrum lyapunov_spectrum(const System& sys, const Point& x0, int n, std::uint64_t seed,
                                   const LyapunovOptions& opt = {});

struct PesinReport {
  double sum_negative = 0.0;
  double integral_phi_s = 0.0;
  double log_d = 0.0;
  double entropy_estimate = 0.0;
  std::optional<double> pressure_cross_check;
  double residual_1 = 0.0;
  std::optional<double> residual_2;
  /// entropy_estimate > log d.
  bool exceeds_log_d = false;
};

/// integral of Phi^s over a cloud.
double integrate_stable_potential(const System& sys, const WeightedAtomCloud& cloud,
                                  unsigned threads = 1, const FrameOptions& frame = {});

/// `pressure` is an estimate of P(Phi^s).
PesinReport pesin_check(const System& sys, const WeightedAtomCloud& cloud,
                        const LyapunovSpectrum& spectrum,
                        const PressureEstimate* pressure = nullptr, unsigned threads = 1);

struct JacobianReport {
  std::vector<double> ratios;  // boxes with mass, in draw order
  std::size_t boxes = 0;
  std::size_t empty = 0;
  std::size_t flagged = 0;  // not injective on the box
  double median = std::numeric_limits<double>::quiet_NaN();
  double mean = std::numeric_limits<double>::quiet_NaN();
  double d = 0.0;
};

/// Ratios cloud(f(A)) / cloud(A) over random axis-aligned boxes of side
/// box_size. f(A) membership of an atom x is "some preimage of x is in A".
/// Throws InsufficientMass when more than 90% of the boxes are empty.
JacobianReport jacobian_check(const System& sys, const WeightedAtomCloud& cloud,
                              std::size_t num_boxes, double box_size, std::uint64_t seed,
                              unsigned threads = 1, const NewtonConfig& newton = {});

void write_lyapunov_csv(std::ostream& os, const LyapunovSpectrum& s);

}  // namespace rlab
