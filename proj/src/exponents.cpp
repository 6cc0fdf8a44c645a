#include "rlab/exponents.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "rlab/errors.hpp"
#include "rlab/format.hpp"
#include "rlab/parallel.hpp"
#include "rlab/rng.hpp"

namespace rlab {

double LyapunovSpectrum::sum_negative(double threshold) const {
  double s = 0.0;
  for (const auto& [l, mult] : exponents)
    if (l < threshold) s += l * mult;
  return s;
}

LyapunovSpectrum lyapunov_spectrum(const System& sys, const Point& x0, int n, std::uint64_t seed,
                                   const LyapunovOptions& opt) {
  if (n < 100) throw InvalidArgument("lyapunov_spectrum needs n >= 100");
  if (opt.burn_in < 0) throw InvalidArgument("burn_in must be >= 0");
  const int q = sys.dim();
  const int total = opt.burn_in + n;
  const std::vector<Point> orbit = backward_orbit(sys, x0, total, seed, opt.newton);

  Mat Q = Mat::Identity(q, q);
  std::array<double, kMaxDim> sums{};
  double logdet = 0.0;
  for (int k = 0; k < total; ++k) {
    const Mat J = jacobian(sys, orbit[k]);
    Eigen::HouseholderQR<Mat> qr(J * Q);
    const Mat& R = qr.matrixQR();
    Q = qr.householderQ() * Mat::Identity(q, q);
    if (k < opt.burn_in) continue;
    for (int i = 0; i < q; ++i) sums[i] += std::log(std::abs(R(i, i)));
    logdet += std::log(std::abs(J.determinant()));
  }

  LyapunovSpectrum s;
  s.steps = n;
  s.log_det_rate = logdet / n;
  for (int i = 0; i < q; ++i) s.values.push_back(sums[i] / n);
  std::sort(s.values.begin(), s.values.end());
  for (std::size_t i = 0; i < s.values.size();) {
    std::size_t j = i + 1;
    double acc = s.values[i];
    while (j < s.values.size() && s.values[j] - s.values[j - 1] < opt.group_tol)
      acc += s.values[j++];
    s.exponents.emplace_back(acc / static_cast<double>(j - i), static_cast<int>(j - i));
    i = j;
  }
  return s;
}

double integrate_stable_potential(const System& sys, const WeightedAtomCloud& cloud,
                                  unsigned threads, const FrameOptions& frame) {
  const Potential phi = Potential::stable(0.0, frame);
  if (auto c = phi.constant_value(sys)) return *c * cloud.total_weight();
  constexpr std::size_t kChunk = 256;
  std::vector<double> part(Executor::chunk_count(cloud.size(), kChunk), 0.0);
  Executor(threads).for_chunks(cloud.size(), kChunk, [&](std::size_t c, std::size_t b,
                                                         std::size_t e) {
    for (std::size_t i = b; i < e; ++i) part[c] += cloud.weight(i) * phi(sys, cloud.point(i));
  });
  double s = 0.0;
  for (double v : part) s += v;
  return s;
}

PesinReport pesin_check(const System& sys, const WeightedAtomCloud& cloud,
                        const LyapunovSpectrum& spectrum, const PressureEstimate* pressure,
                        unsigned threads) {
  PesinReport r;
  r.log_d = std::log(static_cast<double>(sys.degree()));
  r.sum_negative = spectrum.sum_negative();
  r.integral_phi_s = integrate_stable_potential(sys, cloud, threads);
  r.entropy_estimate = r.log_d - r.integral_phi_s;
  r.residual_1 = std::abs(r.integral_phi_s - r.sum_negative);
  if (pressure) {
    r.pressure_cross_check = pressure->extrapolated;
    r.residual_2 = std::abs(pressure->extrapolated - r.log_d);
  }
  r.exceeds_log_d = r.entropy_estimate > r.log_d;
  return r;
}

JacobianReport jacobian_check(const System& sys, const WeightedAtomCloud& cloud,
                              std::size_t num_boxes, double box_size, std::uint64_t seed,
                              unsigned threads, const NewtonConfig& newton) {
  if (num_boxes < 1) throw InvalidArgument("num_boxes must be >= 1");
  if (!(box_size > 0.0 && box_size < 0.5)) throw InvalidArgument("box_size must lie in (0, 0.5)");
  const int q = sys.dim();
  const int off = sys.torus_offset();
  const InverseBranches inv(sys, newton);
  const int d = sys.degree();

  // Preimages of every atom, computed once.
  std::vector<Point> pre(cloud.size() * d);
  Executor exec(threads);
  exec.for_chunks(cloud.size(), 512, [&](std::size_t, std::size_t b, std::size_t e) {
    std::vector<Preimage> tmp;
    for (std::size_t i = b; i < e; ++i) {
      inv.preimages_into(cloud.point(i), tmp);
      for (int k = 0; k < d; ++k) pre[i * d + k] = tmp[k].point;
    }
  });

  std::vector<Point> corners(num_boxes);
  const double hw = sys.variant() == Variant::Toral ? 0.0 : sys.delta();
  for (std::size_t b = 0; b < num_boxes; ++b) {
    CounterRng rng(seed, rng_purpose::kBoxes, b);
    corners[b] = sample_region(sys, rng, hw);
  }
  auto in_box = [&](const Point& c, const Point& x) {
    for (int i = 0; i < q; ++i) {
      const double t = i >= off ? mod1(x[i] - c[i]) : x[i] - c[i];
      if (!(t >= 0.0 && t < box_size)) return false;
    }
    return true;
  };

  std::vector<double> massA(num_boxes, 0.0), massFA(num_boxes, 0.0);
  std::vector<char> flagged(num_boxes, 0);
  exec.for_chunks(num_boxes, 1, [&](std::size_t, std::size_t b, std::size_t e) {
    for (std::size_t bx = b; bx < e; ++bx) {
      for (std::size_t i = 0; i < cloud.size(); ++i) {
        const double w = cloud.weight(i);
        if (in_box(corners[bx], cloud.point(i))) massA[bx] += w;
        int hits = 0;
        for (int k = 0; k < d; ++k) hits += in_box(corners[bx], pre[i * d + k]) ? 1 : 0;
        if (hits > 1) flagged[bx] = 1;
        if (hits > 0) massFA[bx] += w;
      }
    }
  });

  JacobianReport rep;
  rep.boxes = num_boxes;
  rep.d = d;
  for (std::size_t bx = 0; bx < num_boxes; ++bx) {
    if (massA[bx] == 0.0) {
      ++rep.empty;
      continue;
    }
    if (flagged[bx]) {
      ++rep.flagged;
      continue;
    }
    rep.ratios.push_back(massFA[bx] / massA[bx]);
  }
  if (rep.empty * 10 > num_boxes * 9)
    throw InsufficientMass("more than 90% of the boxes carry no cloud mass");
  if (!rep.ratios.empty()) {
    std::vector<double> s = rep.ratios;
    std::sort(s.begin(), s.end());
    const std::size_t k = s.size();
    rep.median = k % 2 ? s[k / 2] : 0.5 * (s[k / 2 - 1] + s[k / 2]);
    double acc = 0.0;
    for (double v : s) acc += v;
    rep.mean = acc / static_cast<double>(k);
  }
  return rep;
}

void write_lyapunov_csv(std::ostream& os, const LyapunovSpectrum& s) {
  os << "index,exponent,multiplicity\n";
  for (std::size_t i = 0; i < s.exponents.size(); ++i)
    os << i << ',' << Num{s.exponents[i].first} << ',' << s.exponents[i].second << '\n';
}

}  // namespace rlab
