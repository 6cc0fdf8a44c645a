#include "rlab/correlations.hpp"

#include <cmath>
#include <ostream>

#include "rlab/errors.hpp"
#include "rlab/format.hpp"
#include "rlab/parallel.hpp"

namespace rlab {

CorrelationSequence correlation_sequence(const System& sys, const WeightedAtomCloud& sampler,
                                         const TrigObservable& phi, const TrigObservable& psi,
                                         int n_max, unsigned threads) {
  if (n_max < 1) throw InvalidArgument("n_max must be >= 1");
  const int cd = sys.chart_dim();
  if (phi.dim() != cd || psi.dim() != cd)
    throw InvalidArgument("observables do not match the chart");
  const std::size_t N = sampler.size();
  if (N == 0) throw InsufficientMass("empty sampler");
  const std::size_t L = static_cast<std::size_t>(n_max) + 1;

  // Per-sample values phi(x) and psi(f^n x), stored so that the moments
  // below are reduced in a fixed order.
  std::vector<double> a(N), b(N * L);
  Executor(threads).for_chunks(N, 1024, [&](std::size_t, std::size_t lo, std::size_t hi) {
    std::array<double, kMaxDim> c{};
    for (std::size_t i = lo; i < hi; ++i) {
      Point x = sampler.point(i);
      chart(sys, x, c);
      const std::span<const double> cs(c.data(), cd);
      a[i] = phi(cs).real();
      for (std::size_t n = 0; n < L; ++n) {
        if (n > 0) {
          x = apply(sys, x);
          chart(sys, x, c);
        }
        b[i * L + n] = psi(cs).real();
      }
    }
  });

  double W = 0.0, W2 = 0.0, ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    const double w = sampler.weight(i);
    W += w;
    W2 += w * w;
    ma += w * a[i];
    mb += w * b[i * L];
  }
  ma /= W;
  mb /= W;

  CorrelationSequence seq;
  seq.samples = N;
  seq.n_eff = W * W / W2;
  seq.noise_floor = 3.0 / std::sqrt(seq.n_eff) * phi.sup_bound() * psi.sup_bound();
  seq.values.resize(L);
  seq.stderr_.resize(L);
  for (std::size_t n = 0; n < L; ++n) {
    double m = 0.0;
    for (std::size_t i = 0; i < N; ++i) m += sampler.weight(i) * a[i] * b[i * L + n];
    m /= W;
    seq.values[n] = m - ma * mb;
    // Delta-method standard error of m_ab - m_a m_b0.
    double v = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double w = sampler.weight(i) / W;
      const double t = (a[i] * b[i * L + n] - m) - mb * (a[i] - ma) - ma * (b[i * L] - mb);
      v += w * w * t * t;
    }
    seq.stderr_[n] = std::sqrt(v);
  }
  return seq;
}

const char* to_string(FitStatus s) {
  switch (s) {
    case FitStatus::Ok:
      return "ok";
    case FitStatus::Inconclusive:
      return "inconclusive";
    case FitStatus::NonDecaying:
      return "non_decaying";
  }
  return "?";
}

DecayFit decay_rate_fit(const std::vector<double>& values, double noise_floor) {
  DecayFit fit;
  std::vector<double> xs, ys;
  for (std::size_t n = 1; n < values.size(); ++n) {
    if (!(std::abs(values[n]) > noise_floor)) continue;
    fit.used.push_back(static_cast<int>(n));
    xs.push_back(static_cast<double>(n));
    ys.push_back(std::log(std::abs(values[n])));
  }
  fit.all_below_floor = fit.used.empty();
  if (xs.size() < 3) return fit;
  const double k = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  fit.slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
  const double icpt = (sy - fit.slope * sx) / k;
  fit.prefactor = std::exp(icpt);
  fit.rate = std::exp(fit.slope);
  const double ybar = sy / k;
  double ss_res = 0, ss_tot = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (icpt + fit.slope * xs[i]);
    ss_res += r * r;
    ss_tot += (ys[i] - ybar) * (ys[i] - ybar);
  }
  fit.goodness = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  fit.status = fit.slope < 0.0 ? FitStatus::Ok : FitStatus::NonDecaying;
  return fit;
}

DecayFit decay_rate_fit(const CorrelationSequence& seq, double noise_floor) {
  return decay_rate_fit(seq.values, std::isnan(noise_floor) ? seq.noise_floor : noise_floor);
}

void write_correlations_csv(std::ostream& os, const CorrelationSequence& seq) {
  os << "n,C_n,stderr\n";
  for (std::size_t n = 0; n < seq.values.size(); ++n)
    os << n << ',' << Num{seq.values[n]} << ',' << Num{seq.stderr_[n]} << '\n';
}

}  // namespace rlab
