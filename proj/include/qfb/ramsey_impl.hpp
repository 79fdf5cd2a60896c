#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

namespace qfb {

namespace detail {

/// Weights of the estimate-averaging filter on a grid of period dt.
std::vector<double> estimate_window_weights(const RamseyConfig& cfg, double dt,
                                            SampleAveraging averaging);

}  // namespace detail

template <typename Psd>
double sampled_psd(const Psd& psd, double f, const RamseyConfig& cfg, double trace_period,
                   double estimate_period, SampleAveraging averaging) {
  const double ratio = estimate_period / trace_period;
  const auto decimation = static_cast<long>(std::llround(ratio));
  if (decimation < 1 || std::abs(ratio - static_cast<double>(decimation)) > 1e-6 * ratio)
    throw DomainError("estimate period must be an integer multiple of the trace period");
  const double fine_rate = 1.0 / trace_period;
  const double out_nyquist = 0.5 / estimate_period;
  if (f < 0.0 || f > out_nyquist * (1.0 + 1e-12)) throw DomainError("frequency outside estimate band");

  const auto weights = detail::estimate_window_weights(cfg, trace_period, averaging);
  double two_sided = 0.0;
  for (long k = 0; k < decimation; ++k) {
    double g = f + static_cast<double>(k) / estimate_period;
    g -= fine_rate * std::floor(g / fine_rate + 0.5);  // fold into [-fs/2, fs/2)
    const double ag = std::abs(g);
    if (ag <= 0.0) continue;
    std::complex<double> h{0.0, 0.0};
    const double w = -kTwoPi * g * trace_period;
    for (std::size_t j = 0; j < weights.size(); ++j) {
      if (weights[j] == 0.0) continue;
      const double ph = w * static_cast<double>(j);
      h += weights[j] * std::complex<double>(std::cos(ph), std::sin(ph));
    }
    two_sided += 0.5 * psd(std::min(ag, 0.5 * fine_rate)) * std::norm(h);
  }
  return 2.0 * two_sided;
}

}  // namespace qfb
