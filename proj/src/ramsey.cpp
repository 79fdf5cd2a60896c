#include "qfb/ramsey.hpp"

#include <numeric>

namespace qfb {

void validate(const RamseyConfig& cfg) {
  if (!(cfg.tau > 0.0 && cfg.tau < cfg.cycle_time))
    throw DomainError("ramsey: require 0 < tau < cycle_time");
  if (cfg.shots_per_estimate < 1) throw DomainError("ramsey: shots_per_estimate must be >= 1");
  if (!(cfg.init_fidelity >= 0.0 && cfg.init_fidelity <= 1.0))
    throw DomainError("ramsey: init_fidelity must lie in [0, 1]");
}

double invert_p1(double p1, const RamseyConfig& cfg) {
  if (!(p1 >= 0.0 && p1 <= 1.0)) throw DomainError("invert_p1: probability outside [0, 1]");
  return (-std::acos(2.0 * p1 - 1.0) + cfg.measurement_phase) / (kTwoPi * cfg.tau);
}

bool simulate_shot(double true_delta, const RamseyConfig& cfg, Rng& rng) {
  return uniform01(rng) < ramsey_p1(true_delta, cfg);
}

ShotRecord virtual_reset(const ShotRecord& raw, std::uint8_t previous) {
  ShotRecord out(raw.size());
  std::uint8_t prev = previous & 1u;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const std::uint8_t q = raw[i] & 1u;
    out[i] = q ^ prev;
    prev = q;
  }
  return out;
}

double estimate_frequency(const ShotRecord& record, const RamseyConfig& cfg) {
  if (record.empty()) throw InputError("estimate_frequency: empty record");
  const double ones = std::accumulate(record.begin(), record.end(), 0.0);
  return invert_p1(ones / static_cast<double>(record.size()), cfg);
}

TraceIntegrator::TraceIntegrator(const TimeTrace& trace)
    : dt_(trace.sample_period),
      duration_(trace.duration()),
      prefix_(trace.values.size() + 1),
      values_(&trace.values) {
  prefix_[0] = 0.0;
  for (Eigen::Index i = 0; i < trace.values.size(); ++i)
    prefix_[i + 1] = prefix_[i] + trace.values[i] * dt_;
}

double TraceIntegrator::cumulative(double t) const {
  const double x = t / dt_;
  auto k = static_cast<Eigen::Index>(std::floor(x));
  const Eigen::Index n = values_->size();
  if (k >= n) return prefix_[n];
  if (k < 0) return 0.0;
  return prefix_[k] + (x - static_cast<double>(k)) * dt_ * (*values_)[k];
}

double TraceIntegrator::integral(double t0, double t1) const {
  const double slack = 1e-9 * dt_;
  if (t0 < -slack || t1 > duration_ + slack || t1 < t0)
    throw std::out_of_range("trace window outside recorded range");
  return cumulative(t1) - cumulative(t0);
}

double sampled_frequency(const TimeTrace& trace, Eigen::Index n, const RamseyConfig& cfg,
                         SampleAveraging averaging) {
  const TraceIntegrator integ(trace);
  const double window = averaging == SampleAveraging::FreeEvolution ? cfg.tau : cfg.cycle_time;
  const double start = static_cast<double>(n) * cfg.estimate_period();
  double sum = 0.0;
  for (int i = 0; i < cfg.shots_per_estimate; ++i) {
    const double t0 = start + i * cfg.cycle_time;
    sum += integ.integral(t0, t0 + window);
  }
  return sum / (window * cfg.shots_per_estimate);
}

SamplingNoisePsd sampling_noise_psd(const RamseyConfig& cfg) {
  return {cfg.cycle_time / (2.0 * kPi * kPi * cfg.tau * cfg.tau), 1.0 / (2.0 * cfg.estimate_period())};
}

namespace detail {

std::vector<double> estimate_window_weights(const RamseyConfig& cfg, double dt,
                                            SampleAveraging averaging) {
  const double window = averaging == SampleAveraging::FreeEvolution ? cfg.tau : cfg.cycle_time;
  const double span = (cfg.shots_per_estimate - 1) * cfg.cycle_time + window;
  const auto taps = static_cast<std::size_t>(std::ceil(span / dt - 1e-9));
  std::vector<double> w(taps, 0.0);
  const double norm = 1.0 / (window * cfg.shots_per_estimate);
  for (int i = 0; i < cfg.shots_per_estimate; ++i) {
    const double a = i * cfg.cycle_time;
    const double b = a + window;
    for (std::size_t j = 0; j < taps; ++j) {
      const double lo = std::max(a, static_cast<double>(j) * dt);
      const double hi = std::min(b, static_cast<double>(j + 1) * dt);
      if (hi > lo) w[j] += (hi - lo) * norm;
    }
  }
  return w;
}

}  // namespace detail

}  // namespace qfb
