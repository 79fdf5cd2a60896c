#pragma once

#include "qfb/common.hpp"
#include "qfb/physics.hpp"
#include "qfb/random.hpp"

#include <cmath>
#include <cstdint>
#include <vector>

namespace qfb {

/// Repeated-Ramsey frequency probe.
struct RamseyConfig {
  double tau = 1.25e-6;         // free evolution, s
  double cycle_time = 3.5e-6;   // full shot incl. readout and reset, s
  int shots_per_estimate = 20;  // N
  double measurement_phase = kPi / 2.0;
  double init_fidelity = 1.0;   // symmetric contrast

  double estimate_period() const { return cycle_time * shots_per_estimate; }
  /// Unambiguous detuning half-range 1/(4 tau).
  double detuning_range() const { return 1.0 / (4.0 * tau); }
};

void validate(const RamseyConfig& cfg);

/// Discriminated single-shot outcomes q_i.
using ShotRecord = std::vector<std::uint8_t>;

template <typename Scalar>
Scalar ramsey_p1(Scalar delta, Scalar tau, Scalar measurement_phase, Scalar fidelity = Scalar(1)) {
  using std::cos;
  const Scalar ideal = Scalar(0.5) + Scalar(0.5) * cos(Scalar(kTwoPi) * delta * tau - measurement_phase);
  return Scalar(0.5) + fidelity * (ideal - Scalar(0.5));
}

inline double ramsey_p1(double delta, const RamseyConfig& cfg) {
  return ramsey_p1(delta, cfg.tau, cfg.measurement_phase, cfg.init_fidelity);
}

/// Negative branch, k = 0. For phase pi/2 this maps [0, 1] onto
/// [-1/(4 tau), +1/(4 tau)].
double invert_p1(double p1, const RamseyConfig& cfg);

bool simulate_shot(double true_delta, const RamseyConfig& cfg, Rng& rng);

/// q'_i = q_i XOR q_{i-1}, with the raw bit preceding the record given by `previous`.
ShotRecord virtual_reset(const ShotRecord& raw, std::uint8_t previous = 0);

double estimate_frequency(const ShotRecord& record, const RamseyConfig& cfg);

/// Averaging window used to relate a trace to an estimate.
enum class SampleAveraging { FreeEvolution, FullPeriod };

/// O(1) window means of a piecewise-constant trace via prefix sums.
class TraceIntegrator {
 public:
  explicit TraceIntegrator(const TimeTrace& trace);

  /// Integral of the trace over [t0, t1].
  double integral(double t0, double t1) const;
  double mean(double t0, double t1) const { return integral(t0, t1) / (t1 - t0); }
  double duration() const { return duration_; }

 private:
  double cumulative(double t) const;

  double dt_;
  double duration_;
  Vector prefix_;
  const Vector* values_;
};

/// Mean of the trace over the N free-evolution windows of estimate n
/// (shot i covers [n T_N + i T, n T_N + i T + tau]).
double sampled_frequency(const TimeTrace& trace, Eigen::Index n, const RamseyConfig& cfg,
                         SampleAveraging averaging = SampleAveraging::FreeEvolution);

/// White estimator noise with a cutoff at the estimate Nyquist frequency.
struct SamplingNoisePsd {
  double plateau = 0.0;  // Hz^2/Hz
  double cutoff = 0.0;   // Hz

  double operator()(double f) const { return (f >= 0.0 && f <= cutoff) ? plateau : 0.0; }
};

SamplingNoisePsd sampling_noise_psd(const RamseyConfig& cfg);

/// First-order spread 1/(2 pi tau sqrt(shots)) of a frequency estimate.
inline double sampling_noise_sigma(double tau, int shots) {
  return 1.0 / (kTwoPi * tau * std::sqrt(static_cast<double>(shots)));
}

/// PSD of the estimate-rate sequence obtained by averaging a trace (sampled at
/// `trace_period` with one-sided density `psd`) over the shot windows of each
/// estimate and decimating to one value per estimate. Accounts for the window
/// response and for aliasing of the whole trace band. `estimate_period` may be
/// longer than N T when extra slots sit between estimates.
template <typename Psd>
double sampled_psd(const Psd& psd, double f, const RamseyConfig& cfg, double trace_period,
                   double estimate_period,
                   SampleAveraging averaging = SampleAveraging::FreeEvolution);

}  // namespace qfb

#include "qfb/ramsey_impl.hpp"
