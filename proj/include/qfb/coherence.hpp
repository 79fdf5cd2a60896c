#pragma once

#include "qfb/common.hpp"
#include "qfb/loop.hpp"
#include "qfb/physics.hpp"
#include "qfb/ramsey.hpp"
#include "qfb/spectral.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <utility>
#include <vector>

namespace qfb {

using PsdFunction = std::function<double(double)>;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Free-induction decay envelope chi(t) on a time grid.
struct DecayEnvelope {
  Vector times;
  Vector chi;
  double lower_cutoff = 0.0;  // f0, Hz
};

struct CoherenceResult {
  double t2 = 0.0;
  double gamma_phi = 0.0;
  double gamma_1 = 0.0;
  double fit_residual = 0.0;
};

struct FluxNoiseAmplitude {
  double sqrt_a_phi = 0.0;  // Phi0
  double eta = 0.0;
  double k = 0.0;  // Phi0
};

/// Segmentation of the envelope integral.
struct EnvelopeQuadrature {
  int segments_per_decade = 8;
  /// Whole sinc^2 periods (width 1/t) integrated explicitly; beyond that
  /// sin^2 is replaced by its mean 1/2.
  int oscillation_periods = 200;
  double tolerance = 1e-10;
};

/// chi(t) = exp(-2 pi^2 t^2 * integral_{f0}^{f_upper} S(f) sinc^2(pi f t) df).
/// Throws DivergenceError for f0 <= 0 (a 1/f^alpha integrand with alpha >= 1
/// diverges there) or a non-finite integral.
double ramsey_envelope(const PsdFunction& psd, double t, double f0, double f_upper,
                       const EnvelopeQuadrature& quad = {});

/// The exponent integral alone: integral of S(f) sinc^2(pi f t) over [f0, f_upper].
double dephasing_integral(const PsdFunction& psd, double t, double f0, double f_upper,
                          const EnvelopeQuadrature& quad = {});

DecayEnvelope decay_envelope(const PsdFunction& psd, const Vector& times, double f0, double f_upper,
                             const EnvelopeQuadrature& quad = {});

/// Shot-rate Nyquist 1/(2T), the highest frequency the simulated noise carries.
inline double default_upper_cutoff(const RamseyConfig& rcfg) { return 0.5 / rcfg.cycle_time; }

/// Multiplies by exp(-t / (2 t1)).
DecayEnvelope with_relaxation(DecayEnvelope env, double t1);

/// First 1/e crossing, linearly interpolated. Throws DomainError when the
/// envelope stays above 1/e over the grid.
double extract_t2(const DecayEnvelope& env);

/// T2 of the envelope, and the pure dephasing rate as the inverse 1/e time of
/// the envelope with exp(-t/(2 t1)) divided out.
CoherenceResult analyze_envelope(const DecayEnvelope& env, double t1);

struct PureDephasing {
  double rate = 0.0;  // 1/s
  bool relaxation_limited = false;
};

/// 1/t2 - 1/(2 t1); zero and flagged when t2 > 2 t1.
PureDephasing pure_dephasing_rate(double t2, double t1);

/// Zero-intercept fit gamma_phi = k |df/dphi|.
struct SensitivityFit {
  double k = 0.0;          // Phi0
  double r_squared = 0.0;  // against the mean of gamma_phi
  int points = 0;
};

SensitivityFit dephasing_sensitivity_fit(const std::vector<std::pair<double, double>>& points);

/// sqrt(A_phi) = k / (2 pi sqrt(eta)).
double flux_noise_amplitude(double k, double eta);

/// ln(f_upper / (2 pi f_lower)): the bandwidth factor of a 1/f integral.
inline double bandwidth_factor(double f_lower, double f_upper) {
  return std::log(f_upper / (kTwoPi * f_lower));
}

// Ramsey scans.

/// p1(t) = B + A exp(-gamma_exp t - (gamma_gauss t)^2) cos(2 pi nu t + phase).
struct RamseyFit {
  double offset = 0.5;
  double amplitude = 0.5;
  double gamma_exp = 0.0;
  double gamma_gauss = 0.0;
  double frequency = 0.0;
  double phase = 0.0;
  double t2 = 0.0;        // 1/e time of the fitted envelope
  double residual = 0.0;  // rms
  bool converged = false;

  double envelope(double t) const {
    return std::exp(-gamma_exp * t - gamma_gauss * gamma_gauss * t * t);
  }
};

/// Least-squares fit of a damped oscillation, seeded from `frequency_guess`
/// and from the strongest non-DC Fourier component of the scan.
RamseyFit fit_ramsey_scan(const Vector& tau, const Vector& p1, double frequency_guess);

/// 1/e time of exp(-a t - (b t)^2).
double envelope_one_over_e(double gamma_exp, double gamma_gauss);

enum class ProbeReadout { Expectation, SingleShot };

/// Ramsey probe interleaved with the feedback estimates. One cycle is N
/// estimation shots, an accumulator update, then a single probe shot with
/// delay tau_r taken from the grid in order; a pass sweeps the whole grid.
struct InterleavedConfig {
  std::vector<double> tau_r_grid;  // s
  int passes = 50;
  double set_detuning = 0.5e6;  // Hz, deliberate drive offset of the probe
  double t1 = 30e-6;            // s; infinity disables relaxation
  bool feedback = true;
  ProbeReadout readout = ProbeReadout::Expectation;
  /// Keep the residual frequency f~(t) + p(t) on the trace grid.
  bool record_residual = false;
};

void validate(const InterleavedConfig& cfg);

/// Evenly spaced grid of `points` delays on [0, max_delay].
std::vector<double> linear_delay_grid(double max_delay, int points);

struct InterleavedResult {
  std::vector<double> tau_r;
  Eigen::MatrixXd p1;  // passes x grid
  double pass_duration = 0.0;  // mean, s
  TimeTrace residual;  // empty unless requested
  int saturations = 0;

  /// Mean and standard error over passes [first, first + count).
  std::pair<Vector, Vector> average(Eigen::Index first, Eigen::Index count) const;
};

/// Probe-slot length for delay tau_r: the delay plus the readout and reset
/// overhead cycle_time - tau of an estimation shot.
inline double probe_slot(double tau_r, const RamseyConfig& rcfg) {
  return tau_r + (rcfg.cycle_time - rcfg.tau);
}

/// Trace duration needed by simulate_interleaved_ramsey.
double interleaved_duration(const RamseyConfig& rcfg, const LoopConfig& lcfg,
                            const InterleavedConfig& icfg);

/// The noise trace is synthesized from `seed` alone, so feedback on and off
/// with the same seed see the same intrinsic fluctuations.
InterleavedResult simulate_interleaved_ramsey(const NoiseModel& model, const RamseyConfig& rcfg,
                                              const LoopConfig& lcfg, const InterleavedConfig& icfg,
                                              std::uint64_t seed);

InterleavedResult simulate_interleaved_ramsey(const TimeTrace& intrinsic, const RamseyConfig& rcfg,
                                              const LoopConfig& lcfg, const InterleavedConfig& icfg,
                                              std::uint64_t seed);

/// Piecewise-linear interpolation in log-log space, flat beyond the ends.
/// Frequencies must increase; values must be positive.
PsdFunction log_log_interpolant(std::vector<double> frequencies, std::vector<double> psd);

/// Measured PSD averaged into log bands (`bins_per_decade`) and interpolated
/// with log_log_interpolant. Zero and negative bins are skipped.
PsdFunction interpolate_psd(const SpectrumEstimate& est, int bins_per_decade = 16);

void write_envelope_csv(std::ostream& out, const DecayEnvelope& env);
void write_scan_csv(std::ostream& out, const std::vector<double>& tau_r, const Vector& mean,
                    const Vector& sem);

}  // namespace qfb
