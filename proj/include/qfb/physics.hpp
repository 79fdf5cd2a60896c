#pragma once

#include "qfb/common.hpp"

#include <cmath>
#include <cstdint>
#include <vector>

namespace qfb {

/// Narrow spectral line (e.g. mains pickup). `power` is the integrated power in Hz^2.
struct SpectralLine {
  double frequency = 60.0;
  double power = 0.0;
};

/// One-sided PSD of qubit-frequency noise: A (1 Hz / f)^alpha plus lines.
struct NoiseModel {
  double amplitude_at_1hz = 27.3e6;  // Hz^2/Hz
  double exponent_alpha = 0.8;
  std::vector<SpectralLine> lines;
  /// Top-hat width used when a line is evaluated as a density.
  double line_width = 1.0;
  std::uint64_t rng_seed = 0;

  static NoiseModel white(double level) { return {level, 0.0, {}, 1.0, 0}; }
};

void validate(const NoiseModel& model);

/// Continuum part of the model (no lines).
template <typename Scalar>
Scalar power_law_psd(Scalar amplitude_at_1hz, Scalar alpha, Scalar f) {
  using std::pow;
  return amplitude_at_1hz * pow(Scalar(1) / f, alpha);
}

/// Model PSD at f > 0 in Hz^2/Hz. Lines contribute power/line_width inside
/// [f_line - w/2, f_line + w/2).
double model_psd(const NoiseModel& model, double f);

/// Integral of model_psd over [lo, hi], Hz^2.
double band_power(const NoiseModel& model, double lo, double hi);

/// Smallest m >= n whose only prime factors are 2, 3 and 5.
Eigen::Index smooth_length(Eigen::Index n);

/// Gaussian stationary trace whose expected periodogram equals model_psd on
/// every bin 0 < k <= n/2. Lines are deposited into their nearest bin with the
/// exact line power. The DC bin is zero. Lengths that are not 2-3-5 smooth are
/// generated at smooth_length(n) and truncated, which keeps the process
/// stationary but makes the per-bin statement approximate.
TimeTrace synthesize_trace(const NoiseModel& model, Eigen::Index n_samples, double sample_period,
                           std::uint64_t seed);

/// Symmetric-SQUID transmon: f(phi) = f_max sqrt(|cos(pi phi)|).
struct TransmonSpec {
  double f_max = 4.835e9;  // Hz, sweet spot
};

void validate(const TransmonSpec& spec);

double frequency_at_flux(const TransmonSpec& spec, double phi);

/// |df/dphi| in Hz per flux quantum.
double flux_sensitivity(const TransmonSpec& spec, double phi);

/// Flux bias in [0, 0.5) at which the transmon sits at `frequency`.
double flux_at_frequency(const TransmonSpec& spec, double frequency);

/// First-order transduction S_ff = (df/dphi)^2 S_phiphi.
double flux_noise_to_frequency_noise(const TransmonSpec& spec, double phi, double s_flux);

/// Flux-noise-limited model measured at bias `phi_from` moved to `phi_to`:
/// every power is scaled by the squared sensitivity ratio.
NoiseModel rescale_to_bias(const NoiseModel& model, const TransmonSpec& spec, double phi_from, double phi_to);

/// Frequency-noise model for 1/f flux noise of amplitude sqrt(A_phi) (in Phi0)
/// at bias phi. A_phi is defined through the two-sided angular-frequency density
/// A_phi/|omega|, i.e. a one-sided density of 2 A_phi / f in Phi0^2/Hz.
NoiseModel flux_noise_model(const TransmonSpec& spec, double phi, double sqrt_a_phi);

}  // namespace qfb
