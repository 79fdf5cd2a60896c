#include "qfb/physics.hpp"

#include "qfb/random.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>

namespace qfb {

void validate(const TimeTrace& trace) {
  if (!(trace.sample_period > 0.0)) throw InputError("trace sample period must be positive");
  if (!trace.values.allFinite()) throw InputError("trace contains non-finite samples");
}

void validate(const NoiseModel& model) {
  if (!(model.amplitude_at_1hz >= 0.0)) throw DomainError("noise amplitude must be >= 0");
  if (!(model.exponent_alpha >= 0.0 && model.exponent_alpha <= 2.0))
    throw DomainError("noise exponent must lie in [0, 2]");
  if (!(model.line_width > 0.0)) throw DomainError("line width must be positive");
  for (const auto& line : model.lines) {
    if (!(line.frequency > 0.0)) throw DomainError("line frequency must be positive");
    if (!(line.power >= 0.0)) throw DomainError("line power must be >= 0");
  }
}

double model_psd(const NoiseModel& model, double f) {
  if (!(f > 0.0)) throw DomainError("model_psd requires f > 0, got " + std::to_string(f));
  double s = model.amplitude_at_1hz > 0.0
                 ? power_law_psd(model.amplitude_at_1hz, model.exponent_alpha, f)
                 : 0.0;
  const double half = 0.5 * model.line_width;
  for (const auto& line : model.lines) {
    if (f >= line.frequency - half && f < line.frequency + half) s += line.power / model.line_width;
  }
  return s;
}

double band_power(const NoiseModel& model, double lo, double hi) {
  if (!(lo > 0.0) || hi < lo) throw DomainError("band_power requires 0 < lo <= hi");
  double p = 0.0;
  const double a = model.amplitude_at_1hz;
  const double alpha = model.exponent_alpha;
  if (a > 0.0) {
    p = std::abs(alpha - 1.0) < 1e-12
            ? a * std::log(hi / lo)
            : a * (std::pow(hi, 1.0 - alpha) - std::pow(lo, 1.0 - alpha)) / (1.0 - alpha);
  }
  const double half = 0.5 * model.line_width;
  for (const auto& line : model.lines) {
    const double overlap = std::min(hi, line.frequency + half) - std::max(lo, line.frequency - half);
    if (overlap > 0.0) p += line.power * overlap / model.line_width;
  }
  return p;
}

Eigen::Index smooth_length(Eigen::Index n) {
  if (n < 1) return 1;
  for (Eigen::Index m = n;; ++m) {
    Eigen::Index r = m;
    for (Eigen::Index p : {2, 3, 5})
      while (r % p == 0) r /= p;
    if (r == 1) return m;
  }
}

TimeTrace synthesize_trace(const NoiseModel& model, Eigen::Index n_samples, double sample_period,
                           std::uint64_t seed) {
  validate(model);
  if (n_samples < 2) throw DomainError("synthesize_trace needs at least 2 samples");
  if (!(sample_period > 0.0)) throw DomainError("sample period must be positive");

  // Generated on the next even FFT-friendly length and truncated.
  const auto n = static_cast<std::size_t>(2 * smooth_length((n_samples + 1) / 2));
  const double df = 1.0 / (static_cast<double>(n) * sample_period);
  const std::size_t half = n / 2;

  // Per-bin one-sided density; lines go to their nearest bin.
  std::vector<double> density(half + 1, 0.0);
  for (std::size_t k = 1; k <= half; ++k) {
    const double f = static_cast<double>(k) * df;
    if (model.amplitude_at_1hz > 0.0)
      density[k] = power_law_psd(model.amplitude_at_1hz, model.exponent_alpha, f);
  }
  for (const auto& line : model.lines) {
    const auto k = static_cast<std::size_t>(std::llround(line.frequency / df));
    if (k >= 1 && k <= half) density[k] += line.power / df;
  }

  TimeTrace trace;
  trace.sample_period = sample_period;
  trace.values = Vector::Zero(n_samples);

  bool silent = true;
  for (double d : density) silent = silent && d == 0.0;
  if (silent) return trace;

  // Periodogram convention: P_k = 2 dt |X_k|^2 / n (interior), dt |X_k|^2 / n (Nyquist).
  Rng rng(stream_seed(seed, 0x6e6f697365ULL));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::complex<double>> spectrum(half + 1, {0.0, 0.0});
  for (std::size_t k = 1; k <= half; ++k) {
    const double re = normal(rng);
    const double im = normal(rng);
    if (k == half) {
      spectrum[k] = {std::sqrt(density[k] * static_cast<double>(n) / sample_period) * re, 0.0};
    } else {
      const double scale = std::sqrt(density[k] * static_cast<double>(n) / (4.0 * sample_period));
      spectrum[k] = {scale * re, scale * im};
    }
  }
  density = {};

  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<double> time(n);
  fft.inv(time, spectrum, static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < n_samples; ++i) trace.values[i] = time[static_cast<std::size_t>(i)];
  return trace;
}

void validate(const TransmonSpec& spec) {
  if (!(spec.f_max > 0.0)) throw DomainError("transmon f_max must be positive");
}

namespace {
void check_flux(double phi) {
  if (!(std::abs(phi) < 0.5)) throw DomainError("flux bias must satisfy |phi| < 0.5 Phi0");
}
}  // namespace

double frequency_at_flux(const TransmonSpec& spec, double phi) {
  check_flux(phi);
  return spec.f_max * std::sqrt(std::abs(std::cos(kPi * phi)));
}

double flux_sensitivity(const TransmonSpec& spec, double phi) {
  check_flux(phi);
  const double c = std::cos(kPi * phi);
  return spec.f_max * kPi * std::abs(std::sin(kPi * phi)) / (2.0 * std::sqrt(c));
}

double flux_at_frequency(const TransmonSpec& spec, double frequency) {
  if (!(frequency > 0.0 && frequency <= spec.f_max))
    throw DomainError("frequency must lie in (0, f_max]");
  const double r = frequency / spec.f_max;
  return std::acos(r * r) / kPi;
}

double flux_noise_to_frequency_noise(const TransmonSpec& spec, double phi, double s_flux) {
  const double d = flux_sensitivity(spec, phi);
  return d * d * s_flux;
}

NoiseModel flux_noise_model(const TransmonSpec& spec, double phi, double sqrt_a_phi) {
  NoiseModel m;
  m.amplitude_at_1hz = flux_noise_to_frequency_noise(spec, phi, 2.0 * sqrt_a_phi * sqrt_a_phi);
  m.exponent_alpha = 1.0;
  return m;
}

NoiseModel rescale_to_bias(const NoiseModel& model, const TransmonSpec& spec, double phi_from, double phi_to) {
  const double from = flux_sensitivity(spec, phi_from);
  if (!(from > 0.0)) throw DomainError("rescale_to_bias: reference bias has zero flux sensitivity");
  const double r = flux_sensitivity(spec, phi_to) / from;
  NoiseModel out = model;
  out.amplitude_at_1hz *= r * r;
  for (auto& line : out.lines) line.power *= r * r;
  return out;
}

}  // namespace qfb
