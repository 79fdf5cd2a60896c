#pragma once

#include "qfb/coherence.hpp"
#include "qfb/loop.hpp"
#include "qfb/physics.hpp"
#include "qfb/ramsey.hpp"
#include "qfb/rb.hpp"
#include "qfb/spectral.hpp"

#include <cstdint>
#include <vector>

namespace qfb {

/// Realization-averaged spectra of a closed-loop run. All estimates share the
/// update-rate grid.
struct LoopSpectra {
  SpectrumEstimate error;      // e[n]
  SpectrumEstimate truth;      // intrinsic + p, right after each update
  SpectrumEstimate intrinsic;  // sampled intrinsic frequency
  SpectrumEstimate estimator;  // e[n] minus the detuning it estimates
  SpectrumEstimate cross;      // even/odd shot split, real part
  int saturations = 0;
};

struct LoopSpectraOptions {
  Eigen::Index n_estimates = 1 << 14;
  int realizations = 16;
  Window window = Window::Hann;
  bool cross = true;
  unsigned workers = 1;
};

/// Realization i uses derive_seed(seed, i).
LoopSpectra loop_spectra(const NoiseModel& model, const RamseyConfig& rcfg, const LoopConfig& lcfg,
                         const LoopSpectraOptions& options, std::uint64_t seed);

/// Model of the qubit frequency right after each update on the update grid:
/// window-averaged, aliased intrinsic noise plus sampling noise.
struct LoopModel {
  double sampled_open = 0.0;  // S_open seen by the estimator
  double sampling = 0.0;      // sampling-noise plateau below Nyquist
  double error = 0.0;         // |H_e|^2 (S_open + S_sampling)
  double truth = 0.0;         // |H_p - 1|^2 S_open + |H_p|^2 S_sampling
};

/// The intrinsic noise is taken on the simulation grid cycle_time / samples_per_shot.
LoopModel loop_model(const NoiseModel& model, double f, const RamseyConfig& rcfg, const LoopConfig& lcfg);

/// Time-averaged PSD of the residual qubit frequency x(t) + p(t) under
/// feedback, with p held between updates. Accounts for the estimation-window
/// response, the hold, and aliasing of intrinsic noise up to `band_limit`.
/// `extra_time` lengthens the update period (interleaved sequences).
/// Tabulated on a log grid over [f_lower, f_upper].
PsdFunction residual_frequency_psd(const NoiseModel& model, const RamseyConfig& rcfg, const LoopConfig& lcfg,
                                   double f_lower, double f_upper, double band_limit,
                                   double extra_time = 0.0);

/// One interleaved Ramsey realization reduced to scan averages and fits.
struct RamseyBlock {
  Vector mean;
  Vector sem;
  RamseyFit fit;
};

/// Fits over consecutive sections of `passes_per_section` passes. Trailing
/// passes that do not fill a section are ignored.
std::vector<RamseyBlock> fit_sections(const InterleavedResult& result, int passes_per_section,
                                      double frequency_guess);

/// Interleaved Ramsey with feedback on and off against the same noise.
struct CoherenceRealization {
  RamseyFit on;
  RamseyFit off;
  double duration = 0.0;  // s, one block
  /// Mean fitted T2 over the sections of each requested size, per size.
  std::vector<double> section_t2_on;
  std::vector<double> section_t2_off;
  /// Envelope predicted from the measured closed-loop residual PSD, with T1.
  DecayEnvelope predicted_on;
  /// Largest |fit / predicted - 1| where predicted > 0.2.
  double envelope_deviation = 0.0;
  InterleavedResult scan_on;
  InterleavedResult scan_off;
};

struct CoherenceComparison {
  std::vector<CoherenceRealization> realizations;
  std::vector<int> sections;
  /// Open-loop envelope from the noise model with f0 = 1 / block duration.
  DecayEnvelope model_off;

  double mean_t2_on() const;
  double mean_t2_off() const;
  double ratio() const { return mean_t2_on() / mean_t2_off(); }
};

/// Realization i uses derive_seed(seed, i); feedback on and off share it.
/// The noise grid is cycle_time / lcfg.samples_per_shot.
CoherenceComparison compare_coherence(const NoiseModel& model, const RamseyConfig& rcfg, const LoopConfig& lcfg,
                                      const InterleavedConfig& icfg, int realizations,
                                      const std::vector<int>& sections, const Vector& envelope_times,
                                      std::uint64_t seed, unsigned workers = 1);

/// Dephasing versus flux sensitivity.
struct FluxPoint {
  double flux = 0.0;          // Phi0
  double sensitivity = 0.0;   // |df/dphi|, Hz/Phi0
  double frequency = 0.0;     // Hz
  double t2_off = 0.0;
  double t2_on = 0.0;
  PureDephasing gamma_off;
  PureDephasing gamma_on;
  double duration = 0.0;      // s
};

struct FluxSweep {
  std::vector<FluxPoint> points;
  SensitivityFit fit_off;
  SensitivityFit fit_on;
  double eta = 0.0;           // bandwidth factor used for the amplitude
  double sqrt_a_phi_off = 0.0;  // Phi0, recovered from fit_off
  double sqrt_a_phi_on = 0.0;
};

struct FluxSweepOptions {
  std::vector<double> fluxes;  // Phi0
  double sqrt_a_phi = 2.8e-6;  // injected, Phi0
  int passes = 300;
  int delay_points = 41;
  int samples_per_shot = 7;
};

/// Bias point i uses derive_seed(seed, i). The delay grid of each point
/// spans three predicted coherence times. Points whose T2 exceeds 2 T1 are
/// kept but flagged and left out of the fits.
FluxSweep flux_sweep(const TransmonSpec& spec, const RamseyConfig& rcfg, LoopConfig lcfg,
                     const InterleavedConfig& probe, const FluxSweepOptions& options, std::uint64_t seed,
                     unsigned workers = 1);

struct RBComparison {
  RBResult off;
  RBResult on;
  RBRepetitionStudy repeated_off;  // empty when no repetitions were requested
  RBRepetitionStudy repeated_on;
};

/// Feedback off and on with common random numbers. The repetition study
/// replays `repetition_randomizations` fixed sequences `repetitions` times.
RBComparison compare_rb(const RBConfig& cfg, const NoiseModel& model, const RamseyConfig& rcfg,
                        const LoopConfig& lcfg, int repetitions, int repetition_randomizations,
                        std::uint64_t seed, unsigned workers = 1);

}  // namespace qfb
