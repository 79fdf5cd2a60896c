#include "qfb/study.hpp"

#include "qfb/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

namespace qfb {

namespace {

struct RealizationSpectra {
  SpectrumEstimate error, truth, intrinsic, estimator, cross;
  int saturations = 0;
};

}  // namespace

LoopSpectra loop_spectra(const NoiseModel& model, const RamseyConfig& rcfg, const LoopConfig& lcfg,
                         const LoopSpectraOptions& options, std::uint64_t seed) {
  if (options.realizations < 1) throw DomainError("loop_spectra: realizations must be >= 1");
  validate(lcfg, rcfg);
  const auto one = [&](std::size_t i) {
    ClosedLoopOptions keep;
    keep.keep_shots = options.cross;
    const auto rec = run_closed_loop(model, rcfg, lcfg, options.n_estimates, derive_seed(seed, i), keep);
    RealizationSpectra out;
    out.error = periodogram(rec.error_signal, options.window);
    out.truth = periodogram(rec.true_frequency, options.window);
    out.intrinsic = periodogram(rec.intrinsic, options.window);
    // The detuning behind e[n] is -(intrinsic[n] + p[n-1]).
    TimeTrace estimator = rec.error_signal;
    for (Eigen::Index n = 0; n < estimator.size(); ++n) {
      const double p_prev = n > 0 ? rec.control_signal.values[n - 1]
                                  : rec.control_signal.values[0] - lcfg.gain * rec.error_signal.values[0];
      estimator.values[n] += rec.intrinsic.values[n] + p_prev;
    }
    out.estimator = periodogram(estimator, options.window);
    if (options.cross) {
      auto split = split_shots_for_cross(rec.shots, rcfg);
      split.even.sample_period = split.odd.sample_period = rec.error_signal.sample_period;
      out.cross = cross_psd_suppression(split.even, split.odd, 1, 0.0, options.window);
    }
    out.saturations = rec.saturations;
    return out;
  };
  const auto parts = parallel_map(static_cast<std::size_t>(options.realizations), options.workers, one);

  SpectrumAverager error, truth, intrinsic, estimator, cross;
  LoopSpectra out;
  for (const auto& p : parts) {
    error.add(p.error);
    truth.add(p.truth);
    intrinsic.add(p.intrinsic);
    estimator.add(p.estimator);
    if (options.cross) cross.add(p.cross);
    out.saturations += p.saturations;
  }
  out.error = error.mean();
  out.truth = truth.mean();
  out.intrinsic = intrinsic.mean();
  out.estimator = estimator.mean();
  if (options.cross) out.cross = cross.mean();
  return out;
}

LoopModel loop_model(const NoiseModel& model, double f, const RamseyConfig& rcfg, const LoopConfig& lcfg) {
  const double period = lcfg.update_period(rcfg);
  const double dt = rcfg.cycle_time / lcfg.samples_per_shot;
  LoopModel out;
  out.sampled_open = sampled_psd([&](double g) { return model_psd(model, g); }, f, rcfg, dt, period,
                                 lcfg.averaging);
  const double sigma = sampling_noise_sigma(rcfg.tau, rcfg.shots_per_estimate);
  out.sampling = f <= 0.5 / period * (1.0 + 1e-12) ? 2.0 * sigma * sigma * period : 0.0;
  out.error = error_signal_psd(out.sampled_open, out.sampling, f, lcfg, rcfg);
  out.truth = closed_loop_psd(out.sampled_open, out.sampling, f, lcfg, rcfg);
  return out;
}

PsdFunction residual_frequency_psd(const NoiseModel& model, const RamseyConfig& rcfg, const LoopConfig& lcfg,
                                   double f_lower, double f_upper, double band_limit, double extra_time) {
  validate(lcfg, rcfg);
  if (!(f_lower > 0.0 && f_upper > f_lower && band_limit > 0.0) || extra_time < 0.0)
    throw DomainError("residual_frequency_psd: invalid band");
  const double period = lcfg.update_period(rcfg) + extra_time;
  const int n = rcfg.shots_per_estimate;
  const double window = lcfg.averaging == SampleAveraging::FreeEvolution ? rcfg.tau : rcfg.cycle_time;
  const double sigma = sampling_noise_sigma(rcfg.tau, n);

  // Window response relative to the update instant: shot j (1..N) ends j
  // cycles before it.
  const auto window_response = [&](double f) {
    std::complex<double> k{0.0, 0.0};
    for (int j = 1; j <= n; ++j) k += std::polar(1.0, -kTwoPi * f * (j * rcfg.cycle_time - 0.5 * window));
    const double x = kPi * f * window;
    return k * ((x == 0.0 ? 1.0 : std::sin(x) / x) / n);
  };
  const auto hold = [&](double f) {  // integral of exp(-i 2 pi f t) over [0, period]
    const double x = kPi * f * period;
    return period * (x == 0.0 ? 1.0 : std::sin(x) / x) * std::polar(1.0, -x);
  };
  const auto two_sided = [&](double f) {
    const double af = std::abs(f);
    return af > 0.0 && af <= band_limit ? 0.5 * model_psd(model, af) : 0.0;
  };
  const auto evaluate = [&](double f) {
    const auto hp = control_response(lcfg.gain, std::polar(1.0, kTwoPi * f * period));
    const auto r = hold(f);
    const auto coherent = 1.0 - r * hp * window_response(f) / period;
    double aliased = 0.0;
    const auto kmax = static_cast<long>(std::ceil((band_limit + f) * period));
    for (long k = -kmax; k <= kmax; ++k) {
      if (k == 0) continue;
      const double g = f + static_cast<double>(k) / period;
      const double s = two_sided(g);
      if (s > 0.0) aliased += std::norm(window_response(g)) * s;
    }
    aliased /= period;
    const double incoherent = std::norm(r) / period * std::norm(hp) * (aliased + sigma * sigma);
    return 2.0 * (std::norm(coherent) * two_sided(f) + incoherent);
  };

  constexpr int kPerDecade = 128;
  const auto points = static_cast<int>(std::ceil(std::log10(f_upper / f_lower) * kPerDecade)) + 1;
  std::vector<double> fs(static_cast<std::size_t>(points)), ps(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) {
    fs[static_cast<std::size_t>(i)] = f_lower * std::pow(f_upper / f_lower, static_cast<double>(i) / (points - 1));
    ps[static_cast<std::size_t>(i)] = std::max(evaluate(fs[static_cast<std::size_t>(i)]), 1e-300);
  }
  return log_log_interpolant(std::move(fs), std::move(ps));
}

std::vector<RamseyBlock> fit_sections(const InterleavedResult& result, int passes_per_section,
                                      double frequency_guess) {
  if (passes_per_section < 1) throw DomainError("fit_sections: passes_per_section must be >= 1");
  const Eigen::Index sections = result.p1.rows() / passes_per_section;
  Vector tau(static_cast<Eigen::Index>(result.tau_r.size()));
  for (std::size_t i = 0; i < result.tau_r.size(); ++i) tau[static_cast<Eigen::Index>(i)] = result.tau_r[i];
  std::vector<RamseyBlock> out;
  out.reserve(static_cast<std::size_t>(sections));
  for (Eigen::Index s = 0; s < sections; ++s) {
    RamseyBlock block;
    std::tie(block.mean, block.sem) = result.average(s * passes_per_section, passes_per_section);
    block.fit = fit_ramsey_scan(tau, block.mean, frequency_guess);
    out.push_back(std::move(block));
  }
  return out;
}

namespace {

double mean_of(const std::vector<double>& v) {
  double sum = 0.0;
  for (double x : v) sum += x;
  return v.empty() ? 0.0 : sum / static_cast<double>(v.size());
}

double section_mean_t2(const InterleavedResult& scan, int passes, double guess) {
  std::vector<double> t2;
  for (const auto& block : fit_sections(scan, passes, guess))
    if (block.fit.converged) t2.push_back(block.fit.t2);
  return mean_of(t2);
}

}  // namespace

double CoherenceComparison::mean_t2_on() const {
  std::vector<double> v;
  for (const auto& r : realizations) v.push_back(r.on.t2);
  return mean_of(v);
}

double CoherenceComparison::mean_t2_off() const {
  std::vector<double> v;
  for (const auto& r : realizations) v.push_back(r.off.t2);
  return mean_of(v);
}

CoherenceComparison compare_coherence(const NoiseModel& model, const RamseyConfig& rcfg, const LoopConfig& lcfg,
                                      const InterleavedConfig& icfg, int realizations,
                                      const std::vector<int>& sections, const Vector& envelope_times,
                                      std::uint64_t seed, unsigned workers) {
  if (realizations < 1) throw DomainError("compare_coherence: realizations must be >= 1");
  validate(icfg);
  validate(lcfg, rcfg);
  const double trace_nyquist = 0.5 * lcfg.samples_per_shot / rcfg.cycle_time;
  const double guess = icfg.set_detuning;

  const auto one = [&](std::size_t i) {
    const auto s = derive_seed(seed, i);
    InterleavedConfig on_cfg = icfg;
    on_cfg.feedback = true;
    on_cfg.record_residual = true;
    InterleavedConfig off_cfg = icfg;
    off_cfg.feedback = false;
    off_cfg.record_residual = false;

    CoherenceRealization out;
    out.scan_on = simulate_interleaved_ramsey(model, rcfg, lcfg, on_cfg, s);
    out.scan_off = simulate_interleaved_ramsey(model, rcfg, lcfg, off_cfg, s);
    out.on = fit_sections(out.scan_on, icfg.passes, guess).front().fit;
    out.off = fit_sections(out.scan_off, icfg.passes, guess).front().fit;
    out.duration = out.scan_on.pass_duration * icfg.passes;
    for (int size : sections) {
      out.section_t2_on.push_back(section_mean_t2(out.scan_on, size, guess));
      out.section_t2_off.push_back(section_mean_t2(out.scan_off, size, guess));
    }

    const auto measured = welch(out.scan_on.residual, 16, 0.5);
    out.scan_on.residual = TimeTrace{};
    out.predicted_on = with_relaxation(
        decay_envelope(interpolate_psd(measured), envelope_times, 1.0 / out.duration, trace_nyquist), icfg.t1);
    for (Eigen::Index k = 0; k < envelope_times.size(); ++k) {
      const double predicted = out.predicted_on.chi[k];
      if (!(predicted > 0.2)) continue;
      out.envelope_deviation =
          std::max(out.envelope_deviation, std::abs(out.on.envelope(envelope_times[k]) / predicted - 1.0));
    }
    return out;
  };

  CoherenceComparison out;
  out.sections = sections;
  out.realizations = parallel_map(static_cast<std::size_t>(realizations), workers, one);
  const auto psd = [&](double f) { return model_psd(model, f); };
  out.model_off = with_relaxation(
      decay_envelope(psd, envelope_times, 1.0 / out.realizations.front().duration, trace_nyquist), icfg.t1);
  return out;
}

FluxSweep flux_sweep(const TransmonSpec& spec, const RamseyConfig& rcfg, LoopConfig lcfg,
                     const InterleavedConfig& probe, const FluxSweepOptions& options, std::uint64_t seed,
                     unsigned workers) {
  if (options.fluxes.size() < 3) throw DomainError("flux_sweep: need at least 3 bias points");
  if (!(options.sqrt_a_phi > 0.0)) throw DomainError("flux_sweep: flux-noise amplitude must be positive");
  lcfg.samples_per_shot = options.samples_per_shot;
  validate(lcfg, rcfg);
  const double t1 = probe.t1;

  const auto one = [&](std::size_t i) {
    FluxPoint pt;
    pt.flux = options.fluxes[i];
    pt.sensitivity = flux_sensitivity(spec, pt.flux);
    pt.frequency = frequency_at_flux(spec, pt.flux);
    const auto model = flux_noise_model(spec, pt.flux, options.sqrt_a_phi);

    // Rough coherence time for the delay grid: 1/f decay with a bandwidth
    // factor of about 13.
    const double gamma_guess = kTwoPi * options.sqrt_a_phi * std::sqrt(13.0) * pt.sensitivity;
    const double t2_guess = 1.0 / (gamma_guess + (std::isinf(t1) ? 0.0 : 0.5 / t1));
    InterleavedConfig icfg = probe;
    icfg.tau_r_grid = linear_delay_grid(3.0 * t2_guess, options.delay_points);
    icfg.passes = options.passes;
    icfg.record_residual = false;
    // About five oscillation periods over the grid.
    icfg.set_detuning = 5.0 / (3.0 * t2_guess);

    const auto s = derive_seed(seed, i);
    icfg.feedback = false;
    const auto off = simulate_interleaved_ramsey(model, rcfg, lcfg, icfg, s);
    icfg.feedback = true;
    const auto on = simulate_interleaved_ramsey(model, rcfg, lcfg, icfg, s);
    pt.t2_off = fit_sections(off, icfg.passes, icfg.set_detuning).front().fit.t2;
    pt.t2_on = fit_sections(on, icfg.passes, icfg.set_detuning).front().fit.t2;
    pt.gamma_off = pure_dephasing_rate(pt.t2_off, t1);
    pt.gamma_on = pure_dephasing_rate(pt.t2_on, t1);
    pt.duration = off.pass_duration * icfg.passes;
    return pt;
  };

  FluxSweep out;
  out.points = parallel_map(options.fluxes.size(), workers, one);
  std::vector<std::pair<double, double>> off, on;
  std::vector<double> t2, durations;
  for (const auto& pt : out.points) {
    if (!pt.gamma_off.relaxation_limited) off.emplace_back(pt.sensitivity, pt.gamma_off.rate);
    if (!pt.gamma_on.relaxation_limited) on.emplace_back(pt.sensitivity, pt.gamma_on.rate);
    t2.push_back(pt.t2_off);
    durations.push_back(pt.duration);
  }
  out.fit_off = dephasing_sensitivity_fit(off);
  out.fit_on = dephasing_sensitivity_fit(on);
  // Upper cutoff ~ 1/T2 (median over the sweep), lower cutoff 1/duration.
  std::sort(t2.begin(), t2.end());
  out.eta = bandwidth_factor(1.0 / mean_of(durations), 1.0 / t2[t2.size() / 2]);
  out.sqrt_a_phi_off = flux_noise_amplitude(out.fit_off.k, out.eta);
  out.sqrt_a_phi_on = flux_noise_amplitude(out.fit_on.k, out.eta);
  return out;
}

RBComparison compare_rb(const RBConfig& cfg, const NoiseModel& model, const RamseyConfig& rcfg,
                        const LoopConfig& lcfg, int repetitions, int repetition_randomizations,
                        std::uint64_t seed, unsigned workers) {
  if (repetitions < 0 || repetition_randomizations < 1)
    throw DomainError("compare_rb: invalid repetition settings");
  struct Part {
    RBResult result;
    RBRepetitionStudy repeated;
  };
  const std::size_t tasks = repetitions > 0 ? 4 : 2;
  const auto one = [&](std::size_t i) {
    RBConfig c = cfg;
    c.feedback_on = (i % 2) == 1;
    Part part;
    if (i < 2) {
      part.result = simulate_rb(c, model, rcfg, lcfg, seed);
    } else {
      c.n_randomizations = repetitions * repetition_randomizations;
      c.sequence_pool = repetition_randomizations;
      const int bootstrap = c.bootstrap_samples;
      c.bootstrap_samples = 0;
      const auto s = derive_seed(seed, 1);
      const auto run = simulate_rb(c, model, rcfg, lcfg, s);
      part.repeated = rb_repetitions(run, repetition_randomizations, bootstrap, s);
    }
    return part;
  };
  auto parts = parallel_map(tasks, workers, one);
  RBComparison out;
  out.off = std::move(parts[0].result);
  out.on = std::move(parts[1].result);
  if (tasks == 4) {
    out.repeated_off = std::move(parts[2].repeated);
    out.repeated_on = std::move(parts[3].repeated);
  }
  return out;
}

}  // namespace qfb
