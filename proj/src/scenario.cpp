#include "qfb/scenario.hpp"

#include "qfb/csv.hpp"
#include "qfb/study.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>

namespace qfb {
namespace {

namespace fs = std::filesystem;

class Outputs {
 public:
  explicit Outputs(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

  void write(const std::string& name, const std::function<void(std::ostream&)>& body) {
    std::ofstream out(dir_ / name, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + (dir_ / name).string());
    body(out);
    if (!out) throw std::runtime_error("write failed: " + (dir_ / name).string());
    names_.push_back(name);
  }

  std::vector<std::string> names() && { return std::move(names_); }

 private:
  fs::path dir_;
  std::vector<std::string> names_;
};

void kv(std::ostream& out, const char* key, double value) { out << key << '=' << csv::number(value) << '\n'; }
void kv(std::ostream& out, const char* key, int value) { out << key << '=' << value << '\n'; }

Vector linear_times(double max_time, int points) {
  return Vector::LinSpaced(points, 0.0, max_time);
}

void write_spectra(std::ostream& out, std::initializer_list<std::string_view> columns,
                   const Vector& f, const std::vector<std::function<double(Eigen::Index)>>& cols) {
  csv::header(out, columns);
  for (Eigen::Index k = 0; k < f.size(); ++k) {
    out << csv::number(f[k]);
    for (const auto& c : cols) out << ',' << csv::number(c(k));
    out << '\n';
  }
}

LoopSpectraOptions spectra_options(const Parameters& p, unsigned workers, bool cross) {
  LoopSpectraOptions o;
  o.n_estimates = p.n_estimates;
  o.realizations = p.realizations;
  o.window = p.window;
  o.cross = cross;
  o.workers = workers;
  return o;
}

void psd_scenario(const Parameters& p, const ScenarioOptions& opt, Outputs& files) {
  LoopConfig open = p.loop;
  open.gain = 0.0;
  const auto spectra = loop_spectra(p.noise, p.ramsey, open, spectra_options(p, opt.workers, true), opt.seed);
  const auto sampling = sampling_noise_psd(p.ramsey);
  const double nyquist = 0.5 / open.update_period(p.ramsey);

  files.write("psd_open.csv", [&](std::ostream& out) { write_csv(out, spectra.error); });
  files.write("psd_suppressed.csv", [&](std::ostream& out) { write_csv(out, spectra.cross); });
  files.write("psd_fit.txt", [&](std::ostream& out) {
    const std::pair band{p.fit_low, std::min(p.fit_high, nyquist)};
    const auto plain = fit_power_law(spectra.error, band);
    const auto cross = fit_power_law(spectra.cross, band);
    kv(out, "injected_amplitude_hz2_per_hz", p.noise.amplitude_at_1hz);
    kv(out, "injected_alpha", p.noise.exponent_alpha);
    kv(out, "fit_low_hz", band.first);
    kv(out, "fit_high_hz", band.second);
    kv(out, "plain_amplitude_hz2_per_hz", plain.amplitude_at_1hz);
    kv(out, "plain_alpha", plain.exponent);
    kv(out, "cross_amplitude_hz2_per_hz", cross.amplitude_at_1hz);
    kv(out, "cross_alpha", cross.exponent);
    kv(out, "sampling_plateau_model_hz2_per_hz", sampling.plateau);
    kv(out, "sampling_cutoff_hz", sampling.cutoff);
    if (nyquist > 1e3) {
      kv(out, "plain_mean_above_1khz_hz2_per_hz", band_average(spectra.error, 1e3, nyquist));
      kv(out, "estimator_mean_above_1khz_hz2_per_hz", band_average(spectra.estimator, 1e3, nyquist));
    }
    kv(out, "realizations", p.realizations);
    kv(out, "saturations", spectra.saturations);
  });
}

void closed_loop_scenario(const Parameters& p, const ScenarioOptions& opt, Outputs& files) {
  const auto spectra = loop_spectra(p.noise, p.ramsey, p.loop, spectra_options(p, opt.workers, false), opt.seed);
  const auto& f = spectra.error.frequencies;
  std::vector<LoopModel> model(static_cast<std::size_t>(f.size()));
  for (Eigen::Index k = 0; k < f.size(); ++k) model[k] = loop_model(p.noise, f[k], p.ramsey, p.loop);

  files.write("closed_loop_spectra.csv", [&](std::ostream& out) {
    write_spectra(out,
                  {"frequency_hz", "error_mc", "error_model", "truth_mc", "truth_model", "open_mc", "open_model"},
                  f,
                  {[&](Eigen::Index k) { return spectra.error.psd[k]; },
                   [&](Eigen::Index k) { return model[k].error; },
                   [&](Eigen::Index k) { return spectra.truth.psd[k]; },
                   [&](Eigen::Index k) { return model[k].truth; },
                   [&](Eigen::Index k) { return spectra.intrinsic.psd[k]; },
                   [&](Eigen::Index k) { return model[k].sampled_open; }});
  });
  const auto record = run_closed_loop(p.noise, p.ramsey, p.loop, p.n_estimates, derive_seed(opt.seed, 0));
  files.write("closed_loop_trace.csv", [&](std::ostream& out) { write_csv(out, record); });
}

void transfer_scenario(const Parameters& p, const ScenarioOptions&, Outputs& files) {
  const double nyquist = 0.5 / p.loop.update_period(p.ramsey);
  if (!(p.transfer_f_min < nyquist))
    throw ConfigError({{"transfer.f_min_hz", "must lie below the update Nyquist frequency", false}});
  std::vector<double> f{0.0};
  const int n = p.transfer_points;
  for (int i = 0; i < n; ++i)
    f.push_back(p.transfer_f_min * std::pow(nyquist / p.transfer_f_min, n > 1 ? double(i) / (n - 1) : 1.0));
  f.back() = nyquist;
  files.write("transfer.csv", [&](std::ostream& out) {
    csv::header(out, {"frequency_hz", "hp_mag", "hp_phase_rad", "he_mag", "he_phase_rad"});
    for (double x : f) {
      const auto hp = transfer_p(x, p.loop, p.ramsey);
      const auto he = transfer_e(x, p.loop, p.ramsey);
      csv::row(out, x, std::abs(hp), std::arg(hp), std::abs(he), std::arg(he));
    }
  });
}

CoherenceComparison run_coherence(const Parameters& p, const ScenarioOptions& opt, const std::vector<int>& sections) {
  LoopConfig lcfg = p.loop;
  lcfg.samples_per_shot = p.interleaved_samples_per_shot;
  return compare_coherence(p.noise, p.ramsey, lcfg, p.interleaved, p.interleaved_realizations, sections,
                           linear_times(p.envelope_max_time, p.envelope_points), opt.seed, opt.workers);
}

void ramsey_scenario(const Parameters& p, const ScenarioOptions& opt, Outputs& files) {
  const auto cmp = run_coherence(p, opt, {});
  const auto& first = cmp.realizations.front();
  const auto scan = [&](const InterleavedResult& r) {
    return [&r](std::ostream& out) {
      const auto [mean, sem] = r.average(0, r.p1.rows());
      write_scan_csv(out, r.tau_r, mean, sem);
    };
  };
  files.write("ramsey_scan_on.csv", scan(first.scan_on));
  files.write("ramsey_scan_off.csv", scan(first.scan_off));
  files.write("ramsey_envelope_on.csv", [&](std::ostream& out) { write_envelope_csv(out, first.predicted_on); });
  files.write("ramsey_envelope_off.csv", [&](std::ostream& out) { write_envelope_csv(out, cmp.model_off); });
  files.write("ramsey_fits.csv", [&](std::ostream& out) {
    csv::header(out, {"realization", "duration_s", "t2_on_s", "t2_off_s", "gamma_exp_on", "gamma_gauss_on",
                      "gamma_exp_off", "gamma_gauss_off", "envelope_deviation"});
    for (std::size_t i = 0; i < cmp.realizations.size(); ++i) {
      const auto& r = cmp.realizations[i];
      csv::row(out, i, r.duration, r.on.t2, r.off.t2, r.on.gamma_exp, r.on.gamma_gauss, r.off.gamma_exp,
               r.off.gamma_gauss, r.envelope_deviation);
    }
  });
  files.write("ramsey_summary.txt", [&](std::ostream& out) {
    kv(out, "realizations", static_cast<int>(cmp.realizations.size()));
    kv(out, "mean_t2_on_s", cmp.mean_t2_on());
    kv(out, "mean_t2_off_s", cmp.mean_t2_off());
    kv(out, "t2_ratio", cmp.ratio());
    kv(out, "model_t2_off_s", extract_t2(cmp.model_off));
    double worst = 0.0;
    for (const auto& r : cmp.realizations) worst = std::max(worst, r.envelope_deviation);
    kv(out, "worst_envelope_deviation", worst);
  });
}

void coherence_sweep_scenario(const Parameters& p, const ScenarioOptions& opt, Outputs& files) {
  const auto cmp = run_coherence(p, opt, p.sections);
  files.write("coherence_sweep.csv", [&](std::ostream& out) {
    csv::header(out, {"realization", "passes", "duration_s", "t2_on_s", "t2_off_s"});
    for (std::size_t i = 0; i < cmp.realizations.size(); ++i) {
      const auto& r = cmp.realizations[i];
      const double pass = r.scan_on.pass_duration;
      for (std::size_t s = 0; s < cmp.sections.size(); ++s)
        csv::row(out, i, cmp.sections[s], pass * cmp.sections[s], r.section_t2_on[s], r.section_t2_off[s]);
    }
  });
}

void flux_sweep_scenario(const Parameters& p, const ScenarioOptions& opt, Outputs& files) {
  FluxSweepOptions o;
  for (int i = 0; i < p.flux_points; ++i)
    o.fluxes.push_back(p.flux_points > 1 ? p.flux_min + (p.flux_max - p.flux_min) * i / (p.flux_points - 1)
                                         : p.flux_min);
  o.sqrt_a_phi = p.sqrt_a_phi;
  o.passes = p.flux_passes;
  o.delay_points = p.flux_delay_points;
  o.samples_per_shot = p.interleaved_samples_per_shot;
  const auto sweep = flux_sweep(p.transmon, p.ramsey, p.loop, p.interleaved, o, opt.seed, opt.workers);
  files.write("flux_sweep.csv", [&](std::ostream& out) {
    csv::header(out, {"flux_phi0", "frequency_hz", "sensitivity_hz_per_phi0", "t2_off_s", "t2_on_s",
                      "gamma_phi_off", "gamma_phi_on", "relaxation_limited_off", "relaxation_limited_on",
                      "duration_s"});
    for (const auto& pt : sweep.points)
      csv::row(out, pt.flux, pt.frequency, pt.sensitivity, pt.t2_off, pt.t2_on, pt.gamma_off.rate,
               pt.gamma_on.rate, int(pt.gamma_off.relaxation_limited), int(pt.gamma_on.relaxation_limited),
               pt.duration);
  });
  files.write("flux_sweep_summary.txt", [&](std::ostream& out) {
    kv(out, "injected_sqrt_a_phi_phi0", p.sqrt_a_phi);
    kv(out, "k_off_phi0", sweep.fit_off.k);
    kv(out, "r_squared_off", sweep.fit_off.r_squared);
    kv(out, "points_off", sweep.fit_off.points);
    kv(out, "k_on_phi0", sweep.fit_on.k);
    kv(out, "r_squared_on", sweep.fit_on.r_squared);
    kv(out, "points_on", sweep.fit_on.points);
    kv(out, "eta", sweep.eta);
    kv(out, "sqrt_a_phi_off_phi0", sweep.sqrt_a_phi_off);
    kv(out, "sqrt_a_phi_on_phi0", sweep.sqrt_a_phi_on);
  });
}

void rb_scenario(const Parameters& p, const ScenarioOptions& opt, Outputs& files) {
  const double phi = flux_at_frequency(p.transmon, p.rb_frequency);
  const auto noise = rescale_to_bias(p.noise, p.transmon, p.reference_flux, phi);
  const auto cmp = compare_rb(p.rb, noise, p.ramsey, p.loop, p.rb_repetitions, p.rb_repetition_randomizations,
                              opt.seed, opt.workers);
  files.write("rb_off.csv", [&](std::ostream& out) { write_csv(out, cmp.off); });
  files.write("rb_on.csv", [&](std::ostream& out) { write_csv(out, cmp.on); });
  files.write("rb_summary_off.txt", [&](std::ostream& out) { write_summary(out, cmp.off.summary); });
  files.write("rb_summary_on.txt", [&](std::ostream& out) { write_summary(out, cmp.on.summary); });
  if (p.rb_repetitions > 0) {
    files.write("rb_repetitions.csv", [&](std::ostream& out) {
      csv::header(out, {"repetition", "error_off", "ci_low_off", "ci_high_off", "error_on", "ci_low_on",
                        "ci_high_on"});
      const auto& a = cmp.repeated_off.repetitions;
      const auto& b = cmp.repeated_on.repetitions;
      for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i)
        csv::row(out, i, a[i].fit.error_per_gate, a[i].ci_low, a[i].ci_high, b[i].fit.error_per_gate, b[i].ci_low,
                 b[i].ci_high);
    });
  }
  files.write("rb_summary.txt", [&](std::ostream& out) {
    kv(out, "bias_phi0", phi);
    kv(out, "coherence_limit", coherence_limit(p.rb.gate_time, p.rb.t1, p.rb.t_phi1, p.rb.t_phi2));
    kv(out, "error_off", cmp.off.fitted_error_per_gate());
    kv(out, "error_on", cmp.on.fitted_error_per_gate());
    kv(out, "saturations_on", cmp.on.saturations);
    if (p.rb_repetitions > 0) {
      kv(out, "repetition_spread_off", cmp.repeated_off.spread());
      kv(out, "repetition_spread_on", cmp.repeated_on.spread());
      kv(out, "repetition_ci_width_off", cmp.repeated_off.median_ci_width);
      kv(out, "repetition_ci_width_on", cmp.repeated_on.median_ci_width);
      kv(out, "failed_fits_off", cmp.repeated_off.failed_fits);
      kv(out, "failed_fits_on", cmp.repeated_on.failed_fits);
    }
  });
}

using Runner = void (*)(const Parameters&, const ScenarioOptions&, Outputs&);

const std::map<std::string, Runner>& runners() {
  static const std::map<std::string, Runner> table{
      {"psd", psd_scenario},
      {"closed-loop", closed_loop_scenario},
      {"transfer", transfer_scenario},
      {"ramsey", ramsey_scenario},
      {"coherence-sweep", coherence_sweep_scenario},
      {"flux-sweep", flux_sweep_scenario},
      {"rb", rb_scenario},
  };
  return table;
}

}  // namespace

const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names{"psd",      "closed-loop", "transfer", "ramsey",
                                              "coherence-sweep", "flux-sweep", "rb"};
  return names;
}

std::vector<std::string> run_scenario(const std::string& name, const Config& config,
                                      const ScenarioOptions& options) {
  const auto it = runners().find(name);
  if (it == runners().end()) throw UsageError("unknown scenario '" + name + "'");
  if (options.workers < 1) throw UsageError("workers must be >= 1");
  const Parameters params = resolve(config);
  Outputs files(options.out_dir);
  it->second(params, options, files);
  files.write("manifest.txt", [&](std::ostream& out) { write_manifest(out, config, name, options.seed); });
  return std::move(files).names();
}

}  // namespace qfb
