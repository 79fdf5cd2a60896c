#include "qfb/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace qfb {

namespace {

const std::vector<ConfigKey> kKeys = {
    {"noise.amplitude_hz2_per_hz", "27.3e6", "A of S(f) = A (1 Hz / f)^alpha"},
    {"noise.alpha", "0.8", "spectral exponent"},
    {"noise.lines", "", "extra tones as freq_hz:power_hz2 pairs, comma separated"},
    {"noise.line_width_hz", "1", "top-hat width of a tone evaluated as a density"},
    {"transmon.f_max_ghz", "4.835", "sweet-spot frequency"},
    {"transmon.reference_flux_phi0", "0.11", "bias at which the noise section applies"},
    {"ramsey.tau_us", "1.25", "free evolution per estimation shot"},
    {"ramsey.cycle_time_us", "3.5", "full shot including readout and reset"},
    {"ramsey.shots_per_estimate", "20", "N"},
    {"ramsey.measurement_phase_rad", "1.5707963267948966", "phase of the second pulse"},
    {"ramsey.init_fidelity", "1", "symmetric contrast"},
    {"loop.gain", "0.35", "accumulator gain G"},
    {"loop.update_stride", "0", "estimation shots per update, 0 for N"},
    {"loop.mode", "real", "real or fixed_point"},
    {"loop.dac_full_scale_khz", "800", "fixed-point DAC range, +/-"},
    {"loop.dac_bits", "16", "fixed-point DAC resolution"},
    {"loop.accumulator_frac_bits", "16", "accumulator bits below one DAC step"},
    {"loop.idle_gap_us", "0", "computation time between updates"},
    {"loop.samples_per_shot", "1", "noise trace samples per shot cycle"},
    {"loop.averaging", "free_evolution", "free_evolution or full_period"},
    {"loop.warmup_updates", "64", "updates discarded before recording"},
    {"sim.n_estimates", "16384", "estimates per closed-loop realization"},
    {"sim.realizations", "100", "closed-loop realizations averaged"},
    {"sim.window", "hann", "hann or rectangular"},
    {"spectrum.fit_low_hz", "10", "power-law fit band, lower edge"},
    {"spectrum.fit_high_hz", "7000", "power-law fit band, upper edge (capped at Nyquist)"},
    {"transfer.points", "200", "log-spaced frequencies up to the update Nyquist"},
    {"transfer.f_min_hz", "1", "lowest tabulated frequency"},
    {"interleaved.max_delay_us", "20", "longest probe delay"},
    {"interleaved.delay_points", "41", "probe delays per pass"},
    {"interleaved.passes", "3200", "passes per realization"},
    {"interleaved.realizations", "3", "independent noise realizations"},
    {"interleaved.set_detuning_mhz", "0.5", "deliberate probe detuning"},
    {"interleaved.t1_us", "30", "energy relaxation during the probe"},
    {"interleaved.readout", "expectation", "expectation or single_shot"},
    {"interleaved.samples_per_shot", "7", "noise trace samples per shot cycle"},
    {"coherence.envelope_max_us", "40", "envelope time grid span"},
    {"coherence.envelope_points", "161", "envelope time grid points"},
    {"coherence.sections", "200,400,800,1600,3200", "passes per section for the duration sweep"},
    {"flux.points", "11", "bias points"},
    {"flux.min_phi0", "0.02", "smallest bias"},
    {"flux.max_phi0", "0.2", "largest bias"},
    {"flux.sqrt_a_phi_uphi0", "2.8", "injected 1/f flux-noise amplitude"},
    {"flux.passes", "300", "passes per bias point"},
    {"flux.delay_points", "41", "probe delays per pass"},
    {"rb.lengths", "1,50,100,200,300,500,700,1000", "Clifford sequence lengths"},
    {"rb.randomizations", "50", "random sequences"},
    {"rb.shots_per_sequence", "50", "time slots per sequence"},
    {"rb.gate_time_ns", "40", "Clifford duration"},
    {"rb.t1_us", "30", "energy relaxation"},
    {"rb.t_phi1_us", "inf", "exponential dephasing time"},
    {"rb.t_phi2_us", "inf", "Gaussian dephasing time"},
    {"rb.depolarizing", "0", "per-gate depolarizing probability"},
    {"rb.static_detuning_khz", "0", "constant detuning"},
    {"rb.bootstrap_samples", "200", "bootstrap resamples for the 68% interval"},
    {"rb.frequency_ghz", "4.44", "operating point; the noise is rescaled to it"},
    {"rb.repetitions", "250", "repeated experiments for the stability study, 0 to skip"},
    {"rb.repetition_randomizations", "7", "fixed sequences per repeated experiment"},
};

bool known(const std::string& key) {
  return std::any_of(kKeys.begin(), kKeys.end(), [&](const ConfigKey& k) { return key == k.name; });
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

double parse_number(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t == "inf" || t == "+inf") return std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc{} || end != t.data() + t.size() || t.empty() || std::isnan(v))
    throw ConfigError({{key, "expected a number, got '" + text + "'"}});
  return v;
}

int parse_integer(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  long long v = 0;
  const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc{} || end != t.data() + t.size() || t.empty() || v < std::numeric_limits<int>::min() ||
      v > std::numeric_limits<int>::max())
    throw ConfigError({{key, "expected an integer, got '" + text + "'"}});
  return static_cast<int>(v);
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

ConfigError::ConfigError(std::vector<ConfigIssue> issues)
    : std::runtime_error([&] {
        std::string msg = "invalid configuration:";
        for (const auto& i : issues) msg += "\n  " + i.key + ": " + i.message;
        return msg;
      }()),
      issues_(std::move(issues)) {}

bool ConfigError::divergence_only() const {
  return !issues_.empty() &&
         std::all_of(issues_.begin(), issues_.end(), [](const ConfigIssue& i) { return i.divergence; });
}

const std::vector<ConfigKey>& config_keys() { return kKeys; }

Config::Config() {
  for (const auto& k : kKeys) values_[k.name] = k.default_value;
}

Config Config::from_ini(std::istream& in) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError({{"line " + std::to_string(e.line()), e.message()}});
  }
  Config cfg;
  std::vector<ConfigIssue> issues;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      issues.push_back({section, "key outside a [section]"});
      continue;
    }
    for (const auto& [key, value] : body) {
      const std::string name = section + "." + key;
      if (!known(name)) {
        issues.push_back({name, "unknown key"});
        continue;
      }
      cfg.values_[name] = trim(value.data());
    }
  }
  if (!issues.empty()) throw ConfigError(std::move(issues));
  return cfg;
}

Config Config::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({{path, "cannot open configuration file"}});
  return from_ini(in);
}

void Config::set(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError({{assignment, "expected section.key=value"}});
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void Config::set(const std::string& key, const std::string& value) {
  if (!known(key)) throw ConfigError({{key, "unknown key"}});
  values_[key] = value;
}

const std::string& Config::text(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError({{key, "unknown key"}});
  return it->second;
}

double Config::number(const std::string& key) const { return parse_number(key, text(key)); }

int Config::integer(const std::string& key) const { return parse_integer(key, text(key)); }

bool Config::flag(const std::string& key) const {
  const std::string t = trim(text(key));
  if (t == "true" || t == "1" || t == "on") return true;
  if (t == "false" || t == "0" || t == "off") return false;
  throw ConfigError({{key, "expected true or false, got '" + t + "'"}});
}

std::vector<double> Config::numbers(const std::string& key) const {
  std::vector<double> out;
  for (const auto& item : split(text(key), ',')) out.push_back(parse_number(key, item));
  return out;
}

std::vector<int> Config::integers(const std::string& key) const {
  std::vector<int> out;
  for (const auto& item : split(text(key), ',')) out.push_back(parse_integer(key, item));
  return out;
}

namespace {

/// Collects parse and range errors instead of stopping at the first.
class Resolver {
 public:
  explicit Resolver(const Config& cfg) : cfg_(cfg) {}

  template <typename F>
  auto get(const std::string& key, F&& read) -> decltype(read(key)) {
    try {
      return read(key);
    } catch (const ConfigError& e) {
      for (const auto& i : e.issues()) issues.push_back(i);
      return {};
    }
  }
  double number(const std::string& key) { return get(key, [&](const std::string& k) { return cfg_.number(k); }); }
  int integer(const std::string& key) { return get(key, [&](const std::string& k) { return cfg_.integer(k); }); }
  std::vector<int> integers(const std::string& key) {
    return get(key, [&](const std::string& k) { return cfg_.integers(k); });
  }
  std::string text(const std::string& key) { return trim(cfg_.text(key)); }

  void require(bool ok, const std::string& key, const std::string& message) {
    if (!ok) issues.push_back({key, message});
  }

  /// Runs a module validator; its message is reported against `section`.
  template <typename F>
  bool check(const std::string& section, F&& validator) {
    try {
      validator();
      return true;
    } catch (const DivergenceError& e) {
      issues.push_back({section, strip(section, e.what()), true});
    } catch (const std::exception& e) {
      issues.push_back({section, strip(section, e.what())});
    }
    return false;
  }

  std::vector<ConfigIssue> issues;

 private:
  static std::string strip(const std::string& section, std::string message) {
    const auto prefix = section + ": ";
    return message.starts_with(prefix) ? message.substr(prefix.size()) : message;
  }

  const Config& cfg_;
};

Parameters resolve_collect(const Config& config, std::vector<ConfigIssue>& issues) {
  Resolver r(config);
  Parameters p;

  p.noise.amplitude_at_1hz = r.number("noise.amplitude_hz2_per_hz");
  p.noise.exponent_alpha = r.number("noise.alpha");
  p.noise.line_width = r.number("noise.line_width_hz");
  for (const auto& item : split(config.text("noise.lines"), ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) {
      r.require(false, "noise.lines", "expected freq_hz:power_hz2, got '" + item + "'");
      continue;
    }
    SpectralLine line;
    line.frequency = r.get("noise.lines", [&](const std::string& k) { return parse_number(k, item.substr(0, colon)); });
    line.power = r.get("noise.lines", [&](const std::string& k) { return parse_number(k, item.substr(colon + 1)); });
    p.noise.lines.push_back(line);
  }
  r.check("noise", [&] { validate(p.noise); });

  p.transmon.f_max = r.number("transmon.f_max_ghz") * 1e9;
  p.reference_flux = r.number("transmon.reference_flux_phi0");
  r.check("transmon", [&] { validate(p.transmon); });
  r.require(p.reference_flux > 0.0 && p.reference_flux < 0.5, "transmon.reference_flux_phi0",
            "must lie in (0, 0.5) so the bias is flux sensitive");

  p.ramsey.tau = r.number("ramsey.tau_us") * 1e-6;
  p.ramsey.cycle_time = r.number("ramsey.cycle_time_us") * 1e-6;
  p.ramsey.shots_per_estimate = r.integer("ramsey.shots_per_estimate");
  p.ramsey.measurement_phase = r.number("ramsey.measurement_phase_rad");
  p.ramsey.init_fidelity = r.number("ramsey.init_fidelity");
  bool ramsey_ok = p.ramsey.tau < p.ramsey.cycle_time;
  if (!ramsey_ok)
    r.require(false, "ramsey.tau_us", "free evolution must be shorter than ramsey.cycle_time_us");
  else
    ramsey_ok = r.check("ramsey", [&] { validate(p.ramsey); });

  p.loop.gain = r.number("loop.gain");
  p.loop.update_stride = r.integer("loop.update_stride");
  const auto mode = r.text("loop.mode");
  r.require(mode == "real" || mode == "fixed_point", "loop.mode", "expected real or fixed_point");
  p.loop.mode = mode == "fixed_point" ? LoopMode::FixedPoint : LoopMode::Real;
  p.loop.dac_full_scale = r.number("loop.dac_full_scale_khz") * 1e3;
  p.loop.dac_bits = r.integer("loop.dac_bits");
  p.loop.accumulator_frac_bits = r.integer("loop.accumulator_frac_bits");
  p.loop.idle_gap = r.number("loop.idle_gap_us") * 1e-6;
  p.loop.samples_per_shot = r.integer("loop.samples_per_shot");
  const auto averaging = r.text("loop.averaging");
  r.require(averaging == "free_evolution" || averaging == "full_period", "loop.averaging",
            "expected free_evolution or full_period");
  p.loop.averaging = averaging == "full_period" ? SampleAveraging::FullPeriod : SampleAveraging::FreeEvolution;
  p.loop.warmup_updates = r.integer("loop.warmup_updates");
  if (ramsey_ok) r.check("loop", [&] { validate(p.loop, p.ramsey); });

  p.n_estimates = r.integer("sim.n_estimates");
  p.realizations = r.integer("sim.realizations");
  const auto window = r.text("sim.window");
  r.require(window == "hann" || window == "rectangular", "sim.window", "expected hann or rectangular");
  p.window = window == "rectangular" ? Window::Rectangular : Window::Hann;
  r.require(p.n_estimates >= 64, "sim.n_estimates", "must be >= 64");
  r.require(p.realizations >= 1, "sim.realizations", "must be >= 1");
  p.fit_low = r.number("spectrum.fit_low_hz");
  p.fit_high = r.number("spectrum.fit_high_hz");
  r.require(p.fit_low > 0.0 && p.fit_high > p.fit_low, "spectrum.fit_low_hz", "need 0 < fit_low_hz < fit_high_hz");
  p.transfer_points = r.integer("transfer.points");
  p.transfer_f_min = r.number("transfer.f_min_hz");
  r.require(p.transfer_points >= 2, "transfer.points", "must be >= 2");
  r.require(p.transfer_f_min > 0.0, "transfer.f_min_hz", "must be positive");

  const double max_delay = r.number("interleaved.max_delay_us") * 1e-6;
  const int delay_points = r.integer("interleaved.delay_points");
  r.require(max_delay > 0.0, "interleaved.max_delay_us", "must be positive");
  r.require(delay_points >= 7, "interleaved.delay_points", "must be >= 7 for the oscillation fit");
  if (max_delay > 0.0 && delay_points >= 7) p.interleaved.tau_r_grid = linear_delay_grid(max_delay, delay_points);
  p.interleaved.passes = r.integer("interleaved.passes");
  p.interleaved_realizations = r.integer("interleaved.realizations");
  r.require(p.interleaved_realizations >= 1, "interleaved.realizations", "must be >= 1");
  p.interleaved.set_detuning = r.number("interleaved.set_detuning_mhz") * 1e6;
  p.interleaved.t1 = r.number("interleaved.t1_us") * 1e-6;
  const auto readout = r.text("interleaved.readout");
  r.require(readout == "expectation" || readout == "single_shot", "interleaved.readout",
            "expected expectation or single_shot");
  p.interleaved.readout = readout == "single_shot" ? ProbeReadout::SingleShot : ProbeReadout::Expectation;
  p.interleaved_samples_per_shot = r.integer("interleaved.samples_per_shot");
  r.require(p.interleaved_samples_per_shot >= 1, "interleaved.samples_per_shot", "must be >= 1");
  if (!p.interleaved.tau_r_grid.empty()) r.check("interleaved", [&] { validate(p.interleaved); });

  p.envelope_max_time = r.number("coherence.envelope_max_us") * 1e-6;
  p.envelope_points = r.integer("coherence.envelope_points");
  r.require(p.envelope_max_time > 0.0, "coherence.envelope_max_us", "must be positive");
  r.require(p.envelope_points >= 2, "coherence.envelope_points", "must be >= 2");
  p.sections = r.integers("coherence.sections");
  for (int s : p.sections)
    r.require(s >= 1 && s <= p.interleaved.passes, "coherence.sections",
              "each section must hold between 1 and interleaved.passes passes");

  p.flux_points = r.integer("flux.points");
  p.flux_min = r.number("flux.min_phi0");
  p.flux_max = r.number("flux.max_phi0");
  p.sqrt_a_phi = r.number("flux.sqrt_a_phi_uphi0") * 1e-6;
  p.flux_passes = r.integer("flux.passes");
  p.flux_delay_points = r.integer("flux.delay_points");
  r.require(p.flux_points >= 3, "flux.points", "must be >= 3");
  r.require(p.flux_min > 0.0 && p.flux_max > p.flux_min && p.flux_max < 0.5, "flux.min_phi0",
            "need 0 < flux.min_phi0 < flux.max_phi0 < 0.5");
  r.require(p.sqrt_a_phi > 0.0, "flux.sqrt_a_phi_uphi0", "must be positive");
  r.require(p.flux_passes >= 1, "flux.passes", "must be >= 1");
  r.require(p.flux_delay_points >= 7, "flux.delay_points", "must be >= 7");

  p.rb.sequence_lengths = r.integers("rb.lengths");
  p.rb.n_randomizations = r.integer("rb.randomizations");
  p.rb.shots_per_sequence = r.integer("rb.shots_per_sequence");
  p.rb.gate_time = r.number("rb.gate_time_ns") * 1e-9;
  p.rb.t1 = r.number("rb.t1_us") * 1e-6;
  p.rb.t_phi1 = r.number("rb.t_phi1_us") * 1e-6;
  p.rb.t_phi2 = r.number("rb.t_phi2_us") * 1e-6;
  p.rb.depolarizing = r.number("rb.depolarizing");
  p.rb.static_detuning = r.number("rb.static_detuning_khz") * 1e3;
  p.rb.bootstrap_samples = r.integer("rb.bootstrap_samples");
  p.rb_frequency = r.number("rb.frequency_ghz") * 1e9;
  p.rb_repetitions = r.integer("rb.repetitions");
  p.rb_repetition_randomizations = r.integer("rb.repetition_randomizations");
  r.check("rb", [&] { validate(p.rb); });
  r.require(p.rb_frequency > 0.0 && p.rb_frequency < p.transmon.f_max, "rb.frequency_ghz",
            "must lie below transmon.f_max_ghz");
  r.require(p.rb_repetitions >= 0, "rb.repetitions", "must be >= 0");
  r.require(p.rb_repetition_randomizations >= 1, "rb.repetition_randomizations", "must be >= 1");

  issues = std::move(r.issues);
  return p;
}

}  // namespace

Parameters resolve(const Config& config) {
  std::vector<ConfigIssue> issues;
  auto p = resolve_collect(config, issues);
  if (!issues.empty()) throw ConfigError(std::move(issues));
  return p;
}

std::vector<ConfigIssue> validate_config(const Config& config) {
  std::vector<ConfigIssue> issues;
  resolve_collect(config, issues);
  return issues;
}

void write_manifest(std::ostream& out, const Config& config, const std::string& scenario, std::uint64_t seed) {
  out << "scenario=" << scenario << '\n' << "seed=" << seed << '\n';
  for (const auto& [key, value] : config.values()) out << key << '=' << value << '\n';
}

}  // namespace qfb
