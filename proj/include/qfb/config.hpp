#pragma once

#include "qfb/coherence.hpp"
#include "qfb/loop.hpp"
#include "qfb/physics.hpp"
#include "qfb/ramsey.hpp"
#include "qfb/rb.hpp"
#include "qfb/spectral.hpp"

#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace qfb {

/// One offending key found while resolving or validating a configuration.
struct ConfigIssue {
  std::string key;
  std::string message;
  bool divergence = false;  // an unstable loop rather than a malformed value
};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<ConfigIssue> issues);
  const std::vector<ConfigIssue>& issues() const { return issues_; }
  /// True when every issue is a divergence.
  bool divergence_only() const;

 private:
  std::vector<ConfigIssue> issues_;
};

struct ConfigKey {
  const char* name;           // section.key
  const char* default_value;
  const char* help;
};

/// Every recognized key with its default.
const std::vector<ConfigKey>& config_keys();

/// Flat section.key -> value map, always holding every key of config_keys().
/// Values keep their textual form so that the manifest reproduces them
/// exactly.
class Config {
 public:
  Config();

  /// INI text with [section] headers. Unknown sections or keys are errors.
  static Config from_ini(std::istream& in);
  static Config from_file(const std::string& path);

  /// `section.key=value`. Throws ConfigError for unknown keys or bad syntax.
  void set(const std::string& assignment);
  void set(const std::string& key, const std::string& value);

  const std::string& text(const std::string& key) const;
  double number(const std::string& key) const;
  int integer(const std::string& key) const;
  bool flag(const std::string& key) const;
  std::vector<double> numbers(const std::string& key) const;
  std::vector<int> integers(const std::string& key) const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

/// Every module parameter block resolved from a Config.
struct Parameters {
  NoiseModel noise;
  TransmonSpec transmon;
  double reference_flux = 0.11;  // Phi0, bias at which `noise` was measured
  RamseyConfig ramsey;
  LoopConfig loop;

  Eigen::Index n_estimates = 1 << 14;
  int realizations = 100;
  Window window = Window::Hann;
  double fit_low = 10.0;    // Hz
  double fit_high = 7e3;    // Hz
  int transfer_points = 200;
  double transfer_f_min = 1.0;  // Hz

  InterleavedConfig interleaved;
  int interleaved_samples_per_shot = 7;
  int interleaved_realizations = 3;
  double envelope_max_time = 40e-6;
  int envelope_points = 161;
  std::vector<int> sections;

  int flux_points = 11;
  double flux_min = 0.02;
  double flux_max = 0.2;
  double sqrt_a_phi = 2.8e-6;  // Phi0
  int flux_passes = 300;
  int flux_delay_points = 41;

  RBConfig rb;
  double rb_frequency = 4.44e9;
  int rb_repetitions = 250;
  int rb_repetition_randomizations = 7;
};

/// Parses and checks every key. Throws ConfigError listing all problems;
/// never runs a simulation.
Parameters resolve(const Config& config);

/// All issues found by resolve(), empty when the configuration is valid.
std::vector<ConfigIssue> validate_config(const Config& config);

/// key=value lines for every resolved key, sorted by key.
void write_manifest(std::ostream& out, const Config& config, const std::string& scenario,
                    std::uint64_t seed);

}  // namespace qfb
