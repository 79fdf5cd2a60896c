#pragma once

#include "qfb/config.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace qfb {

/// Unknown scenario or malformed command line.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ScenarioOptions {
  std::uint64_t seed = 1;
  std::string out_dir = ".";
  unsigned workers = 1;
};

/// psd, closed-loop, transfer, ramsey, coherence-sweep, flux-sweep, rb.
const std::vector<std::string>& scenario_names();

/// Resolves the configuration, runs the scenario and writes its CSV and text
/// files plus manifest.txt into out_dir. Returns the file names written, in
/// order. Results depend only on (name, config, seed), never on workers.
std::vector<std::string> run_scenario(const std::string& name, const Config& config,
                                      const ScenarioOptions& options);

}  // namespace qfb
