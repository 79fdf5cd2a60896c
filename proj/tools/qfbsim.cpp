// qfbsim: runs one simulation scenario and writes its data files.
#include "qfb/scenario.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

constexpr int kUsage = 2;
constexpr int kValidation = 3;
constexpr int kDivergence = 4;

void report(const qfb::ConfigError& e) {
  for (const auto& issue : e.issues())
    std::cerr << "qfbsim: " << issue.key << ": " << issue.message << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Frequency-feedback qubit simulator"};
  std::string scenario;
  std::string config_path;
  std::uint64_t seed = 1;
  std::vector<std::string> overrides;
  std::string out_dir = ".";
  unsigned workers = 1;
  bool list_keys = false;

  std::string names;
  for (const auto& n : qfb::scenario_names()) names += (names.empty() ? "" : ", ") + n;
  app.add_option("scenario", scenario, "one of: " + names);
  app.add_option("--config", config_path, "INI file; omitted keys keep their defaults");
  app.add_option("--seed", seed, "master seed");
  app.add_option("--set", overrides, "section.key=value override, repeatable")->take_all();
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--workers", workers, "worker threads; results do not depend on it")->check(CLI::PositiveNumber);
  app.add_flag("--list-keys", list_keys, "print every configuration key with its default and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsage;
  }

  if (list_keys) {
    for (const auto& k : qfb::config_keys()) std::cout << k.name << '=' << k.default_value << "  # " << k.help << '\n';
    return 0;
  }
  if (scenario.empty()) {
    std::cerr << "qfbsim: missing scenario (" << names << ")\n";
    return kUsage;
  }

  try {
    qfb::Config config = config_path.empty() ? qfb::Config{} : qfb::Config::from_file(config_path);
    for (const auto& s : overrides) config.set(s);
    const auto files = qfb::run_scenario(scenario, config, {seed, out_dir, workers});
    for (const auto& f : files) std::cout << f << '\n';
    return 0;
  } catch (const qfb::UsageError& e) {
    std::cerr << "qfbsim: " << e.what() << '\n';
    return kUsage;
  } catch (const qfb::ConfigError& e) {
    report(e);
    return e.divergence_only() ? kDivergence : kValidation;
  } catch (const qfb::DivergenceError& e) {
    std::cerr << "qfbsim: divergence: " << e.what() << '\n';
    return kDivergence;
  } catch (const qfb::InputError& e) {
    std::cerr << "qfbsim: " << e.what() << '\n';
    return kValidation;
  } catch (const qfb::DomainError& e) {
    std::cerr << "qfbsim: " << e.what() << '\n';
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "qfbsim: " << e.what() << '\n';
    return 1;
  }
}
