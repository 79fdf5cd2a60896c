#include "qfb/config.hpp"

#include <doctest.h>

#include <algorithm>
#include <sstream>

using namespace qfb;

namespace {

bool names(const ConfigError& e, const std::string& key) {
  return std::any_of(e.issues().begin(), e.issues().end(), [&](const ConfigIssue& i) { return i.key == key; });
}

}  // namespace

TEST_CASE("defaults resolve to the reference parameters") {
  const auto p = resolve(Config{});
  CHECK(p.ramsey.tau == doctest::Approx(1.25e-6));
  CHECK(p.ramsey.cycle_time == doctest::Approx(3.5e-6));
  CHECK(p.ramsey.shots_per_estimate == 20);
  CHECK(p.loop.gain == doctest::Approx(0.35));
  CHECK(p.noise.amplitude_at_1hz == doctest::Approx(27.3e6));
  CHECK(p.noise.exponent_alpha == doctest::Approx(0.8));
  CHECK(p.rb.gate_time == doctest::Approx(40e-9));
  CHECK(p.interleaved.tau_r_grid.size() == 41);
  CHECK(p.sections == std::vector<int>{200, 400, 800, 1600, 3200});
  CHECK(std::isinf(p.rb.t_phi1));
  CHECK(validate_config(Config{}).empty());
}

TEST_CASE("unstable gain is reported as a divergence") {
  Config c;
  c.set("loop.gain=2.5");
  try {
    resolve(c);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.divergence_only());
    CHECK(names(e, "loop"));
    CHECK(std::string(e.what()).find("gain") != std::string::npos);
  }
}

TEST_CASE("tau not below cycle_time is an ordering violation naming the key") {
  Config c;
  c.set("ramsey.tau_us", "3.5");
  const auto issues = validate_config(c);
  REQUIRE_FALSE(issues.empty());
  CHECK(issues[0].key == "ramsey.tau_us");
  CHECK_FALSE(issues[0].divergence);
}

TEST_CASE("all problems are aggregated") {
  Config c;
  c.set("noise.alpha=abc");
  c.set("rb.randomizations=0");
  c.set("loop.mode=analog");
  try {
    resolve(c);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(names(e, "noise.alpha"));
    CHECK(names(e, "rb"));
    CHECK(names(e, "loop.mode"));
    CHECK_FALSE(e.divergence_only());
  }
}

TEST_CASE("unknown keys and malformed assignments are rejected") {
  Config c;
  CHECK_THROWS_AS(c.set("loop.gian=0.3"), ConfigError);
  CHECK_THROWS_AS(c.set("gain"), ConfigError);
  CHECK_THROWS_AS(c.text("nope.key"), ConfigError);
}

TEST_CASE("INI sections map onto dotted keys") {
  std::istringstream in(
      "; comment\n"
      "[loop]\n"
      "gain = 0.2\n"
      "\n"
      "[rb]\n"
      "lengths = 1, 10, 20\n"
      "t_phi1_us = inf\n");
  const auto c = Config::from_ini(in);
  CHECK(c.number("loop.gain") == doctest::Approx(0.2));
  CHECK(c.integers("rb.lengths") == std::vector<int>{1, 10, 20});
  const auto p = resolve(c);
  CHECK(p.rb.sequence_lengths.size() == 3);

  std::istringstream bad("[loop]\nbogus = 1\n");
  CHECK_THROWS_AS(Config::from_ini(bad), ConfigError);
  std::istringstream orphan("gain = 1\n");
  CHECK_THROWS_AS(Config::from_ini(orphan), ConfigError);
  CHECK_THROWS_AS(Config::from_file("/nonexistent/qfb.ini"), ConfigError);
}

TEST_CASE("manifest lists scenario, seed and every key once") {
  Config c;
  c.set("loop.gain=0.3");
  std::ostringstream out;
  write_manifest(out, c, "transfer", 42);
  const auto text = out.str();
  CHECK(text.rfind("scenario=transfer\nseed=42\n", 0) == 0);
  CHECK(text.find("loop.gain=0.3\n") != std::string::npos);
  for (const auto& k : config_keys()) CHECK(text.find(std::string("\n") + k.name + "=") != std::string::npos);
  std::ostringstream again;
  write_manifest(again, c, "transfer", 42);
  CHECK(again.str() == text);
}

TEST_CASE("every key has a default that resolves") {
  const Config c;
  for (const auto& k : config_keys()) CHECK(c.text(k.name) == k.default_value);
}
