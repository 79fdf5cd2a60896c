#include "qfb/ramsey.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

using namespace qfb;

TEST_CASE("ramsey_p1 and invert_p1 are inverse on the negative branch") {
  const RamseyConfig cfg;
  CHECK(ramsey_p1(0.0, cfg) == doctest::Approx(0.5));
  CHECK(invert_p1(0.5, cfg) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(invert_p1(0.0, cfg) == doctest::Approx(-cfg.detuning_range()));
  CHECK(invert_p1(1.0, cfg) == doctest::Approx(cfg.detuning_range()));
  for (double d = -190e3; d <= 190e3; d += 19e3) CHECK(invert_p1(ramsey_p1(d, cfg), cfg) == doctest::Approx(d));
  CHECK_THROWS_AS(invert_p1(1.1, cfg), DomainError);
}

TEST_CASE("reduced contrast scales the fringe about one half") {
  RamseyConfig cfg;
  cfg.init_fidelity = 0.8;
  const double ideal = ramsey_p1(50e3, RamseyConfig{});
  CHECK(ramsey_p1(50e3, cfg) == doctest::Approx(0.5 + 0.8 * (ideal - 0.5)));
}

TEST_CASE("virtual reset XORs each bit with its raw predecessor") {
  CHECK(virtual_reset({1, 1, 0, 0, 1}) == ShotRecord{1, 0, 1, 0, 1});
  CHECK(virtual_reset({1, 1, 0}, 1) == ShotRecord{0, 0, 1});
  CHECK(virtual_reset({}).empty());
}

TEST_CASE("frequency estimate from N shots is unbiased near zero with binomial spread") {
  const RamseyConfig cfg;
  Rng rng(2024);
  const int trials = 20000;
  const double truth = 5e3;
  double sum = 0.0, sq = 0.0;
  for (int t = 0; t < trials; ++t) {
    ShotRecord r(cfg.shots_per_estimate);
    for (auto& q : r) q = simulate_shot(truth, cfg, rng) ? 1 : 0;
    const double e = estimate_frequency(r, cfg);
    sum += e;
    sq += e * e;
  }
  const double mean = sum / trials;
  const double sd = std::sqrt(sq / trials - mean * mean);
  const double sigma = sampling_noise_sigma(cfg.tau, cfg.shots_per_estimate);
  CHECK(sigma == doctest::Approx(1.0 / (kTwoPi * 1.25e-6 * std::sqrt(20.0))));
  CHECK(std::abs(mean - truth) < 0.05 * sigma);
  // The arccos estimator spreads slightly more than the first-order value.
  CHECK(sd / sigma == doctest::Approx(1.0).epsilon(0.1));
  CHECK_THROWS_AS(estimate_frequency({}, cfg), InputError);
}

TEST_CASE("sampling-noise plateau and cutoff at the reference parameters") {
  const auto s = sampling_noise_psd(RamseyConfig{});
  CHECK(s.plateau == doctest::Approx(3.5e-6 / (2 * kPi * kPi * 1.25e-6 * 1.25e-6)));
  CHECK(s.plateau == doctest::Approx(1.1348e5).epsilon(1e-3));
  CHECK(s.cutoff == doctest::Approx(7142.857).epsilon(1e-6));
  CHECK(s(7000.0) == s.plateau);
  CHECK(s(8000.0) == 0.0);
}

TEST_CASE("trace integrator handles partial samples exactly") {
  TimeTrace tr{0.5, Vector::LinSpaced(4, 1.0, 4.0)};  // 1,2,3,4 on [0,2)
  TraceIntegrator in(tr);
  CHECK(in.integral(0.0, 2.0) == doctest::Approx(5.0));
  CHECK(in.integral(0.25, 0.75) == doctest::Approx(0.25 * 1 + 0.25 * 2));
  CHECK(in.mean(0.5, 1.5) == doctest::Approx(2.5));
  CHECK_THROWS(in.integral(0.0, 3.0));
}

TEST_CASE("sampled frequency of a constant trace is that constant") {
  const RamseyConfig cfg;
  TimeTrace tr{cfg.cycle_time / 7, Vector::Constant(7 * 20 * 3, 1234.0)};
  for (Eigen::Index n = 0; n < 3; ++n) {
    CHECK(sampled_frequency(tr, n, cfg) == doctest::Approx(1234.0));
    CHECK(sampled_frequency(tr, n, cfg, SampleAveraging::FullPeriod) == doctest::Approx(1234.0));
  }
}

TEST_CASE("sampled_psd of white noise on the estimate grid") {
  // Averaging white noise over contiguous windows of N T leaves variance
  // S / (2 N T), which the decimated PSD must integrate to.
  const RamseyConfig cfg;
  const double level = 1e4;
  const double period = cfg.estimate_period();
  double area = 0.0;
  const int k = 2000;
  const double nyq = 0.5 / period;
  for (int i = 0; i < k; ++i) {
    const double f = (i + 0.5) * nyq / k;
    area += sampled_psd([&](double) { return level; }, f, cfg, cfg.cycle_time, period, SampleAveraging::FullPeriod) *
            nyq / k;
  }
  CHECK(area == doctest::Approx(level / (2.0 * period)).epsilon(1e-3));
}

TEST_CASE("round trip holds for random detunings across the unambiguous range") {
  const RamseyConfig cfg;
  Rng rng(77);
  std::uniform_real_distribution<double> u(-0.99 * cfg.detuning_range(), 0.99 * cfg.detuning_range());
  for (int i = 0; i < 1000; ++i) {
    const double d = u(rng);
    CHECK(std::abs(invert_p1(ramsey_p1(d, cfg), cfg) - d) <= 1e-9 * cfg.detuning_range());
  }
}

TEST_CASE("zero detuning yields one outcomes half of the time") {
  const RamseyConfig cfg;
  Rng rng(5);
  const int shots = 100000;
  int ones = 0;
  for (int i = 0; i < shots; ++i) ones += simulate_shot(0.0, cfg, rng) ? 1 : 0;
  CHECK(std::abs(ones / double(shots) - 0.5) < 0.005);
}

namespace {

// Exact estimator variance at zero detuning from the binomial distribution.
double exact_estimator_variance(const RamseyConfig& cfg) {
  const int n = cfg.shots_per_estimate;
  const double p = ramsey_p1(0.0, cfg);
  double mean = 0.0, sq = 0.0;
  for (int k = 0; k <= n; ++k) {
    const double w = std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) +
                              k * std::log(p) + (n - k) * std::log1p(-p));
    const double e = invert_p1(double(k) / n, cfg);
    mean += w * e;
    sq += w * e * e;
  }
  return sq - mean * mean;
}

}  // namespace

TEST_CASE("estimator variance follows the binomial law in N") {
  // The arccos inversion inflates the spread at small N, so the log-log slope
  // over N = 5..80 is steeper than -1/2.
  std::vector<double> logn, logv;
  for (int n : {5, 20, 80}) {
    RamseyConfig cfg;
    cfg.shots_per_estimate = n;
    Rng rng(100 + n);
    const int trials = 20000;
    double sum = 0.0, sq = 0.0;
    for (int t = 0; t < trials; ++t) {
      ShotRecord r(n);
      for (auto& q : r) q = simulate_shot(0.0, cfg, rng) ? 1 : 0;
      const double e = estimate_frequency(r, cfg);
      sum += e;
      sq += e * e;
    }
    const double var = sq / trials - (sum / trials) * (sum / trials);
    const double exact = exact_estimator_variance(cfg);
    CHECK(var / exact == doctest::Approx(1.0).epsilon(0.05));
    logn.push_back(std::log(double(n)));
    logv.push_back(std::log(std::sqrt(exact)));
  }
  const double slope = (logv[2] - logv[0]) / (logn[2] - logn[0]);
  CHECK(slope == doctest::Approx(-0.576).epsilon(0.01));
}

TEST_CASE("sampled frequency of a ramp is the ramp at the mean window midpoint") {
  const RamseyConfig cfg;
  const double dt = 0.25e-6;  // divides tau and the cycle time
  const double slope = 1e9;   // Hz/s
  const Eigen::Index len = 14 * 20 * 4;
  Vector v(len);
  for (Eigen::Index k = 0; k < len; ++k) v[k] = slope * (k + 0.5) * dt;
  const TimeTrace tr{dt, v};
  for (Eigen::Index n = 0; n < 4; ++n) {
    double mid = 0.0;
    for (int i = 0; i < cfg.shots_per_estimate; ++i)
      mid += n * cfg.estimate_period() + i * cfg.cycle_time + 0.5 * cfg.tau;
    mid /= cfg.shots_per_estimate;
    CHECK(sampled_frequency(tr, n, cfg) == doctest::Approx(slope * mid).epsilon(1e-9));
  }
}
