#include "qfb/loop.hpp"

#include <doctest.h>

#include <cmath>
#include <complex>

using namespace qfb;

TEST_CASE("transfer functions at DC and Nyquist") {
  const RamseyConfig r;
  LoopConfig l;
  const double nyq = 0.5 / l.update_period(r);
  CHECK(std::abs(transfer_p(0.0, l, r)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(transfer_e(0.0, l, r)) == 0.0);
  CHECK(std::abs(std::abs(transfer_p(nyq, l, r)) - 0.35 / 1.65) < 1e-9);
  CHECK(std::abs(transfer_p(nyq, l, r)) == doctest::Approx(0.2121).epsilon(1e-4));
  CHECK(std::abs(transfer_e(nyq, l, r)) == doctest::Approx(2.0 / 1.65));
}

TEST_CASE("error and control responses satisfy H_e + z^-1 H_p = 1") {
  const RamseyConfig r;
  for (double g : {0.05, 0.35, 1.0, 1.9}) {
    LoopConfig l;
    l.gain = g;
    for (double f = 1.0; f < 7000.0; f *= 1.7) {
      const auto z = std::polar(1.0, kTwoPi * f * l.update_period(r));
      const auto sum = transfer_e(f, l, r) + transfer_p(f, l, r) / z;
      CHECK(std::abs(sum - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("loop validation rejects unstable gains") {
  const RamseyConfig r;
  LoopConfig l;
  l.gain = 2.0;
  CHECK_THROWS_AS(validate(l, r), DivergenceError);
  l.gain = -0.1;
  CHECK_THROWS_AS(validate(l, r), DomainError);
  l.gain = 0.0;
  CHECK_NOTHROW(validate(l, r));
  l.samples_per_shot = 0;
  CHECK_THROWS_AS(validate(l, r), DomainError);
}

TEST_CASE("real accumulator integrates the error") {
  LoopConfig l;
  LoopState s;
  s = loop_step(s, 1000.0, l);
  s = loop_step(s, -200.0, l);
  CHECK(s.p == doctest::Approx(0.35 * 800.0));
  CHECK(s.n == 2);
}

TEST_CASE("fixed-point accumulator moves in DAC steps and clamps at full scale") {
  LoopConfig l;
  l.mode = LoopMode::FixedPoint;
  const double step = l.dac_step();
  CHECK(step == doctest::Approx(1600e3 / 65536.0));
  LoopState s;
  for (int i = 0; i < 50; ++i) {
    s = loop_step(s, 12345.0, l);
    const double k = s.p / step;
    CHECK(std::abs(k - std::round(k)) < 1e-9);
  }
  for (int i = 0; i < 2000; ++i) s = loop_step(s, 1e6, l);
  CHECK(s.saturated);
  CHECK(s.p <= l.dac_full_scale);
}

TEST_CASE("sliding bit sum keeps the last N bits") {
  SlidingBitSum b(3);
  for (std::uint8_t q : {1, 1, 0, 1, 0, 0}) b.push(q);
  CHECK(b.sum() == 1);
  b.push(1);
  CHECK(b.sum() == 1);
  b.push(1);
  CHECK(b.sum() == 2);
}

TEST_CASE("lookup table is monotone and antisymmetric about half filling") {
  const RamseyConfig r;
  const LoopConfig l;
  const auto lut = build_lookup_table(r, l);
  REQUIRE(lut.size() == static_cast<std::size_t>(r.shots_per_estimate + 1));
  for (std::size_t k = 1; k < lut.size(); ++k) CHECK(lut[k] > lut[k - 1]);
  for (std::size_t k = 0; k < lut.size(); ++k) CHECK(std::llabs(lut[k] + lut[lut.size() - 1 - k]) <= 1);
}

TEST_CASE("controller updates once per N bits with the inverted estimate") {
  const RamseyConfig r;
  const LoopConfig l;
  FeedbackController c(r, l);
  for (int i = 0; i < r.shots_per_estimate - 1; ++i) CHECK_FALSE(c.push(0));
  CHECK(c.push(0));
  CHECK(c.last_error() == doctest::Approx(-r.detuning_range()));
  CHECK(std::abs(c.applied()) == doctest::Approx(0.35 * r.detuning_range()));
}

TEST_CASE("closed loop cancels a static offset") {
  const RamseyConfig r;
  LoopConfig l;
  l.warmup_updates = 64;
  const Eigen::Index n = 4000;
  const auto len = closed_loop_trace_length(r, l, n);
  const TimeTrace trace{r.cycle_time / l.samples_per_shot, Vector::Constant(len, 30e3)};
  const auto rec = run_closed_loop(trace, r, l, n, 9);
  CHECK(rec.true_frequency.size() == n);
  CHECK(std::abs(rec.true_frequency.values.mean()) < 2e3);
  CHECK(std::abs(rec.control_signal.values.mean() + 30e3) < 2e3);
  CHECK(rec.saturations == 0);
}

TEST_CASE("closed-loop runs are reproducible per seed") {
  const RamseyConfig r;
  const LoopConfig l;
  const auto a = run_closed_loop(NoiseModel{}, r, l, 256, 3);
  const auto b = run_closed_loop(NoiseModel{}, r, l, 256, 3);
  CHECK(a.error_signal.values == b.error_signal.values);
}

TEST_CASE("analytic closed-loop PSD limits") {
  const RamseyConfig r;
  const LoopConfig l;
  // Far below the loop bandwidth the open noise is removed and sampling noise passes.
  CHECK(closed_loop_psd(1e6, 0.0, 0.01, l, r) < 1e-3);
  CHECK(closed_loop_psd(0.0, 5.0, 0.01, l, r) == doctest::Approx(5.0).epsilon(1e-6));
  CHECK(error_signal_psd(1e6, 0.0, 0.0, l, r) == 0.0);
}

TEST_CASE("fixed-point loop with a fine DAC tracks the real-valued loop") {
  const RamseyConfig r;
  LoopConfig real;
  real.warmup_updates = 16;
  LoopConfig fixed = real;
  fixed.mode = LoopMode::FixedPoint;
  fixed.dac_bits = 24;
  fixed.dac_full_scale = 1.0 / r.tau;
  const Eigen::Index n = 2000;
  const auto len = closed_loop_trace_length(r, real, n);
  Vector v(len);
  for (Eigen::Index k = 0; k < len; ++k) v[k] = 40e3 * std::sin(kTwoPi * 50.0 * k * r.cycle_time);
  const TimeTrace trace{r.cycle_time, v};
  const auto a = run_closed_loop(trace, r, real, n, 21);
  const auto b = run_closed_loop(trace, r, fixed, n, 21);
  const double step = fixed.dac_step();
  for (Eigen::Index k = 0; k < n; ++k) CHECK(std::abs(a.control_signal.values[k] - b.control_signal.values[k]) <= step);
}

TEST_CASE("zero gain leaves the control signal at zero") {
  const RamseyConfig r;
  LoopConfig l;
  l.gain = 0.0;
  const auto rec = run_closed_loop(NoiseModel{}, r, l, 512, 4);
  CHECK(rec.control_signal.values.cwiseAbs().maxCoeff() == 0.0);
  CHECK(rec.true_frequency.values == rec.intrinsic.values);
}
