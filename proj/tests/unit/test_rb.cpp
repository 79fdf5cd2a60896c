#include "qfb/rb.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <set>

using namespace qfb;

namespace {

constexpr double kInfinityRb = std::numeric_limits<double>::infinity();

RBConfig quiet() {
  RBConfig c;
  c.t1 = kInfinityRb;
  c.n_randomizations = 20;
  c.shots_per_sequence = 1;
  c.bootstrap_samples = 0;
  return c;
}

}  // namespace

TEST_CASE("Clifford group has 24 elements, closes and has inverses") {
  const auto& g = clifford_group();
  REQUIRE(g.size() == 24);
  CHECK(g.elements[0].isApprox(Matrix2c::Identity()));
  std::set<int> seen;
  for (int a = 0; a < 24; ++a) {
    CHECK(g.find(g.elements[a]) == a);
    CHECK(g.product[a][g.inverse[a]] == 0);
    for (int b = 0; b < 24; ++b) {
      const int c = g.product[a][b];
      REQUIRE(c >= 0);
      CHECK(g.find(g.elements[a] * g.elements[b]) == c);
    }
    seen.insert(g.inverse[a]);
  }
  CHECK(seen.size() == 24);
}

TEST_CASE("unitary PTMs are orthogonal and unital") {
  for (const auto& u : clifford_group().elements) {
    const Ptm r = unitary_ptm(u);
    CHECK((r.transpose() * r - Ptm::Identity()).norm() < 1e-12);
    CHECK(r(0, 0) == doctest::Approx(1.0));
    CHECK(r.row(0).tail<3>().norm() < 1e-12);
    CHECK(r.col(0).tail<3>().norm() < 1e-12);
  }
}

TEST_CASE("gate noise channel pieces") {
  RBConfig c;
  c.t1 = kInfinityRb;
  const double d = 1e6;
  const Ptm r = gate_noise_ptm(c, d);
  const double th = kTwoPi * d * c.gate_time;
  CHECK(r(1, 1) == doctest::Approx(std::cos(th)));
  CHECK(r(2, 1) == doctest::Approx(std::sin(th)));
  CHECK(r(3, 3) == doctest::Approx(1.0));
  c.t1 = 30e-6;
  const Ptm a = gate_noise_ptm(c, 0.0);
  const double gamma = 1 - std::exp(-c.gate_time / c.t1);
  CHECK(a(3, 0) == doctest::Approx(gamma));
  CHECK(a(1, 1) == doctest::Approx(std::sqrt(1 - gamma)));
}

TEST_CASE("RB decay fit recovers exact parameters") {
  const std::vector<int> m{1, 50, 100, 200, 300, 500, 700, 1000};
  Vector p(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) p[i] = 0.48 * std::pow(0.999, m[i]) + 0.51;
  const auto fit = fit_rb_decay(m, p);
  REQUIRE(fit.converged);
  CHECK(fit.r == doctest::Approx(0.999).epsilon(1e-9));
  CHECK(fit.error_per_gate == doctest::Approx(5e-4).epsilon(1e-6));
  CHECK(fit.a == doctest::Approx(0.48).epsilon(1e-6));
  CHECK(fit.b == doctest::Approx(0.51).epsilon(1e-6));
  CHECK_THROWS_AS(fit_rb_decay({1, 2}, Vector::Ones(2)), InputError);
}

TEST_CASE("depolarizing RB yields p / 2 per gate") {
  auto c = quiet();
  c.depolarizing = 2e-3;
  const auto res = simulate_rb(c, NoiseModel::white(0.0), RamseyConfig{}, LoopConfig{}, 4);
  CHECK(res.fitted_error_per_gate() == doctest::Approx(1e-3).epsilon(0.01));
}

TEST_CASE("amplitude damping RB approaches the coherence limit") {
  auto c = quiet();
  c.t1 = 30e-6;
  const auto res = simulate_rb(c, NoiseModel::white(0.0), RamseyConfig{}, LoopConfig{}, 4);
  CHECK(res.fitted_error_per_gate() == doctest::Approx(coherence_limit(40e-9, 30e-6, kInfinityRb, kInfinityRb)).epsilon(0.05));
}

TEST_CASE("static detuning gives the coherent-error decay (1 - cos theta) / 3") {
  auto c = quiet();
  c.static_detuning = 200e3;
  c.n_randomizations = 200;
  c.sequence_lengths = {1, 10, 20, 40, 60, 100, 150};
  const auto res = simulate_rb(c, NoiseModel::white(0.0), RamseyConfig{}, LoopConfig{}, 8);
  const double th = kTwoPi * c.static_detuning * c.gate_time;
  CHECK(res.fitted_error_per_gate() == doctest::Approx((1 - std::cos(th)) / 3).epsilon(0.05));
}

TEST_CASE("coherence limit values") {
  CHECK(coherence_limit(40e-9, 30e-6, kInfinityRb, kInfinityRb) == doctest::Approx(4.444e-4).epsilon(1e-3));
  CHECK(coherence_limit(40e-9, 400e-6, kInfinityRb, kInfinityRb) == doctest::Approx(3.33e-5).epsilon(1e-3));
  CHECK(coherence_limit(40e-9, kInfinityRb, 40e-6, 1e-6) == doctest::Approx(40e-9 / 120e-6 + 0.04 * 0.04 / 3));
  CHECK_THROWS_AS(coherence_limit(0.0, 1.0, 1.0, 1.0), DomainError);
}

TEST_CASE("sequence pool replays identical sequences") {
  auto c = quiet();
  c.static_detuning = 100e3;
  c.n_randomizations = 12;
  c.sequence_pool = 4;
  const auto res = simulate_rb(c, NoiseModel::white(0.0), RamseyConfig{}, LoopConfig{}, 1);
  for (int r = 4; r < 12; ++r) CHECK(res.survival.row(r).isApprox(res.survival.row(r % 4)));
  CHECK_FALSE(res.survival.row(1).isApprox(res.survival.row(0)));
}

TEST_CASE("bootstrap interval brackets the fit and repetitions split rows") {
  RBConfig c;
  c.n_randomizations = 30;
  c.shots_per_sequence = 2;
  c.bootstrap_samples = 50;
  c.sequence_lengths = {1, 50, 100, 200, 400};
  const auto res = simulate_rb(c, NoiseModel{}, RamseyConfig{}, LoopConfig{}, 2);
  CHECK(res.summary.ci_low <= res.summary.fit.error_per_gate);
  CHECK(res.summary.ci_high >= res.summary.fit.error_per_gate);
  const auto rep = rb_repetitions(res, 7, 20, 3);
  CHECK(rep.repetitions.size() == 4);
  CHECK(rep.spread() >= 0.0);
  CHECK_THROWS_AS(rb_repetitions(res, 31, 20, 3), InputError);
}

TEST_CASE("RB is reproducible per seed") {
  RBConfig c;
  c.n_randomizations = 5;
  c.shots_per_sequence = 3;
  c.bootstrap_samples = 10;
  c.sequence_lengths = {1, 20, 40};
  const auto a = simulate_rb(c, NoiseModel{}, RamseyConfig{}, LoopConfig{}, 5);
  const auto b = simulate_rb(c, NoiseModel{}, RamseyConfig{}, LoopConfig{}, 5);
  CHECK(a.survival == b.survival);
  CHECK(a.summary.ci_low == b.summary.ci_low);
}

TEST_CASE("RB validation") {
  RBConfig c;
  c.sequence_lengths = {1, 5, 5};
  CHECK_THROWS_AS(validate(c), DomainError);
  c = RBConfig{};
  c.depolarizing = 2.0;
  CHECK_THROWS_AS(validate(c), DomainError);
  c = RBConfig{};
  c.sequence_pool = -1;
  CHECK_THROWS_AS(validate(c), DomainError);
}

TEST_CASE("a single sequence under constant detuning decays non-monotonically") {
  auto c = quiet();
  c.static_detuning = 100e3;
  c.n_randomizations = 1;
  c.sequence_lengths.clear();
  for (int m = 20; m <= 1000; m += 20) c.sequence_lengths.push_back(m);
  const auto res = simulate_rb(c, NoiseModel::white(0.0), RamseyConfig{}, LoopConfig{}, 13);
  int rises = 0;
  for (Eigen::Index j = 1; j < res.survival.cols(); ++j) rises += res.survival(0, j) > res.survival(0, j - 1) + 1e-6;
  CHECK(rises > 0);
  CHECK(res.survival.row(0).minCoeff() < 0.99);
}
