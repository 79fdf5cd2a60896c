#include "qfb/physics.hpp"
#include "qfb/random.hpp"
#include "qfb/spectral.hpp"

#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>

using namespace qfb;

TEST_CASE("smooth_length returns the next 2-3-5 smooth integer") {
  CHECK(smooth_length(1) == 1);
  CHECK(smooth_length(7) == 8);
  CHECK(smooth_length(11) == 12);
  CHECK(smooth_length(1000) == 1000);
  CHECK(smooth_length(1001) == 1024);
  for (Eigen::Index n = 1; n < 3000; n += 37) {
    Eigen::Index m = smooth_length(n);
    CHECK(m >= n);
    for (int p : {2, 3, 5})
      while (m % p == 0) m /= p;
    CHECK(m == 1);
  }
}

TEST_CASE("model_psd is the power law plus top-hat lines") {
  NoiseModel m;
  CHECK(model_psd(m, 1.0) == doctest::Approx(27.3e6));
  CHECK(model_psd(m, 100.0) == doctest::Approx(27.3e6 / std::pow(100.0, 0.8)));
  m.lines.push_back({60.0, 500.0});
  m.line_width = 2.0;
  CHECK(model_psd(m, 60.5) - power_law_psd(27.3e6, 0.8, 60.5) == doctest::Approx(250.0));
  CHECK(model_psd(m, 61.5) == doctest::Approx(power_law_psd(27.3e6, 0.8, 61.5)));
  CHECK_THROWS_AS(model_psd(m, 0.0), DomainError);
}

TEST_CASE("band_power matches an independent quadrature") {
  NoiseModel m;
  m.lines.push_back({60.0, 1000.0});
  const double quad = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
      [&](double f) { return power_law_psd(m.amplitude_at_1hz, m.exponent_alpha, f); }, 2.0, 500.0, 10, 1e-12);
  CHECK(band_power(m, 2.0, 500.0) == doctest::Approx(quad + 1000.0).epsilon(1e-9));
}

TEST_CASE("validate rejects malformed noise models") {
  NoiseModel m;
  m.exponent_alpha = 2.5;
  CHECK_THROWS_AS(validate(m), DomainError);
  m = NoiseModel{};
  m.amplitude_at_1hz = -1.0;
  CHECK_THROWS_AS(validate(m), DomainError);
  CHECK_NOTHROW(validate(NoiseModel::white(0.0)));
}

TEST_CASE("synthesized white noise has the requested variance and flat spectrum") {
  const double level = 2e3;  // Hz^2/Hz
  const double dt = 1e-4;
  const auto model = NoiseModel::white(level);
  double var = 0.0;
  const int seeds = 100;
  SpectrumAverager avg;
  for (int s = 0; s < seeds; ++s) {
    const auto tr = synthesize_trace(model, 4096, dt, derive_seed(5, s));
    CHECK(tr.size() == 4096);
    CHECK(std::abs(tr.values.mean()) < 1e-9 * std::sqrt(level / dt));
    var += tr.values.squaredNorm() / 4096.0;
    avg.add(periodogram(tr));
  }
  var /= seeds;
  // One-sided level times the band 1/(2 dt), less the empty DC bin.
  const double expected = level * (0.5 / dt) * (2047.5 / 2048.0);
  CHECK(var == doctest::Approx(expected).epsilon(0.02));
  const auto mean = avg.mean();
  CHECK(band_average(mean, 100.0, 4000.0) == doctest::Approx(level).epsilon(0.03));
}

TEST_CASE("synthesized traces are reproducible per seed and differ across seeds") {
  NoiseModel m;
  const auto a = synthesize_trace(m, 1000, 3.5e-6, 11);
  const auto b = synthesize_trace(m, 1000, 3.5e-6, 11);
  const auto c = synthesize_trace(m, 1000, 3.5e-6, 12);
  CHECK(a.values == b.values);
  CHECK(a.values != c.values);
}

TEST_CASE("a spectral line carries its power into one bin") {
  NoiseModel m = NoiseModel::white(0.0);
  const double dt = 1e-3;
  const Eigen::Index n = 1000;  // 1 Hz bins
  m.lines.push_back({50.0, 400.0});
  double power = 0.0;
  const int seeds = 800;
  for (int s = 0; s < seeds; ++s) {
    const auto tr = synthesize_trace(m, n, dt, derive_seed(3, s));
    const auto p = periodogram(tr);
    // Everything sits in the 50 Hz bin.
    CHECK(p.psd[50] * p.resolution == doctest::Approx(tr.values.squaredNorm() / n).epsilon(1e-9));
    power += p.psd[50] * p.resolution;
  }
  // Gaussian line: exponentially distributed power, 800 draws -> 3.5% spread.
  CHECK(power / seeds == doctest::Approx(400.0).epsilon(0.12));
}

TEST_CASE("transmon tuning curve anchors") {
  const TransmonSpec spec;
  CHECK(frequency_at_flux(spec, 0.0) == doctest::Approx(4.835e9));
  CHECK(frequency_at_flux(spec, 0.11) / 1e9 == doctest::Approx(4.69).epsilon(0.002));
  CHECK(flux_sensitivity(spec, 0.0) == doctest::Approx(0.0));
  for (double phi : {0.03, 0.11, 0.18, 0.3}) {
    CHECK(flux_at_frequency(spec, frequency_at_flux(spec, phi)) == doctest::Approx(phi).epsilon(1e-10));
    const double h = 1e-6;
    const double fd = (frequency_at_flux(spec, phi + h) - frequency_at_flux(spec, phi - h)) / (2 * h);
    CHECK(flux_sensitivity(spec, phi) == doctest::Approx(std::abs(fd)).epsilon(1e-6));
  }
  CHECK(flux_at_frequency(spec, 4.44e9) == doctest::Approx(0.1806).epsilon(1e-3));
  CHECK_THROWS_AS(flux_at_frequency(spec, 5e9), DomainError);
}

TEST_CASE("flux noise transduces through the squared sensitivity") {
  const TransmonSpec spec;
  const double d = flux_sensitivity(spec, 0.15);
  CHECK(flux_noise_to_frequency_noise(spec, 0.15, 1e-12) == doctest::Approx(d * d * 1e-12));
  const auto m = flux_noise_model(spec, 0.15, 3e-6);
  CHECK(m.exponent_alpha == 1.0);
  CHECK(m.amplitude_at_1hz == doctest::Approx(2.0 * 9e-12 * d * d));
}

TEST_CASE("rescale_to_bias scales every power by the sensitivity ratio squared") {
  const TransmonSpec spec;
  NoiseModel m;
  m.lines.push_back({60.0, 10.0});
  const double ratio = flux_sensitivity(spec, 0.18) / flux_sensitivity(spec, 0.11);
  const auto r = rescale_to_bias(m, spec, 0.11, 0.18);
  CHECK(r.amplitude_at_1hz == doctest::Approx(m.amplitude_at_1hz * ratio * ratio));
  CHECK(r.lines[0].power == doctest::Approx(10.0 * ratio * ratio));
  CHECK(r.exponent_alpha == m.exponent_alpha);
  CHECK_THROWS_AS(rescale_to_bias(m, spec, 0.0, 0.18), DomainError);
}

TEST_CASE("ensemble periodogram of synthesized noise matches the model in log bands") {
  const NoiseModel m;
  const double dt = 70e-6;
  const Eigen::Index n = 1 << 17;
  SpectrumAverager avg;
  for (int s = 0; s < 200; ++s) avg.add(periodogram(synthesize_trace(m, n, dt, derive_seed(31, s))));
  const auto mean = avg.mean();
  const auto edges = log_band_edges(1.0, 0.5 / dt, 5);
  for (std::size_t b = 0; b + 1 < edges.size(); ++b) {
    double est = 0.0, model = 0.0;
    int count = 0;
    for (Eigen::Index k = 1; k < mean.size(); ++k) {
      const double f = mean.frequencies[k];
      if (f < edges[b] || f >= edges[b + 1]) continue;
      est += mean.psd[k];
      model += model_psd(m, f);
      ++count;
    }
    if (count == 0) continue;
    CHECK(std::abs(10.0 * std::log10(est / model)) <= 1.0);
  }
}
