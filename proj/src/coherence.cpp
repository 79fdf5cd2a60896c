#include "qfb/coherence.hpp"

#include "least_squares.hpp"
#include "qfb/csv.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <ostream>

namespace qfb {

namespace {

using Kronrod = boost::math::quadrature::gauss_kronrod<double, 15>;

constexpr double kOneOverE = 0.36787944117144233;

template <typename F>
double integrate_log_segments(const F& f, double a, double b, const EnvelopeQuadrature& quad) {
  if (!(b > a)) return 0.0;
  const auto n = std::max(1, static_cast<int>(std::ceil(std::log10(b / a) * quad.segments_per_decade)));
  double sum = 0.0;
  double lo = a;
  for (int i = 1; i <= n; ++i) {
    const double hi = i == n ? b : a * std::pow(b / a, static_cast<double>(i) / n);
    sum += Kronrod::integrate(f, lo, hi, 12, quad.tolerance);
    lo = hi;
  }
  return sum;
}

}  // namespace

double dephasing_integral(const PsdFunction& psd, double t, double f0, double f_upper,
                          const EnvelopeQuadrature& quad) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError("ramsey_envelope: t must be finite and >= 0");
  if (!(f0 > 0.0))
    throw DivergenceError("ramsey_envelope: lower cutoff must be positive; the integral of a "
                          "1/f^alpha spectrum with alpha >= 1 diverges at f = 0");
  if (!(f_upper > f0)) throw DomainError("ramsey_envelope: need f0 < f_upper");
  if (quad.segments_per_decade < 1 || quad.oscillation_periods < 1 || !(quad.tolerance > 0.0))
    throw DomainError("ramsey_envelope: invalid quadrature settings");

  const auto sinc2 = [t](double f) {
    const double x = kPi * f * t;
    if (x < 1e-4) return 1.0 - x * x / 3.0;
    const double s = std::sin(x) / x;
    return s * s;
  };
  const auto integrand = [&](double f) { return psd(f) * sinc2(f); };

  double total = 0.0;
  if (t == 0.0) {
    total = integrate_log_segments([&](double f) { return psd(f); }, f0, f_upper, quad);
  } else {
    const double period = 1.0 / t;  // spacing of the sinc^2 zeros
    // Up to the first zero: smooth, covers many decades.
    total += integrate_log_segments(integrand, f0, std::min(f_upper, period), quad);
    // One lobe per segment.
    int k = 1;
    for (; k < quad.oscillation_periods && k * period < f_upper; ++k) {
      const double lo = std::max(f0, k * period);
      const double hi = std::min(f_upper, (k + 1) * period);
      if (hi > lo) total += Kronrod::integrate(integrand, lo, hi, 12, quad.tolerance);
    }
    // Far tail: sin^2 averaged to 1/2.
    const double tail_start = std::max(f0, k * period);
    if (f_upper > tail_start) {
      const double c = 1.0 / (2.0 * kPi * kPi * t * t);
      total += integrate_log_segments([&](double f) { return psd(f) * c / (f * f); }, tail_start,
                                      f_upper, quad);
    }
  }
  if (!std::isfinite(total)) throw DivergenceError("ramsey_envelope: integral is not finite");
  return total;
}

double ramsey_envelope(const PsdFunction& psd, double t, double f0, double f_upper,
                       const EnvelopeQuadrature& quad) {
  const double integral = dephasing_integral(psd, t, f0, f_upper, quad);
  return std::exp(-2.0 * kPi * kPi * t * t * integral);
}

DecayEnvelope decay_envelope(const PsdFunction& psd, const Vector& times, double f0, double f_upper,
                             const EnvelopeQuadrature& quad) {
  DecayEnvelope env;
  env.times = times;
  env.chi.resize(times.size());
  env.lower_cutoff = f0;
  for (Eigen::Index i = 0; i < times.size(); ++i) env.chi[i] = ramsey_envelope(psd, times[i], f0, f_upper, quad);
  return env;
}

DecayEnvelope with_relaxation(DecayEnvelope env, double t1) {
  if (!(t1 > 0.0)) throw DomainError("t1 must be positive");
  if (std::isinf(t1)) return env;
  env.chi.array() *= (-env.times.array() / (2.0 * t1)).exp();
  return env;
}

double extract_t2(const DecayEnvelope& env) {
  if (env.times.size() != env.chi.size() || env.times.size() == 0)
    throw InputError("extract_t2: times and chi must be nonempty and equally long");
  if (env.chi[0] < kOneOverE) return env.times[0];
  for (Eigen::Index i = 1; i < env.chi.size(); ++i) {
    if (env.chi[i] < kOneOverE) {
      const double c0 = env.chi[i - 1];
      const double c1 = env.chi[i];
      const double w = (c0 - kOneOverE) / (c0 - c1);
      return env.times[i - 1] + w * (env.times[i] - env.times[i - 1]);
    }
  }
  throw DomainError("extract_t2: envelope never drops below 1/e; extend the time grid");
}

CoherenceResult analyze_envelope(const DecayEnvelope& env, double t1) {
  CoherenceResult out;
  out.t2 = extract_t2(env);
  out.gamma_1 = std::isinf(t1) ? 0.0 : 1.0 / t1;
  DecayEnvelope pure = env;
  if (!std::isinf(t1)) pure.chi.array() *= (env.times.array() / (2.0 * t1)).exp();
  out.gamma_phi = 1.0 / extract_t2(pure);
  return out;
}

PureDephasing pure_dephasing_rate(double t2, double t1) {
  if (!(t2 > 0.0) || !(t1 > 0.0)) throw DomainError("pure_dephasing_rate: times must be positive");
  PureDephasing out;
  if (t2 > 2.0 * t1) {
    out.relaxation_limited = true;
    return out;
  }
  out.rate = 1.0 / t2 - (std::isinf(t1) ? 0.0 : 1.0 / (2.0 * t1));
  return out;
}

SensitivityFit dephasing_sensitivity_fit(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 3) throw InputError("dephasing_sensitivity_fit: need at least 3 points");
  double sxx = 0.0, sxy = 0.0, mean_y = 0.0;
  for (auto [x, y] : points) {
    if (!std::isfinite(x) || !std::isfinite(y)) throw InputError("dephasing_sensitivity_fit: non-finite point");
    sxx += x * x;
    sxy += x * y;
    mean_y += y;
  }
  if (sxx == 0.0) throw DomainError("dephasing_sensitivity_fit: all sensitivities are zero");
  mean_y /= static_cast<double>(points.size());
  SensitivityFit fit;
  fit.k = sxy / sxx;
  fit.points = static_cast<int>(points.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (auto [x, y] : points) {
    ss_res += (y - fit.k * x) * (y - fit.k * x);
    ss_tot += (y - mean_y) * (y - mean_y);
  }
  fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res == 0.0 ? 1.0 : 0.0);
  return fit;
}

double flux_noise_amplitude(double k, double eta) {
  if (!(k >= 0.0) || !(eta > 0.0)) throw DomainError("flux_noise_amplitude: need k >= 0 and eta > 0");
  return k / (kTwoPi * std::sqrt(eta));
}

double envelope_one_over_e(double gamma_exp, double gamma_gauss) {
  const double a = std::abs(gamma_exp);
  const double b2 = gamma_gauss * gamma_gauss;
  if (b2 < 1e-12 * a * a) {
    if (a == 0.0) return kInfinity;
    return 1.0 / a;
  }
  return (-a + std::sqrt(a * a + 4.0 * b2)) / (2.0 * b2);
}

RamseyFit fit_ramsey_scan(const Vector& tau, const Vector& p1, double frequency_guess) {
  const auto m = tau.size();
  if (m != p1.size() || m < 7) throw InputError("fit_ramsey_scan: need >= 7 equally long samples");
  const double t_max = tau.maxCoeff();
  if (!(t_max > 0.0)) throw InputError("fit_ramsey_scan: delays must span a positive range");
  const double mean = p1.mean();

  // Strongest Fourier component of the scan.
  double spacing = t_max;
  for (Eigen::Index i = 1; i < m; ++i) spacing = std::min(spacing, std::abs(tau[i] - tau[i - 1]));
  double best_nu = frequency_guess;
  double best_power = -1.0;
  const double nu_max = 0.5 / std::max(spacing, 1e-15);
  for (double nu = 0.5 / t_max; nu <= nu_max; nu += 0.25 / t_max) {
    std::complex<double> s{0.0, 0.0};
    for (Eigen::Index i = 0; i < m; ++i) s += (p1[i] - mean) * std::polar(1.0, -kTwoPi * nu * tau[i]);
    if (std::norm(s) > best_power) {
      best_power = std::norm(s);
      best_nu = nu;
    }
  }

  // x = [B, A, u, v, nu, phase]; envelope exp(-u^2 t - v^2 t^2).
  const auto residual = [&](const Vector& x, Vector& r) {
    for (Eigen::Index i = 0; i < m; ++i) {
      const double t = tau[i];
      const double e = std::exp(-x[2] * x[2] * t - x[3] * x[3] * t * t);
      r[i] = x[0] + x[1] * e * std::cos(kTwoPi * x[4] * t + x[5]) - p1[i];
    }
  };
  const auto jacobian = [&](const Vector& x, Eigen::MatrixXd& J) {
    for (Eigen::Index i = 0; i < m; ++i) {
      const double t = tau[i];
      const double e = std::exp(-x[2] * x[2] * t - x[3] * x[3] * t * t);
      const double arg = kTwoPi * x[4] * t + x[5];
      const double c = std::cos(arg);
      const double s = std::sin(arg);
      J(i, 0) = 1.0;
      J(i, 1) = e * c;
      J(i, 2) = -2.0 * x[2] * t * x[1] * e * c;
      J(i, 3) = -2.0 * x[3] * t * t * x[1] * e * c;
      J(i, 4) = -kTwoPi * t * x[1] * e * s;
      J(i, 5) = -x[1] * e * s;
    }
  };

  RamseyFit best;
  double best_ssq = kInfinity;
  const double a0 = std::max(0.05, std::abs(p1[0] - mean));
  for (double nu : {frequency_guess, best_nu}) {
    for (double scale : {t_max / 8.0, t_max / 3.0}) {
      for (auto [fe, fg] : {std::pair{1.0, 0.1}, std::pair{0.1, 1.0}, std::pair{0.5, 0.7}}) {
        Vector x(6);
        x << mean, a0, std::sqrt(fe / scale), fg / scale, nu, 0.0;
        const auto outcome = detail::least_squares(x, static_cast<int>(m), residual, jacobian);
        if (!outcome.converged || outcome.ssq >= best_ssq) continue;
        best_ssq = outcome.ssq;
        const Vector& y = outcome.x;
        best.offset = y[0];
        best.amplitude = y[1];
        best.gamma_exp = y[2] * y[2];
        best.gamma_gauss = std::abs(y[3]);
        best.frequency = y[4];
        best.phase = y[5];
        best.converged = true;
      }
    }
  }
  if (!best.converged) return best;
  if (best.amplitude < 0.0) {
    best.amplitude = -best.amplitude;
    best.phase += kPi;
  }
  best.phase = std::remainder(best.phase, kTwoPi);
  if (best.frequency < 0.0) {
    best.frequency = -best.frequency;
    best.phase = -best.phase;
  }
  best.t2 = envelope_one_over_e(best.gamma_exp, best.gamma_gauss);
  best.residual = std::sqrt(best_ssq / static_cast<double>(m));
  return best;
}

PsdFunction log_log_interpolant(std::vector<double> frequencies, std::vector<double> psd) {
  if (frequencies.empty() || frequencies.size() != psd.size())
    throw InputError("log_log_interpolant: need equally long, nonempty grids");
  for (std::size_t i = 0; i < frequencies.size(); ++i) {
    if (!(frequencies[i] > 0.0) || !(psd[i] > 0.0)) throw InputError("log_log_interpolant: values must be positive");
    frequencies[i] = std::log(frequencies[i]);
    if (i > 0 && !(frequencies[i] > frequencies[i - 1])) throw InputError("log_log_interpolant: frequencies must increase");
    psd[i] = std::log(psd[i]);
  }
  return [lf = std::move(frequencies), lp = std::move(psd)](double f) {
    const double x = std::log(f);
    if (x <= lf.front()) return std::exp(lp.front());
    if (x >= lf.back()) return std::exp(lp.back());
    const auto it = std::upper_bound(lf.begin(), lf.end(), x);
    const auto i = static_cast<std::size_t>(it - lf.begin());
    const double w = (x - lf[i - 1]) / (lf[i] - lf[i - 1]);
    return std::exp(lp[i - 1] + w * (lp[i] - lp[i - 1]));
  };
}

PsdFunction interpolate_psd(const SpectrumEstimate& est, int bins_per_decade) {
  double lo = kInfinity, hi = 0.0;
  for (Eigen::Index k = 0; k < est.size(); ++k) {
    if (est.frequencies[k] > 0.0 && est.psd[k] > 0.0) {
      lo = std::min(lo, est.frequencies[k]);
      hi = std::max(hi, est.frequencies[k]);
    }
  }
  if (!(hi > 0.0)) throw InputError("interpolate_psd: no positive bins");
  if (!(hi > lo)) return [v = est.psd.maxCoeff()](double) { return v; };
  const auto edges = log_band_edges(lo, hi, bins_per_decade);
  std::vector<double> fs, ps;
  for (std::size_t b = 0; b + 1 < edges.size(); ++b) {
    const bool last = b + 2 == edges.size();
    double log_f = 0.0, sum = 0.0;
    int count = 0;
    for (Eigen::Index k = 0; k < est.size(); ++k) {
      const double f = est.frequencies[k];
      if (f < edges[b] || (last ? f > edges[b + 1] : f >= edges[b + 1]) || !(est.psd[k] > 0.0)) continue;
      log_f += std::log(f);
      sum += est.psd[k];
      ++count;
    }
    if (count == 0) continue;
    fs.push_back(std::exp(log_f / count));
    ps.push_back(sum / count);
  }
  return log_log_interpolant(std::move(fs), std::move(ps));
}

void write_envelope_csv(std::ostream& out, const DecayEnvelope& env) {
  csv::header(out, {"t_s", "chi"});
  for (Eigen::Index i = 0; i < env.times.size(); ++i) csv::row(out, env.times[i], env.chi[i]);
}

void write_scan_csv(std::ostream& out, const std::vector<double>& tau_r, const Vector& mean,
                    const Vector& sem) {
  csv::header(out, {"tau_r_s", "p1_mean", "p1_sem"});
  for (std::size_t i = 0; i < tau_r.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    csv::row(out, tau_r[i], mean[k], sem[k]);
  }
}

}  // namespace qfb
