#include "qfb/spectral.hpp"

#include "qfb/csv.hpp"

#include <unsupported/Eigen/FFT>
#include <unsupported/Eigen/SpecialFunctions>

#include <cmath>
#include <complex>
#include <limits>
#include <ostream>

namespace qfb {

namespace {

std::vector<double> make_window(Eigen::Index n, Window window) {
  std::vector<double> w(static_cast<std::size_t>(n), 1.0);
  if (window == Window::Hann) {
    // Periodic Hann.
    for (Eigen::Index i = 0; i < n; ++i)
      w[static_cast<std::size_t>(i)] = 0.5 - 0.5 * std::cos(kTwoPi * static_cast<double>(i) / static_cast<double>(n));
  }
  return w;
}

std::vector<std::complex<double>> half_spectrum(const double* x, Eigen::Index n,
                                                const std::vector<double>& w) {
  std::vector<double> buf(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) buf[static_cast<std::size_t>(i)] = x[i] * w[static_cast<std::size_t>(i)];
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<std::complex<double>> out;
  fft.fwd(out, buf);
  out.resize(static_cast<std::size_t>(n / 2 + 1));
  return out;
}

SpectrumEstimate empty_grid(Eigen::Index n, double dt, int averages) {
  SpectrumEstimate est;
  const Eigen::Index bins = n / 2 + 1;
  est.resolution = 1.0 / (static_cast<double>(n) * dt);
  est.frequencies = Vector::LinSpaced(bins, 0.0, static_cast<double>(bins - 1) * est.resolution);
  est.psd = Vector::Zero(bins);
  est.n_averages = averages;
  return est;
}

double bin_scale(Eigen::Index k, Eigen::Index n, double dt, double window_power) {
  const bool edge = k == 0 || (n % 2 == 0 && k == n / 2);
  return (edge ? 1.0 : 2.0) * dt / window_power;
}

// Largest 2-3-5-smooth length <= n; lengths with large prime factors make
// the FFT quadratic. Short segments and single periodograms are kept exact.
Eigen::Index smooth_floor(Eigen::Index n) {
  if (n <= 4096) return n;
  for (Eigen::Index m = n;; --m) {
    Eigen::Index r = m;
    for (Eigen::Index p : {2, 3, 5})
      while (r % p == 0) r /= p;
    if (r == 1) return m;
  }
}

struct Segmenting {
  Eigen::Index length;
  Eigen::Index step;
};

Segmenting segmenting(Eigen::Index n, int n_segments, double overlap) {
  if (n_segments < 1) throw InputError("welch: n_segments must be >= 1");
  if (!(overlap >= 0.0 && overlap < 1.0)) throw InputError("welch: overlap must lie in [0, 1)");
  const double denom = 1.0 + (n_segments - 1) * (1.0 - overlap);
  Segmenting s;
  s.length = static_cast<Eigen::Index>(std::floor(static_cast<double>(n) / denom));
  if (n_segments > 1) s.length = smooth_floor(s.length);
  s.step = n_segments > 1 ? static_cast<Eigen::Index>(std::floor(s.length * (1.0 - overlap))) : 0;
  if (s.length < 2 || (n_segments - 1) * s.step + s.length > n)
    throw InputError("welch: too few samples for the requested segments");
  return s;
}

void check_trace(const TimeTrace& t) {
  if (t.size() < 2) throw InputError("spectral estimate needs at least 2 samples");
  validate(t);
}

}  // namespace

SpectrumEstimate periodogram(const TimeTrace& trace, Window window) {
  return welch(trace, 1, 0.0, window);
}

SpectrumEstimate welch(const TimeTrace& trace, int n_segments, double overlap_fraction, Window window) {
  check_trace(trace);
  const auto seg = segmenting(trace.size(), n_segments, overlap_fraction);
  const auto w = make_window(seg.length, window);
  double power = 0.0;
  for (double v : w) power += v * v;

  auto est = empty_grid(seg.length, trace.sample_period, n_segments);
  for (int s = 0; s < n_segments; ++s) {
    const auto spec = half_spectrum(trace.values.data() + s * seg.step, seg.length, w);
    for (Eigen::Index k = 0; k < est.size(); ++k)
      est.psd[k] += bin_scale(k, seg.length, trace.sample_period, power) * std::norm(spec[static_cast<std::size_t>(k)]);
  }
  est.psd /= static_cast<double>(n_segments);
  return est;
}

SpectrumEstimate cross_psd_suppression(const TimeTrace& a, const TimeTrace& b, int n_segments,
                                       double overlap_fraction, Window window) {
  check_trace(a);
  check_trace(b);
  if (a.size() != b.size()) throw InputError("cross spectrum: trace lengths differ");
  if (std::abs(a.sample_period - b.sample_period) > 1e-12 * a.sample_period)
    throw InputError("cross spectrum: sample periods differ");
  const auto seg = segmenting(a.size(), n_segments, overlap_fraction);
  const auto w = make_window(seg.length, window);
  double power = 0.0;
  for (double v : w) power += v * v;

  auto est = empty_grid(seg.length, a.sample_period, n_segments);
  for (int s = 0; s < n_segments; ++s) {
    const auto sa = half_spectrum(a.values.data() + s * seg.step, seg.length, w);
    const auto sb = half_spectrum(b.values.data() + s * seg.step, seg.length, w);
    for (Eigen::Index k = 0; k < est.size(); ++k) {
      const auto idx = static_cast<std::size_t>(k);
      est.psd[k] += bin_scale(k, seg.length, a.sample_period, power) * (sa[idx] * std::conj(sb[idx])).real();
    }
  }
  est.psd /= static_cast<double>(n_segments);
  return est;
}

void SpectrumAverager::add(const SpectrumEstimate& est) {
  if (count_ == 0) {
    sum_ = est;
    sum_.n_averages = 0;
    sum_.psd.setZero();
  } else if (est.size() != sum_.size() || std::abs(est.resolution - sum_.resolution) > 1e-12 * sum_.resolution) {
    throw InputError("SpectrumAverager: grid mismatch");
  }
  sum_.psd += est.psd;
  sum_.n_averages += est.n_averages;
  ++count_;
}

SpectrumEstimate SpectrumAverager::mean() const {
  if (count_ == 0) throw InputError("SpectrumAverager: no spectra added");
  SpectrumEstimate out = sum_;
  out.psd /= static_cast<double>(count_);
  return out;
}

SplitTraces split_shots_for_cross(const std::vector<ShotRecord>& records, const RamseyConfig& cfg) {
  if (records.empty()) throw InputError("split_shots_for_cross: no records");
  SplitTraces out;
  const auto n = static_cast<Eigen::Index>(records.size());
  out.even.sample_period = out.odd.sample_period = cfg.estimate_period();
  out.even.values.resize(n);
  out.odd.values.resize(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& rec = records[static_cast<std::size_t>(r)];
    if (rec.size() < 2) throw InputError("split_shots_for_cross: records need at least 2 shots");
    std::size_t usable = rec.size();
    if (usable % 2 == 1) {
      --usable;
      out.dropped_last_shot = true;
    }
    int even = 0;
    int odd = 0;
    for (std::size_t i = 0; i < usable; ++i) (i % 2 == 0 ? even : odd) += rec[i] & 1;
    const double half = static_cast<double>(usable / 2);
    out.even.values[r] = invert_p1(even / half, cfg);
    out.odd.values[r] = invert_p1(odd / half, cfg);
  }
  return out;
}

std::vector<double> log_band_edges(double lo, double hi, int per_decade) {
  if (!(lo > 0.0 && hi > lo) || per_decade < 1) throw InputError("log_band_edges: invalid band");
  const double decades = std::log10(hi / lo);
  const auto n = std::max<long>(1, static_cast<long>(std::ceil(decades * per_decade - 1e-9)));
  std::vector<double> edges(static_cast<std::size_t>(n) + 1);
  for (long i = 0; i <= n; ++i) edges[static_cast<std::size_t>(i)] = lo * std::pow(hi / lo, static_cast<double>(i) / n);
  return edges;
}

PowerLawFit fit_power_law(const SpectrumEstimate& est, std::pair<double, double> band, int bins_per_decade) {
  auto [lo, hi] = band;
  if (!(lo > 0.0 && hi > lo)) throw InputError("fit_power_law: invalid band");
  PowerLawFit fit;
  fit.fit_band = band;

  int in_band = 0;
  for (Eigen::Index k = 0; k < est.size(); ++k)
    if (est.frequencies[k] >= lo && est.frequencies[k] <= hi) ++in_band;
  if (in_band < 8) throw InputError("fit_power_law: fewer than 8 bins in band");

  const auto edges = log_band_edges(lo, hi, bins_per_decade);
  std::vector<double> xs, ys, ws;
  const double dof_per_bin = 2.0 * std::max(1, est.n_averages);
  Eigen::Index k = 0;
  while (k < est.size() && est.frequencies[k] < lo) ++k;
  for (std::size_t b = 0; b + 1 < edges.size(); ++b) {
    const bool last = b + 2 == edges.size();
    double sum = 0.0, logf = 0.0;
    int count = 0;
    for (; k < est.size(); ++k) {
      const double f = est.frequencies[k];
      if (last ? f > edges[b + 1] : f >= edges[b + 1]) break;
      if (!(est.psd[k] > 0.0)) {
        ++fit.excluded_bins;
        continue;
      }
      sum += est.psd[k];
      logf += std::log10(f);
      ++count;
    }
    if (count == 0) continue;
    const double shape = 0.5 * dof_per_bin * count;  // mean of `count` bins ~ Gamma(shape)/shape
    Eigen::ArrayXd a(1);
    a[0] = shape;
    const double log_bias = a.digamma()[0] - std::log(shape);
    xs.push_back(logf / count);
    ys.push_back(std::log10(sum / count) - log_bias / std::log(10.0));
    ws.push_back(shape);
  }
  fit.log_bins = static_cast<int>(xs.size());
  if (xs.size() < 2) throw InputError("fit_power_law: band spans fewer than 2 populated log bins");

  const auto m = static_cast<Eigen::Index>(xs.size());
  Eigen::MatrixXd design(m, 2);
  Vector y(m), w(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    design(i, 0) = 1.0;
    design(i, 1) = xs[static_cast<std::size_t>(i)];
    y[i] = ys[static_cast<std::size_t>(i)];
    w[i] = ws[static_cast<std::size_t>(i)];
  }
  const Eigen::MatrixXd normal = design.transpose() * w.asDiagonal() * design;
  const Eigen::Vector2d coef = normal.ldlt().solve(design.transpose() * w.asDiagonal() * y);
  fit.amplitude_at_1hz = std::pow(10.0, coef[0]);
  fit.exponent = -coef[1];
  const Vector r = y - design * coef;
  fit.residual = std::sqrt((w.array() * r.array().square()).sum() / w.sum());
  return fit;
}

double band_average(const SpectrumEstimate& est, double lo, double hi) {
  double sum = 0.0;
  int count = 0;
  for (Eigen::Index k = 0; k < est.size(); ++k) {
    if (est.frequencies[k] >= lo && est.frequencies[k] <= hi) {
      sum += est.psd[k];
      ++count;
    }
  }
  return count > 0 ? sum / count : std::numeric_limits<double>::quiet_NaN();
}

void write_csv(std::ostream& out, const SpectrumEstimate& est) {
  csv::header(out, {"f_hz", "psd_hz2_per_hz"});
  for (Eigen::Index k = 0; k < est.size(); ++k) csv::row(out, est.frequencies[k], est.psd[k]);
}

}  // namespace qfb
