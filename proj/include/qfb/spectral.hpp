#pragma once

#include "qfb/common.hpp"
#include "qfb/ramsey.hpp"

#include <iosfwd>
#include <utility>
#include <vector>

namespace qfb {

/// One-sided PSD on a uniform grid starting at DC.
struct SpectrumEstimate {
  Vector frequencies;
  Vector psd;
  double resolution = 0.0;
  int n_averages = 1;

  Eigen::Index size() const { return psd.size(); }
};

enum class Window { Rectangular, Hann };

/// |X_k|^2 scaled so that sum(psd) * resolution equals the mean square of the
/// trace (rectangular window).
SpectrumEstimate periodogram(const TimeTrace& trace, Window window = Window::Rectangular);

/// Averaged modified periodograms over `n_segments` segments overlapping by
/// `overlap_fraction`. Window power is normalized out, so broadband levels are
/// preserved; a tone's integrated power is preserved to within
/// kWindowedToneTolerance. Segments longer than 4096 samples are shortened
/// to the nearest 2-3-5-smooth length below.
SpectrumEstimate welch(const TimeTrace& trace, int n_segments, double overlap_fraction,
                       Window window = Window::Hann);

/// Relative error bound on the integrated power of a windowed tone (any
/// frequency away from DC and Nyquist, segments of >= 256 samples).
inline constexpr double kWindowedToneTolerance = 0.01;

/// Real part of the averaged cross-spectrum of two traces. Components common
/// to both survive; independent noise averages toward zero.
SpectrumEstimate cross_psd_suppression(const TimeTrace& a, const TimeTrace& b, int n_segments = 1,
                                       double overlap_fraction = 0.0,
                                       Window window = Window::Rectangular);

/// Running mean of spectra on an identical grid.
class SpectrumAverager {
 public:
  void add(const SpectrumEstimate& est);
  SpectrumEstimate mean() const;
  int count() const { return count_; }

 private:
  SpectrumEstimate sum_;
  int count_ = 0;
};

struct SplitTraces {
  TimeTrace even;
  TimeTrace odd;
  bool dropped_last_shot = false;
};

/// Two estimate streams from the even- and odd-indexed shots of each record.
SplitTraces split_shots_for_cross(const std::vector<ShotRecord>& records, const RamseyConfig& cfg);

struct PowerLawFit {
  double amplitude_at_1hz = 0.0;
  double exponent = 0.0;
  std::pair<double, double> fit_band{0.0, 0.0};
  double residual = 0.0;  // rms of log10 residuals
  int excluded_bins = 0;  // non-positive bins dropped from the fit
  int log_bins = 0;
};

/// Weighted least squares of log10(psd) on log10(f) after averaging into
/// equal-width log bins. The log of an averaged chi-squared variate is
/// biased; that bias is removed assuming 2 * n_averages degrees of freedom per
/// raw bin.
PowerLawFit fit_power_law(const SpectrumEstimate& est, std::pair<double, double> band,
                          int bins_per_decade = 10);

/// Mean PSD over grid points with lo <= f <= hi. NaN if the band is empty.
double band_average(const SpectrumEstimate& est, double lo, double hi);

/// Edges of bands of equal log width covering [lo, hi].
std::vector<double> log_band_edges(double lo, double hi, int per_decade);

void write_csv(std::ostream& out, const SpectrumEstimate& est);

}  // namespace qfb
