#pragma once

#include "qfb/common.hpp"
#include "qfb/physics.hpp"
#include "qfb/ramsey.hpp"

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace qfb {

enum class LoopMode { Real, FixedPoint };

/// Accumulator (integral) feedback on the estimated detuning.
struct LoopConfig {
  double gain = 0.35;
  /// Estimation shots between accumulator updates (N_S). 0 selects N.
  int update_stride = 0;
  LoopMode mode = LoopMode::Real;
  double dac_full_scale = 800e3;  // +/- Hz
  int dac_bits = 16;
  /// Fractional accumulator bits below one DAC step (fixed-point mode).
  int accumulator_frac_bits = 16;
  /// Idle time between updates during which the noise evolves, s.
  double idle_gap = 0.0;
  /// Trace samples per shot cycle used by the simulators.
  int samples_per_shot = 1;
  SampleAveraging averaging = SampleAveraging::FreeEvolution;
  /// Updates simulated and discarded before recording starts.
  int warmup_updates = 0;

  int stride(const RamseyConfig& rcfg) const {
    return update_stride > 0 ? update_stride : rcfg.shots_per_estimate;
  }
  /// Time between accumulator updates.
  double update_period(const RamseyConfig& rcfg) const {
    return stride(rcfg) * rcfg.cycle_time + idle_gap;
  }
  double dac_step() const { return 2.0 * dac_full_scale / static_cast<double>(1LL << dac_bits); }
};

/// Throws DomainError for malformed settings and DivergenceError for gains
/// outside the stable range [0, 2).
void validate(const LoopConfig& cfg, const RamseyConfig& rcfg);

struct LoopState {
  double p = 0.0;  // accumulator output, Hz
  long long n = 0;
  bool saturated = false;
};

/// p <- p + G e. Fixed-point mode quantizes G e to DAC steps before accumulating
/// and clamps at full scale.
LoopState loop_step(const LoopState& state, double error, const LoopConfig& cfg);

/// Running sum of the last N virtually reset bits.
class SlidingBitSum {
 public:
  explicit SlidingBitSum(int window);

  void push(std::uint8_t bit);
  int sum() const { return sum_; }
  int window() const { return static_cast<int>(ring_.size()); }

 private:
  std::vector<std::uint8_t> ring_;
  std::size_t head_ = 0;
  int sum_ = 0;
};

/// lut[k] = G invert_p1(k/N) in accumulator units (DAC step / 2^frac_bits).
std::vector<std::int64_t> build_lookup_table(const RamseyConfig& rcfg, const LoopConfig& cfg);

struct FixedPointOutput {
  std::int64_t accumulator = 0;
  std::int64_t voltage_code = 0;
  bool saturated = false;
};

FixedPointOutput fixed_point_step(const SlidingBitSum& buffer, std::span<const std::int64_t> lut,
                                  std::int64_t accumulator, const LoopConfig& cfg);

/// DAC output frequency for a code.
inline double dac_frequency(std::int64_t code, const LoopConfig& cfg) {
  return static_cast<double>(code) * cfg.dac_step();
}

/// Streaming controller fed with raw discriminated bits. Performs virtual
/// reset, keeps the buffer sum, and updates the accumulator every N_S bits.
class FeedbackController {
 public:
  FeedbackController(const RamseyConfig& rcfg, const LoopConfig& cfg);

  /// Returns true when this bit completed an update.
  bool push(std::uint8_t raw_bit);

  /// Raw bit from an interleaved (non-estimation) shot. Only advances the
  /// virtual-reset reference; the buffer and accumulator are untouched.
  void pass_through(std::uint8_t raw_bit) { previous_raw_ = raw_bit & 1u; }

  /// Frequency correction currently applied to the qubit, Hz.
  double applied() const { return applied_; }
  double last_error() const { return last_error_; }
  int last_sum() const { return buffer_.sum(); }
  int saturations() const { return saturations_; }
  std::uint8_t last_corrected_bit() const { return last_corrected_; }

 private:
  RamseyConfig rcfg_;
  LoopConfig cfg_;
  SlidingBitSum buffer_;
  std::vector<std::int64_t> lut_;
  std::vector<double> error_table_;
  std::int64_t accumulator_ = 0;
  double real_p_ = 0.0;
  double applied_ = 0.0;
  double last_error_ = 0.0;
  int stride_;
  int steps_ = 0;
  int saturations_ = 0;
  std::uint8_t previous_raw_ = 0;
  std::uint8_t last_corrected_ = 0;
};

struct ClosedLoopRecord {
  TimeTrace error_signal;    // e[n], estimated detuning
  TimeTrace control_signal;  // p[n]
  TimeTrace true_frequency;  // intrinsic[n] + p[n]
  TimeTrace intrinsic;       // sampled intrinsic frequency f~[n]
  /// Virtually reset bits of the N shots behind each update (when requested).
  std::vector<ShotRecord> shots;
  int saturations = 0;
};

struct ClosedLoopOptions {
  bool keep_shots = false;
};

/// Shot-level closed-loop simulation driven by a synthesized intrinsic trace.
/// Shots of update n see the correction p[n-1]; gain 0 is open-loop monitoring.
ClosedLoopRecord run_closed_loop(const NoiseModel& model, const RamseyConfig& rcfg,
                                 const LoopConfig& lcfg, Eigen::Index n_estimates,
                                 std::uint64_t seed, ClosedLoopOptions options = {});

/// Same, against a caller-supplied intrinsic trace. The trace must cover the
/// warm-up plus `n_estimates` updates.
ClosedLoopRecord run_closed_loop(const TimeTrace& intrinsic, const RamseyConfig& rcfg,
                                 const LoopConfig& lcfg, Eigen::Index n_estimates,
                                 std::uint64_t seed, ClosedLoopOptions options = {});

/// Samples of intrinsic trace needed by run_closed_loop.
Eigen::Index closed_loop_trace_length(const RamseyConfig& rcfg, const LoopConfig& lcfg,
                                      Eigen::Index n_estimates);

void write_csv(std::ostream& out, const ClosedLoopRecord& record);

// z-domain responses. z = exp(i 2 pi f T_update).

template <typename Scalar>
std::complex<Scalar> control_response(Scalar gain, std::complex<Scalar> z) {
  const std::complex<Scalar> zi = Scalar(1) / z;
  return gain / (Scalar(1) - zi + zi * gain);
}

template <typename Scalar>
std::complex<Scalar> error_response(Scalar gain, std::complex<Scalar> z) {
  const std::complex<Scalar> zi = Scalar(1) / z;
  return (Scalar(1) - zi) / (Scalar(1) - zi + zi * gain);
}

std::complex<double> transfer_p(double f, const LoopConfig& cfg, const RamseyConfig& rcfg);
std::complex<double> transfer_e(double f, const LoopConfig& cfg, const RamseyConfig& rcfg);

/// |H_p - 1|^2 S_open + |H_p|^2 S_sampling: the qubit frequency right after a
/// feedback update.
double closed_loop_psd(double s_open, double s_sampling, double f, const LoopConfig& cfg,
                       const RamseyConfig& rcfg);

template <typename OpenPsd, typename SamplingPsd>
double closed_loop_psd(const OpenPsd& s_open, const SamplingPsd& s_sampling, double f,
                       const LoopConfig& cfg, const RamseyConfig& rcfg) {
  return closed_loop_psd(s_open(f), s_sampling(f), f, cfg, rcfg);
}

/// |H_e|^2 (S_open + S_sampling): the error signal.
double error_signal_psd(double s_open, double s_sampling, double f, const LoopConfig& cfg,
                        const RamseyConfig& rcfg);

}  // namespace qfb
