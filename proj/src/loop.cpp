#include "qfb/loop.hpp"

#include "qfb/csv.hpp"

#include <cmath>
#include <ostream>
#include <string>

namespace qfb {

void validate(const LoopConfig& cfg, const RamseyConfig& rcfg) {
  validate(rcfg);
  if (!(cfg.gain >= 0.0)) throw DomainError("loop: gain must be >= 0");
  if (cfg.gain >= 2.0)
    throw DivergenceError("loop: gain " + std::to_string(cfg.gain) +
                          " puts the accumulator pole 1-G outside the unit circle (need G < 2)");
  if (cfg.update_stride < 0) throw DomainError("loop: update_stride must be >= 1");
  if (cfg.idle_gap < 0.0) throw DomainError("loop: idle_gap must be >= 0");
  if (cfg.samples_per_shot < 1) throw DomainError("loop: samples_per_shot must be >= 1");
  if (cfg.warmup_updates < 0) throw DomainError("loop: warmup_updates must be >= 0");
  if (cfg.mode == LoopMode::FixedPoint) {
    if (cfg.dac_bits < 1 || cfg.dac_bits > 32) throw DomainError("loop: dac_bits must lie in [1, 32]");
    if (cfg.accumulator_frac_bits < 0 || cfg.dac_bits + cfg.accumulator_frac_bits > 52)
      throw DomainError("loop: accumulator_frac_bits out of range");
    if (!(cfg.dac_full_scale > 0.0)) throw DomainError("loop: dac_full_scale must be positive");
  }
}

namespace {

std::int64_t code_max(const LoopConfig& cfg) { return (std::int64_t{1} << (cfg.dac_bits - 1)) - 1; }
std::int64_t code_min(const LoopConfig& cfg) { return -(std::int64_t{1} << (cfg.dac_bits - 1)); }

std::int64_t round_shift(std::int64_t v, int bits) {
  if (bits == 0) return v;
  const std::int64_t half = std::int64_t{1} << (bits - 1);
  const std::int64_t scale = std::int64_t{1} << bits;
  return v >= 0 ? (v + half) / scale : -((-v + half) / scale);
}

}  // namespace

LoopState loop_step(const LoopState& state, double error, const LoopConfig& cfg) {
  LoopState next = state;
  ++next.n;
  next.saturated = false;
  if (cfg.mode == LoopMode::Real) {
    next.p = state.p + cfg.gain * error;
    return next;
  }
  const double step = cfg.dac_step();
  const auto increment = static_cast<std::int64_t>(std::llround(cfg.gain * error / step));
  std::int64_t code = static_cast<std::int64_t>(std::llround(state.p / step)) + increment;
  if (code > code_max(cfg)) {
    code = code_max(cfg);
    next.saturated = true;
  } else if (code < code_min(cfg)) {
    code = code_min(cfg);
    next.saturated = true;
  }
  next.p = dac_frequency(code, cfg);
  return next;
}

SlidingBitSum::SlidingBitSum(int window) : ring_(static_cast<std::size_t>(window), 0) {
  if (window < 1) throw DomainError("buffer window must be >= 1");
}

void SlidingBitSum::push(std::uint8_t bit) {
  bit &= 1u;
  sum_ += static_cast<int>(bit) - static_cast<int>(ring_[head_]);
  ring_[head_] = bit;
  head_ = (head_ + 1) % ring_.size();
}

std::vector<std::int64_t> build_lookup_table(const RamseyConfig& rcfg, const LoopConfig& cfg) {
  const int n = rcfg.shots_per_estimate;
  const double unit = cfg.dac_step() / std::ldexp(1.0, cfg.accumulator_frac_bits);
  std::vector<std::int64_t> lut(static_cast<std::size_t>(n) + 1);
  for (int k = 0; k <= n; ++k) {
    const double v = cfg.gain * invert_p1(static_cast<double>(k) / n, rcfg);
    lut[static_cast<std::size_t>(k)] = static_cast<std::int64_t>(std::llround(v / unit));
  }
  return lut;
}

FixedPointOutput fixed_point_step(const SlidingBitSum& buffer, std::span<const std::int64_t> lut,
                                  std::int64_t accumulator, const LoopConfig& cfg) {
  const int s = buffer.sum();
  if (lut.size() != static_cast<std::size_t>(buffer.window()) + 1)
    throw InputError("lookup table must hold window + 1 entries");
  FixedPointOutput out;
  const int frac = cfg.accumulator_frac_bits;
  const std::int64_t hi = code_max(cfg) * (std::int64_t{1} << frac);
  const std::int64_t lo = code_min(cfg) * (std::int64_t{1} << frac);
  out.accumulator = accumulator + lut[static_cast<std::size_t>(s)];
  if (out.accumulator > hi) {
    out.accumulator = hi;
    out.saturated = true;
  } else if (out.accumulator < lo) {
    out.accumulator = lo;
    out.saturated = true;
  }
  out.voltage_code = round_shift(out.accumulator, frac);
  return out;
}

FeedbackController::FeedbackController(const RamseyConfig& rcfg, const LoopConfig& cfg)
    : rcfg_(rcfg), cfg_(cfg), buffer_(rcfg.shots_per_estimate), stride_(cfg.stride(rcfg)) {
  validate(cfg_, rcfg_);
  error_table_.resize(static_cast<std::size_t>(rcfg.shots_per_estimate) + 1);
  for (int k = 0; k <= rcfg.shots_per_estimate; ++k)
    error_table_[static_cast<std::size_t>(k)] =
        invert_p1(static_cast<double>(k) / rcfg.shots_per_estimate, rcfg_);
  if (cfg_.mode == LoopMode::FixedPoint) lut_ = build_lookup_table(rcfg_, cfg_);
}

bool FeedbackController::push(std::uint8_t raw_bit) {
  raw_bit &= 1u;
  last_corrected_ = raw_bit ^ previous_raw_;
  previous_raw_ = raw_bit;
  buffer_.push(last_corrected_);
  if (++steps_ < stride_) return false;
  steps_ = 0;

  last_error_ = error_table_[static_cast<std::size_t>(buffer_.sum())];
  if (cfg_.mode == LoopMode::Real) {
    real_p_ += cfg_.gain * last_error_;
    applied_ = real_p_;
  } else {
    const auto out = fixed_point_step(buffer_, lut_, accumulator_, cfg_);
    accumulator_ = out.accumulator;
    applied_ = dac_frequency(out.voltage_code, cfg_);
    if (out.saturated) ++saturations_;
  }
  if (!std::isfinite(applied_) || std::abs(applied_) > 1e3 * rcfg_.detuning_range())
    throw DivergenceError("feedback accumulator diverged");
  return true;
}

Eigen::Index closed_loop_trace_length(const RamseyConfig& rcfg, const LoopConfig& lcfg,
                                      Eigen::Index n_estimates) {
  const double dt = rcfg.cycle_time / lcfg.samples_per_shot;
  const double total = static_cast<double>(lcfg.warmup_updates + n_estimates) * lcfg.update_period(rcfg);
  return static_cast<Eigen::Index>(std::ceil(total / dt - 1e-9)) + 1;
}

ClosedLoopRecord run_closed_loop(const NoiseModel& model, const RamseyConfig& rcfg,
                                 const LoopConfig& lcfg, Eigen::Index n_estimates,
                                 std::uint64_t seed, ClosedLoopOptions options) {
  validate(lcfg, rcfg);
  if (n_estimates < 1) throw DomainError("run_closed_loop: n_estimates must be >= 1");
  const double dt = rcfg.cycle_time / lcfg.samples_per_shot;
  const auto trace = synthesize_trace(model, closed_loop_trace_length(rcfg, lcfg, n_estimates), dt,
                                      stream_seed(seed, 1));
  return run_closed_loop(trace, rcfg, lcfg, n_estimates, seed, options);
}

ClosedLoopRecord run_closed_loop(const TimeTrace& intrinsic, const RamseyConfig& rcfg,
                                 const LoopConfig& lcfg, Eigen::Index n_estimates,
                                 std::uint64_t seed, ClosedLoopOptions options) {
  validate(lcfg, rcfg);
  if (n_estimates < 1) throw DomainError("run_closed_loop: n_estimates must be >= 1");
  const int n_shots = rcfg.shots_per_estimate;
  const int stride = lcfg.stride(rcfg);
  const double period = lcfg.update_period(rcfg);
  const double window = lcfg.averaging == SampleAveraging::FreeEvolution ? rcfg.tau : rcfg.cycle_time;

  const TraceIntegrator integ(intrinsic);
  FeedbackController controller(rcfg, lcfg);
  Rng rng(stream_seed(seed, 2));

  ClosedLoopRecord rec;
  for (TimeTrace* t : {&rec.error_signal, &rec.control_signal, &rec.true_frequency, &rec.intrinsic}) {
    t->sample_period = period;
    t->values.resize(n_estimates);
  }
  if (options.keep_shots) rec.shots.assign(static_cast<std::size_t>(n_estimates), ShotRecord{});

  // Window means of the last N shots, for the sampled intrinsic frequency.
  std::vector<double> recent(static_cast<std::size_t>(n_shots), 0.0);
  std::size_t recent_head = 0;
  ShotRecord corrected(static_cast<std::size_t>(n_shots), 0);
  std::size_t corrected_head = 0;

  std::uint8_t previous_raw = 0;
  const Eigen::Index total = lcfg.warmup_updates + n_estimates;
  for (Eigen::Index u = 0; u < total; ++u) {
    const double base = static_cast<double>(u) * period;
    for (int i = 0; i < stride; ++i) {
      const double t0 = base + i * rcfg.cycle_time;
      const double f_intrinsic = integ.mean(t0, t0 + window);
      const double delta = -(f_intrinsic + controller.applied());
      const std::uint8_t outcome = simulate_shot(delta, rcfg, rng) ? 1 : 0;
      const std::uint8_t raw = outcome ^ previous_raw;
      previous_raw = raw;

      recent[recent_head] = f_intrinsic;
      recent_head = (recent_head + 1) % recent.size();

      controller.push(raw);
      corrected[corrected_head] = controller.last_corrected_bit();
      corrected_head = (corrected_head + 1) % corrected.size();
    }
    if (u < lcfg.warmup_updates) continue;
    const Eigen::Index n = u - lcfg.warmup_updates;
    double s = 0.0;
    for (double v : recent) s += v;
    const double f_sampled = s / n_shots;
    rec.error_signal.values[n] = controller.last_error();
    rec.control_signal.values[n] = controller.applied();
    rec.intrinsic.values[n] = f_sampled;
    rec.true_frequency.values[n] = f_sampled + controller.applied();
    if (options.keep_shots) {
      ShotRecord& out = rec.shots[static_cast<std::size_t>(n)];
      out.resize(static_cast<std::size_t>(n_shots));
      for (int k = 0; k < n_shots; ++k)
        out[static_cast<std::size_t>(k)] = corrected[(corrected_head + static_cast<std::size_t>(k)) % corrected.size()];
    }
  }
  rec.saturations = controller.saturations();
  return rec;
}

void write_csv(std::ostream& out, const ClosedLoopRecord& record) {
  csv::header(out, {"n", "t_s", "error_hz", "control_hz", "true_freq_hz"});
  const double dt = record.error_signal.sample_period;
  for (Eigen::Index n = 0; n < record.error_signal.size(); ++n)
    csv::row(out, static_cast<long long>(n), static_cast<double>(n) * dt, record.error_signal.values[n],
             record.control_signal.values[n], record.true_frequency.values[n]);
}

namespace {

std::complex<double> unit_z(double f, const LoopConfig& cfg, const RamseyConfig& rcfg) {
  const double period = cfg.update_period(rcfg);
  if (f < 0.0 || f > (0.5 / period) * (1.0 + 1e-12))
    throw DomainError("transfer function evaluated outside [0, Nyquist]");
  return std::polar(1.0, kTwoPi * f * period);
}

}  // namespace

std::complex<double> transfer_p(double f, const LoopConfig& cfg, const RamseyConfig& rcfg) {
  return control_response(cfg.gain, unit_z(f, cfg, rcfg));
}

std::complex<double> transfer_e(double f, const LoopConfig& cfg, const RamseyConfig& rcfg) {
  return error_response(cfg.gain, unit_z(f, cfg, rcfg));
}

double closed_loop_psd(double s_open, double s_sampling, double f, const LoopConfig& cfg,
                       const RamseyConfig& rcfg) {
  const auto hp = transfer_p(f, cfg, rcfg);
  return std::norm(hp - 1.0) * s_open + std::norm(hp) * s_sampling;
}

double error_signal_psd(double s_open, double s_sampling, double f, const LoopConfig& cfg,
                        const RamseyConfig& rcfg) {
  return std::norm(transfer_e(f, cfg, rcfg)) * (s_open + s_sampling);
}

}  // namespace qfb
