#include "qfb/coherence.hpp"

#include <cmath>

namespace qfb {

void validate(const InterleavedConfig& cfg) {
  if (cfg.tau_r_grid.empty()) throw DomainError("interleaved: tau_r grid is empty");
  for (double t : cfg.tau_r_grid)
    if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError("interleaved: delays must be finite and >= 0");
  if (cfg.passes < 1) throw DomainError("interleaved: passes must be >= 1");
  if (!(cfg.t1 > 0.0)) throw DomainError("interleaved: t1 must be positive");
  if (!std::isfinite(cfg.set_detuning)) throw DomainError("interleaved: set detuning must be finite");
}

std::vector<double> linear_delay_grid(double max_delay, int points) {
  if (points < 2 || !(max_delay > 0.0)) throw DomainError("delay grid needs >= 2 points and a positive span");
  std::vector<double> grid(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) grid[static_cast<std::size_t>(i)] = max_delay * i / (points - 1);
  return grid;
}

std::pair<Vector, Vector> InterleavedResult::average(Eigen::Index first, Eigen::Index count) const {
  if (first < 0 || count < 1 || first + count > p1.rows()) throw InputError("average: pass range out of bounds");
  const auto block = p1.middleRows(first, count);
  const Vector mean = block.colwise().mean().transpose();
  Vector sem = Vector::Zero(mean.size());
  if (count > 1) {
    const Eigen::MatrixXd centered = block.rowwise() - mean.transpose();
    sem = (centered.colwise().squaredNorm().transpose() / static_cast<double>(count - 1) /
           static_cast<double>(count))
              .cwiseSqrt();
  }
  return {mean, sem};
}

double interleaved_duration(const RamseyConfig& rcfg, const LoopConfig& lcfg,
                            const InterleavedConfig& icfg) {
  const double estimation = rcfg.shots_per_estimate * rcfg.cycle_time + lcfg.idle_gap;
  double pass = 0.0;
  for (double t : icfg.tau_r_grid) pass += estimation + probe_slot(t, rcfg);
  return lcfg.warmup_updates * estimation + icfg.passes * pass;
}

InterleavedResult simulate_interleaved_ramsey(const NoiseModel& model, const RamseyConfig& rcfg,
                                              const LoopConfig& lcfg, const InterleavedConfig& icfg,
                                              std::uint64_t seed) {
  validate(lcfg, rcfg);
  validate(icfg);
  const double dt = rcfg.cycle_time / lcfg.samples_per_shot;
  const auto n = static_cast<Eigen::Index>(std::ceil(interleaved_duration(rcfg, lcfg, icfg) / dt)) + 1;
  const auto trace = synthesize_trace(model, n, dt, stream_seed(seed, 1));
  return simulate_interleaved_ramsey(trace, rcfg, lcfg, icfg, seed);
}

InterleavedResult simulate_interleaved_ramsey(const TimeTrace& intrinsic, const RamseyConfig& rcfg,
                                              const LoopConfig& lcfg, const InterleavedConfig& icfg,
                                              std::uint64_t seed) {
  validate(lcfg, rcfg);
  validate(icfg);
  if (intrinsic.duration() < interleaved_duration(rcfg, lcfg, icfg) * (1.0 - 1e-12))
    throw InputError("interleaved: noise trace is shorter than the experiment");

  // The probe is the extra step between updates, so the controller sees
  // exactly N estimation bits per update.
  LoopConfig loop = lcfg;
  loop.update_stride = 0;
  if (!icfg.feedback) loop.gain = 0.0;
  FeedbackController controller(rcfg, loop);

  const TraceIntegrator integ(intrinsic);
  Rng shot_rng(stream_seed(seed, 2));
  Rng probe_rng(stream_seed(seed, 3));
  const double window = lcfg.averaging == SampleAveraging::FreeEvolution ? rcfg.tau : rcfg.cycle_time;
  const int n_shots = rcfg.shots_per_estimate;
  const auto grid_size = static_cast<Eigen::Index>(icfg.tau_r_grid.size());

  InterleavedResult out;
  out.tau_r = icfg.tau_r_grid;
  out.p1.resize(icfg.passes, grid_size);

  std::vector<std::pair<double, double>> corrections;  // (time, applied) after each update
  double t = 0.0;
  std::uint8_t previous_raw = 0;

  const auto estimation_cycle = [&] {
    for (int i = 0; i < n_shots; ++i) {
      const double t0 = t + i * rcfg.cycle_time;
      const double delta = -(integ.mean(t0, t0 + window) + controller.applied());
      const std::uint8_t raw = (simulate_shot(delta, rcfg, shot_rng) ? 1 : 0) ^ previous_raw;
      previous_raw = raw;
      controller.push(raw);
    }
    t += n_shots * rcfg.cycle_time;
    if (icfg.record_residual) corrections.emplace_back(t, controller.applied());
    t += lcfg.idle_gap;
  };

  for (int w = 0; w < lcfg.warmup_updates; ++w) estimation_cycle();
  const double start = t;

  for (int pass = 0; pass < icfg.passes; ++pass) {
    for (Eigen::Index g = 0; g < grid_size; ++g) {
      estimation_cycle();
      const double tau_r = icfg.tau_r_grid[static_cast<std::size_t>(g)];
      const double phase =
          kTwoPi * (icfg.set_detuning * tau_r - integ.integral(t, t + tau_r) - controller.applied() * tau_r);
      const double contrast = rcfg.init_fidelity * (std::isinf(icfg.t1) ? 1.0 : std::exp(-tau_r / (2.0 * icfg.t1)));
      const double p1 = 0.5 + 0.5 * contrast * std::cos(phase);
      const std::uint8_t outcome = uniform01(probe_rng) < p1 ? 1 : 0;
      out.p1(pass, g) = icfg.readout == ProbeReadout::Expectation ? p1 : static_cast<double>(outcome);
      previous_raw ^= outcome;
      controller.pass_through(previous_raw);
      t += probe_slot(tau_r, rcfg);
    }
  }
  out.pass_duration = (t - start) / icfg.passes;
  out.saturations = controller.saturations();

  if (icfg.record_residual) {
    out.residual.sample_period = intrinsic.sample_period;
    out.residual.values = intrinsic.values;
    std::size_t next = 0;
    double applied = 0.0;
    for (Eigen::Index k = 0; k < intrinsic.size(); ++k) {
      const double tk = static_cast<double>(k) * intrinsic.sample_period;
      while (next < corrections.size() && corrections[next].first <= tk) applied = corrections[next++].second;
      out.residual.values[k] += applied;
    }
  }
  return out;
}

}  // namespace qfb
