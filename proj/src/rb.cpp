#include "qfb/rb.hpp"

#include "least_squares.hpp"
#include "qfb/csv.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <ostream>

namespace qfb {

namespace {

using cd = std::complex<double>;

std::array<Matrix2c, 4> paulis() {
  Matrix2c i = Matrix2c::Identity();
  Matrix2c x, y, z;
  x << 0, 1, 1, 0;
  y << 0, cd(0, -1), cd(0, 1), 0;
  z << 1, 0, 0, -1;
  return {i, x, y, z};
}

/// Global phase fixed so that the first entry of magnitude > tol is real positive.
Matrix2c canonical(const Matrix2c& u, double tol) {
  for (Eigen::Index k = 0; k < 4; ++k) {
    const cd v = u(k % 2, k / 2);
    if (std::abs(v) > tol) return u * (std::abs(v) / v);
  }
  return u;
}

CliffordGroup build_group() {
  CliffordGroup g;
  const double s = 1.0 / std::sqrt(2.0);
  Matrix2c h, p;
  h << s, s, s, -s;
  p << 1, 0, 0, cd(0, 1);

  std::deque<Matrix2c> queue{Matrix2c::Identity()};
  g.elements.push_back(Matrix2c::Identity());
  while (!queue.empty()) {
    const Matrix2c u = queue.front();
    queue.pop_front();
    for (const Matrix2c& gen : {h, p}) {
      const Matrix2c v = canonical(gen * u, 1e-9);
      if (g.find(v) < 0) {
        g.elements.push_back(v);
        queue.push_back(v);
      }
    }
  }
  const int n = g.size();
  g.product.assign(static_cast<std::size_t>(n), {});
  g.inverse.assign(static_cast<std::size_t>(n), -1);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      const int c = g.find(g.elements[static_cast<std::size_t>(a)] * g.elements[static_cast<std::size_t>(b)]);
      g.product[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = c;
      if (c == 0) g.inverse[static_cast<std::size_t>(a)] = b;
    }
  }
  for (const auto& u : g.elements) g.transfer.push_back(unitary_ptm(u));
  return g;
}

double percentile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

int CliffordGroup::find(const Matrix2c& u, double tol) const {
  const Matrix2c c = canonical(u, tol);
  for (std::size_t i = 0; i < elements.size(); ++i)
    if ((elements[i] - c).cwiseAbs().maxCoeff() < tol) return static_cast<int>(i);
  return -1;
}

const CliffordGroup& clifford_group() {
  static const CliffordGroup group = build_group();
  return group;
}

Ptm unitary_ptm(const Matrix2c& u) {
  const auto sigma = paulis();
  Ptm r;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      r(i, j) = 0.5 * (sigma[static_cast<std::size_t>(i)] * u * sigma[static_cast<std::size_t>(j)] * u.adjoint())
                          .trace()
                          .real();
  return r;
}

void validate(const RBConfig& cfg) {
  if (cfg.sequence_lengths.size() < 3) throw DomainError("rb: need at least 3 sequence lengths");
  for (std::size_t i = 0; i < cfg.sequence_lengths.size(); ++i) {
    if (cfg.sequence_lengths[i] < 0) throw DomainError("rb: sequence lengths must be >= 0");
    if (i > 0 && cfg.sequence_lengths[i] <= cfg.sequence_lengths[i - 1])
      throw DomainError("rb: sequence lengths must increase");
  }
  if (cfg.n_randomizations < 1) throw DomainError("rb: n_randomizations must be >= 1");
  if (cfg.sequence_pool < 0) throw DomainError("rb: sequence_pool must be >= 0");
  if (cfg.shots_per_sequence < 1) throw DomainError("rb: shots_per_sequence must be >= 1");
  if (!(cfg.gate_time > 0.0) || !std::isfinite(cfg.gate_time)) throw DomainError("rb: gate_time must be positive");
  if (!(cfg.t1 > 0.0) || !(cfg.t_phi1 > 0.0) || !(cfg.t_phi2 > 0.0))
    throw DomainError("rb: t1, t_phi1 and t_phi2 must be positive");
  if (!(cfg.depolarizing >= 0.0 && cfg.depolarizing <= 1.0)) throw DomainError("rb: depolarizing must lie in [0, 1]");
  if (!std::isfinite(cfg.static_detuning)) throw DomainError("rb: static detuning must be finite");
  if (cfg.bootstrap_samples < 0) throw DomainError("rb: bootstrap_samples must be >= 0");
}

Ptm gate_noise_ptm(const RBConfig& cfg, double detuning) {
  const double t = cfg.gate_time;
  const double theta = kTwoPi * detuning * t;
  const double gamma = std::isinf(cfg.t1) ? 0.0 : -std::expm1(-t / cfg.t1);
  double coherence = std::sqrt(1.0 - gamma);
  if (!std::isinf(cfg.t_phi1)) coherence *= std::exp(-t / cfg.t_phi1);
  if (!std::isinf(cfg.t_phi2)) coherence *= std::exp(-(t / cfg.t_phi2) * (t / cfg.t_phi2));
  const double keep = 1.0 - cfg.depolarizing;

  Ptm rot = Ptm::Identity();
  rot(1, 1) = std::cos(theta);
  rot(1, 2) = -std::sin(theta);
  rot(2, 1) = std::sin(theta);
  rot(2, 2) = std::cos(theta);

  Ptm decay = Ptm::Identity();
  decay(1, 1) = decay(2, 2) = coherence * keep;
  decay(3, 3) = (1.0 - gamma) * keep;
  decay(3, 0) = gamma * keep;  // relaxation toward the ground state z = +1
  return decay * rot;
}

RBFit fit_rb_decay(const std::vector<int>& lengths, const Vector& mean_survival) {
  const auto m = static_cast<Eigen::Index>(lengths.size());
  if (m < 3 || mean_survival.size() != m) throw InputError("fit_rb: need >= 3 lengths with one mean each");
  const auto residual = [&](const Vector& x, Vector& r) {
    for (Eigen::Index i = 0; i < m; ++i)
      r[i] = x[0] * std::pow(x[1], lengths[static_cast<std::size_t>(i)]) + x[2] - mean_survival[i];
  };
  const auto jacobian = [&](const Vector& x, Eigen::MatrixXd& J) {
    for (Eigen::Index i = 0; i < m; ++i) {
      const double k = lengths[static_cast<std::size_t>(i)];
      const double rk = std::pow(x[1], k);
      J(i, 0) = rk;
      J(i, 1) = k > 0 ? x[0] * k * std::pow(x[1], k - 1.0) : 0.0;
      J(i, 2) = 1.0;
    }
  };

  const double first = mean_survival[0];
  const double last = mean_survival[m - 1];
  const double span = lengths.back() - lengths.front();
  RBFit best;
  double best_ssq = std::numeric_limits<double>::infinity();
  for (double b0 : {0.5, std::min(last, first) - 0.05, 0.0}) {
    const double a0 = first - b0;
    const double ratio = (last - b0) / a0;
    const double r0 = ratio > 0.0 && ratio < 1.0 && span > 0 ? std::pow(ratio, 1.0 / span) : 0.999;
    Vector x(3);
    x << a0 / std::pow(r0, lengths.front()), r0, b0;
    const auto out = detail::least_squares(x, static_cast<int>(m), residual, jacobian);
    if (!out.converged || out.ssq >= best_ssq || !(out.x[1] > 0.0)) continue;
    best_ssq = out.ssq;
    best.a = out.x[0];
    best.r = out.x[1];
    best.b = out.x[2];
    best.converged = true;
  }
  if (best.converged) {
    best.error_per_gate = (1.0 - best.r) / 2.0;
    best.residual = std::sqrt(best_ssq / static_cast<double>(m));
  }
  return best;
}

RBSummary fit_rb(const std::vector<int>& lengths, const Eigen::MatrixXd& survival, int bootstrap_samples,
                 std::uint64_t seed) {
  if (survival.cols() != static_cast<Eigen::Index>(lengths.size()) || survival.rows() < 1)
    throw InputError("fit_rb: survival must be randomizations x lengths");
  RBSummary out;
  out.fit = fit_rb_decay(lengths, survival.colwise().mean().transpose());
  out.ci_low = out.ci_high = out.fit.error_per_gate;
  if (bootstrap_samples == 0 || !out.fit.converged) return out;

  Rng rng(stream_seed(seed, 4));
  std::uniform_int_distribution<Eigen::Index> pick(0, survival.rows() - 1);
  std::vector<double> errors;
  errors.reserve(static_cast<std::size_t>(bootstrap_samples));
  Vector mean(survival.cols());
  for (int b = 0; b < bootstrap_samples; ++b) {
    mean.setZero();
    for (Eigen::Index r = 0; r < survival.rows(); ++r) mean += survival.row(pick(rng)).transpose();
    mean /= static_cast<double>(survival.rows());
    const auto fit = fit_rb_decay(lengths, mean);
    if (fit.converged)
      errors.push_back(fit.error_per_gate);
    else
      ++out.failed_resamples;
  }
  if (!errors.empty()) {
    out.ci_low = percentile(errors, 0.16);
    out.ci_high = percentile(errors, 0.84);
  }
  return out;
}

double rb_slot_duration(const RBConfig& cfg, const RamseyConfig& rcfg) {
  return rcfg.estimate_period() + rcfg.cycle_time + cfg.sequence_lengths.back() * cfg.gate_time;
}

RBResult simulate_rb(const RBConfig& cfg, const NoiseModel& model, const RamseyConfig& rcfg,
                     const LoopConfig& lcfg, std::uint64_t seed) {
  validate(cfg);
  validate(model);
  LoopConfig loop = lcfg;
  loop.update_stride = 0;
  if (!cfg.feedback_on) loop.gain = 0.0;
  validate(loop, rcfg);

  const auto& group = clifford_group();
  const auto n_lengths = static_cast<Eigen::Index>(cfg.sequence_lengths.size());
  const Eigen::Index slots = static_cast<Eigen::Index>(cfg.n_randomizations) * n_lengths * cfg.shots_per_sequence;
  const double slot = rb_slot_duration(cfg, rcfg);

  const auto intrinsic = synthesize_trace(model, std::max<Eigen::Index>(slots, 2), slot, stream_seed(seed, 1));
  const double slot_nyquist = 0.5 / slot;
  const double fast_top = 0.5 / rcfg.cycle_time;
  const double fast_sigma = fast_top > slot_nyquist ? std::sqrt(band_power(model, slot_nyquist, fast_top)) : 0.0;

  Rng shot_rng(stream_seed(seed, 2));
  Rng fast_rng(stream_seed(seed, 3));
  Rng sequence_rng(stream_seed(seed, 5));
  std::normal_distribution<double> fast(0.0, 1.0);
  std::uniform_int_distribution<int> draw(0, group.size() - 1);
  FeedbackController controller(rcfg, loop);
  std::uint8_t previous_raw = 0;

  RBResult out;
  out.sequence_lengths = cfg.sequence_lengths;
  out.survival = Eigen::MatrixXd::Zero(cfg.n_randomizations, n_lengths);

  // Sequences are drawn in (randomization, length) order; a pool replays
  // its first draws.
  const auto pool = cfg.sequence_pool > 0 ? std::min(cfg.sequence_pool, cfg.n_randomizations) : cfg.n_randomizations;
  std::vector<std::vector<int>> drawn;
  drawn.reserve(static_cast<std::size_t>(pool) * static_cast<std::size_t>(n_lengths));
  for (int r = 0; r < pool; ++r) {
    for (int m : cfg.sequence_lengths) {
      std::vector<int> seq(static_cast<std::size_t>(m) + 1);
      int total = 0;
      for (int g = 0; g < m; ++g) {
        const int c = draw(sequence_rng);
        seq[static_cast<std::size_t>(g)] = c;
        total = group.product[static_cast<std::size_t>(c)][static_cast<std::size_t>(total)];
      }
      seq[static_cast<std::size_t>(m)] = group.inverse[static_cast<std::size_t>(total)];
      drawn.push_back(std::move(seq));
    }
  }

  Eigen::Index k = 0;
  for (int r = 0; r < cfg.n_randomizations; ++r) {
    for (Eigen::Index li = 0; li < n_lengths; ++li) {
      const auto& sequence = drawn[static_cast<std::size_t>((r % pool) * n_lengths + li)];
      double sum = 0.0;
      for (int s = 0; s < cfg.shots_per_sequence; ++s, ++k) {
        const double f_slow = intrinsic.values[k];
        if (cfg.feedback_on) {
          for (int i = 0; i < rcfg.shots_per_estimate; ++i) {
            const double delta = -(f_slow + controller.applied());
            const std::uint8_t raw = (simulate_shot(delta, rcfg, shot_rng) ? 1 : 0) ^ previous_raw;
            previous_raw = raw;
            controller.push(raw);
          }
        }
        const double detuning = cfg.static_detuning - (f_slow + fast_sigma * fast(fast_rng) + controller.applied());
        const Ptm noise = gate_noise_ptm(cfg, detuning);
        Eigen::Vector4d v(1.0, 0.0, 0.0, 1.0);
        for (int c : sequence) v = noise * (group.transfer[static_cast<std::size_t>(c)] * v);
        sum += 0.5 * (1.0 + v[3]);
      }
      out.survival(r, li) = sum / cfg.shots_per_sequence;
    }
  }
  out.saturations = controller.saturations();
  out.summary = fit_rb(cfg.sequence_lengths, out.survival, cfg.bootstrap_samples, seed);
  return out;
}

RBRepetitionStudy rb_repetitions(const RBResult& result, int randomizations_per_repetition, int bootstrap_samples,
                                 std::uint64_t seed) {
  if (randomizations_per_repetition < 1 || result.survival.rows() < randomizations_per_repetition)
    throw InputError("rb_repetitions: need at least one full repetition");
  const Eigen::Index count = result.survival.rows() / randomizations_per_repetition;
  RBRepetitionStudy out;
  std::vector<double> errors, widths;
  for (Eigen::Index i = 0; i < count; ++i) {
    const Eigen::MatrixXd rows = result.survival.middleRows(i * randomizations_per_repetition, randomizations_per_repetition);
    auto summary = fit_rb(result.sequence_lengths, rows, bootstrap_samples, derive_seed(seed, static_cast<std::uint64_t>(i)));
    if (summary.fit.converged) {
      errors.push_back(summary.fit.error_per_gate);
      widths.push_back(summary.ci_high - summary.ci_low);
    } else {
      ++out.failed_fits;
    }
    out.repetitions.push_back(std::move(summary));
  }
  if (!errors.empty()) {
    out.spread_low = percentile(errors, 0.16);
    out.spread_high = percentile(errors, 0.84);
    out.median_ci_width = percentile(widths, 0.5);
  }
  return out;
}

double coherence_limit(double gate_time, double t1, double t_phi1, double t_phi2) {
  if (!(gate_time > 0.0) || !(t1 > 0.0) || !(t_phi1 > 0.0) || !(t_phi2 > 0.0))
    throw DomainError("coherence_limit: times must be positive");
  double e = 0.0;
  if (!std::isinf(t1)) e += gate_time / (3.0 * t1);
  if (!std::isinf(t_phi1)) e += gate_time / (3.0 * t_phi1);
  if (!std::isinf(t_phi2)) e += (gate_time / t_phi2) * (gate_time / t_phi2) / 3.0;
  return e;
}

void write_csv(std::ostream& out, const RBResult& result) {
  csv::header(out, {"m", "randomization_id", "survival"});
  for (Eigen::Index li = 0; li < result.survival.cols(); ++li)
    for (Eigen::Index r = 0; r < result.survival.rows(); ++r)
      csv::row(out, result.sequence_lengths[static_cast<std::size_t>(li)], static_cast<long long>(r),
               result.survival(r, li));
}

void write_summary(std::ostream& out, const RBSummary& summary) {
  out << "error=" << csv::number(summary.fit.error_per_gate) << '\n'
      << "ci_low=" << csv::number(summary.ci_low) << '\n'
      << "ci_high=" << csv::number(summary.ci_high) << '\n'
      << "r=" << csv::number(summary.fit.r) << '\n'
      << "a=" << csv::number(summary.fit.a) << '\n'
      << "b=" << csv::number(summary.fit.b) << '\n'
      << "converged=" << (summary.fit.converged ? "true" : "false") << '\n';
}

}  // namespace qfb
