#pragma once

#include "qfb/common.hpp"
#include "qfb/loop.hpp"
#include "qfb/physics.hpp"
#include "qfb/ramsey.hpp"

#include <array>
#include <complex>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <utility>
#include <vector>

namespace qfb {

using Matrix2c = Eigen::Matrix2cd;
/// Pauli transfer matrix acting on (1, x, y, z).
using Ptm = Eigen::Matrix4d;

/// Single-qubit Clifford group modulo global phase.
struct CliffordGroup {
  std::vector<Matrix2c> elements;  // elements[0] is the identity
  std::vector<Ptm> transfer;       // Pauli transfer matrices
  std::vector<std::array<int, 24>> product;  // index of elements[a] * elements[b]
  std::vector<int> inverse;

  int size() const { return static_cast<int>(elements.size()); }
  /// Index of `u` up to global phase, or -1.
  int find(const Matrix2c& u, double tol = 1e-9) const;
};

/// Built once, from H and S.
const CliffordGroup& clifford_group();

/// Pauli transfer matrix of a unitary.
Ptm unitary_ptm(const Matrix2c& u);

struct RBConfig {
  std::vector<int> sequence_lengths{1, 50, 100, 200, 300, 500, 700, 1000};
  int n_randomizations = 50;
  /// When > 0, randomization r replays the sequences of randomization
  /// r % sequence_pool, so repeated experiments reuse one sequence set.
  int sequence_pool = 0;
  /// Repetitions of each sequence; each is one slot in time with its own detuning.
  int shots_per_sequence = 50;
  double gate_time = 40e-9;
  double t1 = 30e-6;  // infinity disables relaxation
  double t_phi1 = std::numeric_limits<double>::infinity();  // exponential dephasing
  double t_phi2 = std::numeric_limits<double>::infinity();  // Gaussian dephasing
  bool feedback_on = false;
  /// Per-gate depolarizing probability.
  double depolarizing = 0.0;
  /// Constant detuning added to the noise, Hz.
  double static_detuning = 0.0;
  int bootstrap_samples = 200;
};

void validate(const RBConfig& cfg);

/// Noise channel applied after every Clifford: z rotation by 2 pi detuning
/// gate_time, amplitude damping, dephasing, depolarizing.
Ptm gate_noise_ptm(const RBConfig& cfg, double detuning);

struct RBFit {
  double a = 0.0;
  double r = 1.0;
  double b = 0.0;
  double error_per_gate = 0.0;  // (1 - r) / 2
  double residual = 0.0;        // rms
  bool converged = false;
};

/// Least squares p(m) = A r^m + B on per-length means.
RBFit fit_rb_decay(const std::vector<int>& lengths, const Vector& mean_survival);

struct RBSummary {
  RBFit fit;
  double ci_low = 0.0;   // 16th percentile of the bootstrap errors
  double ci_high = 0.0;  // 84th percentile
  int failed_resamples = 0;
};

/// Fit of the randomization mean plus a 68% interval from resampling
/// randomizations (rows of `survival`) with replacement.
RBSummary fit_rb(const std::vector<int>& lengths, const Eigen::MatrixXd& survival, int bootstrap_samples,
                 std::uint64_t seed);

struct RBResult {
  std::vector<int> sequence_lengths;
  Eigen::MatrixXd survival;  // randomizations x lengths, ground-state probability
  RBSummary summary;
  int saturations = 0;

  double fitted_error_per_gate() const { return summary.fit.error_per_gate; }
  std::pair<double, double> confidence_68() const { return {summary.ci_low, summary.ci_high}; }
};

/// Duration of one slot: N estimation shots, one readout cycle, and the
/// longest sequence.
double rb_slot_duration(const RBConfig& cfg, const RamseyConfig& rcfg);

/// Monte Carlo RB. Time is divided into equal slots, one per sequence
/// repetition, ordered randomization-major. The intrinsic detuning of a slot
/// is one sample of a trace synthesized at the slot period plus an independent
/// draw carrying the model power between the slot Nyquist frequency and
/// 1/(2 cycle_time). With feedback the loop updates once per slot from N
/// estimation shots taken just before the sequence. The detuning is constant
/// within a sequence. Survival is evaluated as an expectation value.
RBResult simulate_rb(const RBConfig& cfg, const NoiseModel& model, const RamseyConfig& rcfg,
                     const LoopConfig& lcfg, std::uint64_t seed);

/// A long run cut into consecutive repetitions of `randomizations_per_repetition`
/// rows, each fitted on its own.
struct RBRepetitionStudy {
  std::vector<RBSummary> repetitions;
  double spread_low = 0.0;   // 16th percentile of the fitted errors
  double spread_high = 0.0;  // 84th percentile
  double median_ci_width = 0.0;
  int failed_fits = 0;

  double spread() const { return spread_high - spread_low; }
};

/// Repetition i is bootstrapped with derive_seed(seed, i).
RBRepetitionStudy rb_repetitions(const RBResult& result, int randomizations_per_repetition, int bootstrap_samples,
                                 std::uint64_t seed);

/// Per-gate error t/(3 T1) + t/(3 T_phi1) + (t/T_phi2)^2 / 3. Infinite times
/// contribute nothing.
double coherence_limit(double gate_time, double t1, double t_phi1, double t_phi2);

void write_csv(std::ostream& out, const RBResult& result);
void write_summary(std::ostream& out, const RBSummary& summary);

}  // namespace qfb
