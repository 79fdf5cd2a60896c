#pragma once

#include <Eigen/Dense>

#include <numbers>
#include <stdexcept>
#include <string>

namespace qfb {

using Vector = Eigen::VectorXd;

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Malformed input data (length mismatch, non-finite samples, ...).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A feedback loop or integral that does not converge.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Uniformly sampled real signal. Sample k covers [k*dt, (k+1)*dt).
struct TimeTrace {
  double sample_period = 1.0;
  Vector values;

  Eigen::Index size() const { return values.size(); }
  double duration() const { return sample_period * static_cast<double>(values.size()); }
};

void validate(const TimeTrace& trace);

}  // namespace qfb
