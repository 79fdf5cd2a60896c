#pragma once

#include "qfb/common.hpp"

#include <unsupported/Eigen/LevenbergMarquardt>

#include <utility>

namespace qfb::detail {

struct LsqOutcome {
  Vector x;
  double ssq = 0.0;
  bool converged = false;
};

template <typename Residual, typename Jacobian>
struct LsqFunctor : Eigen::DenseFunctor<double> {
  LsqFunctor(int n, int m, Residual r, Jacobian j)
      : Eigen::DenseFunctor<double>(n, m), residual(std::move(r)), jacobian(std::move(j)) {}

  int operator()(const Vector& x, Vector& fvec) const {
    residual(x, fvec);
    return 0;
  }
  int df(const Vector& x, Eigen::MatrixXd& fjac) const {
    jacobian(x, fjac);
    return 0;
  }

  Residual residual;
  Jacobian jacobian;
};

/// Levenberg-Marquardt with an analytic Jacobian. `residual(x, r)` fills m
/// residuals, `jacobian(x, J)` their m x n derivatives.
template <typename Residual, typename Jacobian>
LsqOutcome least_squares(Vector x0, int m, Residual residual, Jacobian jacobian, int max_evaluations = 4000) {
  LsqFunctor<Residual, Jacobian> functor(static_cast<int>(x0.size()), m, std::move(residual),
                                         std::move(jacobian));
  Eigen::LevenbergMarquardt<decltype(functor)> lm(functor);
  lm.setMaxfev(max_evaluations);
  lm.setXtol(1e-12);
  lm.setFtol(1e-12);
  const auto status = lm.minimize(x0);
  LsqOutcome out;
  Vector r(m);
  functor(x0, r);
  out.x = std::move(x0);
  out.ssq = r.squaredNorm();
  out.converged = status != Eigen::LevenbergMarquardtSpace::ImproperInputParameters &&
                  status != Eigen::LevenbergMarquardtSpace::TooManyFunctionEvaluation &&
                  out.x.allFinite() && std::isfinite(out.ssq);
  return out;
}

}  // namespace qfb::detail
