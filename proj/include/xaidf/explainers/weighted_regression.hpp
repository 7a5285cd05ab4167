#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>

#include "xaidf/error.hpp"

namespace xaidf {

inline constexpr double kConditionWarning = 1e8;
inline constexpr double kConditionLimit = 1e14;

struct RegressionFit {
  Eigen::VectorXd coefficients;
  double intercept = 0.0;
  double condition = 1.0;  // 2-norm condition of the regularized normal matrix

  bool ill_conditioned() const noexcept { return condition > kConditionWarning; }
};

/// Minimizes sum_i w_i (y_i - b - x_i . beta)^2 + lambda |beta|^2 with an
/// unpenalized intercept b (when `fit_intercept`), via LDLT on the normal
/// equations of the weighted-centred data.
inline RegressionFit weighted_ridge(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                                    double lambda, bool fit_intercept) {
  if (x.rows() != y.size() || x.rows() != w.size()) throw InvalidArgument("regression inputs disagree in length");
  if (x.rows() == 0 || x.cols() == 0) throw InvalidArgument("regression needs samples and features");
  if (lambda < 0.0) throw InvalidArgument("ridge penalty must be non-negative");
  const double w_sum = w.sum();
  if (!(w_sum > 0.0)) throw InvalidArgument("regression weights must have a positive sum");

  Eigen::RowVectorXd x_mean = Eigen::RowVectorXd::Zero(x.cols());
  double y_mean = 0.0;
  if (fit_intercept) {
    x_mean = (w.transpose() * x) / w_sum;
    y_mean = w.dot(y) / w_sum;
  }
  const Eigen::MatrixXd xc = x.rowwise() - x_mean;
  const Eigen::VectorXd yc = y.array() - y_mean;

  Eigen::MatrixXd normal = xc.transpose() * w.asDiagonal() * xc;
  normal.diagonal().array() += lambda;
  const Eigen::VectorXd rhs = xc.transpose() * (w.asDiagonal() * yc);

  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(normal, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  const double condition = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  if (!(condition <= kConditionLimit)) throw NumericalError("regression system is singular", condition);

  RegressionFit fit;
  fit.coefficients = normal.ldlt().solve(rhs);
  if (!fit.coefficients.allFinite()) throw NumericalError("regression solve produced non-finite values", condition);
  fit.intercept = y_mean - x_mean.dot(fit.coefficients);
  fit.condition = condition;
  return fit;
}

}  // namespace xaidf
