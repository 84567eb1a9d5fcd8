#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "fladle/fpca.hpp"

namespace fladle {

struct FpcRegressionFit {
  double intercept = 0.0;
  Eigen::VectorXd coefficients;  // beta_1..beta_d
  Eigen::VectorXd slope_on_grid;  // sum_nu beta_nu phi_nu(t_i); empty without an eigensystem
  std::size_t d_used = 0;
  double train_rss = 0.0;
};

// OLS of y on [1, xi_1..xi_d] by column-pivoted QR.
FpcRegressionFit fit_fpc_regression(const ScoreMatrix& scores, const Eigen::VectorXd& y, std::size_t d);
// Same, and reconstructs the slope function on the eigensystem's grid.
FpcRegressionFit fit_fpc_regression(const ScoreMatrix& scores, const Eigen::VectorXd& y, std::size_t d,
                                    const EigenSystem& eig);

Eigen::VectorXd predict(const FpcRegressionFit& fit, const ScoreMatrix& scores_test);

double prediction_error(const Eigen::VectorXd& y, const Eigen::VectorXd& y_hat);

}  // namespace fladle
