#include "fladle/regression.hpp"

#include <cmath>
#include <string>

#include "fladle/error.hpp"

namespace fladle {

FpcRegressionFit fit_fpc_regression(const ScoreMatrix& scores, const Eigen::VectorXd& y, std::size_t d) {
  const Eigen::Index n = scores.scores.rows();
  const auto dd = static_cast<Eigen::Index>(d);
  if (n != y.size()) throw DimensionError("score rows and responses differ in length");
  if (dd > scores.scores.cols()) throw DimensionError("regression order exceeds the available scores");
  if (n < dd + 2) throw InsufficientDataError("regression needs at least d + 2 observations");

  Eigen::MatrixXd X(n, dd + 1);
  X.col(0).setOnes();
  X.rightCols(dd) = scores.scores.leftCols(dd);
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  if (qr.rank() < dd + 1) {
    // The pivots beyond the rank name the columns that add nothing new.
    std::string cols;
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index k = qr.rank(); k < perm.size(); ++k) {
      if (!cols.empty()) cols += ", ";
      cols += perm[k] == 0 ? std::string("intercept") : "score " + std::to_string(perm[k]);
    }
    throw CollinearityError("rank-deficient regression design; dependent columns: " + cols);
  }
  const Eigen::VectorXd beta = qr.solve(y);
  FpcRegressionFit fit;
  fit.intercept = beta[0];
  fit.coefficients = beta.tail(dd);
  fit.d_used = d;
  fit.train_rss = (y - X * beta).squaredNorm();
  return fit;
}

FpcRegressionFit fit_fpc_regression(const ScoreMatrix& scores, const Eigen::VectorXd& y, std::size_t d,
                                    const EigenSystem& eig) {
  if (d > eig.count()) throw DimensionError("regression order exceeds the available eigenfunctions");
  FpcRegressionFit fit = fit_fpc_regression(scores, y, d);
  fit.slope_on_grid = eig.eigenfunctions.leftCols(static_cast<Eigen::Index>(d)) * fit.coefficients;
  return fit;
}

Eigen::VectorXd predict(const FpcRegressionFit& fit, const ScoreMatrix& scores_test) {
  const auto d = static_cast<Eigen::Index>(fit.d_used);
  if (scores_test.scores.cols() < d) throw DimensionError("test scores have fewer columns than the fit");
  Eigen::VectorXd out = scores_test.scores.leftCols(d) * fit.coefficients;
  out.array() += fit.intercept;
  return out;
}

double prediction_error(const Eigen::VectorXd& y, const Eigen::VectorXd& y_hat) {
  if (y.size() != y_hat.size()) throw DimensionError("responses and predictions differ in length");
  if (y.size() == 0) throw InsufficientDataError("prediction error of an empty test set");
  return (y - y_hat).squaredNorm() / static_cast<double>(y.size());
}

}  // namespace fladle
