#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "fladle/core.hpp"

namespace fladle {

// Epanechnikov kernel 0.75 (1 - u^2)_+.
inline double epanechnikov(double u) { return (u > -1.0 && u < 1.0) ? 0.75 * (1.0 - u * u) : 0.0; }

struct MeanEstimate {
  EvaluationGrid grid;
  Eigen::VectorXd values;
  // Zero for the sample-mean (dense regular) path.
  double bandwidth = 0.0;

  double at(double t) const { return interpolate(grid, values, t); }
};

struct CovEstimate {
  EvaluationGrid grid;
  Eigen::MatrixXd matrix;
  double bandwidth = 0.0;
  std::optional<double> noise_variance;
};

// One off-diagonal raw covariance {Y_ij - mu(T_ij)}{Y_il - mu(T_il)}.
struct RawCovPair {
  double s;
  double t;
  double r;
  std::size_t subject = 0;  // index of the contributing subject
};

// Local linear mean smoother pooled over all subjects.
MeanEstimate local_linear_mean(const FunctionalDataset& data, double h, const EvaluationGrid& grid);

// GCV(h) = RSS / (1 - tr(S_h)/N)^2 evaluated exactly at the observation points.
struct GcvPoint {
  double bandwidth;
  double score;  // +inf when the candidate was inadmissible
  bool admissible;
};

double gcv_bandwidth_mean(const FunctionalDataset& data, const std::vector<double>& candidates,
                          const EvaluationGrid& grid, std::vector<GcvPoint>* trace = nullptr);

std::vector<RawCovPair> raw_cov_pairs(const FunctionalDataset& data, const MeanEstimate& mean);

// Bivariate local linear smoother with product Epanechnikov kernel, one
// bandwidth for both axes. The result is symmetrized as (M + M^T)/2.
CovEstimate local_linear_cov(const std::vector<RawCovPair>& pairs, double h, const EvaluationGrid& grid);

// GCV for the surface smoother. Residuals and hat-matrix leverages are
// computed from pair statistics binned onto a mesh refining the evaluation
// grid (spacing <= 0.005), which keeps the cost independent of the number of
// raw pairs.
double gcv_bandwidth_cov(const std::vector<RawCovPair>& pairs, const std::vector<double>& candidates,
                         const EvaluationGrid& grid, std::vector<GcvPoint>* trace = nullptr);

// K-fold cross-validation over subjects: subjects are assigned to folds by
// index modulo `folds`, and every held-out raw covariance is predicted by the
// surface fitted without its subject's fold. Raw covariances of one subject
// share that subject's scores, so leaving whole subjects out keeps the error
// estimate honest where pair-level GCV would chase the within-subject
// correlation and undersmooth. Binned on a mesh of spacing <= 0.01.
double cv_bandwidth_cov(const std::vector<RawCovPair>& pairs, const std::vector<double>& candidates,
                        const EvaluationGrid& grid, std::size_t folds = 5, std::vector<GcvPoint>* trace = nullptr);
std::vector<double> cv_scores_cov(const std::vector<RawCovPair>& pairs, const std::vector<double>& candidates,
                                  const EvaluationGrid& grid, std::size_t folds);
double cv_score_cov(const std::vector<RawCovPair>& pairs, double h, const EvaluationGrid& grid, std::size_t folds);

// Exact (unbinned) GCV score for one surface bandwidth. Quadratic in the pair
// count; used as a reference in tests.
double gcv_score_cov_exact(const std::vector<RawCovPair>& pairs, double h);
double gcv_score_mean(const FunctionalDataset& data, double h, const EvaluationGrid& grid);

// `count` log-spaced values from 1.5 * (largest gap between sorted pooled
// times) up to 0.5.
std::vector<double> candidate_bandwidths(const FunctionalDataset& data, std::size_t count = 10);

// n^{-1/5} / 6, the fixed surface bandwidth for dense irregular designs.
double fixed_cov_bandwidth(std::size_t n);

// Dense regular path: sample mean, raw covariance minus noise on the diagonal,
// and the first-difference noise variance estimator.
MeanEstimate dense_regular_mean(const FunctionalDataset& data);
double rice_sigma2(const FunctionalDataset& data);
CovEstimate dense_regular_cov(const FunctionalDataset& data, const MeanEstimate& mean, double sigma2);

// Noise variance on the irregular path: average over grid points in
// [0.25, 0.75] of the smoothed diagonal raw variance minus Ghat(t,t),
// clamped below at 1e-6.
double irregular_sigma2(const FunctionalDataset& data, const MeanEstimate& mean, const CovEstimate& cov);

// True when every subject shares one time vector forming a uniform grid on [0,1].
bool is_dense_regular(const FunctionalDataset& data);

}  // namespace fladle
