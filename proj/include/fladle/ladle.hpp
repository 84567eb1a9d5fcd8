#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "fladle/core.hpp"
#include "fladle/fpca.hpp"

namespace fladle {

struct EstimationOptions {
  SmoothingOptions smoothing;
  double fve_threshold = 0.9999;
  std::size_t l_cap = 20;
  // When false the halves are smoothed with the bandwidths chosen on the
  // full data instead of running their own selection.
  bool reselect_half_bandwidths = true;
};

struct LadleMetadata {
  DesignPath design = DesignPath::Irregular;
  std::size_t grid_size = 0;
  Bandwidths full;
  Bandwidths first;
  Bandwidths second;
  double sigma2 = 0.0;
  std::size_t L_full = 0;   // from the FVE rule on the full data
  std::size_t L_first = 0;  // positive eigenvalues in each half
  std::size_t L_second = 0;
};

struct LadleResult {
  std::size_t L = 0;
  std::vector<double> f;
  std::vector<double> g;
  std::vector<double> h;
  std::size_t d_hat = 0;  // 1-based
  std::vector<double> fU_raw;
  std::uint64_t seed = 0;
  LadleMetadata metadata;
};

// delta * B1[:, :ell]^T B2[:, :ell].
Eigen::MatrixXd cross_gram(const Eigen::MatrixXd& B1, const Eigen::MatrixXd& B2, double delta, std::size_t ell);

// |det A| through partial-pivot LU, with the product of pivots taken in log space.
double abs_det(const Eigen::MatrixXd& A);

struct FCurve {
  std::vector<double> f;
  std::vector<double> fU_raw;
};

FCurve f_curve(const Eigen::MatrixXd& B1, const Eigen::MatrixXd& B2, double delta, std::size_t L);
std::vector<double> g_curve(const Eigen::VectorXd& eigenvalues, std::size_t L);

// 1-based index of the first minimum.
std::size_t argmin_first(const std::vector<double>& values);

LadleResult ladle_estimate(const FunctionalDataset& data, const EstimationOptions& options, std::uint64_t seed);

// Variant reusing a full-data fit that the caller already computed.
LadleResult ladle_estimate(const FunctionalDataset& data, const ComponentFit& full, const EstimationOptions& options,
                           std::uint64_t seed);

}  // namespace fladle
