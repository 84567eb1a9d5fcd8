#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "fladle/core.hpp"
#include "fladle/fpca.hpp"
#include "fladle/smoothing.hpp"

namespace fladle {

enum class Criterion { AicYao, BicPace, AicLi, BicLi };

std::string to_string(Criterion c);

// Values of one order-selection criterion over k = 1..L.
struct CriterionTrace {
  Criterion name = Criterion::AicYao;
  std::vector<double> values;
  std::size_t k_hat = 0;  // 1-based
  // Per-k ingredients. `loss` is RSS_k for the residual criteria and the
  // tail-variance term for BIC_LI.
  std::vector<double> loss;
  std::vector<double> penalty;
  double sigma2 = 0.0;
};

struct ReconstructionFit {
  double loglik = 0.0;
  double rss = 0.0;
  std::size_t n_obs = 0;
};

// Gaussian pseudo log-likelihood of the k-component reconstruction
// Yhat = mu + sum xi_nu phi_nu with conditional-expectation scores.
ReconstructionFit reconstruction_fit(const FunctionalDataset& data, const MeanEstimate& mean, const EigenSystem& eig,
                                     double sigma2, std::size_t k);
double pseudo_loglik(const FunctionalDataset& data, const MeanEstimate& mean, const EigenSystem& eig, double sigma2,
                     std::size_t k);

CriterionTrace aic_yao(const FunctionalDataset& data, const MeanEstimate& mean, const EigenSystem& eig, double sigma2,
                       std::size_t L);
CriterionTrace bic_pace(const FunctionalDataset& data, const MeanEstimate& mean, const EigenSystem& eig, double sigma2,
                        std::size_t L);

// N log(RSS_k / N) + 2 n k. On sparse designs each component also carries
// the effective degrees of freedom of a smoothed eigenfunction, 1/h_G.
CriterionTrace aic_li(const FunctionalDataset& data, const MeanEstimate& mean, const EigenSystem& eig, double sigma2,
                      std::size_t L, bool dense, double h_g);

// log(sigma2 + sum_{k < nu <= L} lambda_nu) + k * (n + m)/(n m) * log(n m / (n + m)),
// with m the mean number of observations per subject.
CriterionTrace bic_li(const Eigen::VectorXd& eigenvalues, std::size_t L, std::size_t n, double sigma2,
                      double mean_obs);

std::size_t select_order_ic(const CriterionTrace& trace);

// Runs one criterion on a fitted model; `L` is clipped to the spectrum.
CriterionTrace run_criterion(Criterion c, const FunctionalDataset& data, const ComponentFit& fit, std::size_t L);

}  // namespace fladle
