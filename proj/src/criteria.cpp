#include "fladle/criteria.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fladle/error.hpp"

namespace fladle {

namespace {

constexpr double kSigma2Floor = 1e-6;

void finish(CriterionTrace& t) {
  t.k_hat = 0;
  for (std::size_t k = 0; k < t.values.size(); ++k) {
    if (t.k_hat == 0 || t.values[k] < t.values[t.k_hat - 1]) t.k_hat = k + 1;
  }
}

void check_L(const EigenSystem& eig, std::size_t L) {
  if (L == 0) throw DimensionError("criterion needs L >= 1");
  if (L > eig.count()) throw DimensionError("criterion order exceeds the available eigenpairs");
}

}  // namespace

std::string to_string(Criterion c) {
  switch (c) {
    case Criterion::AicYao:
      return "AIC_YAO";
    case Criterion::BicPace:
      return "BIC_PACE";
    case Criterion::AicLi:
      return "AIC_LI";
    case Criterion::BicLi:
      return "BIC_LI";
  }
  return "";
}

ReconstructionFit reconstruction_fit(const FunctionalDataset& data, const MeanEstimate& mean, const EigenSystem& eig,
                                     double sigma2, std::size_t k) {
  if (!(sigma2 > 0.0)) throw NumericalError("pseudo-likelihood needs a positive noise variance");
  const ScoreMatrix xi = scores_pace(data, mean, eig, sigma2, k);
  ReconstructionFit out;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& s = data[i];
    for (std::size_t j = 0; j < s.size(); ++j) {
      double yhat = mean.at(s.times[j]);
      for (std::size_t nu = 0; nu < k; ++nu) {
        yhat += xi.scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(nu)) * eig.eval(nu, s.times[j]);
      }
      const double r = s.values[j] - yhat;
      out.rss += r * r;
    }
    out.n_obs += s.size();
  }
  out.loglik = -0.5 * (static_cast<double>(out.n_obs) * std::log(2.0 * std::numbers::pi * sigma2) + out.rss / sigma2);
  return out;
}

double pseudo_loglik(const FunctionalDataset& data, const MeanEstimate& mean, const EigenSystem& eig, double sigma2,
                     std::size_t k) {
  return reconstruction_fit(data, mean, eig, sigma2, k).loglik;
}

namespace {

template <class Penalty>
CriterionTrace likelihood_trace(Criterion name, const FunctionalDataset& data, const MeanEstimate& mean,
                                const EigenSystem& eig, double sigma2, std::size_t L, Penalty penalty) {
  check_L(eig, L);
  CriterionTrace t;
  t.name = name;
  t.sigma2 = sigma2;
  for (std::size_t k = 1; k <= L; ++k) {
    const ReconstructionFit fit = reconstruction_fit(data, mean, eig, sigma2, k);
    const double pen = penalty(k, fit);
    t.loss.push_back(fit.rss);
    t.penalty.push_back(pen);
    t.values.push_back(-2.0 * fit.loglik + pen);
  }
  finish(t);
  return t;
}

}  // namespace

CriterionTrace aic_yao(const FunctionalDataset& data, const MeanEstimate& mean, const EigenSystem& eig, double sigma2,
                       std::size_t L) {
  return likelihood_trace(Criterion::AicYao, data, mean, eig, sigma2, L,
                          [](std::size_t k, const ReconstructionFit&) { return 2.0 * static_cast<double>(k); });
}

CriterionTrace bic_pace(const FunctionalDataset& data, const MeanEstimate& mean, const EigenSystem& eig, double sigma2,
                        std::size_t L) {
  return likelihood_trace(Criterion::BicPace, data, mean, eig, sigma2, L, [](std::size_t k, const ReconstructionFit& f) {
    return static_cast<double>(k) * std::log(static_cast<double>(f.n_obs));
  });
}

CriterionTrace aic_li(const FunctionalDataset& data, const MeanEstimate& mean, const EigenSystem& eig, double sigma2,
                      std::size_t L, bool dense, double h_g) {
  check_L(eig, L);
  if (!dense && !(h_g > 0.0)) throw DimensionError("sparse AIC_LI needs the surface bandwidth");
  CriterionTrace t;
  t.name = Criterion::AicLi;
  t.sigma2 = sigma2;
  const double n = static_cast<double>(data.size());
  for (std::size_t k = 1; k <= L; ++k) {
    const ReconstructionFit fit = reconstruction_fit(data, mean, eig, sigma2, k);
    const double N = static_cast<double>(fit.n_obs);
    const double kk = static_cast<double>(k);
    const double pen = 2.0 * n * kk + (dense ? 0.0 : 2.0 * kk / h_g);
    const double rss = std::max(fit.rss, std::numeric_limits<double>::min());
    t.loss.push_back(fit.rss);
    t.penalty.push_back(pen);
    t.values.push_back(N * std::log(rss / N) + pen);
  }
  finish(t);
  return t;
}

CriterionTrace bic_li(const Eigen::VectorXd& eigenvalues, std::size_t L, std::size_t n, double sigma2,
                      double mean_obs) {
  if (L == 0 || static_cast<Eigen::Index>(L) > eigenvalues.size()) throw DimensionError("BIC_LI order out of range");
  if (n == 0 || !(mean_obs > 0.0)) throw DimensionError("BIC_LI needs positive sample sizes");
  CriterionTrace t;
  t.name = Criterion::BicLi;
  t.sigma2 = std::max(sigma2, kSigma2Floor);
  const double nn = static_cast<double>(n);
  const double per = (nn + mean_obs) / (nn * mean_obs) * std::log(nn * mean_obs / (nn + mean_obs));
  for (std::size_t k = 1; k <= L; ++k) {
    double tail = 0.0;
    for (std::size_t nu = k; nu < L; ++nu) tail += std::max(0.0, eigenvalues[static_cast<Eigen::Index>(nu)]);
    const double loss = std::log(t.sigma2 + tail);
    const double pen = static_cast<double>(k) * per;
    t.loss.push_back(loss);
    t.penalty.push_back(pen);
    t.values.push_back(loss + pen);
  }
  finish(t);
  return t;
}

std::size_t select_order_ic(const CriterionTrace& trace) {
  if (trace.values.empty()) throw DimensionError("empty criterion trace");
  std::size_t best = 0;
  for (std::size_t k = 1; k < trace.values.size(); ++k) {
    if (trace.values[k] < trace.values[best]) best = k;
  }
  return best + 1;
}

CriterionTrace run_criterion(Criterion c, const FunctionalDataset& data, const ComponentFit& fit, std::size_t L) {
  L = std::min(L, fit.eig.count());
  const double sigma2 = std::max(fit.sigma2, kSigma2Floor);
  switch (c) {
    case Criterion::AicYao:
      return aic_yao(data, fit.mean, fit.eig, sigma2, L);
    case Criterion::BicPace:
      return bic_pace(data, fit.mean, fit.eig, sigma2, L);
    case Criterion::AicLi:
      return aic_li(data, fit.mean, fit.eig, sigma2, L, is_dense_design(data, fit.eig.grid.delta()),
                    fit.bandwidths.h_g);
    case Criterion::BicLi:
      return bic_li(fit.eig.eigenvalues, L, data.size(), sigma2, data.mean_observations());
  }
  throw ConfigError("unknown criterion");
}

}  // namespace fladle
