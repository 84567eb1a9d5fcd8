#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "fladle/core.hpp"
#include "fladle/fpca.hpp"
#include "fladle/regression.hpp"
#include "fladle/simulation.hpp"

namespace fladle::test {

// Every subject observed on the same uniform m-point grid with value f(i, t).
inline FunctionalDataset regular_dataset(std::size_t n, std::size_t m,
                                         const std::function<double(std::size_t, double)>& f) {
  std::vector<SubjectRecord> subjects;
  for (std::size_t i = 0; i < n; ++i) {
    SubjectRecord s;
    s.id = "s" + std::to_string(i);
    for (std::size_t j = 0; j < m; ++j) {
      const double t = static_cast<double>(j) / static_cast<double>(m - 1);
      s.times.push_back(t);
      s.values.push_back(f(i, t));
    }
    subjects.push_back(std::move(s));
  }
  return FunctionalDataset(std::move(subjects));
}

// m uniform random times per subject.
inline FunctionalDataset irregular_dataset(std::size_t n, std::size_t m, std::uint64_t seed,
                                           const std::function<double(std::size_t, double)>& f) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<SubjectRecord> subjects;
  for (std::size_t i = 0; i < n; ++i) {
    SubjectRecord s;
    s.id = "s" + std::to_string(i);
    for (std::size_t j = 0; j < m; ++j) s.times.push_back(u(rng));
    std::sort(s.times.begin(), s.times.end());
    for (double t : s.times) s.values.push_back(f(i, t));
    subjects.push_back(std::move(s));
  }
  return FunctionalDataset(std::move(subjects));
}

inline SimulationConfig simple_config(std::size_t n, std::size_t m, double sigma2, TimeDesign design,
                                      std::uint64_t seed = 11) {
  SimulationConfig c;
  c.name = "simple";
  c.n = n;
  c.m = m;
  c.eigenvalues = simple_eigenvalues();
  c.d = 3;
  c.sigma2_eps = sigma2;
  c.design = design;
  c.seed = seed;
  return c;
}

// Closed-form covariance sum_nu lambda_nu phi_nu(s) phi_nu(t) with the Fourier basis.
inline double fourier_cov(const std::vector<double>& lambda, double s, double t) {
  double g = 0.0;
  for (std::size_t nu = 0; nu < lambda.size(); ++nu) g += lambda[nu] * fourier_basis(nu + 1, s) * fourier_basis(nu + 1, t);
  return g;
}

// Covariance of the generated curves themselves, sum_{nu,mu} S_{nu mu} phi_nu(s) phi_mu(t)
// with S the uncentered second moment of the true scores.
inline Eigen::MatrixXd empirical_curve_cov(const Eigen::MatrixXd& scores, const EvaluationGrid& grid) {
  const Eigen::MatrixXd S = scores.transpose() * scores / static_cast<double>(scores.rows());
  Eigen::MatrixXd phi(static_cast<Eigen::Index>(grid.size()), scores.cols());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (Eigen::Index nu = 0; nu < scores.cols(); ++nu) {
      phi(static_cast<Eigen::Index>(i), nu) = fourier_basis(static_cast<std::size_t>(nu) + 1, grid[i]);
    }
  }
  return phi * S * phi.transpose();
}

inline Eigen::MatrixXd true_cov(const std::vector<double>& lambda, const EvaluationGrid& grid) {
  const auto m = static_cast<Eigen::Index>(grid.size());
  Eigen::MatrixXd g(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) g(i, j) = fourier_cov(lambda, grid[static_cast<std::size_t>(i)], grid[static_cast<std::size_t>(j)]);
  }
  return g;
}

// Forward model y = alpha + <beta, X> + e with beta = 2 phi_1 - phi_2, so
// <beta, X - mu> = 2 xi_1 - xi_2.
struct Forward {
  GeneratedData train, test;
  Eigen::VectorXd y_train, y_test;
};

inline Forward forward_model(std::size_t n, double tau2, std::uint64_t seed) {
  auto c = test::simple_config(n, 51, 0.0, TimeDesign::Regular, seed);
  Forward f;
  f.train = generate(c, 0);
  f.test = generate(c, 1);
  std::mt19937_64 rng(seed + 99);
  std::normal_distribution<double> e(0.0, std::sqrt(tau2));
  auto response = [&](const GeneratedData& g) {
    Eigen::VectorXd y(g.scores.rows());
    for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = 1.5 + 2.0 * g.scores(i, 0) - g.scores(i, 1) + (tau2 > 0 ? e(rng) : 0.0);
    return y;
  };
  f.y_train = response(f.train);
  f.y_test = response(f.test);
  return f;
}

// Grid-L2 distance between the fitted slope and 2 phi_1 - phi_2, noiseless training data.
inline double forward_slope_error(std::size_t n, std::uint64_t seed) {
  const auto f = forward_model(n, 0.0, seed);
  SmoothingOptions o;
  o.design = DesignPath::DenseRegular;
  const auto comp = fit_components(f.train.data, o);
  const auto s = scores_integration(f.train.data, comp.mean, comp.eig, 3);
  const auto fit = fit_fpc_regression(s, f.y_train, 3, comp.eig);
  const auto& grid = comp.eig.grid;
  double err = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double beta = 2.0 * fourier_basis(1, grid[i]) - fourier_basis(2, grid[i]);
    err += std::pow(fit.slope_on_grid[static_cast<Eigen::Index>(i)] - beta, 2);
  }
  return std::sqrt(err * grid.delta());
}

// Test-set prediction error with n training and n test curves.
inline double forward_prediction_error(std::size_t n, double tau2, std::uint64_t seed) {
  const auto f = forward_model(n, tau2, seed);
  SmoothingOptions o;
  o.design = DesignPath::DenseRegular;
  const auto comp = fit_components(f.train.data, o);
  const auto s_train = scores_integration(f.train.data, comp.mean, comp.eig, 3);
  const auto s_test = scores_integration(f.test.data, comp.mean, comp.eig, 3);
  const auto fit = fit_fpc_regression(s_train, f.y_train, 3, comp.eig);
  return prediction_error(f.y_test, predict(fit, s_test));
}

}  // namespace fladle::test
