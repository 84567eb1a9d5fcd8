#include "fladle/ladle.hpp"

#include <algorithm>
#include <cmath>

#include "fladle/error.hpp"

namespace fladle {

Eigen::MatrixXd cross_gram(const Eigen::MatrixXd& B1, const Eigen::MatrixXd& B2, double delta, std::size_t ell) {
  if (B1.rows() != B2.rows()) throw DimensionError("eigenfunction matrices are sampled on different grids");
  const auto l = static_cast<Eigen::Index>(ell);
  if (l > B1.cols() || l > B2.cols()) {
    throw DimensionError("cross-Gram order " + std::to_string(ell) + " exceeds the available eigenfunctions");
  }
  return delta * (B1.leftCols(l).transpose() * B2.leftCols(l));
}

double abs_det(const Eigen::MatrixXd& A) {
  if (A.rows() != A.cols()) throw DimensionError("determinant of a non-square matrix");
  if (A.rows() == 0) return 1.0;
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
  const Eigen::MatrixXd& U = lu.matrixLU();
  double log_abs = 0.0;
  for (Eigen::Index i = 0; i < U.rows(); ++i) {
    const double p = std::abs(U(i, i));
    if (p == 0.0) return 0.0;
    log_abs += std::log(p);
  }
  return std::exp(log_abs);
}

FCurve f_curve(const Eigen::MatrixXd& B1, const Eigen::MatrixXd& B2, double delta, std::size_t L) {
  if (L == 0) throw DimensionError("f curve needs L >= 1");
  FCurve out;
  out.fU_raw.reserve(L);
  std::vector<double> clamped;
  clamped.reserve(L);
  double total = 0.0;
  for (std::size_t ell = 1; ell <= L; ++ell) {
    const double raw = 1.0 - abs_det(cross_gram(B1, B2, delta, ell));
    const double c = std::clamp(raw, 0.0, 1.0);
    out.fU_raw.push_back(raw);
    clamped.push_back(c);
    total += c;
  }
  out.f.reserve(L);
  for (double c : clamped) out.f.push_back(c / (1.0 + total));
  return out;
}

std::vector<double> g_curve(const Eigen::VectorXd& eigenvalues, std::size_t L) {
  if (L == 0 || static_cast<Eigen::Index>(L) > eigenvalues.size()) {
    throw DimensionError("g curve order out of range");
  }
  double total = 0.0;
  for (std::size_t k = 0; k < L; ++k) {
    const double v = eigenvalues[static_cast<Eigen::Index>(k)];
    if (v < 0.0) throw DegenerateSpectrumError("negative eigenvalue in g curve");
    total += v;
  }
  if (!(total > 0.0)) throw DegenerateSpectrumError("all eigenvalues are zero");
  std::vector<double> g(L);
  for (std::size_t k = 0; k < L; ++k) g[k] = eigenvalues[static_cast<Eigen::Index>(k)] / total;
  return g;
}

std::size_t argmin_first(const std::vector<double>& values) {
  if (values.empty()) throw DimensionError("argmin of an empty sequence");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] < values[best]) best = i;
  }
  return best + 1;
}

LadleResult ladle_estimate(const FunctionalDataset& data, const EstimationOptions& options, std::uint64_t seed) {
  if (data.size() < 4) throw InsufficientDataError("the ladle estimator needs at least 4 subjects");
  return ladle_estimate(data, fit_components(data, options.smoothing), options, seed);
}

LadleResult ladle_estimate(const FunctionalDataset& data, const ComponentFit& full, const EstimationOptions& options,
                           std::uint64_t seed) {
  const SplitPair split = split_dataset(data, seed);
  SmoothingOptions half = options.smoothing;
  half.design = full.design;
  auto fit_half = [&](const FunctionalDataset& d) {
    return options.reselect_half_bandwidths ? fit_components(d, half)
                                            : fit_components(d, half, full.bandwidths, full.design);
  };
  const ComponentFit a = fit_half(split.first);
  const ComponentFit b = fit_half(split.second);
  if (a.eig.count() == 0 || b.eig.count() == 0) {
    throw InsufficientSignalError("a split half produced no positive eigenvalues");
  }
  if (!(a.eig.grid == b.eig.grid)) throw DimensionError("split halves were evaluated on different grids");

  const std::size_t cap = std::min(options.l_cap, data.size() - 1);
  const std::size_t L_full = select_L(full.eig, options.fve_threshold, cap);

  LadleResult out;
  out.seed = seed;
  out.L = std::min({L_full, a.eig.count(), b.eig.count()});
  auto fc = f_curve(a.eig.eigenfunctions, b.eig.eigenfunctions, a.eig.grid.delta(), out.L);
  out.f = std::move(fc.f);
  out.fU_raw = std::move(fc.fU_raw);
  out.g = g_curve(full.eig.eigenvalues, out.L);
  out.h.resize(out.L);
  for (std::size_t k = 0; k < out.L; ++k) out.h[k] = out.f[k] + out.g[k];
  out.d_hat = argmin_first(out.h);

  out.metadata.design = full.design;
  out.metadata.grid_size = full.eig.grid.size();
  out.metadata.full = full.bandwidths;
  out.metadata.first = a.bandwidths;
  out.metadata.second = b.bandwidths;
  out.metadata.sigma2 = full.sigma2;
  out.metadata.L_full = L_full;
  out.metadata.L_first = a.eig.count();
  out.metadata.L_second = b.eig.count();
  return out;
}

}  // namespace fladle
