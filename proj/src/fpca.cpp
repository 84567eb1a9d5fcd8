#include "fladle/fpca.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "fladle/error.hpp"

namespace fladle {

double EigenSystem::eval(std::size_t nu, double t) const {
  const auto col = eigenfunctions.col(static_cast<Eigen::Index>(nu));
  return interpolate(grid, std::span<const double>(col.data(), static_cast<std::size_t>(col.size())), t);
}

EigenSystem eigendecompose(const CovEstimate& cov) {
  const Eigen::Index m = cov.matrix.rows();
  if (m != cov.matrix.cols() || static_cast<std::size_t>(m) != cov.grid.size()) {
    throw DimensionError("covariance matrix does not match its grid");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov.matrix);
  if (solver.info() != Eigen::Success) throw NumericalError("symmetric eigensolver did not converge");

  const Eigen::VectorXd& values = solver.eigenvalues();  // ascending
  const double scale = values.cwiseAbs().maxCoeff();
  const double floor = static_cast<double>(m) * std::numeric_limits<double>::epsilon() * scale;

  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = m - 1; i >= 0; --i) {
    if (values[i] > floor) keep.push_back(i);
  }

  const double delta = cov.grid.delta();
  const double inv_sqrt_delta = 1.0 / std::sqrt(delta);
  EigenSystem eig;
  eig.grid = cov.grid;
  eig.spectrum_total = values.sum() * delta;
  eig.eigenvalues.resize(static_cast<Eigen::Index>(keep.size()));
  eig.eigenfunctions.resize(m, static_cast<Eigen::Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c) {
    const auto ci = static_cast<Eigen::Index>(c);
    eig.eigenvalues[ci] = values[keep[c]] * delta;
    Eigen::VectorXd v = solver.eigenvectors().col(keep[c]) * inv_sqrt_delta;
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v[arg] < 0.0) v = -v;
    eig.eigenfunctions.col(ci) = v;
  }
  return eig;
}

std::size_t select_L(const EigenSystem& eig, double fve_threshold, std::size_t cap) {
  if (!(fve_threshold > 0.0 && fve_threshold <= 1.0)) throw DimensionError("FVE threshold must lie in (0, 1]");
  const std::size_t positive = eig.count();
  if (positive == 0) throw DegenerateSpectrumError("no positive eigenvalues");
  const double positive_total = eig.eigenvalues.sum();
  // A smoothed or noise-corrected surface is indefinite; its negative
  // eigenvalues offset the spurious positive ones, so the trace is the
  // variance being explained. Fall back to the positive sum if the trace is
  // not positive.
  const double total =
      eig.spectrum_total && *eig.spectrum_total > 0.0 ? std::min(*eig.spectrum_total, positive_total) : positive_total;
  double cum = 0.0;
  std::size_t L = positive;
  for (std::size_t nu = 0; nu < positive; ++nu) {
    cum += eig.eigenvalues[static_cast<Eigen::Index>(nu)];
    if (cum >= fve_threshold * total - 1e-12 * total) {
      L = nu + 1;
      break;
    }
  }
  return std::max<std::size_t>(1, std::min({L, positive, cap}));
}

bool is_dense_design(const FunctionalDataset& data, double delta) {
  const double max_gap = 5.0 * delta;
  for (const auto& s : data.subjects()) {
    if (s.size() < 10) return false;
    if (s.times.front() > max_gap || 1.0 - s.times.back() > max_gap) return false;
    for (std::size_t j = 1; j < s.size(); ++j) {
      if (s.times[j] - s.times[j - 1] > max_gap) return false;
    }
  }
  return true;
}

namespace {

void check_k(const EigenSystem& eig, std::size_t k) {
  if (k > eig.count()) {
    throw DimensionError("requested " + std::to_string(k) + " scores but only " + std::to_string(eig.count()) +
                         " eigenfunctions are available");
  }
}

}  // namespace

ScoreMatrix scores_integration(const FunctionalDataset& data, const MeanEstimate& mean, const EigenSystem& eig,
                               std::size_t k) {
  check_k(eig, k);
  const EvaluationGrid& grid = eig.grid;
  if (!is_dense_design(data, grid.delta())) {
    throw SparseDesignError("integration scores need densely observed subjects; use conditional-expectation scores");
  }
  const auto m = static_cast<Eigen::Index>(grid.size());
  ScoreMatrix out{Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(data.size()), static_cast<Eigen::Index>(k)),
                  ScoreMethod::Integration};
  std::vector<double> centered;
  Eigen::VectorXd on_grid(m);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& s = data[i];
    centered.resize(s.size());
    for (std::size_t j = 0; j < s.size(); ++j) centered[j] = s.values[j] - mean.at(s.times[j]);
    // Linear interpolation through the observed points, constant beyond them.
    std::size_t j = 0;
    for (Eigen::Index g = 0; g < m; ++g) {
      const double t = grid[static_cast<std::size_t>(g)];
      while (j + 1 < s.size() && s.times[j + 1] < t) ++j;
      double v;
      if (t <= s.times.front()) {
        v = centered.front();
      } else if (t >= s.times.back()) {
        v = centered.back();
      } else {
        const double t0 = s.times[j], t1 = s.times[j + 1];
        v = t1 > t0 ? centered[j] + (centered[j + 1] - centered[j]) * (t - t0) / (t1 - t0) : centered[j + 1];
      }
      on_grid[g] = v;
    }
    for (std::size_t nu = 0; nu < k; ++nu) {
      out.scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(nu)) =
          riemann_inner(on_grid, eig.eigenfunctions.col(static_cast<Eigen::Index>(nu)), grid.delta());
    }
  }
  return out;
}

ScoreMatrix scores_pace(const FunctionalDataset& data, const MeanEstimate& mean, const EigenSystem& eig,
                        double sigma2, std::size_t k) {
  check_k(eig, k);
  if (!(sigma2 > 0.0)) throw NumericalError("conditional-expectation scores need a positive noise variance");
  const auto kk = static_cast<Eigen::Index>(k);
  ScoreMatrix out{Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(data.size()), kk), ScoreMethod::ConditionalExpectation};
  if (k == 0) return out;
  const Eigen::VectorXd lambda = eig.eigenvalues.head(kk);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& s = data[i];
    const auto ni = static_cast<Eigen::Index>(s.size());
    Eigen::MatrixXd phi(ni, kk);
    Eigen::VectorXd resid(ni);
    for (Eigen::Index j = 0; j < ni; ++j) {
      const double t = s.times[static_cast<std::size_t>(j)];
      resid[j] = s.values[static_cast<std::size_t>(j)] - mean.at(t);
      for (Eigen::Index nu = 0; nu < kk; ++nu) phi(j, nu) = eig.eval(static_cast<std::size_t>(nu), t);
    }
    Eigen::MatrixXd sigma = phi * lambda.asDiagonal() * phi.transpose();
    sigma.diagonal().array() += sigma2;
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success) {
      throw NumericalError("subject '" + s.id + "': singular marginal covariance in score prediction");
    }
    const Eigen::VectorXd alpha = llt.solve(resid);
    out.scores.row(static_cast<Eigen::Index>(i)) = (lambda.asDiagonal() * (phi.transpose() * alpha)).transpose();
  }
  return out;
}

DesignPath parse_design(const std::string& s) {
  if (s == "auto") return DesignPath::Auto;
  if (s == "irregular") return DesignPath::Irregular;
  if (s == "dense-regular") return DesignPath::DenseRegular;
  throw ConfigError("unknown design '" + s + "' (expected auto, irregular or dense-regular)");
}

std::string to_string(DesignPath d) {
  switch (d) {
    case DesignPath::Auto:
      return "auto";
    case DesignPath::Irregular:
      return "irregular";
    case DesignPath::DenseRegular:
      return "dense-regular";
  }
  return "auto";
}

CovBandwidthRule parse_cov_bandwidth_rule(const std::string& s) {
  if (s == "cv") return CovBandwidthRule::SubjectCV;
  if (s == "gcv") return CovBandwidthRule::Gcv;
  throw ConfigError("unknown covariance bandwidth rule '" + s + "' (expected cv or gcv)");
}

std::string to_string(CovBandwidthRule r) { return r == CovBandwidthRule::Gcv ? "gcv" : "cv"; }

DesignPath resolve_design(const FunctionalDataset& data, DesignPath requested) {
  if (requested == DesignPath::Auto) return is_dense_regular(data) ? DesignPath::DenseRegular : DesignPath::Irregular;
  return requested;
}

namespace {

ComponentFit fit_dense_regular(const FunctionalDataset& data) {
  ComponentFit fit;
  fit.design = DesignPath::DenseRegular;
  fit.mean = dense_regular_mean(data);
  fit.sigma2 = rice_sigma2(data);
  fit.cov = dense_regular_cov(data, fit.mean, fit.sigma2);
  fit.eig = eigendecompose(fit.cov);
  return fit;
}

void finish_irregular(ComponentFit& fit, const FunctionalDataset& data) {
  fit.sigma2 = irregular_sigma2(data, fit.mean, fit.cov);
  fit.cov.noise_variance = fit.sigma2;
  fit.eig = eigendecompose(fit.cov);
}

}  // namespace

ComponentFit fit_components(const FunctionalDataset& data, const SmoothingOptions& options) {
  const DesignPath design = resolve_design(data, options.design);
  if (design == DesignPath::DenseRegular) return fit_dense_regular(data);

  const EvaluationGrid grid = EvaluationGrid::uniform(options.grid_size);
  ComponentFit fit;
  fit.design = DesignPath::Irregular;
  const auto candidates = candidate_bandwidths(data, options.bandwidth_candidates);
  fit.bandwidths.h_mu = options.h_mu ? *options.h_mu : gcv_bandwidth_mean(data, candidates, grid);
  fit.mean = local_linear_mean(data, fit.bandwidths.h_mu, grid);

  const auto pairs = raw_cov_pairs(data, fit.mean);
  if (options.h_g) {
    fit.bandwidths.h_g = *options.h_g;
    fit.cov = local_linear_cov(pairs, fit.bandwidths.h_g, grid);
  } else if (options.fixed_hg) {
    fit.bandwidths.h_g = fixed_cov_bandwidth(data.size());
    fit.cov = local_linear_cov(pairs, fit.bandwidths.h_g, grid);
  } else {
    std::vector<GcvPoint> trace;
    if (options.cov_rule == CovBandwidthRule::Gcv) {
      (void)gcv_bandwidth_cov(pairs, candidates, grid, &trace);
    } else {
      (void)cv_bandwidth_cov(pairs, candidates, grid, std::min(options.cov_folds, data.size()), &trace);
    }
    std::stable_sort(trace.begin(), trace.end(), [](const GcvPoint& a, const GcvPoint& b) { return a.score < b.score; });
    bool done = false;
    for (const auto& p : trace) {
      if (!p.admissible) break;
      try {
        fit.cov = local_linear_cov(pairs, p.bandwidth, grid);
        fit.bandwidths.h_g = p.bandwidth;
        done = true;
        break;
      } catch (const BandwidthTooSmallError&) {
      }
    }
    if (!done) throw BandwidthSelectionError("no admissible covariance bandwidth among the GCV candidates");
  }
  finish_irregular(fit, data);
  return fit;
}

ComponentFit fit_components(const FunctionalDataset& data, const SmoothingOptions& options, const Bandwidths& bandwidths,
                            DesignPath design) {
  if (design == DesignPath::DenseRegular) return fit_dense_regular(data);

  // A half holds fewer observations, so a bandwidth admissible on the full
  // data may leave empty windows; widen it geometrically until it fits.
  constexpr int kWidenSteps = 12;
  constexpr double kWiden = 1.2;
  const EvaluationGrid grid = EvaluationGrid::uniform(options.grid_size);
  ComponentFit fit;
  fit.design = DesignPath::Irregular;
  double h = bandwidths.h_mu;
  for (int step = 0;; ++step, h *= kWiden) {
    try {
      fit.mean = local_linear_mean(data, h, grid);
      break;
    } catch (const BandwidthTooSmallError&) {
      if (step == kWidenSteps) throw;
    }
  }
  fit.bandwidths.h_mu = h;
  const auto pairs = raw_cov_pairs(data, fit.mean);
  h = bandwidths.h_g;
  for (int step = 0;; ++step, h *= kWiden) {
    try {
      fit.cov = local_linear_cov(pairs, h, grid);
      break;
    } catch (const BandwidthTooSmallError&) {
      if (step == kWidenSteps) throw;
    }
  }
  fit.bandwidths.h_g = h;
  finish_irregular(fit, data);
  return fit;
}

}  // namespace fladle
