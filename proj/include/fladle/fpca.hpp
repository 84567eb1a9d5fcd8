#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "fladle/core.hpp"
#include "fladle/smoothing.hpp"

namespace fladle {

// Eigenpairs of a discretized covariance operator. Column nu of
// `eigenfunctions` holds phi_nu on the grid with delta * sum phi^2 = 1.
struct EigenSystem {
  EvaluationGrid grid;
  Eigen::VectorXd eigenvalues;     // descending, all > 0
  Eigen::MatrixXd eigenfunctions;  // grid.size() x count()
  // Sum of ALL operator eigenvalues, negative ones included (delta * trace).
  // Absent for systems assembled by hand.
  std::optional<double> spectrum_total;

  std::size_t count() const { return static_cast<std::size_t>(eigenvalues.size()); }
  // phi_nu (0-based) at an arbitrary time by linear interpolation.
  double eval(std::size_t nu, double t) const;
};

enum class ScoreMethod { Integration, ConditionalExpectation };

struct ScoreMatrix {
  Eigen::MatrixXd scores;  // subjects x k
  ScoreMethod method = ScoreMethod::Integration;
};

// Symmetric eigendecomposition scaled to operator units. Eigenpairs whose
// matrix eigenvalue is not positive (below a relative round-off floor) are
// dropped; each column is flipped so that its entry of largest magnitude is
// positive.
EigenSystem eigendecompose(const CovEstimate& cov);

// Smallest L whose cumulative eigenvalue sum reaches `threshold` times the
// total of the whole spectrum (negative eigenvalues included, when known),
// capped at the positive count and at `cap`.
std::size_t select_L(const EigenSystem& eig, double fve_threshold,
                     std::size_t cap = std::numeric_limits<std::size_t>::max());

ScoreMatrix scores_integration(const FunctionalDataset& data, const MeanEstimate& mean, const EigenSystem& eig,
                               std::size_t k);

// Conditional expectation (best linear predictor) scores
//   xi_i = Lambda Phi_i^T (Phi_i Lambda Phi_i^T + sigma2 I)^{-1} (Y_i - mu(T_i)).
ScoreMatrix scores_pace(const FunctionalDataset& data, const MeanEstimate& mean, const EigenSystem& eig,
                        double sigma2, std::size_t k);

// True when every subject has >= 10 observations covering [0,1] with no gap
// (including the two ends) wider than 5 * delta.
bool is_dense_design(const FunctionalDataset& data, double delta);

enum class DesignPath { Auto, Irregular, DenseRegular };

DesignPath parse_design(const std::string& s);
std::string to_string(DesignPath d);

enum class CovBandwidthRule { SubjectCV, Gcv };

CovBandwidthRule parse_cov_bandwidth_rule(const std::string& s);
std::string to_string(CovBandwidthRule r);

struct SmoothingOptions {
  DesignPath design = DesignPath::Auto;
  std::size_t grid_size = 51;
  std::optional<double> h_mu;
  std::optional<double> h_g;
  bool fixed_hg = false;
  std::size_t bandwidth_candidates = 10;
  CovBandwidthRule cov_rule = CovBandwidthRule::SubjectCV;
  std::size_t cov_folds = 5;
};

struct Bandwidths {
  double h_mu = 0.0;
  double h_g = 0.0;
};

// Mean, covariance, noise variance and spectrum estimated from one dataset.
struct ComponentFit {
  DesignPath design = DesignPath::Irregular;
  MeanEstimate mean;
  CovEstimate cov;
  double sigma2 = 0.0;
  EigenSystem eig;
  Bandwidths bandwidths;
};

DesignPath resolve_design(const FunctionalDataset& data, DesignPath requested);

// Chooses bandwidths (explicit, fixed rule, or GCV) on `data` and fits.
ComponentFit fit_components(const FunctionalDataset& data, const SmoothingOptions& options);

// Fits with the bandwidths already chosen elsewhere (used for the split halves).
ComponentFit fit_components(const FunctionalDataset& data, const SmoothingOptions& options,
                            const Bandwidths& bandwidths, DesignPath design);

}  // namespace fladle
