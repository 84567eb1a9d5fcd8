#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fladle/core.hpp"
#include "fladle/ladle.hpp"

namespace fladle {

enum class ScoreLaw { Gaussian, CenteredExponential };
enum class TimeDesign { IrregularUniform, Regular };
enum class MeanRule { Paper, AppendixA, Zero };
enum class BasisRule { Fourier, AppendixA };

struct SimulationConfig {
  std::string name;
  std::size_t n = 100;
  std::size_t m = 51;
  std::size_t d = 3;
  std::vector<double> eigenvalues;  // length d
  ScoreLaw score_law = ScoreLaw::Gaussian;
  double sigma2_eps = 0.1;
  TimeDesign design = TimeDesign::Regular;
  MeanRule mean_rule = MeanRule::Paper;
  BasisRule basis = BasisRule::Fourier;
  std::uint64_t seed = 1;
  // Estimation settings applied to this scenario in a study.
  EstimationOptions estimation;

  void validate() const;
};

// (4 - nu)^2 for nu = 1..3.
std::vector<double> simple_eigenvalues();
// (7 - nu)^2 for nu = 1..6.
std::vector<double> complex_eigenvalues();

double fourier_basis(std::size_t nu, double t);
double paper_mean(double t);
double appendix_a_mean(double t);
// Rank-two preset eigenfunctions after mapping [0,10] onto [0,1].
double appendix_a_basis(std::size_t nu, double t);

SimulationConfig appendix_a_preset();

double config_mean(const SimulationConfig& c, double t);
double config_basis(const SimulationConfig& c, std::size_t nu, double t);

struct GeneratedData {
  FunctionalDataset data;
  Eigen::MatrixXd scores;  // n x d
  std::size_t d = 0;
};

// Independent engine for one (seed, replicate, subject, purpose) key.
std::mt19937_64 stream(std::uint64_t seed, std::uint64_t replicate, std::uint64_t subject, std::uint64_t purpose);
std::uint64_t mix_key(std::uint64_t seed, std::uint64_t replicate, std::uint64_t subject, std::uint64_t purpose);

GeneratedData generate(const SimulationConfig& config, std::uint64_t replicate);

enum class Method { Fle, AicYao, BicPace, AicLi, BicLi };
std::string to_string(Method m);
Method parse_method(const std::string& s);
std::vector<Method> all_methods();

struct ReplicateOutcome {
  std::size_t config_index = 0;
  Method method = Method::Fle;
  std::size_t replicate = 0;
  std::size_t d_hat = 0;  // 0 when failed
  bool correct = false;
  std::string failure;
};

struct StudyCell {
  std::size_t config_index = 0;
  Method method = Method::Fle;
  std::size_t replicates = 0;
  std::size_t correct = 0;
  std::size_t failures = 0;
  std::map<std::size_t, std::size_t> d_hat_counts;
  double seconds = 0.0;

  double accuracy() const { return replicates == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(replicates); }
};

struct StudyReport {
  std::vector<SimulationConfig> configs;
  std::vector<StudyCell> cells;
  std::vector<ReplicateOutcome> outcomes;  // sorted by (config, method, replicate)

  const StudyCell& cell(std::size_t config_index, Method method) const;
  std::string csv() const;
  std::string table() const;
};

// Split seed used by replicate r of a config.
std::uint64_t replicate_split_seed(const SimulationConfig& config, std::size_t replicate);

// All methods for one replicate share a single component fit.
std::vector<ReplicateOutcome> run_replicate(const SimulationConfig& config, std::size_t config_index,
                                            const std::vector<Method>& methods, std::size_t replicate);

StudyReport run_study(const std::vector<SimulationConfig>& configs, const std::vector<Method>& methods,
                      std::size_t replicates, std::size_t jobs = 1);

std::string to_string(ScoreLaw s);
std::string to_string(TimeDesign d);
ScoreLaw parse_score_law(const std::string& s);
TimeDesign parse_time_design(const std::string& s);

}  // namespace fladle
