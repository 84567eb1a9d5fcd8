#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace fladle {

// One subject's discretely observed curve. Times are sorted ascending and lie
// in [0,1]; values[j] is the noisy observation at times[j].
struct SubjectRecord {
  std::string id;
  std::vector<double> times;
  std::vector<double> values;

  std::size_t size() const { return times.size(); }
};

// Immutable collection of subjects. Construction validates every invariant
// (equal positive lengths, sorted times in [0,1], unique ids).
class FunctionalDataset {
 public:
  FunctionalDataset() = default;
  explicit FunctionalDataset(std::vector<SubjectRecord> subjects);

  const std::vector<SubjectRecord>& subjects() const { return subjects_; }
  const SubjectRecord& operator[](std::size_t i) const { return subjects_[i]; }
  std::size_t size() const { return subjects_.size(); }
  bool empty() const { return subjects_.empty(); }

  std::size_t total_observations() const;
  double mean_observations() const;

  // Every subject has exactly the same time vector (compared bit-exactly).
  bool has_common_design() const;

  // Returns a copy with every value multiplied by c.
  FunctionalDataset scaled(double c) const;

 private:
  std::vector<SubjectRecord> subjects_;
};

// Equally spaced points on [0,1], t_1 = 0 and t_m = 1.
class EvaluationGrid {
 public:
  EvaluationGrid() = default;

  static EvaluationGrid uniform(std::size_t m);
  // Accepts an arbitrary point list that must already satisfy the invariants.
  static EvaluationGrid from_points(std::vector<double> points);

  const std::vector<double>& points() const { return points_; }
  double operator[](std::size_t i) const { return points_[i]; }
  std::size_t size() const { return points_.size(); }
  double delta() const { return delta_; }

  bool operator==(const EvaluationGrid& other) const { return points_ == other.points_; }

 private:
  std::vector<double> points_;
  double delta_ = 0.0;
};

struct SplitPair {
  FunctionalDataset first;
  FunctionalDataset second;
  std::uint64_t seed = 0;
};

// Random halving of the subjects; first half receives ceil(n/2).
SplitPair split_dataset(const FunctionalDataset& data, std::uint64_t seed);

// delta * sum_i f_i g_i (uniform weight on every grid point).
double riemann_inner(std::span<const double> f, std::span<const double> g, double delta);
double riemann_inner(const Eigen::VectorXd& f, const Eigen::VectorXd& g, double delta);

// Piecewise-linear interpolation of grid values at t, constant beyond the ends.
double interpolate(const EvaluationGrid& grid, std::span<const double> values, double t);
double interpolate(const EvaluationGrid& grid, const Eigen::VectorXd& values, double t);

struct CsvSchema {
  std::string subject = "subject";
  std::string time = "time";
  std::string value = "value";
};

struct IngestOptions {
  CsvSchema schema;
  // Min-max rescale the pooled times onto [0,1] instead of rejecting them.
  bool rescale_times = false;
};

FunctionalDataset ingest_long_csv(const std::filesystem::path& path, const IngestOptions& options = {});
FunctionalDataset parse_long_csv(std::istream& in, const IngestOptions& options = {},
                                 const std::string& source = "<stream>");

// Long format, 17 significant digits so that a re-read is bit-exact.
void write_long_csv(const FunctionalDataset& data, const std::filesystem::path& path,
                    const CsvSchema& schema = {});
void write_long_csv(const FunctionalDataset& data, std::ostream& out, const CsvSchema& schema = {});

// Splits one CSV line on commas, honouring double-quoted fields.
std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace fladle
