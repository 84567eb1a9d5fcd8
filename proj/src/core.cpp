#include "fladle/core.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_set>

#include "fladle/error.hpp"

namespace fladle {

FunctionalDataset::FunctionalDataset(std::vector<SubjectRecord> subjects) : subjects_(std::move(subjects)) {
  std::unordered_set<std::string> ids;
  for (const auto& s : subjects_) {
    if (s.times.size() != s.values.size()) {
      throw DimensionError("subject '" + s.id + "': times and values differ in length");
    }
    if (s.times.empty()) {
      throw InsufficientDataError("subject '" + s.id + "' has no observations");
    }
    for (std::size_t j = 0; j < s.times.size(); ++j) {
      const double t = s.times[j];
      if (!(t >= 0.0 && t <= 1.0)) {
        throw DomainError("subject '" + s.id + "': time " + std::to_string(t) + " outside [0,1]");
      }
      if (j > 0 && t < s.times[j - 1]) {
        throw DomainError("subject '" + s.id + "': times are not sorted");
      }
      if (!std::isfinite(s.values[j])) {
        throw ParseError("subject '" + s.id + "': non-finite value");
      }
    }
    if (!ids.insert(s.id).second) {
      throw SchemaError("duplicate subject id '" + s.id + "'");
    }
  }
}

std::size_t FunctionalDataset::total_observations() const {
  std::size_t total = 0;
  for (const auto& s : subjects_) total += s.size();
  return total;
}

double FunctionalDataset::mean_observations() const {
  return subjects_.empty() ? 0.0 : static_cast<double>(total_observations()) / static_cast<double>(size());
}

bool FunctionalDataset::has_common_design() const {
  if (subjects_.empty()) return false;
  const auto& ref = subjects_.front().times;
  return std::all_of(subjects_.begin(), subjects_.end(), [&](const SubjectRecord& s) { return s.times == ref; });
}

FunctionalDataset FunctionalDataset::scaled(double c) const {
  auto copy = subjects_;
  for (auto& s : copy) {
    for (auto& v : s.values) v *= c;
  }
  return FunctionalDataset(std::move(copy));
}

EvaluationGrid EvaluationGrid::uniform(std::size_t m) {
  if (m < 2) throw DimensionError("evaluation grid needs at least 2 points");
  std::vector<double> pts(m);
  for (std::size_t i = 0; i < m; ++i) pts[i] = static_cast<double>(i) / static_cast<double>(m - 1);
  pts.back() = 1.0;
  EvaluationGrid g;
  g.points_ = std::move(pts);
  g.delta_ = 1.0 / static_cast<double>(m - 1);
  return g;
}

EvaluationGrid EvaluationGrid::from_points(std::vector<double> points) {
  if (points.size() < 2) throw DimensionError("evaluation grid needs at least 2 points");
  if (points.front() != 0.0 || points.back() != 1.0) {
    throw DesignMismatchError("evaluation grid must start at 0 and end at 1");
  }
  const double delta = 1.0 / static_cast<double>(points.size() - 1);
  for (std::size_t i = 1; i < points.size(); ++i) {
    const double step = points[i] - points[i - 1];
    if (std::abs(step - delta) > 1e-12 * std::max(1.0, delta) + 1e-12) {
      throw DesignMismatchError("grid points are not equally spaced");
    }
  }
  EvaluationGrid g;
  g.points_ = std::move(points);
  g.delta_ = delta;
  return g;
}

namespace {

// Uniform integer in [0, bound) by rejection, independent of the standard
// library's distribution implementation.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

}  // namespace

SplitPair split_dataset(const FunctionalDataset& data, std::uint64_t seed) {
  const std::size_t n = data.size();
  if (n < 4) throw InsufficientDataError("splitting needs at least 4 subjects, got " + std::to_string(n));

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(seed);
  for (std::size_t i = n - 1; i > 0; --i) {
    std::swap(perm[i], perm[bounded(rng, i + 1)]);
  }

  const std::size_t n_first = (n + 1) / 2;
  std::vector<SubjectRecord> a, b;
  a.reserve(n_first);
  b.reserve(n - n_first);
  for (std::size_t i = 0; i < n; ++i) {
    (i < n_first ? a : b).push_back(data[perm[i]]);
  }
  return SplitPair{FunctionalDataset(std::move(a)), FunctionalDataset(std::move(b)), seed};
}

double riemann_inner(std::span<const double> f, std::span<const double> g, double delta) {
  if (f.size() != g.size()) {
    throw DimensionError("riemann_inner: length mismatch (" + std::to_string(f.size()) + " vs " +
                         std::to_string(g.size()) + ")");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) acc += f[i] * g[i];
  return delta * acc;
}

double riemann_inner(const Eigen::VectorXd& f, const Eigen::VectorXd& g, double delta) {
  return riemann_inner(std::span<const double>(f.data(), static_cast<std::size_t>(f.size())),
                       std::span<const double>(g.data(), static_cast<std::size_t>(g.size())), delta);
}

double interpolate(const EvaluationGrid& grid, std::span<const double> values, double t) {
  const std::size_t m = grid.size();
  if (values.size() != m) throw DimensionError("interpolate: values do not match grid");
  if (t <= 0.0) return values[0];
  if (t >= 1.0) return values[m - 1];
  const double pos = t / grid.delta();
  std::size_t i = static_cast<std::size_t>(pos);
  if (i >= m - 1) i = m - 2;
  const double w = (t - grid[i]) / grid.delta();
  return (1.0 - w) * values[i] + w * values[i + 1];
}

double interpolate(const EvaluationGrid& grid, const Eigen::VectorXd& values, double t) {
  return interpolate(grid, std::span<const double>(values.data(), static_cast<std::size_t>(values.size())), t);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(field));
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  out.push_back(std::move(field));
  return out;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& raw, const std::string& source, std::size_t row, const std::string& column) {
  const std::string s = trim(raw);
  double v = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  if (!s.empty() && *begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (s.empty() || ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw ParseError(source + ": row " + std::to_string(row) + ": column '" + column + "' is not numeric: '" + raw +
                     "'");
  }
  return v;
}

}  // namespace

FunctionalDataset parse_long_csv(std::istream& in, const IngestOptions& options, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw SchemaError(source + ": empty file");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // UTF-8 BOM

  const auto header = split_csv_line(line);
  auto column = [&](const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (trim(header[i]) == name) return i;
    }
    throw SchemaError(source + ": missing column '" + name + "'");
  };
  const std::size_t c_id = column(options.schema.subject);
  const std::size_t c_t = column(options.schema.time);
  const std::size_t c_v = column(options.schema.value);
  const std::size_t needed = std::max({c_id, c_t, c_v}) + 1;

  struct Row {
    double t;
    double v;
    std::size_t line;
  };
  std::vector<std::string> order;
  std::map<std::string, std::vector<Row>> groups;

  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() < needed) {
      throw ParseError(source + ": row " + std::to_string(row) + ": expected at least " + std::to_string(needed) +
                       " fields");
    }
    const std::string id = trim(fields[c_id]);
    const double t = parse_number(fields[c_t], source, row, options.schema.time);
    const double v = parse_number(fields[c_v], source, row, options.schema.value);
    if (!options.rescale_times && (t < 0.0 || t > 1.0)) {
      throw DomainError(source + ": row " + std::to_string(row) + ": time " + fields[c_t] +
                        " outside [0,1] (use min-max rescaling to accept it)");
    }
    auto [it, inserted] = groups.try_emplace(id);
    if (inserted) order.push_back(id);
    it->second.push_back(Row{t, v, row});
  }
  if (groups.empty()) throw InsufficientDataError(source + ": no data rows");

  double t_min = 0.0, t_scale = 1.0;
  if (options.rescale_times) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& [id, rows] : groups) {
      for (const auto& r : rows) {
        lo = std::min(lo, r.t);
        hi = std::max(hi, r.t);
      }
    }
    if (!(hi > lo)) throw DomainError(source + ": cannot rescale times, all observation times are equal");
    t_min = lo;
    t_scale = hi - lo;
  }

  std::vector<SubjectRecord> subjects;
  subjects.reserve(order.size());
  for (const auto& id : order) {
    auto& rows = groups[id];
    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.t < b.t; });
    SubjectRecord s;
    s.id = id;
    s.times.reserve(rows.size());
    s.values.reserve(rows.size());
    for (const auto& r : rows) {
      double t = r.t;
      if (options.rescale_times) t = std::clamp((t - t_min) / t_scale, 0.0, 1.0);
      s.times.push_back(t);
      s.values.push_back(r.v);
    }
    subjects.push_back(std::move(s));
  }
  return FunctionalDataset(std::move(subjects));
}

FunctionalDataset ingest_long_csv(const std::filesystem::path& path, const IngestOptions& options) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open '" + path.string() + "'");
  return parse_long_csv(in, options, path.string());
}

namespace {

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

void write_long_csv(const FunctionalDataset& data, std::ostream& out, const CsvSchema& schema) {
  out << schema.subject << ',' << schema.time << ',' << schema.value << '\n';
  out << std::setprecision(17);
  for (const auto& s : data.subjects()) {
    const std::string id = quote_if_needed(s.id);
    for (std::size_t j = 0; j < s.size(); ++j) {
      out << id << ',' << s.times[j] << ',' << s.values[j] << '\n';
    }
  }
}

void write_long_csv(const FunctionalDataset& data, const std::filesystem::path& path, const CsvSchema& schema) {
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write '" + path.string() + "'");
  write_long_csv(data, out, schema);
}

}  // namespace fladle
