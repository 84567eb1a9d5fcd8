#include "fladle/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "fladle/error.hpp"

namespace fladle {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kKernelAtZero = 0.75;

// Pooled observations sorted by time.
struct Pooled {
  std::vector<double> t;
  std::vector<double> y;
};

Pooled pool(const FunctionalDataset& data) {
  std::vector<std::pair<double, double>> obs;
  obs.reserve(data.total_observations());
  for (const auto& s : data.subjects()) {
    for (std::size_t j = 0; j < s.size(); ++j) obs.emplace_back(s.times[j], s.values[j]);
  }
  std::stable_sort(obs.begin(), obs.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  Pooled p;
  p.t.reserve(obs.size());
  p.y.reserve(obs.size());
  for (const auto& [t, y] : obs) {
    p.t.push_back(t);
    p.y.push_back(y);
  }
  return p;
}

struct LocalFit1d {
  double a0;
  double leverage;  // weight of the point at x0 itself in the fitted value
  bool ok;
};

// Local linear fit at x0 over sorted (t, y); moments in kernel units u = (t - x0)/h.
LocalFit1d local_linear_1d(const std::vector<double>& t, const std::vector<double>& y, double x0, double h) {
  const auto lo = std::upper_bound(t.begin(), t.end(), x0 - h);
  const auto hi = std::lower_bound(t.begin(), t.end(), x0 + h);
  double s0 = 0, s1 = 0, s2 = 0, r0 = 0, r1 = 0;
  for (auto it = lo; it < hi; ++it) {
    const std::size_t k = static_cast<std::size_t>(it - t.begin());
    const double u = (t[k] - x0) / h;
    const double w = epanechnikov(u);
    if (w <= 0.0) continue;
    s0 += w;
    s1 += w * u;
    s2 += w * u * u;
    r0 += w * y[k];
    r1 += w * u * y[k];
  }
  const double det = s0 * s2 - s1 * s1;
  if (!(s0 > 0.0) || !(det > 1e-12 * s0 * s0)) return {0.0, 0.0, false};
  return {(s2 * r0 - s1 * r1) / det, kKernelAtZero * s2 / det, true};
}

}  // namespace

MeanEstimate local_linear_mean(const FunctionalDataset& data, double h, const EvaluationGrid& grid) {
  if (!(h > 0.0)) throw BandwidthTooSmallError("mean bandwidth must be positive");
  const Pooled p = pool(data);
  MeanEstimate est{grid, Eigen::VectorXd(static_cast<Eigen::Index>(grid.size())), h};
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto fit = local_linear_1d(p.t, p.y, grid[i], h);
    if (!fit.ok) {
      throw BandwidthTooSmallError("mean bandwidth " + std::to_string(h) + " leaves a degenerate window at t=" +
                                   std::to_string(grid[i]));
    }
    est.values[static_cast<Eigen::Index>(i)] = fit.a0;
  }
  return est;
}

double gcv_score_mean(const FunctionalDataset& data, double h, const EvaluationGrid& grid) {
  try {
    (void)local_linear_mean(data, h, grid);
  } catch (const BandwidthTooSmallError&) {
    return kInf;
  }
  const Pooled p = pool(data);
  const double n_total = static_cast<double>(p.t.size());
  double rss = 0.0, trace = 0.0;
  for (std::size_t k = 0; k < p.t.size(); ++k) {
    const auto fit = local_linear_1d(p.t, p.y, p.t[k], h);
    if (!fit.ok) return kInf;
    const double e = p.y[k] - fit.a0;
    rss += e * e;
    trace += fit.leverage;
  }
  const double denom = 1.0 - trace / n_total;
  if (!(denom > 0.0)) return kInf;
  return rss / (denom * denom);
}

namespace {

double select_min(const std::vector<double>& candidates, const std::vector<double>& scores,
                  std::vector<GcvPoint>* trace, const char* what) {
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return candidates[a] < candidates[b]; });
  double best_h = 0.0, best = kInf;
  if (trace) trace->clear();
  for (std::size_t i : order) {
    const bool ok = std::isfinite(scores[i]);
    if (trace) trace->push_back(GcvPoint{candidates[i], scores[i], ok});
    if (ok && scores[i] < best) {
      best = scores[i];
      best_h = candidates[i];
    }
  }
  if (!std::isfinite(best)) {
    throw BandwidthSelectionError(std::string("no admissible ") + what + " bandwidth among " +
                                  std::to_string(candidates.size()) + " candidates");
  }
  return best_h;
}

void check_candidates(const std::vector<double>& candidates) {
  if (candidates.empty()) throw BandwidthSelectionError("empty bandwidth candidate list");
  for (double h : candidates) {
    if (!(h > 0.0)) throw BandwidthSelectionError("bandwidth candidates must be positive");
  }
}

}  // namespace

double gcv_bandwidth_mean(const FunctionalDataset& data, const std::vector<double>& candidates,
                          const EvaluationGrid& grid, std::vector<GcvPoint>* trace) {
  check_candidates(candidates);
  std::vector<double> scores;
  scores.reserve(candidates.size());
  for (double h : candidates) scores.push_back(gcv_score_mean(data, h, grid));
  return select_min(candidates, scores, trace, "mean");
}

std::vector<RawCovPair> raw_cov_pairs(const FunctionalDataset& data, const MeanEstimate& mean) {
  std::size_t count = 0;
  for (const auto& s : data.subjects()) count += s.size() * (s.size() - 1);
  std::vector<RawCovPair> pairs;
  pairs.reserve(count);
  std::vector<double> resid;
  for (std::size_t subject = 0; subject < data.size(); ++subject) {
    const auto& s = data[subject];
    resid.resize(s.size());
    for (std::size_t j = 0; j < s.size(); ++j) resid[j] = s.values[j] - mean.at(s.times[j]);
    for (std::size_t j = 0; j < s.size(); ++j) {
      for (std::size_t l = 0; l < s.size(); ++l) {
        if (j != l) pairs.push_back(RawCovPair{s.times[j], s.times[l], resid[j] * resid[l], subject});
      }
    }
  }
  return pairs;
}

namespace {

// Moments of the bivariate local linear design in kernel units.
struct Moments2d {
  double s00 = 0, s10 = 0, s01 = 0, s20 = 0, s11 = 0, s02 = 0;
  double r00 = 0, r10 = 0, r01 = 0;
  std::size_t count = 0;

  void add(double u, double v, double w, double r) {
    s00 += w;
    s10 += w * u;
    s01 += w * v;
    s20 += w * u * u;
    s11 += w * u * v;
    s02 += w * v * v;
    r00 += w * r;
    r10 += w * u * r;
    r01 += w * v * r;
    ++count;
  }
};

struct Solve2d {
  double b0;
  double inv00;  // (M^{-1})_{00}
  bool ok;
};

Solve2d solve_local_plane(const Moments2d& m, std::size_t min_count) {
  const double c00 = m.s20 * m.s02 - m.s11 * m.s11;
  const double c01 = m.s11 * m.s01 - m.s10 * m.s02;
  const double c02 = m.s10 * m.s11 - m.s20 * m.s01;
  const double det = m.s00 * c00 + m.s10 * c01 + m.s01 * c02;
  if (m.count < min_count || !(m.s00 > 0.0) || !(det > 1e-12 * m.s00 * m.s00 * m.s00)) return {0.0, 0.0, false};
  return {(c00 * m.r00 + c01 * m.r10 + c02 * m.r01) / det, c00 / det, true};
}

// Pairs bucketed on a square cell lattice whose cell width is at least h.
class PairIndex {
 public:
  PairIndex(const std::vector<RawCovPair>& pairs, double h) {
    cells_ = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(1.0 / h)));
    width_ = 1.0 / static_cast<double>(cells_);
    start_.assign(cells_ * cells_ + 1, 0);
    std::vector<std::size_t> cell_of(pairs.size());
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      cell_of[k] = cell(pairs[k].s) * cells_ + cell(pairs[k].t);
      ++start_[cell_of[k] + 1];
    }
    std::partial_sum(start_.begin(), start_.end(), start_.begin());
    s_.resize(pairs.size());
    t_.resize(pairs.size());
    r_.resize(pairs.size());
    auto fill = start_;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const std::size_t pos = fill[cell_of[k]]++;
      s_[pos] = pairs[k].s;
      t_[pos] = pairs[k].t;
      r_[pos] = pairs[k].r;
    }
  }

  Moments2d moments(double s0, double t0, double h) const {
    Moments2d m;
    const std::size_t a0 = cell(s0 - h), a1 = cell(s0 + h);
    const std::size_t b0 = cell(t0 - h), b1 = cell(t0 + h);
    for (std::size_t a = a0; a <= a1; ++a) {
      for (std::size_t b = b0; b <= b1; ++b) {
        const std::size_t c = a * cells_ + b;
        for (std::size_t k = start_[c]; k < start_[c + 1]; ++k) {
          const double u = (s_[k] - s0) / h;
          const double v = (t_[k] - t0) / h;
          if (u <= -1.0 || u >= 1.0 || v <= -1.0 || v >= 1.0) continue;
          const double w = 0.5625 * (1.0 - u * u) * (1.0 - v * v);
          m.add(u, v, w, r_[k]);
        }
      }
    }
    return m;
  }

 private:
  std::size_t cell(double x) const {
    const double c = std::floor(x / width_);
    if (c <= 0.0) return 0;
    return std::min(cells_ - 1, static_cast<std::size_t>(c));
  }

  std::size_t cells_;
  double width_;
  std::vector<std::size_t> start_;
  std::vector<double> s_, t_, r_;
};

}  // namespace

CovEstimate local_linear_cov(const std::vector<RawCovPair>& pairs, double h, const EvaluationGrid& grid) {
  if (!(h > 0.0)) throw BandwidthTooSmallError("covariance bandwidth must be positive");
  const PairIndex index(pairs, h);
  const auto m = static_cast<Eigen::Index>(grid.size());
  Eigen::MatrixXd fit(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      const double s0 = grid[static_cast<std::size_t>(i)], t0 = grid[static_cast<std::size_t>(j)];
      const auto sol = solve_local_plane(index.moments(s0, t0, h), 4);
      if (!sol.ok) {
        throw BandwidthTooSmallError("covariance bandwidth " + std::to_string(h) + " leaves a degenerate window at (" +
                                     std::to_string(s0) + ", " + std::to_string(t0) + ")");
      }
      fit(i, j) = sol.b0;
    }
  }
  CovEstimate est{grid, Eigen::MatrixXd(m, m), h, std::nullopt};
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double v = (fit(i, j) + fit(j, i)) / 2.0;
      est.matrix(i, j) = v;
      est.matrix(j, i) = v;
    }
  }
  return est;
}

double gcv_score_cov_exact(const std::vector<RawCovPair>& pairs, double h) {
  const PairIndex index(pairs, h);
  double rss = 0.0, trace = 0.0;
  for (const auto& p : pairs) {
    const auto sol = solve_local_plane(index.moments(p.s, p.t, h), 4);
    if (!sol.ok) return kInf;
    rss += (p.r - sol.b0) * (p.r - sol.b0);
    trace += 0.5625 * sol.inv00;
  }
  const double denom = 1.0 - trace / static_cast<double>(pairs.size());
  if (!(denom > 0.0)) return kInf;
  return rss / (denom * denom);
}

namespace {

Moments2d operator-(Moments2d a, const Moments2d& b) {
  a.s00 -= b.s00;
  a.s10 -= b.s10;
  a.s01 -= b.s01;
  a.s20 -= b.s20;
  a.s11 -= b.s11;
  a.s02 -= b.s02;
  a.r00 -= b.r00;
  a.r10 -= b.r10;
  a.r01 -= b.r01;
  a.count -= b.count;
  return a;
}

// Uniform mesh on [0,1]^2 refining the evaluation grid so that its spacing
// does not exceed `max_spacing`.
struct Mesh {
  Mesh(const EvaluationGrid& grid, double max_spacing) {
    refine = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(grid.delta() / max_spacing - 1e-9)));
    nodes = refine * (grid.size() - 1) + 1;
    spacing = 1.0 / static_cast<double>(nodes - 1);
  }

  std::size_t node(double x) const {
    const double pos = std::round(x / spacing);
    if (pos <= 0.0) return 0;
    return std::min(nodes - 1, static_cast<std::size_t>(pos));
  }
  std::size_t index(const RawCovPair& p) const { return node(p.s) * nodes + node(p.t); }

  std::size_t refine;
  std::size_t nodes;
  double spacing;
};

// Pair count, sum and sum of squares per mesh node.
struct Bins {
  explicit Bins(std::size_t nn) : count(nn, 0.0), sum(nn, 0.0), sum_sq(nn, 0.0) {}

  void add(std::size_t k, double r) {
    count[k] += 1.0;
    sum[k] += r;
    sum_sq[k] += r * r;
  }

  std::vector<double> count, sum, sum_sq;
};

// Kernel-weighted moment images of binned pairs: image(a,b) holds the moments
// of the local plane fit centred at mesh node (a,b).
class MomentImages {
 public:
  MomentImages(const Mesh& mesh, const Bins& bins, double h) : n_(mesh.nodes) {
    reach_ = static_cast<long>(std::ceil(h / mesh.spacing)) - 1;
    if (reach_ < 1) return;
    const std::size_t w = static_cast<std::size_t>(2 * reach_ + 1);
    std::vector<double> k0(w), k1(w), k2(w);
    for (long p = -reach_; p <= reach_; ++p) {
      const double u = static_cast<double>(p) * mesh.spacing / h;
      const double kv = epanechnikov(u);
      const auto i = static_cast<std::size_t>(p + reach_);
      k0[i] = kv;
      k1[i] = kv * u;
      k2[i] = kv * u * u;
    }
    const auto c0 = rows(bins.count, k0);
    const auto c1 = rows(bins.count, k1);
    const auto c2 = rows(bins.count, k2);
    const auto q0 = rows(bins.sum, k0);
    const auto q1 = rows(bins.sum, k1);
    s00_ = cols(c0, k0);
    s01_ = cols(c0, k1);
    s02_ = cols(c0, k2);
    s10_ = cols(c1, k0);
    s11_ = cols(c1, k1);
    s20_ = cols(c2, k0);
    r00_ = cols(q0, k0);
    r01_ = cols(q0, k1);
    r10_ = cols(q1, k0);
    // Raw pair counts inside the open support, for the >= 4 pairs rule.
    const std::vector<double> ones(w, 1.0);
    box_ = cols(rows(bins.count, ones), ones);
  }

  bool valid() const { return reach_ >= 1; }

  Moments2d at(std::size_t k) const {
    Moments2d m;
    m.s00 = s00_[k];
    m.s10 = s10_[k];
    m.s01 = s01_[k];
    m.s20 = s20_[k];
    m.s11 = s11_[k];
    m.s02 = s02_[k];
    m.r00 = r00_[k];
    m.r10 = r10_[k];
    m.r01 = r01_[k];
    m.count = static_cast<std::size_t>(std::llround(box_[k]));
    return m;
  }

 private:
  // Convolution along the first axis.
  std::vector<double> rows(const std::vector<double>& src, const std::vector<double>& k) const {
    const std::size_t n = n_;
    std::vector<double> out(n * n, 0.0);
    for (std::size_t a = 0; a < n; ++a) {
      const long lo = std::max<long>(-reach_, -static_cast<long>(a));
      const long hi = std::min<long>(reach_, static_cast<long>(n - 1 - a));
      double* dst = &out[a * n];
      for (long p = lo; p <= hi; ++p) {
        const double c = k[static_cast<std::size_t>(p + reach_)];
        if (c == 0.0) continue;
        const double* row = &src[static_cast<std::size_t>(static_cast<long>(a) + p) * n];
        for (std::size_t b = 0; b < n; ++b) dst[b] += c * row[b];
      }
    }
    return out;
  }

  // Convolution along the second axis.
  std::vector<double> cols(const std::vector<double>& src, const std::vector<double>& k) const {
    const std::size_t n = n_;
    std::vector<double> out(n * n, 0.0);
    for (std::size_t a = 0; a < n; ++a) {
      const double* row = &src[a * n];
      double* dst = &out[a * n];
      for (std::size_t b = 0; b < n; ++b) {
        const long lo = std::max<long>(-reach_, -static_cast<long>(b));
        const long hi = std::min<long>(reach_, static_cast<long>(n - 1 - b));
        double acc = 0.0;
        for (long q = lo; q <= hi; ++q) {
          acc += k[static_cast<std::size_t>(q + reach_)] * row[static_cast<std::size_t>(static_cast<long>(b) + q)];
        }
        dst[b] = acc;
      }
    }
    return out;
  }

  std::size_t n_;
  long reach_ = 0;
  std::vector<double> s00_, s10_, s01_, s20_, s11_, s02_, r00_, r10_, r01_, box_;
};

bool admissible_on_grid(const MomentImages& img, const Mesh& mesh, std::size_t grid_points) {
  for (std::size_t i = 0; i < grid_points; ++i) {
    for (std::size_t j = 0; j < grid_points; ++j) {
      if (!solve_local_plane(img.at(i * mesh.refine * mesh.nodes + j * mesh.refine), 4).ok) return false;
    }
  }
  return true;
}

double binned_gcv(const Mesh& mesh, const Bins& bins, double total, double h, std::size_t grid_points) {
  const MomentImages img(mesh, bins, h);
  if (!img.valid() || !admissible_on_grid(img, mesh, grid_points)) return kInf;
  double rss = 0.0, trace = 0.0;
  for (std::size_t k = 0; k < bins.count.size(); ++k) {
    if (bins.count[k] == 0.0) continue;
    const auto sol = solve_local_plane(img.at(k), 4);
    if (!sol.ok) return kInf;
    rss += bins.sum_sq[k] - 2.0 * sol.b0 * bins.sum[k] + bins.count[k] * sol.b0 * sol.b0;
    trace += bins.count[k] * 0.5625 * sol.inv00;
  }
  const double denom = 1.0 - trace / total;
  if (!(denom > 0.0)) return kInf;
  return std::max(rss, 0.0) / (denom * denom);
}

}  // namespace

double gcv_bandwidth_cov(const std::vector<RawCovPair>& pairs, const std::vector<double>& candidates,
                         const EvaluationGrid& grid, std::vector<GcvPoint>* trace) {
  check_candidates(candidates);
  if (pairs.empty()) throw BandwidthSelectionError("no off-diagonal raw covariances to smooth");
  const Mesh mesh(grid, 0.005);
  Bins bins(mesh.nodes * mesh.nodes);
  for (const auto& p : pairs) bins.add(mesh.index(p), p.r);
  std::vector<double> scores;
  scores.reserve(candidates.size());
  for (double h : candidates) {
    scores.push_back(binned_gcv(mesh, bins, static_cast<double>(pairs.size()), h, grid.size()));
  }
  return select_min(candidates, scores, trace, "covariance");
}

double cv_score_cov(const std::vector<RawCovPair>& pairs, double h, const EvaluationGrid& grid, std::size_t folds) {
  return cv_scores_cov(pairs, {h}, grid, folds).front();
}

std::vector<double> cv_scores_cov(const std::vector<RawCovPair>& pairs, const std::vector<double>& candidates,
                                  const EvaluationGrid& grid, std::size_t folds) {
  if (folds < 2) throw BandwidthSelectionError("subject cross-validation needs at least 2 folds");
  const Mesh mesh(grid, 0.01);
  const std::size_t nn = mesh.nodes * mesh.nodes;
  Bins total(nn);
  std::vector<Bins> held(folds, Bins(nn));
  for (const auto& p : pairs) {
    const std::size_t k = mesh.index(p);
    total.add(k, p.r);
    held[p.subject % folds].add(k, p.r);
  }
  std::vector<double> scores;
  scores.reserve(candidates.size());
  for (double h : candidates) {
    const MomentImages all(mesh, total, h);
    if (!all.valid() || !admissible_on_grid(all, mesh, grid.size())) {
      scores.push_back(kInf);
      continue;
    }
    double err = 0.0;
    for (std::size_t f = 0; f < folds && std::isfinite(err); ++f) {
      const Bins& b = held[f];
      const MomentImages part(mesh, b, h);
      for (std::size_t k = 0; k < nn; ++k) {
        if (b.count[k] == 0.0) continue;
        const auto sol = solve_local_plane(all.at(k) - part.at(k), 4);
        if (!sol.ok) {
          err = kInf;
          break;
        }
        err += b.sum_sq[k] - 2.0 * sol.b0 * b.sum[k] + b.count[k] * sol.b0 * sol.b0;
      }
    }
    scores.push_back(std::isfinite(err) ? std::max(err, 0.0) / static_cast<double>(pairs.size()) : kInf);
  }
  return scores;
}

double cv_bandwidth_cov(const std::vector<RawCovPair>& pairs, const std::vector<double>& candidates,
                        const EvaluationGrid& grid, std::size_t folds, std::vector<GcvPoint>* trace) {
  check_candidates(candidates);
  if (pairs.empty()) throw BandwidthSelectionError("no off-diagonal raw covariances to smooth");
  return select_min(candidates, cv_scores_cov(pairs, candidates, grid, folds), trace, "covariance");
}

std::vector<double> candidate_bandwidths(const FunctionalDataset& data, std::size_t count) {
  std::vector<double> t;
  t.reserve(data.total_observations());
  for (const auto& s : data.subjects()) t.insert(t.end(), s.times.begin(), s.times.end());
  std::sort(t.begin(), t.end());
  double gap = 0.0;
  for (std::size_t i = 1; i < t.size(); ++i) gap = std::max(gap, t[i] - t[i - 1]);
  const double hi = 0.5;
  const double lo = 1.5 * gap;
  if (count <= 1 || !(lo < hi)) return {std::max(lo, hi)};
  std::vector<double> out(count);
  const double step = std::log(hi / lo) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) out[i] = lo * std::exp(step * static_cast<double>(i));
  out.back() = hi;
  return out;
}

double fixed_cov_bandwidth(std::size_t n) { return std::pow(static_cast<double>(n), -0.2) / 6.0; }

bool is_dense_regular(const FunctionalDataset& data) {
  if (!data.has_common_design() || data[0].size() < 3) return false;
  try {
    (void)EvaluationGrid::from_points(data[0].times);
  } catch (const Error&) {
    return false;
  }
  return true;
}

namespace {

EvaluationGrid common_grid(const FunctionalDataset& data) {
  if (data.empty()) throw InsufficientDataError("empty dataset");
  if (!data.has_common_design()) {
    throw DesignMismatchError("dense regular path requires every subject to share one time vector");
  }
  return EvaluationGrid::from_points(data[0].times);
}

}  // namespace

MeanEstimate dense_regular_mean(const FunctionalDataset& data) {
  EvaluationGrid grid = common_grid(data);
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.size()));
  for (const auto& s : data.subjects()) {
    for (std::size_t j = 0; j < s.size(); ++j) mu[static_cast<Eigen::Index>(j)] += s.values[j];
  }
  mu /= static_cast<double>(data.size());
  return MeanEstimate{std::move(grid), std::move(mu), 0.0};
}

double rice_sigma2(const FunctionalDataset& data) {
  const EvaluationGrid grid = common_grid(data);
  const std::size_t m = grid.size();
  if (m < 3) throw InsufficientDataError("difference-based noise estimate needs at least 3 grid points");
  double acc = 0.0;
  for (const auto& s : data.subjects()) {
    for (std::size_t j = 0; j + 1 < m; ++j) {
      const double d = s.values[j + 1] - s.values[j];
      acc += d * d;
    }
  }
  const double est = acc / (2.0 * static_cast<double>(data.size()) * static_cast<double>(m - 1));
  return std::max(est, 0.0);
}

CovEstimate dense_regular_cov(const FunctionalDataset& data, const MeanEstimate& mean, double sigma2) {
  EvaluationGrid grid = common_grid(data);
  const auto m = static_cast<Eigen::Index>(grid.size());
  if (mean.values.size() != m) throw DimensionError("mean estimate does not match the common design");
  Eigen::MatrixXd centered(static_cast<Eigen::Index>(data.size()), m);
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      centered(static_cast<Eigen::Index>(i), j) = data[i].values[static_cast<std::size_t>(j)] - mean.values[j];
    }
  }
  Eigen::MatrixXd raw = (centered.transpose() * centered) / static_cast<double>(data.size());
  raw.diagonal().array() -= sigma2;
  Eigen::MatrixXd sym(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double v = (raw(i, j) + raw(j, i)) / 2.0;
      sym(i, j) = v;
      sym(j, i) = v;
    }
  }
  return CovEstimate{std::move(grid), std::move(sym), 0.0, sigma2};
}

double irregular_sigma2(const FunctionalDataset& data, const MeanEstimate& mean, const CovEstimate& cov) {
  Pooled diag;
  {
    std::vector<std::pair<double, double>> obs;
    for (const auto& s : data.subjects()) {
      for (std::size_t j = 0; j < s.size(); ++j) {
        const double e = s.values[j] - mean.at(s.times[j]);
        obs.emplace_back(s.times[j], e * e);
      }
    }
    std::stable_sort(obs.begin(), obs.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [t, v] : obs) {
      diag.t.push_back(t);
      diag.y.push_back(v);
    }
  }
  const double h = cov.bandwidth > 0.0 ? cov.bandwidth : 0.1;
  double acc = 0.0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < cov.grid.size(); ++i) {
    const double t = cov.grid[i];
    if (t < 0.25 || t > 0.75) continue;
    const auto fit = local_linear_1d(diag.t, diag.y, t, h);
    if (!fit.ok) continue;
    const auto ii = static_cast<Eigen::Index>(i);
    acc += fit.a0 - cov.matrix(ii, ii);
    ++used;
  }
  if (used == 0) return 1e-6;
  return std::max(acc / static_cast<double>(used), 1e-6);
}

}  // namespace fladle
