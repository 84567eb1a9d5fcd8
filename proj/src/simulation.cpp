#include "fladle/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <sstream>
#include <thread>

#include "fladle/criteria.hpp"
#include "fladle/error.hpp"

namespace fladle {

namespace {

enum Purpose : std::uint64_t { kTimes = 1, kScores = 2, kNoise = 3, kSplit = 4 };

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

void SimulationConfig::validate() const {
  if (n < 4) throw ConfigError("simulation needs n >= 4");
  if (m < 2) throw ConfigError("simulation needs m >= 2");
  if (d < 1) throw ConfigError("simulation needs d >= 1");
  if (eigenvalues.size() != d) throw ConfigError("expected " + std::to_string(d) + " eigenvalues");
  for (std::size_t k = 0; k < d; ++k) {
    if (!(eigenvalues[k] > 0.0)) throw ConfigError("eigenvalues must be positive");
    if (k > 0 && !(eigenvalues[k] < eigenvalues[k - 1])) throw ConfigError("eigenvalues must be strictly decreasing");
  }
  if (!(sigma2_eps >= 0.0)) throw ConfigError("noise variance must be non-negative");
  if (basis == BasisRule::AppendixA && d > 2) throw ConfigError("the rank-two preset basis has two functions");
}

std::vector<double> simple_eigenvalues() { return {9.0, 4.0, 1.0}; }
std::vector<double> complex_eigenvalues() { return {36.0, 25.0, 16.0, 9.0, 4.0, 1.0}; }

double fourier_basis(std::size_t nu, double t) {
  if (nu == 0) throw DimensionError("basis index starts at 1");
  if (nu == 1) return 1.0;
  const double k = static_cast<double>(nu / 2);
  const double arg = 2.0 * k * std::numbers::pi * t;
  return nu % 2 == 0 ? std::numbers::sqrt2 * std::sin(arg) : std::numbers::sqrt2 * std::cos(arg);
}

double paper_mean(double t) { return t + 10.0 * std::exp(-(t - 0.5) * (t - 0.5)); }

double appendix_a_mean(double t) {
  const double u = 10.0 * t;
  return u + 10.0 * std::exp(-(u - 5.0) * (u - 5.0));
}

double appendix_a_basis(std::size_t nu, double t) {
  const double arg = 2.0 * std::numbers::pi * t;
  switch (nu) {
    case 1:
      return std::numbers::sqrt2 * std::cos(arg);
    case 2:
      return -std::numbers::sqrt2 * std::sin(arg);
    default:
      throw DimensionError("the rank-two preset basis has two functions");
  }
}

SimulationConfig appendix_a_preset() {
  SimulationConfig c;
  c.name = "appendix-a";
  c.n = 200;
  c.m = 26;
  c.d = 2;
  c.eigenvalues = {25.0, 4.0};
  c.sigma2_eps = 0.01;
  c.design = TimeDesign::IrregularUniform;
  c.mean_rule = MeanRule::AppendixA;
  c.basis = BasisRule::AppendixA;
  return c;
}

double config_mean(const SimulationConfig& c, double t) {
  switch (c.mean_rule) {
    case MeanRule::Paper:
      return paper_mean(t);
    case MeanRule::AppendixA:
      return appendix_a_mean(t);
    case MeanRule::Zero:
      return 0.0;
  }
  return 0.0;
}

double config_basis(const SimulationConfig& c, std::size_t nu, double t) {
  return c.basis == BasisRule::AppendixA ? appendix_a_basis(nu, t) : fourier_basis(nu, t);
}

std::uint64_t mix_key(std::uint64_t seed, std::uint64_t replicate, std::uint64_t subject, std::uint64_t purpose) {
  std::uint64_t h = splitmix(seed);
  h = splitmix(h ^ replicate);
  h = splitmix(h ^ subject);
  return splitmix(h ^ purpose);
}

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t replicate, std::uint64_t subject, std::uint64_t purpose) {
  return std::mt19937_64(mix_key(seed, replicate, subject, purpose));
}

GeneratedData generate(const SimulationConfig& config, std::uint64_t replicate) {
  config.validate();
  GeneratedData out;
  out.d = config.d;
  out.scores.resize(static_cast<Eigen::Index>(config.n), static_cast<Eigen::Index>(config.d));
  std::vector<double> regular_times(config.m);
  for (std::size_t j = 0; j < config.m; ++j) {
    regular_times[j] = static_cast<double>(j) / static_cast<double>(config.m - 1);
  }
  const double sigma = std::sqrt(config.sigma2_eps);

  std::vector<SubjectRecord> subjects;
  subjects.reserve(config.n);
  for (std::size_t i = 0; i < config.n; ++i) {
    SubjectRecord s;
    s.id = "s" + std::to_string(i + 1);
    if (config.design == TimeDesign::Regular) {
      s.times = regular_times;
    } else {
      auto rng = stream(config.seed, replicate, i, kTimes);
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      s.times.resize(config.m);
      for (auto& t : s.times) t = unif(rng);
      std::sort(s.times.begin(), s.times.end());
    }

    auto score_rng = stream(config.seed, replicate, i, kScores);
    for (std::size_t nu = 0; nu < config.d; ++nu) {
      const double sd = std::sqrt(config.eigenvalues[nu]);
      double xi;
      if (config.score_law == ScoreLaw::Gaussian) {
        xi = std::normal_distribution<double>(0.0, sd)(score_rng);
      } else {
        xi = std::exponential_distribution<double>(1.0 / sd)(score_rng) - sd;
      }
      out.scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(nu)) = xi;
    }

    auto noise_rng = stream(config.seed, replicate, i, kNoise);
    std::normal_distribution<double> noise(0.0, 1.0);
    s.values.resize(config.m);
    for (std::size_t j = 0; j < config.m; ++j) {
      const double t = s.times[j];
      double y = config_mean(config, t);
      for (std::size_t nu = 0; nu < config.d; ++nu) {
        y += out.scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(nu)) * config_basis(config, nu + 1, t);
      }
      const double e = noise(noise_rng);
      if (config.sigma2_eps > 0.0) y += sigma * e;
      s.values[j] = y;
    }
    subjects.push_back(std::move(s));
  }
  out.data = FunctionalDataset(std::move(subjects));
  return out;
}

std::string to_string(Method m) {
  switch (m) {
    case Method::Fle:
      return "FLE";
    case Method::AicYao:
      return "AIC_YAO";
    case Method::BicPace:
      return "BIC_PACE";
    case Method::AicLi:
      return "AIC_LI";
    case Method::BicLi:
      return "BIC_LI";
  }
  return "";
}

Method parse_method(const std::string& s) {
  if (s == "fle" || s == "FLE") return Method::Fle;
  if (s == "aic-yao" || s == "AIC_YAO") return Method::AicYao;
  if (s == "bic-pace" || s == "BIC_PACE") return Method::BicPace;
  if (s == "aic-li" || s == "AIC_LI") return Method::AicLi;
  if (s == "bic-li" || s == "BIC_LI") return Method::BicLi;
  throw ConfigError("unknown method '" + s + "' (expected fle, aic-yao, bic-pace, aic-li or bic-li)");
}

std::vector<Method> all_methods() {
  return {Method::Fle, Method::AicYao, Method::BicPace, Method::AicLi, Method::BicLi};
}

std::string to_string(ScoreLaw s) { return s == ScoreLaw::Gaussian ? "gaussian" : "centered-exponential"; }
std::string to_string(TimeDesign d) { return d == TimeDesign::Regular ? "regular" : "irregular"; }

ScoreLaw parse_score_law(const std::string& s) {
  if (s == "gaussian") return ScoreLaw::Gaussian;
  if (s == "centered-exponential" || s == "exponential") return ScoreLaw::CenteredExponential;
  throw ConfigError("unknown score law '" + s + "'");
}

TimeDesign parse_time_design(const std::string& s) {
  if (s == "regular") return TimeDesign::Regular;
  if (s == "irregular" || s == "irregular-uniform") return TimeDesign::IrregularUniform;
  throw ConfigError("unknown time design '" + s + "'");
}

std::uint64_t replicate_split_seed(const SimulationConfig& config, std::size_t replicate) {
  return mix_key(config.seed, replicate, 0, kSplit);
}

std::vector<ReplicateOutcome> run_replicate(const SimulationConfig& config, std::size_t config_index,
                                            const std::vector<Method>& methods, std::size_t replicate) {
  std::vector<ReplicateOutcome> out;
  out.reserve(methods.size());
  for (Method m : methods) {
    ReplicateOutcome o;
    o.config_index = config_index;
    o.method = m;
    o.replicate = replicate;
    out.push_back(o);
  }

  std::optional<GeneratedData> gen;
  std::optional<ComponentFit> fit;
  try {
    gen = generate(config, replicate);
    fit = fit_components(gen->data, config.estimation.smoothing);
  } catch (const std::exception& e) {
    for (auto& o : out) o.failure = e.what();
    return out;
  }

  const auto& opts = config.estimation;
  for (auto& o : out) {
    try {
      if (o.method == Method::Fle) {
        o.d_hat = ladle_estimate(gen->data, *fit, opts, replicate_split_seed(config, replicate)).d_hat;
      } else {
        const std::size_t L = select_L(fit->eig, opts.fve_threshold, std::min(opts.l_cap, gen->data.size() - 1));
        Criterion c = Criterion::AicYao;
        if (o.method == Method::BicPace) c = Criterion::BicPace;
        if (o.method == Method::AicLi) c = Criterion::AicLi;
        if (o.method == Method::BicLi) c = Criterion::BicLi;
        o.d_hat = run_criterion(c, gen->data, *fit, L).k_hat;
      }
      o.correct = o.d_hat == config.d;
    } catch (const std::exception& e) {
      o.failure = e.what();
      o.d_hat = 0;
    }
  }
  return out;
}

StudyReport run_study(const std::vector<SimulationConfig>& configs, const std::vector<Method>& methods,
                      std::size_t replicates, std::size_t jobs) {
  if (replicates == 0) throw ConfigError("replicates must be at least 1");
  if (methods.empty()) throw ConfigError("no methods requested");
  for (const auto& c : configs) c.validate();

  const std::size_t tasks = configs.size() * replicates;
  std::vector<std::vector<ReplicateOutcome>> slots(tasks);
  std::vector<double> seconds(tasks, 0.0);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t t = next++; t < tasks; t = next++) {
      const std::size_t ci = t / replicates;
      const auto start = std::chrono::steady_clock::now();
      slots[t] = run_replicate(configs[ci], ci, methods, t % replicates);
      seconds[t] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
  };
  jobs = std::max<std::size_t>(1, std::min(jobs, tasks));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  StudyReport report;
  report.configs = configs;
  for (std::size_t ci = 0; ci < configs.size(); ++ci) {
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
      StudyCell cell;
      cell.config_index = ci;
      cell.method = methods[mi];
      for (std::size_t r = 0; r < replicates; ++r) {
        const std::size_t t = ci * replicates + r;
        const ReplicateOutcome& o = slots[t][mi];
        ++cell.replicates;
        if (o.correct) ++cell.correct;
        if (!o.failure.empty()) ++cell.failures;
        ++cell.d_hat_counts[o.d_hat];
        cell.seconds += seconds[t] / static_cast<double>(methods.size());
        report.outcomes.push_back(o);
      }
      report.cells.push_back(std::move(cell));
    }
  }
  return report;
}

const StudyCell& StudyReport::cell(std::size_t config_index, Method method) const {
  for (const auto& c : cells) {
    if (c.config_index == config_index && c.method == method) return c;
  }
  throw ConfigError("no study cell for the requested config and method");
}

std::string StudyReport::csv() const {
  std::ostringstream os;
  os << "setting,method,n,m,sigma2,design,score_law,replicates,accuracy\n";
  for (const auto& cell : cells) {
    const auto& c = configs[cell.config_index];
    os << c.name << ',' << to_string(cell.method) << ',' << c.n << ',' << c.m << ',' << c.sigma2_eps << ','
       << to_string(c.design) << ',' << to_string(c.score_law) << ',' << cell.replicates << ',' << std::fixed
       << std::setprecision(3) << cell.accuracy() << std::defaultfloat << '\n';
  }
  return os.str();
}

std::string StudyReport::table() const {
  std::vector<Method> methods;
  for (const auto& cell : cells) {
    if (std::find(methods.begin(), methods.end(), cell.method) == methods.end()) methods.push_back(cell.method);
  }
  std::ostringstream os;
  os << std::left << std::setw(10) << "method";
  for (const auto& c : configs) {
    std::ostringstream head;
    head << "s2=" << c.sigma2_eps << ",n=" << c.n;
    os << std::setw(16) << head.str();
  }
  os << '\n';
  for (Method m : methods) {
    os << std::setw(10) << to_string(m);
    for (std::size_t ci = 0; ci < configs.size(); ++ci) {
      std::ostringstream val;
      const auto& cell = this->cell(ci, m);
      val << std::fixed << std::setprecision(3) << cell.accuracy();
      if (cell.failures > 0) val << " (" << cell.failures << "F)";
      os << std::setw(16) << val.str();
    }
    os << '\n';
  }
  os << '\n';
  for (std::size_t ci = 0; ci < configs.size(); ++ci) {
    const auto& c = configs[ci];
    os << "column " << ci + 1 << ": " << c.name << " m=" << c.m << ' ' << to_string(c.design) << ' '
       << to_string(c.score_law) << " d=" << c.d << '\n';
  }
  return os.str();
}

}  // namespace fladle
