// Command-line front end: simulate, study, estimate, fpca, regress, report.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fladle/config.hpp"
#include "fladle/core.hpp"
#include "fladle/criteria.hpp"
#include "fladle/error.hpp"
#include "fladle/fpca.hpp"
#include "fladle/ladle.hpp"
#include "fladle/plot.hpp"
#include "fladle/regression.hpp"
#include "fladle/simulation.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fladle;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string g_command_line;

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
}

class Manifest {
 public:
  explicit Manifest(std::string command) : start_(std::chrono::steady_clock::now()) {
    j_["command"] = std::move(command);
    j_["command_line"] = g_command_line;
    j_["version"] = kVersion;
  }
  json& operator[](const char* key) { return j_[key]; }
  void write(const fs::path& dir) {
    j_["wall_clock_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    write_text(dir / "manifest.json", j_.dump(2) + "\n");
  }

 private:
  json j_;
  std::chrono::steady_clock::time_point start_;
};

// Options shared by the commands that read a long CSV.
struct InputOptions {
  std::string path;
  std::string subject_col = "subject", time_col = "time", value_col = "value";
  bool rescale = false;

  void add(CLI::App* app, const std::string& flag, const std::string& what) {
    app->add_option(flag, path, what)->required();
    add_schema(app);
  }
  void add_schema(CLI::App* app) {
    if (app->get_option_no_throw("--subject-col")) return;
    app->add_option("--subject-col", subject_col, "subject id column")->capture_default_str();
    app->add_option("--time-col", time_col, "time column")->capture_default_str();
    app->add_option("--value-col", value_col, "value column")->capture_default_str();
    app->add_flag("--rescale", rescale, "min-max rescale times onto [0,1]");
  }
  IngestOptions ingest() const { return IngestOptions{CsvSchema{subject_col, time_col, value_col}, rescale}; }
  FunctionalDataset load(const std::string& p) const { return ingest_long_csv(p, ingest()); }
};

// Estimation flags shared by estimate, fpca and regress.
struct EstimationFlags {
  std::size_t grid_size = 51;
  double fve = 0.9999;
  std::size_t l_cap = 20;
  std::string design = "auto";
  std::optional<double> h_mu, h_g;
  bool fixed_hg = false;
  std::string cov_bandwidth = "cv";
  bool reuse_bandwidths = false;

  void add(CLI::App* app) {
    app->add_option("--grid-size", grid_size, "evaluation grid points")->capture_default_str()->check(CLI::Range(3, 2001));
    app->add_option("--fve-threshold", fve, "FVE threshold for L")->capture_default_str()->check(CLI::Range(1e-12, 1.0));
    app->add_option("--l-cap", l_cap, "hard cap on L")->capture_default_str()->check(CLI::PositiveNumber);
    app->add_option("--design", design, "auto | irregular | dense-regular")
        ->capture_default_str()
        ->check(CLI::IsMember({"auto", "irregular", "dense-regular"}));
    app->add_option("--h-mu", h_mu, "fixed mean bandwidth")->check(CLI::PositiveNumber);
    app->add_option("--h-g", h_g, "fixed covariance bandwidth")->check(CLI::PositiveNumber);
    app->add_flag("--fixed-hg", fixed_hg, "use h_G = n^(-1/5)/6");
    app->add_option("--cov-bandwidth", cov_bandwidth, "covariance bandwidth rule: cv | gcv")
        ->capture_default_str()
        ->check(CLI::IsMember({"cv", "gcv"}));
    app->add_flag("--reuse-bandwidths", reuse_bandwidths, "smooth the split halves with the full-data bandwidths");
  }

  EstimationOptions options() const {
    EstimationOptions o;
    o.smoothing.grid_size = grid_size;
    o.smoothing.design = parse_design(design);
    o.smoothing.h_mu = h_mu;
    o.smoothing.h_g = h_g;
    o.smoothing.fixed_hg = fixed_hg;
    o.smoothing.cov_rule = parse_cov_bandwidth_rule(cov_bandwidth);
    o.fve_threshold = fve;
    o.l_cap = l_cap;
    o.reselect_half_bandwidths = !reuse_bandwidths;
    return o;
  }
};

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("FLADLE_SEED")) {
    try {
      std::size_t pos = 0;
      const auto v = std::stoull(env, &pos);
      if (pos != std::string(env).size()) throw std::invalid_argument("trailing characters");
      return v;
    } catch (const std::exception&) {
      throw UsageError(std::string("FLADLE_SEED is not an unsigned integer: '") + env + "'");
    }
  }
  return 1;
}

json bandwidth_json(const Bandwidths& b) { return json{{"h_mu", b.h_mu}, {"h_g", b.h_g}}; }

std::string ladle_csv(const LadleResult& r) {
  std::ostringstream os;
  os << "ell,f,g,h,fU_raw\n";
  for (std::size_t k = 0; k < r.L; ++k) {
    os << k + 1 << ',' << num(r.f[k]) << ',' << num(r.g[k]) << ',' << num(r.h[k]) << ',' << num(r.fU_raw[k]) << '\n';
  }
  return os.str();
}

// Order selection shared by estimate and regress.
struct Selection {
  std::string method;
  std::size_t d_hat = 0;
  std::optional<LadleResult> ladle;
  std::optional<CriterionTrace> trace;
};

Selection select_order(const std::string& method, const FunctionalDataset& data, const ComponentFit& fit,
                       const EstimationOptions& opts, std::uint64_t seed) {
  Selection s;
  s.method = method;
  const Method m = parse_method(method);
  if (m == Method::Fle) {
    s.ladle = ladle_estimate(data, fit, opts, seed);
    s.d_hat = s.ladle->d_hat;
    return s;
  }
  const std::size_t L = select_L(fit.eig, opts.fve_threshold, std::min(opts.l_cap, data.size() - 1));
  Criterion c = Criterion::AicYao;
  if (m == Method::BicPace) c = Criterion::BicPace;
  if (m == Method::AicLi) c = Criterion::AicLi;
  if (m == Method::BicLi) c = Criterion::BicLi;
  s.trace = run_criterion(c, data, fit, L);
  s.d_hat = select_order_ic(*s.trace);
  return s;
}

ScoreMatrix mirror_scores(const FunctionalDataset& data, const ComponentFit& fit, std::size_t k) {
  if (is_dense_design(data, fit.eig.grid.delta())) return scores_integration(data, fit.mean, fit.eig, k);
  return scores_pace(data, fit.mean, fit.eig, std::max(fit.sigma2, 1e-6), k);
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string preset = "simple";
  std::string config;
  std::optional<std::size_t> n, m;
  std::optional<double> sigma2;
  std::optional<std::string> design, score_law;
  std::optional<std::uint64_t> seed;
  std::uint64_t replicate = 0;
  std::string out = "simulated.csv";
  std::string truth;
};

int run_simulate(const SimulateArgs& a) {
  Manifest manifest("simulate");
  SimulationConfig c;
  if (!a.config.empty()) {
    std::ifstream in(a.config);
    if (!in) throw ConfigError("cannot open config '" + a.config + "'");
    json j;
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError("config '" + a.config + "' is not valid JSON: " + e.what());
    }
    const auto list = scenarios_from_json(j);
    if (list.size() != 1) throw ConfigError("simulate needs a config that expands to exactly one scenario");
    c = list.front();
  } else if (a.preset == "appendix-a") {
    c = appendix_a_preset();
  } else {
    c.name = a.preset;
    c.eigenvalues = a.preset == "complex" ? complex_eigenvalues() : simple_eigenvalues();
    c.d = c.eigenvalues.size();
  }
  if (a.n) c.n = *a.n;
  if (a.m) c.m = *a.m;
  if (a.sigma2) c.sigma2_eps = *a.sigma2;
  if (a.design) c.design = parse_time_design(*a.design);
  if (a.score_law) c.score_law = parse_score_law(*a.score_law);
  if (a.seed) {
    c.seed = *a.seed;
  } else if (std::getenv("FLADLE_SEED")) {
    c.seed = resolve_seed(std::nullopt);
  }
  const GeneratedData g = generate(c, a.replicate);
  write_long_csv(g.data, a.out);
  if (!a.truth.empty()) {
    std::ostringstream os;
    os << "subject";
    for (std::size_t nu = 1; nu <= g.d; ++nu) os << ",xi" << nu;
    os << '\n';
    for (std::size_t i = 0; i < g.data.size(); ++i) {
      os << g.data[i].id;
      for (std::size_t nu = 0; nu < g.d; ++nu) {
        os << ',' << num(g.scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(nu)));
      }
      os << '\n';
    }
    write_text(a.truth, os.str());
  }
  const std::string cfg = to_json(c).dump();
  manifest["config"] = to_json(c);
  manifest["config_hash"] = hex64(fnv1a(cfg));
  manifest["seeds"] = json{{"config", c.seed}, {"replicate", a.replicate}};
  manifest["outputs"] = json::array({fs::path(a.out).filename().string()});
  manifest.write(fs::path(a.out).parent_path().empty() ? fs::path(".") : fs::path(a.out).parent_path());
  std::cout << "wrote " << g.data.size() << " subjects (" << g.data.total_observations() << " rows) to " << a.out
            << '\n';
  return 0;
}

// ------------------------------------------------------------------- study

struct StudyArgs {
  std::string config;
  std::optional<std::size_t> replicates;
  std::size_t jobs = 1;
  std::string out = "study_out";
};

int run_study_cmd(const StudyArgs& a) {
  Manifest manifest("study");
  std::ifstream in(a.config);
  if (!in) throw ConfigError("cannot open config '" + a.config + "'");
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  json j;
  try {
    j = json::parse(bytes);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + a.config + "' is not valid JSON: " + e.what());
  }
  StudySpec spec = study_from_json(j);
  if (a.replicates) spec.replicates = *a.replicates;
  const StudyReport report = run_study(spec.scenarios, spec.methods, spec.replicates, a.jobs);

  const fs::path dir(a.out);
  fs::create_directories(dir);
  write_text(dir / "study_report.csv", report.csv());
  write_text(dir / "study_table.txt", report.table());
  std::ostringstream outcomes;
  outcomes << "setting,method,replicate,d_hat,correct,failure\n";
  for (const auto& o : report.outcomes) {
    std::string why = o.failure;
    for (auto& ch : why) {
      if (ch == ',' || ch == '\n') ch = ';';
    }
    outcomes << report.configs[o.config_index].name << ',' << to_string(o.method) << ',' << o.replicate << ','
             << o.d_hat << ',' << (o.correct ? 1 : 0) << ',' << why << '\n';
  }
  write_text(dir / "outcomes.csv", outcomes.str());

  json seeds = json::array();
  for (const auto& c : spec.scenarios) seeds.push_back(json{{"scenario", c.name}, {"seed", c.seed}});
  manifest["config_hash"] = hex64(fnv1a(bytes));
  manifest["config_path"] = a.config;
  manifest["replicates"] = spec.replicates;
  manifest["jobs"] = a.jobs;
  manifest["seeds"] = seeds;
  json timing = json::array();
  for (const auto& cell : report.cells) {
    timing.push_back(json{{"scenario", report.configs[cell.config_index].name},
                          {"method", to_string(cell.method)},
                          {"seconds", cell.seconds},
                          {"failures", cell.failures}});
  }
  manifest["cells"] = timing;
  manifest["outputs"] = json::array({"study_report.csv", "study_table.txt", "outcomes.csv"});
  manifest.write(dir);
  std::cout << report.table();
  return 0;
}

// ---------------------------------------------------------------- estimate

struct EstimateArgs {
  InputOptions input;
  EstimationFlags est;
  std::optional<std::uint64_t> seed;
  std::string method = "fle";
  std::string out = "estimate_out";
  std::string plot;
};

int run_estimate(const EstimateArgs& a) {
  Manifest manifest("estimate");
  const std::uint64_t seed = resolve_seed(a.seed);
  const FunctionalDataset data = a.input.load(a.input.path);
  const EstimationOptions opts = a.est.options();
  const ComponentFit fit = fit_components(data, opts.smoothing);

  std::vector<std::string> methods;
  if (a.method == "all") {
    for (Method m : all_methods()) methods.push_back(to_string(m));
  } else {
    methods.push_back(a.method);
  }

  const fs::path dir(a.out);
  fs::create_directories(dir);
  json outputs = json::array();
  std::ostringstream method_rows, criteria_rows;
  method_rows << "method,d_hat\n";
  criteria_rows << "method,k,value,loss,penalty\n";
  json summary;
  for (const auto& name : methods) {
    const Selection s = select_order(name, data, fit, opts, seed);
    const std::string label = to_string(parse_method(name));
    method_rows << label << ',' << s.d_hat << '\n';
    if (s.ladle) {
      write_text(dir / "ladle.csv", ladle_csv(*s.ladle));
      outputs.push_back("ladle.csv");
      summary = json{{"d_hat", s.d_hat},
                     {"L", s.ladle->L},
                     {"seed", seed},
                     {"h_mu", fit.bandwidths.h_mu},
                     {"h_g", fit.bandwidths.h_g}};
      if (!a.plot.empty()) {
        write_text(a.plot, ladle_svg(*s.ladle));
        outputs.push_back(a.plot);
      }
      manifest["ladle"] = json{{"L", s.ladle->L},
                               {"L_full", s.ladle->metadata.L_full},
                               {"L_first", s.ladle->metadata.L_first},
                               {"L_second", s.ladle->metadata.L_second},
                               {"first_half", bandwidth_json(s.ladle->metadata.first)},
                               {"second_half", bandwidth_json(s.ladle->metadata.second)}};
    }
    if (s.trace) {
      for (std::size_t k = 0; k < s.trace->values.size(); ++k) {
        criteria_rows << label << ',' << k + 1 << ',' << num(s.trace->values[k]) << ',' << num(s.trace->loss[k])
                      << ',' << num(s.trace->penalty[k]) << '\n';
      }
    }
    if (methods.size() == 1) {
      std::cout << "d_hat=" << s.d_hat << '\n';
    }
  }
  if (methods.size() > 1 || !summary.contains("d_hat")) {
    write_text(dir / "methods.csv", method_rows.str());
    outputs.push_back("methods.csv");
    if (methods.size() > 1) std::cout << method_rows.str();
  }
  if (criteria_rows.str().find('\n') + 1 < criteria_rows.str().size()) {
    write_text(dir / "criteria.csv", criteria_rows.str());
    outputs.push_back("criteria.csv");
  }
  if (summary.is_null()) {
    summary = json{{"d_hat", select_order(methods.front(), data, fit, opts, seed).d_hat},
                   {"seed", seed},
                   {"h_mu", fit.bandwidths.h_mu},
                   {"h_g", fit.bandwidths.h_g}};
  }
  summary["design"] = to_string(fit.design);
  summary["sigma2"] = fit.sigma2;
  write_text(dir / "summary.json", summary.dump() + "\n");
  outputs.push_back("summary.json");
  std::cout << summary.dump() << '\n';

  manifest["input"] = a.input.path;
  manifest["seeds"] = json{{"split", seed}};
  manifest["bandwidths"] = bandwidth_json(fit.bandwidths);
  manifest["grid_size"] = fit.eig.grid.size();
  manifest["options"] = to_json(opts);
  manifest["config_hash"] = hex64(fnv1a(to_json(opts).dump()));
  manifest["outputs"] = outputs;
  manifest.write(dir);
  return 0;
}

// -------------------------------------------------------------------- fpca

struct FpcaArgs {
  InputOptions input;
  EstimationFlags est;
  std::string out = "fpca_out";
};

int run_fpca(const FpcaArgs& a) {
  Manifest manifest("fpca");
  const FunctionalDataset data = a.input.load(a.input.path);
  const EstimationOptions opts = a.est.options();
  const ComponentFit fit = fit_components(data, opts.smoothing);
  const std::size_t L = select_L(fit.eig, opts.fve_threshold, std::min(opts.l_cap, data.size() - 1));

  std::ostringstream ef, scree;
  ef << "component,t,value\n";
  scree << "component,eigenvalue,fve\n";
  const double total = fit.eig.eigenvalues.sum();
  double cum = 0.0;
  for (std::size_t nu = 0; nu < fit.eig.count(); ++nu) {
    const double lam = fit.eig.eigenvalues[static_cast<Eigen::Index>(nu)];
    cum += lam;
    scree << nu + 1 << ',' << num(lam) << ',' << num(cum / total) << '\n';
    if (nu >= L) continue;
    for (std::size_t i = 0; i < fit.eig.grid.size(); ++i) {
      ef << nu + 1 << ',' << num(fit.eig.grid[i]) << ','
         << num(fit.eig.eigenfunctions(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(nu))) << '\n';
    }
  }
  const fs::path dir(a.out);
  fs::create_directories(dir);
  write_text(dir / "eigenfunctions.csv", ef.str());
  write_text(dir / "scree.csv", scree.str());
  manifest["input"] = a.input.path;
  manifest["L"] = L;
  manifest["sigma2"] = fit.sigma2;
  manifest["design"] = to_string(fit.design);
  manifest["bandwidths"] = bandwidth_json(fit.bandwidths);
  manifest["grid_size"] = fit.eig.grid.size();
  manifest["options"] = to_json(opts);
  manifest["config_hash"] = hex64(fnv1a(to_json(opts).dump()));
  manifest["outputs"] = json::array({"eigenfunctions.csv", "scree.csv"});
  manifest.write(dir);
  std::cout << "L=" << L << " positive_eigenvalues=" << fit.eig.count() << '\n';
  return 0;
}

// ----------------------------------------------------------------- regress

struct RegressArgs {
  InputOptions input;
  std::string train, test, response;
  std::string response_col = "response";
  EstimationFlags est;
  std::optional<std::uint64_t> seed;
  std::string order = "fle";
  std::string out = "regress_out";
};

std::map<std::string, double> load_responses(const std::string& path, const std::string& id_col,
                                             const std::string& value_col) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open response file '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("response file '" + path + "' is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  const auto header = split_csv_line(line);
  auto find = [&](const std::string& name) {
    for (std::size_t k = 0; k < header.size(); ++k) {
      if (header[k] == name) return k;
    }
    throw SchemaError("response file '" + path + "' has no column '" + name + "'");
  };
  const std::size_t ic = find(id_col), vc = find(value_col);
  std::map<std::string, double> out;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() <= std::max(ic, vc)) throw ParseError(path + ": row " + std::to_string(row) + " is short");
    try {
      std::size_t pos = 0;
      const double v = std::stod(cells[vc], &pos);
      if (pos != cells[vc].size()) throw std::invalid_argument("trailing");
      out[cells[ic]] = v;
    } catch (const std::exception&) {
      throw ParseError(path + ": row " + std::to_string(row) + ": response '" + cells[vc] + "' is not numeric");
    }
  }
  return out;
}

Eigen::VectorXd responses_for(const FunctionalDataset& data, const std::map<std::string, double>& resp) {
  Eigen::VectorXd y(static_cast<Eigen::Index>(data.size()));
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto it = resp.find(data[i].id);
    if (it == resp.end()) throw SchemaError("no response for subject '" + data[i].id + "'");
    y[static_cast<Eigen::Index>(i)] = it->second;
  }
  return y;
}

int run_regress(const RegressArgs& a) {
  Manifest manifest("regress");
  const std::uint64_t seed = resolve_seed(a.seed);
  const FunctionalDataset train = a.input.load(a.train);
  const FunctionalDataset test = a.input.load(a.test);
  const auto resp = load_responses(a.response, a.input.subject_col, a.response_col);
  const Eigen::VectorXd y_train = responses_for(train, resp);
  const Eigen::VectorXd y_test = responses_for(test, resp);

  const EstimationOptions opts = a.est.options();
  const ComponentFit fit = fit_components(train, opts.smoothing);
  std::size_t d = 0;
  if (a.order.rfind("fixed:", 0) == 0) {
    try {
      d = std::stoul(a.order.substr(6));
    } catch (const std::exception&) {
      throw UsageError("--order fixed:K needs a positive integer K");
    }
    if (d == 0) throw UsageError("--order fixed:K needs K >= 1");
  } else {
    d = select_order(a.order, train, fit, opts, seed).d_hat;
  }
  const ScoreMatrix s_train = mirror_scores(train, fit, d);
  const ScoreMatrix s_test = mirror_scores(test, fit, d);
  const FpcRegressionFit model = fit_fpc_regression(s_train, y_train, d, fit.eig);
  const double pe = prediction_error(y_test, predict(model, s_test));

  const fs::path dir(a.out);
  fs::create_directories(dir);
  std::ostringstream slope;
  slope << "t,beta\n";
  for (std::size_t i = 0; i < fit.eig.grid.size(); ++i) {
    slope << num(fit.eig.grid[i]) << ',' << num(model.slope_on_grid[static_cast<Eigen::Index>(i)]) << '\n';
  }
  write_text(dir / "slope.csv", slope.str());
  const json summary{{"d_hat", d}, {"prediction_error", pe}};
  write_text(dir / "summary.json", summary.dump() + "\n");
  manifest["inputs"] = json{{"train", a.train}, {"test", a.test}, {"response", a.response}};
  manifest["order"] = a.order;
  manifest["seeds"] = json{{"split", seed}};
  manifest["bandwidths"] = bandwidth_json(fit.bandwidths);
  manifest["grid_size"] = fit.eig.grid.size();
  manifest["options"] = to_json(opts);
  manifest["config_hash"] = hex64(fnv1a(to_json(opts).dump() + a.order));
  manifest["outputs"] = json::array({"slope.csv", "summary.json"});
  manifest.write(dir);
  std::cout << summary.dump() << '\n';
  return 0;
}

// ------------------------------------------------------------------ report

struct ReportArgs {
  std::string input;
  std::string out;
};

int run_report(const ReportArgs& a) {
  std::ifstream in(a.input);
  if (!in) throw ParseError("cannot open report '" + a.input + "'");
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("report '" + a.input + "' is empty");
  const auto header = split_csv_line(line);
  const std::vector<std::string> want = {"setting", "method", "n",        "m",       "sigma2",
                                         "design",  "score_law", "replicates", "accuracy"};
  if (header != want) throw SchemaError("report '" + a.input + "' does not have the study_report.csv columns");

  std::vector<std::string> columns, methods;
  std::map<std::pair<std::string, std::string>, std::string> cell;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto c = split_csv_line(line);
    if (c.size() != want.size()) throw ParseError(a.input + ": row " + std::to_string(row) + " has wrong width");
    const std::string col = c[0] + " m=" + c[3] + " " + c[5] + " s2=" + c[4] + " n=" + c[2];
    if (std::find(columns.begin(), columns.end(), col) == columns.end()) columns.push_back(col);
    if (std::find(methods.begin(), methods.end(), c[1]) == methods.end()) methods.push_back(c[1]);
    cell[{c[1], col}] = c[8];
  }
  std::ostringstream os;
  for (std::size_t k = 0; k < columns.size(); ++k) os << "[" << k + 1 << "] " << columns[k] << '\n';
  os << '\n' << std::left << std::setw(10) << "method";
  for (std::size_t k = 0; k < columns.size(); ++k) os << std::setw(8) << ("[" + std::to_string(k + 1) + "]");
  os << '\n';
  for (const auto& m : methods) {
    os << std::setw(10) << m;
    for (const auto& col : columns) {
      const auto it = cell.find({m, col});
      os << std::setw(8) << (it == cell.end() ? "-" : it->second);
    }
    os << '\n';
  }
  if (!a.out.empty()) write_text(a.out, os.str());
  std::cout << os.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  for (int i = 0; i < argc; ++i) g_command_line += (i ? " " : "") + std::string(argv[i]);

  CLI::App app{"Rank estimation for functional data with the functional ladle estimator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "generate one synthetic dataset as long CSV");
  simulate->add_option("--preset", sim.preset, "simple | complex | appendix-a")
      ->capture_default_str()
      ->check(CLI::IsMember({"simple", "complex", "appendix-a"}));
  simulate->add_option("--config", sim.config, "scenario JSON (overrides --preset)");
  simulate->add_option("--n", sim.n, "subjects");
  simulate->add_option("--m", sim.m, "observations per subject");
  simulate->add_option("--sigma2", sim.sigma2, "noise variance");
  simulate->add_option("--design", sim.design, "regular | irregular");
  simulate->add_option("--score-law", sim.score_law, "gaussian | centered-exponential");
  simulate->add_option("--seed", sim.seed, "scenario seed (falls back to FLADLE_SEED)");
  simulate->add_option("--replicate", sim.replicate, "replicate index")->capture_default_str();
  simulate->add_option("--out", sim.out, "output CSV")->capture_default_str();
  simulate->add_option("--truth", sim.truth, "also write the true scores here");

  StudyArgs st;
  auto* study = app.add_subcommand("study", "run a Monte Carlo study from a JSON config");
  study->add_option("--config", st.config, "study JSON")->required();
  study->add_option("--replicates", st.replicates, "override the replicate count")->check(CLI::PositiveNumber);
  study->add_option("--jobs", st.jobs, "worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  study->add_option("--out", st.out, "output directory")->capture_default_str();

  EstimateArgs es;
  auto* estimate = app.add_subcommand("estimate", "estimate the rank of one dataset");
  es.input.add(estimate, "--input", "long CSV");
  es.est.add(estimate);
  estimate->add_option("--seed", es.seed, "split seed (falls back to FLADLE_SEED, then 1)");
  estimate->add_option("--method", es.method, "fle | aic-yao | bic-pace | aic-li | bic-li | all")
      ->capture_default_str()
      ->check(CLI::IsMember({"fle", "aic-yao", "bic-pace", "aic-li", "bic-li", "all"}));
  estimate->add_option("--out", es.out, "output directory")->capture_default_str();
  estimate->add_option("--plot", es.plot, "write the three-panel SVG here");

  FpcaArgs fp;
  auto* fpca = app.add_subcommand("fpca", "eigenfunctions and scree of one dataset");
  fp.input.add(fpca, "--input", "long CSV");
  fp.est.add(fpca);
  fpca->add_option("--out", fp.out, "output directory")->capture_default_str();

  RegressArgs rg;
  auto* regress = app.add_subcommand("regress", "scalar-on-function regression on FPC scores");
  regress->add_option("--train", rg.train, "training long CSV")->required();
  regress->add_option("--test", rg.test, "test long CSV")->required();
  regress->add_option("--response", rg.response, "CSV of subject,response")->required();
  regress->add_option("--response-col", rg.response_col, "response column")->capture_default_str();
  rg.input.add_schema(regress);
  rg.est.add(regress);
  regress->add_option("--seed", rg.seed, "split seed for fle");
  regress->add_option("--order", rg.order, "fle | aic-yao | bic-pace | aic-li | bic-li | fixed:K")
      ->capture_default_str();
  regress->add_option("--out", rg.out, "output directory")->capture_default_str();

  ReportArgs rp;
  auto* report = app.add_subcommand("report", "render a study_report.csv as a table");
  report->add_option("--input", rp.input, "study_report.csv")->required();
  report->add_option("--out", rp.out, "also write the table here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*simulate) return run_simulate(sim);
    if (*study) return run_study_cmd(st);
    if (*estimate) return run_estimate(es);
    if (*fpca) return run_fpca(fp);
    if (*regress) return run_regress(rg);
    if (*report) return run_report(rp);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
