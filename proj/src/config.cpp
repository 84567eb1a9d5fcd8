#include "fladle/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "fladle/error.hpp"

namespace fladle {

using nlohmann::json;

namespace {

const std::vector<std::string> kScenarioKeys = {"name",  "setting", "n",     "m",    "d",      "eigenvalues",
                                                "score_law", "sigma2", "design", "mean", "basis", "seed",
                                                "estimation"};
const std::vector<std::string> kEstimationKeys = {"design",  "grid_size", "fve_threshold", "l_cap",
                                                  "h_mu",    "h_g",       "fixed_hg",      "cov_bandwidth",
                                                  "cov_folds", "bandwidth_candidates", "reselect_half_bandwidths"};

void reject_unknown(const json& j, const std::vector<std::string>& keys, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(keys.begin(), keys.end(), it.key()) == keys.end()) {
      throw ConfigError("unknown key '" + it.key() + "' in " + where);
    }
  }
}

template <class T>
T get(const json& j, const char* key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + ": bad value for '" + key + "': " + e.what());
  }
}

std::vector<json> as_list(const json& v) {
  if (v.is_array()) return std::vector<json>(v.begin(), v.end());
  return {v};
}

}  // namespace

EstimationOptions estimation_from_json(const json& j, const EstimationOptions& base) {
  const std::string where = "estimation options";
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  reject_unknown(j, kEstimationKeys, where);
  EstimationOptions o = base;
  if (j.contains("design")) o.smoothing.design = parse_design(get<std::string>(j, "design", where));
  if (j.contains("grid_size")) o.smoothing.grid_size = get<std::size_t>(j, "grid_size", where);
  if (j.contains("fve_threshold")) o.fve_threshold = get<double>(j, "fve_threshold", where);
  if (j.contains("l_cap")) o.l_cap = get<std::size_t>(j, "l_cap", where);
  if (j.contains("h_mu")) o.smoothing.h_mu = get<double>(j, "h_mu", where);
  if (j.contains("h_g")) o.smoothing.h_g = get<double>(j, "h_g", where);
  if (j.contains("fixed_hg")) o.smoothing.fixed_hg = get<bool>(j, "fixed_hg", where);
  if (j.contains("cov_bandwidth")) {
    o.smoothing.cov_rule = parse_cov_bandwidth_rule(get<std::string>(j, "cov_bandwidth", where));
  }
  if (j.contains("cov_folds")) o.smoothing.cov_folds = get<std::size_t>(j, "cov_folds", where);
  if (j.contains("bandwidth_candidates")) {
    o.smoothing.bandwidth_candidates = get<std::size_t>(j, "bandwidth_candidates", where);
  }
  if (j.contains("reselect_half_bandwidths")) {
    o.reselect_half_bandwidths = get<bool>(j, "reselect_half_bandwidths", where);
  }
  if (o.smoothing.grid_size < 3) throw ConfigError("grid_size must be at least 3");
  if (!(o.fve_threshold > 0.0 && o.fve_threshold <= 1.0)) throw ConfigError("fve_threshold must lie in (0, 1]");
  if (o.l_cap < 1) throw ConfigError("l_cap must be at least 1");
  return o;
}

std::vector<SimulationConfig> scenarios_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("scenario must be an object");
  const std::string label = j.contains("name") && j["name"].is_string() ? j["name"].get<std::string>() : "scenario";
  const std::string where = "scenario '" + label + "'";
  reject_unknown(j, kScenarioKeys, where);

  SimulationConfig base;
  const std::string setting = j.value("setting", std::string("simple"));
  if (setting == "simple") {
    base.eigenvalues = simple_eigenvalues();
  } else if (setting == "complex") {
    base.eigenvalues = complex_eigenvalues();
  } else if (setting == "appendix-a") {
    base = appendix_a_preset();
  } else if (setting == "explicit") {
    if (!j.contains("eigenvalues")) throw ConfigError(where + ": setting 'explicit' needs 'eigenvalues'");
  } else {
    throw ConfigError(where + ": unknown setting '" + setting + "'");
  }
  base.name = label;
  if (j.contains("eigenvalues")) base.eigenvalues = get<std::vector<double>>(j, "eigenvalues", where);
  base.d = j.contains("d") ? get<std::size_t>(j, "d", where) : base.eigenvalues.size();
  if (j.contains("score_law")) base.score_law = parse_score_law(get<std::string>(j, "score_law", where));
  if (j.contains("design")) base.design = parse_time_design(get<std::string>(j, "design", where));
  if (j.contains("mean")) {
    const auto m = get<std::string>(j, "mean", where);
    if (m == "default") {
      base.mean_rule = MeanRule::Paper;
    } else if (m == "appendix-a") {
      base.mean_rule = MeanRule::AppendixA;
    } else if (m == "zero") {
      base.mean_rule = MeanRule::Zero;
    } else {
      throw ConfigError(where + ": unknown mean '" + m + "'");
    }
  }
  if (j.contains("basis")) {
    const auto b = get<std::string>(j, "basis", where);
    if (b == "fourier") {
      base.basis = BasisRule::Fourier;
    } else if (b == "appendix-a") {
      base.basis = BasisRule::AppendixA;
    } else {
      throw ConfigError(where + ": unknown basis '" + b + "'");
    }
  }
  if (j.contains("seed")) base.seed = get<std::uint64_t>(j, "seed", where);
  const bool explicit_fixed = j.contains("estimation") && j["estimation"].contains("fixed_hg");
  if (j.contains("estimation")) base.estimation = estimation_from_json(j["estimation"], base.estimation);

  const auto ns = j.contains("n") ? as_list(j["n"]) : std::vector<json>{json(base.n)};
  const auto ms = j.contains("m") ? as_list(j["m"]) : std::vector<json>{json(base.m)};
  const auto ss = j.contains("sigma2") ? as_list(j["sigma2"]) : std::vector<json>{json(base.sigma2_eps)};
  std::vector<SimulationConfig> out;
  for (const auto& n : ns) {
    for (const auto& m : ms) {
      for (const auto& s : ss) {
        SimulationConfig c = base;
        try {
          c.n = n.get<std::size_t>();
          c.m = m.get<std::size_t>();
          c.sigma2_eps = s.get<double>();
        } catch (const json::exception& e) {
          throw ConfigError(where + ": bad n/m/sigma2 value: " + e.what());
        }
        // Dense irregular designs use the fixed surface bandwidth unless told otherwise.
        if (!explicit_fixed && c.design == TimeDesign::IrregularUniform && c.m >= 51 && !c.estimation.smoothing.h_g) {
          c.estimation.smoothing.fixed_hg = true;
        }
        c.validate();
        out.push_back(std::move(c));
      }
    }
  }
  return out;
}

StudySpec study_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("study config must be an object");
  reject_unknown(j, {"replicates", "methods", "scenarios"}, "study config");
  StudySpec spec;
  if (j.contains("replicates")) spec.replicates = get<std::size_t>(j, "replicates", "study config");
  if (j.contains("methods")) {
    for (const auto& m : get<std::vector<std::string>>(j, "methods", "study config")) {
      if (m == "all") {
        spec.methods = all_methods();
        break;
      }
      spec.methods.push_back(parse_method(m));
    }
  } else {
    spec.methods = all_methods();
  }
  if (!j.contains("scenarios") || !j["scenarios"].is_array() || j["scenarios"].empty()) {
    throw ConfigError("study config needs a non-empty 'scenarios' array");
  }
  for (const auto& s : j["scenarios"]) {
    auto expanded = scenarios_from_json(s);
    spec.scenarios.insert(spec.scenarios.end(), expanded.begin(), expanded.end());
  }
  return spec;
}

StudySpec load_study(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return study_from_json(j);
}

json to_json(const EstimationOptions& o) {
  json j;
  j["design"] = to_string(o.smoothing.design);
  j["grid_size"] = o.smoothing.grid_size;
  j["fve_threshold"] = o.fve_threshold;
  j["l_cap"] = o.l_cap;
  j["fixed_hg"] = o.smoothing.fixed_hg;
  j["cov_bandwidth"] = to_string(o.smoothing.cov_rule);
  j["cov_folds"] = o.smoothing.cov_folds;
  j["bandwidth_candidates"] = o.smoothing.bandwidth_candidates;
  j["reselect_half_bandwidths"] = o.reselect_half_bandwidths;
  if (o.smoothing.h_mu) j["h_mu"] = *o.smoothing.h_mu;
  if (o.smoothing.h_g) j["h_g"] = *o.smoothing.h_g;
  return j;
}

json to_json(const SimulationConfig& c) {
  json j;
  j["name"] = c.name;
  j["setting"] = "explicit";
  j["n"] = c.n;
  j["m"] = c.m;
  j["d"] = c.d;
  j["eigenvalues"] = c.eigenvalues;
  j["score_law"] = to_string(c.score_law);
  j["sigma2"] = c.sigma2_eps;
  j["design"] = to_string(c.design);
  j["mean"] = c.mean_rule == MeanRule::Paper ? "default" : c.mean_rule == MeanRule::AppendixA ? "appendix-a" : "zero";
  j["basis"] = c.basis == BasisRule::Fourier ? "fourier" : "appendix-a";
  j["seed"] = c.seed;
  j["estimation"] = to_json(c.estimation);
  return j;
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace fladle
