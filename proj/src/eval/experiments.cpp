#include "climrl/eval/experiments.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <algorithm>
#include <fstream>
#include <sstream>

#include "climrl/env/biascorr.hpp"
#include "climrl/env/rce.hpp"
#include "climrl/error.hpp"

namespace climrl::eval {

namespace {

namespace pt = boost::property_tree;

long parse_long(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  long v = 0;
  try {
    v = std::stol(text, &used);
  } catch (const std::exception&) {
    throw ConfigError("invalid integer for " + key + ": '" + text + "'");
  }
  if (used != text.size() || v <= 0) throw ConfigError("invalid value for " + key + ": '" + text + "'");
  return v;
}

double parse_double(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw ConfigError("invalid number for " + key + ": '" + text + "'");
  }
  if (used != text.size()) throw ConfigError("invalid number for " + key + ": '" + text + "'");
  return v;
}

const std::vector<std::string>& biascorr_env_keys() {
  static const std::vector<std::string> keys = {"T_observed", "T_physics", "relax_a",  "relax_b",
                                                "T_initial",  "norm_low",  "norm_high", "lag"};
  return keys;
}

const std::vector<std::string>& rce_env_keys() {
  static const std::vector<std::string> keys = {
      "insolation", "albedo",  "dt",    "substeps",        "surface_heat_capacity",
      "T_initial",  "T_min",   "T_max", "observed_profile"};
  return keys;
}

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

std::map<std::string, std::string> read_params(const pt::ptree& section, const std::string& where) {
  std::map<std::string, std::string> out;
  const auto names = rl::all_param_names();
  for (const auto& [key, value] : section) {
    if (!contains(names, key)) throw ConfigError("unknown parameter '" + key + "' in [" + where + "]");
    out[key] = value.data();
  }
  return out;
}

}  // namespace

RunConfig parse_run_config(const std::string& text, const std::string& origin) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(origin + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  RunConfig cfg;
  for (const auto& [name, section] : tree) {
    if (section.empty() && !section.data().empty()) {
      throw ConfigError(origin + ": key '" + name + "' outside a section");
    }
    if (name == "env") {
      for (const auto& [key, value] : section) {
        if (!contains(biascorr_env_keys(), key) && !contains(rce_env_keys(), key)) {
          throw ConfigError(origin + ": unknown environment key 'env." + key + "'");
        }
        cfg.env_overrides[key] = value.data();
      }
    } else if (name == "budget") {
      for (const auto& [key, value] : section) {
        const long v = parse_long(key, value.data());
        if (key == "ideal_biascorr") {
          cfg.budgets.ideal_biascorr = v;
        } else if (key == "ideal_rce") {
          cfg.budgets.ideal_rce = v;
        } else if (key == "realistic_biascorr") {
          cfg.budgets.realistic_biascorr = v;
        } else if (key == "realistic_rce") {
          cfg.budgets.realistic_rce = v;
        } else {
          throw ConfigError(origin + ": unknown budget key '" + key + "'");
        }
      }
    } else if (name.rfind("algo.", 0) == 0) {
      const rl::Algorithm a = rl::algorithm_from_string(name.substr(5));
      for (const auto& [k, v] : read_params(section, name)) cfg.algo_overrides[a][k] = v;
    } else if (name.rfind("tuned.", 0) == 0) {
      const std::string rest = name.substr(6);
      const auto dot = rest.rfind('.');
      if (dot == std::string::npos) throw ConfigError(origin + ": malformed section [" + name + "]");
      const std::string tag = rest.substr(0, dot);
      if (tag != "v0" && tag != "v1" && tag != "v2" && tag != "rce-v0") {
        throw ConfigError(origin + ": unknown environment tag in [" + name + "]");
      }
      const rl::Algorithm a = rl::algorithm_from_string(rest.substr(dot + 1));
      for (const auto& [k, v] : read_params(section, name)) cfg.tuned[tag][a][k] = v;
    } else {
      throw ConfigError(origin + ": unknown section [" + name + "]");
    }
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), path.string());
}

void merge_run_config(RunConfig& base, const RunConfig& other) {
  for (const auto& [k, v] : other.env_overrides) base.env_overrides[k] = v;
  base.budgets = other.budgets;
  for (const auto& [a, m] : other.algo_overrides) {
    for (const auto& [k, v] : m) base.algo_overrides[a][k] = v;
  }
  for (const auto& [tag, algos] : other.tuned) {
    for (const auto& [a, m] : algos) {
      for (const auto& [k, v] : m) base.tuned[tag][a][k] = v;
    }
  }
}

const std::vector<std::string>& experiment_ids() {
  static const std::vector<std::string> ids = [] {
    std::vector<std::string> v;
    for (const char* env : {"v0", "v1", "v2", "rce-v0"}) {
      const std::string ideal = std::string(env) == "rce-v0" ? "-10k" : "-60k";
      for (const char* layers : {"optim-L", "homo-64L"}) {
        v.push_back(std::string(env) + "-" + layers);
        v.push_back(std::string(env) + "-" + layers + ideal);
      }
    }
    return v;
  }();
  return ids;
}

std::string env_tag(EnvKind k) {
  switch (k) {
    case EnvKind::biascorr_v0:
      return "v0";
    case EnvKind::biascorr_v1:
      return "v1";
    case EnvKind::biascorr_v2:
      return "v2";
    case EnvKind::rce_v0:
      return "rce-v0";
  }
  return "?";
}

ExperimentSpec parse_experiment(const std::string& id) {
  if (!contains(experiment_ids(), id)) throw ConfigError("unknown experiment id '" + id + "'");
  ExperimentSpec s;
  s.id = id;
  if (id.rfind("rce-v0", 0) == 0) {
    s.env = EnvKind::rce_v0;
  } else if (id.rfind("v0", 0) == 0) {
    s.env = EnvKind::biascorr_v0;
  } else if (id.rfind("v1", 0) == 0) {
    s.env = EnvKind::biascorr_v1;
  } else {
    s.env = EnvKind::biascorr_v2;
  }
  s.env_tag = env_tag(s.env);
  s.optimised_layers = id.find("optim-L") != std::string::npos;
  s.ideal_compute = id.ends_with("-60k") || id.ends_with("-10k");
  return s;
}

long step_budget(const ExperimentSpec& spec, const Budgets& b) {
  const bool rce = spec.env == EnvKind::rce_v0;
  if (spec.ideal_compute) return rce ? b.ideal_rce : b.ideal_biascorr;
  return rce ? b.realistic_rce : b.realistic_biascorr;
}

double experiment_threshold(const ExperimentSpec& spec) { return threshold_for(spec.env).threshold; }

std::map<std::string, double> experiment_thresholds() {
  std::map<std::string, double> out;
  for (const auto& id : experiment_ids()) out[id] = experiment_threshold(parse_experiment(id));
  return out;
}

std::unique_ptr<env::Env> make_env(EnvKind kind, const std::map<std::string, std::string>& overrides) {
  if (kind == EnvKind::rce_v0) {
    env::RcePhysicsParams p;
    std::string profile_path;
    for (const auto& [k, v] : overrides) {
      if (contains(biascorr_env_keys(), k) && !contains(rce_env_keys(), k)) continue;
      if (k == "observed_profile") {
        profile_path = v;
      } else if (k == "insolation") {
        p.insolation = parse_double(k, v);
      } else if (k == "albedo") {
        p.albedo = parse_double(k, v);
      } else if (k == "dt") {
        p.dt = parse_double(k, v);
      } else if (k == "substeps") {
        p.substeps = static_cast<int>(parse_long(k, v));
      } else if (k == "surface_heat_capacity") {
        p.surface_heat_capacity = parse_double(k, v);
      } else if (k == "T_initial") {
        p.T_initial = parse_double(k, v);
      } else if (k == "T_min") {
        p.T_min = parse_double(k, v);
      } else if (k == "T_max") {
        p.T_max = parse_double(k, v);
      } else {
        throw ConfigError("unknown environment key 'env." + k + "'");
      }
    }
    p.validate();
    env::ObservedProfile observed;
    if (!profile_path.empty()) observed = env::load_observed_profile(profile_path, env::default_pressure_levels());
    return std::make_unique<env::RceEnv>(p, observed);
  }
  env::BiasCorrParams p;
  for (const auto& [k, v] : overrides) {
    if (contains(rce_env_keys(), k) && !contains(biascorr_env_keys(), k)) continue;
    if (k == "T_observed") {
      p.T_observed = parse_double(k, v);
    } else if (k == "T_physics") {
      p.T_physics = parse_double(k, v);
    } else if (k == "relax_a") {
      p.relax_a = parse_double(k, v);
    } else if (k == "relax_b") {
      p.relax_b = parse_double(k, v);
    } else if (k == "T_initial") {
      p.T_initial = parse_double(k, v);
    } else if (k == "norm_low") {
      p.norm_low = parse_double(k, v);
    } else if (k == "norm_high") {
      p.norm_high = parse_double(k, v);
    } else if (k == "lag") {
      p.lag = static_cast<int>(parse_long(k, v));
    } else {
      throw ConfigError("unknown environment key 'env." + k + "'");
    }
  }
  p.validate();
  const env::BiasCorrVersion version = kind == EnvKind::biascorr_v0   ? env::BiasCorrVersion::v0
                                       : kind == EnvKind::biascorr_v1 ? env::BiasCorrVersion::v1
                                                                      : env::BiasCorrVersion::v2;
  return std::make_unique<env::BiasCorrEnv>(version, p);
}

std::unique_ptr<env::Env> make_env(const ExperimentSpec& spec, const RunConfig& cfg) {
  return make_env(spec.env, cfg.env_overrides);
}

rl::AlgoConfig make_algo_config(rl::Algorithm a, const ExperimentSpec& spec, const RunConfig& cfg) {
  rl::AlgoConfig c = rl::default_config(a);
  if (auto it = cfg.algo_overrides.find(a); it != cfg.algo_overrides.end()) {
    for (const auto& [k, v] : it->second) rl::set_param_text(c, k, v);
  }
  if (spec.optimised_layers) {
    if (auto env_it = cfg.tuned.find(spec.env_tag); env_it != cfg.tuned.end()) {
      if (auto it = env_it->second.find(a); it != env_it->second.end()) {
        for (const auto& [k, v] : it->second) rl::set_param_text(c, k, v);
      }
    }
  } else {
    c.actor_critic_layer_size = 64;
  }
  rl::validate(c);
  return c;
}

}  // namespace climrl::eval
