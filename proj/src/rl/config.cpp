#include "climrl/rl/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <variant>

#include "climrl/error.hpp"

namespace climrl::rl {

namespace {

using Field = std::variant<double AlgoConfig::*, int AlgoConfig::*>;

const std::vector<std::pair<std::string, Field>>& field_table() {
  static const std::vector<std::pair<std::string, Field>> table = {
      {"learning_rate", &AlgoConfig::learning_rate},
      {"tau", &AlgoConfig::tau},
      {"batch_size", &AlgoConfig::batch_size},
      {"exploration_noise", &AlgoConfig::exploration_noise},
      {"policy_noise", &AlgoConfig::policy_noise},
      {"noise_clip", &AlgoConfig::noise_clip},
      {"policy_frequency", &AlgoConfig::policy_frequency},
      {"target_network_frequency", &AlgoConfig::target_network_frequency},
      {"num_minibatches", &AlgoConfig::num_minibatches},
      {"update_epochs", &AlgoConfig::update_epochs},
      {"clip_coef", &AlgoConfig::clip_coef},
      {"max_grad_norm", &AlgoConfig::max_grad_norm},
      {"policy_lr", &AlgoConfig::policy_lr},
      {"q_lr", &AlgoConfig::q_lr},
      {"alpha", &AlgoConfig::alpha},
      {"n_quantiles", &AlgoConfig::n_quantiles},
      {"n_critics", &AlgoConfig::n_critics},
      {"actor_adam_lr", &AlgoConfig::actor_adam_lr},
      {"critic_adam_lr", &AlgoConfig::critic_adam_lr},
      {"alpha_adam_lr", &AlgoConfig::alpha_adam_lr},
      {"actor_critic_layer_size", &AlgoConfig::actor_critic_layer_size},
      {"gamma", &AlgoConfig::gamma},
      {"gae_lambda", &AlgoConfig::gae_lambda},
      {"learning_starts", &AlgoConfig::learning_starts},
      {"buffer_size", &AlgoConfig::buffer_size},
      {"kl_limit", &AlgoConfig::kl_limit},
      {"vf_coef", &AlgoConfig::vf_coef},
      {"ent_coef", &AlgoConfig::ent_coef},
      {"cg_iters", &AlgoConfig::cg_iters},
      {"cg_damping", &AlgoConfig::cg_damping},
      {"line_search_steps", &AlgoConfig::line_search_steps},
      {"n_drop", &AlgoConfig::n_drop},
      {"hidden_layers", &AlgoConfig::hidden_layers},
      {"normalize_advantages", &AlgoConfig::normalize_advantages},
      {"autotune_alpha", &AlgoConfig::autotune_alpha},
      {"reward_scale", &AlgoConfig::reward_scale},
      {"log_std_init", &AlgoConfig::log_std_init},
      {"final_layer_scale", &AlgoConfig::final_layer_scale},
  };
  return table;
}

const Field& find_field(const std::string& name) {
  for (const auto& [n, f] : field_table()) {
    if (n == name) return f;
  }
  throw ConfigError("unknown hyperparameter '" + name + "'");
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

const std::vector<Algorithm>& all_algorithms() {
  static const std::vector<Algorithm> all = {Algorithm::reinforce, Algorithm::ddpg,
                                             Algorithm::dpg,       Algorithm::td3,
                                             Algorithm::ppo,       Algorithm::trpo,
                                             Algorithm::sac,       Algorithm::tqc};
  return all;
}

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::reinforce:
      return "reinforce";
    case Algorithm::ddpg:
      return "ddpg";
    case Algorithm::dpg:
      return "dpg";
    case Algorithm::td3:
      return "td3";
    case Algorithm::ppo:
      return "ppo";
    case Algorithm::trpo:
      return "trpo";
    case Algorithm::sac:
      return "sac";
    case Algorithm::tqc:
      return "tqc";
  }
  return "?";
}

std::string display_name(Algorithm a) {
  std::string s = to_string(a);
  for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

Algorithm algorithm_from_string(const std::string& s) {
  std::string lower = s;
  for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  for (Algorithm a : all_algorithms()) {
    if (to_string(a) == lower) return a;
  }
  throw ConfigError("unknown algorithm '" + s + "'");
}

AlgoConfig default_config(Algorithm a) {
  AlgoConfig c;
  c.algorithm = a;
  switch (a) {
    case Algorithm::reinforce:
      c.learning_rate = 1e-3;
      c.log_std_init = -0.5;
      break;
    case Algorithm::dpg:
      c.learning_rate = 1e-4;
      break;
    case Algorithm::ddpg:
      break;
    case Algorithm::td3:
      c.policy_frequency = 2;
      break;
    case Algorithm::ppo:
    case Algorithm::trpo:
      c.learning_rate = 1e-3;
      c.log_std_init = -0.5;
      break;
    case Algorithm::sac:
      c.policy_frequency = 2;
      break;
    case Algorithm::tqc:
      c.policy_frequency = 1;
      break;
  }
  return c;
}

const std::vector<std::string>& tunable_names(Algorithm a) {
  static const std::map<Algorithm, std::vector<std::string>> names = {
      {Algorithm::reinforce, {"learning_rate", "actor_critic_layer_size"}},
      {Algorithm::ddpg,
       {"learning_rate", "tau", "batch_size", "exploration_noise", "policy_frequency", "noise_clip",
        "actor_critic_layer_size"}},
      {Algorithm::dpg,
       {"learning_rate", "exploration_noise", "policy_frequency", "actor_critic_layer_size"}},
      {Algorithm::td3,
       {"learning_rate", "tau", "batch_size", "policy_noise", "exploration_noise",
        "policy_frequency", "noise_clip", "actor_critic_layer_size"}},
      {Algorithm::ppo,
       {"learning_rate", "num_minibatches", "update_epochs", "clip_coef", "max_grad_norm",
        "actor_critic_layer_size"}},
      {Algorithm::trpo,
       {"learning_rate", "num_minibatches", "update_epochs", "clip_coef", "max_grad_norm",
        "actor_critic_layer_size"}},
      {Algorithm::sac,
       {"tau", "batch_size", "policy_lr", "q_lr", "policy_frequency", "target_network_frequency",
        "noise_clip", "alpha", "actor_critic_layer_size"}},
      {Algorithm::tqc,
       {"tau", "batch_size", "n_quantiles", "n_critics", "actor_adam_lr", "critic_adam_lr",
        "alpha_adam_lr", "policy_frequency", "target_network_frequency",
        "actor_critic_layer_size"}},
  };
  return names.at(a);
}

std::vector<std::string> all_param_names() {
  std::vector<std::string> out;
  for (const auto& [n, f] : field_table()) out.push_back(n);
  out.push_back("activation");
  return out;
}

bool is_integer_param(const std::string& name) {
  return std::holds_alternative<int AlgoConfig::*>(find_field(name));
}

void set_param(AlgoConfig& cfg, const std::string& name, double value) {
  if (!std::isfinite(value)) throw ConfigError("hyperparameter '" + name + "' must be finite");
  const Field& f = find_field(name);
  if (auto p = std::get_if<double AlgoConfig::*>(&f)) {
    cfg.**p = value;
  } else {
    const double r = std::round(value);
    if (r != value) throw ConfigError("hyperparameter '" + name + "' must be an integer");
    cfg.*std::get<int AlgoConfig::*>(f) = static_cast<int>(r);
  }
}

double get_param(const AlgoConfig& cfg, const std::string& name) {
  const Field& f = find_field(name);
  if (auto p = std::get_if<double AlgoConfig::*>(&f)) return cfg.**p;
  return cfg.*std::get<int AlgoConfig::*>(f);
}

void set_param_text(AlgoConfig& cfg, const std::string& name, const std::string& text) {
  if (name == "activation") {
    cfg.activation = nn::activation_from_string(text);
    return;
  }
  double v = 0.0;
  try {
    std::size_t used = 0;
    v = std::stod(text, &used);
    while (used < text.size() && std::isspace(static_cast<unsigned char>(text[used]))) ++used;
    if (used != text.size()) throw ConfigError("");
  } catch (const std::exception&) {
    throw ConfigError("hyperparameter '" + name + "': cannot parse '" + text + "'");
  }
  set_param(cfg, name, v);
}

void validate(const AlgoConfig& c) {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  for (double lr : {c.learning_rate, c.policy_lr, c.q_lr, c.actor_adam_lr, c.critic_adam_lr,
                    c.alpha_adam_lr}) {
    require(lr > 0.0, "learning rates must be positive");
  }
  require(c.tau >= 0.0 && c.tau <= 1.0, "tau must lie in [0, 1]");
  require(c.batch_size >= 1, "batch_size must be >= 1");
  require(c.exploration_noise >= 0.0 && c.policy_noise >= 0.0 && c.noise_clip >= 0.0,
          "noise scales must be non-negative");
  require(c.policy_frequency >= 1 && c.target_network_frequency >= 1,
          "update frequencies must be >= 1");
  require(c.num_minibatches >= 1 && c.update_epochs >= 1, "minibatch/epoch counts must be >= 1");
  require(c.clip_coef > 0.0, "clip_coef must be positive");
  require(c.max_grad_norm > 0.0, "max_grad_norm must be positive");
  require(c.alpha >= 0.0, "alpha must be non-negative");
  require(c.n_quantiles >= 1 && c.n_critics >= 1, "quantile/critic counts must be >= 1");
  require(c.n_drop >= 0 && c.n_drop < c.n_quantiles, "n_drop must lie in [0, n_quantiles)");
  require(c.actor_critic_layer_size >= 1, "actor_critic_layer_size must be >= 1");
  require(c.hidden_layers >= 1, "hidden_layers must be >= 1");
  require(c.gamma >= 0.0 && c.gamma <= 1.0, "gamma must lie in [0, 1]");
  require(c.gae_lambda >= 0.0 && c.gae_lambda <= 1.0, "gae_lambda must lie in [0, 1]");
  require(c.learning_starts >= 0, "learning_starts must be >= 0");
  require(c.buffer_size >= c.batch_size, "buffer_size must be >= batch_size");
  require(c.kl_limit > 0.0, "kl_limit must be positive");
  require(c.cg_iters >= 1 && c.cg_damping >= 0.0, "bad conjugate-gradient settings");
  require(c.line_search_steps >= 1, "line_search_steps must be >= 1");
  require(c.reward_scale > 0.0, "reward_scale must be positive");
}

std::string canonical_text(const AlgoConfig& cfg) {
  std::string s = "algorithm=" + to_string(cfg.algorithm) + "\n";
  for (const auto& [n, f] : field_table()) s += n + "=" + fmt(get_param(cfg, n)) + "\n";
  s += "activation=" + nn::to_string(cfg.activation) + "\n";
  return s;
}

std::map<std::string, double> tunable_values(const AlgoConfig& cfg) {
  std::map<std::string, double> out;
  for (const auto& n : tunable_names(cfg.algorithm)) out[n] = get_param(cfg, n);
  return out;
}

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace climrl::rl
