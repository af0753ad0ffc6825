#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "climrl/nn/mlp.hpp"

namespace climrl::rl {

// Declaration order is the canonical algorithm order used for tie-breaks.
enum class Algorithm { reinforce, ddpg, dpg, td3, ppo, trpo, sac, tqc };

const std::vector<Algorithm>& all_algorithms();
std::string to_string(Algorithm a);
// Accepts lower or upper case tags ("ddpg", "DDPG").
Algorithm algorithm_from_string(const std::string& s);
std::string display_name(Algorithm a);  // "DDPG"

struct AlgoConfig {
  Algorithm algorithm = Algorithm::ddpg;

  // Tunable hyperparameters; which ones apply depends on the algorithm.
  double learning_rate = 3e-4;
  double tau = 0.005;
  int batch_size = 64;
  double exploration_noise = 0.1;
  double policy_noise = 0.2;
  double noise_clip = 0.5;
  int policy_frequency = 1;
  int target_network_frequency = 1;
  int num_minibatches = 4;
  int update_epochs = 10;
  double clip_coef = 0.2;
  double max_grad_norm = 0.5;
  double policy_lr = 3e-4;
  double q_lr = 1e-3;
  double alpha = 0.2;
  int n_quantiles = 25;
  int n_critics = 2;
  double actor_adam_lr = 3e-4;
  double critic_adam_lr = 3e-4;
  double alpha_adam_lr = 3e-4;
  int actor_critic_layer_size = 64;

  // Fixed settings, overridable from the config file.
  double gamma = 0.99;
  double gae_lambda = 0.95;
  int learning_starts = 1000;
  int buffer_size = 1000000;
  double kl_limit = 0.02;
  double vf_coef = 0.5;
  double ent_coef = 0.0;
  int cg_iters = 10;
  double cg_damping = 0.1;
  int line_search_steps = 10;
  int n_drop = 2;
  int hidden_layers = 2;
  int normalize_advantages = 1;
  int autotune_alpha = 1;
  double reward_scale = 1.0;
  double log_std_init = 0.0;
  double final_layer_scale = 1e-2;
  nn::Activation activation = nn::Activation::tanh;
};

// Algorithm defaults (before any tuning).
AlgoConfig default_config(Algorithm a);

// Tunable hyperparameter names for an algorithm, in canonical order.
const std::vector<std::string>& tunable_names(Algorithm a);
// Every name accepted by set_param/get_param.
std::vector<std::string> all_param_names();
bool is_integer_param(const std::string& name);

void set_param(AlgoConfig& cfg, const std::string& name, double value);
double get_param(const AlgoConfig& cfg, const std::string& name);
// Parses text and assigns; for "activation" accepts tanh/relu.
void set_param_text(AlgoConfig& cfg, const std::string& name, const std::string& text);

// Throws ConfigError for out-of-range values.
void validate(const AlgoConfig& cfg);

// Canonical "name=value" listing of every parameter, used for digests.
std::string canonical_text(const AlgoConfig& cfg);
// Active tunables only, as name -> value.
std::map<std::string, double> tunable_values(const AlgoConfig& cfg);

std::uint64_t fnv1a64(const std::string& text);

}  // namespace climrl::rl
