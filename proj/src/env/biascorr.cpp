#include "climrl/env/biascorr.hpp"

#include <algorithm>
#include <cmath>

#include "climrl/error.hpp"

namespace climrl::env {

BiasCorrVersion biascorr_version_from_string(const std::string& s) {
  if (s == "v0") return BiasCorrVersion::v0;
  if (s == "v1") return BiasCorrVersion::v1;
  if (s == "v2") return BiasCorrVersion::v2;
  throw ConfigError("unknown bias-correction version '" + s + "'");
}

std::string to_string(BiasCorrVersion v) {
  switch (v) {
    case BiasCorrVersion::v0:
      return "v0";
    case BiasCorrVersion::v1:
      return "v1";
    case BiasCorrVersion::v2:
      return "v2";
  }
  return "v0";
}

void BiasCorrParams::validate() const {
  if (T_physics == T_observed) throw ConfigError("T_physics must differ from T_observed");
  if (!(norm_low < norm_high)) throw ConfigError("norm_low must be < norm_high");
  if (lag < 1) throw ConfigError("lag must be >= 1");
  if (max_steps < 1) throw ConfigError("max_steps must be >= 1");
  if (!std::isfinite(T_initial)) throw ConfigError("T_initial must be finite");
}

double update_temperature(double T_current, double u, const BiasCorrParams& p) {
  const double D = p.T_physics - p.T_observed;
  if (D == 0.0) throw ConfigError("T_physics equals T_observed");
  const double X = T_current + u + p.relax_a * (p.T_physics - T_current) / D;
  return (X + p.relax_b * p.T_observed / D) / (1.0 + p.relax_b / D);
}

double biascorr_reward(BiasCorrVersion version, double T_new, double T_current,
                       const BiasCorrParams& p) {
  if (version == BiasCorrVersion::v0) {
    const double D = p.T_physics - p.T_observed;
    const double e = (p.T_observed - T_new) / D * 0.1;
    return -e * e;
  }
  const double e = (p.T_observed - T_current) / (p.norm_high - p.norm_low);
  return -e * e;
}

BiasCorrEnv::BiasCorrEnv(BiasCorrVersion version, BiasCorrParams params)
    : Env(params.max_steps),
      version_(version),
      params_(params),
      obs_space_({0.0}, {1.0}),
      act_space_({-1.0}, {1.0}) {
  params_.validate();
}

std::string BiasCorrEnv::name() const { return "SimpleClimateBiasCorrection-" + to_string(version_); }

double BiasCorrEnv::normalize(double T) const {
  const double x = (T - params_.norm_low) / (params_.norm_high - params_.norm_low);
  return std::clamp(x, 0.0, 1.0);
}

std::vector<double> BiasCorrEnv::reset_state() {
  T_ = params_.T_initial;
  pending_.clear();
  return {normalize(T_)};
}

StepResult BiasCorrEnv::advance(const std::vector<double>& action, bool last_step) {
  const double T_current = T_;
  const double T_new = update_temperature(T_current, action[0], params_);
  const double r = biascorr_reward(version_, T_new, T_current, params_);
  T_ = T_new;

  StepResult out;
  out.observation = {normalize(T_)};
  out.info["temperature_K"] = {T_};
  if (version_ != BiasCorrVersion::v2) {
    out.reward = r;
    return out;
  }
  // step_index() counts this step, so the zero-based index is one less.
  const int t = step_index() - 1;
  pending_.emplace_back(t + params_.lag, r);
  double emitted = 0.0;
  while (!pending_.empty() && (last_step || pending_.front().first <= t)) {
    emitted += pending_.front().second;
    pending_.pop_front();
  }
  out.reward = emitted;
  return out;
}

}  // namespace climrl::env
