#pragma once

#include <string>
#include <vector>

#include "climrl/env/env.hpp"

namespace climrl::env {

inline constexpr std::size_t kRceLevels = 17;

// Mandatory reanalysis levels, hPa, bottom to top.
std::vector<double> default_pressure_levels();

struct RcePhysicsParams {
  double insolation = 341.3;  // S0/4, W/m^2
  double albedo = 0.3;
  double sigma = 5.670374419e-8;
  double cp = 1004.0;
  double g = 9.80665;
  double R = 287.05;
  double dt = 86400.0;
  int substeps = 24;
  // 1 m water slab, J/(m^2 K)
  double surface_heat_capacity = 4.18e6;
  double T_initial = 250.0;
  double T_min = 100.0;
  double T_max = 400.0;
  int max_steps = 500;

  void validate() const;
};

struct AtmosphericColumn {
  std::vector<double> pressure;     // hPa, strictly decreasing
  std::vector<double> interfaces;   // hPa, size levels + 1, last is 0
  std::vector<double> dp;           // hPa per layer
  std::vector<double> temperature;  // K
  double surface_temperature = 0.0;
  double surface_pressure = 0.0;    // = interfaces.front()

  std::size_t levels() const { return pressure.size(); }
};

AtmosphericColumn make_column(const std::vector<double>& pressure, double T_isothermal);

struct LongwaveResult {
  std::vector<double> heating;   // K/s per layer
  double surface_heating = 0.0;  // K/s, includes absorbed shortwave
  std::vector<double> up;        // W/m^2 at interfaces, up[0] leaves the surface
  std::vector<double> down;      // W/m^2 at interfaces, down.back() == 0
  double olr = 0.0;
  double absorbed_shortwave = 0.0;
};

LongwaveResult grey_longwave_step(const AtmosphericColumn& col, double emissivity,
                                  const RcePhysicsParams& p);

// Heat-capacity weights used by the adjustment, in hPa-equivalent units:
// surface first, then each layer's dp.
std::vector<double> adjustment_weights(const AtmosphericColumn& col, const RcePhysicsParams& p);

// Mixes adjacent unstable nodes (surface included) to the critical lapse rate
// `lapse_rate` (K/km) while keeping the weighted mean temperature. Returns the
// number of sweeps performed.
int convective_adjustment(AtmosphericColumn& col, double lapse_rate, const RcePhysicsParams& p);

// Lapse rate (K/km) between node j and j+1, node 0 being the surface; the
// layer thickness comes from the hydrostatic relation with the pair-mean
// temperature.
double node_lapse_rate(const AtmosphericColumn& col, std::size_t j, const RcePhysicsParams& p);

struct ObservedProfile {
  std::vector<double> pressure;
  std::vector<double> temperature;
  std::string source;
};

// Standard atmosphere: 6.5 K/km from 288.15 K, isothermal 216.65 K above the
// tropopause, sampled on `pressure` hydrostatically.
ObservedProfile standard_atmosphere_profile(const std::vector<double>& pressure);
ObservedProfile load_observed_profile(const std::string& path,
                                      const std::vector<double>& grid);
void write_observed_profile(const std::string& path, const ObservedProfile& profile);
// Adds simulated_K and difference_K (simulated - observed) columns.
void write_profile_export(const std::string& path, const ObservedProfile& observed,
                          const std::vector<double>& simulated);

class RceEnv final : public Env {
 public:
  explicit RceEnv(RcePhysicsParams params = {}, ObservedProfile observed = {});

  std::string name() const override { return "RadiativeConvectiveModel-v0"; }
  const BoxSpace& observation_space() const override { return obs_space_; }
  const BoxSpace& action_space() const override { return act_space_; }
  std::unique_ptr<Env> clone() const override { return std::make_unique<RceEnv>(*this); }

  const AtmosphericColumn& column() const { return col_; }
  const ObservedProfile& observed() const { return observed_; }
  const RcePhysicsParams& params() const { return params_; }
  double cost(const std::vector<double>& temperature) const;

 protected:
  std::vector<double> reset_state() override;
  StepResult advance(const std::vector<double>& action, bool last_step) override;

 private:
  RcePhysicsParams params_;
  ObservedProfile observed_;
  BoxSpace obs_space_;
  BoxSpace act_space_;
  AtmosphericColumn col_;
};

}  // namespace climrl::env
