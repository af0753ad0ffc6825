#include "climrl/env/rce.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "climrl/error.hpp"

namespace climrl::env {

std::vector<double> default_pressure_levels() {
  return {1000, 925, 850, 700, 600, 500, 400, 300, 250, 200, 150, 100, 70, 50, 30, 20, 10};
}

void RcePhysicsParams::validate() const {
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  if (substeps < 1) throw ConfigError("substeps must be >= 1");
  if (!(surface_heat_capacity > 0.0)) throw ConfigError("surface heat capacity must be positive");
  if (!(T_min < T_max)) throw ConfigError("T_min must be < T_max");
  if (!(albedo >= 0.0 && albedo <= 1.0)) throw ConfigError("albedo must lie in [0, 1]");
  if (max_steps < 1) throw ConfigError("max_steps must be >= 1");
}

AtmosphericColumn make_column(const std::vector<double>& pressure, double T_isothermal) {
  if (pressure.size() < 2) throw ShapeError("column needs at least two levels");
  for (std::size_t i = 1; i < pressure.size(); ++i) {
    if (!(pressure[i] < pressure[i - 1])) throw ConfigError("pressure levels must decrease");
  }
  if (!(pressure.back() > 0.0)) throw ConfigError("pressure levels must be positive");
  AtmosphericColumn c;
  const std::size_t n = pressure.size();
  c.pressure = pressure;
  c.interfaces.resize(n + 1);
  c.interfaces[0] = pressure[0] + 0.5 * (pressure[0] - pressure[1]);
  for (std::size_t i = 1; i < n; ++i) c.interfaces[i] = 0.5 * (pressure[i - 1] + pressure[i]);
  c.interfaces[n] = 0.0;
  c.dp.resize(n);
  for (std::size_t i = 0; i < n; ++i) c.dp[i] = c.interfaces[i] - c.interfaces[i + 1];
  c.temperature.assign(n, T_isothermal);
  c.surface_temperature = T_isothermal;
  c.surface_pressure = c.interfaces[0];
  return c;
}

LongwaveResult grey_longwave_step(const AtmosphericColumn& col, double emissivity,
                                  const RcePhysicsParams& p) {
  const std::size_t n = col.levels();
  const double e = std::clamp(emissivity, 0.0, 1.0);
  LongwaveResult r;
  r.up.resize(n + 1);
  r.down.resize(n + 1);
  r.heating.resize(n);
  std::vector<double> emit(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double T2 = col.temperature[i] * col.temperature[i];
    emit[i] = e * p.sigma * T2 * T2;
  }
  const double Ts2 = col.surface_temperature * col.surface_temperature;
  r.up[0] = p.sigma * Ts2 * Ts2;
  for (std::size_t i = 0; i < n; ++i) r.up[i + 1] = (1.0 - e) * r.up[i] + emit[i];
  r.down[n] = 0.0;
  for (std::size_t i = n; i-- > 0;) r.down[i] = (1.0 - e) * r.down[i + 1] + emit[i];
  for (std::size_t i = 0; i < n; ++i) {
    const double net = (r.up[i] - r.up[i + 1]) + (r.down[i + 1] - r.down[i]);
    r.heating[i] = net * p.g / (p.cp * col.dp[i] * 100.0);
  }
  r.absorbed_shortwave = (1.0 - p.albedo) * p.insolation;
  r.olr = r.up[n];
  r.surface_heating = (r.absorbed_shortwave + r.down[0] - r.up[0]) / p.surface_heat_capacity;
  return r;
}

std::vector<double> adjustment_weights(const AtmosphericColumn& col, const RcePhysicsParams& p) {
  std::vector<double> w(col.levels() + 1);
  w[0] = p.surface_heat_capacity * p.g / (p.cp * 100.0);
  for (std::size_t i = 0; i < col.levels(); ++i) w[i + 1] = col.dp[i];
  return w;
}

namespace {

double node_pressure(const AtmosphericColumn& col, std::size_t j) {
  return j == 0 ? col.surface_pressure : col.pressure[j - 1];
}

double node_temperature(const AtmosphericColumn& col, std::size_t j) {
  return j == 0 ? col.surface_temperature : col.temperature[j - 1];
}

// Half the hydrostatic thickness factor times the critical lapse rate:
// T_j - T_{j+1} <= k (T_j + T_{j+1}) is the stability condition.
double stability_k(const AtmosphericColumn& col, std::size_t j, double lapse_rate,
                   const RcePhysicsParams& p) {
  const double ln = std::log(node_pressure(col, j) / node_pressure(col, j + 1));
  return (lapse_rate / 1000.0) * p.R * ln / (2.0 * p.g);
}

}  // namespace

double node_lapse_rate(const AtmosphericColumn& col, std::size_t j, const RcePhysicsParams& p) {
  const double T0 = node_temperature(col, j), T1 = node_temperature(col, j + 1);
  const double dz = p.R * 0.5 * (T0 + T1) / p.g *
                    std::log(node_pressure(col, j) / node_pressure(col, j + 1));
  return (T0 - T1) / dz * 1000.0;
}

int convective_adjustment(AtmosphericColumn& col, double lapse_rate, const RcePhysicsParams& p) {
  const std::size_t nodes = col.levels() + 1;
  const std::vector<double> w = adjustment_weights(col, p);
  // Critical profile shape: T_{j+1} = ratio_j * T_j, rho_0 = 1.
  std::vector<double> rho(nodes);
  rho[0] = 1.0;
  for (std::size_t j = 0; j + 1 < nodes; ++j) {
    const double k = stability_k(col, j, lapse_rate, p);
    rho[j + 1] = rho[j] * (1.0 - k) / (1.0 + k);
  }
  std::vector<double> T(nodes);
  for (std::size_t j = 0; j < nodes; ++j) T[j] = node_temperature(col, j);

  // In x = T / rho the stability condition is x_{j+1} >= x_j, so the
  // adjustment is a weighted pool-adjacent-violators pass.
  struct Block {
    std::size_t begin, end;
    double wt, wr;  // sum w*T, sum w*rho
    double x() const { return wt / wr; }
  };
  int sweeps = 0;
  for (; sweeps < 100; ++sweeps) {
    std::vector<Block> blocks;
    bool merged_any = false;
    for (std::size_t j = 0; j < nodes; ++j) {
      blocks.push_back({j, j + 1, w[j] * T[j], w[j] * rho[j]});
      while (blocks.size() > 1) {
        const Block& hi = blocks.back();
        const Block& lo = blocks[blocks.size() - 2];
        if (!(hi.x() < lo.x() * (1.0 - 1e-14))) break;
        Block m{lo.begin, hi.end, lo.wt + hi.wt, lo.wr + hi.wr};
        blocks.pop_back();
        blocks.back() = m;
        merged_any = true;
      }
    }
    if (!merged_any) break;
    for (const Block& b : blocks) {
      if (b.end - b.begin < 2) continue;
      const double c = b.x();
      for (std::size_t j = b.begin; j < b.end; ++j) T[j] = c * rho[j];
    }
  }
  col.surface_temperature = T[0];
  for (std::size_t i = 0; i < col.levels(); ++i) col.temperature[i] = T[i + 1];
  return sweeps;
}

ObservedProfile standard_atmosphere_profile(const std::vector<double>& pressure) {
  constexpr double T0 = 288.15, p0 = 1013.25, lapse = 0.0065, R = 287.05, g = 9.80665;
  constexpr double T_strat = 216.65;
  const double p_trop = p0 * std::pow(T_strat / T0, g / (R * lapse));
  ObservedProfile prof;
  prof.source = "standard-atmosphere";
  prof.pressure = pressure;
  for (double pr : pressure) {
    prof.temperature.push_back(pr >= p_trop ? T0 * std::pow(pr / p0, R * lapse / g) : T_strat);
  }
  return prof;
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void atomic_write(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot open '" + tmp + "' for writing");
    out << text;
    if (!out) throw IoError("write failed for '" + tmp + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename to '" + path + "': " + ec.message());
}

}  // namespace

ObservedProfile load_observed_profile(const std::string& path, const std::vector<double>& grid) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open observed profile '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw IoError("observed profile '" + path + "' is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "pressure_hPa,temperature_K") {
    throw IoError("observed profile header must be 'pressure_hPa,temperature_K'");
  }
  ObservedProfile prof;
  prof.source = path;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw IoError("observed profile: malformed row '" + line + "'");
    double pr = 0.0, t = 0.0;
    try {
      std::size_t used = 0;
      pr = std::stod(line.substr(0, comma), &used);
      t = std::stod(line.substr(comma + 1), &used);
    } catch (const std::exception&) {
      throw IoError("observed profile: malformed row '" + line + "'");
    }
    if (!std::isfinite(pr) || !std::isfinite(t)) throw IoError("observed profile: non-finite value");
    prof.pressure.push_back(pr);
    prof.temperature.push_back(t);
  }
  if (prof.pressure.size() != grid.size()) {
    throw IoError("observed profile has " + std::to_string(prof.pressure.size()) +
                  " rows; the level grid has " + std::to_string(grid.size()));
  }
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (std::abs(prof.pressure[i] - grid[i]) > 1e-9 * grid[i]) {
      throw IoError("observed profile level " + std::to_string(i) + " (" + fmt(prof.pressure[i]) +
                    " hPa) does not match the grid (" + fmt(grid[i]) + " hPa)");
    }
  }
  return prof;
}

void write_observed_profile(const std::string& path, const ObservedProfile& profile) {
  std::ostringstream s;
  s << "pressure_hPa,temperature_K\n";
  for (std::size_t i = 0; i < profile.pressure.size(); ++i) {
    s << fmt(profile.pressure[i]) << ',' << fmt(profile.temperature[i]) << '\n';
  }
  atomic_write(path, s.str());
}

void write_profile_export(const std::string& path, const ObservedProfile& observed,
                          const std::vector<double>& simulated) {
  if (simulated.size() != observed.pressure.size()) throw ShapeError("profile export size mismatch");
  std::ostringstream s;
  s << "pressure_hPa,temperature_K,simulated_K,difference_K\n";
  for (std::size_t i = 0; i < simulated.size(); ++i) {
    s << fmt(observed.pressure[i]) << ',' << fmt(observed.temperature[i]) << ','
      << fmt(simulated[i]) << ',' << fmt(simulated[i] - observed.temperature[i]) << '\n';
  }
  atomic_write(path, s.str());
}

RceEnv::RceEnv(RcePhysicsParams params, ObservedProfile observed)
    : Env(params.max_steps), params_(params), observed_(std::move(observed)) {
  params_.validate();
  const auto levels = default_pressure_levels();
  if (observed_.temperature.empty()) observed_ = standard_atmosphere_profile(levels);
  if (observed_.temperature.size() != levels.size()) {
    throw ShapeError("observed profile must have " + std::to_string(levels.size()) + " levels");
  }
  obs_space_ = BoxSpace(std::vector<double>(levels.size(), params_.T_min),
                        std::vector<double>(levels.size(), params_.T_max));
  act_space_ = BoxSpace({0.0, 5.5}, {1.0, 9.8});
  col_ = make_column(levels, params_.T_initial);
}

double RceEnv::cost(const std::vector<double>& temperature) const {
  double s = 0.0;
  for (std::size_t i = 0; i < temperature.size(); ++i) {
    const double d = temperature[i] - observed_.temperature[i];
    s += d * d;
  }
  return s / static_cast<double>(temperature.size());
}

std::vector<double> RceEnv::reset_state() {
  col_ = make_column(default_pressure_levels(), params_.T_initial);
  return col_.temperature;
}

StepResult RceEnv::advance(const std::vector<double>& action, bool) {
  const double eps = action[0], lapse = action[1];
  const double h = params_.dt / params_.substeps;
  for (int s = 0; s < params_.substeps; ++s) {
    const LongwaveResult lw = grey_longwave_step(col_, eps, params_);
    for (std::size_t i = 0; i < col_.levels(); ++i) col_.temperature[i] += h * lw.heating[i];
    col_.surface_temperature += h * lw.surface_heating;
    convective_adjustment(col_, lapse, params_);
  }
  for (double& t : col_.temperature) t = std::clamp(t, params_.T_min, params_.T_max);
  col_.surface_temperature = std::clamp(col_.surface_temperature, params_.T_min, params_.T_max);

  StepResult out;
  out.observation = col_.temperature;
  out.reward = -cost(col_.temperature);
  std::vector<double> diff(col_.levels());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = col_.temperature[i] - observed_.temperature[i];
  out.info["difference_K"] = std::move(diff);
  out.info["surface_temperature_K"] = {col_.surface_temperature};
  return out;
}

}  // namespace climrl::env
