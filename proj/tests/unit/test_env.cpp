#include <gtest/gtest.h>

#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "climrl/env/biascorr.hpp"
#include "climrl/env/rce.hpp"
#include "climrl/error.hpp"
#include "climrl/rng.hpp"

using namespace climrl;
using namespace climrl::env;

namespace {

std::vector<double> act(double u) { return {u}; }

double run_return(Env& env, const std::vector<std::vector<double>>& actions, std::uint64_t seed,
                  std::vector<double>* rewards = nullptr) {
  env.reset(seed);
  double total = 0.0;
  for (const auto& a : actions) {
    const StepResult r = env.step(a);
    total += r.reward;
    if (rewards) rewards->push_back(r.reward);
  }
  return total;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("climrl_test_" + name);
}

}  // namespace

// ---- env-core ---------------------------------------------------------------

TEST(BoxSpace, RejectsInvertedBounds) {
  EXPECT_THROW(BoxSpace({1.0}, {0.0}), ConfigError);
  EXPECT_THROW(BoxSpace({0.0, 0.0}, {1.0}), ShapeError);
  BoxSpace b({-1.0}, {1.0});
  EXPECT_EQ(b.clip(std::vector<double>{3.0})[0], 1.0);
  EXPECT_THROW(b.clip(std::vector<double>{0.0, 0.0}), ShapeError);
}

TEST(EnvCore, BiasCorrResetObservationIsNormalisedInitialTemperature) {
  BiasCorrEnv env(BiasCorrVersion::v0);
  const auto obs = env.reset(1);
  ASSERT_EQ(obs.size(), 1u);
  EXPECT_DOUBLE_EQ(obs[0], (320.0 - 310.0) / 20.0);
}

TEST(EnvCore, RceResetIsIsothermal) {
  RceEnv env;
  const auto obs = env.reset(3);
  ASSERT_EQ(obs.size(), 17u);
  for (double t : obs) EXPECT_EQ(t, obs[0]);
  EXPECT_EQ(env.column().surface_temperature, obs[0]);
  EXPECT_EQ(env.reset(3), obs);
}

TEST(EnvCore, EqualSeedsGiveEqualResets) {
  BiasCorrEnv a(BiasCorrVersion::v1), b(BiasCorrVersion::v1);
  EXPECT_EQ(a.reset(7), b.reset(7));
}

TEST(EnvCore, ActionBeyondBoundEqualsBound) {
  BiasCorrEnv a(BiasCorrVersion::v0), b(BiasCorrVersion::v0);
  a.reset(1);
  b.reset(1);
  const auto ra = a.step(act(5.0)), rb = b.step(act(1.0));
  EXPECT_EQ(ra.observation, rb.observation);
  EXPECT_EQ(ra.reward, rb.reward);

  RceEnv c, d;
  c.reset(1);
  d.reset(1);
  const auto rc = c.step(std::vector<double>{2.0, 20.0});
  const auto rd = d.step(std::vector<double>{1.0, 9.8});
  EXPECT_EQ(rc.observation, rd.observation);
}

TEST(EnvCore, TruncationAtCapAndStepAfterTruncationThrows) {
  BiasCorrEnv env(BiasCorrVersion::v0);
  env.reset(1);
  for (int i = 1; i <= 200; ++i) {
    const auto r = env.step(act(0.0));
    EXPECT_EQ(r.truncated, i == 200);
    EXPECT_FALSE(r.terminated);
  }
  EXPECT_THROW(env.step(act(0.0)), Error);
  env.reset(1);
  EXPECT_NO_THROW(env.step(act(0.0)));

  RceEnv rce;
  rce.reset(1);
  for (int i = 1; i <= 500; ++i) {
    const auto r = rce.step(std::vector<double>{0.1, 6.5});
    ASSERT_EQ(r.truncated, i == 500);
  }
}

TEST(EnvCore, StepBeforeResetAndWrongLengthThrow) {
  BiasCorrEnv env(BiasCorrVersion::v0);
  EXPECT_THROW(env.step(act(0.0)), Error);
  env.reset(1);
  EXPECT_THROW(env.step(std::vector<double>{0.0, 0.0}), ShapeError);
}

TEST(EnvCore, SeededTrajectoriesAreIdentical) {
  RngStream rng(5);
  std::vector<std::vector<double>> actions;
  for (int i = 0; i < 200; ++i) actions.push_back(act(rng.uniform(-1.5, 1.5)));
  for (auto v : {BiasCorrVersion::v0, BiasCorrVersion::v1, BiasCorrVersion::v2}) {
    BiasCorrEnv a(v), b(v);
    std::vector<double> ra, rb;
    EXPECT_EQ(run_return(a, actions, 9, &ra), run_return(b, actions, 9, &rb));
    EXPECT_EQ(ra, rb);
  }
}

// ---- bias correction --------------------------------------------------------

TEST(BiasCorr, FixedPointFromIndependentRootFinder) {
  const BiasCorrParams p;
  auto f = [&](double T) { return update_temperature(T, 0.0, p) - T; };
  boost::uintmax_t iters = 200;
  const auto [lo, hi] = boost::math::tools::toms748_solve(
      f, 300.0, 340.0, boost::math::tools::eps_tolerance<double>(50), iters);
  const double T_star = 0.5 * (lo + hi);
  EXPECT_LT(std::abs(update_temperature(T_star, 0.0, p) - T_star), 1e-10);
}

TEST(BiasCorr, CoefficientsOffGivesPlainIncrement) {
  BiasCorrParams p;
  p.relax_a = 0.0;
  p.relax_b = 0.0;
  EXPECT_DOUBLE_EQ(update_temperature(315.0, 0.7, p), 315.7);
}

TEST(BiasCorr, UpdateIsLinearInHeating) {
  const BiasCorrParams p;
  const double D = p.T_physics - p.T_observed;
  for (double T : {311.0, 320.0, 329.0}) {
    const double diff = update_temperature(T, 0.3 + 0.45, p) - update_temperature(T, 0.3, p);
    EXPECT_NEAR(diff, 0.45 / (1.0 + 0.1 / D), 1e-12);
  }
}

TEST(BiasCorr, DegenerateDenominatorRejected) {
  BiasCorrParams p;
  p.T_physics = p.T_observed;
  EXPECT_THROW(p.validate(), ConfigError);
  EXPECT_THROW(BiasCorrEnv(BiasCorrVersion::v0, p), ConfigError);
}

TEST(BiasCorr, V0RewardZeroAtTargetAndThresholdExample) {
  const BiasCorrParams p;
  const double D = p.T_physics - p.T_observed;
  EXPECT_EQ(biascorr_reward(BiasCorrVersion::v0, p.T_observed, 300.0, p), 0.0);
  const double T_new = p.T_observed - 0.035 * D / 0.1;
  EXPECT_NEAR(200.0 * biascorr_reward(BiasCorrVersion::v0, T_new, 0.0, p), -0.245, 1e-12);
  // v1 threshold conversion: 0.1166 normalized units per step.
  const double T_cur = p.T_observed + 0.1166 * (p.norm_high - p.norm_low);
  EXPECT_NEAR(200.0 * biascorr_reward(BiasCorrVersion::v1, 0.0, T_cur, p), -2.719, 1e-3);
  for (double T = 300; T < 340; T += 0.37) {
    EXPECT_LE(biascorr_reward(BiasCorrVersion::v0, T, 0.0, p), 0.0);
  }
}

TEST(BiasCorr, V2DelaysByLagAndFlushes) {
  RngStream rng(3);
  std::vector<std::vector<double>> actions;
  for (int i = 0; i < 200; ++i) actions.push_back(act(rng.uniform(-1, 1)));
  BiasCorrEnv v1(BiasCorrVersion::v1), v2(BiasCorrVersion::v2);
  std::vector<double> r1, r2;
  const double g1 = run_return(v1, actions, 1, &r1);
  const double g2 = run_return(v2, actions, 1, &r2);
  for (int t = 0; t < 5; ++t) EXPECT_EQ(r2[t], 0.0);
  for (int t = 5; t < 199; ++t) EXPECT_EQ(r2[t], r1[t - 5]);
  EXPECT_NEAR(g1, g2, 1e-12);
  EXPECT_EQ(v2.pending_rewards(), 0u);
}

TEST(BiasCorr, ObservationStaysInUnitIntervalOverRandomEpisodes) {
  BiasCorrEnv env(BiasCorrVersion::v0);
  RngStream rng(11);
  double lo = 1.0, hi = 0.0;
  for (int ep = 0; ep < 10000; ++ep) {
    env.reset(ep);
    // Biased random walks push the temperature far in both directions.
    const double bias = rng.uniform(-1.0, 1.0);
    for (int t = 0; t < 200; ++t) {
      const auto r = env.step(act(bias + rng.uniform(-1.0, 1.0)));
      lo = std::min(lo, r.observation[0]);
      hi = std::max(hi, r.observation[0]);
    }
  }
  EXPECT_GE(lo, 0.0);
  EXPECT_LE(hi, 1.0);
  EXPECT_LT(lo, 0.35);
  EXPECT_GT(hi, 0.95);
}

TEST(BiasCorr, ZeroActionDriftsMonotonicallyToFixedPoint) {
  const BiasCorrParams p;
  double T_star = p.T_initial;
  for (int i = 0; i < 100000; ++i) T_star = update_temperature(T_star, 0.0, p);
  BiasCorrEnv env(BiasCorrVersion::v0);
  env.reset(1);
  double prev_gap = std::abs(env.temperature() - T_star);
  for (int t = 0; t < 200; ++t) {
    env.step(act(0.0));
    const double gap = std::abs(env.temperature() - T_star);
    EXPECT_LE(gap, prev_gap);
    prev_gap = gap;
  }
}

// ---- radiative-convective column ---------------------------------------------

TEST(Rce, TransparentAtmosphereHasNoHeating) {
  const RcePhysicsParams p;
  auto col = make_column(default_pressure_levels(), 250.0);
  col.temperature[3] = 280.0;
  const auto lw = grey_longwave_step(col, 0.0, p);
  for (double h : lw.heating) EXPECT_EQ(h, 0.0);
}

TEST(Rce, OpaqueIsothermalColumnEmitsItsOwnTemperature) {
  const RcePhysicsParams p;
  auto col = make_column(default_pressure_levels(), 260.0);
  col.surface_temperature = 300.0;  // surface hidden behind opaque layers
  const auto lw = grey_longwave_step(col, 1.0, p);
  EXPECT_NEAR(lw.olr, p.sigma * std::pow(260.0, 4), 1e-12 * lw.olr);
  for (double f : lw.up) EXPECT_GE(f, 0.0);
  for (double f : lw.down) EXPECT_GE(f, 0.0);
}

TEST(Rce, EnergyBudgetCloses) {
  const RcePhysicsParams p;
  RngStream rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    auto col = make_column(default_pressure_levels(), 250.0);
    for (double& t : col.temperature) t = rng.uniform(180.0, 310.0);
    col.surface_temperature = rng.uniform(250.0, 320.0);
    const double eps = rng.uniform(0.0, 1.0);
    const auto lw = grey_longwave_step(col, eps, p);
    double storage = lw.surface_heating * p.surface_heat_capacity;
    for (std::size_t i = 0; i < col.levels(); ++i) {
      storage += lw.heating[i] * p.cp * col.dp[i] * 100.0 / p.g;
    }
    const double toa = lw.absorbed_shortwave - lw.olr;
    EXPECT_NEAR(storage, toa, 1e-6 * std::max(1.0, std::abs(toa)));
  }
}

TEST(Rce, AdjustmentLeavesStableColumnUnchanged) {
  const RcePhysicsParams p;
  auto col = make_column(default_pressure_levels(), 250.0);
  const auto std_atm = standard_atmosphere_profile(col.pressure);
  col.temperature = std_atm.temperature;
  col.surface_temperature = std_atm.temperature[0] + 0.1;
  const auto before = col;
  convective_adjustment(col, 9.8, p);
  EXPECT_EQ(col.temperature, before.temperature);
  EXPECT_EQ(col.surface_temperature, before.surface_temperature);
}

TEST(Rce, UnstablePairAdjustsToClosedForm) {
  const RcePhysicsParams p;
  auto col = make_column(default_pressure_levels(), 250.0);
  col.temperature = standard_atmosphere_profile(col.pressure).temperature;
  col.surface_temperature = col.temperature[0];
  // Warm the 50 hPa level so only the 50/30 hPa pair is unstable.
  const std::size_t lv = 13;
  ASSERT_EQ(col.pressure[lv], 50.0);
  col.temperature[lv] += 30.0;
  const auto before = col;
  const double gamma = 6.5;

  const double w0 = col.dp[lv], w1 = col.dp[lv + 1];
  const double mean = (w0 * col.temperature[lv] + w1 * col.temperature[lv + 1]) / (w0 + w1);
  const double k = gamma / 1000.0 * p.R * std::log(col.pressure[lv] / col.pressure[lv + 1]) /
                   (2.0 * p.g);
  const double ratio = (1.0 - k) / (1.0 + k);
  const double T0 = mean * (w0 + w1) / (w0 + w1 * ratio);

  convective_adjustment(col, gamma, p);
  EXPECT_NEAR(col.temperature[lv], T0, 1e-9);
  EXPECT_NEAR(col.temperature[lv + 1], T0 * ratio, 1e-9);
  EXPECT_NEAR(node_lapse_rate(col, lv + 1, p), gamma, 1e-9);
  for (std::size_t i = 0; i < col.levels(); ++i) {
    if (i != lv && i != lv + 1) {
      EXPECT_EQ(col.temperature[i], before.temperature[i]);
    }
  }
}

TEST(Rce, AdjustmentConservesEnthalpyAndIsIdempotent) {
  const RcePhysicsParams p;
  RngStream rng(17);
  for (int trial = 0; trial < 1000; ++trial) {
    auto col = make_column(default_pressure_levels(), 250.0);
    for (double& t : col.temperature) t = rng.uniform(150.0, 350.0);
    col.surface_temperature = rng.uniform(200.0, 350.0);
    const double gamma = rng.uniform(5.5, 9.8);
    const auto w = adjustment_weights(col, p);
    auto weighted_mean = [&](const AtmosphericColumn& c) {
      double s = w[0] * c.surface_temperature, ws = w[0];
      for (std::size_t i = 0; i < c.levels(); ++i) {
        s += w[i + 1] * c.temperature[i];
        ws += w[i + 1];
      }
      return s / ws;
    };
    const double m0 = weighted_mean(col);
    convective_adjustment(col, gamma, p);
    EXPECT_NEAR(weighted_mean(col), m0, 1e-10 * m0);
    for (std::size_t j = 0; j < col.levels(); ++j) {
      EXPECT_LE(node_lapse_rate(col, j, p), gamma + 1e-9);
    }
    auto twice = col;
    convective_adjustment(twice, gamma, p);
    for (std::size_t i = 0; i < col.levels(); ++i) {
      EXPECT_NEAR(twice.temperature[i], col.temperature[i], 1e-9);
    }
    EXPECT_NEAR(twice.surface_temperature, col.surface_temperature, 1e-9);
  }
}

TEST(Rce, RewardIsNegativeMeanSquaredDifference) {
  RceEnv env;
  const auto obs = env.observed().temperature;
  EXPECT_EQ(env.cost(obs), 0.0);
  auto off = obs;
  for (double& t : off) t += 9.37;
  EXPECT_NEAR(500.0 * env.cost(off), 43898.45, 1e-6);
  EXPECT_NEAR(500.0 * env.cost(off), 43900.0, 5.0);
}

TEST(Rce, StepReportsDifferencesAndNegativeReward) {
  RceEnv env;
  env.reset(1);
  const auto r = env.step(std::vector<double>{0.3, 6.5});
  EXPECT_LE(r.reward, 0.0);
  ASSERT_EQ(r.info.at("difference_K").size(), 17u);
  double sq = 0.0;
  for (double d : r.info.at("difference_K")) sq += d * d;
  EXPECT_NEAR(-sq / 17.0, r.reward, 1e-9);
}

TEST(Rce, FixedParametersApproachSteadyState) {
  RceEnv env;
  env.reset(1);
  std::vector<double> change;
  auto prev = env.column().temperature;
  for (int t = 0; t < 500; ++t) {
    const auto r = env.step(std::vector<double>{0.1, 6.5});
    double d = 0.0;
    for (std::size_t i = 0; i < prev.size(); ++i) d += std::pow(r.observation[i] - prev[i], 2);
    change.push_back(std::sqrt(d));
    prev = r.observation;
  }
  for (int t = 150; t < 500; t += 50) EXPECT_LE(change[t + 50 - 1], change[t - 1]);
  EXPECT_LT(change.back(), 1e-3 * change.front());
}

TEST(Rce, MoreEmissivityWarmsTheSurface) {
  std::vector<double> ts;
  for (double eps : {0.05, 0.15, 0.3}) {
    RceEnv env;
    env.reset(1);
    StepResult r;
    for (int t = 0; t < 500; ++t) r = env.step(std::vector<double>{eps, 6.5});
    ts.push_back(r.info.at("surface_temperature_K")[0]);
  }
  EXPECT_LT(ts[0], ts[1]);
  EXPECT_LT(ts[1], ts[2]);
}

namespace {

// Returns the number of lowest node pairs sitting on the critical lapse rate
// after checking that a radiatively controlled (sub-critical) region of at
// least `radiative` pairs lies directly above them.
std::size_t expect_convective_then_radiative(const AtmosphericColumn& col, double gamma,
                                             const RcePhysicsParams& p, std::size_t radiative) {
  std::size_t j = 0;
  while (j < col.levels() && std::abs(node_lapse_rate(col, j, p) - gamma) < 1e-6) ++j;
  EXPECT_GE(j, 3u) << "convective layer too shallow";
  EXPECT_LE(j + radiative, col.levels()) << "no radiative region";
  for (std::size_t k = j; k < std::min(col.levels(), j + radiative); ++k) {
    EXPECT_LT(node_lapse_rate(col, k, p), gamma - 0.5) << "pair " << k;
  }
  return j;
}

}  // namespace

TEST(Rce, OpaqueColumnHasConvectiveTroposphereUnderRadiativeTop) {
  RcePhysicsParams p;
  p.T_max = 2000.0;  // the 400 K limiter would otherwise clamp the opaque case
  RceEnv env(p);
  env.reset(1);
  for (int t = 0; t < 500; ++t) env.step(std::vector<double>{1.0, 6.5});
  // The two topmost black layers radiate straight to space and overturn, so
  // the radiative region is bounded above as well.
  const auto& col = env.column();
  const std::size_t j = expect_convective_then_radiative(col, 6.5, p, 8);
  EXPECT_LT(col.temperature.back(), col.temperature[j]);
}

TEST(Rce, ThinColumnHasConvectiveTroposphereUnderRadiativeTop) {
  RceEnv env;
  env.reset(1);
  for (int t = 0; t < 500; ++t) env.step(std::vector<double>{0.1, 6.5});
  const auto& col = env.column();
  const std::size_t j = expect_convective_then_radiative(col, 6.5, env.params(), 1);
  for (std::size_t k = j; k < col.levels(); ++k) {
    EXPECT_LT(node_lapse_rate(col, k, env.params()), 6.5 - 0.5);
  }
}

TEST(Rce, StandardAtmosphereProfile) {
  const auto prof = standard_atmosphere_profile(default_pressure_levels());
  EXPECT_NEAR(prof.temperature.front(), 288.0, 0.6);
  EXPECT_DOUBLE_EQ(prof.temperature.back(), 216.65);
  // Independent oracle: troposphere T = T0 (p/p0)^(R L / g).
  const double T = 288.15 * std::pow(500.0 / 1013.25, 287.05 * 0.0065 / 9.80665);
  EXPECT_NEAR(prof.temperature[5], T, 0.05);
}

TEST(Rce, ProfileFileRoundTripAndValidation) {
  const auto grid = default_pressure_levels();
  auto prof = standard_atmosphere_profile(grid);
  prof.temperature[4] += 1.0 / 3.0;
  const auto path = temp_path("profile.csv");
  write_observed_profile(path.string(), prof);
  const auto back = load_observed_profile(path.string(), grid);
  EXPECT_EQ(back.temperature, prof.temperature);

  std::ifstream in(path);
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  in.close();
  const auto short_path = temp_path("profile16.csv");
  {
    std::ofstream out(short_path);
    for (std::size_t i = 0; i + 1 < lines.size(); ++i) out << lines[i] << "\n";
  }
  EXPECT_THROW(load_observed_profile(short_path.string(), grid), IoError);
  EXPECT_THROW(load_observed_profile(temp_path("missing.csv").string(), grid), IoError);
  {
    std::ofstream out(short_path);
    for (std::size_t i = 0; i < lines.size(); ++i) {
      out << (i == 3 ? lines[i].substr(0, lines[i].find(',')) + ",nan" : lines[i]) << "\n";
    }
  }
  EXPECT_THROW(load_observed_profile(short_path.string(), grid), IoError);
  std::filesystem::remove(path);
  std::filesystem::remove(short_path);
}

TEST(Rce, ProfileExportHasDifferenceColumn) {
  const auto grid = default_pressure_levels();
  const auto prof = standard_atmosphere_profile(grid);
  auto sim = prof.temperature;
  sim[0] += 2.0;
  const auto path = temp_path("export.csv");
  write_profile_export(path.string(), prof, sim);
  std::ifstream in(path);
  std::string header, first;
  std::getline(in, header);
  std::getline(in, first);
  EXPECT_EQ(header, "pressure_hPa,temperature_K,simulated_K,difference_K");
  EXPECT_NEAR(std::stod(first.substr(first.rfind(',') + 1)), 2.0, 1e-12);
  std::filesystem::remove(path);
}
