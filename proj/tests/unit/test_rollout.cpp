#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>

#include "climrl/error.hpp"
#include "climrl/rl/algos.hpp"
#include "climrl/rl/distributions.hpp"
#include "climrl/rl/rollout.hpp"

using namespace climrl;
using namespace climrl::rl;

namespace {

std::vector<double> random_vector(std::size_t n, RngStream& rng, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(lo, hi);
  return v;
}

Transition make_transition(double tag) {
  return Transition{{tag, -tag}, {tag * 0.5}, tag, {tag + 1, tag - 1}, false};
}

}  // namespace

TEST(Returns, SmallCases) {
  const std::vector<double> r{1, 1, 1};
  EXPECT_EQ(discounted_returns(r, 1.0), (std::vector<double>{3, 2, 1}));
  EXPECT_EQ(discounted_returns(r, 0.0), r);
}

TEST(Returns, MatchDoubleLoopOracle) {
  RngStream rng(1);
  const auto r = random_vector(50, rng);
  const double gamma = 0.97;
  const auto got = discounted_returns(r, gamma);
  for (std::size_t t = 0; t < r.size(); ++t) {
    double g = 0.0;
    for (std::size_t k = t; k < r.size(); ++k) g += std::pow(gamma, double(k - t)) * r[k];
    EXPECT_NEAR(got[t], g, 1e-12);
  }
}

TEST(Gae, SelfConsistentValuesGiveZeroAdvantage) {
  // V_t = r_t + gamma V_{t+1} exactly.
  const double gamma = 0.9;
  const std::vector<double> r{0.5, -1.0, 2.0, 0.25};
  std::vector<double> v(5, 0.0);
  v[4] = 3.0;
  for (int t = 3; t >= 0; --t) v[t] = r[t] + gamma * v[t + 1];
  const auto g = gae(r, v, std::vector<bool>(4, false), gamma, 0.95);
  for (double a : g.advantages) EXPECT_NEAR(a, 0.0, 1e-12);
}

TEST(Gae, LambdaZeroIsOneStepTd) {
  RngStream rng(2);
  const auto r = random_vector(20, rng), v = random_vector(21, rng);
  std::vector<bool> d(20, false);
  d[7] = true;
  const auto g = gae(r, v, d, 0.99, 0.0);
  for (std::size_t t = 0; t < 20; ++t) {
    const double delta = r[t] + 0.99 * (d[t] ? 0.0 : v[t + 1]) - v[t];
    EXPECT_NEAR(g.advantages[t], delta, 1e-12);
    EXPECT_NEAR(g.returns[t], g.advantages[t] + v[t], 1e-12);
  }
}

TEST(Gae, LambdaOneTelescopes) {
  RngStream rng(3);
  const std::size_t T = 50;
  const auto r = random_vector(T, rng), v = random_vector(T + 1, rng);
  const double gamma = 0.97;
  const auto g = gae(r, v, std::vector<bool>(T, false), gamma, 1.0);
  const auto G = discounted_returns(r, gamma);
  for (std::size_t t = 0; t < T; ++t) {
    const double oracle = G[t] + std::pow(gamma, double(T - t)) * v[T] - v[t];
    EXPECT_NEAR(g.advantages[t], oracle, 1e-12);
  }
}

TEST(Gae, MatchesBruteForceOracle) {
  RngStream rng(4);
  const std::size_t T = 50;
  const double gamma = 0.99, lambda = 0.95;
  const auto r = random_vector(T, rng), v = random_vector(T + 1, rng);
  std::vector<bool> d(T, false);
  d[12] = d[30] = true;
  const auto g = gae(r, v, d, gamma, lambda);
  for (std::size_t t = 0; t < T; ++t) {
    // A_t = sum_l (gamma lambda)^l delta_{t+l}, stopping after a done.
    double a = 0.0, w = 1.0;
    for (std::size_t k = t; k < T; ++k) {
      const double delta = r[k] + gamma * (d[k] ? 0.0 : v[k + 1]) - v[k];
      a += w * delta;
      if (d[k]) break;
      w *= gamma * lambda;
    }
    EXPECT_NEAR(g.advantages[t], a, 1e-12);
  }
}

TEST(Gae, AgreesWithReturnsWhenValuesVanish) {
  RngStream rng(5);
  const auto r = random_vector(30, rng);
  const auto g = gae(r, std::vector<double>(31, 0.0), std::vector<bool>(30, false), 0.9, 1.0);
  EXPECT_EQ(g.advantages, discounted_returns(r, 0.9));
}

TEST(Gae, LengthMismatchThrows) {
  EXPECT_THROW(gae(std::vector<double>(3), std::vector<double>(3), std::vector<bool>(3), 0.9, 0.9),
               ShapeError);
}

TEST(Advantages, NormalisedToZeroMeanUnitVariance) {
  RngStream rng(6);
  auto a = random_vector(100, rng, -3, 5);
  normalize_advantages(a);
  double m = 0, s = 0;
  for (double x : a) m += x;
  m /= a.size();
  for (double x : a) s += (x - m) * (x - m);
  EXPECT_NEAR(m, 0.0, 1e-12);
  EXPECT_NEAR(s / a.size(), 1.0, 1e-6);
}

TEST(ReplayBuffer, RingOverwritesOldest) {
  ReplayBuffer buf(4, 2, 1, 1);
  for (int i = 0; i < 5; ++i) buf.push(make_transition(i));
  EXPECT_EQ(buf.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    const Transition t = buf.at(i);
    EXPECT_EQ(t.r, double(i + 1));
    EXPECT_EQ(t.s_next[1], double(i));
  }
  EXPECT_THROW(buf.sample(5), Error);
}

TEST(ReplayBuffer, MinibatchRowsAreWholeDistinctTransitions) {
  ReplayBuffer buf(10, 2, 1, 9);
  for (int i = 0; i < 10; ++i) buf.push(make_transition(i));
  const Minibatch mb = buf.sample(10);
  std::vector<double> seen;
  for (std::size_t b = 0; b < 10; ++b) {
    const double tag = mb.r[b];
    EXPECT_EQ(mb.s(b, 0), tag);
    EXPECT_EQ(mb.s(b, 1), -tag);
    EXPECT_EQ(mb.a(b, 0), tag * 0.5);
    EXPECT_EQ(mb.s_next(b, 0), tag + 1);
    seen.push_back(tag);
  }
  std::sort(seen.begin(), seen.end());
  EXPECT_EQ(std::unique(seen.begin(), seen.end()), seen.end());
}

TEST(ReplayBuffer, SamplingIsUniform) {
  ReplayBuffer buf(10, 2, 1, 42);
  for (int i = 0; i < 10; ++i) buf.push(make_transition(i));
  std::vector<double> counts(10, 0.0);
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) counts[static_cast<std::size_t>(buf.sample(1).r[0])] += 1.0;
  double chi2 = 0.0;
  const double expected = draws / 10.0;
  for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
  const boost::math::chi_squared dist(9);
  EXPECT_GT(boost::math::cdf(boost::math::complement(dist, chi2)), 0.01);
}

TEST(ReplayBuffer, SeededSamplingReproducible) {
  ReplayBuffer a(50, 2, 1, 7), b(50, 2, 1, 7);
  for (int i = 0; i < 50; ++i) {
    a.push(make_transition(i));
    b.push(make_transition(i));
  }
  for (int k = 0; k < 20; ++k) EXPECT_EQ(a.sample(16).indices, b.sample(16).indices);
}

// ---- distributions ------------------------------------------------------------

TEST(Gaussian, KlClosedFormForSharedScale) {
  const double sigma = 0.7, ls = std::log(sigma);
  for (double m1 : {-1.0, 0.0, 0.4}) {
    for (double m2 : {-0.3, 0.9}) {
      const double kl = gaussian_kl(std::vector<double>{m1}, std::vector<double>{ls},
                                    std::vector<double>{m2}, std::vector<double>{ls});
      EXPECT_NEAR(kl, (m1 - m2) * (m1 - m2) / (2 * sigma * sigma), 1e-10);
    }
  }
  const std::vector<double> m{0.3, -0.2}, l{0.1, -0.4};
  EXPECT_EQ(gaussian_kl(m, l, m, l), 0.0);
}

TEST(Gaussian, TapedKlMatchesScalar) {
  const nn::Tensor om = nn::Tensor::matrix(2, 2, {0.1, 0.2, -0.3, 0.4});
  const nn::Tensor ols = nn::Tensor::matrix(1, 2, {-0.5, 0.2});
  const nn::Tensor nm = nn::Tensor::matrix(2, 2, {0.0, 0.5, -0.1, 0.3});
  const nn::Tensor nls = nn::Tensor::matrix(1, 2, {-0.3, 0.1});
  nn::Tape t;
  const nn::Var kl = gaussian_kl(om, ols, t.constant(nm), t.constant(nls));
  for (std::size_t r = 0; r < 2; ++r) {
    const double s = gaussian_kl(om.row_span(r), ols.values(), nm.row_span(r), nls.values());
    EXPECT_NEAR(kl.value()[r], s, 1e-14);
  }
}

TEST(Gaussian, EntropyOfUnitNormal) {
  EXPECT_NEAR(gaussian_entropy(std::vector<double>{0.0}), 0.5 * std::log(2 * M_PI * M_E), 1e-10);
  EXPECT_NEAR(gaussian_entropy(std::vector<double>{0.0}), 1.4189385332, 1e-10);
}

TEST(Gaussian, LogProbMatchesDensity) {
  const double x = 0.3, m = -0.2, s = 0.8;
  const double dens = std::exp(-0.5 * std::pow((x - m) / s, 2)) / (s * std::sqrt(2 * M_PI));
  EXPECT_NEAR(gaussian_log_prob(std::vector<double>{x}, std::vector<double>{m},
                                std::vector<double>{std::log(s)}),
              std::log(dens), 1e-12);
}

TEST(Squashed, DensityIntegratesToOne) {
  boost::math::quadrature::tanh_sinh<double> integrator;
  for (auto [m, ls] : {std::pair{0.0, 0.0}, {0.8, -1.0}, {-1.5, 0.5}, {0.2, -3.0}}) {
    const double total = integrator.integrate(
        [&](double a) { return std::exp(squashed_log_prob_1d(a, m, ls)); }, -1.0, 1.0);
    EXPECT_NEAR(total, 1.0, 1e-3) << "mean " << m << " log_std " << ls;
  }
}

TEST(Squashed, Log1mTanhSqIsStable) {
  for (double u : {-30.0, -3.0, 0.0, 0.5, 4.0, 30.0}) {
    const double direct = std::log(1 - std::tanh(u) * std::tanh(u));
    if (std::abs(u) < 5) {
      EXPECT_NEAR(log1m_tanh_sq(u), direct, 1e-12);
    }
    EXPECT_TRUE(std::isfinite(log1m_tanh_sq(u)));
  }
  EXPECT_NEAR(log1m_tanh_sq(30.0), 2 * std::log(2.0) - 60.0, 1e-9);
}

TEST(ConjugateGradient, IdentitySolvesInOneIteration) {
  const std::vector<double> b{1.0, -2.0, 0.5};
  const auto r = conjugate_gradient([](const std::vector<double>& v) { return v; }, b, 10);
  EXPECT_TRUE(r.ok);
  EXPECT_EQ(r.iterations, 1);
  for (std::size_t i = 0; i < b.size(); ++i) EXPECT_NEAR(r.x[i], b[i], 1e-15);
}

TEST(ConjugateGradient, SolvesSpdSystemAndFlagsIndefinite) {
  // A = [[4,1],[1,3]]
  auto spd = [](const std::vector<double>& v) {
    return std::vector<double>{4 * v[0] + v[1], v[0] + 3 * v[1]};
  };
  const auto r = conjugate_gradient(spd, {1.0, 2.0}, 10);
  EXPECT_TRUE(r.ok);
  EXPECT_NEAR(r.x[0], 1.0 / 11.0, 1e-12);
  EXPECT_NEAR(r.x[1], 7.0 / 11.0, 1e-12);
  auto neg = [](const std::vector<double>& v) { return std::vector<double>{-v[0], -v[1]}; };
  EXPECT_FALSE(conjugate_gradient(neg, {1.0, 0.0}, 10).ok);
}
