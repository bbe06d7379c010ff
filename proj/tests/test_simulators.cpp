#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "habc/blowfly.hpp"
#include "habc/csv.hpp"
#include "habc/exp_demo.hpp"
#include "habc/logistic.hpp"
#include "habc/toy.hpp"

using namespace habc;

namespace {

std::string data_file(const std::string& name) { return std::string(HABC_SOURCE_DIR) + "/data/" + name; }

}  // namespace

TEST(ExpDemo, RejectsNonPositiveTheta) {
  EXPECT_THROW(exp_demo_simulate(0.0, 1), std::domain_error);
  EXPECT_THROW(exp_demo_simulate(-1.0, 1), std::domain_error);
}

// x is (mean of unit exponentials) / theta, so theta * x is constant in
// theta for a fixed seed.
TEST(ExpDemo, CommonSeedScaling) {
  for (std::uint64_t seed : {1ull, 77ull, 123456789ull}) {
    const double a = exp_demo_simulate(0.1, seed);
    const double b = exp_demo_simulate(0.2, seed);
    EXPECT_NEAR(a / b, 2.0, 1e-14);
    for (double h : {1e-6, 1e-4, 1e-2}) {
      EXPECT_NEAR(0.15 * exp_demo_simulate(0.15, seed), (0.15 + h) * exp_demo_simulate(0.15 + h, seed), 1e-13);
    }
  }
}

TEST(ExpDemo, MonteCarloMean) {
  const double theta = 0.15;
  const int n = 100000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += exp_demo_simulate(theta, 5000 + i);
  // mean of 20 Exp(rate theta) is 1/theta with sd 1/(theta sqrt(20))
  const double se = 1.0 / (theta * std::sqrt(20.0 * n));
  EXPECT_NEAR(sum / n, 1.0 / theta, 3.0 * se);
}

TEST(ExpDemo, KolmogorovSmirnovAgainstGammaLaw) {
  const double theta = 0.13;
  const int n = 10000;
  std::vector<double> xs(n);
  for (int i = 0; i < n; ++i) xs[i] = exp_demo_simulate(theta, 90000 + i);
  std::sort(xs.begin(), xs.end());
  const GammaDistribution law(20.0, 20.0 * theta);
  double d = 0.0;
  for (int i = 0; i < n; ++i) {
    const double f = law.cdf(xs[i]);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  // asymptotic critical value at level 0.001
  EXPECT_LT(d, 1.9495 / std::sqrt(static_cast<double>(n)));
}

TEST(ExpDemo, TruePosteriorParameters) {
  const auto post = exp_demo_true_posterior(1.0, 1.0, 7.74, 20);
  EXPECT_DOUBLE_EQ(post.shape(), 21.0);
  EXPECT_NEAR(post.rate(), 155.8, 1e-12);
  const auto prior = exp_demo_true_posterior(0.1, 0.1, 7.74, 0);
  EXPECT_DOUBLE_EQ(prior.shape(), 0.1);
  EXPECT_DOUBLE_EQ(prior.rate(), 0.1);
}

// Posterior mean against quadrature of likelihood x prior. The likelihood of
// the observed mean y of n rate-theta exponentials is Gamma(n, n theta) at y.
TEST(ExpDemo, PosteriorMeanQuadratureOracle) {
  const double alpha = 0.1, beta = 0.1, y = 7.74;
  const int n = 20;
  auto unnorm = [&](double t) {
    const double loglik = n * std::log(n * t) + (n - 1) * std::log(y) - n * t * y - std::lgamma(n);
    const double logprior = alpha * std::log(beta) + (alpha - 1) * std::log(t) - beta * t - std::lgamma(alpha);
    return std::exp(loglik + logprior);
  };
  using Quad = boost::math::quadrature::gauss_kronrod<double, 61>;
  const double z = Quad::integrate(unnorm, 0.0, 2.0, 20, 1e-13);
  const double m = Quad::integrate([&](double t) { return t * unnorm(t); }, 0.0, 2.0, 20, 1e-13) / z;
  const auto post = exp_demo_true_posterior(alpha, beta, y, n);
  EXPECT_NEAR(post.mean(), m, 1e-9);
  EXPECT_NEAR(post.mean(), 20.1 / 154.9, 1e-12);
}

TEST(ExpDemo, QuantileInvertsCdf) {
  const auto post = exp_demo_true_posterior(0.1, 0.1, 7.74, 20);
  for (double p : {1e-6, 0.01, 0.5, 0.99}) EXPECT_NEAR(post.cdf(post.quantile(p)), p, 1e-12);
  EXPECT_EQ(post.cdf(std::numeric_limits<double>::infinity()), 1.0);
}

TEST(SimulatorPurity, RepeatedCallsAreBitIdentical) {
  const ExpDemoSimulator demo(0.1, 0.1);
  BlowflyConfig cfg;
  const BlowflySimulator fly(cfg, blowfly_default_prior());
  Stream s = derive_stream(4, 0);
  for (int i = 0; i < 1000; ++i) {
    const std::uint64_t seed = s.next_u64();
    const ParameterVector t{0.01 + s.uniform()};
    EXPECT_EQ(demo.simulate(t, seed), demo.simulate(t, seed));
  }
  const ParameterVector ref = blowfly_reference_params().to_vector();
  for (int i = 0; i < 50; ++i) {
    ParameterVector t = ref;
    for (std::size_t d = 0; d < 5; ++d) t[d] += 0.1 * s.normal();
    const std::uint64_t seed = s.next_u64();
    const auto a = fly.simulate(t, seed);
    const auto b = fly.simulate(t, seed);
    ASSERT_EQ(a.size(), kBlowflyStatDim);
    for (std::size_t j = 0; j < a.size(); ++j) EXPECT_EQ(std::memcmp(&a.stats[j], &b.stats[j], sizeof(double)), 0);
  }
}

namespace {

// Straight-line second implementation of the blowfly recursion and
// statistics, used as an oracle.
std::vector<double> naive_series(const ParameterVector& th, std::uint64_t seed, int horizon, int burnin, double n_init) {
  const int lag = static_cast<int>(std::round(th[5]));
  const double P = std::exp(th[0]), delta = std::exp(th[1]), n0 = std::exp(th[2]);
  const double sd = std::exp(th[3]), sp = std::exp(th[4]);
  auto unit_gamma = [&](std::uint64_t slot, double sigma) {
    const double k = 1.0 / (sigma * sigma);
    Stream st = derive_stream(seed, slot);
    return gamma_variate(st, k) / k;
  };
  std::vector<double> n(horizon, n_init);
  for (int t = lag; t < horizon - 1; ++t) {
    const double e = unit_gamma(2 * t, sp);
    const double eps = unit_gamma(2 * t + 1, sd);
    n[t + 1] = P * n[t - lag] * std::exp(-n[t - lag] / n0) * e + n[t] * std::exp(-delta * eps);
  }
  return std::vector<double>(n.begin() + burnin, n.end());
}

double block_mean(std::vector<double> v, double lo, double hi) {
  std::sort(v.begin(), v.end());
  const auto a = static_cast<std::size_t>(std::floor(lo * v.size()));
  const auto b = static_cast<std::size_t>(std::floor(hi * v.size()));
  return std::accumulate(v.begin() + a, v.begin() + b, 0.0) / static_cast<double>(b - a);
}

}  // namespace

TEST(Blowfly, DualImplementationOracle) {
  BlowflyConfig cfg;
  cfg.peak_thresholds = {1500.0, 4000.0};
  ParameterVector th = blowfly_reference_params().to_vector();
  for (std::uint64_t seed : {3ull, 20240501ull, 987654321ull}) {
    const auto series = naive_series(th, seed, cfg.horizon, cfg.burnin, cfg.initial_population);
    const auto fast = blowfly_series(blowfly_reference_params(), seed, cfg);
    ASSERT_EQ(series.size(), fast.size());
    for (std::size_t i = 0; i < series.size(); ++i) ASSERT_EQ(series[i], fast[i]) << "day " << i;

    std::vector<double> scaled, diffs;
    for (double v : series) scaled.push_back(v / 1000.0);
    for (std::size_t i = 0; i + 1 < scaled.size(); ++i) diffs.push_back(scaled[i + 1] - scaled[i]);
    std::vector<double> expect;
    const double qs[5] = {0.0, 0.25, 0.5, 0.75, 1.0};
    for (int k = 0; k < 4; ++k) expect.push_back(std::log(block_mean(scaled, qs[k], qs[k + 1])));
    for (int k = 0; k < 4; ++k) expect.push_back(block_mean(diffs, qs[k], qs[k + 1]));
    for (double thr : cfg.peak_thresholds) {
      int peaks = 0;
      for (std::size_t t = 1; t + 1 < series.size(); ++t) {
        peaks += series[t] > series[t - 1] && series[t] >= series[t + 1] && series[t] > thr;
      }
      expect.push_back(peaks);
    }
    const auto stats = blowfly_simulate(blowfly_reference_params(), seed, cfg);
    ASSERT_EQ(stats.size(), 10u);
    for (std::size_t j = 0; j < 10; ++j) EXPECT_NEAR(stats[j], expect[j], 1e-12 * std::max(1.0, std::abs(expect[j])));
  }
}

TEST(Blowfly, NoiseFreeLimitIgnoresSeed) {
  BlowflyConfig cfg;
  auto p = blowfly_reference_params();
  p.log_sigma_d = -std::numeric_limits<double>::infinity();
  p.log_sigma_p = -std::numeric_limits<double>::infinity();
  const auto a = blowfly_simulate(p, 1, cfg);
  const auto b = blowfly_simulate(p, 2, cfg);
  EXPECT_FALSE(a.degenerate);
  EXPECT_EQ(a, b);
}

TEST(Blowfly, ZeroFecundityDecaysWithoutPeaks) {
  BlowflyConfig cfg;
  auto p = blowfly_reference_params();
  p.log_p = -std::numeric_limits<double>::infinity();
  const auto series = blowfly_series(p, 5, cfg);
  ASSERT_FALSE(series.empty());
  for (std::size_t i = 1; i < series.size(); ++i) EXPECT_LT(series[i], series[i - 1]);
  const auto stats = blowfly_statistics(series, cfg);
  EXPECT_EQ(stats[8], 0.0);
  EXPECT_EQ(stats[9], 0.0);
}

TEST(Blowfly, StatisticsShapeAndPeakCounts) {
  BlowflyConfig cfg;
  const BlowflySimulator fly(cfg, blowfly_default_prior());
  Stream s = derive_stream(6, 0);
  for (int i = 0; i < 20; ++i) {
    ParameterVector t = blowfly_reference_params().to_vector();
    for (std::size_t d = 0; d < 5; ++d) t[d] += 0.3 * s.normal();
    const auto x = fly.simulate(t, s.next_u64());
    ASSERT_EQ(x.size(), 10u);
    if (x.degenerate) continue;
    for (int j = 8; j < 10; ++j) {
      EXPECT_GE(x[j], 0.0);
      EXPECT_EQ(x[j], std::floor(x[j]));
    }
  }
}

TEST(Blowfly, OverflowIsDegenerateNotACrash) {
  BlowflyConfig cfg;
  auto p = blowfly_reference_params();
  p.log_p = 800.0;
  EXPECT_TRUE(blowfly_simulate(p, 1, cfg).degenerate);
  p = blowfly_reference_params();
  p.tau = 60.0;  // lag longer than the burn-in
  EXPECT_TRUE(blowfly_simulate(p, 1, cfg).degenerate);
}

TEST(Blowfly, ThresholdsAreSeriesQuantiles) {
  std::vector<double> v(101);
  std::iota(v.begin(), v.end(), 0.0);
  const auto th = blowfly_thresholds_from_series(v);
  EXPECT_DOUBLE_EQ(th[0], 60.0);
  EXPECT_DOUBLE_EQ(th[1], 90.0);
}

TEST(Toy, LookupTable) {
  ToySimulator toy({{0.0, 1.0}, {2.0, 3.0}, {4.0, 5.0}});
  EXPECT_EQ(toy.half_width(), 1);
  EXPECT_EQ(toy.simulate({-0.9}, 1)[0], 1.0);
  EXPECT_EQ(toy.simulate({0.2}, 4)[0], 2.0);
  EXPECT_EQ(toy.simulate({1.3}, 7)[0], 5.0);
  EXPECT_TRUE(toy.simulate({1.6}, 0).degenerate);
  EXPECT_THROW(ToySimulator(std::vector<std::vector<double>>{{0.0}, {1.0}}), precondition_error);
}

class Logistic : public ::testing::Test {
 protected:
  LogisticRegressionTarget target = load_logistic_csv(data_file("digits01_8x8.csv"), true, 1.0);
};

TEST_F(Logistic, BundledDataShape) {
  EXPECT_EQ(target.rows(), 360u);
  EXPECT_EQ(target.dim(), 128u);
}

TEST_F(Logistic, ZeroWeightsGiveLogHalf) {
  const ParameterVector w(target.dim(), 0.0);
  std::vector<std::size_t> batch{0, 5, 17, 100};
  const auto [value, grad] = logreg_minibatch_loglik_and_grad(target, w, batch);
  const double n = static_cast<double>(target.rows());
  EXPECT_NEAR(value, -n * std::log(2.0) + logistic_log_prior(target, w), 1e-9);
  EXPECT_NEAR(logreg_minibatch_loglik(target, w, batch), -n * std::log(2.0), 1e-9);
}

TEST_F(Logistic, GradientMatchesFiniteDifferences) {
  Stream s = derive_stream(8, 0);
  ParameterVector w(target.dim());
  for (auto& v : w) v = 0.3 * s.normal();
  const auto batch = sample_minibatch(target.rows(), 100, s);
  const auto [value, grad] = logreg_minibatch_loglik_and_grad(target, w, batch);
  (void)value;
  for (std::size_t k = 0; k < w.size(); k += 7) {
    ParameterVector a = w, b = w;
    const double h = 1e-5;
    a[k] += h;
    b[k] -= h;
    const double fd = (logreg_minibatch_loglik_and_grad(target, a, batch).first -
                       logreg_minibatch_loglik_and_grad(target, b, batch).first) / (2.0 * h);
    EXPECT_NEAR(grad[k], fd, 1e-5 * std::max(1.0, std::abs(fd))) << "coordinate " << k;
  }
}

TEST(LogisticToy, SaturatesTowardZero) {
  LogisticRegressionTarget t;
  t.num_features = 1;
  t.features = {1.0};
  t.labels = {1};
  t.prior_sd = 1.0;
  const std::vector<std::size_t> batch{0};
  double prev = -std::numeric_limits<double>::infinity();
  for (double w : {0.0, 1.0, 3.0, 10.0, 30.0}) {
    const double ll = logreg_minibatch_loglik(t, {0.0, w}, batch);
    EXPECT_GT(ll, prev);
    EXPECT_LE(ll, 0.0);
    prev = ll;
  }
  EXPECT_GT(prev, -1e-12);
}

// With zero weights and a batch of one example per class sharing the same
// constant bias feature, the bias-coordinate likelihood gradient vanishes.
TEST(LogisticToy, BalancedBatchHasZeroBiasGradient) {
  LogisticRegressionTarget t;
  t.num_features = 2;
  t.features = {0.3, 1.0, -0.8, 1.0};
  t.labels = {0, 1};
  t.prior_sd = 1.0;
  const std::vector<std::size_t> batch{0, 1};
  const auto [v, g] = logreg_minibatch_loglik_and_grad(t, ParameterVector(4, 0.0), batch);
  (void)v;
  EXPECT_NEAR(g[1], 0.0, 1e-15);
  EXPECT_NEAR(g[3], 0.0, 1e-15);
}

TEST(Csv, SeriesLoaderRejectsGarbage) {
  const std::string path = ::testing::TempDir() + "series.csv";
  {
    std::ofstream out(path);
    out << "1.5\n\n2.5\nabc\n";
  }
  EXPECT_THROW(load_series_csv(path), std::runtime_error);
  {
    std::ofstream out(path);
    out << "1.5\n\n2.5\n";
  }
  EXPECT_EQ(load_series_csv(path), (std::vector<double>{1.5, 2.5}));
}
