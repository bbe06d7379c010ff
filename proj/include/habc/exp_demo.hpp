#pragma once

// One-dimensional demonstration problem: the observation is the average of N
// exponential variates whose rate is the parameter. Under a Gamma(alpha,
// beta) prior on the rate the posterior is Gamma(alpha + N, beta + N y).

#include <cmath>
#include <stdexcept>

#include <boost/math/distributions/gamma.hpp>

#include "habc/rng.hpp"
#include "habc/simulator.hpp"

namespace habc {

inline constexpr int kExpDemoDefaultN = 20;

/// Mean of n exponential variates with rate theta, drawn from the seed's
/// stream. Written as (mean of n unit exponentials) / theta so the output
/// is smooth in theta for a fixed seed.
inline double exp_demo_simulate(double theta, std::uint64_t seed, int n = kExpDemoDefaultN) {
  if (!(theta > 0.0)) throw std::domain_error("exp_demo_simulate: theta must be > 0");
  if (n < 1) throw precondition_error("exp_demo_simulate: n must be >= 1");
  Stream stream = derive_stream(seed, 0);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += stream.exponential();
  return (sum / n) / theta;
}

/// Gamma distribution in shape/rate form with the evaluations the
/// diagnostics need.
class GammaDistribution {
 public:
  GammaDistribution(double shape, double rate) : shape_(shape), rate_(rate), dist_(shape, 1.0 / rate) {
    if (!(shape > 0.0) || !(rate > 0.0)) throw std::domain_error("GammaDistribution: shape and rate must be > 0");
  }

  double shape() const { return shape_; }
  double rate() const { return rate_; }
  double mean() const { return shape_ / rate_; }
  double variance() const { return shape_ / (rate_ * rate_); }
  /// Mode; zero when shape <= 1.
  double mode() const { return shape_ > 1.0 ? (shape_ - 1.0) / rate_ : 0.0; }

  double logpdf(double x) const {
    if (!(x > 0.0)) return -std::numeric_limits<double>::infinity();
    return shape_ * std::log(rate_) - std::lgamma(shape_) + (shape_ - 1.0) * std::log(x) - rate_ * x;
  }
  double cdf(double x) const {
    if (x <= 0.0) return 0.0;
    if (x == std::numeric_limits<double>::infinity()) return 1.0;
    return boost::math::cdf(dist_, x);
  }
  double quantile(double p) const {
    if (p <= 0.0) return 0.0;
    if (p >= 1.0) return std::numeric_limits<double>::infinity();
    return boost::math::quantile(dist_, p);
  }

 private:
  double shape_;
  double rate_;
  boost::math::gamma_distribution<double> dist_;
};

/// Posterior of the rate after observing the mean y of n exponentials.
/// With n = 0 this is the prior.
inline GammaDistribution exp_demo_true_posterior(double alpha, double beta, double y, int n) {
  if (!(y > 0.0)) throw precondition_error("exp_demo_true_posterior: y must be > 0");
  return GammaDistribution(alpha + n, beta + n * y);
}

class ExpDemoSimulator final : public Simulator {
 public:
  ExpDemoSimulator(double prior_alpha, double prior_beta, int n = kExpDemoDefaultN) : n_(n) {
    spec_.param_dim = 1;
    spec_.stat_dim = 1;
    spec_.prior.factors = {UnivariatePrior::gamma(prior_alpha, prior_beta)};
    spec_.name = "exp-demo";
  }

  const SimulatorSpec& spec() const override { return spec_; }
  bool accepts(const ParameterVector& theta) const override { return theta.size() == 1 && theta[0] > 0.0; }

  SummaryVector simulate(const ParameterVector& theta, std::uint64_t seed) const override {
    check_same_dim(theta.size(), 1, "ExpDemoSimulator::simulate");
    return SummaryVector(Vector{exp_demo_simulate(theta[0], seed, n_)});
  }

  int n() const { return n_; }

 private:
  SimulatorSpec spec_;
  int n_;
};

}  // namespace habc
