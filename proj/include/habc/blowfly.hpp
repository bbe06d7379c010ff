#pragma once

// Sheep blowfly population model (Nicholson's experiments, Wood 2010):
//
//   N[t+1] = P N[t-tau] exp(-N[t-tau] / N0) e[t] + N[t] exp(-delta eps[t])
//
// with e ~ Gamma(1/sigma_p^2, rate 1/sigma_p^2) and eps ~ Gamma(1/sigma_d^2,
// rate 1/sigma_d^2). Parameters are carried on the log scale except tau,
// which is continuous in the chain and rounded here.

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "habc/rng.hpp"
#include "habc/simulator.hpp"

namespace habc {

inline constexpr std::size_t kBlowflyParamDim = 6;
inline constexpr std::size_t kBlowflyStatDim = 10;

struct BlowflyParams {
  double log_p = 0.0;
  double log_delta = 0.0;
  double log_n0 = 0.0;
  double log_sigma_d = 0.0;
  double log_sigma_p = 0.0;
  double tau = 1.0;

  static BlowflyParams from_vector(const ParameterVector& theta) {
    check_same_dim(theta.size(), kBlowflyParamDim, "BlowflyParams::from_vector");
    return {theta[0], theta[1], theta[2], theta[3], theta[4], theta[5]};
  }
  ParameterVector to_vector() const { return {log_p, log_delta, log_n0, log_sigma_d, log_sigma_p, tau}; }
};

struct BlowflyConfig {
  int horizon = 250;  // total simulated days, burn-in included
  int burnin = 50;
  double initial_population = 180.0;
  // Upper ends of the quantile blocks whose means form statistics 0-7.
  std::array<double, 4> quantiles{0.25, 0.5, 0.75, 1.0};
  // Peak-count thresholds, in population units. Usually the 60% and 90%
  // quantiles of the observed series (see blowfly_thresholds_from_series).
  std::array<double, 2> peak_thresholds{2000.0, 6000.0};
};

/// Empirical quantile by linear interpolation between order statistics.
inline double empirical_quantile(std::vector<double> values, double q) {
  if (values.empty()) throw precondition_error("empirical_quantile: empty input");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

inline std::array<double, 2> blowfly_thresholds_from_series(std::span<const double> series) {
  std::vector<double> v(series.begin(), series.end());
  return {empirical_quantile(v, 0.6), empirical_quantile(v, 0.9)};
}

namespace detail {

// Mean of the sorted values falling in each quantile block
// (q[k-1], q[k]] of the empirical distribution.
inline std::array<double, 4> quantile_block_means(std::vector<double> v, const std::array<double, 4>& q) {
  std::sort(v.begin(), v.end());
  std::array<double, 4> out{};
  const double n = static_cast<double>(v.size());
  double prev = 0.0;
  for (std::size_t k = 0; k < 4; ++k) {
    auto begin = static_cast<std::size_t>(std::floor(prev * n));
    auto end = static_cast<std::size_t>(std::floor(q[k] * n));
    end = std::min(end, v.size());
    if (end <= begin) end = std::min(begin + 1, v.size());
    if (begin >= v.size()) begin = v.size() - 1;
    double sum = 0.0;
    for (std::size_t i = begin; i < end; ++i) sum += v[i];
    out[k] = sum / static_cast<double>(end - begin);
    prev = q[k];
  }
  return out;
}

inline bool noise_free(double sigma) { return sigma == 0.0; }

// Gamma(1/s^2, rate 1/s^2) noise for one (step, kind) slot. Each slot owns a
// substream so rejection inside the gamma sampler never shifts later draws.
inline double unit_mean_gamma(std::uint64_t seed, std::uint64_t slot, double sigma) {
  if (noise_free(sigma)) return 1.0;
  const double shape = 1.0 / (sigma * sigma);
  Stream s = derive_stream(seed, slot);
  return gamma_variate(s, shape) / shape;
}

}  // namespace detail

/// Post-burn-in population series. Returns an empty vector when the
/// trajectory leaves the finite non-negative range.
inline std::vector<double> blowfly_series(const BlowflyParams& p, std::uint64_t seed, const BlowflyConfig& cfg) {
  if (cfg.horizon <= cfg.burnin || cfg.burnin < 1) {
    throw precondition_error("blowfly_series: requires horizon > burnin >= 1");
  }
  const double lag_real = std::round(p.tau);
  if (!(lag_real >= 0.0) || lag_real >= cfg.burnin) return {};
  const auto lag = static_cast<int>(lag_real);

  const double P = std::exp(p.log_p);
  const double delta = std::exp(p.log_delta);
  const double n0 = std::exp(p.log_n0);
  const double sigma_d = std::exp(p.log_sigma_d);
  const double sigma_p = std::exp(p.log_sigma_p);

  std::vector<double> n(static_cast<std::size_t>(cfg.horizon));
  for (int t = 0; t <= lag; ++t) n[t] = cfg.initial_population;
  for (int t = lag; t + 1 < cfg.horizon; ++t) {
    const double e = detail::unit_mean_gamma(seed, 2 * static_cast<std::uint64_t>(t), sigma_p);
    const double eps = detail::unit_mean_gamma(seed, 2 * static_cast<std::uint64_t>(t) + 1, sigma_d);
    const double lagged = n[t - lag];
    const double next = P * lagged * std::exp(-lagged / n0) * e + n[t] * std::exp(-delta * eps);
    if (!std::isfinite(next) || next < 0.0) return {};
    n[t + 1] = next;
  }
  return {n.begin() + cfg.burnin, n.end()};
}

/// The ten summary statistics of a population series:
/// log of the four quantile-block means of N/1000, the four quantile-block
/// means of the first differences of N/1000, and the number of local maxima
/// above each of the two peak thresholds.
inline SummaryVector blowfly_statistics(std::span<const double> series, const BlowflyConfig& cfg) {
  if (series.size() < 3) return SummaryVector::make_degenerate(kBlowflyStatDim);
  std::vector<double> scaled(series.size());
  for (std::size_t i = 0; i < series.size(); ++i) scaled[i] = series[i] / 1000.0;
  std::vector<double> diffs(series.size() - 1);
  for (std::size_t i = 0; i + 1 < scaled.size(); ++i) diffs[i] = scaled[i + 1] - scaled[i];

  const auto level = detail::quantile_block_means(scaled, cfg.quantiles);
  const auto change = detail::quantile_block_means(diffs, cfg.quantiles);

  Vector stats;
  stats.reserve(kBlowflyStatDim);
  for (double m : level) stats.push_back(std::log(m));
  for (double m : change) stats.push_back(m);
  for (double threshold : cfg.peak_thresholds) {
    int peaks = 0;
    for (std::size_t t = 1; t + 1 < series.size(); ++t) {
      if (series[t] > series[t - 1] && series[t] >= series[t + 1] && series[t] > threshold) ++peaks;
    }
    stats.push_back(static_cast<double>(peaks));
  }
  return SummaryVector(std::move(stats));
}

inline SummaryVector blowfly_simulate(const BlowflyParams& p, std::uint64_t seed, const BlowflyConfig& cfg) {
  const auto series = blowfly_series(p, seed, cfg);
  if (series.empty()) return SummaryVector::make_degenerate(kBlowflyStatDim);
  return blowfly_statistics(series, cfg);
}

/// Default priors: normal on the five log parameters, Poisson on tau.
inline PriorSpec blowfly_default_prior(double log_mean = 0.0, double log_sd = 2.0, double tau_rate = 10.0) {
  PriorSpec prior;
  for (std::size_t i = 0; i < 5; ++i) prior.factors.push_back(UnivariatePrior::normal(log_mean, log_sd));
  prior.factors.push_back(UnivariatePrior::poisson(tau_rate));
  return prior;
}

/// Parameter setting used to generate the bundled observed series.
inline BlowflyParams blowfly_reference_params() {
  return {std::log(6.5), std::log(0.16), std::log(400.0), std::log(0.3), std::log(0.6), 14.0};
}

class BlowflySimulator final : public Simulator {
 public:
  BlowflySimulator(BlowflyConfig cfg, PriorSpec prior) : cfg_(cfg) {
    check_same_dim(prior.dim(), kBlowflyParamDim, "BlowflySimulator prior");
    spec_.param_dim = kBlowflyParamDim;
    spec_.stat_dim = kBlowflyStatDim;
    spec_.prior = std::move(prior);
    spec_.name = "blowfly";
  }

  const SimulatorSpec& spec() const override { return spec_; }

  bool accepts(const ParameterVector& theta) const override {
    if (theta.size() != kBlowflyParamDim) return false;
    for (double v : theta) {
      if (!std::isfinite(v)) return false;
    }
    return theta[5] > -0.5;
  }

  SummaryVector simulate(const ParameterVector& theta, std::uint64_t seed) const override {
    return blowfly_simulate(BlowflyParams::from_vector(theta), seed, cfg_);
  }

  const BlowflyConfig& config() const { return cfg_; }

 private:
  BlowflyConfig cfg_;
  SimulatorSpec spec_;
};

}  // namespace habc
