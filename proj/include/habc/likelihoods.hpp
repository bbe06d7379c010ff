#pragma once

// ABC log-likelihoods over a set of simulation replicates.

#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "habc/simulator.hpp"

namespace habc {

enum class LikelihoodKind { kernel_eps, synthetic };

inline const char* to_string(LikelihoodKind k) {
  return k == LikelihoodKind::kernel_eps ? "kernel" : "synthetic";
}

inline LikelihoodKind likelihood_from_string(const std::string& s) {
  if (s == "kernel" || s == "kernel_eps") return LikelihoodKind::kernel_eps;
  if (s == "synthetic" || s == "sl") return LikelihoodKind::synthetic;
  throw std::invalid_argument("unknown likelihood '" + s + "' (expected kernel or synthetic)");
}

/// Simulation outputs together with the (theta, seeds) that produced them.
struct ReplicateSet {
  std::vector<SummaryVector> outputs;
  ParameterVector theta;
  SeedVector seeds;

  std::size_t size() const { return outputs.size(); }
  std::size_t degenerate_count() const {
    std::size_t n = 0;
    for (const auto& o : outputs) n += o.degenerate ? 1 : 0;
    return n;
  }
};

/// outputs[s] = sim.simulate(theta, seeds[s]). Points the simulator does not
/// accept yield degenerate replicates without running it.
inline ReplicateSet simulate_replicates(const Simulator& sim, const ParameterVector& theta, const SeedVector& seeds) {
  ReplicateSet reps{{}, theta, seeds};
  reps.outputs.reserve(seeds.size());
  const bool ok = sim.accepts(theta);
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    reps.outputs.push_back(ok ? sim.simulate(theta, seeds[s]) : SummaryVector::make_degenerate(sim.spec().stat_dim));
  }
  return reps;
}

namespace detail {

inline double gaussian_kernel_log(const SummaryVector& x, const SummaryVector& y, const EpsilonVector& eps) {
  double lp = 0.0;
  for (std::size_t j = 0; j < y.size(); ++j) {
    const double e2 = eps[j] * eps[j];
    const double d = y[j] - x[j];
    lp += -0.5 * std::log(2.0 * std::numbers::pi * e2) - 0.5 * d * d / e2;
  }
  return lp;
}

}  // namespace detail

/// log[(1/S) sum_s prod_j N(y_j | x_j^(s), eps_j^2)] by log-sum-exp.
/// Degenerate replicates contribute zero mass; if all are degenerate the
/// result is -inf.
inline double kernel_eps_loglik(std::span<const SummaryVector> reps, const SummaryVector& y, const EpsilonVector& eps) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  if (reps.empty()) throw precondition_error("kernel_eps_loglik: needs S >= 1");
  check_same_dim(y.size(), eps.size(), "kernel_eps_loglik eps");
  std::vector<double> terms;
  terms.reserve(reps.size());
  double hi = kNegInf;
  for (const auto& x : reps) {
    check_same_dim(x.size(), y.size(), "kernel_eps_loglik replicate");
    const double t = x.degenerate ? kNegInf : detail::gaussian_kernel_log(x, y, eps);
    terms.push_back(t);
    if (t > hi) hi = t;
  }
  if (hi == kNegInf) return kNegInf;
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - hi);
  return hi + std::log(acc) - std::log(static_cast<double>(reps.size()));
}

inline double kernel_eps_loglik(const ReplicateSet& reps, const SummaryVector& y, const EpsilonVector& eps) {
  return kernel_eps_loglik(std::span<const SummaryVector>(reps.outputs), y, eps);
}

/// Per-statistic mean and unbiased variance of the replicates.
struct SyntheticMoments {
  Vector mu;
  Vector sigma2;
  bool degenerate = false;
};

inline SyntheticMoments synthetic_moments(std::span<const SummaryVector> reps) {
  if (reps.size() < 2) throw precondition_error("synthetic_moments: needs S >= 2");
  const std::size_t j_dim = reps.front().size();
  SyntheticMoments m{Vector(j_dim, 0.0), Vector(j_dim, 0.0), false};
  for (const auto& x : reps) {
    check_same_dim(x.size(), j_dim, "synthetic_moments replicate");
    if (x.degenerate) {
      m.degenerate = true;
      return m;
    }
  }
  const double s = static_cast<double>(reps.size());
  for (const auto& x : reps) {
    for (std::size_t j = 0; j < j_dim; ++j) m.mu[j] += x[j];
  }
  for (auto& v : m.mu) v /= s;
  for (const auto& x : reps) {
    for (std::size_t j = 0; j < j_dim; ++j) {
      const double d = x[j] - m.mu[j];
      m.sigma2[j] += d * d;
    }
  }
  for (auto& v : m.sigma2) v /= (s - 1.0);
  return m;
}

inline SyntheticMoments synthetic_moments(const ReplicateSet& reps) {
  return synthetic_moments(std::span<const SummaryVector>(reps.outputs));
}

/// sum_j log N(y_j | mu_j, sigma2_j + eps_j^2).
inline double synthetic_loglik(const SyntheticMoments& m, const SummaryVector& y, const EpsilonVector& eps) {
  if (m.degenerate) return -std::numeric_limits<double>::infinity();
  check_same_dim(m.mu.size(), y.size(), "synthetic_loglik mu");
  check_same_dim(m.sigma2.size(), y.size(), "synthetic_loglik sigma2");
  check_same_dim(eps.size(), y.size(), "synthetic_loglik eps");
  double lp = 0.0;
  for (std::size_t j = 0; j < y.size(); ++j) {
    const double v = m.sigma2[j] + eps[j] * eps[j];
    const double d = y[j] - m.mu[j];
    lp += -0.5 * std::log(2.0 * std::numbers::pi * v) - 0.5 * d * d / v;
  }
  return lp;
}

inline double replicate_loglik(LikelihoodKind kind, std::span<const SummaryVector> reps, const SummaryVector& y,
                               const EpsilonVector& eps) {
  if (kind == LikelihoodKind::kernel_eps) return kernel_eps_loglik(reps, y, eps);
  return synthetic_loglik(synthetic_moments(reps), y, eps);
}

inline double replicate_loglik(LikelihoodKind kind, const ReplicateSet& reps, const SummaryVector& y,
                               const EpsilonVector& eps) {
  return replicate_loglik(kind, std::span<const SummaryVector>(reps.outputs), y, eps);
}

}  // namespace habc
