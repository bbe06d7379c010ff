#pragma once

// Forward-simulation estimates of grad U(theta) = -grad log pi(theta) -
// grad log L(theta): two-sided finite differences (FDSA) and simultaneous
// perturbations (SPSA). Both sides of every difference are simulated with
// the same seeds.

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "habc/likelihoods.hpp"
#include "habc/logistic.hpp"
#include "habc/prior.hpp"
#include "habc/rng.hpp"

namespace habc {

enum class GradientMethod { fdsa, spsa, exact };

inline const char* to_string(GradientMethod m) {
  switch (m) {
    case GradientMethod::fdsa: return "fdsa";
    case GradientMethod::spsa: return "spsa";
    case GradientMethod::exact: return "exact";
  }
  return "?";
}

inline GradientMethod gradient_method_from_string(const std::string& s) {
  if (s == "fdsa") return GradientMethod::fdsa;
  if (s == "spsa") return GradientMethod::spsa;
  if (s == "exact") return GradientMethod::exact;
  throw std::invalid_argument("unknown gradient method '" + s + "' (expected fdsa, spsa or exact)");
}

struct GradientConfig {
  /// Perturbation half-width; one entry applies to every coordinate.
  Vector d_theta{1e-2};
  int repeats = 1;  // R, SPSA only
  GradientMethod method = GradientMethod::spsa;
  LikelihoodKind likelihood = LikelihoodKind::synthetic;

  double step(std::size_t i) const { return d_theta.size() == 1 ? d_theta[0] : d_theta.at(i); }

  void validate(std::size_t dim) const {
    if (d_theta.size() != 1 && d_theta.size() != dim) {
      throw shape_error("d_theta must have 1 or D entries");
    }
    for (double d : d_theta) {
      if (!(d > 0.0)) throw std::domain_error("d_theta entries must be > 0");
    }
    if (repeats < 1) throw precondition_error("repeats must be >= 1");
  }
};

struct GradientEstimate {
  Vector grad;  // estimate of grad U
  std::size_t sims_used = 0;
  GradientMethod method = GradientMethod::exact;
  /// False when a likelihood evaluation returned -inf (or NaN); grad then
  /// holds the prior-only gradient -grad log pi(theta).
  bool valid = true;
};

/// Rademacher +-1 mask.
struct PerturbationMask {
  std::vector<int> signs;

  static PerturbationMask draw(std::size_t dim, Stream& stream) {
    PerturbationMask m;
    m.signs.resize(dim);
    for (auto& s : m.signs) s = stream.rademacher();
    return m;
  }
};

namespace detail {

inline bool usable(double loglik) { return std::isfinite(loglik); }

}  // namespace detail

/// Gradient of a black-box log-likelihood by two-sided differences along
/// each axis. Clears `valid` if any evaluation is not finite.
template <class LogLik>
Vector fdsa_gradient(LogLik&& loglik, const ParameterVector& theta, const GradientConfig& cfg, bool& valid) {
  Vector g(theta.size(), 0.0);
  ParameterVector probe = theta;
  for (std::size_t r = 0; r < theta.size(); ++r) {
    const double d = cfg.step(r);
    probe[r] = theta[r] + d;
    const double plus = loglik(std::as_const(probe));
    probe[r] = theta[r] - d;
    const double minus = loglik(std::as_const(probe));
    probe[r] = theta[r];
    if (!detail::usable(plus) || !detail::usable(minus)) valid = false;
    g[r] = (plus - minus) / (2.0 * d);
  }
  return g;
}

/// One simultaneous-perturbation term for a given mask:
/// [L(theta + d*mask) - L(theta - d*mask)] / (2 d_i) * mask_i.
/// The mask entries are +-1, so mask_i is its own reciprocal.
template <class LogLik>
Vector spsa_term(LogLik&& loglik, const ParameterVector& theta, const GradientConfig& cfg,
                 const PerturbationMask& mask, bool& valid) {
  check_same_dim(mask.signs.size(), theta.size(), "spsa_term mask");
  ParameterVector plus_point(theta.size()), minus_point(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    plus_point[i] = theta[i] + cfg.step(i) * mask.signs[i];
    minus_point[i] = theta[i] - cfg.step(i) * mask.signs[i];
  }
  const double plus = loglik(std::as_const(plus_point));
  const double minus = loglik(std::as_const(minus_point));
  if (!detail::usable(plus) || !detail::usable(minus)) valid = false;
  const double diff = plus - minus;
  Vector g(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) g[i] = diff / (2.0 * cfg.step(i)) * mask.signs[i];
  return g;
}

/// Average of cfg.repeats SPSA terms with masks drawn from mask_stream.
template <class LogLik>
Vector spsa_gradient(LogLik&& loglik, const ParameterVector& theta, const GradientConfig& cfg, Stream& mask_stream,
                     bool& valid) {
  Vector g(theta.size(), 0.0);
  for (int r = 0; r < cfg.repeats; ++r) {
    const auto mask = PerturbationMask::draw(theta.size(), mask_stream);
    const Vector term = spsa_term(loglik, theta, cfg, mask, valid);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += term[i];
  }
  for (auto& v : g) v /= cfg.repeats;
  return g;
}

/// -(likelihood gradient + grad log prior), or the prior-only gradient
/// flagged invalid.
inline GradientEstimate finish_grad_U(Vector loglik_grad, const Vector& prior_grad, bool valid,
                                      std::size_t sims, GradientMethod method) {
  GradientEstimate est;
  est.sims_used = sims;
  est.method = method;
  est.valid = valid;
  est.grad.resize(prior_grad.size());
  for (std::size_t i = 0; i < prior_grad.size(); ++i) {
    est.grad[i] = valid ? -(loglik_grad[i] + prior_grad[i]) : -prior_grad[i];
  }
  return est;
}

/// Simulation-driven log-likelihood L(theta') with the seeds held fixed.
class ReplicateLoglik {
 public:
  ReplicateLoglik(const Simulator& sim, const SeedVector& seeds, const SummaryVector& y, const EpsilonVector& eps,
                  LikelihoodKind kind)
      : sim_(sim), seeds_(seeds), y_(y), eps_(eps), kind_(kind) {}

  double operator()(const ParameterVector& theta) {
    const ReplicateSet reps = simulate_replicates(sim_, theta, seeds_);
    sims_ += seeds_.size();
    return replicate_loglik(kind_, reps, y_, eps_);
  }

  std::size_t sims() const { return sims_; }

 private:
  const Simulator& sim_;
  const SeedVector& seeds_;
  const SummaryVector& y_;
  const EpsilonVector& eps_;
  LikelihoodKind kind_;
  std::size_t sims_ = 0;
};

/// FDSA estimate of grad U; exactly 2*S*D simulations.
inline GradientEstimate fdsa_grad_U(const Simulator& sim, const ParameterVector& theta, const SeedVector& seeds,
                                    const SummaryVector& y, const EpsilonVector& eps, const PriorSpec& prior,
                                    const GradientConfig& cfg) {
  cfg.validate(theta.size());
  ReplicateLoglik loglik(sim, seeds, y, eps, cfg.likelihood);
  bool valid = true;
  Vector g = fdsa_gradient(loglik, theta, cfg, valid);
  return finish_grad_U(std::move(g), prior_grad_logpdf(prior, theta), valid, loglik.sims(), GradientMethod::fdsa);
}

/// SPSA estimate of grad U; exactly 2*S*R simulations regardless of D.
inline GradientEstimate spsa_grad_U(const Simulator& sim, const ParameterVector& theta, const SeedVector& seeds,
                                    const SummaryVector& y, const EpsilonVector& eps, const PriorSpec& prior,
                                    const GradientConfig& cfg, Stream& mask_stream) {
  cfg.validate(theta.size());
  ReplicateLoglik loglik(sim, seeds, y, eps, cfg.likelihood);
  bool valid = true;
  Vector g = spsa_gradient(loglik, theta, cfg, mask_stream, valid);
  return finish_grad_U(std::move(g), prior_grad_logpdf(prior, theta), valid, loglik.sims(), GradientMethod::spsa);
}

/// Dispatch on cfg.method (fdsa or spsa).
inline GradientEstimate simulator_grad_U(const Simulator& sim, const ParameterVector& theta, const SeedVector& seeds,
                                         const SummaryVector& y, const EpsilonVector& eps, const PriorSpec& prior,
                                         const GradientConfig& cfg, Stream& mask_stream) {
  switch (cfg.method) {
    case GradientMethod::fdsa: return fdsa_grad_U(sim, theta, seeds, y, eps, prior, cfg);
    case GradientMethod::spsa: return spsa_grad_U(sim, theta, seeds, y, eps, prior, cfg, mask_stream);
    case GradientMethod::exact: break;
  }
  throw precondition_error("simulator_grad_U: exact gradients need an analytic target");
}

/// Exact mini-batch gradient of U for the logistic target.
inline GradientEstimate exact_grad_U(const LogisticRegressionTarget& target, const ParameterVector& theta,
                                     std::span<const std::size_t> batch) {
  auto [value, grad] = logreg_minibatch_loglik_and_grad(target, theta, batch);
  (void)value;
  GradientEstimate est;
  est.method = GradientMethod::exact;
  est.grad = std::move(grad);
  for (auto& v : est.grad) v = -v;
  return est;
}

/// SPSA (or FDSA) estimate of grad U for the logistic target, treating the
/// scaled mini-batch log-likelihood as a black box. The batch is shared by
/// both sides of every difference.
inline GradientEstimate logistic_stochastic_grad_U(const LogisticRegressionTarget& target,
                                                   const ParameterVector& theta, std::span<const std::size_t> batch,
                                                   const GradientConfig& cfg, Stream& mask_stream) {
  cfg.validate(theta.size());
  std::size_t evals = 0;
  auto loglik = [&](const ParameterVector& w) {
    ++evals;
    return logreg_minibatch_loglik(target, w, batch);
  };
  bool valid = true;
  Vector g = cfg.method == GradientMethod::fdsa ? fdsa_gradient(loglik, theta, cfg, valid)
                                                : spsa_gradient(loglik, theta, cfg, mask_stream, valid);
  Vector prior_grad(theta.size());
  const double s2 = target.prior_sd * target.prior_sd;
  for (std::size_t i = 0; i < theta.size(); ++i) prior_grad[i] = -theta[i] / s2;
  auto est = finish_grad_U(std::move(g), prior_grad, valid, 0, cfg.method);
  est.sims_used = evals;
  return est;
}

struct ProbeResult {
  Vector mean;
  Vector sd;
  std::size_t trials = 0;
  std::size_t invalid = 0;
  std::size_t sims_used = 0;
};

/// Mean and standard deviation of grad-U estimates over `trials` fresh
/// draws of `num_seeds` seeds.
inline ProbeResult gradient_variance_probe(const Simulator& sim, const ParameterVector& theta,
                                           const SummaryVector& y, const EpsilonVector& eps, const PriorSpec& prior,
                                           const GradientConfig& cfg, std::size_t num_seeds, std::size_t trials,
                                           Stream& stream) {
  if (trials < 2) throw precondition_error("gradient_variance_probe: trials must be >= 2");
  const std::size_t dim = theta.size();
  ProbeResult out{Vector(dim, 0.0), Vector(dim, 0.0), trials, 0, 0};
  Vector m2(dim, 0.0);
  Stream masks = derive_stream(stream.next_u64(), 1);
  // Welford accumulation in trial order
  for (std::size_t t = 0; t < trials; ++t) {
    const SeedVector seeds = draw_seed_vector(num_seeds, stream);
    const GradientEstimate est = simulator_grad_U(sim, theta, seeds, y, eps, prior, cfg, masks);
    out.sims_used += est.sims_used;
    if (!est.valid) ++out.invalid;
    const double n = static_cast<double>(t + 1);
    for (std::size_t i = 0; i < dim; ++i) {
      const double delta = est.grad[i] - out.mean[i];
      out.mean[i] += delta / n;
      m2[i] += delta * (est.grad[i] - out.mean[i]);
    }
  }
  for (std::size_t i = 0; i < dim; ++i) out.sd[i] = std::sqrt(m2[i] / static_cast<double>(trials - 1));
  return out;
}

}  // namespace habc
