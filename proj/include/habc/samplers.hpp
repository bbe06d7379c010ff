#pragma once

// Markov chain kernels: pseudo-marginal ABC-MCMC, the stochastic-gradient
// Hamiltonian samplers (SGLD, SGHMC, SGNHT), the persistent-seed flip
// transition, and a leapfrog HMC reference for analytic targets.

#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "habc/diagnostics.hpp"
#include "habc/gradients.hpp"
#include "habc/likelihoods.hpp"
#include "habc/prior.hpp"
#include "habc/rng.hpp"

namespace habc {

enum class KernelKind { abc_mcmc, sgld, sghmc, sgnht, hmc };

inline const char* to_string(KernelKind k) {
  switch (k) {
    case KernelKind::abc_mcmc: return "abc_mcmc";
    case KernelKind::sgld: return "sgld";
    case KernelKind::sghmc: return "sghmc";
    case KernelKind::sgnht: return "sgnht";
    case KernelKind::hmc: return "hmc";
  }
  return "?";
}

inline KernelKind kernel_from_string(const std::string& s) {
  if (s == "abc_mcmc" || s == "sl_abc" || s == "abc-mcmc") return KernelKind::abc_mcmc;
  if (s == "sgld") return KernelKind::sgld;
  if (s == "sghmc") return KernelKind::sghmc;
  if (s == "sgnht") return KernelKind::sgnht;
  if (s == "hmc") return KernelKind::hmc;
  throw std::invalid_argument("unknown kernel '" + s + "' (expected abc_mcmc, sgld, sghmc, sgnht or hmc)");
}

/// How seed_flip_step scores a proposed seed.
///   replicate_set: likelihood of the whole replicate set with seed s
///                  swapped; requires replicates current at theta.
///   per_seed:      kernel-eps likelihood of replicate s alone. The current
///                  replicate is re-simulated at theta, so a flip costs two
///                  simulations and the state need not carry replicates.
enum class SeedFlipRule { replicate_set, per_seed };

inline const char* to_string(SeedFlipRule r) { return r == SeedFlipRule::replicate_set ? "replicate_set" : "per_seed"; }

inline SeedFlipRule flip_rule_from_string(const std::string& s) {
  if (s == "replicate_set") return SeedFlipRule::replicate_set;
  if (s == "per_seed") return SeedFlipRule::per_seed;
  throw std::invalid_argument("unknown seed flip rule '" + s + "'");
}

struct SamplerConfig {
  double eta = 0.01;
  double friction_c = 1.0;
  double gamma = 0.1;
  Vector mass{1.0};  // diagonal M; one entry applies to every coordinate
  bool persistent_seeds = false;
  GradientConfig grad_cfg;
  double vhat_decay = 0.99;
  int leapfrog_steps = 10;
  Vector proposal_std{0.1};
  SeedFlipRule flip_rule = SeedFlipRule::per_seed;
  // Test hook: when false every injected Gaussian draw is replaced by 0.
  bool inject_noise = true;

  double mass_at(std::size_t i) const { return mass.size() == 1 ? mass[0] : mass.at(i); }
  double proposal_at(std::size_t i) const { return proposal_std.size() == 1 ? proposal_std[0] : proposal_std.at(i); }
};

/// Full Markov chain state.
struct SamplerState {
  ParameterVector theta;
  Vector momentum;  // SGHMC, SGNHT, HMC
  double thermostat = 0.0;  // SGNHT
  SeedVector seeds;
  ReplicateSet replicates;  // pseudo-marginal state; empty for gradient kernels
  double loglik = std::numeric_limits<double>::quiet_NaN();  // of `replicates`
  std::size_t step = 0;
  // online gradient-noise estimate for SGHMC
  Vector grad_ema_mean;
  Vector grad_ema_var;
  ChainCounters counters;
};

/// Accepts every parameter value.
struct AlwaysSupported {
  bool operator()(const ParameterVector&) const { return true; }
};

/// Membership in the support of a prior.
struct PriorSupport {
  const PriorSpec* prior;
  bool operator()(const ParameterVector& theta) const { return prior_supports(*prior, theta); }
};

namespace detail {

inline double noise(Stream& stream, const SamplerConfig& cfg) { return cfg.inject_noise ? stream.normal() : 0.0; }

inline void ensure_momentum(SamplerState& state, const SamplerConfig& cfg, Stream& stream) {
  if (state.momentum.size() == state.theta.size()) return;
  state.momentum.resize(state.theta.size());
  for (std::size_t i = 0; i < state.momentum.size(); ++i) {
    state.momentum[i] = std::sqrt(cfg.mass_at(i)) * noise(stream, cfg);
  }
}

template <class GradFn>
GradientEstimate take_gradient(SamplerState& state, GradFn& grad_fn) {
  GradientEstimate est = grad_fn(std::as_const(state));
  check_same_dim(est.grad.size(), state.theta.size(), "gradient estimate");
  state.counters.sim_calls += est.sims_used;
  if (!est.valid) ++state.counters.invalid_gradients;
  return est;
}

// Moves theta to `proposal` if supported; otherwise keeps theta and reverses
// the momentum (if any).
template <class Support>
void move_or_reflect(SamplerState& state, ParameterVector proposal, Support& support) {
  if (support(std::as_const(proposal))) {
    state.theta = std::move(proposal);
  } else {
    ++state.counters.boundary_rejections;
    for (auto& p : state.momentum) p = -p;
  }
}

}  // namespace detail

/// Simulates the replicate set at (theta, seeds) and caches its likelihood.
inline void refresh_replicates(SamplerState& state, const Simulator& sim, const SummaryVector& y,
                               const EpsilonVector& eps, LikelihoodKind kind) {
  state.replicates = simulate_replicates(sim, state.theta, state.seeds);
  state.counters.sim_calls += state.seeds.size();
  state.loglik = replicate_loglik(kind, state.replicates, y, eps);
}

/// Pseudo-marginal Metropolis-Hastings with a Gaussian random-walk proposal.
/// Fresh seeds are drawn for the proposal unless cfg.persistent_seeds; the
/// replicates of an accepted proposal become part of the state and are kept
/// on rejection.
inline SamplerState abc_mcmc_step(SamplerState state, const Simulator& sim, const SummaryVector& y,
                                  const EpsilonVector& eps, const PriorSpec& prior, const SamplerConfig& cfg,
                                  LikelihoodKind kind, Stream& stream) {
  if (state.replicates.size() != state.seeds.size() || std::isnan(state.loglik)) {
    refresh_replicates(state, sim, y, eps, kind);
  }
  ParameterVector proposal(state.theta.size());
  for (std::size_t i = 0; i < proposal.size(); ++i) {
    proposal[i] = state.theta[i] + cfg.proposal_at(i) * stream.normal();
  }
  SeedVector seeds = cfg.persistent_seeds ? state.seeds : draw_seed_vector(state.seeds.size(), stream);
  const double log_u = std::log(stream.uniform());
  ++state.counters.proposals;
  ++state.step;

  const double lp_new = prior_logpdf(prior, proposal);
  if (lp_new == -std::numeric_limits<double>::infinity()) return state;

  ReplicateSet reps = simulate_replicates(sim, proposal, seeds);
  state.counters.sim_calls += seeds.size();
  const double ll_new = replicate_loglik(kind, reps, y, eps);
  if (ll_new == -std::numeric_limits<double>::infinity()) return state;

  const double log_ratio = (lp_new + ll_new) - (prior_logpdf(prior, state.theta) + state.loglik);
  if (log_u < log_ratio) {
    state.theta = std::move(proposal);
    state.seeds = std::move(seeds);
    state.replicates = std::move(reps);
    state.loglik = ll_new;
    ++state.counters.accepted;
  }
  return state;
}

/// Metropolis flip of each persistent seed with probability gamma, holding
/// theta fixed. Seeds are proposed from their uniform prior, so the
/// acceptance ratio is a likelihood ratio (see SeedFlipRule).
inline SamplerState seed_flip_step(SamplerState state, const Simulator& sim, const SummaryVector& y,
                                   const EpsilonVector& eps, double gamma, SeedFlipRule rule, LikelihoodKind kind,
                                   Stream& stream) {
  if (gamma <= 0.0) return state;
  const std::size_t num_seeds = state.seeds.size();
  if (rule == SeedFlipRule::replicate_set) {
    bool current = state.replicates.size() == num_seeds && state.replicates.theta == state.theta &&
                   state.replicates.seeds == state.seeds && !std::isnan(state.loglik);
    for (std::size_t s = 0; s < num_seeds; ++s) {
      if (!(stream.uniform() < gamma)) continue;
      const std::uint64_t candidate = stream.next_u64();
      const double log_u = std::log(stream.uniform());
      if (!current) {
        refresh_replicates(state, sim, y, eps, kind);
        current = true;
      }
      ++state.counters.flips_proposed;
      std::vector<SummaryVector> outputs = state.replicates.outputs;
      outputs[s] = sim.accepts(state.theta) ? sim.simulate(state.theta, candidate)
                                            : SummaryVector::make_degenerate(sim.spec().stat_dim);
      ++state.counters.sim_calls;
      const double ll_new = replicate_loglik(kind, std::span<const SummaryVector>(outputs), y, eps);
      if (ll_new == -std::numeric_limits<double>::infinity()) continue;
      if (state.loglik == -std::numeric_limits<double>::infinity() || log_u < ll_new - state.loglik) {
        state.seeds[s] = candidate;
        state.replicates.seeds[s] = candidate;
        state.replicates.outputs = std::move(outputs);
        state.loglik = ll_new;
        ++state.counters.flips_accepted;
      }
    }
    return state;
  }

  const bool ok = sim.accepts(state.theta);
  for (std::size_t s = 0; s < num_seeds; ++s) {
    if (!(stream.uniform() < gamma)) continue;
    const std::uint64_t candidate = stream.next_u64();
    const double log_u = std::log(stream.uniform());
    ++state.counters.flips_proposed;
    if (!ok) continue;
    const SummaryVector current = sim.simulate(state.theta, state.seeds[s]);
    const SummaryVector proposed = sim.simulate(state.theta, candidate);
    state.counters.sim_calls += 2;
    const double ll_cur = kernel_eps_loglik(std::span<const SummaryVector>(&current, 1), y, eps);
    const double ll_new = kernel_eps_loglik(std::span<const SummaryVector>(&proposed, 1), y, eps);
    if (ll_new == -std::numeric_limits<double>::infinity()) continue;
    if (ll_cur == -std::numeric_limits<double>::infinity() || log_u < ll_new - ll_cur) {
      state.seeds[s] = candidate;
      ++state.counters.flips_accepted;
    }
  }
  // replicates, if any, no longer match the seeds
  state.replicates = {};
  state.loglik = std::numeric_limits<double>::quiet_NaN();
  return state;
}

/// theta <- theta + eta N(0, M^-1) - eta^2 M^-1 grad U(theta) / 2.
/// With M = I this is one leapfrog step from a freshly drawn momentum.
template <class GradFn, class Support = AlwaysSupported>
SamplerState sgld_step(SamplerState state, GradFn&& grad_fn, const SamplerConfig& cfg, Stream& stream,
                       Support support = {}) {
  if (!(cfg.eta > 0.0)) throw precondition_error("sgld_step: eta must be > 0");
  const GradientEstimate est = detail::take_gradient(state, grad_fn);
  ParameterVector next(state.theta.size());
  for (std::size_t i = 0; i < next.size(); ++i) {
    const double m = cfg.mass_at(i);
    next[i] = state.theta[i] + cfg.eta * detail::noise(stream, cfg) / std::sqrt(m) -
              cfg.eta * cfg.eta * est.grad[i] / (2.0 * m);
  }
  detail::move_or_reflect(state, std::move(next), support);
  ++state.step;
  return state;
}

/// SGHMC with friction C = c I + Vhat and noise N(0, 2 eta (C - Bhat)),
/// Bhat = eta Vhat / 2, where Vhat is an exponential moving estimate of the
/// per-coordinate gradient-noise variance.
template <class GradFn, class Support = AlwaysSupported>
SamplerState sghmc_step(SamplerState state, GradFn&& grad_fn, const SamplerConfig& cfg, Stream& stream,
                        Support support = {}) {
  if (!(cfg.eta > 0.0)) throw precondition_error("sghmc_step: eta must be > 0");
  detail::ensure_momentum(state, cfg, stream);
  const GradientEstimate est = detail::take_gradient(state, grad_fn);
  const std::size_t dim = state.theta.size();
  if (state.grad_ema_mean.size() != dim) {
    state.grad_ema_mean = est.grad;
    state.grad_ema_var.assign(dim, 0.0);
  } else {
    const double a = cfg.vhat_decay;
    for (std::size_t i = 0; i < dim; ++i) {
      const double dev = est.grad[i] - state.grad_ema_mean[i];
      state.grad_ema_mean[i] += (1.0 - a) * dev;
      state.grad_ema_var[i] = a * (state.grad_ema_var[i] + (1.0 - a) * dev * dev);
    }
  }
  bool clamped = false;
  ParameterVector next(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    const double m = cfg.mass_at(i);
    const double vhat = state.grad_ema_var[i];
    const double friction = cfg.friction_c + vhat;
    double noise_var = 2.0 * cfg.eta * (friction - 0.5 * cfg.eta * vhat);
    if (noise_var < 0.0) {
      noise_var = 0.0;
      clamped = true;
    }
    const double drho = -cfg.eta * friction * state.momentum[i] / m - cfg.eta * est.grad[i] +
                        std::sqrt(noise_var * m) * detail::noise(stream, cfg);
    state.momentum[i] += drho;
    next[i] = state.theta[i] + cfg.eta * state.momentum[i] / m;
  }
  if (clamped) ++state.counters.noise_clamps;
  detail::move_or_reflect(state, std::move(next), support);
  ++state.step;
  return state;
}

/// Stochastic-gradient Nose-Hoover thermostat:
///   rho   <- rho - eta xi rho - eta grad U + N(0, 2 eta c M)
///   theta <- theta + eta M^-1 rho
///   xi    <- xi + eta (rho' M^-1 rho / D - 1)
/// The thermostat starts at c the first time the state is used.
template <class GradFn, class Support = AlwaysSupported>
SamplerState sgnht_step(SamplerState state, GradFn&& grad_fn, const SamplerConfig& cfg, Stream& stream,
                        Support support = {}) {
  if (!(cfg.eta > 0.0)) throw precondition_error("sgnht_step: eta must be > 0");
  if (state.momentum.size() != state.theta.size()) {
    detail::ensure_momentum(state, cfg, stream);
    state.thermostat = cfg.friction_c;
  }
  const GradientEstimate est = detail::take_gradient(state, grad_fn);
  const std::size_t dim = state.theta.size();
  const double noise_var = 2.0 * cfg.eta * cfg.friction_c;
  if (noise_var < 0.0) throw precondition_error("sgnht_step: friction c must be >= 0");
  ParameterVector next(dim);
  double kinetic = 0.0;
  for (std::size_t i = 0; i < dim; ++i) {
    const double m = cfg.mass_at(i);
    double& rho = state.momentum[i];
    rho = rho - cfg.eta * state.thermostat * rho - cfg.eta * est.grad[i] +
          std::sqrt(noise_var * m) * detail::noise(stream, cfg);
    next[i] = state.theta[i] + cfg.eta * rho / m;
    kinetic += rho * rho / m;
  }
  state.thermostat += cfg.eta * (kinetic / static_cast<double>(dim) - 1.0);
  detail::move_or_reflect(state, std::move(next), support);
  ++state.step;
  return state;
}

/// `steps` leapfrog steps of size eta on (theta, rho) with diagonal mass.
template <class ExactGrad>
void leapfrog(ParameterVector& theta, Vector& rho, ExactGrad&& grad_U, double eta, int steps, const SamplerConfig& cfg) {
  if (steps <= 0) return;
  Vector g = grad_U(std::as_const(theta));
  for (int l = 0; l < steps; ++l) {
    for (std::size_t i = 0; i < rho.size(); ++i) rho[i] -= 0.5 * eta * g[i];
    for (std::size_t i = 0; i < theta.size(); ++i) theta[i] += eta * rho[i] / cfg.mass_at(i);
    g = grad_U(std::as_const(theta));
    for (std::size_t i = 0; i < rho.size(); ++i) rho[i] -= 0.5 * eta * g[i];
  }
}

/// Leapfrog HMC with Metropolis correction on H = U + rho' M^-1 rho / 2.
template <class Potential, class ExactGrad>
SamplerState hmc_reference_step(SamplerState state, Potential&& potential, ExactGrad&& grad_U,
                                const SamplerConfig& cfg, int leapfrog_steps, Stream& stream) {
  const std::size_t dim = state.theta.size();
  state.momentum.resize(dim);
  for (std::size_t i = 0; i < dim; ++i) state.momentum[i] = std::sqrt(cfg.mass_at(i)) * stream.normal();
  ++state.step;
  if (leapfrog_steps <= 0) return state;
  auto kinetic = [&](const Vector& rho) {
    double k = 0.0;
    for (std::size_t i = 0; i < dim; ++i) k += rho[i] * rho[i] / cfg.mass_at(i);
    return 0.5 * k;
  };
  ParameterVector theta = state.theta;
  Vector rho = state.momentum;
  const double h0 = potential(std::as_const(state.theta)) + kinetic(rho);
  leapfrog(theta, rho, grad_U, cfg.eta, leapfrog_steps, cfg);
  const double h1 = potential(std::as_const(theta)) + kinetic(rho);
  ++state.counters.proposals;
  if (std::log(stream.uniform()) < h0 - h1) {
    state.theta = std::move(theta);
    state.momentum = std::move(rho);
    ++state.counters.accepted;
  }
  return state;
}

/// Records thinned samples and per-step events.
class Recorder {
 public:
  explicit Recorder(bool keep_momentum = false) : keep_momentum_(keep_momentum) {}

  void record(const SamplerState& state, ChainTrace& trace) const {
    trace.steps.push_back(state.step);
    trace.samples.push_back(state.theta);
    if (keep_momentum_ && !state.momentum.empty()) {
      trace.momenta.push_back(state.momentum);
      trace.thermostat.push_back(state.thermostat);
    }
  }

 private:
  bool keep_momentum_;
};

/// Runs `num_steps` transitions of `transition(state, stream)`, keeping every
/// `thinning`-th state. Exceptions stop the chain and mark the trace failed;
/// samples recorded so far are kept.
template <class Transition>
ChainTrace run_chain(SamplerState initial, Transition&& transition, std::size_t num_steps, std::size_t thinning,
                     const Recorder& recorder, Stream& stream, std::string kernel_tag = {}) {
  if (thinning == 0) throw precondition_error("run_chain: thinning must be >= 1");
  ChainTrace trace;
  trace.kernel = std::move(kernel_tag);
  SamplerState state = std::move(initial);
  const ChainCounters start = state.counters;
  try {
    for (std::size_t t = 0; t < num_steps; ++t) {
      const std::size_t invalid_before = state.counters.invalid_gradients;
      const std::size_t clamps_before = state.counters.noise_clamps;
      state = transition(std::move(state), stream);
      if (state.counters.invalid_gradients != invalid_before) {
        trace.events.push_back({t, "invalid gradient; prior-only gradient used"});
      }
      if (state.counters.noise_clamps != clamps_before) {
        trace.events.push_back({t, "negative SGHMC noise variance clamped to 0"});
      }
      if ((t + 1) % thinning == 0) recorder.record(state, trace);
    }
  } catch (const std::exception& e) {
    trace.failed = true;
    trace.failure = e.what();
  }
  trace.counters = state.counters;
  trace.counters.sim_calls -= start.sim_calls;
  trace.sim_calls = trace.counters.sim_calls;
  return trace;
}

}  // namespace habc
