#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numeric>

#include <boost/math/distributions/normal.hpp>

#include "habc/exp_demo.hpp"
#include "habc/samplers.hpp"
#include "habc/toy.hpp"

using namespace habc;

namespace {

GradientEstimate gaussian_grad(const SamplerState& s) {
  GradientEstimate e;
  e.grad = s.theta;  // U = theta^2 / 2
  return e;
}

GradientEstimate zero_grad(const SamplerState& s) {
  GradientEstimate e;
  e.grad.assign(s.theta.size(), 0.0);
  return e;
}

struct Moments {
  double mean = 0.0;
  double var = 0.0;
  double se = 0.0;  // batch-means standard error of the mean
};

Moments moments(const std::vector<double>& xs) {
  Moments m;
  const double n = static_cast<double>(xs.size());
  for (double x : xs) m.mean += x / n;
  for (double x : xs) m.var += (x - m.mean) * (x - m.mean) / (n - 1.0);
  const std::size_t batches = 100, len = xs.size() / batches;
  double bv = 0.0;
  for (std::size_t b = 0; b < batches; ++b) {
    double bm = 0.0;
    for (std::size_t i = 0; i < len; ++i) bm += xs[b * len + i] / static_cast<double>(len);
    bv += (bm - m.mean) * (bm - m.mean) / (batches - 1.0);
  }
  m.se = std::sqrt(bv / batches);
  return m;
}

// Enumerable toy: 5 cells, 3 seed residues.
ToySimulator make_toy() {
  return ToySimulator({{1.4, -0.2, 2.0}, {0.9, 0.1, 1.5}, {0.4, 0.6, 0.3}, {-0.5, 1.0, 0.0}, {-1.2, -0.4, 0.8}}, 1.5);
}

constexpr double kToyY = 0.5;
constexpr double kToyEps = 0.4;

double cell_prior_mass(const ToySimulator& toy, std::size_t c) {
  boost::math::normal_distribution<> n(0.0, 1.5);
  return boost::math::cdf(n, toy.cell_upper(c)) - boost::math::cdf(n, toy.cell_lower(c));
}

double toy_likelihood(const ToySimulator& toy, std::size_t cell, const std::vector<std::size_t>& residues,
                      LikelihoodKind kind) {
  std::vector<SummaryVector> reps;
  for (std::size_t r : residues) reps.emplace_back(Vector{toy.value(cell, r)});
  return std::exp(replicate_loglik(kind, std::span<const SummaryVector>(reps), SummaryVector(Vector{kToyY}),
                                   EpsilonVector(Vector{kToyEps})));
}

// Every residue tuple of length S.
std::vector<std::vector<std::size_t>> residue_tuples(std::size_t k, std::size_t S) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> cur(S, 0);
  for (;;) {
    out.push_back(cur);
    std::size_t i = 0;
    while (i < S && ++cur[i] == k) cur[i++] = 0;
    if (i == S) break;
  }
  return out;
}

std::vector<double> toy_cell_target(const ToySimulator& toy, std::size_t S, LikelihoodKind kind) {
  std::vector<double> p(toy.cells(), 0.0);
  const auto tuples = residue_tuples(toy.residues(), S);
  for (std::size_t c = 0; c < toy.cells(); ++c) {
    double e = 0.0;
    for (const auto& t : tuples) e += toy_likelihood(toy, c, t, kind) / static_cast<double>(tuples.size());
    p[c] = cell_prior_mass(toy, c) * e;
  }
  const double z = std::accumulate(p.begin(), p.end(), 0.0);
  for (auto& v : p) v /= z;
  return p;
}

double tvd(const std::vector<double>& a, const std::vector<double>& b) {
  double t = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) t += std::abs(a[i] - b[i]);
  return 0.5 * t;
}

SamplerState toy_state(std::size_t S, std::uint64_t seed) {
  SamplerState st;
  st.theta = {0.0};
  Stream s = derive_stream(seed, 9);
  st.seeds = draw_seed_vector(S, s);
  return st;
}

}  // namespace

TEST(AbcMcmc, ZeroProposalRefreshesReplicates) {
  const ExpDemoSimulator sim(0.1, 0.1);
  SamplerConfig cfg;
  cfg.proposal_std = {0.0};
  SamplerState st;
  st.theta = {0.13};
  Stream s = derive_stream(51, 0);
  st.seeds = draw_seed_vector(5, s);
  const SummaryVector y(Vector{7.74});
  const EpsilonVector eps(Vector{0.37});
  int accepted = 0;
  for (int i = 0; i < 200; ++i) {
    const SeedVector before = st.seeds;
    st = abc_mcmc_step(st, sim, y, eps, sim.spec().prior, cfg, LikelihoodKind::synthetic, s);
    EXPECT_EQ(st.theta[0], 0.13);
    accepted += !(st.seeds == before);
  }
  EXPECT_GT(accepted, 20);
  EXPECT_LT(accepted, 200);
}

TEST(AbcMcmc, ZeroPriorMassIsRejected) {
  const ExpDemoSimulator sim(0.1, 0.1);
  SamplerConfig cfg;
  cfg.proposal_std = {100.0};
  SamplerState st;
  st.theta = {0.01};
  Stream s = derive_stream(52, 0);
  st.seeds = draw_seed_vector(3, s);
  for (int i = 0; i < 500; ++i) {
    st = abc_mcmc_step(st, sim, SummaryVector(Vector{7.74}), EpsilonVector(Vector{0.37}), sim.spec().prior, cfg,
                       LikelihoodKind::synthetic, s);
    ASSERT_GT(st.theta[0], 0.0);
  }
}

TEST(AbcMcmc, ReplicatesMatchStateAfterEveryStep) {
  const ExpDemoSimulator sim(0.1, 0.1);
  SamplerConfig cfg;
  cfg.proposal_std = {0.03};
  cfg.persistent_seeds = true;
  SamplerState st;
  st.theta = {0.13};
  Stream s = derive_stream(53, 0);
  st.seeds = draw_seed_vector(4, s);
  const SummaryVector y(Vector{7.74});
  const EpsilonVector eps(Vector{0.37});
  for (int i = 0; i < 300; ++i) {
    st = abc_mcmc_step(st, sim, y, eps, sim.spec().prior, cfg, LikelihoodKind::synthetic, s);
    st = seed_flip_step(st, sim, y, eps, 0.3, SeedFlipRule::replicate_set, LikelihoodKind::synthetic, s);
    const auto again = simulate_replicates(sim, st.theta, st.seeds);
    ASSERT_EQ(again.outputs, st.replicates.outputs);
    ASSERT_EQ(st.replicates.theta, st.theta);
    ASSERT_EQ(st.replicates.seeds, st.seeds);
  }
}

TEST(AbcMcmc, ToyOccupancyMatchesEnumeration) {
  const ToySimulator toy = make_toy();
  for (auto kind : {LikelihoodKind::kernel_eps, LikelihoodKind::synthetic}) {
    const auto target = toy_cell_target(toy, 2, kind);
    SamplerConfig cfg;
    cfg.proposal_std = {1.2};
    SamplerState st = toy_state(2, 54);
    Stream s = derive_stream(54, static_cast<std::uint64_t>(kind));
    std::vector<double> occ(toy.cells(), 0.0);
    const int steps = 1000000;
    for (int i = 0; i < steps; ++i) {
      st = abc_mcmc_step(std::move(st), toy, SummaryVector(Vector{kToyY}), EpsilonVector(Vector{kToyEps}),
                         toy.spec().prior, cfg, kind, s);
      occ[toy.cell_of(st.theta[0])] += 1.0 / steps;
    }
    EXPECT_LT(tvd(occ, target), 0.01) << to_string(kind);
  }
}

TEST(SeedFlip, GammaZeroIsIdentity) {
  const ToySimulator toy = make_toy();
  SamplerState st = toy_state(3, 55);
  Stream s = derive_stream(55, 0);
  const auto out = seed_flip_step(st, toy, SummaryVector(Vector{kToyY}), EpsilonVector(Vector{kToyEps}), 0.0,
                                  SeedFlipRule::replicate_set, LikelihoodKind::kernel_eps, s);
  EXPECT_EQ(out.seeds, st.seeds);
  EXPECT_EQ(out.counters.sim_calls, 0u);
  EXPECT_EQ(s.blocks_consumed(), 0u);
}

TEST(SeedFlip, IdenticalProposalIsAccepted) {
  // one residue: every seed gives the same output, so every flip has ratio 1
  const ToySimulator toy({{0.2}, {0.3}, {0.4}});
  SamplerState st = toy_state(4, 56);
  Stream s = derive_stream(56, 0);
  for (auto rule : {SeedFlipRule::replicate_set, SeedFlipRule::per_seed}) {
    SamplerState out = seed_flip_step(st, toy, SummaryVector(Vector{0.3}), EpsilonVector(Vector{0.1}), 1.0, rule,
                                      LikelihoodKind::kernel_eps, s);
    EXPECT_EQ(out.counters.flips_proposed, 4u);
    EXPECT_EQ(out.counters.flips_accepted, 4u);
  }
}

TEST(SeedFlip, ConditionalOccupancyMatchesEnumeration) {
  const ToySimulator toy = make_toy();
  const std::size_t S = 2, cell = 3;
  const auto tuples = residue_tuples(toy.residues(), S);
  for (auto kind : {LikelihoodKind::kernel_eps, LikelihoodKind::synthetic}) {
    std::vector<double> target;
    for (const auto& t : tuples) target.push_back(toy_likelihood(toy, cell, t, kind));
    const double z = std::accumulate(target.begin(), target.end(), 0.0);
    for (auto& v : target) v /= z;

    SamplerState st = toy_state(S, 57);
    st.theta = {static_cast<double>(cell) - toy.half_width()};
    Stream s = derive_stream(57, static_cast<std::uint64_t>(kind));
    std::vector<double> occ(tuples.size(), 0.0);
    const int steps = 1000000;
    for (int i = 0; i < steps; ++i) {
      st = seed_flip_step(std::move(st), toy, SummaryVector(Vector{kToyY}), EpsilonVector(Vector{kToyEps}), 0.5,
                          SeedFlipRule::replicate_set, kind, s);
      const std::size_t idx = toy.residue_of(st.seeds[0]) + toy.residues() * toy.residue_of(st.seeds[1]);
      occ[idx] += 1.0 / steps;
    }
    EXPECT_LT(tvd(occ, target), 0.01) << to_string(kind);
  }
}

// The per-seed rule targets each seed independently with its own
// single-replicate kernel likelihood.
TEST(SeedFlip, PerSeedRuleTargetsIndependentKernels) {
  const ToySimulator toy = make_toy();
  const std::size_t cell = 1;
  std::vector<double> target(toy.residues());
  for (std::size_t r = 0; r < toy.residues(); ++r) target[r] = toy_likelihood(toy, cell, {r}, LikelihoodKind::kernel_eps);
  const double z = std::accumulate(target.begin(), target.end(), 0.0);
  for (auto& v : target) v /= z;
  SamplerState st = toy_state(3, 58);
  st.theta = {static_cast<double>(cell) - toy.half_width()};
  Stream s = derive_stream(58, 0);
  std::vector<double> occ(toy.residues(), 0.0);
  const int steps = 300000;
  for (int i = 0; i < steps; ++i) {
    st = seed_flip_step(std::move(st), toy, SummaryVector(Vector{kToyY}), EpsilonVector(Vector{kToyEps}), 0.5,
                        SeedFlipRule::per_seed, LikelihoodKind::synthetic, s);
    for (std::size_t k = 0; k < 3; ++k) occ[toy.residue_of(st.seeds[k])] += 1.0 / (3.0 * steps);
  }
  EXPECT_LT(tvd(occ, target), 0.01);
}

TEST(SeedFlip, JointKernelPreservesThetaMarginal) {
  const ToySimulator toy = make_toy();
  const auto target = toy_cell_target(toy, 2, LikelihoodKind::kernel_eps);
  SamplerConfig cfg;
  cfg.proposal_std = {1.2};
  cfg.persistent_seeds = true;
  SamplerState st = toy_state(2, 59);
  Stream s = derive_stream(59, 0);
  std::vector<double> occ(toy.cells(), 0.0);
  const int steps = 1000000;
  const SummaryVector y(Vector{kToyY});
  const EpsilonVector eps(Vector{kToyEps});
  for (int i = 0; i < steps; ++i) {
    st = abc_mcmc_step(std::move(st), toy, y, eps, toy.spec().prior, cfg, LikelihoodKind::kernel_eps, s);
    st = seed_flip_step(std::move(st), toy, y, eps, 0.3, SeedFlipRule::replicate_set, LikelihoodKind::kernel_eps, s);
    occ[toy.cell_of(st.theta[0])] += 1.0 / steps;
  }
  EXPECT_LT(tvd(occ, target), 0.01);
}

TEST(Sgld, PureNoiseIncrements) {
  SamplerConfig cfg;
  cfg.eta = 0.1;
  SamplerState st;
  st.theta = {0.0, 0.0};
  Stream s = derive_stream(60, 0);
  std::vector<double> inc;
  for (int i = 0; i < 100000; ++i) {
    const double before = st.theta[1];
    st = sgld_step(std::move(st), zero_grad, cfg, s);
    inc.push_back(st.theta[1] - before);
  }
  const auto m = moments(inc);
  EXPECT_NEAR(std::sqrt(m.var), 0.1, 0.002);
}

TEST(Sgld, NoiselessContraction) {
  SamplerConfig cfg;
  cfg.eta = 0.2;
  cfg.inject_noise = false;
  SamplerState st;
  st.theta = {1.5};
  Stream s = derive_stream(61, 0);
  st = sgld_step(std::move(st), gaussian_grad, cfg, s);
  EXPECT_DOUBLE_EQ(st.theta[0], 1.5 * (1.0 - 0.02));
}

TEST(Sgld, BoundaryRejectionKeepsTheta) {
  SamplerConfig cfg;
  cfg.eta = 1.0;
  SamplerState st;
  st.theta = {0.01};
  const PriorSpec prior{{UnivariatePrior::gamma(2.0, 1.0)}};
  Stream s = derive_stream(62, 0);
  for (int i = 0; i < 100; ++i) {
    st = sgld_step(std::move(st), zero_grad, cfg, s, PriorSupport{&prior});
    ASSERT_GT(st.theta[0], 0.0);
  }
  EXPECT_GT(st.counters.boundary_rejections, 0u);
}

class Stationarity : public ::testing::TestWithParam<KernelKind> {};

TEST_P(Stationarity, StandardGaussian) {
  SamplerConfig cfg;
  cfg.eta = GetParam() == KernelKind::sgld ? 0.1 : 0.05;
  cfg.friction_c = 1.0;
  SamplerState st;
  st.theta = {0.0};
  Stream s = derive_stream(63, static_cast<std::uint64_t>(GetParam()));
  std::vector<double> xs;
  double kinetic = 0.0;
  const int steps = 1000000;
  xs.reserve(steps);
  for (int i = 0; i < steps; ++i) {
    switch (GetParam()) {
      case KernelKind::sgld: st = sgld_step(std::move(st), gaussian_grad, cfg, s); break;
      case KernelKind::sghmc: st = sghmc_step(std::move(st), gaussian_grad, cfg, s); break;
      default: st = sgnht_step(std::move(st), gaussian_grad, cfg, s); break;
    }
    xs.push_back(st.theta[0]);
    if (!st.momentum.empty()) kinetic += st.momentum[0] * st.momentum[0] / steps;
  }
  const auto m = moments(xs);
  EXPECT_LT(std::abs(m.mean), 3.0 * m.se);
  EXPECT_NEAR(m.var, 1.0, 0.1);
  if (GetParam() == KernelKind::sgnht) {
    EXPECT_GE(kinetic, 0.95);
    EXPECT_LE(kinetic, 1.05);
  }
}

INSTANTIATE_TEST_SUITE_P(Kernels, Stationarity, ::testing::Values(KernelKind::sgld, KernelKind::sghmc, KernelKind::sgnht),
                         [](const auto& info) { return std::string(to_string(info.param)); });

TEST(Sghmc, FrictionlessConservesEnergy) {
  SamplerConfig cfg;
  cfg.eta = 0.01;
  cfg.friction_c = 0.0;
  cfg.inject_noise = false;
  SamplerState st;
  st.theta = {1.0};
  st.momentum = {0.5};
  st.grad_ema_mean = {1.0};
  st.grad_ema_var = {0.0};
  cfg.vhat_decay = 1.0;  // freeze Vhat at zero
  Stream s = derive_stream(64, 0);
  const double h0 = 0.5 * (1.0 + 0.25);
  for (int i = 0; i < 100; ++i) {
    st = sghmc_step(std::move(st), gaussian_grad, cfg, s);
    const double h = 0.5 * (st.theta[0] * st.theta[0] + st.momentum[0] * st.momentum[0]);
    EXPECT_NEAR(h, h0, 0.02);
  }
}

// With no gradient the momentum is an OU process whose stationary variance
// is 1 / (1 - eta c / 2).
TEST(Sghmc, OrnsteinUhlenbeckMomentum) {
  SamplerConfig cfg;
  cfg.eta = 0.01;
  cfg.friction_c = 5.0;
  SamplerState st;
  st.theta = {0.0};
  Stream s = derive_stream(65, 0);
  std::vector<double> rho;
  for (int i = 0; i < 400000; ++i) {
    st = sghmc_step(std::move(st), zero_grad, cfg, s);
    rho.push_back(st.momentum[0]);
  }
  const auto m = moments(rho);
  EXPECT_NEAR(m.var, 1.0 / (1.0 - 0.025), 0.05);
  EXPECT_EQ(st.counters.noise_clamps, 0u);
}

TEST(Sghmc, NoiseClampIsCounted) {
  SamplerConfig cfg;
  cfg.eta = 4.0;  // noise variance 2 eta (c + V - eta V / 2) < 0 once eta > 2
  cfg.friction_c = 0.0;
  SamplerState st;
  st.theta = {0.0};
  st.momentum = {0.0};
  st.grad_ema_mean = {0.0};
  st.grad_ema_var = {10.0};
  Stream s = derive_stream(66, 0);
  st = sghmc_step(std::move(st), zero_grad, cfg, s);
  EXPECT_EQ(st.counters.noise_clamps, 1u);
}

TEST(Sgnht, ThermostatFallsWithoutMomentum) {
  SamplerConfig cfg;
  cfg.eta = 0.05;
  cfg.friction_c = 2.0;
  cfg.inject_noise = false;
  SamplerState st;
  st.theta = {0.0, 0.0};
  Stream s = derive_stream(67, 0);
  st = sgnht_step(std::move(st), zero_grad, cfg, s);  // initialises rho = 0, xi = c
  EXPECT_NEAR(st.thermostat, 2.0 - 0.05, 1e-15);
  st = sgnht_step(std::move(st), zero_grad, cfg, s);
  EXPECT_NEAR(st.thermostat, 2.0 - 0.1, 1e-15);
}

TEST(Leapfrog, Reversible) {
  SamplerConfig cfg;
  auto grad = [](const ParameterVector& t) {
    Vector g(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) g[i] = t[i] * t[i] * t[i] + 0.5 * t[i];
    return g;
  };
  ParameterVector theta{0.3, -1.1, 0.8};
  Vector rho{0.5, 0.2, -0.7};
  const ParameterVector start = theta;
  leapfrog(theta, rho, grad, 0.05, 40, cfg);
  for (auto& r : rho) r = -r;
  leapfrog(theta, rho, grad, 0.05, 40, cfg);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(theta[i], start[i], 1e-10);
}

TEST(Hmc, ZeroStepsOnlyRefreshesMomentum) {
  SamplerConfig cfg;
  SamplerState st;
  st.theta = {0.4};
  Stream s = derive_stream(68, 0);
  auto U = [](const ParameterVector& t) { return 0.5 * t[0] * t[0]; };
  auto gU = [](const ParameterVector& t) { return Vector{t[0]}; };
  st = hmc_reference_step(std::move(st), U, gU, cfg, 0, s);
  EXPECT_EQ(st.theta[0], 0.4);
  EXPECT_EQ(st.momentum.size(), 1u);
}

TEST(Hmc, StandardGaussian) {
  SamplerConfig cfg;
  cfg.eta = 0.1;
  SamplerState st;
  st.theta = {0.0};
  Stream s = derive_stream(69, 0);
  auto U = [](const ParameterVector& t) { return 0.5 * t[0] * t[0]; };
  auto gU = [](const ParameterVector& t) { return Vector{t[0]}; };
  std::vector<double> xs;
  for (int i = 0; i < 100000; ++i) {
    st = hmc_reference_step(std::move(st), U, gU, cfg, 10, s);
    xs.push_back(st.theta[0]);
  }
  EXPECT_GT(static_cast<double>(st.counters.accepted) / st.counters.proposals, 0.95);
  const auto m = moments(xs);
  EXPECT_GE(m.var, 0.95);
  EXPECT_LE(m.var, 1.05);
}

TEST(RunChain, ZeroStepsIsEmpty) {
  SamplerState st;
  st.theta = {0.0};
  Stream s = derive_stream(70, 0);
  SamplerConfig cfg;
  const auto trace = run_chain(
      st, [&](SamplerState x, Stream& r) { return sgld_step(std::move(x), zero_grad, cfg, r); }, 0, 1, Recorder{}, s);
  EXPECT_EQ(trace.size(), 0u);
  EXPECT_EQ(trace.sim_calls, 0u);
  EXPECT_FALSE(trace.failed);
}

TEST(RunChain, FailureKeepsPartialTrace) {
  SamplerState st;
  st.theta = {0.0};
  Stream s = derive_stream(71, 0);
  const auto trace = run_chain(
      st,
      [](SamplerState x, Stream&) {
        if (x.step == 7) throw std::runtime_error("simulator panic");
        ++x.step;
        return x;
      },
      20, 1, Recorder{}, s);
  EXPECT_TRUE(trace.failed);
  EXPECT_EQ(trace.size(), 7u);
  EXPECT_NE(trace.failure.find("panic"), std::string::npos);
}

TEST(RunChain, ThinningAndMomentumRecording) {
  SamplerConfig cfg;
  SamplerState st;
  st.theta = {0.0};
  Stream s = derive_stream(72, 0);
  const auto trace = run_chain(
      st, [&](SamplerState x, Stream& r) { return sgnht_step(std::move(x), gaussian_grad, cfg, r); }, 100, 10,
      Recorder{true}, s);
  EXPECT_EQ(trace.size(), 10u);
  EXPECT_EQ(trace.steps.front(), 10u);
  EXPECT_EQ(trace.momenta.size(), 10u);
  EXPECT_EQ(trace.thermostat.size(), 10u);
}

// Persistent SPSA chain: 2SR simulations for the gradient plus 2 per
// proposed flip (per-seed rule), i.e. 2SR + 2S gamma per step on average.
TEST(RunChain, SimulationAccounting) {
  const ExpDemoSimulator sim(0.1, 0.1);
  const SummaryVector y(Vector{7.74});
  const EpsilonVector eps(Vector{0.37});
  SamplerConfig cfg;
  cfg.eta = 0.01;
  cfg.gamma = 0.1;
  cfg.grad_cfg.method = GradientMethod::spsa;
  cfg.grad_cfg.repeats = 2;
  cfg.grad_cfg.d_theta = {0.002};
  const std::size_t S = 5;
  SamplerState st;
  st.theta = {0.13};
  Stream s = derive_stream(73, 0);
  st.seeds = draw_seed_vector(S, s);
  Stream masks = derive_stream(73, 1);
  const PriorSpec& prior = sim.spec().prior;
  auto step = [&](SamplerState x, Stream& r) {
    x = sgld_step(
        std::move(x),
        [&](const SamplerState& cur) { return spsa_grad_U(sim, cur.theta, cur.seeds, y, eps, prior, cfg.grad_cfg, masks); },
        cfg, r, PriorSupport{&prior});
    return seed_flip_step(std::move(x), sim, y, eps, cfg.gamma, SeedFlipRule::per_seed, LikelihoodKind::synthetic, r);
  };
  const std::size_t steps = 20000;
  const auto trace = run_chain(st, step, steps, 1, Recorder{}, s);
  const double per_step = static_cast<double>(trace.sim_calls) / steps;
  const double expected = 2.0 * S * 2 + 2.0 * S * cfg.gamma;
  EXPECT_NEAR(per_step / expected, 1.0, 0.02);
  EXPECT_EQ(trace.counters.flips_proposed * 2 + steps * 2 * S * 2, trace.sim_calls);
}

TEST(Kernels, NamesRoundTrip) {
  for (auto k : {KernelKind::abc_mcmc, KernelKind::sgld, KernelKind::sghmc, KernelKind::sgnht, KernelKind::hmc}) {
    EXPECT_EQ(kernel_from_string(to_string(k)), k);
  }
  EXPECT_THROW(kernel_from_string("nuts"), std::invalid_argument);
  EXPECT_EQ(flip_rule_from_string("per_seed"), SeedFlipRule::per_seed);
}
