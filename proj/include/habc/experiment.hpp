#pragma once

// Config-driven experiment runner: config schema and JSON round trip,
// presets, problem construction, per-chain transition assembly, a worker
// pool over chains, and the output bundle (trace CSVs, diagnostics.json,
// config.resolved).

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "habc/blowfly.hpp"
#include "habc/csv.hpp"
#include "habc/diagnostics.hpp"
#include "habc/exp_demo.hpp"
#include "habc/gradients.hpp"
#include "habc/logistic.hpp"
#include "habc/samplers.hpp"

namespace habc {

using Json = nlohmann::ordered_json;

inline constexpr const char* kConfigSchema = "habc-config/1";

/// Invalid configuration; the message starts with the offending field path.
class config_error : public std::invalid_argument {
 public:
  config_error(const std::string& path, const std::string& what) : std::invalid_argument(path + ": " + what) {}
};

enum class ProblemKind { exp_demo, blowfly, logreg };

inline const char* to_string(ProblemKind p) {
  switch (p) {
    case ProblemKind::exp_demo: return "exp-demo";
    case ProblemKind::blowfly: return "blowfly";
    case ProblemKind::logreg: return "logreg";
  }
  return "?";
}

inline ProblemKind problem_from_string(const std::string& s) {
  if (s == "exp-demo") return ProblemKind::exp_demo;
  if (s == "blowfly") return ProblemKind::blowfly;
  if (s == "logreg") return ProblemKind::logreg;
  throw std::invalid_argument("unknown problem '" + s + "' (expected exp-demo, blowfly or logreg)");
}

struct ExpDemoProblem {
  double prior_alpha = 0.1;
  double prior_beta = 0.1;
  double observed_y = 7.74;
  int n = kExpDemoDefaultN;
  bool operator==(const ExpDemoProblem&) const = default;
};

struct BlowflyProblem {
  // Empty path: the observed series is simulated at the reference
  // parameters with observed_seed.
  std::string observed_path;
  std::uint64_t observed_seed = 20240501;
  int horizon = 250;
  int burnin = 50;
  double initial_population = 180.0;
  std::array<double, 4> quantiles{0.25, 0.5, 0.75, 1.0};
  std::array<double, 2> threshold_quantiles{0.6, 0.9};
  double log_prior_mean = 0.0;
  double log_prior_sd = 2.0;
  double tau_rate = 10.0;
  bool operator==(const BlowflyProblem&) const = default;
};

struct LogregProblem {
  std::string data_path = "data/digits01_8x8.csv";
  bool append_bias = true;
  double prior_sd = 1.0;
  std::size_t batch_size = 100;
  std::size_t map_steps = 20000;
  double map_lr = 1e-3;
  double map_decay = 1000.0;
  bool operator==(const LogregProblem&) const = default;
};

/// One sampler configuration; an experiment runs `chains` chains of each.
struct RunConfig {
  std::string label;
  KernelKind kernel = KernelKind::sgld;
  double eta = 0.01;
  double friction_c = 1.0;
  double gamma = 0.1;
  bool persistent_seeds = false;
  SeedFlipRule flip_rule = SeedFlipRule::replicate_set;
  double vhat_decay = 0.99;
  int leapfrog_steps = 10;
  Vector proposal_std{0.1};
  Vector mass{1.0};
  std::size_t num_seeds = 5;
  GradientMethod gradient = GradientMethod::spsa;
  Vector d_theta{1e-2};
  int repeats = 1;
  bool operator==(const RunConfig&) const = default;
};

struct DiagnosticsConfig {
  std::size_t tvd_bins = 100;
  double burnin_fraction = 0.1;
  std::size_t autocorr_lag = 1;
  std::uint64_t projection_seed = 17;
  std::size_t projection_points = 1000;
  bool operator==(const DiagnosticsConfig&) const = default;
};

/// Gradient bias/variance study at a fixed parameter value.
struct ProbeConfig {
  bool enabled = false;
  std::size_t trials = 10000;
  std::vector<std::size_t> num_seeds{5, 50};
  std::vector<LikelihoodKind> likelihoods{LikelihoodKind::kernel_eps, LikelihoodKind::synthetic};
  GradientMethod method = GradientMethod::fdsa;
  double d_theta = 0.01;
  Vector theta;  // empty: the analytic posterior mode
  bool operator==(const ProbeConfig&) const = default;
};

struct ExperimentConfig {
  std::string schema = kConfigSchema;
  std::string name;
  ProblemKind problem = ProblemKind::exp_demo;
  ExpDemoProblem exp_demo;
  BlowflyProblem blowfly;
  LogregProblem logreg;
  LikelihoodKind likelihood = LikelihoodKind::synthetic;
  Vector epsilon{0.37};
  Vector start;  // empty: problem default
  std::vector<RunConfig> runs;
  std::size_t chains = 5;
  std::size_t steps = 10000;
  std::size_t thinning = 1;
  std::uint64_t master_seed = 1;
  std::string output_dir = "habc-out";
  DiagnosticsConfig diagnostics;
  ProbeConfig probe;
  bool operator==(const ExperimentConfig&) const = default;
};

// ---------------------------------------------------------------------------
// JSON

namespace detail {

inline void check_keys(const Json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw config_error(path.empty() ? "<root>" : path, "expected an object");
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) throw config_error(path.empty() ? key : path + "." + key, "unknown field");
  }
}

inline std::string join(const std::string& path, const char* key) { return path.empty() ? key : path + "." + key; }

template <class T>
void read(const Json& obj, const std::string& path, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw config_error(join(path, key), std::string("wrong type (") + e.what() + ")");
  }
}

template <class Enum, class Parse>
void read_enum(const Json& obj, const std::string& path, const char* key, Enum& out, Parse parse) {
  if (!obj.contains(key)) return;
  std::string s;
  read(obj, path, key, s);
  try {
    out = parse(s);
  } catch (const std::invalid_argument& e) {
    throw config_error(join(path, key), e.what());
  }
}

}  // namespace detail

inline Json to_json(const RunConfig& r) {
  return Json{{"label", r.label},
              {"kernel", to_string(r.kernel)},
              {"eta", r.eta},
              {"friction_c", r.friction_c},
              {"gamma", r.gamma},
              {"persistent_seeds", r.persistent_seeds},
              {"flip_rule", to_string(r.flip_rule)},
              {"vhat_decay", r.vhat_decay},
              {"leapfrog_steps", r.leapfrog_steps},
              {"proposal_std", r.proposal_std},
              {"mass", r.mass},
              {"num_seeds", r.num_seeds},
              {"gradient", to_string(r.gradient)},
              {"d_theta", r.d_theta},
              {"repeats", r.repeats}};
}

inline Json to_json(const ExperimentConfig& c) {
  Json problem{{"name", to_string(c.problem)}};
  switch (c.problem) {
    case ProblemKind::exp_demo:
      problem["prior_alpha"] = c.exp_demo.prior_alpha;
      problem["prior_beta"] = c.exp_demo.prior_beta;
      problem["observed_y"] = c.exp_demo.observed_y;
      problem["n"] = c.exp_demo.n;
      break;
    case ProblemKind::blowfly:
      problem["observed_path"] = c.blowfly.observed_path;
      problem["observed_seed"] = c.blowfly.observed_seed;
      problem["horizon"] = c.blowfly.horizon;
      problem["burnin"] = c.blowfly.burnin;
      problem["initial_population"] = c.blowfly.initial_population;
      problem["quantiles"] = c.blowfly.quantiles;
      problem["threshold_quantiles"] = c.blowfly.threshold_quantiles;
      problem["log_prior_mean"] = c.blowfly.log_prior_mean;
      problem["log_prior_sd"] = c.blowfly.log_prior_sd;
      problem["tau_rate"] = c.blowfly.tau_rate;
      break;
    case ProblemKind::logreg:
      problem["data_path"] = c.logreg.data_path;
      problem["append_bias"] = c.logreg.append_bias;
      problem["prior_sd"] = c.logreg.prior_sd;
      problem["batch_size"] = c.logreg.batch_size;
      problem["map_steps"] = c.logreg.map_steps;
      problem["map_lr"] = c.logreg.map_lr;
      problem["map_decay"] = c.logreg.map_decay;
      break;
  }
  Json runs = Json::array();
  for (const auto& r : c.runs) runs.push_back(to_json(r));
  Json likelihoods = Json::array();
  for (auto k : c.probe.likelihoods) likelihoods.push_back(to_string(k));
  return Json{{"schema", c.schema},
              {"name", c.name},
              {"problem", problem},
              {"likelihood", to_string(c.likelihood)},
              {"epsilon", c.epsilon},
              {"start", c.start},
              {"chains", c.chains},
              {"steps", c.steps},
              {"thinning", c.thinning},
              {"master_seed", c.master_seed},
              {"output_dir", c.output_dir},
              {"runs", runs},
              {"diagnostics",
               {{"tvd_bins", c.diagnostics.tvd_bins},
                {"burnin_fraction", c.diagnostics.burnin_fraction},
                {"autocorr_lag", c.diagnostics.autocorr_lag},
                {"projection_seed", c.diagnostics.projection_seed},
                {"projection_points", c.diagnostics.projection_points}}},
              {"probe",
               {{"enabled", c.probe.enabled},
                {"trials", c.probe.trials},
                {"num_seeds", c.probe.num_seeds},
                {"likelihoods", likelihoods},
                {"method", to_string(c.probe.method)},
                {"d_theta", c.probe.d_theta},
                {"theta", c.probe.theta}}}};
}

inline RunConfig run_from_json(const Json& j, const std::string& path) {
  detail::check_keys(j, path,
                     {"label", "kernel", "eta", "friction_c", "gamma", "persistent_seeds", "flip_rule", "vhat_decay",
                      "leapfrog_steps", "proposal_std", "mass", "num_seeds", "gradient", "d_theta", "repeats"});
  RunConfig r;
  detail::read(j, path, "label", r.label);
  detail::read_enum(j, path, "kernel", r.kernel, kernel_from_string);
  detail::read(j, path, "eta", r.eta);
  detail::read(j, path, "friction_c", r.friction_c);
  detail::read(j, path, "gamma", r.gamma);
  detail::read(j, path, "persistent_seeds", r.persistent_seeds);
  detail::read_enum(j, path, "flip_rule", r.flip_rule, flip_rule_from_string);
  detail::read(j, path, "vhat_decay", r.vhat_decay);
  detail::read(j, path, "leapfrog_steps", r.leapfrog_steps);
  detail::read(j, path, "proposal_std", r.proposal_std);
  detail::read(j, path, "mass", r.mass);
  detail::read(j, path, "num_seeds", r.num_seeds);
  detail::read_enum(j, path, "gradient", r.gradient, gradient_method_from_string);
  detail::read(j, path, "d_theta", r.d_theta);
  detail::read(j, path, "repeats", r.repeats);
  return r;
}

/// Checks ranges and cross-field consistency; throws config_error.
inline void validate(const ExperimentConfig& c) {
  if (c.schema != kConfigSchema) throw config_error("schema", "expected '" + std::string(kConfigSchema) + "'");
  if (c.thinning < 1) throw config_error("thinning", "must be >= 1");
  if (c.epsilon.empty()) throw config_error("epsilon", "must have at least one entry");
  for (double e : c.epsilon) {
    if (!(e > 0.0) || !std::isfinite(e)) throw config_error("epsilon", "entries must be > 0");
  }
  const std::size_t stat_dim = c.problem == ProblemKind::exp_demo  ? 1
                               : c.problem == ProblemKind::blowfly ? kBlowflyStatDim
                                                                   : 0;
  if (stat_dim != 0 && c.epsilon.size() != stat_dim) {
    throw config_error("epsilon", "needs " + std::to_string(stat_dim) + " entries for " + to_string(c.problem));
  }
  if (c.problem == ProblemKind::exp_demo) {
    if (!(c.exp_demo.prior_alpha > 0.0)) throw config_error("problem.prior_alpha", "must be > 0");
    if (!(c.exp_demo.prior_beta > 0.0)) throw config_error("problem.prior_beta", "must be > 0");
    if (!(c.exp_demo.observed_y > 0.0)) throw config_error("problem.observed_y", "must be > 0");
    if (c.exp_demo.n < 1) throw config_error("problem.n", "must be >= 1");
  }
  if (c.problem == ProblemKind::blowfly && !(c.blowfly.horizon > c.blowfly.burnin && c.blowfly.burnin >= 1)) {
    throw config_error("problem.horizon", "need horizon > burnin >= 1");
  }
  if (c.problem == ProblemKind::logreg && c.logreg.batch_size < 1) {
    throw config_error("problem.batch_size", "must be >= 1");
  }
  if (!(c.diagnostics.burnin_fraction >= 0.0 && c.diagnostics.burnin_fraction < 1.0)) {
    throw config_error("diagnostics.burnin_fraction", "must be in [0, 1)");
  }
  if (c.diagnostics.tvd_bins < 1) throw config_error("diagnostics.tvd_bins", "must be >= 1");
  for (std::size_t i = 0; i < c.runs.size(); ++i) {
    const auto& r = c.runs[i];
    const std::string p = "runs[" + std::to_string(i) + "]";
    if (r.label.empty()) throw config_error(p + ".label", "must not be empty");
    for (std::size_t k = 0; k < i; ++k) {
      if (c.runs[k].label == r.label) throw config_error(p + ".label", "duplicate label '" + r.label + "'");
    }
    if (r.label.find_first_of("/\\ ") != std::string::npos) throw config_error(p + ".label", "must not contain '/', '\\' or spaces");
    if (!(r.eta > 0.0)) throw config_error(p + ".eta", "must be > 0");
    if (!(r.friction_c >= 0.0)) throw config_error(p + ".friction_c", "must be >= 0");
    if (!(r.gamma >= 0.0 && r.gamma <= 1.0)) throw config_error(p + ".gamma", "must be in [0, 1]");
    if (!(r.vhat_decay >= 0.0 && r.vhat_decay < 1.0)) throw config_error(p + ".vhat_decay", "must be in [0, 1)");
    if (r.num_seeds < 1) throw config_error(p + ".num_seeds", "must be >= 1");
    if (r.repeats < 1) throw config_error(p + ".repeats", "must be >= 1");
    if (r.mass.empty()) throw config_error(p + ".mass", "must have at least one entry");
    for (double m : r.mass) {
      if (!(m > 0.0)) throw config_error(p + ".mass", "entries must be > 0");
    }
    for (double d : r.d_theta) {
      if (!(d > 0.0)) throw config_error(p + ".d_theta", "entries must be > 0");
    }
    if (r.d_theta.empty()) throw config_error(p + ".d_theta", "must have at least one entry");
    if (r.proposal_std.empty()) throw config_error(p + ".proposal_std", "must have at least one entry");
    if (c.problem == ProblemKind::logreg) {
      if (r.kernel == KernelKind::abc_mcmc) throw config_error(p + ".kernel", "abc_mcmc needs a simulator problem");
    } else {
      if (r.gradient == GradientMethod::exact && r.kernel != KernelKind::abc_mcmc && r.kernel != KernelKind::hmc) {
        throw config_error(p + ".gradient", "exact gradients are only available for logreg");
      }
      if (r.kernel == KernelKind::hmc && c.problem != ProblemKind::exp_demo) {
        throw config_error(p + ".kernel", "hmc needs an analytic potential (exp-demo or logreg)");
      }
      if (c.likelihood == LikelihoodKind::synthetic && r.num_seeds < 2 && r.kernel != KernelKind::hmc) {
        throw config_error(p + ".num_seeds", "synthetic likelihood needs at least 2 seeds");
      }
    }
  }
  if (c.probe.enabled) {
    if (c.problem == ProblemKind::logreg) throw config_error("probe.enabled", "needs a simulator problem");
    if (c.probe.trials < 2) throw config_error("probe.trials", "must be >= 2");
    if (!(c.probe.d_theta > 0.0)) throw config_error("probe.d_theta", "must be > 0");
    if (c.probe.method == GradientMethod::exact) throw config_error("probe.method", "must be fdsa or spsa");
    for (std::size_t s : c.probe.num_seeds) {
      if (s < 2) throw config_error("probe.num_seeds", "entries must be >= 2");
    }
  }
}

inline ExperimentConfig config_from_json(const Json& j) {
  detail::check_keys(j, "",
                     {"schema", "name", "problem", "likelihood", "epsilon", "start", "chains", "steps", "thinning",
                      "master_seed", "output_dir", "runs", "diagnostics", "probe"});
  ExperimentConfig c;
  detail::read(j, "", "schema", c.schema);
  detail::read(j, "", "name", c.name);
  if (j.contains("problem")) {
    const Json& p = j.at("problem");
    if (!p.is_object()) throw config_error("problem", "expected an object");
    detail::read_enum(p, "problem", "name", c.problem, problem_from_string);
    switch (c.problem) {
      case ProblemKind::exp_demo:
        detail::check_keys(p, "problem", {"name", "prior_alpha", "prior_beta", "observed_y", "n"});
        detail::read(p, "problem", "prior_alpha", c.exp_demo.prior_alpha);
        detail::read(p, "problem", "prior_beta", c.exp_demo.prior_beta);
        detail::read(p, "problem", "observed_y", c.exp_demo.observed_y);
        detail::read(p, "problem", "n", c.exp_demo.n);
        break;
      case ProblemKind::blowfly:
        detail::check_keys(p, "problem",
                           {"name", "observed_path", "observed_seed", "horizon", "burnin", "initial_population",
                            "quantiles", "threshold_quantiles", "log_prior_mean", "log_prior_sd", "tau_rate"});
        detail::read(p, "problem", "observed_path", c.blowfly.observed_path);
        detail::read(p, "problem", "observed_seed", c.blowfly.observed_seed);
        detail::read(p, "problem", "horizon", c.blowfly.horizon);
        detail::read(p, "problem", "burnin", c.blowfly.burnin);
        detail::read(p, "problem", "initial_population", c.blowfly.initial_population);
        detail::read(p, "problem", "quantiles", c.blowfly.quantiles);
        detail::read(p, "problem", "threshold_quantiles", c.blowfly.threshold_quantiles);
        detail::read(p, "problem", "log_prior_mean", c.blowfly.log_prior_mean);
        detail::read(p, "problem", "log_prior_sd", c.blowfly.log_prior_sd);
        detail::read(p, "problem", "tau_rate", c.blowfly.tau_rate);
        break;
      case ProblemKind::logreg:
        detail::check_keys(p, "problem",
                           {"name", "data_path", "append_bias", "prior_sd", "batch_size", "map_steps", "map_lr",
                            "map_decay"});
        detail::read(p, "problem", "data_path", c.logreg.data_path);
        detail::read(p, "problem", "append_bias", c.logreg.append_bias);
        detail::read(p, "problem", "prior_sd", c.logreg.prior_sd);
        detail::read(p, "problem", "batch_size", c.logreg.batch_size);
        detail::read(p, "problem", "map_steps", c.logreg.map_steps);
        detail::read(p, "problem", "map_lr", c.logreg.map_lr);
        detail::read(p, "problem", "map_decay", c.logreg.map_decay);
        break;
    }
  }
  detail::read_enum(j, "", "likelihood", c.likelihood, likelihood_from_string);
  detail::read(j, "", "epsilon", c.epsilon);
  detail::read(j, "", "start", c.start);
  detail::read(j, "", "chains", c.chains);
  detail::read(j, "", "steps", c.steps);
  detail::read(j, "", "thinning", c.thinning);
  detail::read(j, "", "master_seed", c.master_seed);
  detail::read(j, "", "output_dir", c.output_dir);
  if (j.contains("runs")) {
    const Json& runs = j.at("runs");
    if (!runs.is_array()) throw config_error("runs", "expected an array");
    for (std::size_t i = 0; i < runs.size(); ++i) {
      c.runs.push_back(run_from_json(runs[i], "runs[" + std::to_string(i) + "]"));
    }
  }
  if (j.contains("diagnostics")) {
    const Json& d = j.at("diagnostics");
    detail::check_keys(d, "diagnostics",
                       {"tvd_bins", "burnin_fraction", "autocorr_lag", "projection_seed", "projection_points"});
    detail::read(d, "diagnostics", "tvd_bins", c.diagnostics.tvd_bins);
    detail::read(d, "diagnostics", "burnin_fraction", c.diagnostics.burnin_fraction);
    detail::read(d, "diagnostics", "autocorr_lag", c.diagnostics.autocorr_lag);
    detail::read(d, "diagnostics", "projection_seed", c.diagnostics.projection_seed);
    detail::read(d, "diagnostics", "projection_points", c.diagnostics.projection_points);
  }
  if (j.contains("probe")) {
    const Json& p = j.at("probe");
    detail::check_keys(p, "probe", {"enabled", "trials", "num_seeds", "likelihoods", "method", "d_theta", "theta"});
    detail::read(p, "probe", "enabled", c.probe.enabled);
    detail::read(p, "probe", "trials", c.probe.trials);
    detail::read(p, "probe", "num_seeds", c.probe.num_seeds);
    if (p.contains("likelihoods")) {
      std::vector<std::string> names;
      detail::read(p, "probe", "likelihoods", names);
      c.probe.likelihoods.clear();
      for (const auto& n : names) {
        try {
          c.probe.likelihoods.push_back(likelihood_from_string(n));
        } catch (const std::invalid_argument& e) {
          throw config_error("probe.likelihoods", e.what());
        }
      }
    }
    detail::read_enum(p, "probe", "method", c.probe.method, gradient_method_from_string);
    detail::read(p, "probe", "d_theta", c.probe.d_theta);
    detail::read(p, "probe", "theta", c.probe.theta);
  }
  validate(c);
  return c;
}

inline std::string dump_config(const ExperimentConfig& c) { return to_json(c).dump(2) + "\n"; }

inline ExperimentConfig parse_config(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw config_error("<root>", std::string("not valid JSON: ") + e.what());
  }
  return config_from_json(j);
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

// ---------------------------------------------------------------------------
// Presets

inline std::vector<std::string> preset_names() { return {"demo-table1", "demo-gradfig", "blowfly", "logreg"}; }

namespace detail {

inline RunConfig demo_run(std::string label, KernelKind kernel, double eta, bool persistent) {
  RunConfig r;
  r.label = std::move(label);
  r.kernel = kernel;
  r.eta = eta;
  r.persistent_seeds = persistent;
  r.num_seeds = 5;
  r.gradient = GradientMethod::fdsa;
  r.d_theta = {0.002};
  r.proposal_std = {0.03};
  r.flip_rule = SeedFlipRule::replicate_set;
  return r;
}

}  // namespace detail

/// Desk-scale configurations of the published Hamiltonian ABC studies. Step
/// sizes come from the grid-search helper (`habc tune`) and are not claimed
/// optimal.
inline ExperimentConfig preset(const std::string& name) {
  ExperimentConfig c;
  c.name = name;
  if (name == "demo-table1") {
    c.problem = ProblemKind::exp_demo;
    c.epsilon = {0.37};
    c.chains = 5;
    c.steps = 10000;
    c.master_seed = 2015;
    c.output_dir = "habc-out/demo-table1";
    c.runs = {detail::demo_run("sl-abc", KernelKind::abc_mcmc, 0.03, false),
              detail::demo_run("sl-abc-persistent", KernelKind::abc_mcmc, 0.03, true),
              detail::demo_run("sgld", KernelKind::sgld, 0.015, false),
              detail::demo_run("sgld-persistent", KernelKind::sgld, 0.009, true),
              detail::demo_run("sgnht", KernelKind::sgnht, 0.01, false),
              detail::demo_run("sgnht-persistent", KernelKind::sgnht, 0.01, true)};
    // tuned on master seed 99 (40 chains per setting), by mean TVD
    for (auto& r : c.runs) {
      if (r.kernel == KernelKind::sgnht) r.friction_c = 2.0;
    }
  } else if (name == "demo-gradfig") {
    c.problem = ProblemKind::exp_demo;
    c.epsilon = {0.37};
    c.chains = 0;
    c.steps = 0;
    c.master_seed = 2015;
    c.output_dir = "habc-out/demo-gradfig";
    c.probe.enabled = true;
  } else if (name == "blowfly") {
    c.problem = ProblemKind::blowfly;
    c.epsilon = {0.5, 0.5, 0.5, 0.5, 0.25, 0.25, 0.25, 0.25, 0.75, 0.75};
    c.chains = 1;
    c.steps = 5000;
    c.master_seed = 2016;
    c.output_dir = "habc-out/blowfly";
    auto make = [](std::string label, KernelKind k, double eta, bool persistent) {
      RunConfig r;
      r.label = std::move(label);
      r.kernel = k;
      r.eta = eta;
      r.persistent_seeds = persistent;
      r.num_seeds = 10;
      r.gradient = GradientMethod::spsa;
      r.repeats = 2;
      r.d_theta = {0.05};
      r.proposal_std = {0.05};
      // per-seed flip, costing 2 simulations per proposed flip
      r.flip_rule = SeedFlipRule::per_seed;
      return r;
    };
    c.runs = {make("sl-abc", KernelKind::abc_mcmc, 0.05, false), make("sgld", KernelKind::sgld, 0.03, false),
              make("sgnht", KernelKind::sgnht, 0.01, false), make("sgld-persistent", KernelKind::sgld, 0.03, true)};
  } else if (name == "logreg") {
    c.problem = ProblemKind::logreg;
    c.epsilon = {1.0};  // unused
    c.chains = 1;
    c.steps = 10000;
    c.master_seed = 2017;
    c.output_dir = "habc-out/logreg";
    auto make = [](std::string label, KernelKind k, double eta, GradientMethod g) {
      RunConfig r;
      r.label = std::move(label);
      r.kernel = k;
      r.eta = eta;
      r.gradient = g;
      r.repeats = 10;
      r.d_theta = {0.01};
      r.num_seeds = 1;
      return r;
    };
    c.runs = {make("sgld-exact", KernelKind::sgld, 0.02, GradientMethod::exact),
              make("sgld-spsa", KernelKind::sgld, 0.02, GradientMethod::spsa),
              make("sgnht-spsa", KernelKind::sgnht, 0.01, GradientMethod::spsa)};
  } else {
    std::string list;
    for (const auto& n : preset_names()) list += (list.empty() ? "" : ", ") + n;
    throw std::invalid_argument("unknown preset '" + name + "' (available: " + list + ")");
  }
  validate(c);
  return c;
}

// ---------------------------------------------------------------------------
// Problem construction

/// Everything a chain needs about the problem, built once per experiment
/// and shared read-only by all chains.
struct ProblemContext {
  ProblemKind kind = ProblemKind::exp_demo;
  std::shared_ptr<const Simulator> sim;
  SummaryVector y;
  EpsilonVector eps;
  PriorSpec prior;
  std::optional<GammaDistribution> posterior;  // exp-demo only
  std::shared_ptr<const LogisticRegressionTarget> logreg;
  ParameterVector map;  // logreg SGD MAP
  std::size_t batch_size = 0;  // logreg mini-batch size
  ParameterVector start;

  std::size_t dim() const { return start.size(); }
};

namespace detail {

inline std::string resolve_data_path(const std::string& path) {
  namespace fs = std::filesystem;
  if (path.empty() || fs::exists(path) || fs::path(path).is_absolute()) return path;
#ifdef HABC_SOURCE_DIR
  const fs::path alt = fs::path(HABC_SOURCE_DIR) / path;
  if (fs::exists(alt)) return alt.string();
#endif
  return path;
}

}  // namespace detail

inline BlowflyConfig blowfly_config_of(const BlowflyProblem& p) {
  BlowflyConfig bc;
  bc.horizon = p.horizon;
  bc.burnin = p.burnin;
  bc.initial_population = p.initial_population;
  bc.quantiles = p.quantiles;
  return bc;
}

/// Observed blowfly series: loaded from observed_path, or simulated at the
/// reference parameters with observed_seed.
inline std::vector<double> blowfly_observed_series(const BlowflyProblem& p) {
  if (!p.observed_path.empty()) return load_series_csv(detail::resolve_data_path(p.observed_path));
  return blowfly_series(blowfly_reference_params(), p.observed_seed, blowfly_config_of(p));
}

inline ProblemContext build_problem(const ExperimentConfig& c) {
  ProblemContext ctx;
  ctx.kind = c.problem;
  switch (c.problem) {
    case ProblemKind::exp_demo: {
      const auto& p = c.exp_demo;
      auto sim = std::make_shared<ExpDemoSimulator>(p.prior_alpha, p.prior_beta, p.n);
      ctx.prior = sim->spec().prior;
      ctx.sim = sim;
      ctx.y = SummaryVector(Vector{p.observed_y});
      ctx.eps = EpsilonVector(c.epsilon);
      ctx.posterior = exp_demo_true_posterior(p.prior_alpha, p.prior_beta, p.observed_y, p.n);
      ctx.start = {ctx.posterior->mode() > 0.0 ? ctx.posterior->mode() : ctx.posterior->mean()};
      break;
    }
    case ProblemKind::blowfly: {
      const auto& p = c.blowfly;
      const auto series = blowfly_observed_series(p);
      if (series.size() < 4) throw config_error("problem.observed_path", "observed series is too short");
      BlowflyConfig bc = blowfly_config_of(p);
      bc.peak_thresholds = {empirical_quantile(series, p.threshold_quantiles[0]),
                            empirical_quantile(series, p.threshold_quantiles[1])};
      auto sim = std::make_shared<BlowflySimulator>(bc, blowfly_default_prior(p.log_prior_mean, p.log_prior_sd,
                                                                              p.tau_rate));
      ctx.prior = sim->spec().prior;
      ctx.sim = sim;
      ctx.y = blowfly_statistics(series, bc);
      ctx.eps = EpsilonVector(c.epsilon);
      ctx.start = blowfly_reference_params().to_vector();
      break;
    }
    case ProblemKind::logreg: {
      const auto& p = c.logreg;
      auto target = std::make_shared<LogisticRegressionTarget>(
          load_logistic_csv(detail::resolve_data_path(p.data_path), p.append_bias, p.prior_sd));
      if (p.batch_size > target->rows()) throw config_error("problem.batch_size", "exceeds the number of rows");
      Stream s = derive_stream(combine_keys(c.master_seed, 0xA11CEull), 0);
      ctx.map = logreg_sgd_map(*target, p.map_steps, p.batch_size, p.map_lr, p.map_decay, s);
      ctx.logreg = target;
      ctx.batch_size = p.batch_size;
      ctx.start = ctx.map;
      break;
    }
  }
  if (!c.start.empty()) {
    if (c.start.size() != ctx.start.size()) {
      throw config_error("start", "needs " + std::to_string(ctx.start.size()) + " entries");
    }
    ctx.start = c.start;
  }
  return ctx;
}

// ---------------------------------------------------------------------------
// Chains

using Transition = std::function<SamplerState(SamplerState, Stream&)>;

/// Per-chain streams, all derived from (master seed, run, chain).
struct ChainStreams {
  Stream kernel;
  Stream masks;
  Stream batches;

  static ChainStreams make(std::uint64_t master_seed, std::size_t run, std::size_t chain) {
    const std::uint64_t key = combine_keys(combine_keys(master_seed, run), chain);
    return {derive_stream(key, 0), derive_stream(key, 1), derive_stream(key, 2)};
  }
};

inline SamplerConfig sampler_config_of(const RunConfig& r, LikelihoodKind likelihood) {
  SamplerConfig s;
  s.eta = r.eta;
  s.friction_c = r.friction_c;
  s.gamma = r.gamma;
  s.mass = r.mass;
  s.persistent_seeds = r.persistent_seeds;
  s.vhat_decay = r.vhat_decay;
  s.leapfrog_steps = r.leapfrog_steps;
  s.proposal_std = r.proposal_std;
  s.flip_rule = r.flip_rule;
  s.grad_cfg.method = r.gradient;
  s.grad_cfg.d_theta = r.d_theta;
  s.grad_cfg.repeats = r.repeats;
  s.grad_cfg.likelihood = likelihood;
  return s;
}

namespace detail {

template <class Grad>
Transition momentum_or_langevin(KernelKind kernel, Grad grad, SamplerConfig cfg, PriorSupport support) {
  switch (kernel) {
    case KernelKind::sgld:
      return [=](SamplerState s, Stream& k) mutable { return sgld_step(std::move(s), grad, cfg, k, support); };
    case KernelKind::sghmc:
      return [=](SamplerState s, Stream& k) mutable { return sghmc_step(std::move(s), grad, cfg, k, support); };
    case KernelKind::sgnht:
      return [=](SamplerState s, Stream& k) mutable { return sgnht_step(std::move(s), grad, cfg, k, support); };
    default: break;
  }
  throw std::logic_error("momentum_or_langevin: not a stochastic-gradient kernel");
}

}  // namespace detail

/// Builds the transition for one chain. The callable keeps pointers to
/// `ctx` and `streams`, which must outlive it.
inline Transition make_transition(const ProblemContext& ctx, const RunConfig& run, LikelihoodKind likelihood,
                                  ChainStreams& streams) {
  const SamplerConfig cfg = sampler_config_of(run, likelihood);
  Stream* masks = &streams.masks;

  if (ctx.kind == ProblemKind::logreg) {
    const LogisticRegressionTarget* target = ctx.logreg.get();
    if (run.kernel == KernelKind::hmc) {
      const auto batch = full_batch(*target);
      auto potential = [target, batch](const ParameterVector& w) {
        return -logreg_minibatch_loglik_and_grad(*target, w, batch).first;
      };
      auto grad_U = [target, batch](const ParameterVector& w) { return exact_grad_U(*target, w, batch).grad; };
      return [=](SamplerState s, Stream& k) {
        return hmc_reference_step(std::move(s), potential, grad_U, cfg, cfg.leapfrog_steps, k);
      };
    }
    Stream* batches = &streams.batches;
    const std::size_t n = ctx.batch_size;
    auto grad = [target, batches, masks, n, g = cfg.grad_cfg](const SamplerState& s) {
      const auto batch = sample_minibatch(target->rows(), n, *batches);
      if (g.method == GradientMethod::exact) return exact_grad_U(*target, s.theta, batch);
      return logistic_stochastic_grad_U(*target, s.theta, batch, g, *masks);
    };
    PriorSpec unbounded;
    for (std::size_t i = 0; i < target->dim(); ++i) unbounded.factors.push_back(UnivariatePrior::normal(0.0, 1.0));
    auto keep = std::make_shared<PriorSpec>(std::move(unbounded));
    auto inner = detail::momentum_or_langevin(run.kernel, grad, cfg, PriorSupport{keep.get()});
    return [inner, keep](SamplerState s, Stream& k) { return inner(std::move(s), k); };
  }

  const Simulator* sim = ctx.sim.get();
  const SummaryVector* y = &ctx.y;
  const EpsilonVector* eps = &ctx.eps;
  const PriorSpec* prior = &ctx.prior;
  const std::size_t num_seeds = run.num_seeds;

  if (run.kernel == KernelKind::hmc) {
    // analytic exp-demo potential
    const GammaDistribution post = *ctx.posterior;
    auto potential = [post](const ParameterVector& t) {
      return t[0] > 0.0 ? -post.logpdf(t[0]) : std::numeric_limits<double>::infinity();
    };
    auto grad_U = [post](const ParameterVector& t) {
      return Vector{-((post.shape() - 1.0) / t[0] - post.rate())};
    };
    return [=](SamplerState s, Stream& k) {
      return hmc_reference_step(std::move(s), potential, grad_U, cfg, cfg.leapfrog_steps, k);
    };
  }

  if (run.kernel == KernelKind::abc_mcmc) {
    return [=](SamplerState s, Stream& k) {
      s = abc_mcmc_step(std::move(s), *sim, *y, *eps, *prior, cfg, likelihood, k);
      if (cfg.persistent_seeds) {
        // the pseudo-marginal state carries replicates, so flips score the set
        s = seed_flip_step(std::move(s), *sim, *y, *eps, cfg.gamma, SeedFlipRule::replicate_set, likelihood, k);
      }
      return s;
    };
  }

  auto grad = [sim, y, eps, prior, masks, g = cfg.grad_cfg](const SamplerState& s) {
    return simulator_grad_U(*sim, s.theta, s.seeds, *y, *eps, *prior, g, *masks);
  };
  auto inner = detail::momentum_or_langevin(run.kernel, grad, cfg, PriorSupport{prior});
  return [=](SamplerState s, Stream& k) {
    if (!cfg.persistent_seeds) s.seeds = draw_seed_vector(num_seeds, k);
    s = inner(std::move(s), k);
    if (cfg.persistent_seeds) {
      s = seed_flip_step(std::move(s), *sim, *y, *eps, cfg.gamma, cfg.flip_rule, likelihood, k);
    }
    return s;
  };
}

/// Initial state: configured start, seeds drawn from the kernel stream.
inline SamplerState initial_state(const ProblemContext& ctx, const RunConfig& run, Stream& kernel_stream) {
  SamplerState s;
  s.theta = ctx.start;
  if (ctx.kind != ProblemKind::logreg) s.seeds = draw_seed_vector(run.num_seeds, kernel_stream);
  return s;
}

/// Runs chain `chain` of run `run_index`.
inline ChainTrace run_single_chain(const ExperimentConfig& c, const ProblemContext& ctx, std::size_t run_index,
                                   std::size_t chain) {
  const RunConfig& run = c.runs.at(run_index);
  ChainStreams streams = ChainStreams::make(c.master_seed, run_index, chain);
  ChainTrace trace;
  try {
    SamplerState init = initial_state(ctx, run, streams.kernel);
    Transition step = make_transition(ctx, run, c.likelihood, streams);
    const bool momentum = run.kernel == KernelKind::sghmc || run.kernel == KernelKind::sgnht;
    trace = run_chain(std::move(init), step, c.steps, c.thinning, Recorder(momentum), streams.kernel,
                      to_string(run.kernel));
  } catch (const std::exception& e) {
    trace.failed = true;
    trace.failure = e.what();
  }
  trace.kernel = to_string(run.kernel);
  trace.config_snapshot = run.label;
  return trace;
}

/// Runs `jobs` on up to `workers` threads; job i writes only slot i.
inline void parallel_for(std::size_t jobs, std::size_t workers, const std::function<void(std::size_t)>& body) {
  if (workers <= 1 || jobs <= 1) {
    for (std::size_t i = 0; i < jobs; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  const std::size_t n = std::min(workers, jobs);
  for (std::size_t w = 0; w < n; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < jobs; i = next++) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

inline std::size_t default_workers() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

struct ChainSummary {
  std::size_t retained = 0;
  std::size_t sim_calls = 0;
  double sims_per_step = 0.0;
  ChainCounters counters;
  std::size_t event_count = 0;
  bool failed = false;
  std::string failure;
  std::optional<double> tvd;
  std::optional<double> increment_autocorr;
  Vector mean;
  Vector sd;
  std::optional<double> rms_radius;  // logreg, from the MAP estimate
  std::optional<double> max_radius;
};

struct RunResult {
  std::string label;
  std::vector<ChainTrace> traces;
  std::vector<ChainSummary> summaries;
  std::optional<double> mean_tvd;
};

struct ExperimentResult {
  std::vector<RunResult> runs;
  std::optional<GradientReport> gradient;
  ParameterVector map;
  bool failed = false;
};

inline ChainSummary summarize_chain(const ChainTrace& t, const ExperimentConfig& c, const ProblemContext& ctx) {
  ChainSummary s;
  s.retained = t.size();
  s.sim_calls = t.sim_calls;
  s.sims_per_step = c.steps > 0 ? static_cast<double>(t.sim_calls) / static_cast<double>(c.steps) : 0.0;
  s.counters = t.counters;
  s.event_count = t.events.size();
  s.failed = t.failed;
  s.failure = t.failure;
  if (t.size() == 0) return s;
  const std::size_t dim = t.dim();
  s.mean.assign(dim, 0.0);
  s.sd.assign(dim, 0.0);
  for (std::size_t d = 0; d < dim; ++d) {
    const auto col = t.column(d, c.diagnostics.burnin_fraction);
    if (col.empty()) continue;
    double m = 0.0;
    for (double v : col) m += v;
    m /= static_cast<double>(col.size());
    double q = 0.0;
    for (double v : col) q += (v - m) * (v - m);
    s.mean[d] = m;
    s.sd[d] = col.size() > 1 ? std::sqrt(q / static_cast<double>(col.size() - 1)) : 0.0;
  }
  if (t.size() > c.diagnostics.autocorr_lag + 1) s.increment_autocorr = increment_autocorr(t, c.diagnostics.autocorr_lag);
  if (ctx.posterior && dim == 1 && !t.column(0, c.diagnostics.burnin_fraction).empty()) {
    s.tvd = trace_tvd(t, *ctx.posterior, c.diagnostics.tvd_bins, c.diagnostics.burnin_fraction);
  }
  if (ctx.kind == ProblemKind::logreg) {
    double sum = 0.0, hi = 0.0;
    for (const auto& th : t.samples) {
      double r2 = 0.0;
      for (std::size_t d = 0; d < dim; ++d) r2 += (th[d] - ctx.map[d]) * (th[d] - ctx.map[d]);
      sum += r2;
      hi = std::max(hi, r2);
    }
    s.rms_radius = std::sqrt(sum / static_cast<double>(t.size()));
    s.max_radius = std::sqrt(hi);
  }
  return s;
}

/// Figure 2 study: FDSA/SPSA gradient estimates at the posterior mode.
inline GradientReport run_gradient_probe(const ExperimentConfig& c, const ProblemContext& ctx) {
  if (!ctx.sim) throw config_error("probe.enabled", "needs a simulator problem");
  ParameterVector theta = c.probe.theta.empty() ? ctx.start : c.probe.theta;
  GradientConfig g;
  g.method = c.probe.method;
  g.d_theta = {c.probe.d_theta};
  std::vector<std::pair<std::string, std::size_t>> labels;
  std::vector<ProbeResult> probes;
  std::size_t job = 0;
  for (auto kind : c.probe.likelihoods) {
    for (std::size_t s : c.probe.num_seeds) {
      g.likelihood = kind;
      Stream stream = derive_stream(combine_keys(c.master_seed, 0x9E0BEull + job++), 0);
      probes.push_back(gradient_variance_probe(*ctx.sim, theta, ctx.y, ctx.eps, ctx.prior, g, s, c.probe.trials, stream));
      labels.emplace_back(to_string(kind), s);
    }
  }
  double reference = std::numeric_limits<double>::quiet_NaN();
  if (ctx.kind == ProblemKind::exp_demo && theta.size() == 1) {
    reference = exp_demo_sl_limit_grad_U(theta[0], c.exp_demo.observed_y, c.exp_demo.n, c.epsilon[0],
                                         c.exp_demo.prior_alpha, c.exp_demo.prior_beta);
  }
  return gradient_report(labels, probes, reference);
}

/// Runs every chain of every run (and the gradient probe if enabled).
inline ExperimentResult run_experiment_in_memory(const ExperimentConfig& c, std::size_t workers = default_workers()) {
  validate(c);
  const ProblemContext ctx = build_problem(c);
  ExperimentResult out;
  out.map = ctx.map;
  out.runs.resize(c.runs.size());
  for (std::size_t r = 0; r < c.runs.size(); ++r) {
    out.runs[r].label = c.runs[r].label;
    out.runs[r].traces.resize(c.chains);
    out.runs[r].summaries.resize(c.chains);
  }
  const std::size_t jobs = c.runs.size() * c.chains;
  parallel_for(jobs, workers, [&](std::size_t j) {
    const std::size_t r = j / c.chains, k = j % c.chains;
    out.runs[r].traces[k] = run_single_chain(c, ctx, r, k);
    out.runs[r].summaries[k] = summarize_chain(out.runs[r].traces[k], c, ctx);
  });
  for (auto& run : out.runs) {
    double tvd = 0.0;
    std::size_t n = 0;
    for (const auto& s : run.summaries) {
      if (s.tvd) {
        tvd += *s.tvd;
        ++n;
      }
      out.failed = out.failed || s.failed;
    }
    if (n > 0) run.mean_tvd = tvd / static_cast<double>(n);
  }
  if (c.probe.enabled) out.gradient = run_gradient_probe(c, ctx);
  return out;
}

// ---------------------------------------------------------------------------
// Output bundle

namespace detail {

inline Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

inline Json counters_json(const ChainCounters& c) {
  return Json{{"sim_calls", c.sim_calls},
              {"invalid_gradients", c.invalid_gradients},
              {"noise_clamps", c.noise_clamps},
              {"boundary_rejections", c.boundary_rejections},
              {"proposals", c.proposals},
              {"accepted", c.accepted},
              {"flips_proposed", c.flips_proposed},
              {"flips_accepted", c.flips_accepted}};
}

}  // namespace detail

inline Json diagnostics_json(const ExperimentConfig& c, const ExperimentResult& res) {
  Json runs = Json::array();
  for (const auto& run : res.runs) {
    Json chains = Json::array();
    for (std::size_t k = 0; k < run.summaries.size(); ++k) {
      const auto& s = run.summaries[k];
      const auto& t = run.traces[k];
      Json events = Json::array();
      for (std::size_t e = 0; e < std::min<std::size_t>(t.events.size(), 20); ++e) {
        events.push_back(Json{{"step", t.events[e].step}, {"what", t.events[e].what}});
      }
      Json ch{{"chain", k},
              {"trace", "trace_" + run.label + "-" + std::to_string(k) + ".csv"},
              {"retained", s.retained},
              {"sim_calls", s.sim_calls},
              {"sims_per_step", s.sims_per_step},
              {"counters", detail::counters_json(s.counters)},
              {"tvd", detail::optional_number(s.tvd)},
              {"increment_autocorr", detail::optional_number(s.increment_autocorr)},
              {"mean", s.mean},
              {"sd", s.sd},
              {"event_count", s.event_count},
              {"events", events},
              {"failed", s.failed},
              {"failure", s.failure}};
      if (s.rms_radius) {
        ch["rms_radius"] = *s.rms_radius;
        ch["max_radius"] = *s.max_radius;
      }
      chains.push_back(std::move(ch));
    }
    runs.push_back(Json{{"label", run.label}, {"tvd", detail::optional_number(run.mean_tvd)}, {"chains", chains}});
  }
  Json out{{"schema", "habc-diagnostics/1"}, {"name", c.name}, {"failed", res.failed}, {"runs", runs}};
  if (res.gradient) {
    Json rows = Json::array();
    for (const auto& r : res.gradient->rows) {
      rows.push_back(Json{{"likelihood", r.label},
                          {"num_seeds", r.num_seeds},
                          {"mean", r.mean},
                          {"sd", r.sd},
                          {"trials", r.trials},
                          {"invalid", r.invalid}});
    }
    out["gradient_report"] = Json{{"reference", res.gradient->reference}, {"rows", rows}};
  }
  return out;
}

/// Output directory: HABC_OUT_DIR if set, else the config's output_dir.
inline std::string resolve_output_dir(const ExperimentConfig& c) {
  if (const char* env = std::getenv("HABC_OUT_DIR"); env != nullptr && *env != '\0') return env;
  return c.output_dir;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
}

/// Writes trace_<run>-<chain>.csv, projection CSVs (logreg),
/// diagnostics.json and config.resolved into `dir`.
inline void write_bundle(const ExperimentConfig& c, const ExperimentResult& res, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const std::size_t dim = [&] {
    switch (c.problem) {
      case ProblemKind::exp_demo: return std::size_t{1};
      case ProblemKind::blowfly: return kBlowflyParamDim;
      case ProblemKind::logreg: return res.map.size();
    }
    return std::size_t{0};
  }();
  std::optional<ProjectionMatrix> proj;
  if (c.problem == ProblemKind::logreg) proj = ProjectionMatrix::draw(dim, c.diagnostics.projection_seed);
  for (const auto& run : res.runs) {
    for (std::size_t k = 0; k < run.traces.size(); ++k) {
      const std::string id = run.label + "-" + std::to_string(k);
      write_text(fs::path(dir) / ("trace_" + id + ".csv"), format_trace_csv(run.traces[k], dim));
      if (proj) {
        write_text(fs::path(dir) / ("projection_" + id + ".csv"),
                   format_points_csv(project_2d(run.traces[k].samples, *proj, c.diagnostics.projection_points)));
      }
    }
  }
  write_text(fs::path(dir) / "diagnostics.json", diagnostics_json(c, res).dump(2) + "\n");
  write_text(fs::path(dir) / "config.resolved", dump_config(c));
}

/// run_experiment_in_memory followed by write_bundle; returns the result.
inline ExperimentResult run_experiment(const ExperimentConfig& c, std::size_t workers = default_workers()) {
  ExperimentResult res = run_experiment_in_memory(c, workers);
  write_bundle(c, res, resolve_output_dir(c));
  return res;
}

/// Grid search over eta for one run of a config: mean TVD across chains for
/// each candidate (exp-demo only).
inline std::vector<std::pair<double, double>> tune_eta(ExperimentConfig c, const std::string& label,
                                                       const std::vector<double>& etas,
                                                       std::size_t workers = default_workers()) {
  if (c.problem != ProblemKind::exp_demo) throw config_error("problem.name", "tuning needs the exp-demo problem");
  std::optional<RunConfig> base;
  for (const auto& r : c.runs) {
    if (r.label == label) base = r;
  }
  if (!base) throw config_error("runs", "no run labelled '" + label + "'");
  std::vector<std::pair<double, double>> out;
  for (double eta : etas) {
    ExperimentConfig one = c;
    RunConfig r = *base;
    r.eta = eta;
    if (r.kernel == KernelKind::abc_mcmc) r.proposal_std = {eta};
    one.runs = {r};
    one.probe.enabled = false;
    const auto res = run_experiment_in_memory(one, workers);
    out.emplace_back(eta, res.runs[0].mean_tvd.value_or(std::numeric_limits<double>::quiet_NaN()));
  }
  return out;
}

}  // namespace habc
