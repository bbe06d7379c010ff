#include <cstdio>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "habc/experiment.hpp"

using namespace habc;

namespace {

struct Source {
  std::string config_path;
  std::string preset_name;
  std::optional<std::size_t> chains;
  std::optional<std::size_t> steps;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::size_t workers = 0;

  void attach(CLI::App* cmd) {
    cmd->add_option("config", config_path, "experiment config (JSON)");
    cmd->add_option("--preset", preset_name, "use a built-in preset instead of a config file");
    cmd->add_option("--chains", chains, "override the number of chains");
    cmd->add_option("--steps", steps, "override the number of steps per chain");
    cmd->add_option("--seed", seed, "override the master seed");
    cmd->add_option("--out-dir", out_dir, "override the output directory");
    cmd->add_option("--workers", workers, "worker threads (default: hardware concurrency)");
  }

  ExperimentConfig load() const {
    if (config_path.empty() == preset_name.empty()) throw CLI::ValidationError("give either a config file or --preset");
    ExperimentConfig c = preset_name.empty() ? load_config(config_path) : preset(preset_name);
    if (chains) c.chains = *chains;
    if (steps) c.steps = *steps;
    if (seed) c.master_seed = *seed;
    if (!out_dir.empty()) c.output_dir = out_dir;
    validate(c);
    return c;
  }

  std::size_t worker_count() const { return workers > 0 ? workers : default_workers(); }
};

void print_runs(const ExperimentConfig& c, const ExperimentResult& res) {
  std::printf("%-22s %8s %10s %10s %8s\n", "run", "tvd", "sims/step", "autocorr", "failed");
  for (const auto& run : res.runs) {
    double sims = 0.0, ac = 0.0;
    std::size_t failed = 0, n_ac = 0;
    for (const auto& s : run.summaries) {
      sims += s.sims_per_step / static_cast<double>(run.summaries.size());
      if (s.increment_autocorr) {
        ac += *s.increment_autocorr;
        ++n_ac;
      }
      failed += s.failed ? 1 : 0;
    }
    const std::string tvd = run.mean_tvd ? std::to_string(*run.mean_tvd).substr(0, 6) : "-";
    const std::string acs = n_ac ? std::to_string(ac / static_cast<double>(n_ac)).substr(0, 7) : "-";
    std::printf("%-22s %8s %10.2f %10s %8zu\n", run.label.c_str(), tvd.c_str(), sims, acs.c_str(), failed);
  }
  if (c.problem == ProblemKind::logreg) {
    for (const auto& run : res.runs) {
      if (!run.summaries.empty() && run.summaries[0].rms_radius) {
        std::printf("%s: rms radius %.3f, max radius %.3f\n", run.label.c_str(), *run.summaries[0].rms_radius,
                    *run.summaries[0].max_radius);
      }
    }
  }
}

void print_gradient(const GradientReport& rep) {
  std::printf("%-10s %6s %10s %10s %8s\n", "likelihood", "S", "mean", "sd", "invalid");
  for (const auto& r : rep.rows) {
    std::printf("%-10s %6zu %10.3f %10.3f %8zu\n", r.label.c_str(), r.num_seeds, r.mean, r.sd, r.invalid);
  }
  std::printf("S -> infinity synthetic-likelihood reference: %.3f\n", rep.reference);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hamiltonian ABC samplers"};
  app.require_subcommand(1);

  Source run_src;
  auto* run = app.add_subcommand("run", "run an experiment and write its output bundle");
  run_src.attach(run);

  std::string preset_name, preset_out;
  bool list = false;
  auto* pre = app.add_subcommand("preset", "print a preset config");
  pre->add_option("name", preset_name);
  pre->add_option("--out", preset_out, "write to a file instead of stdout");
  pre->add_flag("--list", list, "list preset names");

  Source probe_src;
  auto* probe = app.add_subcommand("gradprobe", "gradient bias/variance study only");
  probe_src.attach(probe);
  std::optional<std::size_t> trials;
  probe->add_option("--trials", trials, "probe trials per setting");

  Source tune_src;
  auto* tune = app.add_subcommand("tune", "grid search over eta for one run (exp-demo)");
  tune_src.attach(tune);
  std::string label;
  std::vector<double> etas;
  tune->add_option("--run", label, "run label")->required();
  tune->add_option("--eta", etas, "candidate step sizes")->required()->delimiter(',');

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const ExperimentConfig c = run_src.load();
      const ExperimentResult res = run_experiment(c, run_src.worker_count());
      print_runs(c, res);
      if (res.gradient) print_gradient(*res.gradient);
      std::printf("wrote %s\n", resolve_output_dir(c).c_str());
      return res.failed ? 1 : 0;
    }
    if (*pre) {
      if (list || preset_name.empty()) {
        for (const auto& n : preset_names()) std::printf("%s\n", n.c_str());
        return 0;
      }
      const std::string text = dump_config(preset(preset_name));
      if (preset_out.empty()) {
        std::fputs(text.c_str(), stdout);
      } else {
        std::ofstream(preset_out, std::ios::binary) << text;
      }
      return 0;
    }
    if (*probe) {
      ExperimentConfig c = probe_src.load();
      c.probe.enabled = true;
      if (trials) c.probe.trials = *trials;
      validate(c);
      print_gradient(run_gradient_probe(c, build_problem(c)));
      return 0;
    }
    if (*tune) {
      const ExperimentConfig c = tune_src.load();
      std::printf("%10s %8s\n", "eta", "tvd");
      for (const auto& [eta, tvd] : tune_eta(c, label, etas, tune_src.worker_count())) {
        std::printf("%10g %8.4f\n", eta, tvd);
      }
      return 0;
    }
  } catch (const config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
