#include <cstdio>
#include <exception>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "offload/harness.hpp"

namespace {

using offload::ExperimentConfig;

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> outdir;
  std::optional<int> episodes;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("-c,--config", flags.config_path, "experiment config file (JSON)")
      ->required();
  cmd->add_option("-s,--seed", flags.seed, "override experiment.seed");
  cmd->add_option("-o,--outdir", flags.outdir, "override experiment.output_dir");
  cmd->add_option("-e,--episodes", flags.episodes, "override train.episodes");
}

ExperimentConfig load_with_overrides(const CommonFlags& flags) {
  ExperimentConfig cfg = offload::load_config(flags.config_path);
  if (flags.seed) cfg.seed = *flags.seed;
  if (flags.outdir) cfg.output_dir = *flags.outdir;
  if (flags.episodes) cfg.train.episodes = *flags.episodes;
  return cfg;
}

void print_rows(const std::vector<offload::PolicyRow>& rows) {
  std::printf("%-14s %-16s %-14s %s\n", "policy", "mean_energy_J", "violation_rate",
              "note");
  for (const auto& r : rows) {
    if (r.available)
      std::printf("%-14s %-16.6g %-14.4g %s\n", r.policy.c_str(), r.mean_energy_j,
                  r.violation_rate, r.note.c_str());
    else
      std::printf("%-14s %-16s %-14s %s\n", r.policy.c_str(), "unavailable", "-",
                  r.note.c_str());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"offloadsim — end-edge-cloud offloading simulator and trainer"};
  app.require_subcommand(1);

  CommonFlags run_flags, sweep_flags, compare_flags, bw_flags, oracle_flags;
  std::string sweep_axis;

  CLI::App* run_cmd = app.add_subcommand("run", "train one policy and emit metrics");
  add_common(run_cmd, run_flags);

  CLI::App* sweep_cmd =
      app.add_subcommand("sweep", "run the configured grid along one axis");
  add_common(sweep_cmd, sweep_flags);
  sweep_cmd
      ->add_option("-a,--axis", sweep_axis, "learning-rate | discount | devices")
      ->required();

  CLI::App* compare_cmd = app.add_subcommand(
      "compare", "train per grid cell and tabulate policies against baselines");
  add_common(compare_cmd, compare_flags);

  CLI::App* bw_cmd = app.add_subcommand(
      "bandwidth-switch", "two-phase run with a mid-training bandwidth change");
  add_common(bw_cmd, bw_flags);

  CLI::App* oracle_cmd =
      app.add_subcommand("oracle", "exhaustive optimum of one small static instance");
  add_common(oracle_cmd, oracle_flags);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      ExperimentConfig cfg = load_with_overrides(run_flags);
      offload::RunOutput out = offload::run_experiment(cfg);
      std::printf("run finished: %zu episodes, artifacts in %s\n",
                  out.result.trace.size(), out.run_dir.c_str());
      print_rows(out.comparison);
    } else if (sweep_cmd->parsed()) {
      ExperimentConfig cfg = load_with_overrides(sweep_flags);
      auto rows = offload::sweep(cfg, sweep_axis);
      std::printf("%-14s %-12s %-10s %-9s %s\n", "axis", "value", "improve", "converged",
                  "run_dir");
      for (const auto& r : rows)
        std::printf("%-14s %-12g %-10.4f %-9d %s\n", r.axis.c_str(), r.value,
                    r.improvement, r.converged ? 1 : 0, r.run_dir.c_str());
    } else if (compare_cmd->parsed()) {
      ExperimentConfig cfg = load_with_overrides(compare_flags);
      auto cells = offload::compare_baselines(cfg);
      for (const auto& c : cells) {
        std::printf("\nN=%d, tasks=%s\n", c.device_count, c.task_kind.c_str());
        print_rows(c.rows);
      }
    } else if (bw_cmd->parsed()) {
      ExperimentConfig cfg = load_with_overrides(bw_flags);
      auto outcome = offload::bandwidth_switch_experiment(cfg);
      std::printf("switch at episode %d\n", outcome.switch_episode);
      std::printf("phase 1 plateau %.4f\nphase 2 plateau %.4f\nadapted %d\n",
                  outcome.phase1_plateau, outcome.phase2_plateau,
                  outcome.adapted ? 1 : 0);
    } else if (oracle_cmd->parsed()) {
      ExperimentConfig cfg = load_with_overrides(oracle_flags);
      auto rep = offload::oracle_report(cfg);
      std::printf("enumerated %llu assignments\n",
                  static_cast<unsigned long long>(rep.oracle.enumerated));
      if (rep.oracle.feasible)
        std::printf("oracle        %.6g J\n", rep.oracle.energy_j);
      else
        std::printf("oracle        infeasible\n");
      std::printf("local         %.6g J (%s)\n", rep.local_energy_j,
                  rep.local_feasible ? "feasible" : "infeasible");
      std::printf("full-offload  %.6g J (%s)\n", rep.full_offload_energy_j,
                  rep.full_feasible ? "feasible" : "infeasible");
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
