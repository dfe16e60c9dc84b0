#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "offload/config.hpp"
#include "offload/ddpg.hpp"

namespace offload {

/// Min-max normalization of a reward trace into [0,1]; a constant trace
/// (and a single element) maps to 0.5.
std::vector<double> normalize_rewards(std::span<const double> trace);

/// Convergence statistic: mean normalized return over the last 10% of
/// episodes minus the mean over the first 10%.
double improvement_statistic(std::span<const double> returns);
constexpr double kConvergenceThreshold = 0.2;

Environment make_environment(const ExperimentConfig& cfg);
AgentBundle make_agent(const Environment& env, const ExperimentConfig& cfg);
/// Per-episode task draws from the given stream of the run seed.
std::function<std::vector<TaskSpec>(int)> make_task_provider(const ExperimentConfig& cfg,
                                                             Stream stream);

struct PolicyRow {
  std::string policy;
  double mean_energy_j = 0.0;
  double violation_rate = 0.0;
  bool available = true;
  std::string note;
};

struct RunOutput {
  TrainResult result;
  std::vector<double> norm_returns;
  EvalStats eval;
  std::vector<PolicyRow> comparison;
  std::string run_dir;
};

/// End-to-end seeded run: build, train, evaluate greedily, compare against
/// the benchmark policies, and (unless dry) write metrics.csv,
/// checkpoint.txt, summary.txt and the resolved config.json to output_dir.
RunOutput run_experiment(const ExperimentConfig& cfg,
                         const std::function<void(int)>& episode_hook = {},
                         bool write_artifacts = true);

/// Benchmark policies (and the trained agent, when given) evaluated on the
/// same evaluation task draws.
std::vector<PolicyRow> compare_policies(const ExperimentConfig& cfg, Environment& env,
                                        const AgentBundle* trained);

void write_metrics_csv(const std::string& path, const TrainResult& result,
                       std::span<const double> norm_returns);

struct SweepRow {
  std::string axis;
  double value = 0.0;
  std::string run_dir;
  double improvement = 0.0;
  bool converged = false;
};

/// One run per grid value of the chosen axis ("learning-rate", "discount",
/// or "devices"); rows land in <output_dir>/sweep.csv.
std::vector<SweepRow> sweep(const ExperimentConfig& cfg, const std::string& axis);

struct CompareCell {
  int device_count = 0;
  std::string task_kind;
  std::vector<PolicyRow> rows;
};

/// Trains one policy per (device-count, task-kind) grid cell and tabulates
/// every policy's evaluation energy; written to <output_dir>/compare.csv.
std::vector<CompareCell> compare_baselines(const ExperimentConfig& cfg);

struct BandwidthSwitchOutcome {
  RunOutput run;
  int switch_episode = 0;
  double phase1_plateau = 0.0;  // mean normalized return, last 10% of phase 1
  double phase2_plateau = 0.0;  // mean normalized return, last 10% of phase 2
  bool adapted = false;         // phase2 > phase1
};

/// Two-phase run: bandwidths multiply by the configured factor at the switch
/// episode. A switch at episode 0 degenerates to a single-phase run.
BandwidthSwitchOutcome bandwidth_switch_experiment(const ExperimentConfig& cfg);

struct OracleReport {
  OracleResult oracle;
  double local_energy_j = 0.0;
  double full_offload_energy_j = 0.0;
  bool local_feasible = false;
  bool full_feasible = false;
};

/// Static-instance oracle comparison on the seed's first task draw.
OracleReport oracle_report(const ExperimentConfig& cfg);

}  // namespace offload
