#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "offload/baselines.hpp"
#include "offload/ddpg.hpp"
#include "offload/env.hpp"
#include "offload/netmodel.hpp"

namespace offload {

/// Configuration error that names the offending field.
struct ConfigError : std::runtime_error {
  std::string field;
  ConfigError(std::string field_, const std::string& what)
      : std::runtime_error("config: " + field_ + ": " + what), field(std::move(field_)) {}
};

/// One experiment: sections mirror the config file. Defaults reproduce the
/// reference simulation setup (one MBS, 10 SBSs, 100 devices, 100 mW
/// transmitters, 1e-11 noise, 10/5 MHz bandwidths, 1 W/GHz server energy,
/// 0.5/10/50 GHz compute, tasks U[5,50] MB x U[0.5,5] Gcycles, 1 s deadline,
/// batch 32, 6000 episodes of 20 steps, penalty 100*N).
struct ExperimentConfig {
  TopologyConfig topology;
  ChannelParams channel;
  TaskDistConfig tasks;
  EpisodeConfig episode;
  TrainConfig train;

  std::uint64_t seed = 1;
  std::string output_dir = "out";
  int eval_episodes = 20;
  std::uint64_t oracle_max_enumerations = 1000000;
  double state_rate_max = 0.0;  // 0 = derive from bandwidths
  BandwidthShare baseline_share = BandwidthShare::EqualSplit;

  // compare / sweep / bandwidth-switch grids
  std::vector<int> device_grid = {20, 60, 100};
  std::vector<std::string> compare_task_kinds = {"mixed", "type1", "type2", "type3"};
  std::vector<double> sweep_learning_rates = {1e-2, 1e-3, 1e-4, 1e-5};
  std::vector<double> sweep_discounts = {0.5, 0.6, 0.65, 0.7};
  std::vector<int> sweep_devices = {20, 60, 100};
  int bandwidth_switch_episode = 3000;
  double bandwidth_factor = 10.0;
};

/// Parses and validates a config file. Unknown keys, missing required
/// fields (experiment.seed), and out-of-range values all raise ConfigError
/// naming the field.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& text, const std::string& origin);

std::string serialize_config(const ExperimentConfig& cfg);
void save_config(const std::string& path, const ExperimentConfig& cfg);

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);

TaskKind task_kind_from(const std::string& name);
const char* task_kind_name(TaskKind k);

}  // namespace offload
