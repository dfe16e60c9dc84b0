#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "offload/parallel.hpp"
#include "offload/types.hpp"

namespace offload {

struct TopologyConfig {
  int sbs_count = 10;
  int device_count = 100;
  double mbs_radius_m = 500.0;
  double sbs_radius_m = 100.0;  // no standard value exists; configurable
  double mbs_compute = 50.0e9;
  double sbs_compute = 10.0e9;
  double device_compute = 0.5e9;
  double mbs_energy_per_cycle = 1.0e-9;  // "1 W/GHz"
  double sbs_energy_per_cycle = 1.0e-9;
  double transmit_power_mw = 100.0;
  double switched_capacitance = 1.0e-26;
  int placement_retries = 1000;
};

/// Builds a seeded random deployment: MBS at the origin, devices uniform in
/// its disk, SBSs rejection-sampled so no two coverage disks overlap.
/// Throws std::runtime_error if the SBSs cannot be placed within the retry
/// budget and std::invalid_argument for an empty device set.
Topology build_topology(const TopologyConfig& cfg, const ChannelParams& chan,
                        std::uint64_t seed);

/// Station ids device `device_id` may offload to: the MBS always, plus every
/// SBS whose coverage radius strictly exceeds the distance.
std::vector<int> candidate_stations(int device_id, const Topology& topo);

/// A device currently transmitting and the station it transmits to.
struct Interferer {
  int device = 0;
  int serving_station = 0;
};

/// Uplink rate device->SBS with co-channel interference from every listed
/// transmitter that is not this device and not served by this SBS.
/// Interference is accumulated at the receiving SBS. Zero distance is
/// rejected; a device outside the SBS coverage radius is rejected.
double uplink_rate_sbs(int device, int sbs, const Topology& topo,
                       const ChannelParams& chan,
                       std::span<const Interferer> active = {});

/// Uplink rate device->MBS. OFDMA suppresses cross-tier interference, so
/// the denominator is noise only.
double uplink_rate_mbs(int device, const Topology& topo, const ChannelParams& chan);

/// All uplink rates for one slot. Out-of-coverage device-SBS pairs get rate
/// zero (they cannot communicate at all).
struct RateMatrix {
  int device_count = 0;
  int sbs_count = 0;
  std::vector<double> sbs;  // device_count x sbs_count, bits/s
  std::vector<double> mbs;  // device_count, bits/s

  double sbs_rate(int device, int sbs_id) const {  // sbs_id in 1..M
    return sbs[static_cast<std::size_t>(device) * sbs_count + (sbs_id - 1)];
  }
  double mbs_rate(int device) const { return mbs[device]; }
};

RateMatrix compute_rates(const Topology& topo, const ChannelParams& chan,
                         std::span<const Interferer> active, ExecMode mode);

enum class TaskKind { Uniform, Type1, Type2, Type3, Mixed };

struct TaskDistConfig {
  TaskKind kind = TaskKind::Uniform;
  double data_min_mb = 5.0;
  double data_max_mb = 50.0;
  double cycles_min_gc = 0.5;
  double cycles_max_gc = 5.0;
  double deadline_s = 1.0;
  // relative draw weights of types 1..3 when kind == Mixed
  std::vector<double> mix_weights = {1.0, 1.0, 1.0};
};

/// Fixed (data, cycles) pairs of the three benchmark task types.
TaskSpec task_of_type(int type, double deadline_s);

std::vector<TaskSpec> sample_tasks(int n, const TaskDistConfig& cfg, std::uint64_t seed);

}  // namespace offload
