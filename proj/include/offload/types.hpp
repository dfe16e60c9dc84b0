#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

namespace offload {

namespace units {
// One task-size "MB" is 8e6 bits; one "Gcycle" is 1e9 CPU cycles.
constexpr double bits_per_mb = 8.0e6;
constexpr double cycles_per_gcycle = 1.0e9;
constexpr double watts_per_milliwatt = 1.0e-3;
}  // namespace units

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline double distance(Vec2 a, Vec2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

enum class StationKind { Mbs, Sbs };

/// Base station. Station 0 is always the macro cell; it hosts the cloud
/// server and has unbounded coverage. Stations 1..M are small cells with
/// edge servers and finite coverage radii.
struct Station {
  int id = 0;
  StationKind kind = StationKind::Mbs;
  Vec2 position;
  double coverage_radius_m = std::numeric_limits<double>::infinity();
  double compute_capacity = 0.0;   // cycles/s
  double energy_per_cycle = 0.0;   // J/cycle
  double bandwidth_hz = 0.0;
};

struct Device {
  int id = 0;
  Vec2 position;
  double transmit_power_mw = 100.0;       // fixed, never optimized
  double local_compute = 0.5e9;           // cycles/s
  double switched_capacitance = 1.0e-26;  // J*s^2/cycle^3
};

/// One computation task: input size, required cycles, completion deadline.
struct TaskSpec {
  double input_bits = 0.0;
  double required_cycles = 0.0;
  double deadline_s = 0.0;
};

enum class GainModel { UnitGain, RayleighFading };

struct ChannelParams {
  double path_loss_exponent = 4.0;
  /// Denominator power in the SINR, in watts. Transmit powers are converted
  /// from mW to W before entering the rate equations.
  double noise_power_w = 1.0e-11;
  GainModel gain_model = GainModel::UnitGain;
  double sbs_bandwidth_hz = 5.0e6;
  double mbs_bandwidth_hz = 10.0e6;
};

/// Immutable network snapshot: stations (MBS first), devices, and the
/// device-station distance and channel-gain matrices.
struct Topology {
  std::vector<Station> stations;
  std::vector<Device> devices;
  std::vector<double> distances_m;  // device-major, device_count x station_count
  std::vector<double> gains;        // same layout

  int station_count() const { return static_cast<int>(stations.size()); }
  int device_count() const { return static_cast<int>(devices.size()); }
  int sbs_count() const { return station_count() - 1; }

  double distance(int device, int station) const {
    return distances_m[static_cast<std::size_t>(device) * stations.size() + station];
  }
  double gain(int device, int station) const {
    return gains[static_cast<std::size_t>(device) * stations.size() + station];
  }
};

/// Where one device's task runs: on the device, on SBS j (1..M), or on the
/// MBS cloud. Exactly one mode.
struct OffloadDecision {
  enum class Mode { Local, Sbs, Mbs };
  Mode mode = Mode::Local;
  int sbs_id = 0;  // station id in 1..M, meaningful only when mode == Sbs

  /// Station index the task runs on, or -1 for local execution.
  int station() const {
    switch (mode) {
      case Mode::Local: return -1;
      case Mode::Sbs: return sbs_id;
      case Mode::Mbs: return 0;
    }
    return -1;
  }
  bool operator==(const OffloadDecision&) const = default;
};

}  // namespace offload
