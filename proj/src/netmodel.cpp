#include "offload/netmodel.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "offload/rng.hpp"

namespace offload {

namespace {

double draw_gain(const ChannelParams& chan, RngStream& rng) {
  if (chan.gain_model == GainModel::UnitGain) return 1.0;
  // Rayleigh fading: exponentially distributed power gain with unit mean.
  double u = rng.uniform();
  while (u <= 0.0) u = rng.uniform();
  return -std::log(u);
}

}  // namespace

Topology build_topology(const TopologyConfig& cfg, const ChannelParams& chan,
                        std::uint64_t seed) {
  if (cfg.device_count <= 0)
    throw std::invalid_argument("build_topology: device_count must be positive");
  if (cfg.sbs_count < 0)
    throw std::invalid_argument("build_topology: sbs_count must be non-negative");
  if (cfg.mbs_radius_m <= 0.0 || (cfg.sbs_count > 0 && cfg.sbs_radius_m <= 0.0))
    throw std::invalid_argument("build_topology: radii must be positive");

  RngStream rng(derive_seed(seed, Stream::Topology));
  Topology topo;

  Station mbs;
  mbs.id = 0;
  mbs.kind = StationKind::Mbs;
  mbs.position = {0.0, 0.0};
  mbs.compute_capacity = cfg.mbs_compute;
  mbs.energy_per_cycle = cfg.mbs_energy_per_cycle;
  mbs.bandwidth_hz = chan.mbs_bandwidth_hz;
  topo.stations.push_back(mbs);

  auto sample_in_disk = [&rng](double radius) {
    // rejection sampling keeps the distribution exactly uniform
    for (;;) {
      double x = rng.uniform(-radius, radius);
      double y = rng.uniform(-radius, radius);
      if (x * x + y * y <= radius * radius) return Vec2{x, y};
    }
  };

  // SBS coverage disks must not overlap: centers pairwise farther apart than
  // the sum of their radii.
  for (int j = 1; j <= cfg.sbs_count; ++j) {
    bool placed = false;
    for (int attempt = 0; attempt < cfg.placement_retries && !placed; ++attempt) {
      Vec2 pos = sample_in_disk(cfg.mbs_radius_m);
      bool overlaps = false;
      for (int k = 1; k < j; ++k) {
        if (distance(pos, topo.stations[k].position) <
            cfg.sbs_radius_m + topo.stations[k].coverage_radius_m) {
          overlaps = true;
          break;
        }
      }
      if (!overlaps) {
        Station sbs;
        sbs.id = j;
        sbs.kind = StationKind::Sbs;
        sbs.position = pos;
        sbs.coverage_radius_m = cfg.sbs_radius_m;
        sbs.compute_capacity = cfg.sbs_compute;
        sbs.energy_per_cycle = cfg.sbs_energy_per_cycle;
        sbs.bandwidth_hz = chan.sbs_bandwidth_hz;
        topo.stations.push_back(sbs);
        placed = true;
      }
    }
    if (!placed)
      throw std::runtime_error(
          "build_topology: could not place SBS " + std::to_string(j) +
          " without coverage overlap after " + std::to_string(cfg.placement_retries) +
          " retries");
  }

  for (int i = 0; i < cfg.device_count; ++i) {
    Device dev;
    dev.id = i;
    dev.transmit_power_mw = cfg.transmit_power_mw;
    dev.local_compute = cfg.device_compute;
    dev.switched_capacitance = cfg.switched_capacitance;
    // resample a device landing exactly on a station; the rate model has a
    // singularity at zero distance
    for (;;) {
      dev.position = sample_in_disk(cfg.mbs_radius_m);
      bool colocated = false;
      for (const Station& st : topo.stations)
        if (distance(dev.position, st.position) == 0.0) colocated = true;
      if (!colocated) break;
    }
    topo.devices.push_back(dev);
  }

  const std::size_t s = topo.stations.size();
  topo.distances_m.resize(topo.devices.size() * s);
  topo.gains.resize(topo.devices.size() * s);
  for (std::size_t i = 0; i < topo.devices.size(); ++i) {
    for (std::size_t j = 0; j < s; ++j) {
      topo.distances_m[i * s + j] =
          distance(topo.devices[i].position, topo.stations[j].position);
      topo.gains[i * s + j] = draw_gain(chan, rng);
    }
  }
  return topo;
}

std::vector<int> candidate_stations(int device_id, const Topology& topo) {
  if (device_id < 0 || device_id >= topo.device_count())
    throw std::out_of_range("candidate_stations: unknown device id");
  std::vector<int> out;
  out.push_back(0);  // the MBS always reaches every device
  for (int j = 1; j < topo.station_count(); ++j) {
    // strict inequality: a device exactly on the boundary is outside
    if (topo.distance(device_id, j) < topo.stations[j].coverage_radius_m)
      out.push_back(j);
  }
  return out;
}

namespace {

double received_power_w(const Topology& topo, const ChannelParams& chan, int device,
                        int station) {
  double r = topo.distance(device, station);
  if (r == 0.0)
    throw std::invalid_argument("uplink rate: device co-located with station");
  double p_w = topo.devices[device].transmit_power_mw * units::watts_per_milliwatt;
  return p_w * topo.gain(device, station) * std::pow(r, -chan.path_loss_exponent);
}

double interference_at(const Topology& topo, const ChannelParams& chan, int receiver,
                       int device, std::span<const Interferer> active) {
  double sum = 0.0;
  for (const Interferer& it : active) {
    if (it.device == device) continue;
    if (it.serving_station == receiver) continue;
    sum += received_power_w(topo, chan, it.device, receiver);
  }
  return sum;
}

}  // namespace

double uplink_rate_sbs(int device, int sbs, const Topology& topo,
                       const ChannelParams& chan, std::span<const Interferer> active) {
  if (sbs <= 0 || sbs >= topo.station_count())
    throw std::invalid_argument("uplink_rate_sbs: station is not an SBS");
  if (!(topo.distance(device, sbs) < topo.stations[sbs].coverage_radius_m))
    throw std::invalid_argument("uplink_rate_sbs: device outside SBS coverage");
  double signal = received_power_w(topo, chan, device, sbs);
  double denom = chan.noise_power_w + interference_at(topo, chan, sbs, device, active);
  return topo.stations[sbs].bandwidth_hz * std::log2(1.0 + signal / denom);
}

double uplink_rate_mbs(int device, const Topology& topo, const ChannelParams& chan) {
  double signal = received_power_w(topo, chan, device, 0);
  return topo.stations[0].bandwidth_hz * std::log2(1.0 + signal / chan.noise_power_w);
}

RateMatrix compute_rates(const Topology& topo, const ChannelParams& chan,
                         std::span<const Interferer> active, ExecMode mode) {
  const int n = topo.device_count();
  const int m = topo.sbs_count();
  RateMatrix out;
  out.device_count = n;
  out.sbs_count = m;
  out.sbs.assign(static_cast<std::size_t>(n) * m, 0.0);
  out.mbs.assign(n, 0.0);

  auto fill_row = [&](int i) {
    for (int j = 1; j <= m; ++j) {
      if (topo.distance(i, j) < topo.stations[j].coverage_radius_m)
        out.sbs[static_cast<std::size_t>(i) * m + (j - 1)] =
            uplink_rate_sbs(i, j, topo, chan, active);
    }
    out.mbs[i] = uplink_rate_mbs(i, topo, chan);
  };

  if (mode == ExecMode::OpenMP) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) fill_row(i);
  } else {
    for (int i = 0; i < n; ++i) fill_row(i);
  }
  return out;
}

TaskSpec task_of_type(int type, double deadline_s) {
  TaskSpec t;
  t.deadline_s = deadline_s;
  switch (type) {
    case 1:  // large data, computation-intensive
      t.input_bits = 50.0 * units::bits_per_mb;
      t.required_cycles = 5.0 * units::cycles_per_gcycle;
      break;
    case 2:  // large data, light computation
      t.input_bits = 50.0 * units::bits_per_mb;
      t.required_cycles = 0.5 * units::cycles_per_gcycle;
      break;
    case 3:  // small data, computation-intensive
      t.input_bits = 5.0 * units::bits_per_mb;
      t.required_cycles = 5.0 * units::cycles_per_gcycle;
      break;
    default:
      throw std::invalid_argument("task_of_type: type must be 1, 2, or 3");
  }
  return t;
}

std::vector<TaskSpec> sample_tasks(int n, const TaskDistConfig& cfg, std::uint64_t seed) {
  if (n < 0) throw std::invalid_argument("sample_tasks: negative count");
  if (cfg.data_min_mb > cfg.data_max_mb || cfg.cycles_min_gc > cfg.cycles_max_gc)
    throw std::invalid_argument("sample_tasks: inverted range");
  if (cfg.deadline_s <= 0.0) throw std::invalid_argument("sample_tasks: deadline must be positive");

  RngStream rng(derive_seed(seed, Stream::Tasks));
  std::vector<TaskSpec> out;
  out.reserve(n);

  if (cfg.kind == TaskKind::Mixed) {
    // stratified: fixed per-type counts matching the weights (largest
    // remainder), device order shuffled; keeps the episode composition
    // constant so reward traces compare across episodes
    if (cfg.mix_weights.size() != 3)
      throw std::invalid_argument("sample_tasks: mix_weights needs 3 entries");
    double total = cfg.mix_weights[0] + cfg.mix_weights[1] + cfg.mix_weights[2];
    if (total <= 0.0)
      throw std::invalid_argument("sample_tasks: mix_weights must sum positive");
    int counts[3];
    double remainder[3];
    int assigned = 0;
    for (int t = 0; t < 3; ++t) {
      double exact = n * cfg.mix_weights[t] / total;
      counts[t] = static_cast<int>(exact);
      remainder[t] = exact - counts[t];
      assigned += counts[t];
    }
    while (assigned < n) {
      int best = 0;
      for (int t = 1; t < 3; ++t)
        if (remainder[t] > remainder[best]) best = t;
      counts[best] += 1;
      remainder[best] = -1.0;
      assigned += 1;
    }
    std::vector<int> types;
    for (int t = 0; t < 3; ++t)
      for (int k = 0; k < counts[t]; ++k) types.push_back(t + 1);
    for (int i = static_cast<int>(types.size()) - 1; i > 0; --i)
      std::swap(types[i], types[rng.uniform_index(i + 1)]);
    for (int type : types) out.push_back(task_of_type(type, cfg.deadline_s));
    return out;
  }

  for (int i = 0; i < n; ++i) {
    switch (cfg.kind) {
      case TaskKind::Uniform: {
        TaskSpec t;
        t.input_bits = rng.uniform(cfg.data_min_mb, cfg.data_max_mb) * units::bits_per_mb;
        t.required_cycles =
            rng.uniform(cfg.cycles_min_gc, cfg.cycles_max_gc) * units::cycles_per_gcycle;
        t.deadline_s = cfg.deadline_s;
        out.push_back(t);
        break;
      }
      case TaskKind::Type1: out.push_back(task_of_type(1, cfg.deadline_s)); break;
      case TaskKind::Type2: out.push_back(task_of_type(2, cfg.deadline_s)); break;
      case TaskKind::Type3: out.push_back(task_of_type(3, cfg.deadline_s)); break;
      case TaskKind::Mixed: break;  // handled above
    }
  }
  return out;
}

}  // namespace offload
