#include "offload/compmodel.hpp"

#include <cmath>
#include <stdexcept>

namespace offload {

double local_delay(const TaskSpec& task, double local_compute) {
  if (local_compute <= 0.0)
    throw std::invalid_argument("local_delay: local_compute must be positive");
  return task.required_cycles / local_compute;
}

double local_energy(const TaskSpec& task, double local_compute,
                    double switched_capacitance) {
  if (switched_capacitance <= 0.0)
    throw std::invalid_argument("local_energy: switched_capacitance must be positive");
  return switched_capacitance * task.required_cycles * local_compute * local_compute;
}

std::optional<double> offload_delay(const TaskSpec& task, double rate_bps,
                                    double alloc_cycles) {
  if (rate_bps <= 0.0 || alloc_cycles <= 0.0) return std::nullopt;
  return task.input_bits / rate_bps + task.required_cycles / alloc_cycles;
}

std::optional<double> offload_energy(const TaskSpec& task, double rate_bps,
                                     double transmit_power_w, double energy_per_cycle) {
  if (rate_bps <= 0.0) return std::nullopt;
  return transmit_power_w * task.input_bits / rate_bps +
         task.required_cycles * energy_per_cycle;
}

std::optional<double> min_feasible_alloc(const TaskSpec& task, double rate_bps,
                                         double deadline_s) {
  if (rate_bps <= 0.0) return std::nullopt;
  double compute_window = deadline_s - task.input_bits / rate_bps;
  if (compute_window <= 0.0) return std::nullopt;
  return task.required_cycles / compute_window;
}

double system_energy(const Assignment& a, const Topology& topo,
                     std::span<const TaskSpec> tasks) {
  const std::size_t n = tasks.size();
  if (a.decisions.size() != n)
    throw std::invalid_argument("system_energy: assignment does not cover all devices");
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Device& dev = topo.devices[i];
    const OffloadDecision& d = a.decisions[i];
    if (d.mode == OffloadDecision::Mode::Local) {
      total += local_energy(tasks[i], dev.local_compute, dev.switched_capacitance);
    } else {
      int st = d.station();
      double p_w = dev.transmit_power_mw * units::watts_per_milliwatt;
      auto e = offload_energy(tasks[i], a.rate_bps[i], p_w,
                              topo.stations[st].energy_per_cycle);
      if (!e)
        throw std::invalid_argument("system_energy: offloader with zero rate");
      total += *e;
    }
  }
  return total;
}

ConstraintReport check_feasible(const Assignment& a, const Topology& topo,
                                std::span<const TaskSpec> tasks) {
  ConstraintReport rep;
  const int n = static_cast<int>(tasks.size());
  const int s = topo.station_count();

  if (static_cast<int>(a.decisions.size()) != n) {
    // no decision at all is a choice violation for every uncovered device
    for (int i = static_cast<int>(a.decisions.size()); i < n; ++i)
      rep.choice_violators.push_back(i);
  }

  std::vector<double> station_load(s, 0.0);
  const int covered = std::min<int>(n, static_cast<int>(a.decisions.size()));
  for (int i = 0; i < covered; ++i) {
    const OffloadDecision& d = a.decisions[i];
    const Device& dev = topo.devices[i];

    if (d.mode == OffloadDecision::Mode::Sbs && (d.sbs_id < 1 || d.sbs_id >= s)) {
      rep.choice_violators.push_back(i);
      continue;
    }

    if (d.mode == OffloadDecision::Mode::Local) {
      if (local_delay(tasks[i], dev.local_compute) > tasks[i].deadline_s)
        rep.delay_violators.push_back(i);
      continue;
    }

    int st = d.station();
    double alloc = i < static_cast<int>(a.alloc.size()) ? a.alloc[i] : 0.0;
    double cap = topo.stations[st].compute_capacity;
    if (alloc < 0.0 || alloc > cap) rep.bounds_violators.push_back(i);
    station_load[st] += alloc;

    double rate = i < static_cast<int>(a.rate_bps.size()) ? a.rate_bps[i] : 0.0;
    auto delay = offload_delay(tasks[i], rate, alloc);
    if (!delay || *delay > tasks[i].deadline_s) rep.delay_violators.push_back(i);
  }

  for (int j = 0; j < s; ++j) {
    // tiny tolerance so allocations produced by exact-capacity projection pass
    if (station_load[j] > topo.stations[j].compute_capacity * (1.0 + 1e-12))
      rep.capacity_violators.push_back(j);
  }
  return rep;
}

}  // namespace offload
