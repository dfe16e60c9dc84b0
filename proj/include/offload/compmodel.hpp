#pragma once

#include <optional>
#include <span>
#include <vector>

#include "offload/types.hpp"

namespace offload {

/// Completion delay of on-device execution: required cycles over the
/// device's CPU rate. Transmission plays no part.
double local_delay(const TaskSpec& task, double local_compute);

/// On-device energy: switched capacitance times cycles times CPU rate
/// squared.
double local_energy(const TaskSpec& task, double local_compute,
                    double switched_capacitance);

/// Upload-then-execute delay: input_bits/rate + cycles/alloc.
/// nullopt when rate or alloc is zero (the task can never finish).
std::optional<double> offload_delay(const TaskSpec& task, double rate_bps,
                                    double alloc_cycles);

/// Energy to complete an offloaded task: transmit power (watts) times upload
/// time, plus the server's per-cycle energy. Independent of the allocation.
std::optional<double> offload_energy(const TaskSpec& task, double rate_bps,
                                     double transmit_power_w, double energy_per_cycle);

/// Smallest server allocation meeting the deadline:
/// cycles / (deadline - input_bits/rate). nullopt when the upload alone
/// exceeds the deadline.
std::optional<double> min_feasible_alloc(const TaskSpec& task, double rate_bps,
                                         double deadline_s);

/// A complete static decision: one mode per device plus, for offloaders, the
/// server allocation and the uplink rate they see.
struct Assignment {
  std::vector<OffloadDecision> decisions;
  std::vector<double> alloc;     // cycles/s; 0 for local devices
  std::vector<double> rate_bps;  // 0 for local devices
};

double system_energy(const Assignment& a, const Topology& topo,
                     std::span<const TaskSpec> tasks);

/// Per-constraint feasibility report. Never throws; violations are data.
struct ConstraintReport {
  std::vector<int> delay_violators;     // devices whose delay exceeds the deadline
  std::vector<int> choice_violators;    // devices without exactly one valid mode
  std::vector<int> capacity_violators;  // stations whose allocations sum past capacity
  std::vector<int> bounds_violators;    // devices with alloc outside [0, station capacity]

  bool delay_ok() const { return delay_violators.empty(); }
  bool choice_ok() const { return choice_violators.empty(); }
  bool capacity_ok() const { return capacity_violators.empty(); }
  bool bounds_ok() const { return bounds_violators.empty(); }
  bool ok() const { return delay_ok() && choice_ok() && capacity_ok() && bounds_ok(); }
  /// Structural constraints only (choice, capacity, bounds) — everything
  /// except the deadline.
  bool structural_ok() const { return choice_ok() && capacity_ok() && bounds_ok(); }
};

ConstraintReport check_feasible(const Assignment& a, const Topology& topo,
                                std::span<const TaskSpec> tasks);

}  // namespace offload
