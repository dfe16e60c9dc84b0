#pragma once

#include <span>
#include <vector>

#include "offload/action.hpp"
#include "offload/compmodel.hpp"

namespace offload {

/// Row-stochastic fractional offloading matrix. Column 0 is local execution,
/// columns 1..M the SBSs, column M+1 the MBS.
struct FractionalDecision {
  int n = 0;           // devices
  int strategies = 0;  // M + 2
  std::vector<double> w;

  double at(int device, int strategy) const {
    return w[static_cast<std::size_t>(device) * strategies + strategy];
  }
  double& at(int device, int strategy) {
    return w[static_cast<std::size_t>(device) * strategies + strategy];
  }
};

/// Joins the fractional x/y/z blocks and normalizes each device's row to sum
/// to one. An all-zero row becomes uniform. Negative entries are rejected.
FractionalDecision normalize_rows(std::span<const double> x, std::span<const double> y,
                                  std::span<const double> z, int n_devices, int m_sbs);

struct RoundingEdge {
  int device = 0;
  int strategy = 0;  // 0..M+1
  int slot = 0;      // 1..J_strategy
  double weight = 0.0;
};

/// Bipartite rounding graph: devices on the left, per-strategy virtual slots
/// on the right. Strategy j gets ceil(sum_i w_ij) slots; each device's weight
/// in a column is split across the slots its cumulative-sum interval covers,
/// so no slot carries more than one unit of fractional weight.
struct RoundingGraph {
  int n_devices = 0;
  int strategies = 0;
  std::vector<int> slots_per_strategy;  // J_j per strategy
  std::vector<int> node_offset;         // first node index of each strategy
  std::vector<RoundingEdge> edges;

  int node_count() const;
  int node_index(int strategy, int slot) const;  // slot is 1-based
  /// (strategy, slot) of a node index.
  std::pair<int, int> node_strategy_slot(int node) const;
};

RoundingGraph build_rounding_graph(const FractionalDecision& w);

/// Device -> virtual-node matching, total weight summed in device order.
struct Matching {
  std::vector<int> node_of_device;
  double total_weight = 0.0;
};

/// Maximum-weight matching covering every device (Hungarian, exact). Throws
/// if the graph admits no device-covering matching; rounding graphs built
/// from row-stochastic matrices always do.
Matching max_weight_complete_matching(const RoundingGraph& g);

/// Matched virtual node -> binary offloading decision per device.
std::vector<OffloadDecision> extract_decisions(const RoundingGraph& g, const Matching& m);

/// Everything refinement needs besides the action itself: current rates,
/// task residuals, and the capacity each station can hand out this slot.
struct RefineInputs {
  std::span<const double> sbs_rates;        // N x M
  std::span<const double> mbs_rates;        // N
  std::span<const double> input_bits;       // residual d
  std::span<const double> remaining_cycles; // residual c
  std::span<const double> deadline_s;       // residual tau
  std::span<const double> capacities;       // M+1, MBS first
};

/// Keeps each offloader's requested allocation at its chosen station, floors
/// it at the minimum deadline-feasible allocation when one exists, then
/// rescales proportionally wherever a station is oversubscribed. The output
/// never exceeds any station's capacity.
void project_allocations(const EnvAction& action,
                         std::span<const OffloadDecision> decisions,
                         const RefineInputs& in, RefinedAction& out);

/// Full refinement: normalize -> rounding graph -> matching -> decisions ->
/// allocation projection.
RefinedAction refine(const EnvAction& action, const RefineInputs& in);

/// Refined action as a static Assignment (used for constraint checking and
/// energy accounting against the current rates).
Assignment to_assignment(const RefinedAction& a, const RefineInputs& in);

}  // namespace offload
