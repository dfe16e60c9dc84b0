#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "offload/action.hpp"
#include "offload/netmodel.hpp"
#include "offload/refine.hpp"
#include "offload/types.hpp"

namespace offload {

/// Slot-indexed observation: task residuals, current uplink rates, and the
/// compute capacity each station has left.
struct EnvState {
  std::vector<double> input_bits;        // d(t), N
  std::vector<double> remaining_cycles;  // c(t), N
  std::vector<double> deadline_s;        // tau(t), N
  std::vector<double> sbs_rates;         // N x M
  std::vector<double> mbs_rates;         // N
  std::vector<double> available_compute; // M+1, MBS first
};

/// Per-entry maxima used to squash state components into [0,1].
struct StateScale {
  double bits_max = 1.0;
  double cycles_max = 1.0;
  double deadline_max = 1.0;
  double rate_max = 1.0;
  std::vector<double> compute_max;  // M+1
};

/// Flat encoding in the fixed order d, c, tau, sbs rates (row-major), mbs
/// rates, station capacities; every entry divided by its maximum and clamped
/// to [0,1]. Length 4N + N*M + M + 1.
std::vector<double> flatten_state(const EnvState& s, const StateScale& scale);

struct EpisodeConfig {
  double slot_s = 0.05;
  int max_steps = 20;
  /// Reward penalty for a failed task; 0 means the 100*N default.
  double penalty = 0.0;
  /// PerTaskDoom charges the penalty per task at the first slot the task can
  /// no longer be completed by any route (deadline expiry is the latest such
  /// slot); FirstBreachSlot charges once in any slot where a deadline first
  /// expires with work remaining; EpisodeEnd charges once at termination if
  /// anything is unfinished.
  enum class PenaltyMode { PerTaskDoom, FirstBreachSlot, EpisodeEnd };
  PenaltyMode penalty_mode = PenaltyMode::PerTaskDoom;
  /// FreshEachSlot re-allocates each station's full capacity every slot;
  /// Cumulative depletes capacities monotonically over the episode.
  enum class CapacityMode { FreshEachSlot, Cumulative };
  CapacityMode capacity_mode = CapacityMode::FreshEachSlot;
};

/// What one slot does to the world, before rates are refreshed.
struct SlotEffect {
  std::vector<double> next_bits;
  std::vector<double> next_cycles;
  std::vector<double> next_deadline;
  double energy_j = 0.0;
  int new_breaches = 0;  // devices whose deadline first expired this slot
  int new_dooms = 0;     // tasks that first became impossible this slot
  bool all_done = false;
};

/// True if the task residuals can still be finished in the remaining time by
/// some route: locally (the input needs no uplink) or by uploading at a
/// current positive rate and computing at full station capacity.
bool task_completable(double bits, double cycles, double deadline_left,
                      double local_compute, int device, const EnvState& s,
                      const Topology& topo);

/// Applies one slot of the transition rules: local devices execute at full
/// device rate (the input is on-device, so the upload ledger is untouched);
/// offloaders first drain bits at the current rate, then, once the upload is
/// complete, cycles at the allocated rate for the remainder of the slot  —
/// matching the upload-then-compute delay formula. Residuals clamp at zero;
/// deadlines of unfinished tasks tick down by the slot length. A task is
/// finished when its cycles reach zero. The flag spans suppress repeat
/// breach/doom counting.
SlotEffect apply_slot(const EnvState& s, const RefinedAction& a,
                      const Topology& topo, const EpisodeConfig& cfg,
                      std::span<const std::uint8_t> already_breached,
                      std::span<const std::uint8_t> already_doomed);

/// Reward for one slot from a fresh state: negative energy, minus the
/// mode-appropriate completion penalty.
double immediate_reward(const EnvState& s, const RefinedAction& a,
                        const Topology& topo, const EpisodeConfig& cfg);

/// Discounted sum of a reward sequence.
double episode_return(std::span<const double> rewards, double discount);

/// The episodic decision process. One instance is single-threaded; run
/// independent instances for parallel experiments.
class Environment {
 public:
  Environment(Topology topo, std::vector<TaskSpec> tasks, ChannelParams chan,
              EpisodeConfig cfg, StateScale scale, ExecMode exec = ExecMode::Serial);

  /// Derives the scale from the task distribution and channel bandwidths.
  static StateScale default_scale(const Topology& topo, const ChannelParams& chan,
                                  const TaskDistConfig& tasks, double rate_max_hint = 0.0);

  const EnvState& reset();
  const EnvState& reset(std::vector<TaskSpec> tasks);

  struct StepResult {
    double reward = 0.0;
    bool done = false;
    double energy_j = 0.0;
    int new_breaches = 0;
    int new_dooms = 0;
  };
  StepResult step(const RefinedAction& a);

  /// Zeroes the y-block entries of stations the device cannot reach; the
  /// effective action, as refinement will see it.
  std::vector<double> apply_coverage_mask(std::span<const double> raw) const;

  /// Interprets a raw actor vector, masks SBS preferences of stations out of
  /// coverage, and refines against the current state.
  RefinedAction refine_raw(std::span<const double> raw) const;

  std::vector<double> observation() const { return flatten_state(state_, scale_); }

  const EnvState& state() const { return state_; }
  const Topology& topology() const { return topo_; }
  const ChannelParams& channel() const { return chan_; }
  const std::vector<TaskSpec>& tasks() const { return tasks_; }
  const EpisodeConfig& episode_config() const { return cfg_; }
  const StateScale& scale() const { return scale_; }
  double penalty() const { return penalty_; }
  int device_count() const { return topo_.device_count(); }
  int sbs_count() const { return topo_.sbs_count(); }
  int steps_taken() const { return steps_; }
  int state_dim() const;
  int action_dim() const;

  /// Capacity each station can hand out in the coming slot.
  std::vector<double> allocatable_capacities() const;
  RefineInputs refine_inputs(std::span<const double> capacities) const;

  /// Swaps station bandwidths mid-run (takes effect at the next rate
  /// refresh / reset).
  void set_bandwidths(double mbs_hz, double sbs_hz);

 private:
  void refresh_rates(const RefinedAction* last_action);

  Topology topo_;
  std::vector<TaskSpec> tasks_;
  ChannelParams chan_;
  EpisodeConfig cfg_;
  StateScale scale_;
  ExecMode exec_;
  double penalty_ = 0.0;
  std::vector<double> initial_capacity_;
  EnvState state_;
  std::vector<std::uint8_t> breached_;
  std::vector<std::uint8_t> doomed_;
  int steps_ = 0;
  bool done_ = true;
};

}  // namespace offload
