#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "offload/dense_net.hpp"
#include "offload/env.hpp"
#include "offload/ou_noise.hpp"
#include "offload/replay.hpp"

namespace offload {

/// How the spec'd minibatch gradients turn into parameter steps. Adam keeps
/// the pinned learning rates usable against the penalty-dominated reward
/// scale; Sgd applies the literal update equations.
enum class Optimizer { Adam, Sgd };

struct TrainConfig {
  double actor_lr = 1e-3;
  double critic_lr = 1e-3;
  double discount = 0.6;
  double soft_update = 0.01;  // omega
  int batch = 32;
  int episodes = 6000;
  int max_steps = 20;
  std::size_t replay_capacity = 100000;
  std::vector<int> hidden = {128, 128};
  double ou_theta = 0.15;
  double ou_sigma = 0.2;
  double ou_sigma_final = 0.005;
  /// sigma decays linearly from ou_sigma to ou_sigma_final over this fraction
  /// of the episodes, then stays at the floor for the exploitation tail.
  double ou_decay_fraction = 0.6;
  double ou_mu = 0.0;
  Optimizer optimizer = Optimizer::Adam;
  ExecMode exec = ExecMode::OpenMP;
};

/// Primary actor/critic pair plus their slowly tracking target copies.
struct AgentBundle {
  DenseNet actor;
  DenseNet critic;
  DenseNet target_actor;
  DenseNet target_critic;
  int state_dim = 0;
  int action_dim = 0;

  static AgentBundle make(int state_dim, int action_dim, std::span<const int> hidden,
                          RngStream& init_rng);
};

/// Actor policy head; outputs land strictly inside (0,1).
std::vector<double> actor_forward(const DenseNet& actor, std::span<const double> state);

/// Critic value of a state-action pair (inputs concatenated).
double critic_forward(const DenseNet& critic, std::span<const double> state,
                      std::span<const double> action);

/// Policy output plus exploration noise, clipped back into [0,1] so the raw
/// action stays interpretable.
std::vector<double> select_action(const AgentBundle& agent, std::span<const double> state,
                                  std::span<const double> noise);

/// Bellman targets y_t = r_t + discount * Q'(s', pi'(s')); terminal
/// transitions bootstrap nothing and use y_t = r_t.
std::vector<double> target_values(std::span<const Transition* const> batch,
                                  const AgentBundle& agent, double discount,
                                  ExecMode mode);

/// One step down the summed squared Bellman error, targets from
/// target_values at the given discount; the raw step is the batch-mean
/// gradient times critic_lr, or an Adam step on it when `opt` is given.
/// Returns the mean squared error before the step. Throws on non-finite
/// values.
double critic_update(AgentBundle& agent, std::span<const Transition* const> batch,
                     double critic_lr, double discount, ExecMode mode,
                     AdamState* opt = nullptr);

/// One deterministic-policy-gradient ascent step on Q(s, pi(s)), batch-mean
/// scaled by actor_lr (or Adam on the same gradient).
void actor_update(AgentBundle& agent, std::span<const Transition* const> batch,
                  double actor_lr, ExecMode mode, AdamState* opt = nullptr);

/// theta_target <- omega * theta_primary + (1-omega) * theta_target for both
/// target networks.
void soft_update(AgentBundle& agent, double omega);

struct EpisodeStats {
  double discounted_return = 0.0;
  double energy_j = 0.0;
  int violations = 0;
  double wall_s = 0.0;
};

struct TrainResult {
  std::vector<EpisodeStats> trace;
};

/// The training loop: act with OU exploration, refine, step the environment,
/// store the raw action, and update from uniform replay minibatches once the
/// memory holds a full batch. Fully deterministic for a fixed seed.
/// `episode_hook`, when set, runs before each episode (index passed in) and
/// may mutate the environment; `task_provider` supplies fresh tasks per
/// episode.
TrainResult train(Environment& env, AgentBundle& agent, const TrainConfig& cfg,
                  std::uint64_t seed,
                  const std::function<std::vector<TaskSpec>(int)>& task_provider = {},
                  const std::function<void(int)>& episode_hook = {});

/// Greedy rollouts with exploration off.
struct EvalStats {
  double mean_energy_j = 0.0;
  double mean_return = 0.0;
  double violation_rate = 0.0;  // breached devices / total devices
  std::vector<double> episode_energy_j;
};
EvalStats evaluate(Environment& env, const AgentBundle& agent, int episodes,
                   double discount,
                   const std::function<std::vector<TaskSpec>(int)>& task_provider = {});

/// Checkpoints serialize every parameter tensor as hex floats, so a
/// save/load round trip is bit-exact.
void save_checkpoint(const std::string& path, const AgentBundle& agent,
                     const TrainConfig& cfg);
struct Checkpoint {
  AgentBundle agent;
  TrainConfig cfg;
};
Checkpoint load_checkpoint(const std::string& path);

}  // namespace offload
