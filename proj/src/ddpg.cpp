#include "offload/ddpg.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace offload {

namespace {

bool all_finite(const std::vector<double>& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

bool all_finite(const Gradients& g) {
  for (const auto& v : g.w)
    if (!all_finite(v)) return false;
  for (const auto& v : g.b)
    if (!all_finite(v)) return false;
  return true;
}

std::vector<double> concat_batch(std::span<const Transition* const> batch,
                                 bool next_state) {
  std::vector<double> out;
  if (batch.empty()) return out;
  const auto& first = next_state ? batch[0]->next_state : batch[0]->state;
  out.reserve(batch.size() * first.size());
  for (const Transition* t : batch) {
    const auto& s = next_state ? t->next_state : t->state;
    out.insert(out.end(), s.begin(), s.end());
  }
  return out;
}

}  // namespace

AgentBundle AgentBundle::make(int state_dim, int action_dim, std::span<const int> hidden,
                              RngStream& init_rng) {
  AgentBundle b;
  b.state_dim = state_dim;
  b.action_dim = action_dim;
  b.actor = DenseNet::mlp(state_dim, hidden, action_dim, Activation::Relu,
                          Activation::TanhUnit);
  b.critic = DenseNet::mlp(state_dim + action_dim, hidden, 1, Activation::Relu,
                           Activation::Linear);
  b.actor.init_uniform(init_rng);
  b.critic.init_uniform(init_rng);
  b.target_actor = b.actor;
  b.target_critic = b.critic;
  return b;
}

std::vector<double> actor_forward(const DenseNet& actor, std::span<const double> state) {
  return actor.forward(state);
}

double critic_forward(const DenseNet& critic, std::span<const double> state,
                      std::span<const double> action) {
  std::vector<double> in;
  in.reserve(state.size() + action.size());
  in.insert(in.end(), state.begin(), state.end());
  in.insert(in.end(), action.begin(), action.end());
  return critic.forward(in)[0];
}

std::vector<double> select_action(const AgentBundle& agent, std::span<const double> state,
                                  std::span<const double> noise) {
  std::vector<double> a = agent.actor.forward(state);
  if (noise.size() != a.size())
    throw std::invalid_argument("select_action: noise length mismatch");
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] += noise[i];
    if (a[i] < 0.0) a[i] = 0.0;
    if (a[i] > 1.0) a[i] = 1.0;
  }
  return a;
}

std::vector<double> target_values(std::span<const Transition* const> batch,
                                  const AgentBundle& agent, double discount,
                                  ExecMode mode) {
  if (batch.empty()) throw std::invalid_argument("target_values: empty batch");
  const int v = static_cast<int>(batch.size());
  const int sd = agent.state_dim, ad = agent.action_dim;

  std::vector<double> next_states = concat_batch(batch, /*next_state=*/true);
  BatchTrace actor_trace;
  forward_batch(agent.target_actor, next_states, v, actor_trace, mode);
  const std::vector<double>& next_actions = actor_trace.act.back();

  std::vector<double> critic_in(static_cast<std::size_t>(v) * (sd + ad));
  for (int t = 0; t < v; ++t) {
    double* row = critic_in.data() + static_cast<std::size_t>(t) * (sd + ad);
    const double* s = next_states.data() + static_cast<std::size_t>(t) * sd;
    const double* a = next_actions.data() + static_cast<std::size_t>(t) * ad;
    std::copy(s, s + sd, row);
    std::copy(a, a + ad, row + sd);
  }
  BatchTrace critic_trace;
  forward_batch(agent.target_critic, critic_in, v, critic_trace, mode);
  const std::vector<double>& q_next = critic_trace.act.back();

  std::vector<double> y(v);
  for (int t = 0; t < v; ++t)
    y[t] = batch[t]->done ? batch[t]->reward
                          : batch[t]->reward + discount * q_next[t];
  return y;
}

double critic_update(AgentBundle& agent, std::span<const Transition* const> batch,
                     double critic_lr, double discount, ExecMode mode, AdamState* opt) {
  const int v = static_cast<int>(batch.size());
  if (v == 0) throw std::invalid_argument("critic_update: empty batch");
  const int sd = agent.state_dim, ad = agent.action_dim;

  std::vector<double> y = target_values(batch, agent, discount, mode);

  std::vector<double> critic_in(static_cast<std::size_t>(v) * (sd + ad));
  for (int t = 0; t < v; ++t) {
    double* row = critic_in.data() + static_cast<std::size_t>(t) * (sd + ad);
    std::copy(batch[t]->state.begin(), batch[t]->state.end(), row);
    std::copy(batch[t]->action.begin(), batch[t]->action.end(), row + sd);
  }
  BatchTrace trace;
  forward_batch(agent.critic, critic_in, v, trace, mode);
  const std::vector<double>& q = trace.act.back();

  double mse = 0.0;
  std::vector<double> out_grad(v);
  for (int t = 0; t < v; ++t) {
    double resid = y[t] - q[t];
    mse += resid * resid;
    out_grad[t] = -2.0 * resid;  // d/dQ of (y-Q)^2
  }
  mse /= v;
  if (!std::isfinite(mse))
    throw std::runtime_error("critic_update: non-finite Bellman error");

  Gradients g = agent.critic.make_gradients();
  backward_batch(agent.critic, trace, out_grad, &g, nullptr, mode);
  if (!all_finite(g)) throw std::runtime_error("critic_update: non-finite gradient");

  if (opt != nullptr)
    agent.critic.adam_step(g, 1.0 / v, *opt, critic_lr);
  else
    agent.critic.axpy(-critic_lr / v, g);
  return mse;
}

void actor_update(AgentBundle& agent, std::span<const Transition* const> batch,
                  double actor_lr, ExecMode mode, AdamState* opt) {
  const int v = static_cast<int>(batch.size());
  if (v == 0) throw std::invalid_argument("actor_update: empty batch");
  const int sd = agent.state_dim, ad = agent.action_dim;

  std::vector<double> states = concat_batch(batch, /*next_state=*/false);
  BatchTrace actor_trace;
  forward_batch(agent.actor, states, v, actor_trace, mode);
  const std::vector<double>& actions = actor_trace.act.back();

  std::vector<double> critic_in(static_cast<std::size_t>(v) * (sd + ad));
  for (int t = 0; t < v; ++t) {
    double* row = critic_in.data() + static_cast<std::size_t>(t) * (sd + ad);
    const double* s = states.data() + static_cast<std::size_t>(t) * sd;
    const double* a = actions.data() + static_cast<std::size_t>(t) * ad;
    std::copy(s, s + sd, row);
    std::copy(a, a + ad, row + sd);
  }
  BatchTrace critic_trace;
  forward_batch(agent.critic, critic_in, v, critic_trace, mode);

  // dQ/d(input) of the critic, then the action slice chains into the actor
  std::vector<double> ones(v, 1.0);
  std::vector<double> critic_in_grad;
  backward_batch(agent.critic, critic_trace, ones, nullptr, &critic_in_grad, mode);

  std::vector<double> action_grad(static_cast<std::size_t>(v) * ad);
  for (int t = 0; t < v; ++t) {
    const double* src = critic_in_grad.data() + static_cast<std::size_t>(t) * (sd + ad) + sd;
    std::copy(src, src + ad, action_grad.data() + static_cast<std::size_t>(t) * ad);
  }

  Gradients g = agent.actor.make_gradients();
  backward_batch(agent.actor, actor_trace, action_grad, &g, nullptr, mode);
  if (!all_finite(g)) throw std::runtime_error("actor_update: non-finite gradient");

  // ascent on Q: the policy moves toward actions the critic scores higher
  if (opt != nullptr)
    agent.actor.adam_step(g, -1.0 / v, *opt, actor_lr);
  else
    agent.actor.axpy(actor_lr / v, g);
}

void soft_update(AgentBundle& agent, double omega) {
  if (omega < 0.0 || omega > 1.0)
    throw std::invalid_argument("soft_update: omega outside [0,1]");
  agent.target_actor.blend_from(agent.actor, omega);
  agent.target_critic.blend_from(agent.critic, omega);
}

TrainResult train(Environment& env, AgentBundle& agent, const TrainConfig& cfg,
                  std::uint64_t seed,
                  const std::function<std::vector<TaskSpec>(int)>& task_provider,
                  const std::function<void(int)>& episode_hook) {
  if (cfg.discount < 0.0 || cfg.discount > 1.0)
    throw std::invalid_argument("train: discount outside [0,1]");
  if (cfg.batch < 1) throw std::invalid_argument("train: batch must be >= 1");

  RngStream sampling_rng(derive_seed(seed, Stream::Sampling));
  OuProcess ou(agent.action_dim, cfg.ou_theta, cfg.ou_sigma, cfg.ou_mu,
               derive_seed(seed, Stream::Noise));
  ReplayMemory replay(cfg.replay_capacity);

  AdamState actor_opt = agent.actor.make_adam_state();
  AdamState critic_opt = agent.critic.make_adam_state();
  AdamState* actor_opt_p = cfg.optimizer == Optimizer::Adam ? &actor_opt : nullptr;
  AdamState* critic_opt_p = cfg.optimizer == Optimizer::Adam ? &critic_opt : nullptr;

  TrainResult result;
  result.trace.reserve(cfg.episodes);

  std::vector<double> rewards;
  rewards.reserve(cfg.max_steps);

  const double decay_span =
      std::max(1.0, cfg.ou_decay_fraction * static_cast<double>(cfg.episodes - 1));
  for (int ep = 0; ep < cfg.episodes; ++ep) {
    if (episode_hook) episode_hook(ep);
    double frac = std::min(1.0, static_cast<double>(ep) / decay_span);
    ou.set_sigma(cfg.ou_sigma + frac * (cfg.ou_sigma_final - cfg.ou_sigma));
    ou.reset();

    if (task_provider)
      env.reset(task_provider(ep));
    else
      env.reset();
    std::vector<double> obs = env.observation();

    rewards.clear();
    EpisodeStats stats;
    auto t0 = std::chrono::steady_clock::now();

    for (int step = 0; step < cfg.max_steps; ++step) {
      std::vector<double> raw = select_action(agent, obs, ou.step());
      // the replay stores the effective action: coverage-masked, as executed
      std::vector<double> masked = env.apply_coverage_mask(raw);
      RefinedAction refined = env.refine_raw(masked);
      Environment::StepResult res = env.step(refined);
      std::vector<double> next_obs = env.observation();

      replay.push({obs, std::move(masked), res.reward, next_obs, res.done});

      if (auto batch = replay.sample(cfg.batch, sampling_rng)) {
        critic_update(agent, *batch, cfg.critic_lr, cfg.discount, cfg.exec, critic_opt_p);
        actor_update(agent, *batch, cfg.actor_lr, cfg.exec, actor_opt_p);
        soft_update(agent, cfg.soft_update);
      }

      rewards.push_back(res.reward);
      stats.energy_j += res.energy_j;
      stats.violations += res.new_breaches;
      obs = std::move(next_obs);
      if (res.done) break;
    }

    stats.discounted_return = episode_return(rewards, cfg.discount);
    stats.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.trace.push_back(stats);
  }
  return result;
}

EvalStats evaluate(Environment& env, const AgentBundle& agent, int episodes,
                   double discount,
                   const std::function<std::vector<TaskSpec>(int)>& task_provider) {
  EvalStats stats;
  std::vector<double> rewards;
  for (int ep = 0; ep < episodes; ++ep) {
    if (task_provider)
      env.reset(task_provider(ep));
    else
      env.reset();
    std::vector<double> obs = env.observation();
    rewards.clear();
    double energy = 0.0;
    int breached = 0;
    for (int step = 0; step < env.episode_config().max_steps; ++step) {
      std::vector<double> raw = agent.actor.forward(obs);
      RefinedAction refined = env.refine_raw(raw);
      Environment::StepResult res = env.step(refined);
      rewards.push_back(res.reward);
      energy += res.energy_j;
      breached += res.new_breaches;
      obs = env.observation();
      if (res.done) break;
    }
    stats.mean_energy_j += energy;
    stats.mean_return += episode_return(rewards, discount);
    stats.violation_rate += static_cast<double>(breached) / env.device_count();
    stats.episode_energy_j.push_back(energy);
  }
  if (episodes > 0) {
    stats.mean_energy_j /= episodes;
    stats.mean_return /= episodes;
    stats.violation_rate /= episodes;
  }
  return stats;
}

namespace {

const char* activation_name(Activation a) {
  switch (a) {
    case Activation::Relu: return "relu";
    case Activation::TanhUnit: return "tanh01";
    case Activation::Linear: return "linear";
  }
  return "linear";
}

Activation activation_from(const std::string& s) {
  if (s == "relu") return Activation::Relu;
  if (s == "tanh01") return Activation::TanhUnit;
  if (s == "linear") return Activation::Linear;
  throw std::runtime_error("checkpoint: unknown activation '" + s + "'");
}

void write_hex(std::FILE* f, double v) { std::fprintf(f, " %a", v); }

void write_net(std::FILE* f, const char* name, const DenseNet& net) {
  std::fprintf(f, "net %s %d\n", name, net.layer_count());
  for (int l = 0; l < net.layer_count(); ++l) {
    const Layer& ly = net.layer(l);
    std::fprintf(f, "layer %d %d %s\n", ly.in, ly.out, activation_name(ly.act));
    for (int i = 0; i < ly.out; ++i) {
      std::fprintf(f, "w");
      for (int j = 0; j < ly.in; ++j)
        write_hex(f, ly.w[static_cast<std::size_t>(i) * ly.in + j]);
      std::fprintf(f, "\n");
    }
    std::fprintf(f, "b");
    for (int i = 0; i < ly.out; ++i) write_hex(f, ly.b[i]);
    std::fprintf(f, "\n");
  }
}

double parse_double(std::istream& in, const char* what) {
  std::string tok;
  if (!(in >> tok)) throw std::runtime_error(std::string("checkpoint: missing ") + what);
  char* end = nullptr;
  double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str())
    throw std::runtime_error(std::string("checkpoint: bad number for ") + what);
  return v;
}

std::string expect_token(std::istream& in, const char* what) {
  std::string tok;
  if (!(in >> tok)) throw std::runtime_error(std::string("checkpoint: missing ") + what);
  return tok;
}

DenseNet read_net(std::istream& in, const std::string& expected_name) {
  if (expect_token(in, "net keyword") != "net")
    throw std::runtime_error("checkpoint: expected 'net'");
  if (expect_token(in, "net name") != expected_name)
    throw std::runtime_error("checkpoint: unexpected network name");
  int layers = static_cast<int>(parse_double(in, "layer count"));

  std::vector<int> hidden;
  struct RawLayer {
    int in, out;
    Activation act;
    std::vector<double> w, b;
  };
  std::vector<RawLayer> raw(layers);
  for (int l = 0; l < layers; ++l) {
    if (expect_token(in, "layer keyword") != "layer")
      throw std::runtime_error("checkpoint: expected 'layer'");
    raw[l].in = static_cast<int>(parse_double(in, "layer in"));
    raw[l].out = static_cast<int>(parse_double(in, "layer out"));
    raw[l].act = activation_from(expect_token(in, "activation"));
    raw[l].w.resize(static_cast<std::size_t>(raw[l].in) * raw[l].out);
    raw[l].b.resize(raw[l].out);
    for (int i = 0; i < raw[l].out; ++i) {
      if (expect_token(in, "'w' row") != "w")
        throw std::runtime_error("checkpoint: expected 'w'");
      for (int j = 0; j < raw[l].in; ++j)
        raw[l].w[static_cast<std::size_t>(i) * raw[l].in + j] = parse_double(in, "weight");
    }
    if (expect_token(in, "'b' row") != "b")
      throw std::runtime_error("checkpoint: expected 'b'");
    for (int i = 0; i < raw[l].out; ++i) raw[l].b[i] = parse_double(in, "bias");
  }
  for (int l = 0; l + 1 < layers; ++l) hidden.push_back(raw[l].out);

  DenseNet net = DenseNet::mlp(raw.front().in, hidden, raw.back().out,
                               layers > 1 ? raw.front().act : raw.back().act,
                               raw.back().act);
  for (int l = 0; l < layers; ++l) {
    net.layer(l).w = std::move(raw[l].w);
    net.layer(l).b = std::move(raw[l].b);
    net.layer(l).act = raw[l].act;
  }
  return net;
}

}  // namespace

void save_checkpoint(const std::string& path, const AgentBundle& agent,
                     const TrainConfig& cfg) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (f == nullptr) throw std::runtime_error("save_checkpoint: cannot open " + path);
  std::fprintf(f, "offloadsim-checkpoint v1\n");
  std::fprintf(f, "dims %d %d\n", agent.state_dim, agent.action_dim);
  std::fprintf(f, "train");
  write_hex(f, cfg.actor_lr);
  write_hex(f, cfg.critic_lr);
  write_hex(f, cfg.discount);
  write_hex(f, cfg.soft_update);
  std::fprintf(f, " %d %d %d %zu", cfg.batch, cfg.episodes, cfg.max_steps,
               cfg.replay_capacity);
  write_hex(f, cfg.ou_theta);
  write_hex(f, cfg.ou_sigma);
  write_hex(f, cfg.ou_sigma_final);
  write_hex(f, cfg.ou_decay_fraction);
  write_hex(f, cfg.ou_mu);
  std::fprintf(f, " %s %s\n", cfg.optimizer == Optimizer::Adam ? "adam" : "sgd",
               cfg.exec == ExecMode::OpenMP ? "openmp" : "serial");
  std::fprintf(f, "hidden %zu", cfg.hidden.size());
  for (int h : cfg.hidden) std::fprintf(f, " %d", h);
  std::fprintf(f, "\n");
  write_net(f, "actor", agent.actor);
  write_net(f, "critic", agent.critic);
  write_net(f, "target_actor", agent.target_actor);
  write_net(f, "target_critic", agent.target_critic);
  std::fclose(f);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
  std::string magic, version;
  in >> magic >> version;
  if (magic != "offloadsim-checkpoint" || version != "v1")
    throw std::runtime_error("load_checkpoint: not a v1 checkpoint");

  Checkpoint ck;
  if (expect_token(in, "dims") != "dims")
    throw std::runtime_error("checkpoint: expected 'dims'");
  ck.agent.state_dim = static_cast<int>(parse_double(in, "state_dim"));
  ck.agent.action_dim = static_cast<int>(parse_double(in, "action_dim"));

  if (expect_token(in, "train") != "train")
    throw std::runtime_error("checkpoint: expected 'train'");
  ck.cfg.actor_lr = parse_double(in, "actor_lr");
  ck.cfg.critic_lr = parse_double(in, "critic_lr");
  ck.cfg.discount = parse_double(in, "discount");
  ck.cfg.soft_update = parse_double(in, "soft_update");
  ck.cfg.batch = static_cast<int>(parse_double(in, "batch"));
  ck.cfg.episodes = static_cast<int>(parse_double(in, "episodes"));
  ck.cfg.max_steps = static_cast<int>(parse_double(in, "max_steps"));
  ck.cfg.replay_capacity = static_cast<std::size_t>(parse_double(in, "replay_capacity"));
  ck.cfg.ou_theta = parse_double(in, "ou_theta");
  ck.cfg.ou_sigma = parse_double(in, "ou_sigma");
  ck.cfg.ou_sigma_final = parse_double(in, "ou_sigma_final");
  ck.cfg.ou_decay_fraction = parse_double(in, "ou_decay_fraction");
  ck.cfg.ou_mu = parse_double(in, "ou_mu");
  ck.cfg.optimizer = expect_token(in, "optimizer") == "adam" ? Optimizer::Adam
                                                             : Optimizer::Sgd;
  std::string exec = expect_token(in, "exec mode");
  ck.cfg.exec = exec == "openmp" ? ExecMode::OpenMP : ExecMode::Serial;

  if (expect_token(in, "hidden") != "hidden")
    throw std::runtime_error("checkpoint: expected 'hidden'");
  int hcount = static_cast<int>(parse_double(in, "hidden count"));
  ck.cfg.hidden.clear();
  for (int i = 0; i < hcount; ++i)
    ck.cfg.hidden.push_back(static_cast<int>(parse_double(in, "hidden size")));

  ck.agent.actor = read_net(in, "actor");
  ck.agent.critic = read_net(in, "critic");
  ck.agent.target_actor = read_net(in, "target_actor");
  ck.agent.target_critic = read_net(in, "target_critic");
  return ck;
}

}  // namespace offload
