#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "offload/ddpg.hpp"
#include "test_util.hpp"

using namespace offload;
using doctest::Approx;

namespace {

Transition make_transition(std::vector<double> s, std::vector<double> a, double r,
                           std::vector<double> s2, bool done) {
  return {std::move(s), std::move(a), r, std::move(s2), done};
}

struct TinyWorld {
  Topology topo = test::make_topology({{200.0, 0.0}, {210.0, 0.0}}, {{250.0, 0.0}});
  ChannelParams chan;
  EpisodeConfig ecfg;
  StateScale scale;
  std::vector<TaskSpec> tasks = {{4.0e7, 1.0e9, 1.0}, {0.0, 0.4e9, 1.0}};

  TinyWorld() {
    ecfg.slot_s = 0.05;
    ecfg.max_steps = 20;
    scale.bits_max = 4e8;
    scale.cycles_max = 5e9;
    scale.deadline_max = 1.0;
    scale.rate_max = 3e8;
    scale.compute_max = {50e9, 10e9};
  }

  Environment env() { return Environment(topo, tasks, chan, ecfg, scale); }

  TrainConfig tcfg(int episodes) {
    TrainConfig c;
    c.episodes = episodes;
    c.max_steps = 20;
    c.batch = 8;
    c.hidden = {16, 16};
    c.replay_capacity = 500;
    c.exec = ExecMode::Serial;
    return c;
  }
};

std::vector<double> all_params(const DenseNet& net) {
  std::vector<double> out(net.param_count());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = net.get_param(i);
  return out;
}

}  // namespace

TEST_CASE("select_action adds noise and clips into [0,1]") {
  RngStream rng(1);
  AgentBundle agent = AgentBundle::make(3, 2, std::vector<int>{8}, rng);
  std::vector<double> state = {0.1, 0.2, 0.3};

  std::vector<double> zero_noise = {0.0, 0.0};
  CHECK(select_action(agent, state, zero_noise) == agent.actor.forward(state));

  std::vector<double> big_noise = {0.5, -0.9};
  std::vector<double> a = select_action(agent, state, big_noise);
  CHECK(a[0] <= 1.0);
  CHECK(a[1] >= 0.0);

  // actor output 0.9 + 0.5 clips to exactly 1
  DenseNet& actor = agent.actor;
  for (int l = 0; l < actor.layer_count(); ++l) {
    std::fill(actor.layer(l).w.begin(), actor.layer(l).w.end(), 0.0);
    std::fill(actor.layer(l).b.begin(), actor.layer(l).b.end(), 0.0);
  }
  actor.layer(actor.layer_count() - 1).b[0] = std::atanh(2.0 * 0.9 - 1.0);
  std::vector<double> push = {0.5, 0.0};
  CHECK(select_action(agent, state, push)[0] == 1.0);
}

TEST_CASE("OU mean reversion is deterministic when sigma is 0") {
  OuProcess ou(1, 0.15, 0.0, 0.0, 7);
  ou.set_value({1.0});
  CHECK(ou.step()[0] == Approx(0.85).epsilon(1e-12));
  CHECK(ou.step()[0] == Approx(0.7225).epsilon(1e-12));
  ou.reset();
  CHECK(ou.step()[0] == 0.0);  // at the mean it stays
}

TEST_CASE("OU long-run moments match the stationary law") {
  OuProcess ou(1, 0.15, 0.2, 0.0, 12345);
  const int steps = 100000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < steps; ++i) {
    double v = ou.step()[0];
    sum += v;
    sumsq += v * v;
  }
  double mean = sum / steps;
  double var = sumsq / steps - mean * mean;
  // continuous-time approximation sigma^2/(2 theta) = 0.1333, tolerance 10%
  CHECK(std::abs(var - 0.2 * 0.2 / (2 * 0.15)) / (0.2 * 0.2 / (2 * 0.15)) < 0.10);
  CHECK(std::abs(mean) < 0.05);

  OuProcess centered(1, 0.15, 0.2, 0.5, 999);
  double csum = 0.0;
  for (int i = 0; i < steps; ++i) csum += centered.step()[0];
  CHECK(csum / steps == Approx(0.5).epsilon(0.05));
}

TEST_CASE("replay evicts strictly oldest-first") {
  ReplayMemory mem(2);
  mem.push(make_transition({1}, {0}, -1, {1}, false));
  mem.push(make_transition({2}, {0}, -2, {2}, false));
  mem.push(make_transition({3}, {0}, -3, {3}, false));
  CHECK(mem.size() == 2);
  CHECK(mem.inserted() == 3);
  CHECK(mem.oldest(0).reward == -2);
  CHECK(mem.oldest(1).reward == -3);
}

TEST_CASE("replay sampling skips under-filled memories and avoids duplicates") {
  ReplayMemory mem(100);
  RngStream rng(5);
  for (int i = 0; i < 31; ++i)
    mem.push(make_transition({double(i)}, {0}, -i, {double(i)}, false));
  CHECK(!mem.sample(32, rng).has_value());
  mem.push(make_transition({31.0}, {0}, -31, {31.0}, false));
  auto batch = mem.sample(32, rng);
  REQUIRE(batch.has_value());
  CHECK(batch->size() == 32);
  std::set<const Transition*> unique(batch->begin(), batch->end());
  CHECK(unique.size() == 32);

  ReplayMemory one(10);
  one.push(make_transition({42.0}, {0}, -42, {42.0}, true));
  auto single = one.sample(1, rng);
  REQUIRE(single.has_value());
  CHECK((*single)[0]->reward == -42);
}

TEST_CASE("seeded replay draws are reproducible") {
  ReplayMemory mem(64);
  for (int i = 0; i < 64; ++i)
    mem.push(make_transition({double(i)}, {0}, -i, {double(i)}, false));
  RngStream a(9), b(9);
  auto ba = mem.sample(16, a);
  auto bb = mem.sample(16, b);
  for (std::size_t i = 0; i < ba->size(); ++i)
    CHECK((*ba)[i]->reward == (*bb)[i]->reward);
}

TEST_CASE("target values follow the Bellman form and respect terminals") {
  RngStream rng(2);
  AgentBundle agent = AgentBundle::make(2, 1, std::vector<int>{8}, rng);
  Transition t1 = make_transition({0.1, 0.2}, {0.5}, -1.0, {0.2, 0.3}, false);
  Transition t2 = make_transition({0.3, 0.4}, {0.6}, -2.0, {0.4, 0.5}, true);
  std::vector<const Transition*> batch = {&t1, &t2};

  // discount 0 reduces to the rewards
  std::vector<double> y0 = target_values(batch, agent, 0.0, ExecMode::Serial);
  CHECK(y0[0] == -1.0);
  CHECK(y0[1] == -2.0);

  // terminal transitions never bootstrap
  std::vector<double> y = target_values(batch, agent, 0.6, ExecMode::Serial);
  CHECK(y[1] == -2.0);
  double q = critic_forward(agent.target_critic, t1.next_state,
                            agent.target_actor.forward(t1.next_state));
  CHECK(y[0] == Approx(-1.0 + 0.6 * q).epsilon(1e-12));

  // zero-parameter targets leave only the reward
  AgentBundle zero = agent;
  for (DenseNet* net : {&zero.target_actor, &zero.target_critic})
    for (int l = 0; l < net->layer_count(); ++l) {
      std::fill(net->layer(l).w.begin(), net->layer(l).w.end(), 0.0);
      std::fill(net->layer(l).b.begin(), net->layer(l).b.end(), 0.0);
    }
  std::vector<double> yz = target_values(batch, zero, 0.6, ExecMode::Serial);
  CHECK(yz[0] == -1.0);
}

TEST_CASE("critic update leaves a zero-residual batch unchanged") {
  RngStream rng(3);
  AgentBundle agent = AgentBundle::make(2, 1, std::vector<int>{8}, rng);
  // terminal transitions with reward equal to the current Q values
  Transition t1 = make_transition({0.1, 0.2}, {0.5}, 0.0, {0.0, 0.0}, true);
  Transition t2 = make_transition({0.4, 0.1}, {0.2}, 0.0, {0.0, 0.0}, true);
  t1.reward = critic_forward(agent.critic, t1.state, t1.action);
  t2.reward = critic_forward(agent.critic, t2.state, t2.action);
  std::vector<const Transition*> batch = {&t1, &t2};

  std::vector<double> before = all_params(agent.critic);
  double loss = critic_update(agent, batch, 1e-2, 0.6, ExecMode::Serial);
  CHECK(loss == Approx(0.0).epsilon(1e-20));
  CHECK(all_params(agent.critic) == before);
}

TEST_CASE("critic update descends the Bellman error") {
  RngStream rng(4);
  AgentBundle agent = AgentBundle::make(2, 1, std::vector<int>{12, 12}, rng);
  std::vector<Transition> storage;
  for (int i = 0; i < 16; ++i)
    storage.push_back(make_transition({rng.uniform(), rng.uniform()}, {rng.uniform()},
                                      -rng.uniform(), {0.0, 0.0}, true));
  std::vector<const Transition*> batch;
  for (auto& t : storage) batch.push_back(&t);

  double first = critic_update(agent, batch, 1e-1, 0.6, ExecMode::Serial);
  for (int i = 0; i < 200; ++i) critic_update(agent, batch, 1e-1, 0.6, ExecMode::Serial);
  double last = critic_update(agent, batch, 1e-1, 0.6, ExecMode::Serial);
  CHECK(last < first);
}

TEST_CASE("actor update is a no-op under a zero critic, ascent otherwise") {
  RngStream rng(6);
  AgentBundle agent = AgentBundle::make(2, 1, std::vector<int>{8}, rng);
  for (int l = 0; l < agent.critic.layer_count(); ++l) {
    std::fill(agent.critic.layer(l).w.begin(), agent.critic.layer(l).w.end(), 0.0);
    std::fill(agent.critic.layer(l).b.begin(), agent.critic.layer(l).b.end(), 0.0);
  }
  Transition t = make_transition({0.1, 0.9}, {0.5}, -1.0, {0.0, 0.0}, true);
  std::vector<const Transition*> batch = {&t};
  std::vector<double> before = all_params(agent.actor);
  actor_update(agent, batch, 1e-2, ExecMode::Serial);
  CHECK(all_params(agent.actor) == before);

  // a critic that pays for large actions pushes the policy upward
  RngStream rng2(7);
  AgentBundle a2 = AgentBundle::make(2, 1, std::vector<int>{8}, rng2);
  DenseNet linear_critic = DenseNet::mlp(3, std::span<const int>{}, 1,
                                         Activation::Relu, Activation::Linear);
  linear_critic.layer(0).w = {0.0, 0.0, 1.0};  // Q = action
  a2.critic = linear_critic;
  double before_q = critic_forward(a2.critic, t.state, a2.actor.forward(t.state));
  for (int i = 0; i < 50; ++i) actor_update(a2, batch, 1e-1, ExecMode::Serial);
  double after_q = critic_forward(a2.critic, t.state, a2.actor.forward(t.state));
  CHECK(after_q > before_q);
}

TEST_CASE("soft update blends targets as an exact convex combination") {
  RngStream rng(8);
  AgentBundle agent = AgentBundle::make(2, 1, std::vector<int>{4}, rng);
  AgentBundle fresh = agent;

  soft_update(agent, 1.0);
  CHECK(all_params(agent.target_actor) == all_params(agent.actor));
  CHECK(all_params(agent.target_critic) == all_params(agent.critic));

  std::vector<double> before = all_params(fresh.target_actor);
  soft_update(fresh, 0.0);
  CHECK(all_params(fresh.target_actor) == before);

  // theta=1, target=0, omega=0.01 -> 0.01; applying omega=0.5 twice from
  // (1,0) gives 0.75
  DenseNet primary = DenseNet::mlp(1, std::span<const int>{}, 1, Activation::Relu,
                                   Activation::Linear);
  primary.layer(0).w[0] = 1.0;
  DenseNet target = primary;
  target.layer(0).w[0] = 0.0;
  DenseNet t2 = target;
  t2.blend_from(primary, 0.01);
  CHECK(t2.layer(0).w[0] == Approx(0.01).epsilon(1e-15));
  target.blend_from(primary, 0.5);
  target.blend_from(primary, 0.5);
  CHECK(target.layer(0).w[0] == 0.75);
}

TEST_CASE("training emits one stat per episode and stays deterministic") {
  TinyWorld world;
  Environment env = world.env();
  TrainConfig cfg = world.tcfg(4);
  RngStream init(derive_seed(33, Stream::Init));
  AgentBundle agent = AgentBundle::make(env.state_dim(), env.action_dim(), cfg.hidden, init);

  TrainResult r1 = train(env, agent, cfg, 33);
  CHECK(r1.trace.size() == 4);

  Environment env2 = world.env();
  RngStream init2(derive_seed(33, Stream::Init));
  AgentBundle agent2 =
      AgentBundle::make(env2.state_dim(), env2.action_dim(), cfg.hidden, init2);
  TrainResult r2 = train(env2, agent2, cfg, 33);

  REQUIRE(r2.trace.size() == r1.trace.size());
  for (std::size_t i = 0; i < r1.trace.size(); ++i) {
    CHECK(r1.trace[i].discounted_return == r2.trace[i].discounted_return);
    CHECK(r1.trace[i].energy_j == r2.trace[i].energy_j);
  }
  CHECK(all_params(agent.actor) == all_params(agent2.actor));
  CHECK(all_params(agent.critic) == all_params(agent2.critic));
}

TEST_CASE("zero learning rates leave the agent parameters invariant") {
  TinyWorld world;
  Environment env = world.env();
  TrainConfig cfg = world.tcfg(3);
  cfg.actor_lr = 0.0;
  cfg.critic_lr = 0.0;
  RngStream init(derive_seed(4, Stream::Init));
  AgentBundle agent = AgentBundle::make(env.state_dim(), env.action_dim(), cfg.hidden, init);
  std::vector<double> actor_before = all_params(agent.actor);
  std::vector<double> critic_before = all_params(agent.critic);
  train(env, agent, cfg, 4);
  CHECK(all_params(agent.actor) == actor_before);
  CHECK(all_params(agent.critic) == critic_before);
}

TEST_CASE("checkpoints round-trip bit-exactly") {
  TinyWorld world;
  Environment env = world.env();
  TrainConfig cfg = world.tcfg(2);
  RngStream init(derive_seed(21, Stream::Init));
  AgentBundle agent = AgentBundle::make(env.state_dim(), env.action_dim(), cfg.hidden, init);
  train(env, agent, cfg, 21);

  auto path = std::filesystem::temp_directory_path() / "offloadsim_ck_test.txt";
  save_checkpoint(path.string(), agent, cfg);
  Checkpoint ck = load_checkpoint(path.string());
  std::filesystem::remove(path);

  CHECK(ck.agent.state_dim == agent.state_dim);
  CHECK(ck.agent.action_dim == agent.action_dim);
  CHECK(all_params(ck.agent.actor) == all_params(agent.actor));
  CHECK(all_params(ck.agent.critic) == all_params(agent.critic));
  CHECK(all_params(ck.agent.target_actor) == all_params(agent.target_actor));
  CHECK(all_params(ck.agent.target_critic) == all_params(agent.target_critic));
  CHECK(ck.cfg.actor_lr == cfg.actor_lr);
  CHECK(ck.cfg.hidden == cfg.hidden);
  CHECK(ck.cfg.batch == cfg.batch);
}
