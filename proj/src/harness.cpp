#include "offload/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace offload {

namespace fs = std::filesystem;

std::vector<double> normalize_rewards(std::span<const double> trace) {
  if (trace.empty()) throw std::invalid_argument("normalize_rewards: empty trace");
  double lo = trace[0], hi = trace[0];
  for (double r : trace) {
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  std::vector<double> out(trace.size());
  if (hi == lo) {
    std::fill(out.begin(), out.end(), 0.5);
  } else {
    for (std::size_t i = 0; i < trace.size(); ++i) out[i] = (trace[i] - lo) / (hi - lo);
  }
  return out;
}

double improvement_statistic(std::span<const double> returns) {
  std::vector<double> norm = normalize_rewards(returns);
  std::size_t k = std::max<std::size_t>(1, norm.size() / 10);
  double head = 0.0, tail = 0.0;
  for (std::size_t i = 0; i < k; ++i) head += norm[i];
  for (std::size_t i = norm.size() - k; i < norm.size(); ++i) tail += norm[i];
  return tail / k - head / k;
}

Environment make_environment(const ExperimentConfig& cfg) {
  Topology topo = build_topology(cfg.topology, cfg.channel, cfg.seed);
  std::vector<TaskSpec> tasks = sample_tasks(cfg.topology.device_count, cfg.tasks,
                                             derive_seed(cfg.seed, Stream::Tasks, 0));
  StateScale scale =
      Environment::default_scale(topo, cfg.channel, cfg.tasks, cfg.state_rate_max);
  return Environment(std::move(topo), std::move(tasks), cfg.channel, cfg.episode,
                     std::move(scale), cfg.train.exec);
}

AgentBundle make_agent(const Environment& env, const ExperimentConfig& cfg) {
  RngStream init(derive_seed(cfg.seed, Stream::Init));
  return AgentBundle::make(env.state_dim(), env.action_dim(), cfg.train.hidden, init);
}

std::function<std::vector<TaskSpec>(int)> make_task_provider(const ExperimentConfig& cfg,
                                                             Stream stream) {
  TaskDistConfig dist = cfg.tasks;
  int n = cfg.topology.device_count;
  std::uint64_t seed = cfg.seed;
  return [dist, n, seed, stream](int episode) {
    return sample_tasks(n, dist, derive_seed(seed, stream, episode));
  };
}

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double violation_fraction(const ConstraintReport& rep, int n) {
  return n > 0 ? static_cast<double>(rep.delay_violators.size()) / n : 0.0;
}

}  // namespace

std::vector<PolicyRow> compare_policies(const ExperimentConfig& cfg, Environment& env,
                                        const AgentBundle* trained) {
  const int n = env.device_count();
  const int m = env.sbs_count();
  auto eval_tasks = make_task_provider(cfg, Stream::Eval);
  std::vector<PolicyRow> rows;

  if (trained != nullptr) {
    EvalStats ev = evaluate(env, *trained, cfg.eval_episodes, cfg.train.discount, eval_tasks);
    rows.push_back({"proposed", ev.mean_energy_j, ev.violation_rate, true, ""});
  }

  PolicyRow local{"local", 0.0, 0.0, true, ""};
  PolicyRow full{"full-offload", 0.0, 0.0, true, ""};
  for (int k = 0; k < cfg.eval_episodes; ++k) {
    std::vector<TaskSpec> tasks = eval_tasks(k);
    Assignment la = local_policy(tasks, env.topology());
    local.mean_energy_j += system_energy(la, env.topology(), tasks);
    local.violation_rate +=
        violation_fraction(check_feasible(la, env.topology(), tasks), n);
    Assignment fa =
        full_offload_policy(tasks, env.topology(), env.channel(), cfg.baseline_share);
    full.mean_energy_j += system_energy(fa, env.topology(), tasks);
    full.violation_rate +=
        violation_fraction(check_feasible(fa, env.topology(), tasks), n);
  }
  local.mean_energy_j /= cfg.eval_episodes;
  local.violation_rate /= cfg.eval_episodes;
  full.mean_energy_j /= cfg.eval_episodes;
  full.violation_rate /= cfg.eval_episodes;
  rows.push_back(local);
  rows.push_back(full);

  // random policy rolls through the same environment dynamics
  {
    RngStream rng(derive_seed(cfg.seed, Stream::Eval, 0x72616e64));
    PolicyRow rnd{"random", 0.0, 0.0, true, ""};
    for (int k = 0; k < cfg.eval_episodes; ++k) {
      env.reset(eval_tasks(k));
      double energy = 0.0;
      int breached = 0;
      for (int step = 0; step < env.episode_config().max_steps; ++step) {
        std::vector<double> raw = random_policy(raw_action_length(n, m), rng);
        auto res = env.step(env.refine_raw(raw));
        energy += res.energy_j;
        breached += res.new_breaches;
        if (res.done) break;
      }
      rnd.mean_energy_j += energy;
      rnd.violation_rate += static_cast<double>(breached) / n;
    }
    rnd.mean_energy_j /= cfg.eval_episodes;
    rnd.violation_rate /= cfg.eval_episodes;
    rows.push_back(rnd);
  }

  // the oracle joins only when the instance is enumerable
  {
    PolicyRow orc{"oracle", 0.0, 0.0, true, ""};
    try {
      RateMatrix quiet = compute_rates(env.topology(), env.channel(), {}, cfg.train.exec);
      int feasible_count = 0;
      for (int k = 0; k < cfg.eval_episodes; ++k) {
        std::vector<TaskSpec> tasks = eval_tasks(k);
        OracleResult res = exhaustive_oracle(tasks, env.topology(), quiet,
                                             {cfg.oracle_max_enumerations}, cfg.train.exec);
        if (res.feasible) {
          orc.mean_energy_j += res.energy_j;
          feasible_count += 1;
        }
      }
      if (feasible_count > 0) {
        orc.mean_energy_j /= feasible_count;
        if (feasible_count < cfg.eval_episodes)
          orc.note = std::to_string(cfg.eval_episodes - feasible_count) +
                     " instances infeasible";
      } else {
        orc.available = false;
        orc.note = "no feasible instance";
      }
    } catch (const EnumerationCapExceeded& e) {
      orc.available = false;
      orc.note = e.what();
    }
    rows.push_back(orc);
  }
  return rows;
}

void write_metrics_csv(const std::string& path, const TrainResult& result,
                       std::span<const double> norm_returns) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_metrics_csv: cannot write " + path);
  out << "episode,return,norm_return,mean_energy_J,violations,wall_s\n";
  for (std::size_t i = 0; i < result.trace.size(); ++i) {
    const EpisodeStats& s = result.trace[i];
    out << i << ',' << format_double(s.discounted_return) << ','
        << format_double(norm_returns[i]) << ',' << format_double(s.energy_j) << ','
        << s.violations << ',' << format_double(s.wall_s) << '\n';
  }
}

namespace {

void write_summary(const std::string& path, const ExperimentConfig& cfg,
                   const RunOutput& out) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << "offloadsim run summary\n";
  f << "seed " << cfg.seed << "\n";
  f << "episodes " << out.result.trace.size() << "\n";
  std::vector<double> returns;
  for (const EpisodeStats& s : out.result.trace) returns.push_back(s.discounted_return);
  f << "improvement_statistic " << format_double(improvement_statistic(returns)) << "\n";
  f << "converged " << (improvement_statistic(returns) >= kConvergenceThreshold ? 1 : 0)
    << "\n";
  f << "\npolicy comparison over " << cfg.eval_episodes << " evaluation episodes\n";
  f << "policy,mean_energy_J,violation_rate,note\n";
  for (const PolicyRow& row : out.comparison) {
    if (row.available)
      f << row.policy << ',' << format_double(row.mean_energy_j) << ','
        << format_double(row.violation_rate) << ',' << row.note << "\n";
    else
      f << row.policy << ",unavailable,," << row.note << "\n";
  }
}

}  // namespace

RunOutput run_experiment(const ExperimentConfig& cfg,
                         const std::function<void(int)>& episode_hook,
                         bool write_artifacts) {
  Environment env = make_environment(cfg);
  AgentBundle agent = make_agent(env, cfg);

  RunOutput out;
  out.result = train(env, agent, cfg.train, cfg.seed,
                     make_task_provider(cfg, Stream::Tasks), episode_hook);

  std::vector<double> returns;
  returns.reserve(out.result.trace.size());
  for (const EpisodeStats& s : out.result.trace) returns.push_back(s.discounted_return);
  out.norm_returns = normalize_rewards(returns);

  auto eval_tasks = make_task_provider(cfg, Stream::Eval);
  out.eval = evaluate(env, agent, cfg.eval_episodes, cfg.train.discount, eval_tasks);
  out.comparison = compare_policies(cfg, env, &agent);

  if (write_artifacts) {
    fs::create_directories(cfg.output_dir);
    out.run_dir = cfg.output_dir;
    write_metrics_csv((fs::path(cfg.output_dir) / "metrics.csv").string(), out.result,
                      out.norm_returns);
    save_checkpoint((fs::path(cfg.output_dir) / "checkpoint.txt").string(), agent,
                    cfg.train);
    save_config((fs::path(cfg.output_dir) / "config.json").string(), cfg);
    write_summary((fs::path(cfg.output_dir) / "summary.txt").string(), cfg, out);
  }
  return out;
}

std::vector<SweepRow> sweep(const ExperimentConfig& cfg, const std::string& axis) {
  std::vector<SweepRow> rows;
  std::vector<double> values;
  if (axis == "learning-rate") {
    values = cfg.sweep_learning_rates;
  } else if (axis == "discount") {
    values = cfg.sweep_discounts;
  } else if (axis == "devices") {
    for (int n : cfg.sweep_devices) values.push_back(n);
  } else {
    throw std::invalid_argument("sweep: axis must be learning-rate, discount, or devices");
  }

  fs::create_directories(cfg.output_dir);
  for (double v : values) {
    ExperimentConfig sub = cfg;
    std::ostringstream dir;
    dir << axis << "-" << v;
    sub.output_dir = (fs::path(cfg.output_dir) / dir.str()).string();
    if (axis == "learning-rate") {
      sub.train.actor_lr = v;
      sub.train.critic_lr = v;
    } else if (axis == "discount") {
      sub.train.discount = v;
    } else {
      sub.topology.device_count = static_cast<int>(v);
    }

    RunOutput out = run_experiment(sub);
    std::vector<double> returns;
    for (const EpisodeStats& s : out.result.trace) returns.push_back(s.discounted_return);
    double imp = improvement_statistic(returns);
    rows.push_back({axis, v, sub.output_dir, imp, imp >= kConvergenceThreshold});
  }

  std::ofstream manifest(fs::path(cfg.output_dir) / "sweep.csv");
  manifest << "axis,value,run_dir,improvement,converged\n";
  for (const SweepRow& r : rows)
    manifest << r.axis << ',' << format_double(r.value) << ',' << r.run_dir << ','
             << format_double(r.improvement) << ',' << (r.converged ? 1 : 0) << '\n';
  return rows;
}

std::vector<CompareCell> compare_baselines(const ExperimentConfig& cfg) {
  std::vector<CompareCell> cells;
  fs::create_directories(cfg.output_dir);
  int cell_index = 0;
  for (int n : cfg.device_grid) {
    for (const std::string& kind : cfg.compare_task_kinds) {
      ExperimentConfig sub = cfg;
      sub.topology.device_count = n;
      sub.tasks.kind = task_kind_from(kind);
      sub.seed = derive_seed(cfg.seed, Stream::Eval, 0xc0 + cell_index);
      std::ostringstream dir;
      dir << "compare-n" << n << "-" << kind;
      sub.output_dir = (fs::path(cfg.output_dir) / dir.str()).string();
      RunOutput out = run_experiment(sub);
      cells.push_back({n, kind, out.comparison});
      cell_index += 1;
    }
  }

  std::ofstream f(fs::path(cfg.output_dir) / "compare.csv");
  f << "device_count,task_kind,policy,mean_energy_J,violation_rate,note\n";
  for (const CompareCell& c : cells)
    for (const PolicyRow& row : c.rows)
      f << c.device_count << ',' << c.task_kind << ',' << row.policy << ','
        << (row.available ? format_double(row.mean_energy_j) : "unavailable") << ','
        << format_double(row.violation_rate) << ',' << row.note << '\n';
  return cells;
}

BandwidthSwitchOutcome bandwidth_switch_experiment(const ExperimentConfig& cfg) {
  BandwidthSwitchOutcome outcome;
  outcome.switch_episode = cfg.bandwidth_switch_episode;

  // the hook mutates the environment owned by run_experiment; capture what
  // it needs by value and find the environment through the closure below
  double mbs_hz = cfg.channel.mbs_bandwidth_hz * cfg.bandwidth_factor;
  double sbs_hz = cfg.channel.sbs_bandwidth_hz * cfg.bandwidth_factor;

  Environment env = make_environment(cfg);
  AgentBundle agent = make_agent(env, cfg);
  auto hook = [&env, mbs_hz, sbs_hz, &cfg](int ep) {
    if (ep == cfg.bandwidth_switch_episode) env.set_bandwidths(mbs_hz, sbs_hz);
  };

  RunOutput& out = outcome.run;
  out.result =
      train(env, agent, cfg.train, cfg.seed, make_task_provider(cfg, Stream::Tasks), hook);
  std::vector<double> returns;
  for (const EpisodeStats& s : out.result.trace) returns.push_back(s.discounted_return);
  out.norm_returns = normalize_rewards(returns);
  out.eval = evaluate(env, agent, cfg.eval_episodes, cfg.train.discount,
                      make_task_provider(cfg, Stream::Eval));

  auto phase_plateau = [&](std::size_t begin, std::size_t end) {
    if (begin >= end) return std::nan("");
    std::size_t len = end - begin;
    std::size_t k = std::max<std::size_t>(1, len / 10);
    double sum = 0.0;
    for (std::size_t i = end - k; i < end; ++i) sum += out.norm_returns[i];
    return sum / k;
  };
  std::size_t total = out.norm_returns.size();
  std::size_t sw = std::min<std::size_t>(cfg.bandwidth_switch_episode, total);
  outcome.phase1_plateau = phase_plateau(0, sw);
  outcome.phase2_plateau = phase_plateau(sw, total);
  outcome.adapted = !(std::isnan(outcome.phase1_plateau)) &&
                    !(std::isnan(outcome.phase2_plateau)) &&
                    outcome.phase2_plateau > outcome.phase1_plateau;

  fs::create_directories(cfg.output_dir);
  out.run_dir = cfg.output_dir;
  write_metrics_csv((fs::path(cfg.output_dir) / "metrics.csv").string(), out.result,
                    out.norm_returns);
  save_checkpoint((fs::path(cfg.output_dir) / "checkpoint.txt").string(), agent, cfg.train);
  save_config((fs::path(cfg.output_dir) / "config.json").string(), cfg);
  std::ofstream f(fs::path(cfg.output_dir) / "bandwidth_summary.txt");
  f << "bandwidth switch experiment\n";
  f << "switch_episode " << outcome.switch_episode << "\n";
  f << "phase1_plateau " << format_double(outcome.phase1_plateau) << "\n";
  f << "phase2_plateau " << format_double(outcome.phase2_plateau) << "\n";
  f << "adapted " << (outcome.adapted ? 1 : 0) << "\n";
  return outcome;
}

OracleReport oracle_report(const ExperimentConfig& cfg) {
  Topology topo = build_topology(cfg.topology, cfg.channel, cfg.seed);
  std::vector<TaskSpec> tasks = sample_tasks(cfg.topology.device_count, cfg.tasks,
                                             derive_seed(cfg.seed, Stream::Tasks, 0));
  RateMatrix quiet = compute_rates(topo, cfg.channel, {}, cfg.train.exec);

  OracleReport rep;
  rep.oracle =
      exhaustive_oracle(tasks, topo, quiet, {cfg.oracle_max_enumerations}, cfg.train.exec);

  Assignment la = local_policy(tasks, topo);
  rep.local_energy_j = system_energy(la, topo, tasks);
  rep.local_feasible = check_feasible(la, topo, tasks).ok();
  Assignment fa = full_offload_policy(tasks, topo, cfg.channel, cfg.baseline_share);
  rep.full_offload_energy_j = system_energy(fa, topo, tasks);
  rep.full_feasible = check_feasible(fa, topo, tasks).ok();
  return rep;
}

}  // namespace offload
