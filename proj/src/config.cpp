#include "offload/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace offload {

using nlohmann::json;

namespace {

/// Reads one section's keys with path-qualified diagnostics and flags typos.
class Section {
 public:
  Section(const json& root, const std::string& name) : name_(name) {
    if (root.contains(name)) {
      if (!root.at(name).is_object())
        throw ConfigError(name, "must be an object");
      sec_ = &root.at(name);
    }
  }

  bool present() const { return sec_ != nullptr; }

  double number(const char* key, double def) {
    seen_.insert(key);
    if (sec_ == nullptr || !sec_->contains(key)) return def;
    const json& v = sec_->at(key);
    if (!v.is_number()) throw ConfigError(path(key), "must be a number");
    return v.get<double>();
  }

  int integer(const char* key, int def) {
    seen_.insert(key);
    if (sec_ == nullptr || !sec_->contains(key)) return def;
    const json& v = sec_->at(key);
    if (!v.is_number_integer()) throw ConfigError(path(key), "must be an integer");
    return v.get<int>();
  }

  std::uint64_t uinteger(const char* key, std::uint64_t def, bool required = false) {
    seen_.insert(key);
    if (sec_ == nullptr || !sec_->contains(key)) {
      if (required) throw ConfigError(path(key), "missing required field");
      return def;
    }
    const json& v = sec_->at(key);
    if (!v.is_number_unsigned() && !v.is_number_integer())
      throw ConfigError(path(key), "must be a non-negative integer");
    return v.get<std::uint64_t>();
  }

  std::string text(const char* key, const std::string& def) {
    seen_.insert(key);
    if (sec_ == nullptr || !sec_->contains(key)) return def;
    const json& v = sec_->at(key);
    if (!v.is_string()) throw ConfigError(path(key), "must be a string");
    return v.get<std::string>();
  }

  bool boolean(const char* key, bool def) {
    seen_.insert(key);
    if (sec_ == nullptr || !sec_->contains(key)) return def;
    const json& v = sec_->at(key);
    if (!v.is_boolean()) throw ConfigError(path(key), "must be a boolean");
    return v.get<bool>();
  }

  template <typename T>
  std::vector<T> list(const char* key, std::vector<T> def) {
    seen_.insert(key);
    if (sec_ == nullptr || !sec_->contains(key)) return def;
    const json& v = sec_->at(key);
    if (!v.is_array()) throw ConfigError(path(key), "must be an array");
    std::vector<T> out;
    for (const json& e : v) {
      if (!e.is_number()) throw ConfigError(path(key), "must contain numbers");
      out.push_back(e.get<T>());
    }
    return out;
  }

  std::vector<std::string> string_list(const char* key, std::vector<std::string> def) {
    seen_.insert(key);
    if (sec_ == nullptr || !sec_->contains(key)) return def;
    const json& v = sec_->at(key);
    if (!v.is_array()) throw ConfigError(path(key), "must be an array");
    std::vector<std::string> out;
    for (const json& e : v) {
      if (!e.is_string()) throw ConfigError(path(key), "must contain strings");
      out.push_back(e.get<std::string>());
    }
    return out;
  }

  void finish() {
    if (sec_ == nullptr) return;
    for (auto it = sec_->begin(); it != sec_->end(); ++it)
      if (!seen_.contains(it.key()))
        throw ConfigError(path(it.key().c_str()), "unknown field");
  }

 private:
  std::string path(const char* key) const { return name_ + "." + key; }
  std::string name_;
  const json* sec_ = nullptr;
  std::set<std::string> seen_;
};

void require_positive(double v, const std::string& field) {
  if (!(v > 0.0)) throw ConfigError(field, "must be positive");
}

}  // namespace

TaskKind task_kind_from(const std::string& name) {
  if (name == "uniform") return TaskKind::Uniform;
  if (name == "type1") return TaskKind::Type1;
  if (name == "type2") return TaskKind::Type2;
  if (name == "type3") return TaskKind::Type3;
  if (name == "mixed") return TaskKind::Mixed;
  throw ConfigError("tasks.kind", "unknown task kind '" + name + "'");
}

const char* task_kind_name(TaskKind k) {
  switch (k) {
    case TaskKind::Uniform: return "uniform";
    case TaskKind::Type1: return "type1";
    case TaskKind::Type2: return "type2";
    case TaskKind::Type3: return "type3";
    case TaskKind::Mixed: return "mixed";
  }
  return "uniform";
}

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(origin, std::string("not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError(origin, "top level must be an object");

  static const std::set<std::string> known = {"experiment", "topology", "channel",
                                              "tasks",      "episode",  "train"};
  for (auto it = root.begin(); it != root.end(); ++it)
    if (!known.contains(it.key())) throw ConfigError(it.key(), "unknown section");

  ExperimentConfig cfg;

  {
    Section s(root, "topology");
    cfg.topology.sbs_count = s.integer("sbs_count", cfg.topology.sbs_count);
    cfg.topology.device_count = s.integer("device_count", cfg.topology.device_count);
    cfg.topology.mbs_radius_m = s.number("mbs_radius_m", cfg.topology.mbs_radius_m);
    cfg.topology.sbs_radius_m = s.number("sbs_radius_m", cfg.topology.sbs_radius_m);
    cfg.topology.mbs_compute = s.number("mbs_compute_hz", cfg.topology.mbs_compute);
    cfg.topology.sbs_compute = s.number("sbs_compute_hz", cfg.topology.sbs_compute);
    cfg.topology.device_compute = s.number("device_compute_hz", cfg.topology.device_compute);
    cfg.topology.mbs_energy_per_cycle =
        s.number("mbs_energy_per_cycle", cfg.topology.mbs_energy_per_cycle);
    cfg.topology.sbs_energy_per_cycle =
        s.number("sbs_energy_per_cycle", cfg.topology.sbs_energy_per_cycle);
    cfg.topology.transmit_power_mw =
        s.number("transmit_power_mw", cfg.topology.transmit_power_mw);
    cfg.topology.switched_capacitance =
        s.number("switched_capacitance", cfg.topology.switched_capacitance);
    cfg.topology.placement_retries =
        s.integer("placement_retries", cfg.topology.placement_retries);
    s.finish();
    if (cfg.topology.device_count < 1)
      throw ConfigError("topology.device_count", "must be >= 1");
    if (cfg.topology.sbs_count < 0) throw ConfigError("topology.sbs_count", "must be >= 0");
    require_positive(cfg.topology.mbs_radius_m, "topology.mbs_radius_m");
    require_positive(cfg.topology.device_compute, "topology.device_compute_hz");
    require_positive(cfg.topology.transmit_power_mw, "topology.transmit_power_mw");
    require_positive(cfg.topology.switched_capacitance, "topology.switched_capacitance");
  }

  {
    Section s(root, "channel");
    cfg.channel.path_loss_exponent =
        s.number("path_loss_exponent", cfg.channel.path_loss_exponent);
    cfg.channel.noise_power_w = s.number("noise_power_w", cfg.channel.noise_power_w);
    std::string gain = s.text("gain_model", "unit");
    if (gain == "unit")
      cfg.channel.gain_model = GainModel::UnitGain;
    else if (gain == "rayleigh")
      cfg.channel.gain_model = GainModel::RayleighFading;
    else
      throw ConfigError("channel.gain_model", "must be 'unit' or 'rayleigh'");
    cfg.channel.sbs_bandwidth_hz = s.number("sbs_bandwidth_hz", cfg.channel.sbs_bandwidth_hz);
    cfg.channel.mbs_bandwidth_hz = s.number("mbs_bandwidth_hz", cfg.channel.mbs_bandwidth_hz);
    s.finish();
    require_positive(cfg.channel.path_loss_exponent, "channel.path_loss_exponent");
    require_positive(cfg.channel.noise_power_w, "channel.noise_power_w");
    require_positive(cfg.channel.sbs_bandwidth_hz, "channel.sbs_bandwidth_hz");
    require_positive(cfg.channel.mbs_bandwidth_hz, "channel.mbs_bandwidth_hz");
  }

  {
    Section s(root, "tasks");
    cfg.tasks.kind = task_kind_from(s.text("kind", task_kind_name(cfg.tasks.kind)));
    cfg.tasks.data_min_mb = s.number("data_min_mb", cfg.tasks.data_min_mb);
    cfg.tasks.data_max_mb = s.number("data_max_mb", cfg.tasks.data_max_mb);
    cfg.tasks.cycles_min_gc = s.number("cycles_min_gc", cfg.tasks.cycles_min_gc);
    cfg.tasks.cycles_max_gc = s.number("cycles_max_gc", cfg.tasks.cycles_max_gc);
    cfg.tasks.deadline_s = s.number("deadline_s", cfg.tasks.deadline_s);
    cfg.tasks.mix_weights = s.list<double>("mix_weights", cfg.tasks.mix_weights);
    s.finish();
    if (cfg.tasks.data_min_mb > cfg.tasks.data_max_mb)
      throw ConfigError("tasks.data_min_mb", "range is inverted");
    if (cfg.tasks.cycles_min_gc > cfg.tasks.cycles_max_gc)
      throw ConfigError("tasks.cycles_min_gc", "range is inverted");
    require_positive(cfg.tasks.deadline_s, "tasks.deadline_s");
    if (cfg.tasks.mix_weights.size() != 3)
      throw ConfigError("tasks.mix_weights", "needs exactly 3 entries");
  }

  {
    Section s(root, "episode");
    cfg.episode.slot_s = s.number("slot_s", cfg.episode.slot_s);
    cfg.episode.max_steps = s.integer("max_steps", cfg.episode.max_steps);
    cfg.episode.penalty = s.number("penalty", cfg.episode.penalty);
    std::string pm = s.text("penalty_mode", "per-task-doom");
    if (pm == "per-task-doom")
      cfg.episode.penalty_mode = EpisodeConfig::PenaltyMode::PerTaskDoom;
    else if (pm == "first-breach")
      cfg.episode.penalty_mode = EpisodeConfig::PenaltyMode::FirstBreachSlot;
    else if (pm == "episode-end")
      cfg.episode.penalty_mode = EpisodeConfig::PenaltyMode::EpisodeEnd;
    else
      throw ConfigError("episode.penalty_mode",
                        "must be 'per-task-doom', 'first-breach', or 'episode-end'");
    std::string cm = s.text("capacity_mode", "fresh");
    if (cm == "fresh")
      cfg.episode.capacity_mode = EpisodeConfig::CapacityMode::FreshEachSlot;
    else if (cm == "cumulative")
      cfg.episode.capacity_mode = EpisodeConfig::CapacityMode::Cumulative;
    else
      throw ConfigError("episode.capacity_mode", "must be 'fresh' or 'cumulative'");
    s.finish();
    require_positive(cfg.episode.slot_s, "episode.slot_s");
    if (cfg.episode.max_steps < 1) throw ConfigError("episode.max_steps", "must be >= 1");
  }

  {
    Section s(root, "train");
    cfg.train.actor_lr = s.number("actor_lr", cfg.train.actor_lr);
    cfg.train.critic_lr = s.number("critic_lr", cfg.train.critic_lr);
    cfg.train.discount = s.number("discount", cfg.train.discount);
    cfg.train.soft_update = s.number("soft_update", cfg.train.soft_update);
    cfg.train.batch = s.integer("batch", cfg.train.batch);
    cfg.train.episodes = s.integer("episodes", cfg.train.episodes);
    cfg.train.replay_capacity =
        s.uinteger("replay_capacity", cfg.train.replay_capacity);
    cfg.train.hidden = s.list<int>("hidden", cfg.train.hidden);
    cfg.train.ou_theta = s.number("ou_theta", cfg.train.ou_theta);
    cfg.train.ou_sigma = s.number("ou_sigma", cfg.train.ou_sigma);
    cfg.train.ou_sigma_final = s.number("ou_sigma_final", cfg.train.ou_sigma_final);
    cfg.train.ou_decay_fraction =
        s.number("ou_decay_fraction", cfg.train.ou_decay_fraction);
    cfg.train.ou_mu = s.number("ou_mu", cfg.train.ou_mu);
    std::string opt = s.text("optimizer", "adam");
    if (opt == "adam")
      cfg.train.optimizer = Optimizer::Adam;
    else if (opt == "sgd")
      cfg.train.optimizer = Optimizer::Sgd;
    else
      throw ConfigError("train.optimizer", "must be 'adam' or 'sgd'");
    cfg.train.exec = s.boolean("parallel", cfg.train.exec == ExecMode::OpenMP)
                         ? ExecMode::OpenMP
                         : ExecMode::Serial;
    s.finish();
    if (cfg.train.discount < 0.0 || cfg.train.discount > 1.0)
      throw ConfigError("train.discount", "must lie in [0,1]");
    if (cfg.train.soft_update < 0.0 || cfg.train.soft_update > 1.0)
      throw ConfigError("train.soft_update", "must lie in [0,1]");
    if (cfg.train.batch < 1) throw ConfigError("train.batch", "must be >= 1");
    if (cfg.train.episodes < 1) throw ConfigError("train.episodes", "must be >= 1");
    for (int h : cfg.train.hidden)
      if (h < 1) throw ConfigError("train.hidden", "sizes must be >= 1");
  }

  {
    Section s(root, "experiment");
    if (!s.present()) throw ConfigError("experiment.seed", "missing required field");
    cfg.seed = s.uinteger("seed", 0, /*required=*/true);
    cfg.output_dir = s.text("output_dir", cfg.output_dir);
    cfg.eval_episodes = s.integer("eval_episodes", cfg.eval_episodes);
    cfg.oracle_max_enumerations =
        s.uinteger("oracle_max_enumerations", cfg.oracle_max_enumerations);
    cfg.state_rate_max = s.number("state_rate_max", cfg.state_rate_max);
    std::string share = s.text("baseline_bandwidth_share", "equal-split");
    if (share == "equal-split")
      cfg.baseline_share = BandwidthShare::EqualSplit;
    else if (share == "full")
      cfg.baseline_share = BandwidthShare::Full;
    else
      throw ConfigError("experiment.baseline_bandwidth_share",
                        "must be 'equal-split' or 'full'");
    cfg.device_grid = s.list<int>("device_grid", cfg.device_grid);
    cfg.compare_task_kinds = s.string_list("compare_task_kinds", cfg.compare_task_kinds);
    cfg.sweep_learning_rates = s.list<double>("sweep_learning_rates", cfg.sweep_learning_rates);
    cfg.sweep_discounts = s.list<double>("sweep_discounts", cfg.sweep_discounts);
    cfg.sweep_devices = s.list<int>("sweep_devices", cfg.sweep_devices);
    cfg.bandwidth_switch_episode =
        s.integer("bandwidth_switch_episode", cfg.bandwidth_switch_episode);
    cfg.bandwidth_factor = s.number("bandwidth_factor", cfg.bandwidth_factor);
    s.finish();
    if (cfg.eval_episodes < 1) throw ConfigError("experiment.eval_episodes", "must be >= 1");
    if (cfg.bandwidth_switch_episode < 0)
      throw ConfigError("experiment.bandwidth_switch_episode", "must be >= 0");
    require_positive(cfg.bandwidth_factor, "experiment.bandwidth_factor");
    for (const std::string& k : cfg.compare_task_kinds) task_kind_from(k);
  }

  // episode steps drive the training loop
  cfg.train.max_steps = cfg.episode.max_steps;
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

std::string serialize_config(const ExperimentConfig& cfg) {
  json root;
  root["topology"] = {
      {"sbs_count", cfg.topology.sbs_count},
      {"device_count", cfg.topology.device_count},
      {"mbs_radius_m", cfg.topology.mbs_radius_m},
      {"sbs_radius_m", cfg.topology.sbs_radius_m},
      {"mbs_compute_hz", cfg.topology.mbs_compute},
      {"sbs_compute_hz", cfg.topology.sbs_compute},
      {"device_compute_hz", cfg.topology.device_compute},
      {"mbs_energy_per_cycle", cfg.topology.mbs_energy_per_cycle},
      {"sbs_energy_per_cycle", cfg.topology.sbs_energy_per_cycle},
      {"transmit_power_mw", cfg.topology.transmit_power_mw},
      {"switched_capacitance", cfg.topology.switched_capacitance},
      {"placement_retries", cfg.topology.placement_retries},
  };
  root["channel"] = {
      {"path_loss_exponent", cfg.channel.path_loss_exponent},
      {"noise_power_w", cfg.channel.noise_power_w},
      {"gain_model", cfg.channel.gain_model == GainModel::UnitGain ? "unit" : "rayleigh"},
      {"sbs_bandwidth_hz", cfg.channel.sbs_bandwidth_hz},
      {"mbs_bandwidth_hz", cfg.channel.mbs_bandwidth_hz},
  };
  root["tasks"] = {
      {"kind", task_kind_name(cfg.tasks.kind)},
      {"data_min_mb", cfg.tasks.data_min_mb},
      {"data_max_mb", cfg.tasks.data_max_mb},
      {"cycles_min_gc", cfg.tasks.cycles_min_gc},
      {"cycles_max_gc", cfg.tasks.cycles_max_gc},
      {"deadline_s", cfg.tasks.deadline_s},
      {"mix_weights", cfg.tasks.mix_weights},
  };
  root["episode"] = {
      {"slot_s", cfg.episode.slot_s},
      {"max_steps", cfg.episode.max_steps},
      {"penalty", cfg.episode.penalty},
      {"penalty_mode",
       cfg.episode.penalty_mode == EpisodeConfig::PenaltyMode::PerTaskDoom
           ? "per-task-doom"
       : cfg.episode.penalty_mode == EpisodeConfig::PenaltyMode::FirstBreachSlot
           ? "first-breach"
           : "episode-end"},
      {"capacity_mode",
       cfg.episode.capacity_mode == EpisodeConfig::CapacityMode::FreshEachSlot
           ? "fresh"
           : "cumulative"},
  };
  root["train"] = {
      {"actor_lr", cfg.train.actor_lr},
      {"critic_lr", cfg.train.critic_lr},
      {"discount", cfg.train.discount},
      {"soft_update", cfg.train.soft_update},
      {"batch", cfg.train.batch},
      {"episodes", cfg.train.episodes},
      {"replay_capacity", cfg.train.replay_capacity},
      {"hidden", cfg.train.hidden},
      {"ou_theta", cfg.train.ou_theta},
      {"ou_sigma", cfg.train.ou_sigma},
      {"ou_sigma_final", cfg.train.ou_sigma_final},
      {"ou_decay_fraction", cfg.train.ou_decay_fraction},
      {"ou_mu", cfg.train.ou_mu},
      {"optimizer", cfg.train.optimizer == Optimizer::Adam ? "adam" : "sgd"},
      {"parallel", cfg.train.exec == ExecMode::OpenMP},
  };
  root["experiment"] = {
      {"seed", cfg.seed},
      {"output_dir", cfg.output_dir},
      {"eval_episodes", cfg.eval_episodes},
      {"oracle_max_enumerations", cfg.oracle_max_enumerations},
      {"state_rate_max", cfg.state_rate_max},
      {"baseline_bandwidth_share",
       cfg.baseline_share == BandwidthShare::EqualSplit ? "equal-split" : "full"},
      {"device_grid", cfg.device_grid},
      {"compare_task_kinds", cfg.compare_task_kinds},
      {"sweep_learning_rates", cfg.sweep_learning_rates},
      {"sweep_discounts", cfg.sweep_discounts},
      {"sweep_devices", cfg.sweep_devices},
      {"bandwidth_switch_episode", cfg.bandwidth_switch_episode},
      {"bandwidth_factor", cfg.bandwidth_factor},
  };
  return root.dump(2) + "\n";
}

void save_config(const std::string& path, const ExperimentConfig& cfg) {
  std::ofstream out(path);
  if (!out) throw ConfigError(path, "cannot write file");
  out << serialize_config(cfg);
}

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
  return serialize_config(a) == serialize_config(b);
}

}  // namespace offload
