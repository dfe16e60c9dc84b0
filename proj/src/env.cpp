#include "offload/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace offload {

namespace {
constexpr double kTimeTol = 1e-12;

double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }
}  // namespace

EnvAction interpret_action(std::span<const double> raw, int n_devices, int m_sbs,
                           std::span<const double> capacities) {
  if (static_cast<int>(raw.size()) != raw_action_length(n_devices, m_sbs))
    throw std::invalid_argument("interpret_action: raw vector has wrong length");
  if (static_cast<int>(capacities.size()) != m_sbs + 1)
    throw std::invalid_argument("interpret_action: capacities has wrong length");

  EnvAction a;
  a.n = n_devices;
  a.m = m_sbs;
  const int nm = n_devices * m_sbs;
  auto it = raw.begin();
  a.x.assign(it, it + n_devices);
  it += n_devices;
  a.y.assign(it, it + nm);
  it += nm;
  a.z.assign(it, it + n_devices);
  it += n_devices;
  a.sbs_alloc.assign(it, it + nm);
  it += nm;
  a.mbs_alloc.assign(it, it + n_devices);

  for (int i = 0; i < n_devices; ++i) {
    for (int j = 0; j < m_sbs; ++j)
      a.sbs_alloc[static_cast<std::size_t>(i) * m_sbs + j] *= capacities[1 + j];
    a.mbs_alloc[i] *= capacities[0];
  }
  return a;
}

std::vector<double> flatten_state(const EnvState& s, const StateScale& scale) {
  std::vector<double> out;
  out.reserve(s.input_bits.size() * 3 + s.sbs_rates.size() + s.mbs_rates.size() +
              s.available_compute.size());
  for (double v : s.input_bits) out.push_back(clamp01(v / scale.bits_max));
  for (double v : s.remaining_cycles) out.push_back(clamp01(v / scale.cycles_max));
  for (double v : s.deadline_s) out.push_back(clamp01(v / scale.deadline_max));
  for (double v : s.sbs_rates) out.push_back(clamp01(v / scale.rate_max));
  for (double v : s.mbs_rates) out.push_back(clamp01(v / scale.rate_max));
  for (std::size_t j = 0; j < s.available_compute.size(); ++j)
    out.push_back(clamp01(s.available_compute[j] / scale.compute_max[j]));
  return out;
}

bool task_completable(double bits, double cycles, double deadline_left,
                      double local_compute, int device, const EnvState& s,
                      const Topology& topo) {
  // a small slack absorbs float drift in tasks sized exactly to the deadline
  constexpr double slack_s = 1e-9;
  if (deadline_left <= 0.0) return false;
  // local route: the input is already on the device
  if (cycles / local_compute <= deadline_left + slack_s) return true;
  const int m = topo.sbs_count();
  for (int st = 0; st <= m; ++st) {
    double rate = st == 0 ? s.mbs_rates[device]
                          : s.sbs_rates[static_cast<std::size_t>(device) * m + (st - 1)];
    if (rate <= 0.0) continue;  // out of coverage or silenced
    double finish = bits / rate + cycles / topo.stations[st].compute_capacity;
    if (finish <= deadline_left + slack_s) return true;
  }
  return false;
}

SlotEffect apply_slot(const EnvState& s, const RefinedAction& a,
                      const Topology& topo, const EpisodeConfig& cfg,
                      std::span<const std::uint8_t> already_breached,
                      std::span<const std::uint8_t> already_doomed) {
  const int n = static_cast<int>(s.input_bits.size());
  const int m = a.m;
  if (a.n != n)
    throw std::invalid_argument("apply_slot: action does not cover all devices");

  SlotEffect eff;
  eff.next_bits = s.input_bits;
  eff.next_cycles = s.remaining_cycles;
  eff.next_deadline = s.deadline_s;

  const double dt = cfg.slot_s;
  bool all_done = true;
  for (int i = 0; i < n; ++i) {
    bool unfinished = s.remaining_cycles[i] > 0.0;
    if (!unfinished) continue;

    const Device& dev = topo.devices[i];
    const OffloadDecision& d = a.decisions[i];
    if (d.mode == OffloadDecision::Mode::Local) {
      double executed = std::min(s.remaining_cycles[i], dev.local_compute * dt);
      eff.energy_j +=
          dev.switched_capacitance * executed * dev.local_compute * dev.local_compute;
      eff.next_cycles[i] = s.remaining_cycles[i] - executed;
      // no uplink involved; the input stays on the device and the upload
      // ledger is untouched
    } else {
      int st = d.station();
      double rate = d.mode == OffloadDecision::Mode::Sbs
                        ? s.sbs_rates[static_cast<std::size_t>(i) * m + (d.sbs_id - 1)]
                        : s.mbs_rates[i];
      // upload first; the server computes only input it has received
      double compute_window = dt;
      if (s.input_bits[i] > 0.0) {
        if (rate <= 0.0) {
          compute_window = 0.0;
        } else {
          double sent = std::min(s.input_bits[i], rate * dt);
          eff.energy_j += dev.transmit_power_mw * units::watts_per_milliwatt * sent / rate;
          eff.next_bits[i] = s.input_bits[i] - sent;
          compute_window = eff.next_bits[i] > 0.0 ? 0.0 : dt - sent / rate;
        }
      }
      if (compute_window > 0.0) {
        double executed = std::min(s.remaining_cycles[i], a.alloc_of(i) * compute_window);
        eff.energy_j += topo.stations[st].energy_per_cycle * executed;
        eff.next_cycles[i] = s.remaining_cycles[i] - executed;
      }
    }
    if (eff.next_bits[i] < 0.0) eff.next_bits[i] = 0.0;
    if (eff.next_cycles[i] < 0.0) eff.next_cycles[i] = 0.0;

    eff.next_deadline[i] = s.deadline_s[i] - dt;

    bool still_unfinished = eff.next_cycles[i] > 0.0;
    if (still_unfinished) {
      all_done = false;
      bool was_breached =
          i < static_cast<int>(already_breached.size()) && already_breached[i];
      if (eff.next_deadline[i] <= kTimeTol && !was_breached) eff.new_breaches += 1;
      bool was_doomed = i < static_cast<int>(already_doomed.size()) && already_doomed[i];
      if (!was_doomed &&
          !task_completable(eff.next_bits[i], eff.next_cycles[i], eff.next_deadline[i],
                            dev.local_compute, i, s, topo))
        eff.new_dooms += 1;
    }
  }
  eff.all_done = all_done;
  return eff;
}

double immediate_reward(const EnvState& s, const RefinedAction& a,
                        const Topology& topo, const EpisodeConfig& cfg) {
  SlotEffect eff = apply_slot(s, a, topo, cfg, {}, {});
  double penalty = cfg.penalty > 0.0 ? cfg.penalty : 100.0 * s.input_bits.size();
  double r = -eff.energy_j;
  if (cfg.penalty_mode == EpisodeConfig::PenaltyMode::PerTaskDoom)
    r -= penalty * eff.new_dooms;
  else if (cfg.penalty_mode == EpisodeConfig::PenaltyMode::FirstBreachSlot &&
           eff.new_breaches > 0)
    r -= penalty;
  return r;
}

double episode_return(std::span<const double> rewards, double discount) {
  if (discount < 0.0 || discount > 1.0)
    throw std::invalid_argument("episode_return: discount outside [0,1]");
  double total = 0.0;
  double weight = 1.0;
  for (double r : rewards) {
    total += weight * r;
    weight *= discount;
  }
  return total;
}

Environment::Environment(Topology topo, std::vector<TaskSpec> tasks, ChannelParams chan,
                         EpisodeConfig cfg, StateScale scale, ExecMode exec)
    : topo_(std::move(topo)),
      tasks_(std::move(tasks)),
      chan_(chan),
      cfg_(cfg),
      scale_(std::move(scale)),
      exec_(exec) {
  if (static_cast<int>(tasks_.size()) != topo_.device_count())
    throw std::invalid_argument("Environment: one task per device required");
  if (static_cast<int>(scale_.compute_max.size()) != topo_.station_count())
    throw std::invalid_argument("Environment: scale.compute_max size mismatch");
  penalty_ = cfg_.penalty > 0.0 ? cfg_.penalty : 100.0 * topo_.device_count();
  initial_capacity_.reserve(topo_.station_count());
  for (const Station& st : topo_.stations) initial_capacity_.push_back(st.compute_capacity);
  reset();
}

StateScale Environment::default_scale(const Topology& topo, const ChannelParams& chan,
                                      const TaskDistConfig& tasks, double rate_max_hint) {
  StateScale sc;
  double max_mb = tasks.kind == TaskKind::Uniform ? tasks.data_max_mb : 50.0;
  double max_gc = tasks.kind == TaskKind::Uniform ? tasks.cycles_max_gc : 5.0;
  sc.bits_max = max_mb * units::bits_per_mb;
  sc.cycles_max = max_gc * units::cycles_per_gcycle;
  sc.deadline_max = tasks.deadline_s;
  sc.rate_max = rate_max_hint > 0.0
                    ? rate_max_hint
                    : 30.0 * std::max(chan.mbs_bandwidth_hz, chan.sbs_bandwidth_hz);
  for (const Station& st : topo.stations) sc.compute_max.push_back(st.compute_capacity);
  return sc;
}

int Environment::state_dim() const {
  int n = device_count(), m = sbs_count();
  return 4 * n + n * m + m + 1;
}

int Environment::action_dim() const { return raw_action_length(device_count(), sbs_count()); }

const EnvState& Environment::reset() {
  const int n = device_count();
  state_.input_bits.resize(n);
  state_.remaining_cycles.resize(n);
  state_.deadline_s.resize(n);
  for (int i = 0; i < n; ++i) {
    state_.input_bits[i] = tasks_[i].input_bits;
    state_.remaining_cycles[i] = tasks_[i].required_cycles;
    state_.deadline_s[i] = tasks_[i].deadline_s;
  }
  state_.available_compute = initial_capacity_;
  breached_.assign(n, 0);
  doomed_.assign(n, 0);
  steps_ = 0;
  done_ = false;
  refresh_rates(nullptr);
  return state_;
}

const EnvState& Environment::reset(std::vector<TaskSpec> tasks) {
  if (static_cast<int>(tasks.size()) != topo_.device_count())
    throw std::invalid_argument("Environment::reset: one task per device required");
  tasks_ = std::move(tasks);
  return reset();
}

void Environment::refresh_rates(const RefinedAction* last_action) {
  // Interference comes from every device that still has bits queued and an
  // offload decision in force.
  std::vector<Interferer> active;
  if (last_action != nullptr) {
    for (int i = 0; i < device_count(); ++i) {
      const OffloadDecision& d = last_action->decisions[i];
      if (d.mode != OffloadDecision::Mode::Local && state_.input_bits[i] > 0.0 &&
          state_.remaining_cycles[i] > 0.0)
        active.push_back({i, d.station()});
    }
  }
  RateMatrix rates = compute_rates(topo_, chan_, active, exec_);
  state_.sbs_rates = std::move(rates.sbs);
  state_.mbs_rates = std::move(rates.mbs);
}

std::vector<double> Environment::allocatable_capacities() const {
  if (cfg_.capacity_mode == EpisodeConfig::CapacityMode::FreshEachSlot)
    return initial_capacity_;
  return state_.available_compute;
}

RefineInputs Environment::refine_inputs(std::span<const double> capacities) const {
  RefineInputs in;
  in.sbs_rates = state_.sbs_rates;
  in.mbs_rates = state_.mbs_rates;
  in.input_bits = state_.input_bits;
  in.remaining_cycles = state_.remaining_cycles;
  in.deadline_s = state_.deadline_s;
  in.capacities = capacities;
  return in;
}

std::vector<double> Environment::apply_coverage_mask(std::span<const double> raw) const {
  const int n = device_count(), m = sbs_count();
  if (static_cast<int>(raw.size()) != raw_action_length(n, m))
    throw std::invalid_argument("apply_coverage_mask: raw vector has wrong length");
  std::vector<double> out(raw.begin(), raw.end());
  // A device cannot transmit to an SBS whose coverage it is outside of, so
  // those preferences are masked before normalization.
  for (int i = 0; i < n; ++i)
    for (int j = 1; j <= m; ++j)
      if (!(topo_.distance(i, j) < topo_.stations[j].coverage_radius_m))
        out[n + static_cast<std::size_t>(i) * m + (j - 1)] = 0.0;
  return out;
}

RefinedAction Environment::refine_raw(std::span<const double> raw) const {
  std::vector<double> caps = allocatable_capacities();
  std::vector<double> masked = apply_coverage_mask(raw);
  EnvAction action = interpret_action(masked, device_count(), sbs_count(), caps);
  return refine(action, refine_inputs(caps));
}

Environment::StepResult Environment::step(const RefinedAction& a) {
  if (done_) throw std::logic_error("Environment::step: episode already finished");
  const int n = device_count(), m = sbs_count();
  if (a.n != n || a.m != m)
    throw std::invalid_argument("Environment::step: action shape mismatch");

  // reject anything the refinement stage would not have produced
  std::vector<double> caps = allocatable_capacities();
  std::vector<double> load(m + 1, 0.0);
  for (int i = 0; i < n; ++i) {
    const OffloadDecision& d = a.decisions[i];
    if (d.mode == OffloadDecision::Mode::Sbs && (d.sbs_id < 1 || d.sbs_id > m))
      throw std::invalid_argument("Environment::step: decision names unknown SBS");
    double f = a.alloc_of(i);
    if (f < 0.0) throw std::invalid_argument("Environment::step: negative allocation");
    if (d.mode != OffloadDecision::Mode::Local) load[d.station()] += f;
  }
  for (int st = 0; st <= m; ++st)
    if (load[st] > caps[st] * (1.0 + 1e-9))
      throw std::invalid_argument("Environment::step: allocations exceed station capacity");

  SlotEffect eff = apply_slot(state_, a, topo_, cfg_, breached_, doomed_);

  for (int i = 0; i < n; ++i) {
    bool unfinished = eff.next_cycles[i] > 0.0;
    if (unfinished && !doomed_[i] &&
        !task_completable(eff.next_bits[i], eff.next_cycles[i], eff.next_deadline[i],
                          topo_.devices[i].local_compute, i, state_, topo_))
      doomed_[i] = 1;
  }

  state_.input_bits = std::move(eff.next_bits);
  state_.remaining_cycles = std::move(eff.next_cycles);
  state_.deadline_s = std::move(eff.next_deadline);

  // station capacities shrink by what this slot's action reserved
  std::vector<double> base = cfg_.capacity_mode == EpisodeConfig::CapacityMode::FreshEachSlot
                                 ? initial_capacity_
                                 : state_.available_compute;
  for (int st = 0; st <= m; ++st)
    state_.available_compute[st] = std::max(0.0, base[st] - load[st]);

  for (int i = 0; i < n; ++i) {
    if (state_.remaining_cycles[i] > 0.0 && state_.deadline_s[i] <= kTimeTol)
      breached_[i] = 1;
  }

  steps_ += 1;
  bool done = eff.all_done || steps_ >= cfg_.max_steps;

  double reward = -eff.energy_j;
  if (cfg_.penalty_mode == EpisodeConfig::PenaltyMode::PerTaskDoom) {
    reward -= penalty_ * eff.new_dooms;
  } else if (cfg_.penalty_mode == EpisodeConfig::PenaltyMode::FirstBreachSlot) {
    if (eff.new_breaches > 0) reward -= penalty_;
  } else if (done) {
    bool any_unfinished = false;
    for (int i = 0; i < n; ++i)
      if (state_.remaining_cycles[i] > 0.0) any_unfinished = true;
    if (any_unfinished) reward -= penalty_;
  }

  refresh_rates(&a);
  done_ = done;

  StepResult res;
  res.reward = reward;
  res.done = done;
  res.energy_j = eff.energy_j;
  res.new_breaches = eff.new_breaches;
  res.new_dooms = eff.new_dooms;
  return res;
}

void Environment::set_bandwidths(double mbs_hz, double sbs_hz) {
  chan_.mbs_bandwidth_hz = mbs_hz;
  chan_.sbs_bandwidth_hz = sbs_hz;
  topo_.stations[0].bandwidth_hz = mbs_hz;
  for (int j = 1; j < topo_.station_count(); ++j) topo_.stations[j].bandwidth_hz = sbs_hz;
}

}  // namespace offload
