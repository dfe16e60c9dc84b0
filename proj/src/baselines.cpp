#include "offload/baselines.hpp"

#include <cmath>
#include <limits>

namespace offload {

Assignment local_policy(std::span<const TaskSpec> tasks, const Topology& topo) {
  (void)topo;
  Assignment a;
  a.decisions.assign(tasks.size(), OffloadDecision{});
  a.alloc.assign(tasks.size(), 0.0);
  a.rate_bps.assign(tasks.size(), 0.0);
  return a;
}

Assignment full_offload_policy(std::span<const TaskSpec> tasks, const Topology& topo,
                               const ChannelParams& chan, BandwidthShare share) {
  const int n = static_cast<int>(tasks.size());
  Assignment a;
  a.decisions.assign(n, OffloadDecision{OffloadDecision::Mode::Mbs, 0});
  a.alloc.assign(n, 0.0);
  a.rate_bps.assign(n, 0.0);
  if (n == 0) return a;

  double total_cycles = 0.0;
  for (const TaskSpec& t : tasks) total_cycles += t.required_cycles;
  double mbs_capacity = topo.stations[0].compute_capacity;

  for (int i = 0; i < n; ++i) {
    double rate = uplink_rate_mbs(i, topo, chan);
    // a congested uplink: simultaneous uploaders split the MBS bandwidth
    if (share == BandwidthShare::EqualSplit) rate /= n;
    a.rate_bps[i] = rate;
    a.alloc[i] = total_cycles > 0.0
                     ? mbs_capacity * tasks[i].required_cycles / total_cycles
                     : 0.0;
  }
  return a;
}

std::vector<double> random_policy(int raw_length, RngStream& rng) {
  std::vector<double> out(raw_length);
  for (double& v : out) v = rng.uniform();
  return out;
}

namespace {

struct ModeOption {
  bool feasible = false;
  double energy = std::numeric_limits<double>::infinity();
  double alloc = 0.0;   // minimal feasible allocation (0 for local)
  double rate = 0.0;    // 0 for local
  int station = -1;     // -1 for local
};

struct BestCandidate {
  double energy = std::numeric_limits<double>::infinity();
  std::uint64_t code = 0;
  bool found = false;
};

}  // namespace

OracleResult exhaustive_oracle(std::span<const TaskSpec> tasks, const Topology& topo,
                               const RateMatrix& rates, const OracleLimits& limits,
                               ExecMode mode) {
  const int n = static_cast<int>(tasks.size());
  const int m = topo.sbs_count();
  const int modes = m + 2;  // local, each SBS, MBS

  std::uint64_t total = 1;
  for (int i = 0; i < n; ++i) {
    if (total > limits.max_enumerations / modes) {
      // saturating estimate of the true requirement for the diagnostic
      long double req = std::pow(static_cast<long double>(modes), n);
      throw EnumerationCapExceeded(static_cast<std::uint64_t>(
          std::min<long double>(req, 1e18L)));
    }
    total *= modes;
  }
  if (total > limits.max_enumerations) throw EnumerationCapExceeded(total);

  // per (device, mode) precomputation; energy never depends on the
  // allocation, so feasibility of the minimal allocation decides everything
  std::vector<ModeOption> option(static_cast<std::size_t>(n) * modes);
  for (int i = 0; i < n; ++i) {
    const Device& dev = topo.devices[i];
    double p_w = dev.transmit_power_mw * units::watts_per_milliwatt;
    for (int k = 0; k < modes; ++k) {
      ModeOption& o = option[static_cast<std::size_t>(i) * modes + k];
      if (k == 0) {
        o.feasible = local_delay(tasks[i], dev.local_compute) <= tasks[i].deadline_s;
        o.energy = local_energy(tasks[i], dev.local_compute, dev.switched_capacitance);
        o.station = -1;
      } else {
        int st = k <= m ? k : 0;
        double rate = k <= m ? rates.sbs_rate(i, k) : rates.mbs_rate(i);
        auto fmin = min_feasible_alloc(tasks[i], rate, tasks[i].deadline_s);
        auto energy = offload_energy(tasks[i], rate, p_w,
                                     topo.stations[st].energy_per_cycle);
        o.feasible = fmin.has_value() && energy.has_value();
        if (o.feasible) {
          o.alloc = *fmin;
          o.energy = *energy;
        }
        o.rate = rate;
        o.station = st;
      }
    }
  }

  std::vector<double> capacity(m + 1);
  for (int st = 0; st <= m; ++st) capacity[st] = topo.stations[st].compute_capacity;

  auto evaluate_code = [&](std::uint64_t code, BestCandidate& best,
                           std::vector<double>& load) {
    std::fill(load.begin(), load.end(), 0.0);
    double energy = 0.0;
    std::uint64_t rest = code;
    for (int i = 0; i < n; ++i) {
      int k = static_cast<int>(rest % modes);
      rest /= modes;
      const ModeOption& o = option[static_cast<std::size_t>(i) * modes + k];
      if (!o.feasible) return;
      energy += o.energy;
      if (o.station >= 0) load[o.station] += o.alloc;
    }
    for (int st = 0; st <= m; ++st)
      if (load[st] > capacity[st] * (1.0 + 1e-12)) return;
    if (!best.found || energy < best.energy) {
      best.energy = energy;
      best.code = code;
      best.found = true;
    }
  };

  // fixed chunk count, so results do not depend on the thread count; ties
  // resolve toward the lower code because chunks scan ascending and merge in
  // order with strict improvement
  constexpr int kChunks = 64;
  std::vector<BestCandidate> chunk_best(kChunks);

  auto run_chunk = [&](int c) {
    std::uint64_t lo = total * static_cast<std::uint64_t>(c) / kChunks;
    std::uint64_t hi = total * (static_cast<std::uint64_t>(c) + 1) / kChunks;
    std::vector<double> load(m + 1, 0.0);
    for (std::uint64_t code = lo; code < hi; ++code)
      evaluate_code(code, chunk_best[c], load);
  };

  if (mode == ExecMode::OpenMP) {
#pragma omp parallel for schedule(dynamic)
    for (int c = 0; c < kChunks; ++c) run_chunk(c);
  } else {
    for (int c = 0; c < kChunks; ++c) run_chunk(c);
  }

  BestCandidate best;
  for (int c = 0; c < kChunks; ++c) {
    if (chunk_best[c].found && (!best.found || chunk_best[c].energy < best.energy))
      best = chunk_best[c];
  }

  OracleResult res;
  res.enumerated = total;
  res.feasible = best.found;
  if (!best.found) return res;

  res.energy_j = best.energy;
  res.best.decisions.resize(n);
  res.best.alloc.assign(n, 0.0);
  res.best.rate_bps.assign(n, 0.0);
  std::uint64_t rest = best.code;
  for (int i = 0; i < n; ++i) {
    int k = static_cast<int>(rest % modes);
    rest /= modes;
    const ModeOption& o = option[static_cast<std::size_t>(i) * modes + k];
    OffloadDecision d;
    if (k == 0) {
      d.mode = OffloadDecision::Mode::Local;
    } else if (k <= m) {
      d.mode = OffloadDecision::Mode::Sbs;
      d.sbs_id = k;
    } else {
      d.mode = OffloadDecision::Mode::Mbs;
    }
    res.best.decisions[i] = d;
    res.best.alloc[i] = o.alloc;
    res.best.rate_bps[i] = o.rate;
  }
  return res;
}

}  // namespace offload
