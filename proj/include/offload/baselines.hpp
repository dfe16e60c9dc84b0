#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "offload/compmodel.hpp"
#include "offload/netmodel.hpp"
#include "offload/rng.hpp"

namespace offload {

/// Benchmark policy: every device runs its own task at full device rate.
/// Feasibility is reported by check_feasible, never enforced.
Assignment local_policy(std::span<const TaskSpec> tasks, const Topology& topo);

enum class BandwidthShare {
  EqualSplit,  // simultaneous MBS uploaders each get bandwidth/N
  Full,        // every uploader sees the full MBS bandwidth
};

/// Benchmark policy: every task goes to the MBS; its capacity is divided
/// proportionally to required cycles.
Assignment full_offload_policy(std::span<const TaskSpec> tasks, const Topology& topo,
                               const ChannelParams& chan, BandwidthShare share);

/// Uniform raw action vector; refinement happens downstream.
std::vector<double> random_policy(int raw_length, RngStream& rng);

struct OracleLimits {
  std::uint64_t max_enumerations = 1000000;
};

struct OracleResult {
  bool feasible = false;
  double energy_j = 0.0;
  Assignment best;
  std::uint64_t enumerated = 0;
};

struct EnumerationCapExceeded : std::runtime_error {
  std::uint64_t required;
  explicit EnumerationCapExceeded(std::uint64_t req)
      : std::runtime_error("exhaustive_oracle: instance needs " + std::to_string(req) +
                           " enumerations, above the configured cap"),
        required(req) {}
};

/// Exact minimum of the static offloading problem on small instances:
/// enumerates every mode assignment, gives each offloader its minimal
/// deadline-feasible allocation (energy does not depend on the allocation),
/// and keeps the cheapest assignment whose station sums fit. Rates are an
/// input; time is continuous, so the result lower-bounds anything the
/// slotted environment can do.
OracleResult exhaustive_oracle(std::span<const TaskSpec> tasks, const Topology& topo,
                               const RateMatrix& rates, const OracleLimits& limits,
                               ExecMode mode);

}  // namespace offload
