#pragma once

#include <span>
#include <vector>

#include "offload/types.hpp"

namespace offload {

/// Raw-action layout: x (N), y (N*M row-major), z (N), f_sbs (N*M), f_mbs (N).
inline int raw_action_length(int n_devices, int m_sbs) {
  return 3 * n_devices + 2 * n_devices * m_sbs;
}

/// Decoded agent action. x/y/z are fractional preferences in [0,1] until
/// refinement makes them one-hot; the allocation blocks are already scaled
/// from [0,1] to cycles/s by the owning station's total capacity.
struct EnvAction {
  int n = 0, m = 0;
  std::vector<double> x;          // N
  std::vector<double> y;          // N x M
  std::vector<double> z;          // N
  std::vector<double> sbs_alloc;  // N x M, cycles/s
  std::vector<double> mbs_alloc;  // N, cycles/s
};

/// Slices a raw [0,1] vector into an EnvAction. `capacities` is station-major
/// (MBS first) with M+1 entries. Throws on length mismatch.
EnvAction interpret_action(std::span<const double> raw, int n_devices, int m_sbs,
                           std::span<const double> capacities);

/// A refined action: one binary mode per device plus capacity-respecting
/// allocations (nonzero only at each offloader's chosen station).
struct RefinedAction {
  int n = 0, m = 0;
  std::vector<OffloadDecision> decisions;  // N
  std::vector<double> sbs_alloc;           // N x M, cycles/s
  std::vector<double> mbs_alloc;           // N, cycles/s

  double alloc_of(int device) const {
    const OffloadDecision& d = decisions[device];
    if (d.mode == OffloadDecision::Mode::Sbs)
      return sbs_alloc[static_cast<std::size_t>(device) * m + (d.sbs_id - 1)];
    if (d.mode == OffloadDecision::Mode::Mbs) return mbs_alloc[device];
    return 0.0;
  }
};

}  // namespace offload
