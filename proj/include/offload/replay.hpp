#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "offload/rng.hpp"

namespace offload {

struct Transition {
  std::vector<double> state;
  std::vector<double> action;
  double reward = 0.0;
  std::vector<double> next_state;
  bool done = false;
};

/// Bounded FIFO experience store. When full, the oldest insertion is
/// overwritten first.
class ReplayMemory {
 public:
  explicit ReplayMemory(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("ReplayMemory: zero capacity");
  }

  void push(Transition t) {
    if (buffer_.size() < capacity_) {
      buffer_.push_back(std::move(t));
    } else {
      buffer_[head_] = std::move(t);
      head_ = (head_ + 1) % capacity_;
    }
    inserted_ += 1;
  }

  std::size_t size() const { return buffer_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::uint64_t inserted() const { return inserted_; }

  /// k-th oldest stored transition (0 = oldest).
  const Transition& oldest(std::size_t k) const {
    if (k >= buffer_.size()) throw std::out_of_range("ReplayMemory::oldest");
    return buffer_[(head_ + k) % buffer_.size()];
  }

  /// Uniform sample of `batch` distinct transitions, or nullopt while the
  /// memory holds fewer than `batch` (training is skipped until then).
  std::optional<std::vector<const Transition*>> sample(std::size_t batch,
                                                       RngStream& rng) const {
    const std::size_t n = buffer_.size();
    if (n < batch) return std::nullopt;
    std::vector<const Transition*> out;
    out.reserve(batch);
    if (n < 2 * batch) {
      // dense case: partial Fisher-Yates over the whole index range
      std::vector<std::size_t> idx(n);
      for (std::size_t i = 0; i < n; ++i) idx[i] = i;
      for (std::size_t k = 0; k < batch; ++k) {
        std::size_t pick = k + rng.uniform_index(n - k);
        std::swap(idx[k], idx[pick]);
        out.push_back(&buffer_[idx[k]]);
      }
    } else {
      // sparse case: rejection sampling, O(batch) regardless of size
      std::vector<std::size_t> chosen;
      chosen.reserve(batch);
      while (chosen.size() < batch) {
        std::size_t pick = rng.uniform_index(n);
        bool dup = false;
        for (std::size_t c : chosen) dup |= c == pick;
        if (!dup) {
          chosen.push_back(pick);
          out.push_back(&buffer_[pick]);
        }
      }
    }
    return out;
  }

 private:
  std::size_t capacity_;
  std::vector<Transition> buffer_;
  std::size_t head_ = 0;  // next eviction target once full
  std::uint64_t inserted_ = 0;
};

}  // namespace offload
