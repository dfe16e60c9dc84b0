#pragma once

#include <stdexcept>
#include <vector>

#include "offload/rng.hpp"

namespace offload {

/// Ornstein-Uhlenbeck exploration noise, one mean-reverting component per
/// action dimension: x <- x + theta*(mu - x) + sigma*g.
class OuProcess {
 public:
  OuProcess(int dim, double theta, double sigma, double mu, std::uint64_t seed)
      : theta_(theta), sigma_(sigma), mu_(mu), value_(dim, mu), rng_(seed) {
    if (theta <= 0.0) throw std::invalid_argument("OuProcess: theta must be positive");
    if (sigma < 0.0) throw std::invalid_argument("OuProcess: sigma must be non-negative");
  }

  void reset() { std::fill(value_.begin(), value_.end(), mu_); }
  void set_value(const std::vector<double>& v) {
    if (v.size() != value_.size()) throw std::invalid_argument("OuProcess: bad value size");
    value_ = v;
  }
  void set_sigma(double sigma) {
    if (sigma < 0.0) throw std::invalid_argument("OuProcess: sigma must be non-negative");
    sigma_ = sigma;
  }
  double sigma() const { return sigma_; }

  const std::vector<double>& step() {
    for (double& x : value_) x += theta_ * (mu_ - x) + sigma_ * rng_.normal();
    return value_;
  }

  const std::vector<double>& value() const { return value_; }

 private:
  double theta_;
  double sigma_;
  double mu_;
  std::vector<double> value_;
  RngStream rng_;
};

}  // namespace offload
