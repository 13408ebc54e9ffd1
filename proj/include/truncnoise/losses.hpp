#pragma once

#include <cmath>
#include <stdexcept>

#include "truncnoise/noise.hpp"

namespace truncnoise {

/// Expected |x|^order penalty, reduced to its order-th root: order 1 is the
/// mean absolute deviation, order 2 the root mean square. Uses the literal
/// grid coordinates, bias included.
inline double utility_loss(const NoisePmf& pmf, long order) {
  if (order != 1 && order != 2) throw std::invalid_argument("utility_loss: order must be 1 or 2");
  const auto& xs = pmf.points();
  const auto& ps = pmf.mass();
  double acc = 0.0;
  if (order == 1) {
    for (std::size_t i = 0; i < ps.size(); ++i) acc += std::abs(xs[i]) * ps[i];
    return acc;
  }
  for (std::size_t i = 0; i < ps.size(); ++i) acc += xs[i] * xs[i] * ps[i];
  return std::sqrt(acc);
}

/// Exponential utility-weight decay w_t = max(w_start / 2^{t/gamma}, w_min);
/// disabling the decay pins the weight at w_start.
struct UtilityWeightSchedule {
  double start = 0.5;
  double halving_period = 2500.0;  // gamma, epochs per halving
  double floor = 1e-7;             // w_min
  bool decay = true;
};

inline double utility_weight(long epoch, const UtilityWeightSchedule& schedule) {
  if (epoch < 0) throw std::invalid_argument("utility_weight: epoch must be >= 0");
  if (!schedule.decay) return schedule.start;
  const double w =
      schedule.start * std::exp2(-static_cast<double>(epoch) / schedule.halving_period);
  return std::max(w, schedule.floor);
}

}  // namespace truncnoise
