#pragma once

#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <vector>

#include "truncnoise/noise.hpp"

namespace truncnoise {

namespace detail {

// Distance of cell i from the symmetry center, in exact half-step units.
// Even supports give odd integers (1, 3, ...), odd supports even ones
// (0, 2, ...); mirrored indices share the same value, which is what makes
// every baseline bit-exactly symmetric.
inline long half_step_offset(std::size_t i, std::size_t n) {
  return std::labs(2 * static_cast<long>(i) - (static_cast<long>(n) - 1));
}

inline NoisePmf normalized_from_weights(const GridSpec& grid, std::vector<double> w,
                                        std::map<std::string, std::string> meta) {
  const double total = stable_sum(w);
  if (!(total > 0.0))
    throw std::invalid_argument("baseline: all weights underflowed to zero");
  for (double& x : w) x /= total;
  return NoisePmf(grid, std::move(w), std::move(meta));
}

/// Rounds shift/sensitivity to a whole number of grid steps; rejects values
/// that are not grid multiples.
inline long steps_for_shift(double shift, double step, const char* what) {
  const double ratio = shift / step;
  const double rounded = std::round(ratio);
  if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, std::abs(ratio)))
    throw std::invalid_argument(std::string(what) + " must be a positive integer multiple of the grid step");
  return static_cast<long>(rounded);
}

}  // namespace detail

/// Gaussian restricted to the grid, normalized by the discrete sum. Weights
/// are computed relative to the innermost cell so extreme sigmas cannot
/// underflow the whole array.
inline NoisePmf truncated_gaussian_pmf(const GridSpec& grid, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("truncated_gaussian_pmf: sigma must be > 0");
  const std::size_t n = static_cast<std::size_t>(grid.size());
  const double half = 0.5 * grid.step();
  std::vector<double> w(n);
  const double inv = 1.0 / (2.0 * sigma * sigma);
  const long m0 = detail::half_step_offset(n / 2, n);
  const double d0 = static_cast<double>(m0) * half;
  for (std::size_t i = 0; i < n / 2; ++i) {
    const double d = static_cast<double>(detail::half_step_offset(i, n)) * half;
    const double weight = std::exp(-(d * d - d0 * d0) * inv);
    w[i] = weight;
    w[n - 1 - i] = weight;
  }
  return detail::normalized_from_weights(
      grid, std::move(w),
      {{"generator", "truncated_gaussian"}, {"sigma", std::to_string(sigma)}});
}

/// L1-optimal inner-step fraction for the staircase construction.
inline double staircase_default_gamma(double eps) { return 1.0 / (1.0 + std::exp(eps / 2.0)); }

/// Staircase density evaluated on the grid: period `sensitivity`, amplitude
/// proportional to e^{-k*eps} on the k-th period outward, dropping by e^{-eps}
/// at offset gamma*sensitivity inside each period; truncated at the grid ends
/// and renormalized. Classification runs on integer half-step offsets, so
/// the p(x)/p(x+s) = e^{eps} interior ratios are exact.
inline NoisePmf staircase_pmf(const GridSpec& grid, double eps, double sensitivity,
                              double gamma) {
  if (!(eps > 0.0)) throw std::invalid_argument("staircase_pmf: eps must be > 0");
  if (!(gamma > 0.0 && gamma < 1.0))
    throw std::invalid_argument("staircase_pmf: gamma must lie in (0, 1)");
  const long ks = detail::steps_for_shift(sensitivity, grid.step(), "staircase_pmf: sensitivity");
  const std::size_t n = static_cast<std::size_t>(grid.size());
  const long period = 2 * ks;  // half-step units
  const double inner = gamma * static_cast<double>(period);
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n / 2; ++i) {
    const long m = detail::half_step_offset(i, n);
    const long k = m / period;
    const long q = m % period;
    const long level = k + (static_cast<double>(q) >= inner ? 1 : 0);
    const double weight = std::exp(-eps * static_cast<double>(level));
    w[i] = weight;
    w[n - 1 - i] = weight;
  }
  return detail::normalized_from_weights(
      grid, std::move(w),
      {{"generator", "staircase"},
       {"eps", std::to_string(eps)},
       {"sensitivity", std::to_string(sensitivity)},
       {"gamma", std::to_string(gamma)}});
}

inline NoisePmf staircase_pmf(const GridSpec& grid, double eps, double sensitivity) {
  return staircase_pmf(grid, eps, sensitivity, staircase_default_gamma(eps));
}

}  // namespace truncnoise
