#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "truncnoise/baselines.hpp"
#include "truncnoise/errors.hpp"
#include "truncnoise/train.hpp"

namespace truncnoise {

/// D_KL(base || other) over a shared support; zero base cells contribute
/// nothing, zero other cells under positive base mass give infinity.
inline double kl_divergence(const NoisePmf& base, const NoisePmf& other) {
  if (base.size() != other.size())
    throw std::invalid_argument("kl_divergence: supports differ in size");
  double acc = 0.0;
  for (std::size_t i = 0; i < base.size(); ++i) {
    const double p = base.mass()[i];
    if (p == 0.0) continue;
    const double q = other.mass()[i];
    if (q == 0.0) return std::numeric_limits<double>::infinity();
    acc += p * std::log(p / q);
  }
  return acc;
}

enum class BaselineFamily { gaussian, staircase };
enum class MatchTarget { delta, utility };

struct CompareResult {
  BaselineFamily family = BaselineFamily::gaussian;
  double parameter = 0.0;      // matched sigma (gaussian) or gamma (staircase)
  double matched_value = 0.0;  // delta or utility achieved by the baseline
  double target_value = 0.0;   // the generated noise's value
  double kl = 0.0;             // D_KL(baseline || generated)
  double generated_utility = 0.0;
  double baseline_utility = 0.0;
};

namespace detail {

// Bisection on a monotone scalar map over [lo, hi].
template <class F>
double bisect_monotone(F&& fn, double lo, double hi, double target, bool increasing,
                       int iters = 80) {
  for (int i = 0; i < iters; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double value = fn(mid);
    const bool go_up = increasing ? value < target : value > target;
    if (go_up)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

/// Finds the baseline parameter matching either the generated noise's
/// reference delta at (eps, n) or its utility, then reports the parameter and
/// the KL divergence from the matched baseline to the generated noise.
///
/// Delta matching bisects on the decreasing branch of the delta profile
/// (located by a coarse scan); utility matching uses plain bisection on the
/// monotone utility map.
inline CompareResult compare_to_baseline(const NoisePmf& generated, BaselineFamily family,
                                         MatchTarget target, const diff::Scenario& scenario,
                                         double eps, long n, long utility_order = 1,
                                         int scan_points = 64,
                                         long reference_half_count = 12500) {
  if (!generated.has_grid())
    throw std::invalid_argument("compare_to_baseline: generated noise must be grid-backed");
  const GridSpec grid = generated.grid();

  const auto build = [&](double parameter) {
    if (family == BaselineFamily::gaussian) return truncated_gaussian_pmf(grid, parameter);
    return staircase_pmf(grid, eps, scenario.shift, parameter);
  };
  double lo, hi;
  if (family == BaselineFamily::gaussian) {
    lo = grid.step() * 0.25;
    hi = grid.half_width() * 4.0;
  } else {
    lo = 1e-6;
    hi = 1.0 - 1e-6;
  }

  CompareResult result;
  result.family = family;
  result.generated_utility = utility_loss(generated, utility_order);

  if (target == MatchTarget::utility) {
    const double want = result.generated_utility;
    const auto fn = [&](double parameter) { return utility_loss(build(parameter), utility_order); };
    const double at_lo = fn(lo), at_hi = fn(hi);
    const bool increasing = at_hi > at_lo;
    const double lo_v = std::min(at_lo, at_hi), hi_v = std::max(at_lo, at_hi);
    if (want < lo_v || want > hi_v)
      throw bracket_error("compare: utility target " + std::to_string(want) +
                              " outside the searchable range",
                          lo, hi);
    result.parameter = detail::bisect_monotone(fn, lo, hi, want, increasing);
    result.matched_value = fn(result.parameter);
    result.target_value = want;
  } else {
    const double want = reference_delta(generated, scenario, n, eps, reference_half_count);
    const auto fn = [&](double parameter) {
      return reference_delta(build(parameter), scenario, n, eps, reference_half_count);
    };
    // Locate the decreasing branch with a logarithmic scan.
    std::vector<double> xs(static_cast<std::size_t>(scan_points));
    std::vector<double> ys(static_cast<std::size_t>(scan_points));
    const double llo = std::log(lo), lhi = std::log(hi);
    std::size_t best = 0;
    for (int i = 0; i < scan_points; ++i) {
      xs[static_cast<std::size_t>(i)] =
          std::exp(llo + (lhi - llo) * static_cast<double>(i) / (scan_points - 1));
      ys[static_cast<std::size_t>(i)] = fn(xs[static_cast<std::size_t>(i)]);
      if (ys[static_cast<std::size_t>(i)] < ys[best]) best = static_cast<std::size_t>(i);
    }
    if (want < ys[best] || want > ys[0])
      throw bracket_error("compare: delta target " + std::to_string(want) +
                              " not reachable on the decreasing branch [" +
                              std::to_string(ys[best]) + ", " + std::to_string(ys[0]) + "]",
                          xs[0], xs[best]);
    result.parameter = detail::bisect_monotone(fn, xs[0], xs[best], want, /*increasing=*/false);
    result.matched_value = fn(result.parameter);
    result.target_value = want;
  }
  const auto baseline = build(result.parameter);
  result.baseline_utility = utility_loss(baseline, utility_order);
  result.kl = kl_divergence(baseline, generated);
  return result;
}

}  // namespace truncnoise
