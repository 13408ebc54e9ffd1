#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "truncnoise/buckets.hpp"
#include "truncnoise/worst_case.hpp"

namespace truncnoise {

/// Mass of outputs possible under the numerator but impossible under the
/// denominator (direction A||B).
inline double distinguishing_mass(const WorstCasePair& pair) {
  double mass = 0.0;
  for (std::size_t i = 0; i < pair.a.size(); ++i)
    if (pair.a[i] > 0.0 && pair.b[i] == 0.0) mass += pair.a[i];
  return mass;
}

/// Log-moment divergence over the joint support,
/// Gamma_lambda(A||B) = log sum_{A,B != 0} A (A/B)^lambda,
/// accumulated as a log-sum-exp so large lambda cannot overflow.
inline double gamma_divergence(const WorstCasePair& pair, double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("gamma_divergence: lambda must be > 0");
  double peak = -std::numeric_limits<double>::infinity();
  std::vector<double> terms;
  terms.reserve(pair.a.size());
  for (std::size_t i = 0; i < pair.a.size(); ++i) {
    const double a = pair.a[i];
    const double b = pair.b[i];
    if (a == 0.0 || b == 0.0) continue;
    const double la = std::log(a);
    const double t = la + lambda * (la - std::log(b));
    terms.push_back(t);
    peak = std::max(peak, t);
  }
  if (terms.empty())
    throw std::domain_error("gamma_divergence: empty joint support (all mass distinguishing)");
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - peak);
  return peak + std::log(acc);
}

struct LambdaSearchConfig {
  double base = 0.01;     // smallest grid value
  int grid_count = 25;    // lambda_k = base * 2^k, k in [0, grid_count)
  int refine_iters = 80;  // golden-section refinement steps
};

namespace detail {

// Golden-section minimization of fn over [lo, hi]; fn assumed unimodal there.
template <class F>
double golden_min(F&& fn, double lo, double hi, int iters) {
  constexpr double invphi = 0.6180339887498949;
  double a = lo, b = hi;
  double x1 = b - invphi * (b - a);
  double x2 = a + invphi * (b - a);
  double f1 = fn(x1), f2 = fn(x2);
  for (int i = 0; i < iters; ++i) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - invphi * (b - a);
      f1 = fn(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + invphi * (b - a);
      f2 = fn(x2);
    }
  }
  return f1 <= f2 ? x1 : x2;
}

// Distinguishing mass after n compositions: 1 - (1 - b)^n, evaluated stably.
inline double composed_inf_mass(double b_inf, long n) {
  if (b_inf >= 1.0) return 1.0;
  return -std::expm1(static_cast<double>(n) * std::log1p(-b_inf));
}

}  // namespace detail

/// Extended-MA bound for direction A||B:
/// min over lambda of 1 - (1 - b_inf)^n + e^{n Gamma_lambda - lambda eps},
/// clamped to [0, 1]. The lambda search walks a logarithmic grid and refines
/// the bracketing interval by golden section.
inline double delta_ma(const WorstCasePair& pair, long n, double eps,
                       const LambdaSearchConfig& search = {}) {
  if (n < 1) throw std::invalid_argument("delta_ma: n must be >= 1");
  if (!(eps >= 0.0)) throw std::invalid_argument("delta_ma: eps must be >= 0");
  const double b_inf = distinguishing_mass(pair);
  const double composed = detail::composed_inf_mass(b_inf, n);
  if (b_inf >= 1.0) return 1.0;
  bool has_joint = false;
  for (std::size_t i = 0; i < pair.a.size() && !has_joint; ++i)
    has_joint = pair.a[i] > 0.0 && pair.b[i] > 0.0;
  // Empty joint support: the moment term vanishes (Gamma = -inf) and only
  // the composed distinguishing mass remains.
  if (!has_joint) return std::clamp(composed, 0.0, 1.0);
  const auto objective = [&](double lambda) {
    return static_cast<double>(n) * gamma_divergence(pair, lambda) - lambda * eps;
  };
  double best = std::numeric_limits<double>::infinity();
  int best_k = 0;
  std::vector<double> grid(static_cast<std::size_t>(search.grid_count));
  for (int k = 0; k < search.grid_count; ++k) {
    grid[static_cast<std::size_t>(k)] = search.base * std::ldexp(1.0, k);
    const double obj = objective(grid[static_cast<std::size_t>(k)]);
    if (obj < best) {
      best = obj;
      best_k = k;
    }
  }
  const double lo = grid[static_cast<std::size_t>(std::max(best_k - 1, 0))];
  const double hi = grid[static_cast<std::size_t>(std::min(best_k + 1, search.grid_count - 1))];
  if (lo < hi) {
    const double refined = detail::golden_min(objective, lo, hi, search.refine_iters);
    best = std::min(best, objective(refined));
  }
  const double tail = best > 700.0 ? std::numeric_limits<double>::infinity() : std::exp(best);
  return std::clamp(composed + tail, 0.0, 1.0);
}

struct MaDirectionalResult {
  double delta_ab = 0.0;
  double delta_ba = 0.0;
  double delta = 0.0;
  // True when the direction whose bound dominates changes across the lambda
  // grid; the theory assumes one direction dominates uniformly.
  bool direction_flip = false;
};

inline MaDirectionalResult delta_ma_both(const WorstCasePair& pair, long n, double eps,
                                         const LambdaSearchConfig& search = {}) {
  MaDirectionalResult res;
  const WorstCasePair swapped = swap_pair(pair);
  res.delta_ab = delta_ma(pair, n, eps, search);
  res.delta_ba = delta_ma(swapped, n, eps, search);
  res.delta = std::max(res.delta_ab, res.delta_ba);

  const double binf_ab = detail::composed_inf_mass(distinguishing_mass(pair), n);
  const double binf_ba = detail::composed_inf_mass(distinguishing_mass(swapped), n);
  bool any_ab = false, any_ba = false;
  for (int k = 0; k < search.grid_count; ++k) {
    const double lambda = search.base * std::ldexp(1.0, k);
    double d_ab = 1.0, d_ba = 1.0;
    try {
      const double o = static_cast<double>(n) * gamma_divergence(pair, lambda) - lambda * eps;
      d_ab = std::clamp(binf_ab + (o > 700.0 ? 1e300 : std::exp(o)), 0.0, 1.0);
    } catch (const std::domain_error&) {
    }
    try {
      const double o = static_cast<double>(n) * gamma_divergence(swapped, lambda) - lambda * eps;
      d_ba = std::clamp(binf_ba + (o > 700.0 ? 1e300 : std::exp(o)), 0.0, 1.0);
    } catch (const std::domain_error&) {
    }
    if (d_ab > d_ba) any_ab = true;
    if (d_ba > d_ab) any_ba = true;
  }
  res.direction_flip = any_ab && any_ba;
  return res;
}

/// MA rows in the shared curve format.
inline DeltaCurve ma_delta_curve(const WorstCasePair& pair, long n,
                                 const std::vector<double>& eps_list,
                                 const LambdaSearchConfig& search = {}) {
  DeltaCurve curve;
  for (double eps : eps_list) {
    const auto res = delta_ma_both(pair, n, eps, search);
    curve.rows.push_back({"ma", n, eps, res.delta_ab, res.delta_ba, res.delta});
  }
  return curve;
}

}  // namespace truncnoise
