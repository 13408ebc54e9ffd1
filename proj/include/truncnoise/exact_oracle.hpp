#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "truncnoise/errors.hpp"
#include "truncnoise/worst_case.hpp"

namespace truncnoise {

/// Distribution of the privacy-loss random variable of one pair direction:
/// finite losses grouped by exact value plus the distinguishing mass. Events
/// with loss -infinity never occur under the numerator and are omitted.
struct LossDistribution {
  std::vector<std::pair<double, double>> finite;  // (loss, mass), strictly increasing
  double inf_mass = 0.0;
};

/// Direction A||B: outputs with B = 0 feed the distinguishing mass, the rest
/// accumulate at ln(A/B). Losses are grouped by exact float equality.
inline LossDistribution loss_distribution(const WorstCasePair& pair) {
  std::map<double, double> grouped;
  LossDistribution ld;
  for (std::size_t i = 0; i < pair.a.size(); ++i) {
    const double a = pair.a[i];
    if (a == 0.0) continue;
    const double b = pair.b[i];
    if (b == 0.0) {
      ld.inf_mass += a;
      continue;
    }
    const double ratio = a / b;
    const double loss = std::isfinite(ratio) ? std::log(ratio) : std::log(a) - std::log(b);
    grouped[loss] += a;
  }
  ld.finite.assign(grouped.begin(), grouped.end());
  return ld;
}

/// Tight discrete delta for direction A||B: sum over outputs of
/// max(0, A(o) - e^eps B(o)). Negative eps is allowed for curve plotting.
inline double exact_delta(const WorstCasePair& pair, double eps) {
  const double mult = std::exp(eps);
  double delta = 0.0;
  for (std::size_t i = 0; i < pair.a.size(); ++i) {
    const double a = pair.a[i];
    if (a == 0.0) continue;
    const double b = pair.b[i];
    const double term = b == 0.0 ? a : a - mult * b;
    if (term > 0.0) delta += term;
  }
  return delta;
}

/// ADP and PDP deltas read off a loss distribution.
struct DeltaPair {
  double adp = 0.0;
  double pdp = 0.0;
};

inline DeltaPair delta_from_loss(const LossDistribution& ld, double eps) {
  DeltaPair d{ld.inf_mass, ld.inf_mass};
  for (const auto& [loss, mass] : ld.finite) {
    if (loss <= eps) continue;
    d.adp += (1.0 - std::exp(eps - loss)) * mass;
    d.pdp += mass;
  }
  return d;
}

inline double exact_pdp_delta(const WorstCasePair& pair, double eps) {
  return delta_from_loss(loss_distribution(pair), eps).pdp;
}

/// n-fold self-convolution: finite losses add, masses multiply, groups form by
/// exact sums; the distinguishing mass composes as the complement product.
/// Desk-scale only: refuses to accumulate more than `term_budget` products.
inline LossDistribution exact_compose(const LossDistribution& ld, long n,
                                      std::size_t term_budget = 10'000'000) {
  if (n < 1) throw std::invalid_argument("exact_compose: n must be >= 1");
  LossDistribution out = ld;
  std::size_t used = 0;
  for (long round = 1; round < n; ++round) {
    used += out.finite.size() * ld.finite.size();
    if (used > term_budget)
      throw resource_limit_error(
          "exact_compose: term budget of " + std::to_string(term_budget) +
              " accumulated products exceeded at composition " + std::to_string(round + 1),
          term_budget);
    std::map<double, double> grouped;
    for (const auto& [l1, m1] : out.finite)
      for (const auto& [l2, m2] : ld.finite) grouped[l1 + l2] += m1 * m2;
    out.inf_mass = out.inf_mass + ld.inf_mass - out.inf_mass * ld.inf_mass;
    out.finite.assign(grouped.begin(), grouped.end());
  }
  return out;
}

struct ShiftInvarianceReport {
  bool applicable = false;  // hypotheses (symmetric + monotone) met
  bool passed = false;
  double delta_at_s = 0.0;
  double max_delta = 0.0;
  double argmax_shift = 0.0;
};

/// Sweeps every smaller grid-multiple shift s' <= s and verifies that the
/// exact delta at s dominates; the reduction to the maximal shift is only
/// proven for symmetric, center-monotone noise, so other inputs come back
/// marked not-applicable.
inline ShiftInvarianceReport shift_invariance_check(const NoisePmf& pmf, double s, double eps) {
  ShiftInvarianceReport rep;
  const auto structure = check_structure(pmf, 1e-12);
  if (!structure.is_symmetric || !structure.is_monotone_from_center) return rep;
  rep.applicable = true;
  const long k = detail::steps_for_shift(s, pmf.step(), "shift_invariance_check: s");
  rep.delta_at_s = exact_delta(sensitivity_pair(pmf, static_cast<double>(k) * pmf.step()), eps);
  rep.max_delta = rep.delta_at_s;
  rep.argmax_shift = static_cast<double>(k) * pmf.step();
  rep.passed = true;
  for (long j = 1; j < k; ++j) {
    const double shift = static_cast<double>(j) * pmf.step();
    const double delta = exact_delta(sensitivity_pair(pmf, shift), eps);
    if (delta > rep.max_delta) {
      rep.max_delta = delta;
      rep.argmax_shift = shift;
    }
    if (delta > rep.delta_at_s + 1e-12) rep.passed = false;
  }
  return rep;
}

}  // namespace truncnoise
