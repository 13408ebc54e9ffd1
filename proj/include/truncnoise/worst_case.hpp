#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "truncnoise/baselines.hpp"
#include "truncnoise/noise.hpp"

namespace truncnoise {

enum class ScenarioKind { sensitivity, subsampled };

struct PairLabel {
  ScenarioKind kind = ScenarioKind::sensitivity;
  double sensitivity = 0.0;  // sensitivity scenario: query deviation s
  double q = 0.0;            // subsampled scenario: sampling probability
  double clip = 0.0;         // subsampled scenario: clipping distance C
};

/// Two aligned output distributions on a shared extended support. Materialized
/// arrays (rather than pmf+shift views) keep the structural zeros exact for
/// every consumer.
struct WorstCasePair {
  std::vector<double> support;
  std::vector<double> a;
  std::vector<double> b;
  PairLabel label;
  long shift_cells = 0;
  double step = 0.0;
  // Set when the source pmf failed the symmetric+monotone hypotheses under
  // which the worst-case reduction is proven.
  bool structure_warning = false;
};

namespace detail {

inline std::vector<double> extended_support(const NoisePmf& pmf, long k) {
  std::vector<double> s = pmf.points();
  s.reserve(s.size() + static_cast<std::size_t>(k));
  for (long j = 1; j <= k; ++j)
    s.push_back(pmf.points().back() + static_cast<double>(j) * pmf.step());
  return s;
}

inline bool passes_structure(const NoisePmf& pmf) {
  const auto rep = check_structure(pmf, 1e-12);
  return rep.is_symmetric && rep.is_monotone_from_center;
}

}  // namespace detail

/// A = p on the support extended by k = s/nu cells, B = p shifted right by k.
/// A gains k trailing structural zeros, B k leading ones.
inline WorstCasePair sensitivity_pair(const NoisePmf& pmf, double s) {
  if (!(s > 0.0)) throw std::invalid_argument("sensitivity_pair: s must be > 0");
  const long k = detail::steps_for_shift(s, pmf.step(), "sensitivity_pair: s");
  const std::size_t n = pmf.size();
  WorstCasePair pair;
  pair.support = detail::extended_support(pmf, k);
  pair.a.assign(n + static_cast<std::size_t>(k), 0.0);
  pair.b.assign(n + static_cast<std::size_t>(k), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    pair.a[i] = pmf.mass()[i];
    pair.b[i + static_cast<std::size_t>(k)] = pmf.mass()[i];
  }
  pair.label = {ScenarioKind::sensitivity, s, 0.0, 0.0};
  pair.shift_cells = k;
  pair.step = pmf.step();
  pair.structure_warning = !detail::passes_structure(pmf);
  return pair;
}

/// Sub-sampling pair: A = p, B = (1-q) p + q (p shifted right by C/nu cells).
inline WorstCasePair subsampled_pair(const NoisePmf& pmf, double q, double clip) {
  if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("subsampled_pair: q must lie in (0, 1)");
  const long k = detail::steps_for_shift(clip, pmf.step(), "subsampled_pair: C");
  const std::size_t n = pmf.size();
  WorstCasePair pair;
  pair.support = detail::extended_support(pmf, k);
  pair.a.assign(n + static_cast<std::size_t>(k), 0.0);
  pair.b.assign(n + static_cast<std::size_t>(k), 0.0);
  for (std::size_t i = 0; i < n; ++i) pair.a[i] = pmf.mass()[i];
  for (std::size_t i = 0; i < pair.b.size(); ++i) {
    const double own = i < n ? pmf.mass()[i] : 0.0;
    const double shifted =
        i >= static_cast<std::size_t>(k) && i - static_cast<std::size_t>(k) < n
            ? pmf.mass()[i - static_cast<std::size_t>(k)]
            : 0.0;
    if (own == 0.0 && shifted == 0.0) continue;  // structural zero stays exact
    pair.b[i] = (1.0 - q) * own + q * shifted;
  }
  pair.label = {ScenarioKind::subsampled, 0.0, q, clip};
  pair.shift_cells = k;
  pair.step = pmf.step();
  pair.structure_warning = !detail::passes_structure(pmf);
  return pair;
}

/// Exchanges the two distributions; an involution.
inline WorstCasePair swap_pair(WorstCasePair pair) {
  std::swap(pair.a, pair.b);
  return pair;
}

}  // namespace truncnoise
