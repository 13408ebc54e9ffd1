#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "truncnoise/worst_case.hpp"

namespace truncnoise {

/// Geometry of the bucketized loss representation: 2h+1 finite buckets with
/// log-width ln(f) each, plus the infinity bucket handled separately.
struct BucketConfig {
  long half_count = 1;  // h
  double factor = 1.0001;

  BucketConfig() = default;
  BucketConfig(long h, double f) : half_count(h), factor(f) { validate(); }

  void validate() const {
    if (half_count < 1) throw std::invalid_argument("BucketConfig: half_count must be >= 1");
    if (!(factor - 1.0 >= 1e-12))
      throw std::invalid_argument("BucketConfig: factor must exceed 1");
  }

  /// Training configurations additionally require a fine factor; coarse
  /// factors are still valid for direct evaluation.
  void validate_for_training() const {
    validate();
    if (factor > 1.01)
      throw std::invalid_argument("BucketConfig: factor must be <= 1.01 for training");
  }

  double log_factor() const { return std::log(factor); }
};

/// Bucketized privacy-loss mass. finite[j + half_count] holds bucket j for
/// j in [-h, h]; bucket j spans losses in ((j-1) ln f, j ln f].
struct BucketedLoss {
  std::vector<double> finite;
  double inf_mass = 0.0;
  BucketConfig config;
  long compositions = 1;

  double& at(long j) { return finite[static_cast<std::size_t>(j + config.half_count)]; }
  double at(long j) const { return finite[static_cast<std::size_t>(j + config.half_count)]; }
  double total_mass() const { return inf_mass + stable_sum(finite); }
};

/// Largest finite |ln(A/B)| over the joint support; 0 when the joint support
/// is empty.
inline double max_abs_loss(const WorstCasePair& pair) {
  double worst = 0.0;
  for (std::size_t i = 0; i < pair.a.size(); ++i) {
    if (pair.a[i] == 0.0 || pair.b[i] == 0.0) continue;
    worst = std::max(worst, std::abs(std::log(pair.a[i]) - std::log(pair.b[i])));
  }
  return worst;
}

/// Direction A||B. Joint-support cells land in bucket ceil(L / ln f); losses
/// above h ln f join the distinguishing mass in the infinity bucket, losses
/// at or below -h ln f pool in bucket -h. Ratios exactly f^j stay in bucket j.
inline BucketedLoss bucketize(const WorstCasePair& pair, const BucketConfig& cfg) {
  cfg.validate();
  const long h = cfg.half_count;
  const double lnf = cfg.log_factor();
  BucketedLoss bl;
  bl.config = cfg;
  bl.compositions = 1;
  bl.finite.assign(static_cast<std::size_t>(2 * h + 1), 0.0);
  for (std::size_t i = 0; i < pair.a.size(); ++i) {
    const double a = pair.a[i];
    if (a == 0.0) continue;
    const double b = pair.b[i];
    if (b == 0.0) {
      bl.inf_mass += a;
      continue;
    }
    const double loss = std::log(a) - std::log(b);
    const double idx = std::ceil(loss / lnf);
    if (idx > static_cast<double>(h)) {
      bl.inf_mass += a;
    } else if (idx <= static_cast<double>(-h)) {
      bl.at(-h) += a;
    } else {
      bl.at(static_cast<long>(idx)) += a;
    }
  }
  return bl;
}

namespace detail {

// Pairwise bucket convolution with the clamped index rules: sums above h feed
// the infinity bucket, sums at or below -h pool in bucket -h, and the two
// infinity masses combine as complements.
inline BucketedLoss convolve(const BucketedLoss& x, const BucketedLoss& y) {
  const long h = x.config.half_count;
  BucketedLoss c;
  c.config = x.config;
  c.compositions = x.compositions + y.compositions;
  c.finite.assign(x.finite.size(), 0.0);
  c.inf_mass = x.inf_mass + y.inf_mass - x.inf_mass * y.inf_mass;
  for (long i = -h; i <= h; ++i) {
    const double xi = x.at(i);
    if (xi == 0.0) continue;
    for (long m = -h; m <= h; ++m) {
      const double prod = xi * y.at(m);
      if (prod == 0.0) continue;
      const long sum = i + m;
      if (sum > h)
        c.inf_mass += prod;
      else if (sum <= -h)
        c.at(-h) += prod;
      else
        c.at(sum) += prod;
    }
  }
  return c;
}

}  // namespace detail

/// n-fold composition by binary exponentiation over the pairwise convolution;
/// any n >= 1 is supported.
inline BucketedLoss compose(const BucketedLoss& bl, long n) {
  if (n < 1) throw std::invalid_argument("compose: n must be >= 1");
  if (bl.compositions != 1) throw std::invalid_argument("compose: input must be a single composition");
  BucketedLoss base = bl;
  BucketedLoss acc;
  bool have_acc = false;
  long e = n;
  while (e > 0) {
    if (e & 1) {
      acc = have_acc ? detail::convolve(acc, base) : base;
      have_acc = true;
    }
    e >>= 1;
    if (e > 0) base = detail::convolve(base, base);
  }
  acc.compositions = n;
  return acc;
}

/// ADP upper bound: inf mass plus the loss-weighted tail with weights
/// (1 - e^{eps - j ln f}) clamped to [0, 1].
inline double delta_adp(const BucketedLoss& bl, double eps) {
  if (!(eps >= 0.0)) throw std::invalid_argument("delta_adp: eps must be >= 0");
  const long h = bl.config.half_count;
  const double lnf = bl.config.log_factor();
  const double start_idx = std::ceil(eps / lnf);
  double delta = bl.inf_mass;
  if (start_idx > static_cast<double>(h)) return delta;
  const long start = std::max(static_cast<long>(start_idx), -h + 1);
  for (long j = start; j <= h; ++j) {
    const double w = std::clamp(1.0 - std::exp(eps - static_cast<double>(j) * lnf), 0.0, 1.0);
    delta += w * bl.at(j);
  }
  return delta;
}

/// PDP upper bound: the tail is included at full mass.
inline double delta_pdp(const BucketedLoss& bl, double eps) {
  if (!(eps >= 0.0)) throw std::invalid_argument("delta_pdp: eps must be >= 0");
  const long h = bl.config.half_count;
  const double lnf = bl.config.log_factor();
  const double start_idx = std::ceil(eps / lnf);
  double delta = bl.inf_mass;
  if (start_idx > static_cast<double>(h)) return delta;
  const long start = std::max(static_cast<long>(start_idx), -h + 1);
  for (long j = start; j <= h; ++j) delta += bl.at(j);
  return delta;
}

struct CurveRow {
  std::string accountant;
  long n = 1;
  double eps = 0.0;
  double delta_ab = 0.0;
  double delta_ba = 0.0;
  double delta = 0.0;  // max of the two directions
};

struct DeltaCurve {
  std::vector<CurveRow> rows;
};

/// Evaluates adp and pdp in both directions after n compositions.
inline DeltaCurve delta_curve(const WorstCasePair& pair, long n,
                              const std::vector<double>& eps_list, const BucketConfig& cfg) {
  const BucketedLoss ab = compose(bucketize(pair, cfg), n);
  const BucketedLoss ba = compose(bucketize(swap_pair(pair), cfg), n);
  DeltaCurve curve;
  for (double eps : eps_list) {
    const double a1 = delta_adp(ab, eps), a2 = delta_adp(ba, eps);
    curve.rows.push_back({"adp", n, eps, a1, a2, std::max(a1, a2)});
  }
  for (double eps : eps_list) {
    const double p1 = delta_pdp(ab, eps), p2 = delta_pdp(ba, eps);
    curve.rows.push_back({"pdp", n, eps, p1, p2, std::max(p1, p2)});
  }
  return curve;
}

/// High-resolution settings for reference curves: h = 12500 and f sized so
/// the finite buckets cover 1.5x the largest finite loss of the pair, within
/// the validity guard on f.
inline BucketConfig reference_config(const WorstCasePair& pair, long half_count = 12500) {
  // |ln(B/A)| = |ln(A/B)|, so one pass covers both directions.
  const double worst = max_abs_loss(pair);
  double f = std::exp(1.5 * worst / static_cast<double>(half_count));
  f = std::clamp(f, 1.0 + 1e-9, 1.01);
  return BucketConfig(half_count, f);
}

}  // namespace truncnoise
