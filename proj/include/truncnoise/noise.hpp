#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "truncnoise/grid.hpp"

namespace truncnoise {

/// Neumaier-compensated sum; keeps normalization checks at machine accuracy
/// even for long mass arrays.
inline double stable_sum(const std::vector<double>& v) {
  double sum = 0.0, comp = 0.0;
  for (double x : v) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x))
      comp += (sum - t) + x;
    else
      comp += (x - t) + sum;
    sum = t;
  }
  return sum + comp;
}

/// Discrete probability mass function over an equidistant support.
/// Grid-backed instances (the canonical case) carry their GridSpec and can be
/// serialized; free-standing instances over explicit points exist for small
/// hand-built distributions.
class NoisePmf {
 public:
  NoisePmf(GridSpec grid, std::vector<double> mass,
           std::map<std::string, std::string> meta = {})
      : grid_(grid), points_(grid.points()), mass_(std::move(mass)), meta_(std::move(meta)) {
    if (static_cast<long>(mass_.size()) != grid.size())
      throw std::invalid_argument("NoisePmf: mass length must equal 2*half_points");
    step_ = grid.step();
    validate();
  }

  static NoisePmf from_points(std::vector<double> points, std::vector<double> mass,
                              std::map<std::string, std::string> meta = {}) {
    return NoisePmf(std::move(points), std::move(mass), std::move(meta));
  }

  const std::vector<double>& points() const { return points_; }
  const std::vector<double>& mass() const { return mass_; }
  double step() const { return step_; }
  std::size_t size() const { return mass_.size(); }
  bool has_grid() const { return grid_.has_value(); }
  const GridSpec& grid() const {
    if (!grid_) throw std::logic_error("NoisePmf: not grid-backed");
    return *grid_;
  }
  const std::map<std::string, std::string>& meta() const { return meta_; }
  std::map<std::string, std::string>& meta() { return meta_; }

  double total_mass() const { return stable_sum(mass_); }

  /// Re-checks the type invariants: nonnegative masses, sum within 1e-12 of 1.
  void validate() const {
    for (double m : mass_)
      if (!(m >= 0.0)) throw std::invalid_argument("NoisePmf: negative or NaN mass");
    const double total = total_mass();
    if (std::abs(total - 1.0) > 1e-12)
      throw std::invalid_argument("NoisePmf: mass sums to " + std::to_string(total) +
                                  " (deficit " + std::to_string(1.0 - total) + ")");
  }

 private:
  NoisePmf(std::vector<double> points, std::vector<double> mass,
           std::map<std::string, std::string> meta)
      : points_(std::move(points)), mass_(std::move(mass)), meta_(std::move(meta)) {
    if (points_.size() != mass_.size())
      throw std::invalid_argument("NoisePmf: points/mass length mismatch");
    if (points_.size() < 2) throw std::invalid_argument("NoisePmf: need at least 2 points");
    step_ = points_[1] - points_[0];
    if (!(step_ > 0.0)) throw std::invalid_argument("NoisePmf: points must be increasing");
    for (std::size_t i = 1; i + 1 < points_.size(); ++i) {
      const double d = points_[i + 1] - points_[i];
      const double scale = std::max(std::abs(points_[i + 1]), std::abs(points_[i]));
      if (std::abs(d - step_) > 8.0 * 2.220446049250313e-16 * std::max(scale, 1.0))
        throw std::invalid_argument("NoisePmf: points not equidistant");
    }
    validate();
  }

  std::optional<GridSpec> grid_;
  std::vector<double> points_;
  std::vector<double> mass_;
  double step_ = 0.0;
  std::map<std::string, std::string> meta_;
};

struct StructureReport {
  bool is_symmetric = false;
  double max_asymmetry = 0.0;
  bool is_monotone_from_center = false;
  double max_violation = 0.0;
  double mass_total = 0.0;
};

/// Symmetry pairs index i with n-1-i; monotonicity requires nondecreasing
/// masses on the left half (including the middle for odd sizes).
inline StructureReport check_structure(const NoisePmf& pmf, double tol = 0.0) {
  const auto& p = pmf.mass();
  const std::size_t n = p.size();
  StructureReport rep;
  for (std::size_t i = 0; i < n / 2; ++i)
    rep.max_asymmetry = std::max(rep.max_asymmetry, std::abs(p[i] - p[n - 1 - i]));
  rep.is_symmetric = rep.max_asymmetry <= tol;
  const std::size_t half = (n + 1) / 2;
  for (std::size_t i = 0; i + 1 < half; ++i)
    rep.max_violation = std::max(rep.max_violation, p[i] - p[i + 1]);
  rep.max_violation = std::max(rep.max_violation, 0.0);
  rep.is_monotone_from_center = rep.max_violation <= tol;
  rep.mass_total = pmf.total_mass();
  return rep;
}

}  // namespace truncnoise
