#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "truncnoise/noise.hpp"
#include "truncnoise/rng.hpp"

namespace truncnoise {

namespace detail {

// Cumulative masses for inverse-CDF cell selection.
inline std::vector<double> cumulative(const std::vector<double>& mass) {
  std::vector<double> cdf(mass.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < mass.size(); ++i) {
    acc += mass[i];
    cdf[i] = acc;
  }
  cdf.back() = std::max(cdf.back(), 1.0);
  return cdf;
}

inline std::size_t pick_cell(const std::vector<double>& cdf, double u) {
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  return static_cast<std::size_t>(std::min<std::ptrdiff_t>(
      it - cdf.begin(), static_cast<std::ptrdiff_t>(cdf.size()) - 1));
}

}  // namespace detail

/// Draws `count` noise values: cell i is selected with probability p_i, then
/// the value is uniform on [x_i - nu/2, x_i + nu/2). Grid-backed pmfs clip the
/// cells to the grid domain [-r + a, r + a], which shortens only the topmost
/// cell. Deterministic given the seed.
inline std::vector<double> sample_noise(const NoisePmf& pmf, std::uint64_t seed, long count) {
  if (count < 0) throw std::invalid_argument("sample_noise: count must be >= 0");
  const auto& xs = pmf.points();
  const double half = 0.5 * pmf.step();
  double dom_lo = xs.front() - half;
  double dom_hi = xs.back() + half;
  if (pmf.has_grid()) {
    dom_lo = -pmf.grid().half_width() + pmf.grid().bias();
    dom_hi = pmf.grid().half_width() + pmf.grid().bias();
  }
  const auto cdf = detail::cumulative(pmf.mass());
  Rng rng(seed);
  std::vector<double> out(static_cast<std::size_t>(count));
  for (auto& v : out) {
    const std::size_t i = detail::pick_cell(cdf, rng.uniform());
    const double lo = std::max(xs[i] - half, dom_lo);
    const double hi = std::min(xs[i] + half, dom_hi);
    v = rng.uniform(lo, hi);
  }
  return out;
}

/// Draws `count` d-dimensional vectors: an isotropic direction (normalized
/// standard normal draws) scaled by |noise| radii drawn from the pmf.
inline std::vector<std::vector<double>> sample_radial(const NoisePmf& pmf, long dim,
                                                      std::uint64_t seed, long count = 1) {
  if (dim < 1) throw std::invalid_argument("sample_radial: dim must be >= 1");
  if (count < 0) throw std::invalid_argument("sample_radial: count must be >= 0");
  const auto& xs = pmf.points();
  const double half = 0.5 * pmf.step();
  double dom_lo = xs.front() - half;
  double dom_hi = xs.back() + half;
  if (pmf.has_grid()) {
    dom_lo = -pmf.grid().half_width() + pmf.grid().bias();
    dom_hi = pmf.grid().half_width() + pmf.grid().bias();
  }
  const auto cdf = detail::cumulative(pmf.mass());
  Rng rng(seed);
  std::vector<std::vector<double>> out(static_cast<std::size_t>(count));
  for (auto& vec : out) {
    vec.resize(static_cast<std::size_t>(dim));
    double norm2 = 0.0;
    do {
      norm2 = 0.0;
      for (auto& c : vec) {
        c = rng.normal();
        norm2 += c * c;
      }
    } while (norm2 == 0.0);
    const std::size_t i = detail::pick_cell(cdf, rng.uniform());
    const double lo = std::max(xs[i] - half, dom_lo);
    const double hi = std::min(xs[i] + half, dom_hi);
    const double radius = std::abs(rng.uniform(lo, hi));
    const double scale = radius / std::sqrt(norm2);
    for (auto& c : vec) c *= scale;
  }
  return out;
}

}  // namespace truncnoise
