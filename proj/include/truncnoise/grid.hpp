#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace truncnoise {

/// Equidistant discretization of [-r + nu + a, r + a] with 2N points,
/// x_i = i*nu - r + a for i in {1..2N}, nu = r/N. The small bias a keeps
/// the evaluation points away from exactly zero.
class GridSpec {
 public:
  GridSpec(double half_width, long half_points, double bias = 1e-5)
      : half_width_(half_width), half_points_(half_points), bias_(bias) {
    if (!(half_width > 0.0)) throw std::invalid_argument("GridSpec: half_width must be > 0");
    if (half_points < 2) throw std::invalid_argument("GridSpec: half_points must be >= 2");
  }

  double half_width() const { return half_width_; }
  long half_points() const { return half_points_; }
  double bias() const { return bias_; }
  long size() const { return 2 * half_points_; }
  double step() const { return half_width_ / static_cast<double>(half_points_); }

  double point(long i) const {  // i in [0, 2N)
    return static_cast<double>(i + 1) * step() - half_width_ + bias_;
  }

  std::vector<double> points() const {
    std::vector<double> xs(static_cast<std::size_t>(size()));
    for (long i = 0; i < size(); ++i) xs[static_cast<std::size_t>(i)] = point(i);
    return xs;
  }

  /// Center of index symmetry; mirrored indices (i, 2N-1-i) sit at equal
  /// distance from it. Equals a + nu/2 in grid coordinates.
  double center() const { return bias_ + 0.5 * step(); }

  bool operator==(const GridSpec& o) const {
    return half_width_ == o.half_width_ && half_points_ == o.half_points_ && bias_ == o.bias_;
  }

 private:
  double half_width_;
  long half_points_;
  double bias_;
};

inline GridSpec make_grid(double half_width, long half_points, double bias = 1e-5) {
  return GridSpec(half_width, half_points, bias);
}

}  // namespace truncnoise
