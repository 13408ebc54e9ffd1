#pragma once

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "truncnoise/grid.hpp"
#include "truncnoise/noise.hpp"
#include "truncnoise/rng.hpp"

namespace truncnoise {

/// Stacked-sigmoid noise model. The squared base and amplitudes make the
/// left-half logits nondecreasing for any parameter values; mirroring and the
/// softmax normalization then give an exactly symmetric, strictly positive,
/// monotone pmf.
struct SigmoidStackParams {
  double base = 10.0;               // A
  std::vector<double> amplitudes;   // B_j, j = 0..K
  std::vector<double> centers;      // F_j, j = 0..K
  double slope = 500.0;             // C, fixed hyper-parameter (not trained)

  long stack_size() const { return static_cast<long>(amplitudes.size()) - 1; }

  /// Initialization contract: A = 10, B_j uniform in [0,1) from the seed,
  /// F_j equidistant over [-half_width, 0].
  static SigmoidStackParams init(long stack_size, double slope, double half_width,
                                 std::uint64_t seed) {
    if (stack_size < 1) throw std::invalid_argument("SigmoidStackParams: K must be >= 1");
    if (!(slope > 0.0)) throw std::invalid_argument("SigmoidStackParams: slope must be > 0");
    SigmoidStackParams p;
    p.base = 10.0;
    p.slope = slope;
    const std::size_t count = static_cast<std::size_t>(stack_size) + 1;
    p.amplitudes.resize(count);
    p.centers.resize(count);
    Rng rng(seed);
    for (auto& b : p.amplitudes) b = rng.uniform();
    for (std::size_t j = 0; j < count; ++j)
      p.centers[j] = -half_width + static_cast<double>(j) * half_width / static_cast<double>(stack_size);
    return p;
  }

  std::size_t trainable_count() const { return 1 + amplitudes.size() + centers.size(); }
};

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

namespace detail {

// Left-half pre-softmax weights S_i = A^2 + sum_j B_j^2 sigmoid(C (x_i - F_j)).
// The softmax of ln(S_i) is S_i / sum(S), computed directly: one rounding per
// element and division by a shared constant preserves the ordering exactly.
inline void stack_weights(const SigmoidStackParams& params, const GridSpec& grid,
                          std::vector<double>& s_out) {
  const long half = grid.half_points();
  const std::size_t terms = params.amplitudes.size();
  s_out.assign(static_cast<std::size_t>(half), 0.0);
  const double base2 = params.base * params.base;
  for (long i = 0; i < half; ++i) {
    const double x = grid.point(i);
    double acc = base2;
    for (std::size_t j = 0; j < terms; ++j) {
      const double amp = params.amplitudes[j];
      acc += amp * amp * sigmoid(params.slope * (x - params.centers[j]));
    }
    s_out[static_cast<std::size_t>(i)] = acc;
  }
}

}  // namespace detail

inline NoisePmf model_forward(const SigmoidStackParams& params, const GridSpec& grid) {
  std::vector<double> s;
  detail::stack_weights(params, grid, s);
  const double total = stable_sum(s);
  if (!(total > 0.0) || !std::isfinite(total))
    throw std::invalid_argument("model_forward: degenerate parameters (zero or non-finite mass)");
  const std::size_t n = static_cast<std::size_t>(grid.size());
  std::vector<double> p(n);
  const double denom = 2.0 * total;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double v = s[i] / denom;
    p[i] = v;
    p[n - 1 - i] = v;
  }
  return NoisePmf(grid, std::move(p), {{"generator", "sigmoid_stack"}});
}

}  // namespace truncnoise
