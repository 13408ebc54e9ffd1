#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "truncnoise/buckets.hpp"
#include "truncnoise/diff.hpp"
#include "truncnoise/errors.hpp"
#include "truncnoise/losses.hpp"
#include "truncnoise/model.hpp"
#include "truncnoise/moments.hpp"

namespace truncnoise {

struct TrainConfig {
  GridSpec grid{1.0, 2, 1e-5};
  diff::Accountant accountant = diff::Accountant::adp;
  long utility_order = 1;  // 1 or 2
  double eps = 0.3;
  long compositions = 1;
  long epochs = 1000;
  double learning_rate = 0.001;
  double lr_decay = 0.99995;  // exponential decay factor per epoch
  UtilityWeightSchedule utility;
  BucketConfig buckets{250, 1.0001};  // adp/pdp only
  diff::Scenario scenario;
  long stack_size = 100;  // K
  double slope = 500.0;
  std::uint64_t seed = 1;
  diff::DiffOptions diff_options;
  double lambda_sq_init = 1.0;

  void validate() const {
    if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("TrainConfig: learning rate must be > 0");
    if (!(lr_decay > 0.0 && lr_decay <= 1.0))
      throw std::invalid_argument("TrainConfig: lr decay must lie in (0, 1]");
    if (utility_order != 1 && utility_order != 2)
      throw std::invalid_argument("TrainConfig: utility order must be 1 or 2");
    if (compositions < 1) throw std::invalid_argument("TrainConfig: compositions must be >= 1");
    if (!(eps > 0.0)) throw std::invalid_argument("TrainConfig: eps must be > 0");
    if (stack_size < 1) throw std::invalid_argument("TrainConfig: stack size must be >= 1");
    if (accountant_uses_buckets()) buckets.validate_for_training();
  }

  bool accountant_uses_buckets() const { return accountant != diff::Accountant::ma; }
};

struct EpochTrace {
  double total = 0.0;
  double lx = 0.0;
  double utility = 0.0;
  double weight = 0.0;
  double lr = 0.0;
};

struct TrainResult {
  SigmoidStackParams params;
  NoisePmf noise;
  std::vector<EpochTrace> trace;
  double lambda_sq = 1.0;
  double wall_seconds = 0.0;
  std::uint64_t seed = 0;
  bool collapsed = false;
  double reference_delta = 0.0;  // high-resolution bucket delta at (eps, n)
};

namespace detail {

// Standard Adam with bias correction; the learning rate is supplied per step.
class Adam {
 public:
  explicit Adam(std::size_t count) : m_(count, 0.0), v_(count, 0.0) {}

  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

  void step(std::vector<double>& x, const std::vector<double>& g, double lr) {
    ++t_;
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < x.size(); ++i) {
      m_[i] = kBeta1 * m_[i] + (1.0 - kBeta1) * g[i];
      v_[i] = kBeta2 * v_[i] + (1.0 - kBeta2) * g[i] * g[i];
      x[i] -= lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + kEps);
    }
  }

 private:
  std::vector<double> m_, v_;
  long t_ = 0;
};

inline std::vector<double> flatten(const SigmoidStackParams& p, double lambda_sq) {
  std::vector<double> x;
  x.reserve(p.trainable_count() + 1);
  x.push_back(p.base);
  x.insert(x.end(), p.amplitudes.begin(), p.amplitudes.end());
  x.insert(x.end(), p.centers.begin(), p.centers.end());
  x.push_back(lambda_sq);
  return x;
}

inline void unflatten(const std::vector<double>& x, SigmoidStackParams& p, double& lambda_sq) {
  const std::size_t terms = p.amplitudes.size();
  p.base = x[0];
  for (std::size_t j = 0; j < terms; ++j) p.amplitudes[j] = x[1 + j];
  for (std::size_t j = 0; j < terms; ++j) p.centers[j] = x[1 + terms + j];
  lambda_sq = x[1 + 2 * terms];
}

inline std::vector<double> flatten_grads(const diff::ParamGrads& g) {
  std::vector<double> x;
  x.reserve(g.amplitudes.size() * 2 + 2);
  x.push_back(g.base);
  x.insert(x.end(), g.amplitudes.begin(), g.amplitudes.end());
  x.insert(x.end(), g.centers.begin(), g.centers.end());
  x.push_back(g.lambda_sq);
  return x;
}

inline bool all_finite(const std::vector<double>& x) {
  for (double v : x)
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace detail

/// Builds the scenario's worst-case pair from a pmf.
inline WorstCasePair build_pair(const NoisePmf& pmf, const diff::Scenario& scenario) {
  if (scenario.kind == ScenarioKind::sensitivity)
    return sensitivity_pair(pmf, scenario.shift);
  return subsampled_pair(pmf, scenario.q, scenario.shift);
}

/// High-resolution bucket evaluation of the reported delta (max of both
/// directions) at (eps, n).
inline double reference_delta(const NoisePmf& pmf, const diff::Scenario& scenario, long n,
                              double eps, long half_count = 12500) {
  const auto pair = build_pair(pmf, scenario);
  const auto cfg = reference_config(pair, half_count);
  const double ab = delta_adp(compose(bucketize(pair, cfg), n), eps);
  const double ba = delta_adp(compose(bucketize(swap_pair(pair), cfg), n), eps);
  return std::max(ab, ba);
}

/// Adam training loop; deterministic given the config seed. Throws
/// training_error with the last finite snapshot when the loss or parameters
/// become non-finite.
inline TrainResult train(const TrainConfig& cfg) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  auto params =
      SigmoidStackParams::init(cfg.stack_size, cfg.slope, cfg.grid.half_width(), cfg.seed);
  double lambda_sq = cfg.lambda_sq_init;

  diff::LossGraph graph(cfg.grid, cfg.accountant, cfg.scenario, cfg.compositions, cfg.eps,
                        cfg.buckets, cfg.utility_order, cfg.diff_options);
  const bool train_lambda = cfg.accountant == diff::Accountant::ma;

  std::vector<double> x = detail::flatten(params, lambda_sq);
  detail::Adam adam(x.size());
  std::vector<EpochTrace> trace;
  trace.reserve(static_cast<std::size_t>(cfg.epochs));
  diff::ParamGrads grads;

  for (long epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double w = utility_weight(epoch, cfg.utility);
    const double lr = cfg.learning_rate * std::pow(cfg.lr_decay, static_cast<double>(epoch));
    const auto parts = graph.evaluate(params, lambda_sq, w, &grads);
    if (!std::isfinite(parts.total))
      throw training_error("train: non-finite loss", epoch, detail::flatten(params, lambda_sq));
    auto g = detail::flatten_grads(grads);
    if (!train_lambda) g.back() = 0.0;
    adam.step(x, g, lr);
    if (!detail::all_finite(x))
      throw training_error("train: non-finite parameters", epoch,
                           detail::flatten(params, lambda_sq));
    detail::unflatten(x, params, lambda_sq);
    trace.push_back({parts.total, parts.bound, parts.utility, w, lr});
  }

  NoisePmf noise = model_forward(params, cfg.grid);
  noise.meta()["generator"] = "sigmoid_stack";
  noise.meta()["accountant"] = diff::accountant_name(cfg.accountant);
  noise.meta()["eps"] = std::to_string(cfg.eps);
  noise.meta()["compositions"] = std::to_string(cfg.compositions);
  noise.meta()["epochs"] = std::to_string(cfg.epochs);
  noise.meta()["seed"] = std::to_string(cfg.seed);
  noise.meta()["stack_size"] = std::to_string(cfg.stack_size);
  noise.meta()["slope"] = std::to_string(cfg.slope);
  noise.meta()["adam_beta1"] = "0.9";
  noise.meta()["adam_beta2"] = "0.999";
  noise.meta()["adam_eps"] = "1e-8";
  noise.meta()["lambda_sq_init"] = std::to_string(cfg.lambda_sq_init);

  TrainResult result{std::move(params), std::move(noise), std::move(trace), lambda_sq,
                     0.0,               cfg.seed,          false,            0.0};
  result.reference_delta =
      reference_delta(result.noise, cfg.scenario, cfg.compositions, cfg.eps);
  const double util = utility_loss(result.noise, cfg.utility_order);
  // Collapse: essentially all mass at the center (delta ~ 1, utility under a
  // grid step), the degenerate optimum the utility-weight decay guards against.
  result.collapsed = result.reference_delta > 0.99 && util < cfg.grid.step();
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

}  // namespace truncnoise
