#pragma once

// Reverse-mode training pipeline: sigmoid-stack model -> worst-case pair ->
// privacy bound (+ utility), with hand-written backward passes per stage.
// The discrete index operations of the bucketized bound carry surrogate
// derivatives (forward-replaced sigmoid for "smaller", a sharp bump for
// "equal", pass-through for "ceil"); the surrogate index terms can be
// switched off to obtain the exact derivative of the piecewise forward,
// which is what finite differences measure away from bucket boundaries.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "truncnoise/buckets.hpp"
#include "truncnoise/grid.hpp"
#include "truncnoise/losses.hpp"
#include "truncnoise/model.hpp"
#include "truncnoise/noise.hpp"
#include "truncnoise/worst_case.hpp"

namespace truncnoise::diff {

enum class Accountant { ma, adp, pdp };

inline const char* accountant_name(Accountant a) {
  switch (a) {
    case Accountant::ma: return "ma";
    case Accountant::adp: return "adp";
    default: return "pdp";
  }
}

/// Which worst-case pair the training loss is built from, and its direction.
struct Scenario {
  ScenarioKind kind = ScenarioKind::sensitivity;
  double shift = 1.0;         // sensitivity s, or clipping distance C
  double q = 0.1;             // dpsgd sampling probability
  bool direction_ba = false;  // numerator B instead of A
};

struct DiffOptions {
  bool index_surrogates = true;
};

struct ParamGrads {
  double base = 0.0;
  std::vector<double> amplitudes;
  std::vector<double> centers;
  double lambda_sq = 0.0;

  void reset(std::size_t count) {
    base = 0.0;
    lambda_sq = 0.0;
    amplitudes.assign(count, 0.0);
    centers.assign(count, 0.0);
  }
};

struct LossParts {
  double total = 0.0;
  double bound = 0.0;    // l^X value
  double utility = 0.0;  // unweighted utility-loss
};

class LossGraph {
 public:
  LossGraph(const GridSpec& grid, Accountant accountant, Scenario scenario, long compositions,
            double eps, BucketConfig buckets, long utility_order, DiffOptions options = {})
      : grid_(grid),
        accountant_(accountant),
        scenario_(scenario),
        n_(compositions),
        eps_(eps),
        cfg_(buckets),
        utility_order_(utility_order),
        options_(options) {
    if (n_ < 1) throw std::invalid_argument("LossGraph: compositions must be >= 1");
    if (!(eps_ >= 0.0)) throw std::invalid_argument("LossGraph: eps must be >= 0");
    if (utility_order_ != 1 && utility_order_ != 2)
      throw std::invalid_argument("LossGraph: utility order must be 1 or 2");
    if (accountant_ != Accountant::ma) cfg_.validate();
    shift_cells_ = detail::steps_for_shift(scenario_.shift, grid_.step(), "LossGraph: shift");
    if (shift_cells_ >= grid_.size())
      throw std::invalid_argument("LossGraph: shift exceeds the grid support");
    if (scenario_.kind == ScenarioKind::subsampled && !(scenario_.q > 0.0 && scenario_.q < 1.0))
      throw std::invalid_argument("LossGraph: q must lie in (0, 1)");
    xs_ = grid_.points();
  }

  const GridSpec& grid() const { return grid_; }
  long shift_cells() const { return shift_cells_; }

  /// Forward (and, when grads is non-null, backward) pass for the total loss
  /// bound + utility_weight * utility.
  LossParts evaluate(const SigmoidStackParams& params, double lambda_sq, double utility_weight,
                     ParamGrads* grads) {
    model_forward_pass(params);
    pair_forward();

    LossParts parts;
    parts.bound = accountant_ == Accountant::ma ? ma_forward(lambda_sq) : bucket_forward();
    parts.utility = utility_forward();
    parts.total = parts.bound + utility_weight * parts.utility;
    if (!grads) return parts;

    const std::size_t terms = params.amplitudes.size();
    grads->reset(terms);
    gp_.assign(p_.size(), 0.0);
    glnp_.assign(p_.size(), 0.0);
    gmass_.assign(joint_mass_.size(), 0.0);
    glnnum_.assign(joint_mass_.size(), 0.0);
    glnden_.assign(joint_mass_.size(), 0.0);
    g_binf_ = 0.0;

    if (accountant_ == Accountant::ma)
      ma_backward(lambda_sq, grads);
    else
      bucket_backward();
    pair_backward();
    utility_backward(utility_weight);
    model_backward_pass(params, grads);
    return parts;
  }

 private:
  // ---- stage 1: sigmoid stack + softmax-with-mirror --------------------

  void model_forward_pass(const SigmoidStackParams& params) {
    const long half = grid_.half_points();
    const std::size_t terms = params.amplitudes.size();
    sig_.resize(static_cast<std::size_t>(half) * terms);
    s_.resize(static_cast<std::size_t>(half));
    const double base2 = params.base * params.base;
    for (long i = 0; i < half; ++i) {
      const double x = xs_[static_cast<std::size_t>(i)];
      double acc = base2;
      double* row = sig_.data() + static_cast<std::size_t>(i) * terms;
      for (std::size_t j = 0; j < terms; ++j) {
        const double t = sigmoid(params.slope * (x - params.centers[j]));
        row[j] = t;
        acc += params.amplitudes[j] * params.amplitudes[j] * t;
      }
      s_[static_cast<std::size_t>(i)] = acc;
    }
    stot_ = stable_sum(s_);
    if (!(stot_ > 0.0) || !std::isfinite(stot_))
      throw std::invalid_argument("LossGraph: degenerate model weights");
    const std::size_t n = static_cast<std::size_t>(grid_.size());
    p_.resize(n);
    lnp_.resize(n);
    const double denom = 2.0 * stot_;
    const double ldenom = std::log(denom);
    for (std::size_t i = 0; i < s_.size(); ++i) {
      const double v = s_[i] / denom;
      const double lv = std::log(s_[i]) - ldenom;
      p_[i] = v;
      p_[n - 1 - i] = v;
      lnp_[i] = lv;
      lnp_[n - 1 - i] = lv;
    }
  }

  void model_backward_pass(const SigmoidStackParams& params, ParamGrads* grads) {
    const std::size_t half = s_.size();
    const std::size_t n = p_.size();
    const std::size_t terms = params.amplitudes.size();
    ds_.resize(half);
    double gp_dot_p = 0.0;
    double glnp_total = 0.0;
    for (std::size_t i = 0; i < half; ++i) {
      const double gp_fold = gp_[i] + gp_[n - 1 - i];
      const double glnp_fold = glnp_[i] + glnp_[n - 1 - i];
      gp_dot_p += gp_fold * p_[i];
      glnp_total += glnp_fold;
      ds_[i] = gp_fold / (2.0 * stot_) + glnp_fold / s_[i];
    }
    const double common = (gp_dot_p + glnp_total) / stot_;
    for (std::size_t i = 0; i < half; ++i) ds_[i] -= common;

    double gbase = 0.0;
    for (std::size_t i = 0; i < half; ++i) gbase += ds_[i];
    grads->base += gbase * 2.0 * params.base;
    for (std::size_t i = 0; i < half; ++i) {
      const double dsm = ds_[i];
      if (dsm == 0.0) continue;
      const double* row = sig_.data() + i * terms;
      for (std::size_t j = 0; j < terms; ++j) {
        const double t = row[j];
        grads->amplitudes[j] += dsm * 2.0 * params.amplitudes[j] * t;
        grads->centers[j] += dsm * params.amplitudes[j] * params.amplitudes[j] * t * (1.0 - t) *
                             (-params.slope);
      }
    }
  }

  // ---- stage 2: worst-case pair over the extended support --------------

  void pair_forward() {
    const std::size_t n = p_.size();
    const std::size_t k = static_cast<std::size_t>(shift_cells_);
    const bool ba = scenario_.direction_ba;
    binf_ = 0.0;
    if (scenario_.kind == ScenarioKind::sensitivity) {
      const std::size_t joints = n - k;
      joint_mass_.resize(joints);
      joint_lnnum_.resize(joints);
      joint_lnden_.resize(joints);
      for (std::size_t c = 0; c < joints; ++c) {
        const std::size_t i = c + k;  // support index
        if (!ba) {
          joint_mass_[c] = p_[i];
          joint_lnnum_[c] = lnp_[i];
          joint_lnden_[c] = lnp_[i - k];
        } else {
          joint_mass_[c] = p_[i - k];
          joint_lnnum_[c] = lnp_[i - k];
          joint_lnden_[c] = lnp_[i];
        }
      }
      if (!ba) {
        for (std::size_t i = 0; i < k; ++i) binf_ += p_[i];
      } else {
        for (std::size_t i = n - k; i < n; ++i) binf_ += p_[i];
      }
      return;
    }
    // dpsgd: B = (1-q) p + q p_shifted on the extended support.
    const double q = scenario_.q;
    mix_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double shifted = i >= k ? p_[i - k] : 0.0;
      mix_[i] = (1.0 - q) * p_[i] + q * shifted;
    }
    joint_mass_.resize(n);
    joint_lnnum_.resize(n);
    joint_lnden_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double lmix = std::log(mix_[i]);
      if (!ba) {
        joint_mass_[i] = p_[i];
        joint_lnnum_[i] = lnp_[i];
        joint_lnden_[i] = lmix;
      } else {
        joint_mass_[i] = mix_[i];
        joint_lnnum_[i] = lmix;
        joint_lnden_[i] = lnp_[i];
      }
    }
    if (ba) {
      for (std::size_t i = n - k; i < n; ++i) binf_ += q * p_[i];
    }
  }

  void pair_backward() {
    const std::size_t n = p_.size();
    const std::size_t k = static_cast<std::size_t>(shift_cells_);
    const bool ba = scenario_.direction_ba;
    if (scenario_.kind == ScenarioKind::sensitivity) {
      for (std::size_t c = 0; c < joint_mass_.size(); ++c) {
        const std::size_t i = c + k;
        if (!ba) {
          gp_[i] += gmass_[c];
          glnp_[i] += glnnum_[c];
          glnp_[i - k] += glnden_[c];
        } else {
          gp_[i - k] += gmass_[c];
          glnp_[i - k] += glnnum_[c];
          glnp_[i] += glnden_[c];
        }
      }
      if (!ba) {
        for (std::size_t i = 0; i < k; ++i) gp_[i] += g_binf_;
      } else {
        for (std::size_t i = n - k; i < n; ++i) gp_[i] += g_binf_;
      }
      return;
    }
    const double q = scenario_.q;
    for (std::size_t i = 0; i < n; ++i) {
      double gmix = 0.0;
      if (!ba) {
        gp_[i] += gmass_[i];
        glnp_[i] += glnnum_[i];
        gmix = glnden_[i] / mix_[i];
      } else {
        gmix = gmass_[i] + glnnum_[i] / mix_[i];
        glnp_[i] += glnden_[i];
      }
      gp_[i] += gmix * (1.0 - q);
      if (i >= k) gp_[i - k] += gmix * q;
    }
    if (ba) {
      for (std::size_t i = n - k; i < n; ++i) gp_[i] += g_binf_ * q;
    }
  }

  // ---- stage 3a: bucketized bound (adp / pdp) ---------------------------

  static double bump(double d) { return 1.0 / (1.0 + d * d / 0.01); }

  double bucket_forward() {
    const long h = cfg_.half_count;
    const double lnf = cfg_.log_factor();
    const std::size_t slots = static_cast<std::size_t>(2 * h + 1);
    fin_.assign(slots, 0.0);
    const std::size_t joints = joint_mass_.size();
    jidx_.resize(joints);
    gate_over_.resize(joints);
    gate_under_.resize(joints);
    double inf = binf_;
    for (std::size_t c = 0; c < joints; ++c) {
      const double u = (joint_lnnum_[c] - joint_lnden_[c]) / lnf;
      const double j = std::ceil(u);
      jidx_[c] = j;
      const double over = sigmoid(5.0 * (j - static_cast<double>(h) - 0.5));
      const double under = sigmoid(-5.0 * (j + static_cast<double>(h) - 0.5));
      gate_over_[c] = over;
      gate_under_[c] = under;
      const double mass = joint_mass_[c];
      inf += mass * over;
      fin_[0] += mass * under;
      if (j > static_cast<double>(-h) && j <= static_cast<double>(h))
        fin_[static_cast<std::size_t>(static_cast<long>(j) + h)] += mass;
    }
    inf_ = inf;
    compose_forward();
    return delta_forward();
  }

  void bucket_backward() {
    delta_backward();    // fills gfin_, ginf_ for the composed state
    compose_backward();  // transforms them to the n = 1 bucket state
    const long h = cfg_.half_count;
    const double lnf = cfg_.log_factor();
    // Bump-kernel convolution of the bucket gradients, indexed by integer
    // bucket position; reused by every cell whose index lies in range.
    const bool surrogate = options_.index_surrogates;
    if (surrogate) {
      vtab_.assign(fin_.size(), 0.0);
      for (long m = -h; m <= h; ++m) {
        double acc = 0.0;
        for (long j = -h + 1; j <= h; ++j)
          acc += gfin_[static_cast<std::size_t>(j + h)] * bump(static_cast<double>(m - j));
        vtab_[static_cast<std::size_t>(m + h)] = acc;
      }
    }
    const double gminus = gfin_[0];
    for (std::size_t c = 0; c < joint_mass_.size(); ++c) {
      const double j = jidx_[c];
      double gm = ginf_ * gate_over_[c] + gminus * gate_under_[c];
      if (j > static_cast<double>(-h) && j <= static_cast<double>(h))
        gm += gfin_[static_cast<std::size_t>(static_cast<long>(j) + h)];
      gmass_[c] += gm;
      if (!surrogate) continue;
      const double so = 5.0 * gate_over_[c] * (1.0 - gate_over_[c]);
      const double su = -5.0 * gate_under_[c] * (1.0 - gate_under_[c]);
      double du = joint_mass_[c] * (ginf_ * so + gminus * su);
      if (j >= static_cast<double>(-h) && j <= static_cast<double>(h)) {
        du += joint_mass_[c] * vtab_[static_cast<std::size_t>(static_cast<long>(j) + h)];
      } else if (j >= static_cast<double>(-h - 200) && j <= static_cast<double>(h + 200)) {
        double acc = 0.0;
        for (long jj = -h + 1; jj <= h; ++jj)
          acc += gfin_[static_cast<std::size_t>(jj + h)] * bump(j - static_cast<double>(jj));
        du += joint_mass_[c] * acc;
      }  // farther cells: bump < 2.5e-7, dropped
      const double g = du / lnf;
      glnnum_[c] += g;
      glnden_[c] -= g;
    }
    g_binf_ += ginf_;
  }

  // Binary-exponentiation composition with snapshots for the backward pass.
  struct ConvOp {
    int kind;  // 0: acc = base, 1: acc = conv(acc, base), 2: base = conv(base, base)
    std::vector<double> left_fin, right_fin;
    double left_inf = 0.0, right_inf = 0.0;
  };

  void convolve_values(const std::vector<double>& xf, double xi, const std::vector<double>& yf,
                       double yi, std::vector<double>& of, double& oi) const {
    const long h = cfg_.half_count;
    of.assign(xf.size(), 0.0);
    oi = xi + yi - xi * yi;
    for (long i = -h; i <= h; ++i) {
      const double xv = xf[static_cast<std::size_t>(i + h)];
      if (xv == 0.0) continue;
      for (long m = -h; m <= h; ++m) {
        const double prod = xv * yf[static_cast<std::size_t>(m + h)];
        if (prod == 0.0) continue;
        const long sum = i + m;
        if (sum > h)
          oi += prod;
        else if (sum <= -h)
          of[0] += prod;
        else
          of[static_cast<std::size_t>(sum + h)] += prod;
      }
    }
  }

  // d(conv)/d(one argument): routes the output gradient back through the
  // clamped index map against the other argument's values.
  void convolve_backward_one(const std::vector<double>& gof, double goi,
                             const std::vector<double>& other_fin, double other_inf,
                             std::vector<double>& garg, double& garg_inf) const {
    const long h = cfg_.half_count;
    garg.assign(gof.size(), 0.0);
    garg_inf = goi * (1.0 - other_inf);
    for (long i = -h; i <= h; ++i) {
      double acc = 0.0;
      for (long m = -h; m <= h; ++m) {
        const double ov = other_fin[static_cast<std::size_t>(m + h)];
        if (ov == 0.0) continue;
        const long sum = i + m;
        double g;
        if (sum > h)
          g = goi;
        else if (sum <= -h)
          g = gof[0];
        else
          g = gof[static_cast<std::size_t>(sum + h)];
        acc += g * ov;
      }
      garg[static_cast<std::size_t>(i + h)] = acc;
    }
  }

  void compose_forward() {
    ops_.clear();
    if (n_ == 1) {
      comp_fin_ = fin_;
      comp_inf_ = inf_;
      return;
    }
    std::vector<double> base_fin = fin_;
    double base_inf = inf_;
    std::vector<double> acc_fin;
    double acc_inf = 0.0;
    bool have_acc = false;
    long e = n_;
    while (e > 0) {
      if (e & 1) {
        if (!have_acc) {
          ops_.push_back({0, {}, {}, 0.0, 0.0});
          acc_fin = base_fin;
          acc_inf = base_inf;
          have_acc = true;
        } else {
          ConvOp op{1, acc_fin, base_fin, acc_inf, base_inf};
          std::vector<double> out;
          double oinf;
          convolve_values(acc_fin, acc_inf, base_fin, base_inf, out, oinf);
          acc_fin = std::move(out);
          acc_inf = oinf;
          ops_.push_back(std::move(op));
        }
      }
      e >>= 1;
      if (e > 0) {
        ConvOp op{2, base_fin, {}, base_inf, 0.0};
        std::vector<double> out;
        double oinf;
        convolve_values(base_fin, base_inf, base_fin, base_inf, out, oinf);
        base_fin = std::move(out);
        base_inf = oinf;
        ops_.push_back(std::move(op));
      }
    }
    comp_fin_ = std::move(acc_fin);
    comp_inf_ = acc_inf;
  }

  void compose_backward() {
    if (n_ == 1) return;  // gfin_/ginf_ already refer to the n = 1 state
    std::vector<double> gacc = gfin_;
    double gacc_inf = ginf_;
    std::vector<double> gbase(gfin_.size(), 0.0);
    double gbase_inf = 0.0;
    std::vector<double> tmp;
    double tmp_inf;
    for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) {
      const ConvOp& op = *it;
      if (op.kind == 0) {
        for (std::size_t i = 0; i < gbase.size(); ++i) gbase[i] += gacc[i];
        gbase_inf += gacc_inf;
        std::fill(gacc.begin(), gacc.end(), 0.0);
        gacc_inf = 0.0;
      } else if (op.kind == 1) {
        // acc' = conv(acc_old = left, base = right)
        convolve_backward_one(gacc, gacc_inf, op.left_fin, op.left_inf, tmp, tmp_inf);
        for (std::size_t i = 0; i < gbase.size(); ++i) gbase[i] += tmp[i];
        gbase_inf += tmp_inf;
        convolve_backward_one(gacc, gacc_inf, op.right_fin, op.right_inf, tmp, tmp_inf);
        gacc = tmp;
        gacc_inf = tmp_inf;
      } else {
        // base' = conv(base_old, base_old); the incoming base gradient flows
        // through both argument slots.
        convolve_backward_one(gbase, gbase_inf, op.left_fin, op.left_inf, tmp, tmp_inf);
        for (std::size_t i = 0; i < gbase.size(); ++i) gbase[i] = 2.0 * tmp[i];
        gbase_inf = 2.0 * tmp_inf;
      }
    }
    gfin_ = std::move(gbase);
    ginf_ = gbase_inf;
  }

  double delta_forward() const {
    const long h = cfg_.half_count;
    const double lnf = cfg_.log_factor();
    const double start_idx = std::ceil(eps_ / lnf);
    double delta = comp_inf_;
    if (start_idx > static_cast<double>(h)) return delta;
    const long start = std::max(static_cast<long>(start_idx), -h + 1);
    for (long j = start; j <= h; ++j) {
      const double w = accountant_ == Accountant::pdp
                           ? 1.0
                           : std::clamp(1.0 - std::exp(eps_ - static_cast<double>(j) * lnf),
                                        0.0, 1.0);
      delta += w * comp_fin_[static_cast<std::size_t>(j + h)];
    }
    return delta;
  }

  void delta_backward() {
    const long h = cfg_.half_count;
    const double lnf = cfg_.log_factor();
    gfin_.assign(comp_fin_.size(), 0.0);
    ginf_ = 1.0;
    const double start_idx = std::ceil(eps_ / lnf);
    if (start_idx > static_cast<double>(h)) return;
    const long start = std::max(static_cast<long>(start_idx), -h + 1);
    for (long j = start; j <= h; ++j) {
      const double w = accountant_ == Accountant::pdp
                           ? 1.0
                           : std::clamp(1.0 - std::exp(eps_ - static_cast<double>(j) * lnf),
                                        0.0, 1.0);
      gfin_[static_cast<std::size_t>(j + h)] = w;
    }
  }

  // ---- stage 3b: extended moments accountant ----------------------------

  double ma_forward(double lambda_sq) {
    lambda_ = lambda_sq * lambda_sq + 1e-4;
    const std::size_t joints = joint_mass_.size();
    if (joints == 0) return 1.0;
    ma_terms_.resize(joints);
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < joints; ++c) {
      const double t = joint_lnnum_[c] + lambda_ * (joint_lnnum_[c] - joint_lnden_[c]);
      ma_terms_[c] = t;
      peak = std::max(peak, t);
    }
    double acc = 0.0;
    for (std::size_t c = 0; c < joints; ++c) acc += std::exp(ma_terms_[c] - peak);
    gamma_ = peak + std::log(acc);
    for (std::size_t c = 0; c < joints; ++c)
      ma_terms_[c] = std::exp(ma_terms_[c] - gamma_);  // softmax weights
    composed_binf_ = binf_ >= 1.0 ? 1.0 : -std::expm1(static_cast<double>(n_) * std::log1p(-binf_));
    ma_obj_ = static_cast<double>(n_) * gamma_ - lambda_ * eps_;
    // Exponent cap: beyond it the clamped delta is 1 regardless, and the cap
    // keeps the backward pass finite.
    ma_tail_ = std::exp(std::min(ma_obj_, 60.0));
    const double raw = composed_binf_ + ma_tail_;
    return std::min(raw, 1.0);  // min passes gradients straight through
  }

  void ma_backward(double lambda_sq, ParamGrads* grads) {
    const double g_obj = ma_obj_ < 60.0 ? ma_tail_ : 0.0;
    const double g_gamma = g_obj * static_cast<double>(n_);
    double g_lambda = -g_obj * eps_;
    for (std::size_t c = 0; c < joint_mass_.size(); ++c) {
      const double w = ma_terms_[c];
      glnnum_[c] += g_gamma * w * (1.0 + lambda_);
      glnden_[c] -= g_gamma * w * lambda_;
      g_lambda += g_gamma * w * (joint_lnnum_[c] - joint_lnden_[c]);
    }
    if (binf_ < 1.0) {
      const double d = static_cast<double>(n_) *
                       std::exp(static_cast<double>(n_ - 1) * std::log1p(-binf_));
      g_binf_ += d;
    }
    grads->lambda_sq += g_lambda * 2.0 * lambda_sq;
  }

  // ---- stage 4: utility --------------------------------------------------

  double utility_forward() {
    if (utility_order_ == 1) {
      double acc = 0.0;
      for (std::size_t i = 0; i < p_.size(); ++i) acc += std::abs(xs_[i]) * p_[i];
      utility_ = acc;
    } else {
      double acc = 0.0;
      for (std::size_t i = 0; i < p_.size(); ++i) acc += xs_[i] * xs_[i] * p_[i];
      utility_ = std::sqrt(acc);
    }
    return utility_;
  }

  void utility_backward(double weight) {
    if (weight == 0.0) return;
    if (utility_order_ == 1) {
      for (std::size_t i = 0; i < p_.size(); ++i) gp_[i] += weight * std::abs(xs_[i]);
    } else {
      const double inv = utility_ > 0.0 ? 0.5 / utility_ : 0.0;
      for (std::size_t i = 0; i < p_.size(); ++i) gp_[i] += weight * xs_[i] * xs_[i] * inv;
    }
  }

  // ---- configuration -----------------------------------------------------
  GridSpec grid_;
  Accountant accountant_;
  Scenario scenario_;
  long n_;
  double eps_;
  BucketConfig cfg_;
  long utility_order_;
  DiffOptions options_;
  long shift_cells_ = 1;
  std::vector<double> xs_;

  // ---- forward caches ------------------------------------------------
  std::vector<double> sig_, s_, p_, lnp_, ds_;
  double stot_ = 0.0;
  std::vector<double> joint_mass_, joint_lnnum_, joint_lnden_, mix_;
  double binf_ = 0.0;
  std::vector<double> fin_, comp_fin_;
  double inf_ = 0.0, comp_inf_ = 0.0;
  std::vector<double> jidx_, gate_over_, gate_under_;
  std::vector<ConvOp> ops_;
  std::vector<double> ma_terms_;
  double lambda_ = 0.0, gamma_ = 0.0, composed_binf_ = 0.0, ma_obj_ = 0.0, ma_tail_ = 0.0;
  double utility_ = 0.0;

  // ---- gradient accumulators ------------------------------------------
  std::vector<double> gp_, glnp_, gmass_, glnnum_, glnden_, gfin_, vtab_;
  double g_binf_ = 0.0, ginf_ = 0.0;
};

struct BoundWithGrad {
  double value = 0.0;
  ParamGrads grads;
};

/// Differentiable PrivacyBuckets ADP bound for the given scenario.
inline BoundWithGrad delta_adp_differentiable(const SigmoidStackParams& params,
                                              const GridSpec& grid, const Scenario& scenario,
                                              long n, double eps, const BucketConfig& cfg,
                                              const DiffOptions& options = {}) {
  LossGraph graph(grid, Accountant::adp, scenario, n, eps, cfg, 1, options);
  BoundWithGrad out;
  out.value = graph.evaluate(params, 0.0, 0.0, &out.grads).bound;
  return out;
}

/// Differentiable PrivacyBuckets PDP bound.
inline BoundWithGrad delta_pdp_differentiable(const SigmoidStackParams& params,
                                              const GridSpec& grid, const Scenario& scenario,
                                              long n, double eps, const BucketConfig& cfg,
                                              const DiffOptions& options = {}) {
  LossGraph graph(grid, Accountant::pdp, scenario, n, eps, cfg, 1, options);
  BoundWithGrad out;
  out.value = graph.evaluate(params, 0.0, 0.0, &out.grads).bound;
  return out;
}

/// Differentiable extended-MA bound at the current lambda = lambda_sq^2 + 1e-4
/// (not the searched minimum); the gradient covers lambda_sq as well.
inline BoundWithGrad delta_ma_differentiable(const SigmoidStackParams& params,
                                             const GridSpec& grid, const Scenario& scenario,
                                             long n, double eps, double lambda_sq) {
  LossGraph graph(grid, Accountant::ma, scenario, n, eps, BucketConfig(1, 1.0001), 1, {});
  BoundWithGrad out;
  out.value = graph.evaluate(params, lambda_sq, 0.0, &out.grads).bound;
  return out;
}

}  // namespace truncnoise::diff
