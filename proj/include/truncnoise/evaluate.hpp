#pragma once

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <future>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "truncnoise/buckets.hpp"
#include "truncnoise/exact_oracle.hpp"
#include "truncnoise/moments.hpp"
#include "truncnoise/worst_case.hpp"

namespace truncnoise {

struct EvalRequest {
  std::vector<std::string> accountants{"adp", "pdp"};  // any of adp, pdp, ma
  std::vector<long> n_list{1};
  std::vector<double> eps_list{0.3};
  std::optional<BucketConfig> buckets;  // default: adaptive reference settings
  bool oracle_columns = false;          // requires small support and n <= 4
};

struct EvalResult {
  DeltaCurve curve;
  std::vector<std::pair<double, double>> oracle;  // per row (ab, ba); NaN when absent
  bool oracle_attached = false;
};

inline unsigned eval_thread_count() {
  if (const char* env = std::getenv("TRUNCNOISE_THREADS")) {
    const long n = std::atol(env);
    if (n >= 1) return static_cast<unsigned>(n);
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : hc;
}

/// Full curve evaluation over (accountant, n, eps); bucket accountants share
/// one composition per (direction, n). Cells run on a small async pool.
inline EvalResult evaluate_pair(const WorstCasePair& pair, const EvalRequest& req) {
  EvalResult result;
  const BucketConfig cfg = req.buckets ? *req.buckets : reference_config(pair);

  bool want_buckets = false, want_ma = false;
  for (const auto& name : req.accountants) {
    if (name == "adp" || name == "pdp") want_buckets = true;
    else if (name == "ma") want_ma = true;
    else throw std::invalid_argument("evaluate: unknown accountant \"" + name + "\"");
  }
  const bool want_adp =
      std::find(req.accountants.begin(), req.accountants.end(), "adp") != req.accountants.end();
  const bool want_pdp =
      std::find(req.accountants.begin(), req.accountants.end(), "pdp") != req.accountants.end();

  struct Task {
    std::string accountant;
    long n;
    std::vector<CurveRow> rows;
  };
  std::vector<std::future<Task>> futures;
  const unsigned max_threads = eval_thread_count();

  std::optional<BucketedLoss> ab_base, ba_base;
  if (want_buckets) {
    ab_base = bucketize(pair, cfg);
    ba_base = bucketize(swap_pair(pair), cfg);
  }
  const WorstCasePair swapped = swap_pair(pair);

  auto bucket_task = [&, cfg](long n) {
    return [&, n, cfg]() {
      Task t{"buckets", n, {}};
      const auto ab = compose(*ab_base, n);
      const auto ba = compose(*ba_base, n);
      if (want_adp) {
        for (double eps : req.eps_list) {
          const double d1 = delta_adp(ab, eps), d2 = delta_adp(ba, eps);
          t.rows.push_back({"adp", n, eps, d1, d2, std::max(d1, d2)});
        }
      }
      if (want_pdp) {
        for (double eps : req.eps_list) {
          const double d1 = delta_pdp(ab, eps), d2 = delta_pdp(ba, eps);
          t.rows.push_back({"pdp", n, eps, d1, d2, std::max(d1, d2)});
        }
      }
      return t;
    };
  };
  auto ma_task = [&](long n) {
    return [&, n]() {
      Task t{"ma", n, {}};
      for (double eps : req.eps_list) {
        const auto res = delta_ma_both(pair, n, eps);
        t.rows.push_back({"ma", n, eps, res.delta_ab, res.delta_ba, res.delta});
      }
      return t;
    };
  };

  std::vector<std::function<Task()>> work;
  for (long n : req.n_list) {
    if (want_buckets) work.push_back(bucket_task(n));
    if (want_ma) work.push_back(ma_task(n));
  }
  // Launch at most max_threads at a time, preserving output order.
  std::vector<Task> done(work.size());
  std::size_t next = 0;
  while (next < work.size()) {
    const std::size_t batch = std::min<std::size_t>(max_threads, work.size() - next);
    std::vector<std::future<Task>> running;
    for (std::size_t i = 0; i < batch; ++i)
      running.push_back(std::async(std::launch::async, work[next + i]));
    for (std::size_t i = 0; i < batch; ++i) done[next + i] = running[i].get();
    next += batch;
  }
  for (auto& t : done)
    for (auto& row : t.rows) result.curve.rows.push_back(std::move(row));

  long max_n = 0;
  for (long n : req.n_list) max_n = std::max(max_n, n);
  if (req.oracle_columns && pair.support.size() <= 20 && max_n <= 4) {
    result.oracle_attached = true;
    const auto ld_ab = loss_distribution(pair);
    const auto ld_ba = loss_distribution(swapped);
    for (const auto& row : result.curve.rows) {
      const auto ea = delta_from_loss(exact_compose(ld_ab, row.n), row.eps);
      const auto eb = delta_from_loss(exact_compose(ld_ba, row.n), row.eps);
      if (row.accountant == "pdp")
        result.oracle.push_back({ea.pdp, eb.pdp});
      else
        result.oracle.push_back({ea.adp, eb.adp});
    }
  }
  return result;
}

}  // namespace truncnoise
