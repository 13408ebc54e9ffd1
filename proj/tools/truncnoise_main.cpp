// truncnoise: learn, evaluate, compare, verify, and sample truncated additive
// noise for differentially private mechanisms.
//
// Exit codes: 0 success, 1 runtime failure (e.g. bisection bracket), 2 invalid
// configuration or input file, 3 training collapsed, 4 training diverged.

#include <cstdio>
#include <exception>
#include <optional>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "truncnoise/truncnoise.hpp"

namespace tn = truncnoise;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitInvalidInput = 2;
constexpr int kExitCollapse = 3;
constexpr int kExitDivergence = 4;

struct ScenarioArgs {
  std::string kind = "sensitivity";
  double s = 1.0;
  double q = 0.1;
  double clip = 1.0;

  tn::diff::Scenario resolve() const {
    if (kind == "sensitivity") return {tn::ScenarioKind::sensitivity, s, 0.0, false};
    if (kind == "dpsgd") return {tn::ScenarioKind::subsampled, clip, q, true};
    throw std::invalid_argument("unknown scenario \"" + kind + "\"");
  }
};

void add_scenario_options(CLI::App* cmd, ScenarioArgs& args) {
  cmd->add_option("--scenario", args.kind, "sensitivity or dpsgd")
      ->check(CLI::IsMember({"sensitivity", "dpsgd"}));
  cmd->add_option("--s", args.s, "sensitivity (query deviation)");
  cmd->add_option("--q", args.q, "dpsgd sampling probability");
  cmd->add_option("--clip", args.clip, "dpsgd clipping distance");
}

int run_optimize(const std::string& config_path) {
  tn::RunConfig rc;
  try {
    rc = tn::load_run_config(config_path);
  } catch (const std::exception& e) {
    std::cerr << "invalid config: " << e.what() << "\n";
    return kExitInvalidInput;
  }
  std::optional<tn::TrainResult> trained;
  try {
    trained = tn::train(rc.train);
  } catch (const tn::training_error& e) {
    std::cerr << "training diverged: " << e.what() << " at epoch " << e.epoch() << "\n";
    return kExitDivergence;
  }
  tn::TrainResult& result = *trained;

  const auto dir = rc.output_dir;
  tn::save_noise(result.noise, dir / "noise.json");
  tn::atomic_write(dir / "metrics.csv", tn::trace_to_csv(result.trace));

  std::vector<double> eps_list = rc.report_eps;
  if (eps_list.empty()) {
    for (int i = 0; i <= 40; ++i)
      eps_list.push_back(rc.train.eps * 2.0 * static_cast<double>(i) / 40.0);
  }
  const auto pair = tn::build_pair(result.noise, rc.train.scenario);
  tn::EvalRequest req;
  req.accountants = {"adp", "pdp", "ma"};
  req.n_list = {rc.train.compositions};
  req.eps_list = eps_list;
  const auto eval = tn::evaluate_pair(pair, req);
  tn::atomic_write(dir / "delta_curve.csv", tn::curve_to_csv(eval.curve));

  std::cout << "trained " << rc.train.epochs << " epochs in " << result.wall_seconds << "s; "
            << "reference delta(" << rc.train.eps << ", n=" << rc.train.compositions
            << ") = " << tn::format_full(result.reference_delta) << "\n";
  std::cout << "artifacts: " << (dir / "noise.json") << ", " << (dir / "metrics.csv") << ", "
            << (dir / "delta_curve.csv") << "\n";
  if (result.collapsed) {
    std::cerr << "noise collapsed (delta ~ 1 at negligible utility)\n";
    return kExitCollapse;
  }
  return kExitOk;
}

std::vector<double> parse_doubles(const std::vector<std::string>& items) {
  std::vector<double> out;
  for (const auto& item : items) {
    std::stringstream ss(item);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      if (!tok.empty()) out.push_back(std::stod(tok));
    }
  }
  return out;
}

std::vector<long> parse_longs(const std::vector<std::string>& items) {
  std::vector<long> out;
  for (const auto& item : items) {
    std::stringstream ss(item);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      if (!tok.empty()) out.push_back(std::stol(tok));
    }
  }
  return out;
}

tn::NoisePmf load_noise_or_exit(const std::string& path) {
  try {
    return tn::load_noise(path);
  } catch (const std::exception& e) {
    std::cerr << "invalid noise file: " << e.what() << "\n";
    std::exit(kExitInvalidInput);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"learned truncated noise for differentially private mechanisms"};
  app.require_subcommand(1);

  // ---- optimize ----------------------------------------------------------
  std::string config_path;
  auto* optimize = app.add_subcommand("optimize", "train noise from a JSON run config");
  optimize->add_option("config", config_path, "run configuration file")->required();

  // ---- evaluate ----------------------------------------------------------
  std::string noise_path, out_path = "curve.csv";
  ScenarioArgs eval_scn;
  std::vector<std::string> n_raw{"1"}, eps_raw{"0.3"}, accountants{"adp", "pdp"};
  long eval_h = 12500;
  double eval_f = 0.0;
  bool oracle_columns = false;
  auto* evaluate = app.add_subcommand("evaluate", "delta curves for a noise file");
  evaluate->add_option("--noise", noise_path, "noise JSON file")->required();
  add_scenario_options(evaluate, eval_scn);
  evaluate->add_option("--n", n_raw, "composition counts (comma separated)");
  evaluate->add_option("--eps", eps_raw, "epsilon values (comma separated)");
  evaluate->add_option("--accountants", accountants, "subset of adp, pdp, ma");
  evaluate->add_option("--half-count", eval_h, "bucket half count (default 12500)");
  evaluate->add_option("--factor", eval_f, "bucket factor (default: adaptive coverage)");
  evaluate->add_flag("--oracle", oracle_columns,
                     "append exact-oracle columns (support <= 20, n <= 4)");
  evaluate->add_option("--out", out_path, "output CSV path");

  // ---- compare ------------------------------------------------------------
  std::string cmp_noise, cmp_baseline = "gaussian", cmp_match = "delta",
              cmp_out = "compare.json";
  ScenarioArgs cmp_scn;
  double cmp_eps = 0.3;
  long cmp_n = 1, cmp_order = 1;
  auto* compare = app.add_subcommand("compare", "match a baseline and report KL divergence");
  compare->add_option("--noise", cmp_noise, "noise JSON file")->required();
  compare->add_option("--baseline", cmp_baseline, "gaussian or staircase")
      ->check(CLI::IsMember({"gaussian", "staircase"}));
  compare->add_option("--match", cmp_match, "delta or utility")
      ->check(CLI::IsMember({"delta", "utility"}));
  add_scenario_options(compare, cmp_scn);
  compare->add_option("--eps", cmp_eps, "epsilon for delta matching");
  compare->add_option("--n", cmp_n, "compositions for delta matching");
  compare->add_option("--utility-order", cmp_order, "1 or 2");
  compare->add_option("--out", cmp_out, "output JSON path");

  // ---- verify ---------------------------------------------------------------
  std::string ver_noise, ver_out;
  ScenarioArgs ver_scn;
  double ver_eps = 0.3;
  auto* verify = app.add_subcommand("verify", "structural and soundness checks");
  verify->add_option("--noise", ver_noise, "noise JSON file")->required();
  add_scenario_options(verify, ver_scn);
  verify->add_option("--eps", ver_eps, "epsilon");
  verify->add_option("--out", ver_out, "also write the report JSON here");

  // ---- sample ----------------------------------------------------------------
  std::string smp_noise, smp_out = "samples.txt";
  long smp_count = 1000, smp_dim = 1;
  std::uint64_t smp_seed = 1;
  auto* sample = app.add_subcommand("sample", "draw noise samples");
  sample->add_option("--noise", smp_noise, "noise JSON file")->required();
  sample->add_option("--count", smp_count, "number of samples");
  sample->add_option("--dim", smp_dim, "dimension (1: scalar, >1: radial vectors)");
  sample->add_option("--seed", smp_seed, "random seed");
  sample->add_option("--out", smp_out, "output path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (optimize->parsed()) return run_optimize(config_path);

    if (evaluate->parsed()) {
      const tn::NoisePmf pmf = load_noise_or_exit(noise_path);
      const auto pair = tn::build_pair(pmf, eval_scn.resolve());
      tn::EvalRequest req;
      req.accountants = accountants;
      req.n_list = parse_longs(n_raw);
      req.eps_list = parse_doubles(eps_raw);
      req.oracle_columns = oracle_columns;
      if (eval_f > 0.0)
        req.buckets = tn::BucketConfig(eval_h, eval_f);
      else if (eval_h != 12500)
        req.buckets = tn::reference_config(pair, eval_h);
      const auto result = tn::evaluate_pair(pair, req);
      tn::atomic_write(out_path,
                       tn::curve_to_csv(result.curve, result.oracle_attached, &result.oracle));
      std::cout << "wrote " << result.curve.rows.size() << " rows to " << out_path << "\n";
      return kExitOk;
    }

    if (compare->parsed()) {
      const tn::NoisePmf pmf = load_noise_or_exit(cmp_noise);
      const auto family = cmp_baseline == "gaussian" ? tn::BaselineFamily::gaussian
                                                     : tn::BaselineFamily::staircase;
      const auto target =
          cmp_match == "delta" ? tn::MatchTarget::delta : tn::MatchTarget::utility;
      const auto result = tn::compare_to_baseline(pmf, family, target, cmp_scn.resolve(),
                                                  cmp_eps, cmp_n, cmp_order);
      tn::json j{{"baseline", cmp_baseline},
                 {"match", cmp_match},
                 {"parameter", result.parameter},
                 {"matched_value", result.matched_value},
                 {"target_value", result.target_value},
                 {"kl_baseline_to_generated", result.kl},
                 {"generated_utility", result.generated_utility},
                 {"baseline_utility", result.baseline_utility}};
      tn::atomic_write(cmp_out, j.dump(2) + "\n");
      std::cout << j.dump(2) << "\n";
      return kExitOk;
    }

    if (verify->parsed()) {
      const tn::NoisePmf pmf = load_noise_or_exit(ver_noise);
      const auto report = tn::verify_noise(pmf, ver_scn.resolve(), ver_eps);
      const auto j = tn::verify_report_to_json(report);
      if (!ver_out.empty()) tn::atomic_write(ver_out, j.dump(2) + "\n");
      std::cout << j.dump(2) << "\n";
      return kExitOk;
    }

    if (sample->parsed()) {
      const tn::NoisePmf pmf = load_noise_or_exit(smp_noise);
      std::ostringstream out;
      if (smp_dim == 1) {
        for (double x : tn::sample_noise(pmf, smp_seed, smp_count))
          out << tn::format_full(x) << "\n";
      } else {
        for (const auto& vec : tn::sample_radial(pmf, smp_dim, smp_seed, smp_count)) {
          for (std::size_t i = 0; i < vec.size(); ++i)
            out << (i ? "," : "") << tn::format_full(vec[i]);
          out << "\n";
        }
      }
      tn::atomic_write(smp_out, out.str());
      std::cout << "wrote " << smp_count << " samples to " << smp_out << "\n";
      return kExitOk;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalidInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitOk;
}
