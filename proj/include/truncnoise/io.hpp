#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "truncnoise/buckets.hpp"
#include "truncnoise/noise.hpp"
#include "truncnoise/train.hpp"
#include "truncnoise/worst_case.hpp"

namespace truncnoise {

using json = nlohmann::json;

/// Writes through a temporary file in the target directory and renames, so a
/// failed run never leaves a partial artifact behind.
inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
  const auto dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  std::filesystem::create_directories(dir);
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("atomic_write: cannot open " + tmp);
    out << content;
    if (!out) throw std::runtime_error("atomic_write: write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

inline std::string format_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace detail {

inline void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                                const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key))
      throw std::invalid_argument("unknown key \"" + key + "\" in " + where);
  }
}

inline json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("malformed JSON in " + path.string() + ": " + e.what());
  }
  return j;
}

}  // namespace detail

// ---- NoisePmf files -------------------------------------------------------

inline json noise_to_json(const NoisePmf& pmf) {
  if (!pmf.has_grid())
    throw std::invalid_argument("noise_to_json: only grid-backed pmfs are serializable");
  json j;
  j["grid"] = {{"half_width", pmf.grid().half_width()},
               {"half_points", pmf.grid().half_points()},
               {"bias", pmf.grid().bias()}};
  j["pmf"] = pmf.mass();
  j["meta"] = pmf.meta();
  return j;
}

inline NoisePmf noise_from_json(const json& j, const std::string& where = "noise file") {
  if (!j.contains("grid") || !j.contains("pmf"))
    throw std::invalid_argument(where + ": missing \"grid\" or \"pmf\" field");
  const auto& g = j.at("grid");
  for (const char* field : {"half_width", "half_points", "bias"}) {
    if (!g.contains(field))
      throw std::invalid_argument(where + ": grid is missing \"" + std::string(field) + "\"");
  }
  const GridSpec grid(g.at("half_width").get<double>(), g.at("half_points").get<long>(),
                      g.at("bias").get<double>());
  auto mass = j.at("pmf").get<std::vector<double>>();
  if (static_cast<long>(mass.size()) != grid.size())
    throw std::invalid_argument(where + ": pmf length " + std::to_string(mass.size()) +
                                " does not equal 2*half_points = " + std::to_string(grid.size()));
  std::map<std::string, std::string> meta;
  if (j.contains("meta")) meta = j.at("meta").get<std::map<std::string, std::string>>();
  return NoisePmf(grid, std::move(mass), std::move(meta));  // ctor re-validates invariants
}

inline void save_noise(const NoisePmf& pmf, const std::filesystem::path& path) {
  atomic_write(path, noise_to_json(pmf).dump(2) + "\n");
}

inline NoisePmf load_noise(const std::filesystem::path& path) {
  return noise_from_json(detail::load_json_file(path), path.string());
}

// ---- WorstCasePair files ----------------------------------------------------

inline json pair_to_json(const WorstCasePair& pair) {
  json label;
  if (pair.label.kind == ScenarioKind::sensitivity) {
    label = {{"type", "sensitivity"}, {"s", pair.label.sensitivity}};
  } else {
    label = {{"type", "subsampled"}, {"q", pair.label.q}, {"C", pair.label.clip}};
  }
  return json{{"support", pair.support}, {"a", pair.a}, {"b", pair.b}, {"label", label}};
}

inline WorstCasePair pair_from_json(const json& j, const std::string& where = "pair file") {
  for (const char* field : {"support", "a", "b", "label"}) {
    if (!j.contains(field))
      throw std::invalid_argument(where + ": missing \"" + std::string(field) + "\"");
  }
  WorstCasePair pair;
  pair.support = j.at("support").get<std::vector<double>>();
  pair.a = j.at("a").get<std::vector<double>>();
  pair.b = j.at("b").get<std::vector<double>>();
  if (pair.a.size() != pair.support.size() || pair.b.size() != pair.support.size())
    throw std::invalid_argument(where + ": support/a/b lengths differ");
  if (pair.support.size() >= 2) pair.step = pair.support[1] - pair.support[0];
  const auto& label = j.at("label");
  const std::string type = label.at("type").get<std::string>();
  if (type == "sensitivity") {
    pair.label.kind = ScenarioKind::sensitivity;
    pair.label.sensitivity = label.at("s").get<double>();
  } else if (type == "subsampled") {
    pair.label.kind = ScenarioKind::subsampled;
    pair.label.q = label.at("q").get<double>();
    pair.label.clip = label.at("C").get<double>();
  } else {
    throw std::invalid_argument(where + ": unknown label type \"" + type + "\"");
  }
  for (double m : pair.a)
    if (!(m >= 0.0)) throw std::invalid_argument(where + ": negative mass in a");
  for (double m : pair.b)
    if (!(m >= 0.0)) throw std::invalid_argument(where + ": negative mass in b");
  if (std::abs(stable_sum(pair.a) - 1.0) > 1e-12 || std::abs(stable_sum(pair.b) - 1.0) > 1e-12)
    throw std::invalid_argument(where + ": masses must each sum to 1");
  return pair;
}

inline void save_pair(const WorstCasePair& pair, const std::filesystem::path& path) {
  atomic_write(path, pair_to_json(pair).dump(2) + "\n");
}

inline WorstCasePair load_pair(const std::filesystem::path& path) {
  return pair_from_json(detail::load_json_file(path), path.string());
}

// ---- DeltaCurve CSV ----------------------------------------------------------

inline std::string curve_to_csv(const DeltaCurve& curve, bool oracle_columns = false,
                                const std::vector<std::pair<double, double>>* oracle = nullptr) {
  std::ostringstream out;
  out << "accountant,n,eps,delta_ab,delta_ba,delta";
  if (oracle_columns) out << ",oracle_ab,oracle_ba";
  out << "\n";
  for (std::size_t i = 0; i < curve.rows.size(); ++i) {
    const auto& r = curve.rows[i];
    out << r.accountant << ',' << r.n << ',' << format_full(r.eps) << ','
        << format_full(r.delta_ab) << ',' << format_full(r.delta_ba) << ','
        << format_full(r.delta);
    if (oracle_columns) {
      if (oracle && i < oracle->size())
        out << ',' << format_full((*oracle)[i].first) << ',' << format_full((*oracle)[i].second);
      else
        out << ",,";
    }
    out << "\n";
  }
  return out.str();
}

/// Per-epoch metrics sidecar for a training run.
inline std::string trace_to_csv(const std::vector<EpochTrace>& trace) {
  std::ostringstream out;
  out << "epoch,total,lx,utility,w_t,lr\n";
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const auto& t = trace[i];
    out << i << ',' << format_full(t.total) << ',' << format_full(t.lx) << ','
        << format_full(t.utility) << ',' << format_full(t.weight) << ',' << format_full(t.lr)
        << "\n";
  }
  return out.str();
}

// ---- RunConfig: schema-validated optimize configuration ---------------------

struct RunConfig {
  TrainConfig train;
  std::filesystem::path output_dir = "out";
  std::vector<double> report_eps;  // eps grid for the post-hoc curve
};

inline diff::Accountant accountant_from_string(const std::string& name) {
  if (name == "ma") return diff::Accountant::ma;
  if (name == "adp") return diff::Accountant::adp;
  if (name == "pdp") return diff::Accountant::pdp;
  throw std::invalid_argument("unknown accountant \"" + name + "\" (expected ma, adp, or pdp)");
}

inline RunConfig run_config_from_json(const json& j) {
  detail::reject_unknown_keys(
      j,
      {"grid", "accountant", "utility_order", "eps", "compositions", "epochs", "learning_rate",
       "lr_decay", "utility_weight", "buckets", "scenario", "model", "seed", "output_dir",
       "report", "index_surrogates", "lambda_sq_init"},
      "run config");
  RunConfig rc;
  TrainConfig& t = rc.train;

  const auto& g = j.at("grid");
  detail::reject_unknown_keys(g, {"half_width", "half_points", "bias"}, "grid");
  t.grid = GridSpec(g.at("half_width").get<double>(), g.at("half_points").get<long>(),
                    g.value("bias", 1e-5));

  t.accountant = accountant_from_string(j.at("accountant").get<std::string>());
  t.utility_order = j.value("utility_order", 1L);
  t.eps = j.at("eps").get<double>();
  t.compositions = j.value("compositions", 1L);
  t.epochs = j.at("epochs").get<long>();
  t.learning_rate = j.value("learning_rate", 0.001);
  t.lr_decay = j.value("lr_decay", 0.99995);

  if (j.contains("utility_weight")) {
    const auto& w = j.at("utility_weight");
    detail::reject_unknown_keys(w, {"start", "halving_period", "min", "decay"}, "utility_weight");
    t.utility.start = w.value("start", 0.5);
    t.utility.halving_period = w.value("halving_period", 2500.0);
    t.utility.floor = w.value("min", 1e-7);
    t.utility.decay = w.value("decay", true);
  }

  if (t.accountant_uses_buckets()) {
    const auto& b = j.at("buckets");
    detail::reject_unknown_keys(b, {"half_count", "factor"}, "buckets");
    t.buckets = BucketConfig(b.at("half_count").get<long>(), b.at("factor").get<double>());
    t.buckets.validate_for_training();
  }

  const auto& s = j.at("scenario");
  const std::string kind = s.at("kind").get<std::string>();
  if (kind == "sensitivity") {
    detail::reject_unknown_keys(s, {"kind", "s"}, "scenario");
    t.scenario = {ScenarioKind::sensitivity, s.at("s").get<double>(), 0.0, false};
  } else if (kind == "dpsgd") {
    detail::reject_unknown_keys(s, {"kind", "q", "clip", "direction"}, "scenario");
    const std::string direction = s.value("direction", "ba");
    if (direction != "ab" && direction != "ba")
      throw std::invalid_argument("scenario direction must be \"ab\" or \"ba\"");
    t.scenario = {ScenarioKind::subsampled, s.at("clip").get<double>(), s.at("q").get<double>(),
                  direction == "ba"};
  } else {
    throw std::invalid_argument("unknown scenario kind \"" + kind + "\"");
  }

  const auto& m = j.at("model");
  detail::reject_unknown_keys(m, {"stack_size", "slope"}, "model");
  t.stack_size = m.at("stack_size").get<long>();
  t.slope = m.value("slope", 500.0);

  t.seed = j.value("seed", 1UL);
  t.diff_options.index_surrogates = j.value("index_surrogates", true);
  t.lambda_sq_init = j.value("lambda_sq_init", 1.0);

  rc.output_dir = j.value("output_dir", std::string("out"));
  if (j.contains("report")) {
    const auto& r = j.at("report");
    detail::reject_unknown_keys(r, {"eps_list"}, "report");
    if (r.contains("eps_list")) rc.report_eps = r.at("eps_list").get<std::vector<double>>();
  }
  t.validate();
  return rc;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  return run_config_from_json(detail::load_json_file(path));
}

}  // namespace truncnoise
