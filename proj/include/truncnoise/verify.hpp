#pragma once

#include <string>

#include <json.hpp>

#include "truncnoise/buckets.hpp"
#include "truncnoise/exact_oracle.hpp"
#include "truncnoise/moments.hpp"
#include "truncnoise/train.hpp"

namespace truncnoise {

/// Machine-readable verification of a noise file: structural checks, mass
/// normalization, the shift-invariance sweep, and (for desk-sized supports)
/// an oracle-vs-accountant soundness pass.
struct VerifyReport {
  StructureReport structure;
  bool normalization_ok = false;
  double mass_total = 0.0;
  ShiftInvarianceReport shift;
  bool oracle_checked = false;
  bool oracle_sound = true;
  double oracle_worst_slack = 0.0;  // most negative (bound - exact); >= 0 is sound
  bool direction_flip = false;     // MA dominating direction changed over lambda
  bool pass = false;
};

inline VerifyReport verify_noise(const NoisePmf& pmf, const diff::Scenario& scenario, double eps,
                                 std::size_t oracle_support_limit = 20) {
  VerifyReport rep;
  rep.structure = check_structure(pmf, 1e-12);
  rep.mass_total = pmf.total_mass();
  rep.normalization_ok = std::abs(rep.mass_total - 1.0) <= 1e-12;
  rep.shift = shift_invariance_check(pmf, scenario.shift, eps);

  const auto pair = build_pair(pmf, scenario);
  if (pair.support.size() <= oracle_support_limit) {
    rep.oracle_checked = true;
    const auto cfg = reference_config(pair, 4000);
    for (const auto& dir : {pair, swap_pair(pair)}) {
      const auto ld = loss_distribution(dir);
      const auto bl = bucketize(dir, cfg);
      for (long n : {1L, 2L}) {
        const auto exact = exact_compose(ld, n);
        const auto bln = compose(bl, n);
        const auto d = delta_from_loss(exact, eps);
        for (double slack : {delta_adp(bln, eps) - d.adp, delta_pdp(bln, eps) - d.pdp,
                             delta_ma(dir, n, eps) - d.adp}) {
          rep.oracle_worst_slack = std::min(rep.oracle_worst_slack, slack);
          if (slack < -1e-12) rep.oracle_sound = false;
        }
      }
    }
    rep.direction_flip = delta_ma_both(pair, 1, eps).direction_flip;
  }

  rep.pass = rep.structure.is_symmetric && rep.structure.is_monotone_from_center &&
             rep.normalization_ok && (!rep.shift.applicable || rep.shift.passed) &&
             rep.oracle_sound;
  return rep;
}

inline nlohmann::json verify_report_to_json(const VerifyReport& rep) {
  nlohmann::json j;
  j["structure"] = {{"is_symmetric", rep.structure.is_symmetric},
                    {"max_asymmetry", rep.structure.max_asymmetry},
                    {"is_monotone_from_center", rep.structure.is_monotone_from_center},
                    {"max_violation", rep.structure.max_violation}};
  j["normalization"] = {{"ok", rep.normalization_ok},
                        {"mass_total", rep.mass_total},
                        {"deficit", 1.0 - rep.mass_total}};
  j["shift_invariance"] = {{"applicable", rep.shift.applicable},
                           {"passed", rep.shift.passed},
                           {"delta_at_s", rep.shift.delta_at_s},
                           {"max_delta", rep.shift.max_delta},
                           {"argmax_shift", rep.shift.argmax_shift}};
  j["oracle"] = {{"checked", rep.oracle_checked},
                 {"sound", rep.oracle_sound},
                 {"worst_slack", rep.oracle_worst_slack},
                 {"ma_direction_flip", rep.direction_flip}};
  j["pass"] = rep.pass;
  return j;
}

}  // namespace truncnoise
