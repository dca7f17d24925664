// report.hpp -- evaluation results for one run: basic-metric matrices plus
// the AP/AF/INT/FWT curves and final values, serializable to JSON. Undefined
// entries are emitted as nulls, never as sentinel numbers.

#pragma once

#include "grapal/metrics.hpp"
#include "grapal/types.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace grapal {

using json = nlohmann::json;

struct Report {
  Setting setting = Setting::task_il;
  Level level = Level::node;
  i64 n_tasks = 0;
  std::string primary_metric;
  std::map<std::string, PerformanceMatrix> matrices;
  std::optional<PerformanceMatrix> joint;        // M^Joint (diagonal used by INT)
  std::optional<std::vector<double>> baseline;   // r_i per task (size N)
  std::vector<u64> seeds;
  json config_echo;

  const PerformanceMatrix& primary() const { return matrices.at(primary_metric); }

  // FWT is reported for Domain-IL by default; other settings only on request.
  bool fwt_applicable() const { return setting == Setting::domain_il; }

  std::optional<double> final_ap() const { return n_tasks >= 1 ? std::optional(ap(primary(), n_tasks)) : std::nullopt; }
  std::optional<double> final_af() const { return n_tasks >= 2 ? std::optional(af(primary(), n_tasks)) : std::nullopt; }
  std::optional<double> final_int() const {
    if (!joint || n_tasks < 1) return std::nullopt;
    return intransigence(primary(), *joint, n_tasks);
  }
  std::optional<double> final_fwt() const {
    if (!baseline || n_tasks < 2) return std::nullopt;
    return fwt(primary(), *baseline, n_tasks);
  }
};

namespace detail {

inline json matrix_json(const PerformanceMatrix& m) {
  json rows = json::array();
  for (i64 i = 1; i <= m.size(); ++i) {
    json row = json::array();
    for (i64 j = 1; j <= m.size(); ++j)
      row.push_back(m.is_set(i, j) ? json(m.at(i, j)) : json(nullptr));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline json opt_json(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

}  // namespace detail

// Performance content only (everything except the config echo); two runs with
// identical trajectories serialize to identical bytes here.
inline json report_core_json(const Report& r) {
  json out;
  out["setting"] = to_string(r.setting);
  out["level"] = to_string(r.level);
  out["n_tasks"] = r.n_tasks;
  out["primary_metric"] = r.primary_metric;
  json mats;
  for (const auto& [name, m] : r.matrices) mats[name] = detail::matrix_json(m);
  out["matrices"] = std::move(mats);
  out["joint_matrix"] = r.joint ? detail::matrix_json(*r.joint) : json(nullptr);
  out["r"] = r.baseline ? json(*r.baseline) : json(nullptr);

  json ap_curve = json::array(), af_curve = json::array(), int_curve = json::array(),
       fwt_curve = json::array();
  const PerformanceMatrix& m = r.primary();
  for (i64 k = 1; k <= r.n_tasks; ++k) {
    ap_curve.push_back(ap(m, k));
    af_curve.push_back(k >= 2 ? json(af(m, k)) : json(nullptr));
    int_curve.push_back(r.joint ? json(intransigence(m, *r.joint, k)) : json(nullptr));
    fwt_curve.push_back(r.baseline && k >= 2 ? json(fwt(m, *r.baseline, k)) : json(nullptr));
  }
  out["ap_curve"] = ap_curve;
  out["curves"] = {{"ap", ap_curve}, {"af", af_curve}, {"int", int_curve}, {"fwt", fwt_curve}};
  out["final"] = {{"AP", detail::opt_json(r.final_ap())},
                  {"AF", detail::opt_json(r.final_af())},
                  {"INT", detail::opt_json(r.final_int())},
                  {"FWT", detail::opt_json(r.final_fwt())}};
  out["seeds"] = r.seeds;
  return out;
}

inline json report_to_json(const Report& r) {
  json out = report_core_json(r);
  out["config"] = r.config_echo;
  return out;
}

}  // namespace grapal
