#ifndef PROCUR_REPORT_IO_HPP
#define PROCUR_REPORT_IO_HPP

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "procur/mechanisms.hpp"
#include "procur/simulate.hpp"

namespace procur {

// Every floating-point value leaves the process through fmt9/round9 so that
// repeated runs diff cleanly regardless of how the last bits came out.
inline std::string fmt9(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

inline double round9(double x) { return std::strtod(fmt9(x).c_str(), nullptr); }

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Per-sample CSV over one or more mechanism batches run on the same samples:
//   sample_id, mechanism, revenue, social_welfare, x_1..x_K, p_total, broker_profit
inline void write_batch_csv(std::ostream& os, const std::vector<BatchResult>& batches) {
  if (batches.empty() || batches.front().outcomes.empty()) return;
  const int K = static_cast<int>(batches.front().outcomes.front().alloc.x.size());
  os << "sample_id,mechanism,revenue,social_welfare";
  for (int k = 1; k <= K; ++k) os << ",x_" << k;
  os << ",p_total,broker_profit\n";
  for (const auto& b : batches) {
    for (std::size_t i = 0; i < b.outcomes.size(); ++i) {
      const MechanismOutcome& o = b.outcomes[i];
      os << i << ',' << to_string(b.id) << ',' << fmt9(o.revenue) << ','
         << fmt9(o.social_welfare);
      for (double x : o.alloc.x) os << ',' << fmt9(x);
      os << ',' << fmt9(o.platform_outlay) << ',' << fmt9(o.broker_profit) << '\n';
    }
  }
}

// Demand-grid CSV: d1, d2, x1, x2, slack1, slack2, over1, over2
inline void write_demand_grid_csv(std::ostream& os, const std::vector<DemandGridRow>& rows) {
  os << "d1,d2,x1,x2,slack1,slack2,over1,over2\n";
  for (const auto& r : rows)
    os << fmt9(r.d1) << ',' << fmt9(r.d2) << ',' << fmt9(r.x1) << ',' << fmt9(r.x2)
       << ',' << fmt9(r.slack1) << ',' << fmt9(r.slack2) << ',' << (r.over1 ? 1 : 0)
       << ',' << (r.over2 ? 1 : 0) << '\n';
}

// Paired ablation CSV: one row per sample, with and without transfers.
inline void write_ablation_csv(std::ostream& os, const AblationReport& rep) {
  os << "sample_id,revenue_with,revenue_without,welfare_with,welfare_without,"
        "revenue_delta,welfare_delta\n";
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    const AblationRow& r = rep.rows[i];
    os << i << ',' << fmt9(r.revenue_with) << ',' << fmt9(r.revenue_without) << ','
       << fmt9(r.welfare_with) << ',' << fmt9(r.welfare_without) << ','
       << fmt9(r.revenue_with - r.revenue_without) << ','
       << fmt9(r.welfare_with - r.welfare_without) << '\n';
  }
}

inline nlohmann::json summary_to_json(const SummaryStats& s) {
  return {{"n", s.n},
          {"mean", round9(s.mean)},
          {"std_error", round9(s.std_error)},
          {"min", round9(s.min)},
          {"q1", round9(s.q1)},
          {"median", round9(s.median)},
          {"q3", round9(s.q3)},
          {"max", round9(s.max)},
          {"outliers_low", s.outliers_low},
          {"outliers_high", s.outliers_high}};
}

inline nlohmann::json ordering_to_json(const OrderingCheck& c) {
  nlohmann::json j{{"name", c.name},
                   {"pass", c.pass},
                   {"deterministic", c.deterministic},
                   {"mean_diff", round9(c.mean_diff)},
                   {"tolerance", round9(c.tolerance)}};
  if (c.deterministic) {
    j["max_abs_diff"] = round9(c.max_abs_diff);
  } else {
    j["std_error"] = round9(c.std_error);
    j["margin_se"] = round9(c.margin_se);
  }
  return j;
}

inline nlohmann::json comparison_to_json(const ComparisonReport& rep) {
  nlohmann::json j;
  j["generated_at"] = utc_timestamp();
  j["samples"] = rep.samples;
  j["seed"] = rep.seed;
  j["mechanisms"] = nlohmann::json::object();
  for (const auto& b : rep.batches)
    j["mechanisms"][to_string(b.id)] = {{"revenue", summary_to_json(b.revenue)},
                                        {"welfare", summary_to_json(b.welfare)}};
  j["orderings"] = nlohmann::json::array();
  for (const auto& c : rep.checks) j["orderings"].push_back(ordering_to_json(c));
  j["m3"] = {{"revenue_lower", round9(rep.m3.revenue_lower)},
             {"revenue_upper", round9(rep.m3.revenue_upper)},
             {"revenue_upper_se", round9(rep.m3.revenue_upper_se)},
             {"welfare_upper", round9(rep.m3.welfare_upper)},
             {"welfare_upper_se", round9(rep.m3.welfare_upper_se)},
             {"samples", rep.m3.samples}};
  j["all_pass"] = rep.all_pass;
  return j;
}

inline nlohmann::json certification_to_json(const CertificationReport& rep) {
  nlohmann::json regret = nlohmann::json::array();
  for (double r : rep.ic_regret) regret.push_back(round9(r));
  nlohmann::json freq = nlohmann::json::array();
  for (double f : rep.overproduction_frequency) freq.push_back(round9(f));
  return {{"generated_at", utc_timestamp()},
          {"mechanism", to_string(rep.id)},
          {"ic_regret", regret},
          {"max_ic_regret", round9(rep.max_ic_regret)},
          {"min_ir_utility", round9(rep.min_ir_utility)},
          {"validity_violations", rep.validity_violations},
          {"worst_validity_violation", round9(rep.worst_validity_violation)},
          {"overproduction_frequency", freq},
          {"cost_samples", rep.cost_samples},
          {"deviation_grid", rep.deviation_grid}};
}

inline nlohmann::json validity_to_json(const ValidityReport& rep) {
  return {{"mechanism", to_string(rep.id)},
          {"points_checked", rep.points_checked},
          {"violations", rep.violations},
          {"worst_violation", round9(rep.worst_violation)}};
}

inline nlohmann::json ablation_to_json(const AblationReport& rep) {
  return {{"generated_at", utc_timestamp()},
          {"mechanism", to_string(rep.id)},
          {"samples", rep.samples},
          {"mean_revenue_with", round9(rep.mean_revenue_with)},
          {"mean_revenue_without", round9(rep.mean_revenue_without)},
          {"mean_welfare_with", round9(rep.mean_welfare_with)},
          {"mean_welfare_without", round9(rep.mean_welfare_without)},
          {"revenue_gain_pct", round9(rep.revenue_gain_pct)},
          {"welfare_gain_pct", round9(rep.welfare_gain_pct)},
          {"worst_revenue_regression", round9(rep.worst_revenue_regression)},
          {"worst_welfare_regression", round9(rep.worst_welfare_regression)},
          {"per_sample_dominance", rep.per_sample_dominance}};
}

inline nlohmann::json outcome_to_json(const MechanismOutcome& o) {
  nlohmann::json j;
  j["mechanism"] = to_string(o.id);
  nlohmann::json report = nlohmann::json::array();
  for (double c : o.report) report.push_back(round9(c));
  j["report"] = report;
  nlohmann::json x = nlohmann::json::array(), y = nlohmann::json::array();
  for (double v : o.alloc.x) x.push_back(round9(v));
  for (double v : o.alloc.y) y.push_back(round9(v));
  j["x"] = x;
  j["y"] = y;
  if (!o.creator_payments.empty()) {
    nlohmann::json p = nlohmann::json::array();
    for (double v : o.creator_payments) p.push_back(round9(v));
    j["creator_payments"] = p;
  }
  if (o.id == MechanismId::M4) {
    j["union_payment"] = round9(o.union_payment);
    j["union_payment_closed_form"] = round9(o.union_payment_closed_form);
  }
  if (o.contract) {
    nlohmann::json z = nlohmann::json::array();
    for (double v : o.contract->z) z.push_back(round9(v));
    j["contract"] = {{"z", z}, {"t", round9(o.contract->t)}};
  }
  j["platform_outlay"] = round9(o.platform_outlay);
  j["revenue"] = round9(o.revenue);
  j["social_welfare"] = round9(o.social_welfare);
  j["broker_profit"] = round9(o.broker_profit);
  j["payment_error_estimate"] = round9(o.payment_error_estimate);
  j["solver_calls"] = o.solver_calls;
  return j;
}

}  // namespace procur

#endif
