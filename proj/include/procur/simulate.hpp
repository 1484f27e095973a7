#ifndef PROCUR_SIMULATE_HPP
#define PROCUR_SIMULATE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "procur/market.hpp"
#include "procur/mechanisms.hpp"
#include "procur/rng.hpp"

namespace procur {

// Row i of the returned matrix is drawn from a stream derived from (seed, i),
// so the draw for a given sample index does not depend on how many samples
// were requested.
inline std::vector<std::vector<double>> sample_costs(const MarketConfig& cfg,
                                                     std::uint64_t seed, int n) {
  if (n < 1) throw std::invalid_argument("sample_costs: n must be >= 1");
  std::vector<std::vector<double>> out(n);
  for (int i = 0; i < n; ++i) {
    RngStream rs = derive_stream(seed, static_cast<std::uint64_t>(i));
    out[i].resize(cfg.K);
    for (int k = 0; k < cfg.K; ++k) out[i][k] = cfg.cost_law[k].sample(rs);
  }
  return out;
}

struct SummaryStats {
  int n = 0;
  double mean = 0.0;
  double std_error = 0.0;
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
  int outliers_low = 0;   // below q1 - 1.5 IQR
  int outliers_high = 0;  // above q3 + 1.5 IQR
};

inline SummaryStats summarize(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("summarize: empty sample");
  SummaryStats s;
  s.n = static_cast<int>(v.size());
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / s.n;
  if (s.n > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.std_error = std::sqrt(ss / (s.n - 1) / s.n);
  }
  std::sort(v.begin(), v.end());
  auto quantile = [&](double p) {
    const double h = (s.n - 1) * p;
    const int lo = static_cast<int>(h);
    const int hi = std::min(lo + 1, s.n - 1);
    return v[lo] + (h - lo) * (v[hi] - v[lo]);
  };
  s.min = v.front();
  s.q1 = quantile(0.25);
  s.median = quantile(0.5);
  s.q3 = quantile(0.75);
  s.max = v.back();
  const double iqr = s.q3 - s.q1;
  for (double x : v) {
    if (x < s.q1 - 1.5 * iqr) ++s.outliers_low;
    if (x > s.q3 + 1.5 * iqr) ++s.outliers_high;
  }
  return s;
}

struct BatchResult {
  MechanismId id = MechanismId::M1;
  std::vector<MechanismOutcome> outcomes;
  SummaryStats revenue;
  SummaryStats welfare;
};

// Runs one mechanism over every cost row. M5/M6 sign their contract before
// costs realize, so the stage-1 solve happens once and only the cost-dependent
// fields are refreshed per row.
inline BatchResult evaluate_batch(const MarketConfig& cfg, MechanismId id,
                                  const std::vector<std::vector<double>>& costs,
                                  const QuadratureSpec& quad = {}, double tol = 1e-8) {
  if (costs.empty()) throw std::invalid_argument("evaluate_batch: no cost samples");
  BatchResult out;
  out.id = id;
  out.outcomes.reserve(costs.size());
  SolveCache cache;

  const bool fixed_contract = (id == MechanismId::M5 || id == MechanismId::M6);
  MechanismOutcome proto;
  for (std::size_t i = 0; i < costs.size(); ++i) {
    try {
      if (fixed_contract) {
        if (i == 0) proto = run_mechanism(cfg, id, costs[i], quad, tol, &cache);
        MechanismOutcome o = proto;
        o.report = costs[i];
        o.social_welfare = -procur::detail::dot(costs[i], o.alloc.y);
        out.outcomes.push_back(std::move(o));
      } else {
        out.outcomes.push_back(run_mechanism(cfg, id, costs[i], quad, tol, &cache));
      }
    } catch (const std::exception& e) {
      throw std::runtime_error("evaluate_batch: sample " + std::to_string(i) + ": " +
                               e.what());
    }
  }

  std::vector<double> rev(costs.size()), wel(costs.size());
  for (std::size_t i = 0; i < costs.size(); ++i) {
    rev[i] = out.outcomes[i].revenue;
    wel[i] = out.outcomes[i].social_welfare;
  }
  out.revenue = summarize(std::move(rev));
  out.welfare = summarize(std::move(wel));
  return out;
}

struct OrderingCheck {
  std::string name;
  bool deterministic = false;  // equality within tolerance vs mean within margin
  double mean_diff = 0.0;      // mean of lhs - rhs over samples
  double std_error = 0.0;
  double margin_se = 0.0;      // mean_diff in standard-error units
  double max_abs_diff = 0.0;   // deterministic checks only
  double tolerance = 0.0;
  bool pass = false;
};

namespace detail {

inline std::vector<double> batch_metric(const BatchResult& b, bool revenue) {
  std::vector<double> v(b.outcomes.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    v[i] = revenue ? b.outcomes[i].revenue : b.outcomes[i].social_welfare;
  return v;
}

inline OrderingCheck check_ge(const std::string& name, const std::vector<double>& lhs,
                              const std::vector<double>& rhs, double se_margin) {
  std::vector<double> diff(lhs.size());
  for (std::size_t i = 0; i < lhs.size(); ++i) diff[i] = lhs[i] - rhs[i];
  const SummaryStats s = summarize(std::move(diff));
  OrderingCheck c;
  c.name = name;
  c.mean_diff = s.mean;
  c.std_error = s.std_error;
  c.margin_se = s.std_error > 0.0 ? s.mean / s.std_error
                                  : (s.mean >= 0.0 ? std::numeric_limits<double>::infinity()
                                                   : -std::numeric_limits<double>::infinity());
  c.tolerance = se_margin;
  c.pass = s.mean >= -se_margin * s.std_error;
  return c;
}

inline OrderingCheck check_eq(const std::string& name, const std::vector<double>& lhs,
                              const std::vector<double>& rhs, double tol) {
  OrderingCheck c;
  c.name = name;
  c.deterministic = true;
  c.tolerance = tol;
  double sum = 0.0;
  for (std::size_t i = 0; i < lhs.size(); ++i) {
    const double d = lhs[i] - rhs[i];
    sum += d;
    c.max_abs_diff = std::max(c.max_abs_diff, std::abs(d));
  }
  c.mean_diff = sum / static_cast<double>(lhs.size());
  c.pass = c.max_abs_diff <= tol;
  return c;
}

}  // namespace detail

struct ComparisonReport {
  int samples = 0;
  std::uint64_t seed = 0;
  std::vector<BatchResult> batches;  // M1, M2, M4, M5, M6 in that order
  std::vector<OrderingCheck> checks;
  M3Bounds m3;
  bool all_pass = false;
};

// Runs the five implemented mechanisms on shared cost samples and verdicts
// the revenue and welfare orderings. Inequalities are judged on the paired
// per-sample differences at se_margin standard errors; the two identities
// (union payment vs broker transfer, and their shared allocation's welfare)
// must hold per sample within eq_tol.
inline ComparisonReport compare_mechanisms(const MarketConfig& cfg, int n_samples,
                                           std::uint64_t seed,
                                           const QuadratureSpec& quad = {},
                                           double tol = 1e-8, double se_margin = 2.0,
                                           double eq_tol = 1e-4) {
  const auto costs = sample_costs(cfg, seed, n_samples);
  ComparisonReport rep;
  rep.samples = n_samples;
  rep.seed = seed;
  const MechanismId ids[] = {MechanismId::M1, MechanismId::M2, MechanismId::M4,
                             MechanismId::M5, MechanismId::M6};
  for (MechanismId id : ids) rep.batches.push_back(evaluate_batch(cfg, id, costs, quad, tol));

  const auto rev = [&](int i) { return detail::batch_metric(rep.batches[i], true); };
  const auto wel = [&](int i) { return detail::batch_metric(rep.batches[i], false); };
  const auto r1 = rev(0), r2 = rev(1), r4 = rev(2), r5 = rev(3), r6 = rev(4);
  const auto w1 = wel(0), w2 = wel(1), w4 = wel(2), w5 = wel(3), w6 = wel(4);

  rep.checks.push_back(detail::check_ge("Rev(M1) >= Rev(M2)", r1, r2, se_margin));
  rep.checks.push_back(detail::check_ge("Rev(M2) >= Rev(M4)", r2, r4, se_margin));
  rep.checks.push_back(detail::check_eq("Rev(M4) == Rev(M5)", r4, r5, eq_tol));
  rep.checks.push_back(detail::check_ge("Rev(M5) >= Rev(M6)", r5, r6, se_margin));
  rep.checks.push_back(detail::check_eq("SW(M2) == SW(M4)", w2, w4, eq_tol));
  rep.checks.push_back(detail::check_ge("SW(M2) >= SW(M1)", w2, w1, se_margin));
  rep.checks.push_back(detail::check_ge("SW(M2) >= SW(M5)", w2, w5, se_margin));
  rep.checks.push_back(detail::check_ge("SW(M2) >= SW(M6)", w2, w6, se_margin));
  rep.checks.push_back(detail::check_ge("SW(M6) >= SW(M5)", w6, w5, se_margin));

  // M3 sandwich from the already-computed batches: its revenue lies between
  // the fixed-contract value and the per-creator optimum, and its welfare is
  // capped by the welfare-optimal screening mechanism.
  const SummaryStats s1 = rep.batches[0].revenue;
  const SummaryStats sw2 = rep.batches[1].welfare;
  rep.m3.samples = n_samples;
  rep.m3.revenue_lower = rep.batches[3].outcomes.front().revenue;
  rep.m3.revenue_upper = s1.mean;
  rep.m3.revenue_upper_se = s1.std_error;
  rep.m3.welfare_upper = sw2.mean;
  rep.m3.welfare_upper_se = sw2.std_error;

  rep.all_pass = true;
  for (const auto& c : rep.checks) rep.all_pass = rep.all_pass && c.pass;
  return rep;
}

struct CertificationReport {
  MechanismId id = MechanismId::M1;
  std::vector<double> ic_regret;  // per domain; single entry for the union case
  double max_ic_regret = 0.0;
  double min_ir_utility = 0.0;
  int validity_violations = 0;
  double worst_validity_violation = 0.0;
  std::vector<double> overproduction_frequency;
  int cost_samples = 0;
  int deviation_grid = 0;
};

// Applied to each truthful outcome before utilities are measured; lets tests
// corrupt payments and confirm the certifier notices.
using OutcomeHook = std::function<void(MechanismOutcome&)>;

namespace detail {

inline std::vector<double> even_grid(double lo, double hi, int n) {
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i)
    g[i] = n == 1 ? lo : lo + (hi - lo) * i / (n - 1);
  return g;
}

}  // namespace detail

// Empirical incentive check: sweeps misreports against truthful runs on
// sampled costs and records the worst utility gain a deviation achieves and
// the worst truthful utility. For M1/M2 each creator deviates alone on an
// axis grid; for M4 the union deviates as a vector (full product grid up to
// 5 domains, 200 random deviations beyond that); M5/M6 creators report
// nothing, so regret is identically zero and only participation is measured.
inline CertificationReport certify_ic_ir(const MarketConfig& cfg, MechanismId id,
                                         int n_costs, int deviation_grid_n,
                                         std::uint64_t seed,
                                         const QuadratureSpec& quad = {},
                                         double tol = 1e-8,
                                         const OutcomeHook& hook = {}) {
  if (deviation_grid_n < 3)
    throw std::invalid_argument("certify_ic_ir: deviation grid needs >= 3 points");
  const auto costs = sample_costs(cfg, seed, n_costs);
  const auto a = lower_supports(cfg);
  const auto b = upper_supports(cfg);

  CertificationReport rep;
  rep.id = id;
  rep.cost_samples = n_costs;
  rep.deviation_grid = deviation_grid_n;
  const bool union_case = (id == MechanismId::M4);
  rep.ic_regret.assign(union_case ? 1 : cfg.K, 0.0);
  rep.min_ir_utility = std::numeric_limits<double>::infinity();
  rep.overproduction_frequency.assign(cfg.K, 0.0);

  SolveCache cache;
  const bool per_creator = (id == MechanismId::M1 || id == MechanismId::M2);
  const WeightRule rule =
      (id == MechanismId::M1) ? WeightRule::virtual_cost : WeightRule::identity;

  for (const auto& c : costs) {
    MechanismOutcome truth = run_mechanism(cfg, id, c, quad, tol, &cache);
    if (hook) hook(truth);

    const auto sv = slack(cfg, truth.alloc.x);
    for (int k = 0; k < cfg.K; ++k)
      if (sv.overproduced[k]) rep.overproduction_frequency[k] += 1.0;

    if (per_creator) {
      for (int k = 0; k < cfg.K; ++k) {
        const double u_truth = truth.creator_payments[k] - c[k] * truth.alloc.y[k];
        rep.min_ir_utility = std::min(rep.min_ir_utility, u_truth);
        std::vector<double> misreport = c;
        for (double r : detail::even_grid(a[k], b[k], deviation_grid_n)) {
          misreport[k] = r;
          const auto base = cache.solve(cfg, solver_weights(cfg, rule, misreport), tol);
          const auto pay = myerson_payment(cfg, rule, misreport, k, quad, tol, &cache);
          const double u_dev = pay.value - c[k] * base.y[k];
          rep.ic_regret[k] = std::max(rep.ic_regret[k], u_dev - u_truth);
        }
      }
    } else if (union_case) {
      const double u_truth =
          truth.union_payment - procur::detail::dot(c, truth.alloc.y);
      rep.min_ir_utility = std::min(rep.min_ir_utility, u_truth);

      std::vector<std::vector<double>> deviations;
      if (cfg.K <= 5) {
        deviations.assign(1, std::vector<double>(cfg.K, 0.0));
        for (int k = 0; k < cfg.K; ++k) {
          const auto axis = detail::even_grid(a[k], b[k], deviation_grid_n);
          std::vector<std::vector<double>> grown;
          grown.reserve(deviations.size() * axis.size());
          for (const auto& head : deviations)
            for (double r : axis) {
              grown.push_back(head);
              grown.back()[k] = r;
            }
          deviations = std::move(grown);
        }
      } else {
        RngStream rs = derive_stream(seed, 0x7eafull);
        deviations.assign(200, std::vector<double>(cfg.K));
        for (auto& dev : deviations)
          for (int k = 0; k < cfg.K; ++k)
            dev[k] = a[k] + (b[k] - a[k]) * rs.uniform01();
      }
      for (const auto& dev : deviations) {
        const auto base = cache.solve(cfg, dev, tol);
        const auto pay =
            path_integral_payment(cfg, WeightRule::identity, dev, default_path(cfg),
                                  quad, tol, &cache);
        const double u_dev = pay.value - procur::detail::dot(c, base.y);
        rep.ic_regret[0] = std::max(rep.ic_regret[0], u_dev - u_truth);
      }
    } else {
      // Fixed-contract stage 2: the offer p_k = b_k z_k^rho_k is report-free.
      for (int k = 0; k < cfg.K; ++k) {
        const double u = truth.creator_payments[k] - c[k] * truth.alloc.y[k];
        rep.min_ir_utility = std::min(rep.min_ir_utility, u);
      }
    }
  }

  for (double& f : rep.overproduction_frequency) f /= n_costs;
  for (double r : rep.ic_regret) rep.max_ic_regret = std::max(rep.max_ic_regret, r);
  return rep;
}

struct ValidityReport {
  MechanismId id = MechanismId::M1;
  int points_checked = 0;
  int violations = 0;
  double worst_violation = 0.0;
};

// Allocation monotonicity sweep around the support midpoint: raising a
// creator's own cost must not raise its production, and must not cut any
// other creator's production, both up to mono_tol.
inline ValidityReport certify_validity(const MarketConfig& cfg, MechanismId id,
                                       int grid_n, double tol = 1e-8,
                                       double mono_tol = 1e-4) {
  if (grid_n < 3) throw std::invalid_argument("certify_validity: grid needs >= 3 points");
  const auto a = lower_supports(cfg);
  const auto b = upper_supports(cfg);
  std::vector<double> base(cfg.K);
  for (int k = 0; k < cfg.K; ++k) base[k] = 0.5 * (a[k] + b[k]);

  ValidityReport rep;
  rep.id = id;
  SolveCache cache;
  for (int k = 0; k < cfg.K; ++k) {
    std::vector<double> c = base;
    std::vector<double> prev;
    for (double r : detail::even_grid(a[k], b[k], grid_n)) {
      c[k] = r;
      const auto alloc = mechanism_allocation(cfg, id, c, tol, &cache);
      ++rep.points_checked;
      if (!prev.empty()) {
        for (int j = 0; j < cfg.K; ++j) {
          const double step = alloc.x[j] - prev[j];
          const double viol = (j == k) ? step : -step;
          if (viol > mono_tol) {
            ++rep.violations;
            rep.worst_violation = std::max(rep.worst_violation, viol);
          }
        }
      }
      prev = alloc.x;
    }
  }
  return rep;
}

struct OverproductionScan {
  Allocation alloc;
  std::vector<double> slack;
  std::vector<bool> flag;  // slack > cfg.overproduction_tol
};

inline OverproductionScan overproduction_scan(const MarketConfig& cfg,
                                              const std::vector<double>& c,
                                              MechanismId id, double tol = 1e-8) {
  OverproductionScan out;
  out.alloc = mechanism_allocation(cfg, id, c, tol);
  const auto sv = slack(cfg, out.alloc.x);
  out.slack = sv.value;
  out.flag.assign(cfg.K, false);
  for (int k = 0; k < cfg.K; ++k) out.flag[k] = sv.overproduced[k];
  return out;
}

struct DemandGridRow {
  double d1 = 0.0, d2 = 0.0;
  double x1 = 0.0, x2 = 0.0;
  double slack1 = 0.0, slack2 = 0.0;
  bool over1 = false, over2 = false;
};

// Two-domain demand sweep at fixed realized costs: resolution points per axis
// over [d1_lo,d1_hi] x [d2_lo,d2_hi].
inline std::vector<DemandGridRow> demand_grid_scan(const MarketConfig& cfg,
                                                   const std::vector<double>& c,
                                                   double d1_lo, double d1_hi,
                                                   double d2_lo, double d2_hi,
                                                   int resolution,
                                                   MechanismId id = MechanismId::M2,
                                                   double tol = 1e-8) {
  if (cfg.K != 2) throw std::invalid_argument("demand_grid_scan: needs a 2-domain market");
  if (resolution < 2) throw std::invalid_argument("demand_grid_scan: resolution must be >= 2");
  if (!(d1_lo > 0.0 && d1_hi >= d1_lo && d2_lo > 0.0 && d2_hi >= d2_lo))
    throw std::invalid_argument("demand_grid_scan: demand ranges must be positive and ordered");
  std::vector<DemandGridRow> rows;
  rows.reserve(static_cast<std::size_t>(resolution) * resolution);
  MarketConfig grid_cfg = cfg;
  for (double d1 : detail::even_grid(d1_lo, d1_hi, resolution)) {
    for (double d2 : detail::even_grid(d2_lo, d2_hi, resolution)) {
      grid_cfg.demand = {d1, d2};
      const auto scan = overproduction_scan(grid_cfg, c, id, tol);
      DemandGridRow r;
      r.d1 = d1;
      r.d2 = d2;
      r.x1 = scan.alloc.x[0];
      r.x2 = scan.alloc.x[1];
      r.slack1 = scan.slack[0];
      r.slack2 = scan.slack[1];
      r.over1 = scan.flag[0];
      r.over2 = scan.flag[1];
      rows.push_back(r);
    }
  }
  return rows;
}

struct AblationRow {
  double revenue_with = 0.0, revenue_without = 0.0;
  double welfare_with = 0.0, welfare_without = 0.0;
};

struct AblationReport {
  MechanismId id = MechanismId::M1;
  int samples = 0;
  std::vector<AblationRow> rows;
  double mean_revenue_with = 0.0, mean_revenue_without = 0.0;
  double mean_welfare_with = 0.0, mean_welfare_without = 0.0;
  double revenue_gain_pct = 0.0;  // relative improvement vs the no-transfer mean
  double welfare_gain_pct = 0.0;
  double worst_revenue_regression = 0.0;  // min over rows of with - without
  double worst_welfare_regression = 0.0;
  bool per_sample_dominance = false;  // every row improves or ties (1e-6 slop)
};

inline MarketConfig without_transfers(const MarketConfig& cfg) {
  MarketConfig out = cfg;
  for (auto& row : out.transfer_rate) std::fill(row.begin(), row.end(), 0.0);
  return out;
}

// Paired runs of one mechanism with the configured transfers and with all
// transfer rates forced to zero, on identical cost samples.
inline AblationReport genai_ablation(const MarketConfig& cfg, MechanismId id,
                                     int n_samples, std::uint64_t seed,
                                     const QuadratureSpec& quad = {},
                                     double tol = 1e-8) {
  const auto costs = sample_costs(cfg, seed, n_samples);
  const auto with = evaluate_batch(cfg, id, costs, quad, tol);
  const auto without = evaluate_batch(without_transfers(cfg), id, costs, quad, tol);

  AblationReport rep;
  rep.id = id;
  rep.samples = n_samples;
  rep.rows.resize(n_samples);
  rep.worst_revenue_regression = std::numeric_limits<double>::infinity();
  rep.worst_welfare_regression = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n_samples; ++i) {
    AblationRow& r = rep.rows[i];
    r.revenue_with = with.outcomes[i].revenue;
    r.revenue_without = without.outcomes[i].revenue;
    r.welfare_with = with.outcomes[i].social_welfare;
    r.welfare_without = without.outcomes[i].social_welfare;
    rep.worst_revenue_regression =
        std::min(rep.worst_revenue_regression, r.revenue_with - r.revenue_without);
    rep.worst_welfare_regression =
        std::min(rep.worst_welfare_regression, r.welfare_with - r.welfare_without);
  }
  rep.mean_revenue_with = with.revenue.mean;
  rep.mean_revenue_without = without.revenue.mean;
  rep.mean_welfare_with = with.welfare.mean;
  rep.mean_welfare_without = without.welfare.mean;
  const auto gain_pct = [](double now, double before) {
    const double denom = std::abs(before);
    return denom > 0.0 ? 100.0 * (now - before) / denom : 0.0;
  };
  rep.revenue_gain_pct = gain_pct(rep.mean_revenue_with, rep.mean_revenue_without);
  rep.welfare_gain_pct = gain_pct(rep.mean_welfare_with, rep.mean_welfare_without);
  rep.per_sample_dominance = rep.worst_revenue_regression >= -1e-6 &&
                             rep.worst_welfare_regression >= -1e-6;
  return rep;
}

}  // namespace procur

#endif
