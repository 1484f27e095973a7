#ifndef PROCUR_MECHANISMS_HPP
#define PROCUR_MECHANISMS_HPP

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "procur/market.hpp"
#include "procur/payments.hpp"
#include "procur/solver.hpp"

namespace procur {

// M1/M2 deal with each creator separately (virtual-cost and true-cost
// weighted respectively); M4 pays a single creators' union; M5/M6 insert a
// broker layer that signs a fixed delivery contract before costs are known.
// M3 (revenue-optimal union) has no known algorithm; only bounds.
enum class MechanismId { M1, M2, M4, M5, M6 };

inline const char* to_string(MechanismId m) {
  switch (m) {
    case MechanismId::M1: return "M1";
    case MechanismId::M2: return "M2";
    case MechanismId::M4: return "M4";
    case MechanismId::M5: return "M5";
    case MechanismId::M6: return "M6";
  }
  return "?";
}

inline MechanismId mechanism_from_string(const std::string& s) {
  if (s == "M1") return MechanismId::M1;
  if (s == "M2") return MechanismId::M2;
  if (s == "M4") return MechanismId::M4;
  if (s == "M5") return MechanismId::M5;
  if (s == "M6") return MechanismId::M6;
  throw std::invalid_argument("unknown mechanism '" + s + "' (expected M1, M2, M4, M5 or M6)");
}

struct Contract {
  std::vector<double> z;  // committed per-domain deliveries (natural units)
  double t = 0.0;         // platform -> broker transfer
};

struct MechanismOutcome {
  MechanismId id = MechanismId::M1;
  std::vector<double> report;            // cost report the run was evaluated at
  Allocation alloc;                      // delivered production
  std::vector<double> creator_payments;  // per-domain (empty for M4)
  double union_payment = std::numeric_limits<double>::quiet_NaN();  // M4 only
  std::optional<Contract> contract;      // M5/M6 only
  double platform_outlay = 0.0;
  double revenue = 0.0;                  // = -platform_outlay
  double social_welfare = 0.0;           // = -sum_k report_k * y_k
  double broker_profit = 0.0;            // M5/M6: t - sum stage-2 payments
  double payment_error_estimate = 0.0;
  int solver_calls = 0;
  // M4 records the theoretical constant payment b.y(b) next to the quadrature
  // value so the discrepancy is observable.
  double union_payment_closed_form = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

inline double welfare_of(const std::vector<double>& c, const std::vector<double>& y) {
  return -dot(c, y);
}

inline MechanismOutcome run_per_creator(const MarketConfig& cfg, MechanismId id,
                                        WeightRule rule, const std::vector<double>& c,
                                        const QuadratureSpec& quad, double tol,
                                        SolveCache* cache) {
  require_in_support(cfg, c, to_string(id));
  SolveCache local;
  SolveCache& cc = cache ? *cache : local;

  MechanismOutcome out;
  out.id = id;
  out.report = c;
  const auto base = cc.solve(cfg, solver_weights(cfg, rule, c), tol);
  out.alloc = allocation_from_y(cfg, base.y);
  out.solver_calls = 1;

  out.creator_payments.resize(cfg.K);
  double total = 0.0;
  for (int k = 0; k < cfg.K; ++k) {
    const auto p = myerson_payment(cfg, rule, c, k, quad, tol, &cc);
    out.creator_payments[k] = p.value;
    out.payment_error_estimate += p.error_estimate;
    out.solver_calls += p.solver_calls;
    total += p.value;
  }
  out.platform_outlay = total;
  out.revenue = -total;
  out.social_welfare = welfare_of(c, base.y);
  return out;
}

}  // namespace detail

// Revenue-optimal screening: allocate against virtual costs, pay each creator
// its rent-compensated price.
inline MechanismOutcome run_M1(const MarketConfig& cfg, const std::vector<double>& c,
                               const QuadratureSpec& quad = {}, double tol = 1e-8,
                               SolveCache* cache = nullptr) {
  return detail::run_per_creator(cfg, MechanismId::M1, WeightRule::virtual_cost, c,
                                 quad, tol, cache);
}

// Welfare-optimal screening: allocate against reported costs themselves.
inline MechanismOutcome run_M2(const MarketConfig& cfg, const std::vector<double>& c,
                               const QuadratureSpec& quad = {}, double tol = 1e-8,
                               SolveCache* cache = nullptr) {
  return detail::run_per_creator(cfg, MechanismId::M2, WeightRule::identity, c, quad,
                                 tol, cache);
}

// Welfare-optimal purchase from a creators' union: allocation as M2, one
// payment equal to the line integral of the allocation up to the support top.
inline MechanismOutcome run_M4(const MarketConfig& cfg, const std::vector<double>& c,
                               const QuadratureSpec& quad = {}, double tol = 1e-8,
                               SolveCache* cache = nullptr,
                               const std::vector<int>* path = nullptr) {
  require_in_support(cfg, c, "M4");
  SolveCache local;
  SolveCache& cc = cache ? *cache : local;

  MechanismOutcome out;
  out.id = MechanismId::M4;
  out.report = c;
  const auto base = cc.solve(cfg, c, tol);
  out.alloc = allocation_from_y(cfg, base.y);

  const auto p = path_integral_payment(cfg, WeightRule::identity, c,
                                       path ? *path : default_path(cfg), quad, tol, &cc);
  out.union_payment = p.value;
  out.payment_error_estimate = p.error_estimate;
  out.solver_calls = 1 + p.solver_calls;

  const auto b = upper_supports(cfg);
  const auto top = cc.solve(cfg, b, tol);
  out.union_payment_closed_form = procur::detail::dot(b, top.y);
  ++out.solver_calls;

  out.platform_outlay = p.value;
  out.revenue = -p.value;
  out.social_welfare = detail::welfare_of(c, base.y);
  return out;
}

// Broker contract stage shared by M5/M6: commit to deliveries z from the
// allocation under the given weights, transfer t = b.y. The broker then runs
// a pay-your-ceiling second stage, p_k = b_k z_k^rho_k, which creators accept
// regardless of their realized cost, so the contract never defaults.
inline Contract design_contract(const MarketConfig& cfg, const std::vector<double>& weights,
                                double tol = 1e-8) {
  const auto res = solve_allocation(cfg, weights, tol);
  Contract ct;
  ct.z = res.x;
  ct.t = procur::detail::dot(upper_supports(cfg), res.y);
  return ct;
}

inline std::vector<double> stage2_payments(const MarketConfig& cfg, const Contract& ct) {
  std::vector<double> p(cfg.K);
  const auto b = upper_supports(cfg);
  for (int k = 0; k < cfg.K; ++k)
    p[k] = b[k] * std::pow(ct.z[k], cfg.cost_exponent[k]);
  return p;
}

namespace detail {

inline MechanismOutcome run_three_layer(const MarketConfig& cfg, MechanismId id,
                                        const std::vector<double>& weights,
                                        const std::vector<double>& c, double tol) {
  require_in_support(cfg, c, to_string(id));
  MechanismOutcome out;
  out.id = id;
  out.report = c;

  const Contract ct = design_contract(cfg, weights, tol);
  out.contract = ct;
  out.alloc = allocation_from_x(cfg, ct.z);
  out.creator_payments = stage2_payments(cfg, ct);
  out.solver_calls = 1;

  double stage2_total = 0.0;
  for (double p : out.creator_payments) stage2_total += p;
  out.broker_profit = ct.t - stage2_total;

  out.platform_outlay = ct.t;
  out.revenue = -ct.t;
  out.social_welfare = welfare_of(c, out.alloc.y);
  return out;
}

}  // namespace detail

// Three-layer revenue mechanism: the contract is designed against worst-case
// costs b, so the broker breaks even identically.
inline MechanismOutcome run_M5(const MarketConfig& cfg, const std::vector<double>& c,
                               double tol = 1e-8) {
  return detail::run_three_layer(cfg, MechanismId::M5, upper_supports(cfg), c, tol);
}

// Three-layer welfare mechanism: contract designed against mean costs.
inline MechanismOutcome run_M6(const MarketConfig& cfg, const std::vector<double>& c,
                               double tol = 1e-8) {
  return detail::run_three_layer(cfg, MechanismId::M6, mean_costs(cfg), c, tol);
}

// Allocation a mechanism would deliver at report c, skipping payment work.
// Useful for monotonicity sweeps and demand scans where only x matters.
inline Allocation mechanism_allocation(const MarketConfig& cfg, MechanismId id,
                                       const std::vector<double>& c, double tol = 1e-8,
                                       SolveCache* cache = nullptr) {
  require_in_support(cfg, c, "mechanism_allocation");
  std::vector<double> w;
  switch (id) {
    case MechanismId::M1: w = virtual_costs(cfg, c); break;
    case MechanismId::M2:
    case MechanismId::M4: w = c; break;
    case MechanismId::M5: w = upper_supports(cfg); break;
    case MechanismId::M6: w = mean_costs(cfg); break;
  }
  if (cache) return allocation_from_y(cfg, cache->solve(cfg, w, tol).y);
  return allocation_from_y(cfg, solve_allocation(cfg, w, tol).y);
}

inline MechanismOutcome run_mechanism(const MarketConfig& cfg, MechanismId id,
                                      const std::vector<double>& c,
                                      const QuadratureSpec& quad = {}, double tol = 1e-8,
                                      SolveCache* cache = nullptr) {
  switch (id) {
    case MechanismId::M1: return run_M1(cfg, c, quad, tol, cache);
    case MechanismId::M2: return run_M2(cfg, c, quad, tol, cache);
    case MechanismId::M4: return run_M4(cfg, c, quad, tol, cache);
    case MechanismId::M5: return run_M5(cfg, c, tol);
    case MechanismId::M6: return run_M6(cfg, c, tol);
  }
  throw std::logic_error("run_mechanism: unreachable");
}

// Revenue-optimal union procurement has no known mechanism; it is sandwiched
// between the three-layer contract value and the per-creator optimum, and its
// welfare cannot exceed the welfare-optimal screening mechanism's.
struct M3Bounds {
  double revenue_lower = 0.0;     // deterministic: M5's -t
  double revenue_upper = 0.0;     // Monte-Carlo mean of M1 revenue
  double revenue_upper_se = 0.0;
  double welfare_upper = 0.0;     // Monte-Carlo mean of M2 welfare
  double welfare_upper_se = 0.0;
  int samples = 0;
};

inline M3Bounds bound_M3(const MarketConfig& cfg,
                         const std::vector<std::vector<double>>& cost_samples,
                         const QuadratureSpec& quad = {}, double tol = 1e-8) {
  if (cost_samples.empty()) throw std::invalid_argument("bound_M3: no cost samples");
  M3Bounds out;
  out.samples = static_cast<int>(cost_samples.size());

  const auto m5 = run_M5(cfg, cost_samples.front(), tol);
  out.revenue_lower = m5.revenue;

  double rsum = 0.0, rsq = 0.0, wsum = 0.0, wsq = 0.0;
  for (const auto& c : cost_samples) {
    const double r = run_M1(cfg, c, quad, tol).revenue;
    rsum += r;
    rsq += r * r;
    const double w = run_M2(cfg, c, quad, tol).social_welfare;
    wsum += w;
    wsq += w * w;
  }
  const int n = out.samples;
  out.revenue_upper = rsum / n;
  out.welfare_upper = wsum / n;
  if (n > 1) {
    out.revenue_upper_se =
        std::sqrt(std::max(0.0, (rsq - n * out.revenue_upper * out.revenue_upper) / (n - 1)) / n);
    out.welfare_upper_se =
        std::sqrt(std::max(0.0, (wsq - n * out.welfare_upper * out.welfare_upper) / (n - 1)) / n);
  }
  return out;
}

}  // namespace procur

#endif
