#ifndef PROCUR_PAYMENTS_HPP
#define PROCUR_PAYMENTS_HPP

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "procur/market.hpp"
#include "procur/quadrature.hpp"
#include "procur/rng.hpp"
#include "procur/solver.hpp"

namespace procur {

// Which per-domain weights a mechanism hands the allocation solver.
enum class WeightRule { virtual_cost, identity };

inline double solver_weight(const MarketConfig& cfg, WeightRule rule, int k, double c) {
  return rule == WeightRule::virtual_cost ? cfg.cost_law[k].virtual_cost(c) : c;
}

inline std::vector<double> solver_weights(const MarketConfig& cfg, WeightRule rule,
                                          const std::vector<double>& c) {
  return rule == WeightRule::virtual_cost ? virtual_costs(cfg, c) : c;
}

// Memo for repeated allocation solves inside one mechanism run. Keyed on the
// weight vector rounded to 12 significant digits; scale-free rounding keeps
// the key well defined when virtual costs blow up near a truncated upper
// support. Concurrent lookups are serialized; a duplicated solve on a race
// would be idempotent anyway.
class SolveCache {
 public:
  SolverResult solve(const MarketConfig& cfg, const std::vector<double>& w,
                     double tol, const std::vector<double>* warm = nullptr) {
    std::string key;
    key.reserve(w.size() * 20);
    char buf[32];
    for (double v : w) {
      std::snprintf(buf, sizeof buf, "%.12e;", v);
      key += buf;
    }
    {
      std::lock_guard<std::mutex> lock(mu_);
      auto it = map_.find(key);
      if (it != map_.end()) {
        ++hits_;
        return it->second;
      }
    }
    SolverResult res = solve_allocation(cfg, w, tol, warm);
    {
      std::lock_guard<std::mutex> lock(mu_);
      ++misses_;
      map_.emplace(std::move(key), res);
    }
    return res;
  }

  long hits() const { return hits_; }
  long misses() const { return misses_; }

 private:
  std::unordered_map<std::string, SolverResult> map_;
  std::mutex mu_;
  long hits_ = 0, misses_ = 0;
};

struct PaymentResult {
  double value = 0.0;
  double error_estimate = 0.0;  // conservative quadrature error bound
  int solver_calls = 0;
};

namespace detail {

// Integrate t -> y[read_axis] of the allocation at weights w(point with
// vary_axis set to t), t in [lo, hi].
struct LegIntegral {
  double value = 0.0;
  double error = 0.0;
  int calls = 0;
  std::vector<double> last_interior;  // iterate of the topmost node solve
};

// Gauss-Kronrod 7-15 pair on [-1, 1]. The 7-point Gauss rule reuses every
// other Kronrod abscissa, so one sweep of 15 evaluations yields two values
// of different degree whose gap estimates the panel error from a single
// panel, with no aliasing against a refined copy of the same rule.
struct GkNode {
  double x, wk, wg;
};
inline constexpr GkNode kGk15[15] = {
    {-0.991455371120813, 0.022935322010529, 0.0},
    {-0.949107912342759, 0.063092092629979, 0.129484966168870},
    {-0.864864423359769, 0.104790010322250, 0.0},
    {-0.741531185599394, 0.140653259715525, 0.279705391489277},
    {-0.586087235467691, 0.169004726639267, 0.0},
    {-0.405845151377397, 0.190350578064785, 0.381830050505119},
    {-0.207784955007899, 0.204432940075298, 0.0},
    {0.0, 0.209482141084728, 0.417959183673469},
    {0.207784955007899, 0.204432940075298, 0.0},
    {0.405845151377397, 0.190350578064785, 0.381830050505119},
    {0.586087235467691, 0.169004726639267, 0.0},
    {0.741531185599394, 0.140653259715525, 0.279705391489277},
    {0.864864423359769, 0.104790010322250, 0.0},
    {0.949107912342759, 0.063092092629979, 0.129484966168870},
    {0.991455371120813, 0.022935322010529, 0.0},
};

// The integrand is an allocation coordinate versus that creator's own cost:
// piecewise smooth with kinks where the active constraint set changes, and
// with a boundary layer of relative width O(lo/span) at the left endpoint
// where a small own cost makes the allocation extreme. Three measures keep
// such structure from slipping between nodes. First, the leg is integrated
// in the graded variable t = lo + span*u^4, which widens a relative-eps
// boundary layer to eps^(1/4) and caps what a feature hidden between nodes
// can contribute at around box_bound*span*gap^4, below the error budget.
// Second, each panel carries the embedded Gauss-Kronrod error estimate.
// Third, panels are refined by bisection in u and accepted only when the
// parent-versus-children difference and the children's Kronrod estimates
// both fit the width-proportional share of the budget; the two estimates
// alias differently, so a kink that fools one still trips the other. Solves
// warm-start from the nearest solved node below. Simpson runs the fixed
// composite rule in plain t instead.
class AxisIntegrator {
 public:
  AxisIntegrator(const MarketConfig& cfg, WeightRule rule, std::vector<double> point,
                 int vary_axis, int read_axis, const QuadratureSpec& quad, double tol,
                 SolveCache& cache, const std::vector<double>* warm0)
      : cfg_(cfg), quad_(quad), tol_(tol), cache_(cache),
        point_(std::move(point)), vary_axis_(vary_axis), read_axis_(read_axis),
        weights_(solver_weights(cfg, rule, point_)), rule_(rule) {
    if (warm0 && !warm0->empty()) seed_warm_ = *warm0;
  }

  LegIntegral run(double lo, double hi) {
    LegIntegral leg;
    if (hi <= lo) return leg;
    if (quad_.rule == QuadRule::composite_simpson) return run_fixed(lo, hi);
    lo_ = lo;
    span_ = hi - lo;

    struct Seg {
      double lo, hi;  // bounds in the graded variable u
      PanelEval eval;
      int depth;
    };
    std::vector<Seg> work;
    for (int p = quad_.panels - 1; p >= 0; --p)
      work.push_back({static_cast<double>(p) / quad_.panels,
                      static_cast<double>(p + 1) / quad_.panels, {}, 0});
    // Evaluate the initial panels in ascending order so the first sweep
    // chains warm starts left to right.
    for (auto it = work.rbegin(); it != work.rend(); ++it) it->eval = panel(it->lo, it->hi);

    while (!work.empty()) {
      Seg s = work.back();
      work.pop_back();
      const double mid = 0.5 * (s.lo + s.hi);
      const PanelEval left = panel(s.lo, mid);
      const PanelEval right = panel(mid, s.hi);
      const double diff = std::fabs(s.eval.value - left.value - right.value);
      const double kron = left.kron_err + right.kron_err;
      const double budget = quad_.target_abs_error * (s.hi - s.lo);
      if ((diff <= budget && kron <= budget) || s.depth >= 40 ||
          panel_evals_ >= quad_.max_panel_evals) {
        leg.value += left.value + right.value;
        leg.error += std::max(diff, kron);
      } else {
        work.push_back({mid, s.hi, right, s.depth + 1});
        work.push_back({s.lo, mid, left, s.depth + 1});
      }
    }
    leg.error += 1e-12 * (1.0 + std::fabs(leg.value));
    leg.calls = calls_;
    leg.last_interior = top_interior();
    return leg;
  }

 private:
  double solve_at(double t) {
    weights_[vary_axis_] = solver_weight(cfg_, rule_, vary_axis_, t);
    const std::vector<double>* warm = nullptr;
    auto it = solved_.empty() ? solved_.end() : solved_.upper_bound(t);
    if (it != solved_.begin() && !solved_.empty()) {
      --it;
      warm = &it->second;
    } else if (!seed_warm_.empty()) {
      warm = &seed_warm_;
    }
    auto res = cache_.solve(cfg_, weights_, tol_, warm);
    ++calls_;
    const double f = res.y[read_axis_];
    solved_[t] = std::move(res.y_interior);
    return f;
  }

  struct PanelEval {
    double value = 0.0;     // 15-point Kronrod value
    double kron_err = 0.0;  // gap to the embedded 7-point Gauss value
  };

  // Integral of f(t(u)) dt/du over [a, b] in u, where t = lo + span*u^4.
  PanelEval panel(double a, double b) {
    ++panel_evals_;
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double qk = 0.0, qg = 0.0;
    for (const auto& [xi, wk, wg] : kGk15) {
      const double u = mid + half * xi;
      const double t = lo_ + span_ * u * u * u * u;
      const double g = solve_at(t) * 4.0 * u * u * u * span_;
      qk += half * wk * g;
      if (wg != 0.0) qg += half * wg * g;
    }
    return {qk, std::fabs(qk - qg)};
  }

  LegIntegral run_fixed(double lo, double hi) {
    LegIntegral leg;
    const auto nodes = quadrature_nodes(quad_, lo, hi);
    double prev_f = 0.0, variation = 0.0;
    for (std::size_t j = 0; j < nodes.t.size(); ++j) {
      const double f = solve_at(nodes.t[j]);
      leg.value += nodes.weight[j] * f;
      if (j > 0) variation += std::fabs(f - prev_f);
      prev_f = f;
    }
    leg.error = nodes.panel_width * variation + 1e-12 * (1.0 + std::fabs(leg.value));
    leg.calls = calls_;
    leg.last_interior = top_interior();
    return leg;
  }

  std::vector<double> top_interior() const {
    if (solved_.empty()) return seed_warm_;
    return solved_.rbegin()->second;
  }

  const MarketConfig& cfg_;
  const QuadratureSpec& quad_;
  double tol_;
  SolveCache& cache_;
  std::vector<double> point_;
  int vary_axis_, read_axis_;
  std::vector<double> weights_;
  WeightRule rule_;
  double lo_ = 0.0, span_ = 0.0;
  std::vector<double> seed_warm_;
  std::map<double, std::vector<double>> solved_;
  int calls_ = 0;
  int panel_evals_ = 0;
};

inline LegIntegral integrate_allocation_axis(const MarketConfig& cfg, WeightRule rule,
                                             std::vector<double> point, int vary_axis,
                                             int read_axis, double lo, double hi,
                                             const QuadratureSpec& quad, double tol,
                                             SolveCache& cache,
                                             const std::vector<double>* warm0) {
  AxisIntegrator ig(cfg, rule, std::move(point), vary_axis, read_axis, quad, tol, cache,
                    warm0);
  return ig.run(lo, hi);
}

}  // namespace detail

// Screening payment for creator k: p_k = c_k y_k(c) + int_{c_k}^{b_k} y_k dt.
// The integral term is the information rent that makes truthful reporting
// optimal when y_k is nonincreasing in the own report.
inline PaymentResult myerson_payment(const MarketConfig& cfg, WeightRule rule,
                                     const std::vector<double>& c, int k,
                                     const QuadratureSpec& quad = {}, double tol = 1e-8,
                                     SolveCache* cache = nullptr) {
  require_in_support(cfg, c, "myerson_payment");
  if (k < 0 || k >= cfg.K) throw std::invalid_argument("myerson_payment: bad k");
  validate(quad);
  SolveCache local;
  SolveCache& cc = cache ? *cache : local;

  const auto base = cc.solve(cfg, solver_weights(cfg, rule, c), tol);
  PaymentResult out;
  out.solver_calls = 1;
  out.value = c[k] * base.y[k];

  const auto leg = detail::integrate_allocation_axis(
      cfg, rule, c, k, k, c[k], cfg.cost_law[k].upper(), quad, tol, cc,
      &base.y_interior);
  out.value += leg.value;
  out.error_estimate = leg.error;
  out.solver_calls += leg.calls;
  return out;
}

// Single payment to the creators' union: line integral of the allocation
// along axis-parallel legs from the report c to the top of the support box b.
// The allocation field is a gradient (of the optimal-value function of the
// weights), so the value is path independent up to quadrature error.
inline PaymentResult path_integral_payment(const MarketConfig& cfg, WeightRule rule,
                                           const std::vector<double>& c,
                                           const std::vector<int>& path,
                                           const QuadratureSpec& quad = {},
                                           double tol = 1e-8,
                                           SolveCache* cache = nullptr) {
  require_in_support(cfg, c, "path_integral_payment");
  validate(quad);
  if (static_cast<int>(path.size()) != cfg.K)
    throw std::invalid_argument("path_integral_payment: path must visit every axis once");
  std::vector<bool> seen(cfg.K, false);
  for (int a : path) {
    if (a < 0 || a >= cfg.K || seen[a])
      throw std::invalid_argument("path_integral_payment: path must visit every axis once");
    seen[a] = true;
  }
  SolveCache local;
  SolveCache& cc = cache ? *cache : local;

  const auto base = cc.solve(cfg, solver_weights(cfg, rule, c), tol);
  PaymentResult out;
  out.solver_calls = 1;
  out.value = procur::detail::dot(c, base.y);

  std::vector<double> point = c;
  std::vector<double> warm = base.y_interior;
  for (int axis : path) {
    auto leg = detail::integrate_allocation_axis(
        cfg, rule, point, axis, axis, point[axis], cfg.cost_law[axis].upper(), quad,
        tol, cc, warm.empty() ? nullptr : &warm);
    out.value += leg.value;
    out.error_estimate += leg.error;
    out.solver_calls += leg.calls;
    point[axis] = cfg.cost_law[axis].upper();
    if (!leg.last_interior.empty()) warm = std::move(leg.last_interior);
  }
  return out;
}

inline std::vector<int> default_path(const MarketConfig& cfg) {
  std::vector<int> p(cfg.K);
  std::iota(p.begin(), p.end(), 0);
  return p;
}

struct McPaymentResult {
  double value = 0.0;
  double std_error = std::numeric_limits<double>::quiet_NaN();
  int draws = 0;
  int solver_calls = 0;
};

// Unbiased single-shot estimator of the screening payment: with
// t ~ Unif(c_k, b_k), c_k y_k(c) + (b_k - c_k) y_k(c with k -> t) has the
// rent integral as its expectation. Averaging n draws shrinks the variance
// like 1/n.
inline McPaymentResult mc_payment(const MarketConfig& cfg, WeightRule rule,
                                  const std::vector<double>& c, int k, int n_draws,
                                  RngStream& rng, double tol = 1e-8,
                                  SolveCache* cache = nullptr) {
  require_in_support(cfg, c, "mc_payment");
  if (k < 0 || k >= cfg.K) throw std::invalid_argument("mc_payment: bad k");
  if (n_draws < 1) throw std::invalid_argument("mc_payment: n_draws < 1");
  SolveCache local;
  SolveCache& cc = cache ? *cache : local;

  const auto base = cc.solve(cfg, solver_weights(cfg, rule, c), tol);
  const double head = c[k] * base.y[k];
  const double width = cfg.cost_law[k].upper() - c[k];

  McPaymentResult out;
  out.draws = n_draws;
  out.solver_calls = 1;
  if (width <= 0.0) {
    out.value = head;
    out.std_error = 0.0;
    return out;
  }

  std::vector<double> w = solver_weights(cfg, rule, c);
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n_draws; ++i) {
    const double t = c[k] + width * rng.uniform01();
    w[k] = solver_weight(cfg, rule, k, t);
    const auto res = cc.solve(cfg, w, tol, &base.y_interior);
    const double s = width * res.y[k];
    sum += s;
    sumsq += s * s;
    ++out.solver_calls;
  }
  const double mean = sum / n_draws;
  out.value = head + mean;
  if (n_draws > 1) {
    const double var = std::max(0.0, (sumsq - n_draws * mean * mean) / (n_draws - 1));
    out.std_error = std::sqrt(var / n_draws);
  }
  return out;
}

}  // namespace procur

#endif
