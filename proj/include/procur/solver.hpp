#ifndef PROCUR_SOLVER_HPP
#define PROCUR_SOLVER_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "procur/detail/linalg.hpp"
#include "procur/market.hpp"

namespace procur {

enum class SolveStatus { optimal, max_iterations, infeasible_input };

struct SolverResult {
  std::vector<double> y;          // transformed allocation, inside [0, safe_upper_bounds]
  std::vector<double> x;          // natural units, x = y^(1/rho)
  std::vector<double> y_interior; // last strictly interior iterate (warm-start hook)
  double objective = std::numeric_limits<double>::quiet_NaN();
  SlackVector slacks;
  int iterations = 0;
  double gap_estimate = std::numeric_limits<double>::infinity();
  SolveStatus status = SolveStatus::infeasible_input;
};

namespace detail {

// min w.y  s.t.  g_k(y) >= 0, y >= 0, where every g_k is a sum of concave
// power terms coef * y_i^exp with exp in [0,1]. Covers the per-domain demand
// constraints in transformed units.
struct PowerSumProblem {
  struct Term {
    int i;
    double coef, exp;
  };
  int dim = 0;
  std::vector<double> rhs;                  // g_k(y) = sum of terms - rhs[k]
  std::vector<std::vector<Term>> terms;     // terms[k]

  static PowerSumProblem from_config(const MarketConfig& cfg) {
    PowerSumProblem p;
    p.dim = cfg.K;
    p.rhs = cfg.demand;
    p.terms.resize(cfg.K);
    for (int k = 0; k < cfg.K; ++k) {
      p.terms[k].push_back({k, 1.0, 1.0 / cfg.cost_exponent[k]});
      for (int i = 0; i < cfg.K; ++i) {
        const double mu = cfg.transfer_rate[i][k];
        if (mu <= 0.0) continue;
        p.terms[k].push_back({i, mu, cfg.transfer_elasticity[i][k] / cfg.cost_exponent[i]});
      }
    }
    return p;
  }

  int n_constraints() const { return static_cast<int>(rhs.size()); }

  double value(int k, const std::vector<double>& y) const {
    double g = -rhs[k];
    for (const Term& t : terms[k]) g += t.coef * std::pow(y[t.i], t.exp);
    return g;
  }

  void grad(int k, const std::vector<double>& y, std::vector<double>& out) const {
    std::fill(out.begin(), out.end(), 0.0);
    for (const Term& t : terms[k])
      if (t.exp > 0.0) out[t.i] += t.coef * t.exp * std::pow(y[t.i], t.exp - 1.0);
  }

  // H += scale * hess(g_k); the Hessian is diagonal and nonpositive, so a
  // negative scale contributes positive semidefinite mass.
  void add_curvature(int k, const std::vector<double>& y, double scale,
                     SymMatrix& H) const {
    for (const Term& t : terms[k])
      if (t.exp > 0.0 && t.exp < 1.0)
        H.add_diag(t.i, scale * t.coef * t.exp * (t.exp - 1.0) *
                            std::pow(y[t.i], t.exp - 2.0));
  }
};

// Same feasible-set family with several creators per domain: the per-domain
// total S_j = sum_i (y_j^i)^(1/rho_j) replaces the single producer in both the
// own-supply term and the transfer terms, which couples creators of a domain
// through S_j^gamma.
struct MultiCreatorProblem {
  const MarketConfig* cfg = nullptr;
  std::vector<int> counts;   // creators per domain
  std::vector<int> base;     // variable offset of each domain
  int dim = 0;

  static MultiCreatorProblem from_config(const MarketConfig& cfg,
                                         const std::vector<int>& n) {
    MultiCreatorProblem p;
    p.cfg = &cfg;
    p.counts = n;
    p.base.resize(cfg.K);
    int off = 0;
    for (int k = 0; k < cfg.K; ++k) {
      p.base[k] = off;
      off += n[k];
    }
    p.dim = off;
    return p;
  }

  int n_constraints() const { return cfg->K; }

  double domain_total(int j, const std::vector<double>& y) const {
    const double inv_rho = 1.0 / cfg->cost_exponent[j];
    double s = 0.0;
    for (int i = 0; i < counts[j]; ++i) s += std::pow(y[base[j] + i], inv_rho);
    return s;
  }

  double value(int k, const std::vector<double>& y) const {
    double g = domain_total(k, y) - cfg->demand[k];
    for (int j = 0; j < cfg->K; ++j) {
      const double mu = cfg->transfer_rate[j][k];
      if (mu <= 0.0) continue;
      g += mu * std::pow(domain_total(j, y), cfg->transfer_elasticity[j][k]);
    }
    return g;
  }

  void grad(int k, const std::vector<double>& y, std::vector<double>& out) const {
    std::fill(out.begin(), out.end(), 0.0);
    for (int j = 0; j < cfg->K; ++j) {
      double outer = (j == k) ? 1.0 : 0.0;
      const double mu = cfg->transfer_rate[j][k];
      const double ga = cfg->transfer_elasticity[j][k];
      if (mu > 0.0 && ga > 0.0)
        outer += mu * ga * std::pow(domain_total(j, y), ga - 1.0);
      if (outer == 0.0) continue;
      const double inv_rho = 1.0 / cfg->cost_exponent[j];
      for (int i = 0; i < counts[j]; ++i) {
        const double yi = y[base[j] + i];
        out[base[j] + i] = outer * inv_rho * std::pow(yi, inv_rho - 1.0);
      }
    }
  }

  void add_curvature(int k, const std::vector<double>& y, double scale,
                     SymMatrix& H) const {
    std::vector<double> sgrad;
    for (int j = 0; j < cfg->K; ++j) {
      double outer = (j == k) ? 1.0 : 0.0;
      const double mu = cfg->transfer_rate[j][k];
      const double ga = cfg->transfer_elasticity[j][k];
      double S = 0.0;
      if ((mu > 0.0 && ga > 0.0) || outer > 0.0) S = domain_total(j, y);
      if (mu > 0.0 && ga > 0.0) outer += mu * ga * std::pow(S, ga - 1.0);
      if (outer == 0.0) continue;
      const double inv_rho = 1.0 / cfg->cost_exponent[j];
      // diagonal part: outer * S''
      if (inv_rho < 1.0)
        for (int i = 0; i < counts[j]; ++i)
          H.add_diag(base[j] + i, scale * outer * inv_rho * (inv_rho - 1.0) *
                                      std::pow(y[base[j] + i], inv_rho - 2.0));
      // rank-one part from S_j^gamma: mu * ga * (ga-1) * S^(ga-2) gradS gradS^T
      if (mu > 0.0 && ga > 0.0 && ga < 1.0) {
        sgrad.assign(dim, 0.0);
        for (int i = 0; i < counts[j]; ++i)
          sgrad[base[j] + i] = inv_rho * std::pow(y[base[j] + i], inv_rho - 1.0);
        H.add_outer(sgrad, scale * mu * ga * (ga - 1.0) * std::pow(S, ga - 2.0));
      }
    }
  }
};

struct BarrierOut {
  std::vector<double> y;
  int iterations = 0;
  double tau_final = 0.0;
  bool gap_ok = false;
  bool stalled = false;
};

// Log-barrier continuation with damped Newton steps. Weights must already be
// strictly positive (callers floor them); y0 must be strictly feasible.
// Stops when (#constraints + dim) * tau <= tol * (1 + |w.y|).
template <typename Problem>
BarrierOut barrier_minimize(const Problem& prob, const std::vector<double>& w,
                            std::vector<double> y0, double tol, double tau0,
                            int max_inner_per_stage = 10000) {
  const int n = prob.dim;
  const int kc = prob.n_constraints();
  const int m = kc + n;

  std::vector<double> g(kc), gnew(kc), grad_phi(n), p(n), ytrial(n);
  std::vector<std::vector<double>> G(kc, std::vector<double>(n));
  SymMatrix H(n);

  auto values_ok = [&](const std::vector<double>& y, std::vector<double>& out) {
    for (int i = 0; i < n; ++i)
      if (!(y[i] > 0.0)) return false;
    for (int k = 0; k < kc; ++k) {
      out[k] = prob.value(k, y);
      if (!(out[k] > 0.0)) return false;
    }
    return true;
  };
  auto phi_of = [&](const std::vector<double>& y, const std::vector<double>& gv,
                    double tau) {
    double v = dot(w, y);
    for (int k = 0; k < kc; ++k) v -= tau * std::log(gv[k]);
    for (int i = 0; i < n; ++i) v -= tau * std::log(y[i]);
    return v;
  };

  BarrierOut out;
  out.y = std::move(y0);
  if (!values_ok(out.y, g)) {
    out.stalled = true;
    return out;
  }

  double tau = tau0;
  while (true) {
    bool centered = false;
    for (int it = 0; it < max_inner_per_stage; ++it) {
      if (!values_ok(out.y, g)) {  // cannot happen if steps stay interior
        out.stalled = true;
        break;
      }
      for (int k = 0; k < kc; ++k) prob.grad(k, out.y, G[k]);
      for (int i = 0; i < n; ++i) grad_phi[i] = w[i] - tau / out.y[i];
      H.zero();
      for (int k = 0; k < kc; ++k) {
        const double inv_g = 1.0 / g[k];
        for (int i = 0; i < n; ++i) grad_phi[i] -= tau * inv_g * G[k][i];
        H.add_outer(G[k], tau * inv_g * inv_g);
        prob.add_curvature(k, out.y, -tau * inv_g, H);
      }
      for (int i = 0; i < n; ++i) H.add_diag(i, tau / (out.y[i] * out.y[i]));

      std::vector<double> rhs(n);
      for (int i = 0; i < n; ++i) rhs[i] = -grad_phi[i];
      if (!H.solve(rhs, p)) {
        double bump = 0.0;
        for (int i = 0; i < n; ++i) bump = std::max(bump, H.at(i, i));
        for (int i = 0; i < n; ++i) H.add_diag(i, 1e-12 * (1.0 + bump));
        if (!H.solve(rhs, p)) {
          out.stalled = true;
          break;
        }
      }

      const double obj = dot(w, out.y);
      const double decrement2 = -dot(grad_phi, p);
      ++out.iterations;
      if (decrement2 * 0.5 <= 1e-12 * (1.0 + std::fabs(obj))) {
        centered = true;
        break;
      }

      const double phi0 = phi_of(out.y, g, tau);
      const double slope = dot(grad_phi, p);
      double t = 1.0;
      bool accepted = false;
      while (t >= 1e-14) {
        for (int i = 0; i < n; ++i) ytrial[i] = out.y[i] + t * p[i];
        if (values_ok(ytrial, gnew) &&
            phi_of(ytrial, gnew, tau) <= phi0 + 1e-4 * t * slope) {
          out.y.swap(ytrial);
          g.swap(gnew);
          accepted = true;
          break;
        }
        t *= 0.5;
      }
      if (!accepted) {
        out.stalled = true;
        break;
      }
    }

    out.tau_final = tau;
    const double obj = dot(w, out.y);
    // The m*tau duality gap certificate is only valid at a centered point.
    if (centered && m * tau <= tol * (1.0 + std::fabs(obj))) {
      out.gap_ok = true;
      return out;
    }
    if (out.stalled || !centered) return out;
    if (tau < 1e-14) return out;
    tau *= 0.1;
  }
}

inline bool weights_malformed(const std::vector<double>& w, std::size_t expect) {
  if (w.size() != expect) return true;
  for (double v : w)
    if (!std::isfinite(v) || v < 0.0) return true;
  return false;
}

}  // namespace detail

// Minimize w.y over the feasible set in transformed units. Weights may be
// zero (ties break toward minimal production via a 1e-9 floor after scale
// normalization); the relative-gap promise is stated against the normalized
// weights, so ratios beyond ~1e9 degrade low-weight coordinates only.
inline SolverResult solve_allocation(const MarketConfig& cfg,
                                     const std::vector<double>& w,
                                     double tol = 1e-8,
                                     const std::vector<double>* warm_y = nullptr) {
  SolverResult res;
  if (detail::weights_malformed(w, static_cast<std::size_t>(cfg.K))) {
    res.status = SolveStatus::infeasible_input;
    return res;
  }

  const int K = cfg.K;

  // When no transfer term actually depends on y the constraints decouple and
  // the optimum is closed-form: cover whatever the constant transfers leave.
  bool coupled = false;
  for (int i = 0; i < K && !coupled; ++i)
    for (int k = 0; k < K; ++k)
      if (cfg.transfer_rate[i][k] > 0.0 && cfg.transfer_elasticity[i][k] > 0.0) {
        coupled = true;
        break;
      }
  if (!coupled) {
    res.y.resize(K);
    for (int k = 0; k < K; ++k) {
      double constant_side = 0.0;
      for (int i = 0; i < K; ++i)
        if (cfg.transfer_elasticity[i][k] == 0.0)
          constant_side += cfg.transfer_rate[i][k];
      const double need = std::max(0.0, cfg.demand[k] - constant_side);
      res.y[k] = std::pow(need, cfg.cost_exponent[k]);
    }
    res.y_interior = res.y;
    res.x = allocation_from_y(cfg, res.y).x;
    res.slacks = slack(cfg, res.x);
    res.objective = detail::dot(w, res.y);
    res.iterations = 0;
    res.gap_estimate = 0.0;
    res.status = SolveStatus::optimal;
    return res;
  }

  double scale = 0.0;
  for (double v : w) scale = std::max(scale, v);
  if (scale <= 0.0) scale = 1.0;
  std::vector<double> wn(K);
  for (int k = 0; k < K; ++k) wn[k] = std::max(w[k] / scale, 1e-9);

  const auto prob = detail::PowerSumProblem::from_config(cfg);

  auto default_start = [&cfg, K] {
    // x = d * (1 + 1e-3) is strictly feasible: every own-supply term already
    // exceeds its demand and transfers only add.
    std::vector<double> y0(K);
    for (int k = 0; k < K; ++k)
      y0[k] = std::pow(cfg.demand[k] * 1.001, cfg.cost_exponent[k]);
    return y0;
  };

  bool warm_usable = false;
  std::vector<double> y0;
  if (warm_y && static_cast<int>(warm_y->size()) == K) {
    warm_usable = true;
    for (int k = 0; k < K && warm_usable; ++k)
      if (!((*warm_y)[k] > 0.0) || !std::isfinite((*warm_y)[k])) warm_usable = false;
    if (warm_usable)
      for (int k = 0; k < K; ++k)
        if (prob.value(k, *warm_y) < 1e-10 * (1.0 + cfg.demand[k])) {
          warm_usable = false;
          break;
        }
    if (warm_usable) y0 = *warm_y;
  }
  if (!warm_usable) y0 = default_start();

  // A cold start needs tau0 on the scale of the starting objective; with a
  // small tau0 the first central point hugs a constraint and Newton creeps
  // along the boundary. Warm starts sit near the central path already, so a
  // small tau0 resumes it cheaply; if that ever fails to certify, rerun cold.
  const double tau0_cold = 1.0 + std::fabs(detail::dot(wn, default_start()));
  auto run = warm_usable
                 ? detail::barrier_minimize(prob, wn, std::move(y0), tol, 1e-2)
                 : detail::barrier_minimize(prob, wn, std::move(y0), tol, tau0_cold);
  if (!run.gap_ok && warm_usable)
    run = detail::barrier_minimize(prob, wn, default_start(), tol, tau0_cold);

  res.y_interior = run.y;
  res.y = run.y;
  const auto bounds = safe_upper_bounds(cfg);
  for (int k = 0; k < K; ++k) res.y[k] = std::min(res.y[k], bounds[k]);
  res.x = allocation_from_y(cfg, res.y).x;
  res.slacks = slack(cfg, res.x);
  res.objective = detail::dot(w, res.y);
  res.iterations = run.iterations;
  res.gap_estimate = (2.0 * K) * run.tau_final * scale;
  res.status = run.gap_ok ? SolveStatus::optimal : SolveStatus::max_iterations;
  return res;
}

// Exhaustive grid oracle over [0, safe_upper_bounds] for cross-checking the
// barrier solver. Scans (resolution+1)^K points; per-axis power tables keep
// the inner loop to table adds. Guaranteed within sum_k w_k*Y_k/resolution of
// the optimum because rounding a feasible point up stays feasible.
inline SolverResult brute_force_allocation(const MarketConfig& cfg,
                                           const std::vector<double>& w,
                                           int resolution) {
  if (cfg.K > 3) throw std::invalid_argument("brute_force_allocation: K > 3");
  if (resolution < 10) throw std::invalid_argument("brute_force_allocation: resolution < 10");
  SolverResult res;
  if (detail::weights_malformed(w, static_cast<std::size_t>(cfg.K))) {
    res.status = SolveStatus::infeasible_input;
    return res;
  }

  const int K = cfg.K;
  const auto Y = safe_upper_bounds(cfg);
  const int npts = resolution + 1;

  // contrib[i][k*npts + j] = supply contribution of axis-i grid value j to
  // constraint k (own term plus transfer term).
  std::vector<std::vector<double>> contrib(K, std::vector<double>(K * npts, 0.0));
  std::vector<std::vector<double>> axis(K, std::vector<double>(npts));
  for (int i = 0; i < K; ++i)
    for (int j = 0; j < npts; ++j) {
      const double yi = Y[i] * static_cast<double>(j) / resolution;
      axis[i][j] = yi;
      for (int k = 0; k < K; ++k) {
        double v = 0.0;
        if (i == k) v += std::pow(yi, 1.0 / cfg.cost_exponent[k]);
        const double mu = cfg.transfer_rate[i][k];
        if (mu > 0.0)
          v += mu * std::pow(yi, cfg.transfer_elasticity[i][k] / cfg.cost_exponent[i]);
        contrib[i][k * npts + j] = v;
      }
    }

  std::vector<double> need(K);
  for (int k = 0; k < K; ++k) need[k] = cfg.demand[k] - 1e-9 * (1.0 + cfg.demand[k]);

  double best = std::numeric_limits<double>::infinity();
  std::vector<int> best_idx(K, -1), idx(K, 0);
  long scanned = 0;

  // Odometer over the outer axes; the innermost axis is scanned inline so a
  // point costs O(K) table adds on top of the reusable prefix sums.
  std::vector<std::vector<double>> prefix(K + 1, std::vector<double>(K, 0.0));
  int axis_i = 0;
  while (axis_i >= 0) {
    if (idx[axis_i] > resolution) {
      idx[axis_i] = 0;
      --axis_i;
      if (axis_i >= 0) ++idx[axis_i];
      continue;
    }
    for (int k = 0; k < K; ++k)
      prefix[axis_i + 1][k] = prefix[axis_i][k] + contrib[axis_i][k * npts + idx[axis_i]];
    if (axis_i == K - 1) {
      // innermost axis: run it here without re-entering the odometer
      for (int j = idx[axis_i]; j <= resolution; ++j) {
        ++scanned;
        bool feasible = true;
        for (int k = 0; k < K; ++k)
          if (prefix[axis_i][k] + contrib[axis_i][k * npts + j] < need[k]) {
            feasible = false;
            break;
          }
        if (!feasible) continue;
        double obj = w[axis_i] * axis[axis_i][j];
        for (int i = 0; i < axis_i; ++i) obj += w[i] * axis[i][idx[i]];
        if (obj < best) {
          best = obj;
          best_idx = idx;
          best_idx[axis_i] = j;
        }
      }
      idx[axis_i] = 0;
      --axis_i;
      if (axis_i >= 0) ++idx[axis_i];
    } else {
      ++axis_i;
    }
  }

  if (!std::isfinite(best)) {  // cannot happen: the top corner is feasible
    res.status = SolveStatus::max_iterations;
    return res;
  }
  res.y.resize(K);
  for (int k = 0; k < K; ++k) res.y[k] = axis[k][best_idx[k]];
  res.y_interior = res.y;
  res.x = allocation_from_y(cfg, res.y).x;
  res.slacks = slack(cfg, res.x);
  res.objective = best;
  res.iterations = static_cast<int>(std::min<long>(scanned, std::numeric_limits<int>::max()));
  double grid_err = 0.0;
  for (int k = 0; k < K; ++k) grid_err += w[k] * Y[k] / resolution;
  res.gap_estimate = grid_err;
  res.status = SolveStatus::optimal;
  return res;
}

struct MultiCreatorResult {
  std::vector<std::vector<double>> y;  // y[k][i]: creator i of domain k
  std::vector<std::vector<double>> x;
  double objective = std::numeric_limits<double>::quiet_NaN();
  SlackVector slacks;
  int iterations = 0;
  double gap_estimate = std::numeric_limits<double>::infinity();
  SolveStatus status = SolveStatus::infeasible_input;
};

// Several creators per domain; weights w[k][i] price creator i of domain k.
// Domain k's effective supply pools all of its creators before transfers.
inline MultiCreatorResult solve_multi_creator(const MarketConfig& cfg,
                                              const std::vector<int>& n,
                                              const std::vector<std::vector<double>>& w,
                                              double tol = 1e-8) {
  MultiCreatorResult res;
  if (static_cast<int>(n.size()) != cfg.K ||
      static_cast<int>(w.size()) != cfg.K)
    return res;
  for (int k = 0; k < cfg.K; ++k) {
    if (n[k] < 1) return res;
    if (detail::weights_malformed(w[k], static_cast<std::size_t>(n[k]))) return res;
  }

  const auto prob = detail::MultiCreatorProblem::from_config(cfg, n);
  std::vector<double> wflat(prob.dim);
  double scale = 0.0;
  for (int k = 0; k < cfg.K; ++k)
    for (int i = 0; i < n[k]; ++i) scale = std::max(scale, w[k][i]);
  if (scale <= 0.0) scale = 1.0;
  for (int k = 0; k < cfg.K; ++k)
    for (int i = 0; i < n[k]; ++i)
      wflat[prob.base[k] + i] = std::max(w[k][i] / scale, 1e-9);

  std::vector<double> y0(prob.dim);
  for (int k = 0; k < cfg.K; ++k) {
    const double x_each = cfg.demand[k] * 1.001 / n[k];
    for (int i = 0; i < n[k]; ++i)
      y0[prob.base[k] + i] = std::pow(x_each, cfg.cost_exponent[k]);
  }

  const double tau0 = 1.0 + std::fabs(detail::dot(wflat, y0));
  const auto run = detail::barrier_minimize(prob, wflat, std::move(y0), tol, tau0);

  res.y.resize(cfg.K);
  res.x.resize(cfg.K);
  std::vector<double> totals(cfg.K, 0.0);
  double obj = 0.0;
  for (int k = 0; k < cfg.K; ++k) {
    res.y[k].resize(n[k]);
    res.x[k].resize(n[k]);
    for (int i = 0; i < n[k]; ++i) {
      const double yv = run.y[prob.base[k] + i];
      res.y[k][i] = yv;
      res.x[k][i] = std::pow(yv, 1.0 / cfg.cost_exponent[k]);
      totals[k] += res.x[k][i];
      obj += w[k][i] * yv;
    }
  }
  res.slacks = slack(cfg, totals);
  res.objective = obj;
  res.iterations = run.iterations;
  res.gap_estimate = (cfg.K + prob.dim) * run.tau_final * scale;
  res.status = run.gap_ok ? SolveStatus::optimal : SolveStatus::max_iterations;
  return res;
}

}  // namespace procur

#endif
