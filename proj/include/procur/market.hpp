#ifndef PROCUR_MARKET_HPP
#define PROCUR_MARKET_HPP

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "procur/distributions.hpp"

namespace procur {

// A market of K content domains. The platform must end up with supply >= d_k
// in every domain. Producing x_k units in domain k costs the creator
// c_k * x_k^rho_k, and model retraining makes those units usable elsewhere:
// x_i units in domain i act as transfer_rate[i][k] * x_i^transfer_elasticity[i][k]
// units in domain k. Elasticities live in [0,1]; t^0 is taken to be 1 for all
// t >= 0, so a zero elasticity is a constant side-supply.
struct MarketConfig {
  int K = 0;
  std::vector<double> demand;                            // d_k > 0
  std::vector<std::vector<double>> transfer_rate;        // mu[i][k] >= 0
  std::vector<std::vector<double>> transfer_elasticity;  // gamma[i][k] in [0,1]
  std::vector<double> cost_exponent;                     // rho_k >= 1
  std::vector<CostDistribution> cost_law;                // one law per domain

  double feasibility_tol = 1e-6;
  double overproduction_tol = 1e-4;
};

struct ValidationReport {
  bool ok = false;
  std::vector<std::string> errors;
  std::vector<std::string> warnings;
};

namespace detail {

inline bool matrix_shape_ok(const std::vector<std::vector<double>>& m, int K) {
  if (static_cast<int>(m.size()) != K) return false;
  for (const auto& row : m)
    if (static_cast<int>(row.size()) != K) return false;
  return true;
}

}  // namespace detail

inline ValidationReport validate_config(const MarketConfig& cfg) {
  ValidationReport rep;
  auto err = [&rep](const std::string& m) { rep.errors.push_back(m); };

  if (cfg.K < 1) err("K: must be >= 1");
  const int K = cfg.K;
  if (static_cast<int>(cfg.demand.size()) != K) err("d: expected length K");
  if (static_cast<int>(cfg.cost_exponent.size()) != K) err("rho: expected length K");
  if (static_cast<int>(cfg.cost_law.size()) != K) err("dists: expected length K");
  if (!detail::matrix_shape_ok(cfg.transfer_rate, K)) err("mu: expected K x K matrix");
  if (!detail::matrix_shape_ok(cfg.transfer_elasticity, K))
    err("gamma: expected K x K matrix");
  if (!rep.errors.empty()) {  // shapes are wrong; element checks would be UB
    rep.ok = false;
    return rep;
  }

  for (int k = 0; k < K; ++k) {
    if (!(cfg.demand[k] > 0.0) || !std::isfinite(cfg.demand[k]))
      err("d[" + std::to_string(k) + "]: must be finite and > 0");
    if (!(cfg.cost_exponent[k] >= 1.0) || !std::isfinite(cfg.cost_exponent[k]))
      err("rho[" + std::to_string(k) + "]: must be finite and >= 1");
  }
  for (int i = 0; i < K; ++i)
    for (int k = 0; k < K; ++k) {
      const double mu = cfg.transfer_rate[i][k];
      const double ga = cfg.transfer_elasticity[i][k];
      const std::string ik = "[" + std::to_string(i) + "][" + std::to_string(k) + "]";
      if (!(mu >= 0.0) || !std::isfinite(mu)) err("mu" + ik + ": must be finite and >= 0");
      if (!(ga >= 0.0 && ga <= 1.0)) err("gamma" + ik + ": must lie in [0,1]");
    }
  if (!(cfg.feasibility_tol > 0.0)) err("feasibility_tol: must be > 0");
  if (!(cfg.overproduction_tol > 0.0)) err("overproduction_tol: must be > 0");

  for (int k = 0; k < K; ++k) {
    const auto reg = cfg.cost_law[k].regularity();
    if (!reg.monotone)
      rep.warnings.push_back("dists[" + std::to_string(k) +
                             "]: virtual cost is not monotone (worst decrease " +
                             std::to_string(reg.worst_violation) +
                             "); screening payments may misbehave");
  }

  rep.ok = rep.errors.empty();
  return rep;
}

inline MarketConfig require_valid(MarketConfig cfg) {
  const auto rep = validate_config(cfg);
  if (!rep.ok) {
    std::string joined = "invalid market config:";
    for (const auto& e : rep.errors) joined += "\n  " + e;
    throw std::invalid_argument(joined);
  }
  return cfg;
}

// Effective units available in each domain for production profile x.
inline std::vector<double> supply(const MarketConfig& cfg, const std::vector<double>& x) {
  if (static_cast<int>(x.size()) != cfg.K)
    throw std::invalid_argument("supply: x has wrong length");
  std::vector<double> s(cfg.K);
  for (int k = 0; k < cfg.K; ++k) {
    double acc = x[k];
    for (int i = 0; i < cfg.K; ++i) {
      const double mu = cfg.transfer_rate[i][k];
      if (mu == 0.0) continue;
      // pow(0, 0) == 1 per IEEE, which is exactly the t^0 == 1 convention.
      acc += mu * std::pow(x[i], cfg.transfer_elasticity[i][k]);
    }
    s[k] = acc;
  }
  return s;
}

struct SlackVector {
  std::vector<double> value;      // supply_k - d_k
  std::vector<bool> overproduced; // value > overproduction_tol
};

inline SlackVector slack(const MarketConfig& cfg, const std::vector<double>& x) {
  SlackVector sv;
  sv.value = supply(cfg, x);
  sv.overproduced.resize(cfg.K);
  for (int k = 0; k < cfg.K; ++k) {
    sv.value[k] -= cfg.demand[k];
    sv.overproduced[k] = sv.value[k] > cfg.overproduction_tol;
  }
  return sv;
}

// Box bound for the transformed allocation. Producing x_k = X_k with
//   X_k = max(d_k, max over j with mu[k][j] > 0, gamma[k][j] > 0 of
//             (d_j / mu[k][j])^(1 / gamma[k][j]))
// covers domain k outright and covers, through the transfer term alone, every
// domain j that domain k feeds. Truncating any coordinate of a feasible point
// down to X_k^rho_k therefore keeps it feasible and cannot raise a
// nonnegative-weight objective, so some optimum lies inside the box.
inline std::vector<double> safe_upper_bounds(const MarketConfig& cfg) {
  std::vector<double> Y(cfg.K);
  for (int k = 0; k < cfg.K; ++k) {
    double X = cfg.demand[k];
    for (int j = 0; j < cfg.K; ++j) {
      const double mu = cfg.transfer_rate[k][j];
      const double ga = cfg.transfer_elasticity[k][j];
      if (mu <= 0.0 || ga <= 0.0) continue;
      const double need = std::pow(cfg.demand[j] / mu, 1.0 / ga);
      if (need > X) X = need;
    }
    Y[k] = std::pow(X, cfg.cost_exponent[k]);
  }
  return Y;
}

// Production profile in natural units x and transformed units y = x^rho.
// The transformed view makes creator cost linear (cost_k = c_k * y_k).
struct Allocation {
  std::vector<double> x;
  std::vector<double> y;
};

inline Allocation allocation_from_x(const MarketConfig& cfg, std::vector<double> x) {
  Allocation a;
  a.y.resize(cfg.K);
  for (int k = 0; k < cfg.K; ++k) a.y[k] = std::pow(x[k], cfg.cost_exponent[k]);
  a.x = std::move(x);
  return a;
}

inline Allocation allocation_from_y(const MarketConfig& cfg, std::vector<double> y) {
  Allocation a;
  a.x.resize(cfg.K);
  for (int k = 0; k < cfg.K; ++k) a.x[k] = std::pow(y[k], 1.0 / cfg.cost_exponent[k]);
  a.y = std::move(y);
  return a;
}

inline std::vector<double> lower_supports(const MarketConfig& cfg) {
  std::vector<double> v(cfg.K);
  for (int k = 0; k < cfg.K; ++k) v[k] = cfg.cost_law[k].lower();
  return v;
}

inline std::vector<double> upper_supports(const MarketConfig& cfg) {
  std::vector<double> v(cfg.K);
  for (int k = 0; k < cfg.K; ++k) v[k] = cfg.cost_law[k].upper();
  return v;
}

inline std::vector<double> mean_costs(const MarketConfig& cfg) {
  std::vector<double> v(cfg.K);
  for (int k = 0; k < cfg.K; ++k) v[k] = cfg.cost_law[k].mean();
  return v;
}

inline std::vector<double> virtual_costs(const MarketConfig& cfg,
                                         const std::vector<double>& c) {
  if (static_cast<int>(c.size()) != cfg.K)
    throw std::invalid_argument("virtual_costs: c has wrong length");
  std::vector<double> v(cfg.K);
  for (int k = 0; k < cfg.K; ++k) v[k] = cfg.cost_law[k].virtual_cost(c[k]);
  return v;
}

inline void require_in_support(const MarketConfig& cfg, const std::vector<double>& c,
                               const char* who) {
  if (static_cast<int>(c.size()) != cfg.K)
    throw std::invalid_argument(std::string(who) + ": cost vector has wrong length");
  for (int k = 0; k < cfg.K; ++k)
    if (c[k] < cfg.cost_law[k].lower() || c[k] > cfg.cost_law[k].upper())
      throw std::domain_error(std::string(who) + ": cost " + std::to_string(k) +
                              " outside its support");
}

}  // namespace procur

#endif
