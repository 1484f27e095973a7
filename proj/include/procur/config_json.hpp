#ifndef PROCUR_CONFIG_JSON_HPP
#define PROCUR_CONFIG_JSON_HPP

#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "procur/market.hpp"

namespace procur {

// Market configs travel as JSON documents with top-level keys
//   K, d, mu, gamma, rho, dists
// where mu and gamma are K x K (row i, column k = flow from domain i into
// domain k's constraint) and dists[k] is
//   {"kind":"uniform","a":..,"b":..} or
//   {"kind":"truncnorm","mean":..,"sd":..,"a":..,"b":..}.
// Optional keys feasibility_tol and overproduction_tol override defaults.
// Parsing checks JSON shape and distribution parameters; market-level
// semantics (positive demand, gamma range, ...) stay with validate_config.

namespace detail {

inline const nlohmann::json& require_key(const nlohmann::json& j, const std::string& key,
                                         const std::string& where) {
  auto it = j.find(key);
  if (it == j.end())
    throw std::invalid_argument(where + ": missing key '" + key + "'");
  return *it;
}

inline double number_at(const nlohmann::json& j, const std::string& key,
                        const std::string& where) {
  const auto& v = require_key(j, key, where);
  if (!v.is_number())
    throw std::invalid_argument(where + ": key '" + key + "' must be a number");
  return v.get<double>();
}

inline std::vector<double> number_array(const nlohmann::json& v, const std::string& where) {
  if (!v.is_array()) throw std::invalid_argument(where + ": expected an array");
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& e : v) {
    if (!e.is_number()) throw std::invalid_argument(where + ": expected numeric entries");
    out.push_back(e.get<double>());
  }
  return out;
}

}  // namespace detail

inline CostDistribution distribution_from_json(const nlohmann::json& j,
                                               const std::string& where) {
  if (!j.is_object()) throw std::invalid_argument(where + ": expected an object");
  const auto& kind = detail::require_key(j, "kind", where);
  if (!kind.is_string())
    throw std::invalid_argument(where + ": key 'kind' must be a string");
  const std::string k = kind.get<std::string>();
  try {
    if (k == "uniform")
      return CostDistribution::uniform(detail::number_at(j, "a", where),
                                       detail::number_at(j, "b", where));
    if (k == "truncnorm")
      return CostDistribution::truncated_normal(
          detail::number_at(j, "mean", where), detail::number_at(j, "sd", where),
          detail::number_at(j, "a", where), detail::number_at(j, "b", where));
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(where + ": " + e.what());
  }
  throw std::invalid_argument(where + ": unknown kind '" + k +
                              "' (expected 'uniform' or 'truncnorm')");
}

inline nlohmann::json distribution_to_json(const CostDistribution& d) {
  nlohmann::json j;
  if (d.kind() == CostDistribution::Kind::uniform) {
    j["kind"] = "uniform";
  } else {
    j["kind"] = "truncnorm";
    j["mean"] = d.location();
    j["sd"] = d.scale();
  }
  j["a"] = d.lower();
  j["b"] = d.upper();
  return j;
}

inline MarketConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("config: expected a JSON object");
  MarketConfig cfg;

  const auto& jk = detail::require_key(j, "K", "config");
  if (!jk.is_number_integer() || jk.get<long long>() < 1)
    throw std::invalid_argument("config: key 'K' must be a positive integer");
  cfg.K = jk.get<int>();

  cfg.demand = detail::number_array(detail::require_key(j, "d", "config"), "config.d");
  cfg.cost_exponent =
      detail::number_array(detail::require_key(j, "rho", "config"), "config.rho");

  const auto matrix = [&](const char* key) {
    const auto& m = detail::require_key(j, key, "config");
    if (!m.is_array())
      throw std::invalid_argument(std::string("config.") + key + ": expected an array of rows");
    std::vector<std::vector<double>> rows;
    rows.reserve(m.size());
    for (std::size_t i = 0; i < m.size(); ++i)
      rows.push_back(detail::number_array(
          m[i], std::string("config.") + key + "[" + std::to_string(i) + "]"));
    return rows;
  };
  cfg.transfer_rate = matrix("mu");
  cfg.transfer_elasticity = matrix("gamma");

  const auto& dists = detail::require_key(j, "dists", "config");
  if (!dists.is_array()) throw std::invalid_argument("config.dists: expected an array");
  for (std::size_t k = 0; k < dists.size(); ++k)
    cfg.cost_law.push_back(
        distribution_from_json(dists[k], "config.dists[" + std::to_string(k) + "]"));

  if (j.contains("feasibility_tol"))
    cfg.feasibility_tol = detail::number_at(j, "feasibility_tol", "config");
  if (j.contains("overproduction_tol"))
    cfg.overproduction_tol = detail::number_at(j, "overproduction_tol", "config");
  return cfg;
}

inline nlohmann::json config_to_json(const MarketConfig& cfg) {
  nlohmann::json j;
  j["K"] = cfg.K;
  j["d"] = cfg.demand;
  j["mu"] = cfg.transfer_rate;
  j["gamma"] = cfg.transfer_elasticity;
  j["rho"] = cfg.cost_exponent;
  j["dists"] = nlohmann::json::array();
  for (const auto& d : cfg.cost_law) j["dists"].push_back(distribution_to_json(d));
  j["feasibility_tol"] = cfg.feasibility_tol;
  j["overproduction_tol"] = cfg.overproduction_tol;
  return j;
}

inline MarketConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument("config: '" + path + "' is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

}  // namespace procur

#endif
