// Monte-Carlo harness: sampling determinism, summary statistics on hand
// vectors, the mechanism comparison verdicts, and the certifiers including a
// negative control that corrupts payments to prove the IC check can fail.

#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gtest/gtest.h"

#include "procur/config_json.hpp"
#include "procur/simulate.hpp"

using procur::MarketConfig;
using procur::MechanismId;

namespace {

std::string data_path(const char* name) {
  return std::string(PROCUR_TEST_DATA_DIR) + "/" + name;
}

MarketConfig reference_market() {
  return procur::require_valid(procur::load_config(data_path("reference_market.json")));
}

}  // namespace

TEST(Simulation, SampleCostsAreDeterministicAndPrefixStable) {
  const auto cfg = reference_market();
  const auto a = procur::sample_costs(cfg, 42, 10);
  const auto b = procur::sample_costs(cfg, 42, 10);
  EXPECT_EQ(a, b);

  // Row i depends on (seed, i) only, not on the batch size.
  const auto head = procur::sample_costs(cfg, 42, 4);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(head[i], a[i]);

  const auto other = procur::sample_costs(cfg, 43, 4);
  EXPECT_NE(other[0], a[0]);

  for (const auto& row : a)
    for (int k = 0; k < cfg.K; ++k) {
      EXPECT_GE(row[k], cfg.cost_law[k].lower());
      EXPECT_LE(row[k], cfg.cost_law[k].upper());
    }
  EXPECT_THROW(procur::sample_costs(cfg, 42, 0), std::invalid_argument);
}

TEST(Simulation, SummaryStatsMatchHandValues) {
  const auto s = procur::summarize({5.0, 1.0, 3.0, 2.0, 4.0});
  EXPECT_EQ(s.n, 5);
  EXPECT_DOUBLE_EQ(s.mean, 3.0);
  EXPECT_DOUBLE_EQ(s.min, 1.0);
  EXPECT_DOUBLE_EQ(s.max, 5.0);
  EXPECT_DOUBLE_EQ(s.median, 3.0);
  EXPECT_DOUBLE_EQ(s.q1, 2.0);
  EXPECT_DOUBLE_EQ(s.q3, 4.0);
  // Sample sd is sqrt(2.5); the mean's error shrinks by sqrt(5).
  EXPECT_NEAR(s.std_error, std::sqrt(2.5 / 5.0), 1e-12);
  EXPECT_EQ(s.outliers_low + s.outliers_high, 0);

  // Interpolated quartiles on an even count.
  const auto t = procur::summarize({1.0, 2.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(t.q1, 1.75);
  EXPECT_DOUBLE_EQ(t.median, 2.5);
  EXPECT_DOUBLE_EQ(t.q3, 3.25);

  const auto u = procur::summarize({1.0, 2.0, 3.0, 4.0, 100.0});
  EXPECT_EQ(u.outliers_high, 1);  // fence at q3 + 1.5 iqr = 7
  EXPECT_EQ(u.outliers_low, 0);

  EXPECT_THROW(procur::summarize({}), std::invalid_argument);
}

TEST(Simulation, FixedContractBatchReusesTheContract) {
  const auto cfg = reference_market();
  const auto costs = procur::sample_costs(cfg, 3, 8);
  const auto batch = procur::evaluate_batch(cfg, MechanismId::M5, costs);
  ASSERT_EQ(batch.outcomes.size(), 8u);
  for (const auto& o : batch.outcomes) {
    EXPECT_DOUBLE_EQ(o.revenue, batch.outcomes.front().revenue);
    EXPECT_LE(std::fabs(o.broker_profit), 1e-9);
    EXPECT_DOUBLE_EQ(o.alloc.x[0], batch.outcomes.front().alloc.x[0]);
  }
  // The rows are bitwise equal, but the summary mean rounds while summing
  // them, so the standard error only vanishes to machine precision.
  EXPECT_LE(batch.revenue.std_error, 1e-12);
  // Welfare still varies with the realized costs.
  EXPECT_GT(batch.welfare.std_error, 0.0);
  EXPECT_THROW(procur::evaluate_batch(cfg, MechanismId::M5, {}), std::invalid_argument);
}

TEST(Simulation, ComparisonVerdictsHoldOnSmallRun) {
  const auto cfg = reference_market();
  const auto rep = procur::compare_mechanisms(cfg, 60, 2024);
  EXPECT_EQ(rep.samples, 60);
  ASSERT_EQ(rep.batches.size(), 5u);
  EXPECT_EQ(rep.batches[0].id, MechanismId::M1);
  EXPECT_EQ(rep.batches[4].id, MechanismId::M6);
  ASSERT_EQ(rep.checks.size(), 9u);
  for (const auto& c : rep.checks) EXPECT_TRUE(c.pass) << c.name;
  EXPECT_TRUE(rep.all_pass);

  // The two identities hold per sample, not just on average.
  EXPECT_LE(rep.checks[2].max_abs_diff, 1e-4);  // Rev(M4) == Rev(M5)
  EXPECT_LE(rep.checks[4].max_abs_diff, 1e-4);  // SW(M2) == SW(M4)

  // Sandwich bounds come from the same batches.
  EXPECT_LE(rep.m3.revenue_lower,
            rep.m3.revenue_upper + 3.0 * rep.m3.revenue_upper_se);
}

TEST(Simulation, CertifierPassesTruthfulScreeningRuns) {
  const auto cfg = reference_market();
  const auto rep = procur::certify_ic_ir(cfg, MechanismId::M2, 4, 7, 5);
  EXPECT_EQ(rep.cost_samples, 4);
  EXPECT_EQ(rep.deviation_grid, 7);
  ASSERT_EQ(rep.ic_regret.size(), 2u);
  EXPECT_LE(rep.max_ic_regret, 1e-3);
  EXPECT_GE(rep.min_ir_utility, -1e-6);
  EXPECT_THROW(procur::certify_ic_ir(cfg, MechanismId::M2, 4, 2, 5),
               std::invalid_argument);
}

TEST(Simulation, CertifierCatchesCorruptedPayments) {
  // Negative control: shaving the truthful payment must surface as regret,
  // otherwise the certifier itself is broken.
  const auto cfg = reference_market();
  const auto rep = procur::certify_ic_ir(
      cfg, MechanismId::M2, 2, 15, 5, {}, 1e-8,
      [](procur::MechanismOutcome& o) { o.creator_payments[0] -= 0.5; });
  EXPECT_GE(rep.max_ic_regret, 0.1);
}

TEST(Simulation, FixedContractMechanismsHaveZeroRegretByConstruction) {
  const auto cfg = reference_market();
  for (auto id : {MechanismId::M5, MechanismId::M6}) {
    const auto rep = procur::certify_ic_ir(cfg, id, 3, 5, 5);
    EXPECT_EQ(rep.max_ic_regret, 0.0) << procur::to_string(id);
    for (double r : rep.ic_regret) EXPECT_EQ(r, 0.0);
    // Ceiling payments leave every realized cost whole.
    EXPECT_GE(rep.min_ir_utility, -1e-9);
  }
}

TEST(Simulation, UnionCertificationStaysClean) {
  const auto cfg = reference_market();
  const auto rep = procur::certify_ic_ir(cfg, MechanismId::M4, 2, 5, 5);
  ASSERT_EQ(rep.ic_regret.size(), 1u);
  EXPECT_LE(rep.max_ic_regret, 1e-3);
  EXPECT_GE(rep.min_ir_utility, -1e-6);
}

TEST(Simulation, ValiditySweepFindsNoMonotonicityBreaks) {
  const auto cfg = reference_market();
  for (auto id : {MechanismId::M1, MechanismId::M2, MechanismId::M5}) {
    const auto rep = procur::certify_validity(cfg, id, 9);
    EXPECT_EQ(rep.violations, 0) << procur::to_string(id);
    EXPECT_EQ(rep.points_checked, 18);
    EXPECT_DOUBLE_EQ(rep.worst_violation, 0.0);
  }
  EXPECT_THROW(procur::certify_validity(cfg, MechanismId::M2, 2), std::invalid_argument);
}

TEST(Simulation, OverproductionScanSeparatesRegimes) {
  // Without transfers every domain produces exactly its demand.
  auto cfg = reference_market();
  const auto quiet =
      procur::overproduction_scan(procur::without_transfers(cfg), {1.2, 0.45},
                                  MechanismId::M2);
  for (int k = 0; k < 2; ++k) {
    EXPECT_FALSE(quiet.flag[k]);
    EXPECT_NEAR(quiet.slack[k], 0.0, 1e-6);
  }

  // One-way transfer regime: the cheap low-exponent domain overshoots its own
  // demand to feed the expensive one.
  const auto regime = procur::load_config(data_path("transfer_regime.json"));
  const auto hot = procur::overproduction_scan(regime, {0.5, 0.5}, MechanismId::M2);
  EXPECT_TRUE(hot.flag[0]);
  EXPECT_GT(hot.slack[0], 1.0);
}

TEST(Simulation, DemandGridScanValidatesArguments) {
  const auto cfg = reference_market();
  const std::vector<double> c = {1.2, 0.45};
  EXPECT_THROW(procur::demand_grid_scan(cfg, c, 1, 20, 1, 20, 1), std::invalid_argument);
  EXPECT_THROW(procur::demand_grid_scan(cfg, c, 0, 20, 1, 20, 5), std::invalid_argument);
  EXPECT_THROW(procur::demand_grid_scan(cfg, c, 5, 2, 1, 20, 5), std::invalid_argument);

  MarketConfig one;
  one.K = 1;
  one.demand = {1.0};
  one.transfer_rate = {{0.0}};
  one.transfer_elasticity = {{0.0}};
  one.cost_exponent = {1.0};
  one.cost_law = {procur::CostDistribution::uniform(0.0, 1.0)};
  EXPECT_THROW(procur::demand_grid_scan(one, {0.5}, 1, 20, 1, 20, 5),
               std::invalid_argument);
}

TEST(Simulation, DemandGridScanShowsTransferPlateau) {
  const auto cfg = procur::load_config(data_path("overproduction_domain1.json"));
  std::vector<double> c;
  {
    std::ifstream in(data_path("overproduction_domain1.json"));
    nlohmann::json j;
    in >> j;
    c = j["realized_cost"].get<std::vector<double>>();
  }
  const auto rows = procur::demand_grid_scan(cfg, c, 1, 20, 1, 20, 5);
  ASSERT_EQ(rows.size(), 25u);

  // In the d2 = 20 column the cheap domain's own constraint goes slack for
  // small d1, so its allocation is flat there and flagged as overproduction.
  std::vector<double> x1_flat;
  for (const auto& r : rows)
    if (r.d2 == 20.0 && r.d1 <= 10.0) {
      EXPECT_TRUE(r.over1) << "d1 = " << r.d1;
      x1_flat.push_back(r.x1);
    }
  ASSERT_GE(x1_flat.size(), 2u);
  for (double v : x1_flat) EXPECT_NEAR(v, x1_flat.front(), 1e-4 * x1_flat.front());

  for (const auto& r : rows) {
    EXPECT_GT(r.x1, 0.0);
    EXPECT_GT(r.x2, 0.0);
  }
}

TEST(Simulation, TransferAblationImprovesBothObjectives) {
  const auto cfg = reference_market();
  const auto rep = procur::genai_ablation(cfg, MechanismId::M2, 40, 2024);
  EXPECT_EQ(rep.samples, 40);
  ASSERT_EQ(rep.rows.size(), 40u);
  EXPECT_TRUE(rep.per_sample_dominance);
  EXPECT_GE(rep.worst_revenue_regression, -1e-6);
  EXPECT_GE(rep.worst_welfare_regression, -1e-6);
  EXPECT_GT(rep.revenue_gain_pct, 0.0);
  EXPECT_GT(rep.welfare_gain_pct, 0.0);
  // Transferability buys the platform more than it buys total welfare.
  EXPECT_GT(rep.revenue_gain_pct, rep.welfare_gain_pct);
}

TEST(Simulation, WithoutTransfersZeroesRatesOnly) {
  const auto cfg = reference_market();
  const auto cut = procur::without_transfers(cfg);
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < 2; ++k) {
      EXPECT_DOUBLE_EQ(cut.transfer_rate[i][k], 0.0);
      EXPECT_DOUBLE_EQ(cut.transfer_elasticity[i][k], cfg.transfer_elasticity[i][k]);
    }
  EXPECT_EQ(cut.demand, cfg.demand);
}
