// Command-line front end: validates market configs, runs single mechanisms,
// compares the full mechanism set, sweeps demand grids, and certifies
// incentive properties. Exit codes: 0 all verdicts pass, 1 a verdict or
// invariant failed, 2 bad input.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "procur/procur.hpp"

namespace {

struct CommonOpts {
  std::string config_path;
  std::uint64_t seed = 1;
  int samples = 1000;
  std::string out_dir;
  int quad_panels = 4;
  int quad_nodes = 16;
  double tol = 1e-8;
  std::string mechanism = "M1";
  std::vector<double> cost;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool needs_mechanism) {
  cmd->add_option("--config", o.config_path, "market config JSON")
      ->required()
      ->envname("PROCUR_CONFIG");
  cmd->add_option("--seed", o.seed, "random seed")->envname("PROCUR_SEED");
  cmd->add_option("--samples", o.samples, "number of cost samples")
      ->envname("PROCUR_SAMPLES");
  cmd->add_option("--out", o.out_dir, "output directory (stdout if omitted)")
      ->envname("PROCUR_OUT");
  cmd->add_option("--quad-panels", o.quad_panels, "quadrature panels per integral")
      ->envname("PROCUR_QUAD_PANELS");
  cmd->add_option("--quad-nodes", o.quad_nodes, "quadrature nodes per panel (8, 16 or 32)")
      ->envname("PROCUR_QUAD_NODES");
  cmd->add_option("--tol", o.tol, "solver tolerance")->envname("PROCUR_TOL");
  if (needs_mechanism)
    cmd->add_option("--mechanism", o.mechanism, "one of M1, M2, M4, M5, M6")
        ->envname("PROCUR_MECHANISM");
  cmd->add_option("--cost", o.cost, "realized cost vector c_1,...,c_K")
      ->delimiter(',')
      ->envname("PROCUR_COST");
}

procur::QuadratureSpec quad_of(const CommonOpts& o) {
  procur::QuadratureSpec q;
  q.panels = o.quad_panels;
  q.nodes_per_panel = o.quad_nodes;
  procur::validate(q);
  return q;
}

procur::MarketConfig load_valid_config(const CommonOpts& o) {
  procur::MarketConfig cfg = procur::load_config(o.config_path);
  procur::require_valid(cfg);
  return cfg;
}

// Realized costs come from --cost, from a "realized_cost" key in the config
// file, or failing both from one seeded draw.
std::vector<double> realized_costs(const CommonOpts& o, const procur::MarketConfig& cfg) {
  if (!o.cost.empty()) {
    if (static_cast<int>(o.cost.size()) != cfg.K)
      throw std::invalid_argument("--cost needs exactly " + std::to_string(cfg.K) +
                                  " entries");
    return o.cost;
  }
  std::ifstream in(o.config_path);
  nlohmann::json j;
  in >> j;
  if (j.contains("realized_cost")) {
    const auto c = j["realized_cost"].get<std::vector<double>>();
    if (static_cast<int>(c.size()) != cfg.K)
      throw std::invalid_argument("config realized_cost needs exactly " +
                                  std::to_string(cfg.K) + " entries");
    return c;
  }
  return procur::sample_costs(cfg, o.seed, 1).front();
}

std::ofstream open_out(const std::string& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  const auto path = std::filesystem::path(dir) / name;
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write '" + path.string() + "'");
  return out;
}

void emit_json(const CommonOpts& o, const std::string& name, const nlohmann::json& j) {
  if (o.out_dir.empty()) {
    std::cout << j.dump(2) << '\n';
  } else {
    auto out = open_out(o.out_dir, name);
    out << j.dump(2) << '\n';
  }
}

int cmd_validate(const CommonOpts& o) {
  procur::MarketConfig cfg = procur::load_config(o.config_path);
  const auto rep = procur::validate_config(cfg);
  nlohmann::json j{{"valid", rep.ok}, {"errors", rep.errors}, {"warnings", rep.warnings}};
  emit_json(o, "validate.json", j);
  return rep.ok ? 0 : 2;
}

int cmd_run(const CommonOpts& o) {
  const auto cfg = load_valid_config(o);
  const auto id = procur::mechanism_from_string(o.mechanism);
  const auto c = realized_costs(o, cfg);
  const auto outcome = procur::run_mechanism(cfg, id, c, quad_of(o), o.tol);
  emit_json(o, "run.json", procur::outcome_to_json(outcome));
  return 0;
}

int cmd_compare(const CommonOpts& o) {
  const auto cfg = load_valid_config(o);
  const auto rep = procur::compare_mechanisms(cfg, o.samples, o.seed, quad_of(o), o.tol);
  if (!o.out_dir.empty()) {
    auto csv = open_out(o.out_dir, "compare_samples.csv");
    procur::write_batch_csv(csv, rep.batches);
  }
  emit_json(o, "compare_summary.json", procur::comparison_to_json(rep));
  return rep.all_pass ? 0 : 1;
}

int cmd_heatmap(const CommonOpts& o, double d1_lo, double d1_hi, double d2_lo,
                double d2_hi, int resolution) {
  const auto cfg = load_valid_config(o);
  const auto id = procur::mechanism_from_string(o.mechanism);
  const auto c = realized_costs(o, cfg);
  const auto rows =
      procur::demand_grid_scan(cfg, c, d1_lo, d1_hi, d2_lo, d2_hi, resolution, id, o.tol);
  if (o.out_dir.empty()) {
    procur::write_demand_grid_csv(std::cout, rows);
  } else {
    auto csv = open_out(o.out_dir, "heatmap.csv");
    procur::write_demand_grid_csv(csv, rows);
  }
  return 0;
}

int cmd_transfer_ablation(const CommonOpts& o, double d1_lo, double d1_hi, int resolution) {
  const auto cfg = load_valid_config(o);
  const auto id = procur::mechanism_from_string(o.mechanism);
  const auto c = realized_costs(o, cfg);
  if (cfg.K != 2)
    throw std::invalid_argument("transfer-ablation sweeps d1 and needs a 2-domain market");
  std::vector<procur::DemandGridRow> rows;
  procur::MarketConfig sweep_cfg = cfg;
  for (int i = 0; i < resolution; ++i) {
    const double d1 =
        resolution == 1 ? d1_lo : d1_lo + (d1_hi - d1_lo) * i / (resolution - 1);
    sweep_cfg.demand[0] = d1;
    const auto scan = procur::overproduction_scan(sweep_cfg, c, id, o.tol);
    procur::DemandGridRow r;
    r.d1 = d1;
    r.d2 = cfg.demand[1];
    r.x1 = scan.alloc.x[0];
    r.x2 = scan.alloc.x[1];
    r.slack1 = scan.slack[0];
    r.slack2 = scan.slack[1];
    r.over1 = scan.flag[0];
    r.over2 = scan.flag[1];
    rows.push_back(r);
  }
  if (o.out_dir.empty()) {
    procur::write_demand_grid_csv(std::cout, rows);
  } else {
    auto csv = open_out(o.out_dir, "transfer_ablation.csv");
    procur::write_demand_grid_csv(csv, rows);
  }
  return 0;
}

int cmd_genai_ablation(const CommonOpts& o) {
  const auto cfg = load_valid_config(o);
  const auto id = procur::mechanism_from_string(o.mechanism);
  const auto rep = procur::genai_ablation(cfg, id, o.samples, o.seed, quad_of(o), o.tol);
  if (!o.out_dir.empty()) {
    auto csv = open_out(o.out_dir, "genai_ablation.csv");
    procur::write_ablation_csv(csv, rep);
  }
  emit_json(o, "genai_ablation_summary.json", procur::ablation_to_json(rep));
  return rep.per_sample_dominance ? 0 : 1;
}

int cmd_certify(const CommonOpts& o, int grid_n, double ic_tol, double ir_tol) {
  const auto cfg = load_valid_config(o);
  const auto id = procur::mechanism_from_string(o.mechanism);
  auto rep = procur::certify_ic_ir(cfg, id, o.samples, grid_n, o.seed, quad_of(o), o.tol);
  const auto validity = procur::certify_validity(cfg, id, grid_n, o.tol);
  rep.validity_violations = validity.violations;
  rep.worst_validity_violation = validity.worst_violation;
  emit_json(o, "certify.json", procur::certification_to_json(rep));
  const bool pass = rep.max_ic_regret <= ic_tol && rep.min_ir_utility >= -ir_tol &&
                    rep.validity_violations == 0;
  return pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"procurement mechanism simulator"};
  app.require_subcommand(1);

  CommonOpts o;
  double d1_lo = 1.0, d1_hi = 20.0, d2_lo = 1.0, d2_hi = 20.0;
  int resolution = 40;
  int grid_n = 15;
  double ic_tol = 1e-3, ir_tol = 1e-6;

  auto* validate = app.add_subcommand("validate", "check a market config");
  add_common(validate, o, false);

  auto* run = app.add_subcommand("run", "run one mechanism at a realized cost");
  add_common(run, o, true);

  auto* compare = app.add_subcommand("compare", "compare mechanisms on shared samples");
  add_common(compare, o, false);

  auto* heatmap = app.add_subcommand("heatmap", "demand-grid allocation sweep");
  add_common(heatmap, o, true);
  heatmap->add_option("--d1-min", d1_lo, "d1 range start");
  heatmap->add_option("--d1-max", d1_hi, "d1 range end");
  heatmap->add_option("--d2-min", d2_lo, "d2 range start");
  heatmap->add_option("--d2-max", d2_hi, "d2 range end");
  heatmap->add_option("--resolution", resolution, "grid points per axis");

  auto* transfer =
      app.add_subcommand("transfer-ablation", "sweep d1 at fixed d2 and realized costs");
  add_common(transfer, o, true);
  transfer->add_option("--d1-min", d1_lo, "d1 range start");
  transfer->add_option("--d1-max", d1_hi, "d1 range end");
  transfer->add_option("--resolution", resolution, "sweep points");

  auto* genai = app.add_subcommand("genai-ablation",
                                   "paired runs with and without data transfer");
  add_common(genai, o, true);

  auto* certify = app.add_subcommand("certify", "empirical IC/IR/validity certification");
  add_common(certify, o, true);
  certify->add_option("--grid", grid_n, "deviation grid points per axis");
  certify->add_option("--ic-tol", ic_tol, "max tolerated IC regret");
  certify->add_option("--ir-tol", ir_tol, "max tolerated IR shortfall");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp")
      return app.exit(e);
    std::cerr << e.what() << '\n';
    return 2;
  }

  try {
    if (app.got_subcommand(validate)) return cmd_validate(o);
    if (app.got_subcommand(run)) return cmd_run(o);
    if (app.got_subcommand(compare)) return cmd_compare(o);
    if (app.got_subcommand(heatmap))
      return cmd_heatmap(o, d1_lo, d1_hi, d2_lo, d2_hi, resolution);
    if (app.got_subcommand(transfer))
      return cmd_transfer_ablation(o, d1_lo, d1_hi, resolution);
    if (app.got_subcommand(genai)) return cmd_genai_ablation(o);
    if (app.got_subcommand(certify)) {
      if (certify->count("--samples") == 0) o.samples = 50;
      return cmd_certify(o, grid_n, ic_tol, ir_tol);
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
