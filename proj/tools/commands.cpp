#include "commands.hpp"

#include <chrono>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include <kfbias/bias.hpp>
#include <kfbias/kalman.hpp>
#include <kfbias/oracle.hpp>
#include <kfbias/simulate.hpp>

#include "csv.hpp"

namespace kfbias::cli {

namespace {

using nlohmann::ordered_json;

struct Scenario {
  std::unique_ptr<StateSpaceModel> model;
  ParameterVector theta0;
  ParameterVector theta;
  BiasSpec eps;
  FilterInit init;  // shared by every filter in the run
  int T = 0;
  std::uint64_t seed = 0;
};

Scenario resolve(const ScenarioConfig& cfg, const CommandOptions& opts) {
  Scenario sc;
  if (cfg.kind == "ar1") {
    sc.model = make_ar1(cfg.theta0, cfg.q, cfg.r);
  } else if (cfg.kind == "tanh") {
    sc.model = make_tanh(cfg.q, cfg.r);
  } else {
    throw ConfigError("unknown model kind '" + cfg.kind + "'");
  }
  sc.theta0 = ParameterVector(cfg.theta0);
  sc.theta = ParameterVector(cfg.biased_theta());
  sc.eps = BiasSpec(cfg.bias_value());
  sc.init = default_init(*sc.model, sc.theta0);
  sc.T = cfg.horizon;
  sc.seed = opts.seed_override.value_or(cfg.seed);
  return sc;
}

std::filesystem::path resolve_out_dir(const ScenarioConfig& cfg,
                                      const CommandOptions& opts) {
  const std::filesystem::path dir = opts.out_dir.value_or(cfg.directory);
  std::filesystem::create_directories(dir);
  return dir;
}

ordered_json config_echo(const ScenarioConfig& cfg, const Scenario& sc) {
  ordered_json j;
  j["text"] = serialize_config(cfg);
  j["kind"] = cfg.kind;
  j["theta0"] = cfg.theta0;
  j["theta"] = cfg.biased_theta();
  j["epsilon"] = cfg.bias_value();
  j["q"] = cfg.q;
  j["r"] = cfg.r;
  j["horizon"] = cfg.horizon;
  j["seed"] = sc.seed;
  return j;
}

void write_report(const std::filesystem::path& out_dir, ordered_json j,
                  std::chrono::steady_clock::time_point started) {
  const auto elapsed = std::chrono::duration<double>(
                           std::chrono::steady_clock::now() - started)
                           .count();
  j["duration_seconds"] = elapsed;
  std::ofstream out(out_dir / "report.json", std::ios::binary);
  out << j.dump(2) << "\n";
}

std::vector<std::string> indexed_headers(const char* base, Eigen::Index rows,
                                         Eigen::Index cols) {
  std::vector<std::string> h;
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      h.push_back(std::string(base) + "_" + std::to_string(i) + "_" +
                  std::to_string(j));
    }
  }
  return h;
}

}  // namespace

int cmd_ar1_demo(const ScenarioConfig& cfg, const CommandOptions& opts) {
  const auto started = std::chrono::steady_clock::now();
  if (cfg.kind != "ar1") {
    throw ConfigError("ar1-demo requires model kind 'ar1'");
  }
  const Scenario sc = resolve(cfg, opts);
  const auto out_dir = resolve_out_dir(cfg, opts);

  const Trajectory traj =
      simulate(*sc.model, sc.theta0, sc.T, sc.init.x0, sc.init.P0, sc.seed);
  const ErrorComparison cmp = compare_error_paths(
      *sc.model, sc.theta0, sc.theta, traj.observations, sc.init, sc.init.P0);

  const double scale = cfg.scale_by_100 ? 100.0 : 1.0;
  const auto csv_path = out_dir / "ar1_demo.csv";
  CsvWriter csv(csv_path, {"t", "exact_error", "approx_error", "abs_gap"});
  for (std::size_t t = 0; t < cmp.exact.size(); ++t) {
    csv.row({static_cast<double>(t + 1), scale * cmp.exact[t](0),
             scale * cmp.approx[t](0), scale * cmp.abs_gap[t](0)});
  }

  ordered_json report;
  report["command"] = "ar1-demo";
  report["config"] = config_echo(cfg, sc);
  report["outputs"] = {{"csv", {csv_path.string()}}};
  report["summary"] = {{"max_gap", scale * cmp.max_gap},
                       {"scaled_by_100", cfg.scale_by_100},
                       {"rows", cmp.exact.size()}};
  write_report(out_dir, std::move(report), started);
  return 0;
}

int cmd_propagate(const ScenarioConfig& cfg, const CommandOptions& opts) {
  const auto started = std::chrono::steady_clock::now();
  const Scenario sc = resolve(cfg, opts);
  const auto out_dir = resolve_out_dir(cfg, opts);

  const Trajectory traj =
      simulate(*sc.model, sc.theta0, sc.T, sc.init.x0, sc.init.P0, sc.seed);
  const auto path = run_filter(*sc.model, sc.theta, traj.observations, sc.init);
  const auto steps =
      propagate_bias(*sc.model, sc.theta, sc.eps, path, sc.init, sc.init.P0);

  const Eigen::Index nx = sc.model->state_dim();
  const Eigen::Index ny = sc.model->obs_dim();
  const auto csv_path = out_dir / "propagation.csv";

  std::vector<std::string> header;
  if (nx == 1 && ny == 1) {
    header = {"t", "m", "V", "S", "P", "Vy", "Sy", "Py"};
  } else {
    header = {"t"};
    for (Eigen::Index i = 0; i < nx; ++i) {
      header.push_back("m_" + std::to_string(i));
    }
    for (const auto& [base, rows, cols] :
         {std::tuple{"V", nx, nx}, {"S", nx, nx}, {"P", nx, nx},
          {"Vy", ny, ny}, {"Sy", ny, ny}, {"Py", ny, ny}}) {
      const auto part = indexed_headers(base, rows, cols);
      header.insert(header.end(), part.begin(), part.end());
    }
  }
  CsvWriter csv(csv_path, header);
  for (const auto& step : steps) {
    std::vector<double> row{static_cast<double>(step.t)};
    for (Eigen::Index i = 0; i < nx; ++i) {
      row.push_back(step.mean.m(i));
    }
    for (const Eigen::MatrixXd* block :
         {&step.cov.V, &step.cov.S, &step.cov.P, &step.cov.Vy, &step.cov.Sy,
          &step.cov.Py}) {
      for (Eigen::Index i = 0; i < block->rows(); ++i) {
        for (Eigen::Index j = 0; j < block->cols(); ++j) {
          row.push_back((*block)(i, j));
        }
      }
    }
    csv.row(row);
  }

  ordered_json report;
  report["command"] = "propagate";
  report["config"] = config_echo(cfg, sc);
  report["outputs"] = {{"csv", {csv_path.string()}}};
  report["summary"] = {{"rows", steps.size()},
                       {"final_P", steps.back().cov.P(0, 0)},
                       {"final_V", steps.back().cov.V(0, 0)},
                       {"final_m", steps.back().mean.m(0)}};
  write_report(out_dir, std::move(report), started);
  return 0;
}

int cmd_validate(const ScenarioConfig& cfg, const CommandOptions& opts) {
  const auto started = std::chrono::steady_clock::now();
  const Scenario sc = resolve(cfg, opts);
  const auto out_dir = resolve_out_dir(cfg, opts);

  const int N = opts.replications_override.value_or(cfg.replications.value_or(0));
  if (N < 2) {
    throw ConfigError("validate requires replications >= 2");
  }
  if (!sc.model->is_linear_in_x()) {
    throw ConfigError(
        "validate requires a model linear in x (the moment recursion is "
        "data-dependent under the EKF)");
  }
  for (int t : cfg.check_times) {
    if (t > cfg.horizon) {
      throw ConfigError("check time " + std::to_string(t) +
                        " exceeds the horizon");
    }
  }

  // Theory side: a linear filter's gain sequence does not depend on the data,
  // so any single run pins the recursion.
  const Trajectory traj =
      simulate(*sc.model, sc.theta0, sc.T, sc.init.x0, sc.init.P0, sc.seed);
  const auto path = run_filter(*sc.model, sc.theta, traj.observations, sc.init);
  const auto steps =
      propagate_bias(*sc.model, sc.theta, sc.eps, path, sc.init, sc.init.P0);

  const McReport mc = monte_carlo_moments(
      *sc.model, sc.theta0, sc.theta, sc.T, N, sc.seed, cfg.check_times,
      sc.init.x0, sc.init.P0, sc.init);

  auto rows = compare_covariances(mc, steps);
  bool corrupt_found = false;
  for (auto& row : rows) {
    if (!opts.corrupt_entry.empty() && row.entry == opts.corrupt_entry) {
      row.theory += std::max(10.0 * row.se, 1e-3);
      row.z = (row.se > 0.0) ? (row.empirical - row.theory) / row.se
                             : std::numeric_limits<double>::infinity();
      corrupt_found = true;
    }
  }
  if (!opts.corrupt_entry.empty() && !corrupt_found) {
    throw ConfigError("corrupt-entry '" + opts.corrupt_entry +
                      "' matches no comparison row");
  }

  const auto csv_path = out_dir / "validation.csv";
  CsvWriter csv(csv_path, {"entry", "t", "theory", "empirical", "se", "z", "pass"});
  int failures = 0;
  double max_abs_z = 0.0;
  std::vector<std::string> failing;
  for (const auto& row : rows) {
    const bool pass = std::abs(row.z) <= 4.0;
    if (!pass) {
      ++failures;
      failing.push_back(row.entry);
    }
    max_abs_z = std::max(max_abs_z, std::abs(row.z));
    csv.row_with_label(row.entry,
                       {static_cast<double>(row.t), row.theory, row.empirical,
                        row.se, row.z, pass ? 1.0 : 0.0});
  }

  ordered_json report;
  report["command"] = "validate";
  report["config"] = config_echo(cfg, sc);
  report["outputs"] = {{"csv", {csv_path.string()}}};
  report["summary"] = {{"replications", N},
                       {"entries", rows.size()},
                       {"failures", failures},
                       {"failing_entries", failing},
                       {"max_abs_z", max_abs_z},
                       {"z_limit", 4.0}};
  write_report(out_dir, std::move(report), started);

  if (failures > 0) {
    std::cerr << "validate: " << failures
              << " entries outside 4 standard errors:";
    for (const auto& name : failing) {
      std::cerr << ' ' << name;
    }
    std::cerr << "\n";
    return 1;
  }
  return 0;
}

int cmd_order_check(const ScenarioConfig& cfg, const CommandOptions& opts) {
  const auto started = std::chrono::steady_clock::now();
  const Scenario sc = resolve(cfg, opts);
  const auto out_dir = resolve_out_dir(cfg, opts);

  if (!cfg.scales || cfg.scales->size() < 3) {
    throw ConfigError("order-check requires a scales list with >= 3 entries");
  }
  const double eps_val = cfg.bias_value();
  if (eps_val == 0.0) {
    throw ConfigError("order-check requires a nonzero bias direction");
  }
  const Eigen::VectorXd direction =
      Eigen::VectorXd::Constant(1, eps_val > 0 ? 1.0 : -1.0);
  const double threshold = cfg.order_threshold.value_or(
      sc.model->is_linear_in_x() ? 1.8 : 1.5);

  const OrderFit fit = order_of_accuracy(*sc.model, sc.theta0, direction,
                                         *cfg.scales, sc.T, sc.seed);

  const auto csv_path = out_dir / "order_check.csv";
  CsvWriter csv(csv_path, {"scale", "residual"});
  for (std::size_t i = 0; i < fit.scales.size(); ++i) {
    csv.row({fit.scales[i], fit.residuals[i]});
  }

  const bool pass = fit.exact_to_machine || fit.slope >= threshold;
  ordered_json report;
  report["command"] = "order-check";
  report["config"] = config_echo(cfg, sc);
  report["outputs"] = {{"csv", {csv_path.string()}}};
  report["summary"] = {{"slope", fit.slope},
                       {"intercept", fit.intercept},
                       {"threshold", threshold},
                       {"exact_to_machine_precision", fit.exact_to_machine},
                       {"pass", pass}};
  write_report(out_dir, std::move(report), started);

  if (!pass) {
    std::cerr << "order-check: fitted slope " << fit.slope
              << " below threshold " << threshold << "\n";
    return 1;
  }
  return 0;
}

int run_command(const std::string& name, const ScenarioConfig& cfg,
                const CommandOptions& opts) {
  try {
    if (name == "ar1-demo") return cmd_ar1_demo(cfg, opts);
    if (name == "propagate") return cmd_propagate(cfg, opts);
    if (name == "validate") return cmd_validate(cfg, opts);
    if (name == "order-check") return cmd_order_check(cfg, opts);
    std::cerr << "unknown command '" << name << "'\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace kfbias::cli
