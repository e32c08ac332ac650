#include <CLI11.hpp>

#include "commands.hpp"
#include "config.hpp"

namespace {

struct CliArgs {
  std::string config_path;
  std::string out_dir;
  std::int64_t seed = -1;
  int replications = 0;
  std::string corrupt_entry;
};

void add_common_options(CLI::App* sub, CliArgs& args) {
  sub->add_option("--config", args.config_path, "scenario config file")
      ->required();
  sub->add_option("--out", args.out_dir,
                  "output directory (default: config [output] directory)");
  sub->add_option("--seed", args.seed, "override the config seed");
  sub->add_option("--replications", args.replications,
                  "override the config replication count");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "kfbias: first-order propagation of parameter bias through "
      "(extended) Kalman filters"};
  app.require_subcommand(1);

  CliArgs args;
  auto* demo = app.add_subcommand(
      "ar1-demo", "exact vs first-order error curves on one AR(1) trajectory");
  auto* prop = app.add_subcommand(
      "propagate", "expected error and augmented covariance blocks per time");
  auto* validate = app.add_subcommand(
      "validate", "Monte Carlo check of the covariance recursions");
  auto* order = app.add_subcommand(
      "order-check", "residual decay of the first-order expansion");
  for (CLI::App* sub : {demo, prop, validate, order}) {
    add_common_options(sub, args);
  }
  validate
      ->add_option("--corrupt-entry", args.corrupt_entry,
                   "test hook: perturb one theory entry by name")
      ->group("");  // hidden from help

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  kfbias::cli::ScenarioConfig cfg;
  try {
    cfg = kfbias::cli::parse_config_file(args.config_path);
  } catch (const kfbias::cli::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }

  kfbias::cli::CommandOptions opts;
  if (!args.out_dir.empty()) opts.out_dir = args.out_dir;
  if (args.seed >= 0) opts.seed_override = static_cast<std::uint64_t>(args.seed);
  if (args.replications > 0) opts.replications_override = args.replications;
  opts.corrupt_entry = args.corrupt_entry;

  const std::string name = app.get_subcommands().front()->get_name();
  return kfbias::cli::run_command(name, cfg, opts);
}
