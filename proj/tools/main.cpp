#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "longfair/commands.hpp"
#include "longfair/io.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<double> eps_update;
  std::optional<int> n_individuals;
  std::optional<int> steps;
  std::optional<int> replicates;
};

void add_common(CLI::App* sub, CommonArgs& args) {
  sub->add_option("-c,--config", args.config_path, "run configuration JSON")
      ->required();
  sub->add_option("--seed", args.seed, "override the root seed");
  sub->add_option("--out", args.out_dir, "override the output directory");
  sub->add_option("--eps-update", args.eps_update,
                  "override the feedback sensitivity of the update rule");
  sub->add_option("--n", args.n_individuals, "override the population size");
  sub->add_option("--steps", args.steps, "override the recorded steps");
  sub->add_option("--replicates", args.replicates,
                  "override the evaluation replicate count");
}

// Flags win over the file.
longfair::RunConfig resolve(const CommonArgs& args) {
  longfair::RunConfig cfg = longfair::load_config(args.config_path);
  if (args.seed) {
    nlohmann::json j = longfair::config_to_json(cfg);
    j["seed"] = *args.seed;
    cfg = longfair::config_from_json(j);  // re-derive stage seeds
  }
  if (args.out_dir) cfg.output_dir = *args.out_dir;
  if (args.eps_update) cfg.gen.eps_update = *args.eps_update;
  if (args.n_individuals) cfg.gen.n_individuals = *args.n_individuals;
  if (args.steps) cfg.gen.steps = *args.steps;
  if (args.replicates) cfg.replicates = *args.replicates;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sequential decision fairness pipeline"};
  app.require_subcommand(1);

  CommonArgs gen_args, train_args, eval_args, sweep_args, sens_args;
  bool dry_run = false;
  std::vector<double> eps_list;

  CLI::App* gen = app.add_subcommand("generate", "simulate the panel dataset");
  add_common(gen, gen_args);
  gen->add_flag("--dry-run", dry_run, "validate the config and exit");

  CLI::App* train = app.add_subcommand("train", "train the iterative model and baselines");
  add_common(train, train_args);

  CLI::App* eval = app.add_subcommand("evaluate", "deploy models and emit the metric table");
  add_common(eval, eval_args);

  CLI::App* sweep = app.add_subcommand("sweep", "rerun training across update sensitivities");
  add_common(sweep, sweep_args);
  sweep->add_option("--eps", eps_list, "sensitivities to sweep (defaults to config)");

  CLI::App* sens = app.add_subcommand("sensitivity", "estimate the convergence-theory constants");
  add_common(sens, sens_args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      return longfair::cmd_generate(resolve(gen_args), dry_run, std::cout);
    }
    if (train->parsed()) {
      return longfair::cmd_train(resolve(train_args), std::cout);
    }
    if (eval->parsed()) {
      return longfair::cmd_evaluate(resolve(eval_args), std::cout);
    }
    if (sweep->parsed()) {
      longfair::RunConfig cfg = resolve(sweep_args);
      std::vector<double> eps = eps_list.empty() ? cfg.sweep_eps : eps_list;
      return longfair::cmd_sweep(cfg, eps, std::cout);
    }
    if (sens->parsed()) {
      return longfair::cmd_sensitivity(resolve(sens_args), std::cout);
    }
  } catch (const longfair::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
