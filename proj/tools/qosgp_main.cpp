#include <CLI11.hpp>

#include <iostream>

#include "qosgp/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"QoS latency prediction with Gaussian process regression"};
  app.require_subcommand(1);

  qosgp::CommandOptions opts;
  std::string out_dir;
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* sub, bool with_config) {
    if (with_config) sub->add_option("--config", opts.config, "Experiment file")->required();
    sub->add_option("--out", out_dir, "Output directory");
    sub->add_option("--seed", seed, "Override master_seed");
  };

  auto* simulate = app.add_subcommand("simulate", "Simulate traces and extract datasets");
  add_common(simulate, true);

  auto* train = app.add_subcommand("train", "Fit GP hyperparameters on a dataset CSV");
  add_common(train, true);
  train->add_option("--dataset", opts.dataset, "Dataset CSV (x_1..x_D,y)")->required();
  train->add_option("--kernel", opts.kernel, "Kernel name from the experiment file")->required();

  auto* predict = app.add_subcommand("predict", "Predict with a saved model");
  predict->add_option("--model", opts.model, "Model JSON")->required();
  predict->add_option("--input", opts.input, "Input CSV with columns x_1..x_D")->required();
  predict->add_option("--out", out_dir, "Output directory");

  auto* benchmark = app.add_subcommand("benchmark", "Run the GP vs CART replication benchmark");
  add_common(benchmark, true);
  benchmark->add_option("--jobs", opts.jobs, "Replications run in parallel")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return qosgp::kExitUserError;
  }

  for (auto* sub : {simulate, train, predict, benchmark}) {
    if (!sub->parsed()) continue;
    if (sub->count("--out")) opts.out = out_dir;
    if (sub != predict && sub->count("--seed")) opts.seed = seed;
  }

  if (simulate->parsed()) return qosgp::cmd_simulate(opts, std::cout, std::cerr);
  if (train->parsed()) return qosgp::cmd_train(opts, std::cout, std::cerr);
  if (predict->parsed()) return qosgp::cmd_predict(opts, std::cout, std::cerr);
  return qosgp::cmd_benchmark(opts, std::cout, std::cerr);
}
