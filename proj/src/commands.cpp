#include "qosgp/commands.hpp"

#include <cmath>
#include <functional>
#include <iomanip>
#include <ostream>

#include "qosgp/benchmark.hpp"
#include "qosgp/config.hpp"
#include "qosgp/errors.hpp"
#include "qosgp/rng.hpp"
#include "qosgp/serialization.hpp"

namespace qosgp {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const InvalidInput& e) {
    err << "error: " << e.what() << "\n";
    return kExitUserError;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return kExitRuntimeError;
  } catch (const ResourceError& e) {
    err << "resource error: " << e.what() << "\n";
    return kExitRuntimeError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntimeError;
  }
}

ExperimentConfig load_with_overrides(const CommandOptions& opts) {
  ExperimentConfig cfg = load_experiment_config(opts.config);
  if (opts.out) cfg.output_dir = *opts.out;
  if (opts.seed) cfg.master_seed = *opts.seed;
  return cfg;
}

fs::path prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InvalidInput("cannot create output directory '" + dir.string() + "': " + ec.message());
  return dir;
}

std::string replication_file(const std::string& stem, int r) {
  return stem + "_r" + std::to_string(r) + ".csv";
}

}  // namespace

int cmd_simulate(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ExperimentConfig cfg = load_with_overrides(opts);
    const fs::path dir = prepare_dir(cfg.output_dir);
    json manifest{{"master_seed", cfg.master_seed}, {"replications", json::array()}};
    for (int r = 0; r < cfg.replications; ++r) {
      const SimulationConfig sim = replication_simulation_config(cfg, r);
      const SimulationTrace trace = run(sim);
      const Dataset data = extract_dataset(trace, sim.window, sim.feature_mode, sim.queue_measure);
      const std::string trace_name = replication_file("trace", r);
      const std::string dataset_name = replication_file("dataset", r);
      write_file_atomic(dir / trace_name, format_csv(trace_table(trace)));
      write_file_atomic(dir / dataset_name, format_csv(dataset_table(data)));
      manifest["replications"].push_back({{"replication", r},
                                          {"seed", sim.seed},
                                          {"steps", trace.observations.size()},
                                          {"arrivals", trace.arrivals},
                                          {"completions", trace.completions},
                                          {"samples", data.size()},
                                          {"rng_digest", to_hex(trace.rng_digest)},
                                          {"trace", trace_name},
                                          {"dataset", dataset_name}});
      out << "replication " << r << ": arrivals=" << trace.arrivals
          << " completions=" << trace.completions << " samples=" << data.size() << "\n";
    }
    write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
    return kExitOk;
  });
}

int cmd_train(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ExperimentConfig cfg = load_with_overrides(opts);
    const NamedKernel* named = cfg.find_kernel(opts.kernel);
    if (!named) {
      std::string names;
      for (const auto& k : cfg.kernels) names += (names.empty() ? "" : ", ") + k.name;
      throw InvalidInput("unknown kernel '" + opts.kernel + "'; available: " + names);
    }
    const Dataset data = dataset_from_table(read_csv(opts.dataset), opts.dataset.string());
    if (data.dim() != named->kernel.input_dim()) {
      throw InvalidInput("dataset has " + std::to_string(data.dim()) + " features but kernel '" +
                         named->name + "' expects " + std::to_string(named->kernel.input_dim()));
    }
    const auto index = static_cast<std::uint64_t>(named - cfg.kernels.data());
    OptimizerOptions options = cfg.gp.optimizer;
    options.seed = derive_seed(cfg.master_seed, 0, Stream::Restarts, index);
    const auto result = optimize_hyperparameters(data, named->kernel, cfg.gp.noise_variance, options);
    const TrainedModel model = fit(data, result.kernel, result.noise_variance);

    const fs::path dir = prepare_dir(cfg.output_dir);
    const fs::path path = dir / ("model_" + named->name + ".json");
    write_file_atomic(path, model_to_json(model).dump(2) + "\n");

    out << std::setprecision(10);
    out << "initial log marginal likelihood: " << result.initial_log_marginal_likelihood << "\n";
    out << "final log marginal likelihood: " << result.log_marginal_likelihood << "\n";
    const auto names = result.kernel.parameter_names();
    for (std::size_t i = 0; i < names.size(); ++i) {
      out << names[i] << " = "
          << std::exp(result.kernel.log_params()[static_cast<Eigen::Index>(i)]) << "\n";
    }
    out << "noise_variance = " << result.noise_variance << "\n";
    out << "model written to " << path.string() << "\n";
    return kExitOk;
  });
}

int cmd_predict(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    json doc;
    try {
      doc = json::parse(read_file(opts.model));
    } catch (const json::exception& e) {
      throw InvalidInput("cannot parse model '" + opts.model.string() + "': " + e.what());
    }
    const TrainedModel model = model_from_json(doc);
    const int D = model.kernel().input_dim();
    const CsvTable input = read_csv(opts.input);
    const PointSet Z = inputs_from_table(input, D, opts.input.string());
    const auto preds = model.predict_many(Z);

    CsvTable table;
    for (int d = 1; d <= D; ++d) table.header.push_back("x_" + std::to_string(d));
    table.header.push_back("mean");
    table.header.push_back("variance");
    for (Eigen::Index i = 0; i < Z.rows(); ++i) {
      std::vector<double> row(Z.row(i).begin(), Z.row(i).end());
      row.push_back(preds[static_cast<std::size_t>(i)].mean);
      row.push_back(preds[static_cast<std::size_t>(i)].variance);
      table.rows.push_back(std::move(row));
    }
    const fs::path dir = prepare_dir(opts.out.value_or(fs::path(".")));
    const fs::path path = dir / "predictions.csv";
    write_file_atomic(path, format_csv(table));
    out << "wrote " << table.rows.size() << " predictions to " << path.string() << "\n";
    return kExitOk;
  });
}

int cmd_benchmark(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  int code = kExitOk;
  // Configuration problems are user errors; everything after loading is a runtime failure.
  ExperimentConfig cfg;
  code = guarded(err, [&] {
    cfg = load_with_overrides(opts);
    prepare_dir(cfg.output_dir);
    return kExitOk;
  });
  if (code != kExitOk) return code;

  code = guarded(err, [&] {
    try {
      const BenchmarkResult result = run_benchmark(cfg, opts.jobs);
      const fs::path dir = cfg.output_dir;
      for (const auto& r : result.replications) {
        write_file_atomic(dir / replication_file("predictions", r.index), format_csv(r.predictions));
      }
      write_file_atomic(dir / "metrics.csv", metrics_csv(result));
      write_file_atomic(dir / "report.json", report_to_json(cfg, result).dump(2) + "\n");

      const auto& rep = result.report;
      out << std::setprecision(6);
      for (const auto& m : rep.methods) {
        out << m.method << ": median MAE " << m.mae_box.median << ", median MSE "
            << m.mse_box.median << "\n";
      }
      auto verdict = [&](const char* metric, const TTestResult& t) {
        out << rep.reference_method << " vs " << kCartMethod << " on " << metric << ": ";
        if (!t.applicable) {
          out << "t-test not applicable (fewer than two replications)\n";
          return;
        }
        out << "t = " << t.statistic << ", dof = " << t.dof << ", p = " << t.p_value << " -> "
            << (t.reject ? "reject" : "do not reject") << " H0 at alpha = " << rep.alpha << "\n";
      };
      verdict("MAE", rep.mae_test);
      verdict("MSE", rep.mse_test);
      for (const auto& w : rep.warnings) out << "warning: " << w << "\n";
      return kExitOk;
    } catch (const InvalidInput& e) {
      err << "error: " << e.what() << "\n";
      return kExitRuntimeError;
    }
  });
  return code;
}

}  // namespace qosgp
