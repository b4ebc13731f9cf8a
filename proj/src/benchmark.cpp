#include "qosgp/benchmark.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include "qosgp/cart.hpp"
#include "qosgp/errors.hpp"
#include "qosgp/rng.hpp"
#include "qosgp/serialization.hpp"

namespace qosgp {

using nlohmann::json;

const MethodSummary* MetricsReport::find(const std::string& method) const {
  for (const auto& m : methods) {
    if (m.method == method) return &m;
  }
  return nullptr;
}

std::string gp_method_name(const std::string& kernel_name) { return "gp-" + kernel_name; }

SimulationConfig replication_simulation_config(const ExperimentConfig& config, int replication) {
  SimulationConfig s = config.simulator;
  s.seed = derive_seed(config.master_seed, static_cast<std::uint64_t>(replication),
                       Stream::Simulation);
  return s;
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& all, const ExperimentConfig& config,
                                          int replication) {
  const Eigen::Index n_train = config.simulator.num_train;
  const Eigen::Index n_test = config.simulator.num_test;
  if (all.size() < n_train + n_test) {
    throw InvalidInput("dataset has " + std::to_string(all.size()) + " rows, split needs " +
                       std::to_string(n_train + n_test) + " (raise horizon or set it to 0)");
  }
  if (config.split == SplitPolicy::Temporal) {
    return {all.rows(0, n_train), all.rows(n_train, n_test)};
  }
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(all.size()));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  Rng rng(derive_seed(config.master_seed, static_cast<std::uint64_t>(replication), Stream::Split));
  std::shuffle(idx.begin(), idx.end(), rng);
  std::vector<Eigen::Index> train(idx.begin(), idx.begin() + n_train);
  std::vector<Eigen::Index> test(idx.begin() + n_train, idx.begin() + n_train + n_test);
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {all.select(train), all.select(test)};
}

namespace {

ReplicationResult run_replication_unchecked(const ExperimentConfig& config, int replication) {
  ReplicationResult out;
  out.index = replication;
  const SimulationConfig sim = replication_simulation_config(config, replication);
  out.simulation_seed = sim.seed;
  const SimulationTrace trace = run(sim);
  out.steps = trace.observations.size();
  out.arrivals = trace.arrivals;
  out.completions = trace.completions;
  const Dataset all = extract_dataset(trace, sim.window, sim.feature_mode, sim.queue_measure);
  out.samples = static_cast<std::size_t>(all.size());
  const auto [train, test] = split_dataset(all, config, replication);

  const auto n_test = static_cast<std::size_t>(test.size());
  out.predictions.header.push_back("y");
  std::vector<std::vector<double>> columns;
  columns.emplace_back(test.y.begin(), test.y.end());

  for (std::size_t k = 0; k < config.kernels.size(); ++k) {
    const auto& named = config.kernels[k];
    OptimizerOptions options = config.gp.optimizer;
    options.seed = derive_seed(config.master_seed, static_cast<std::uint64_t>(replication),
                               Stream::Restarts, k);
    const auto opt =
        optimize_hyperparameters(train, named.kernel, config.gp.noise_variance, options);
    const TrainedModel model = fit(train, opt.kernel, opt.noise_variance);
    const auto preds = model.predict_many(test.X);
    std::vector<double> means(n_test);
    for (std::size_t i = 0; i < n_test; ++i) means[i] = preds[i].mean;

    const std::string method = gp_method_name(named.name);
    out.scores.push_back({method, mae(means, columns.front()), mse(means, columns.front())});
    out.fits.push_back({named.name, opt.kernel, opt.noise_variance, opt.log_marginal_likelihood,
                        opt.initial_log_marginal_likelihood});
    out.predictions.header.push_back(method);
    columns.push_back(std::move(means));
  }

  const RegressionTree tree = cart_fit(train, config.cart);
  const Vector cart_pred = tree.predict_many(test.X);
  std::vector<double> cart_means(cart_pred.begin(), cart_pred.end());
  out.scores.push_back({kCartMethod, mae(cart_means, columns.front()),
                        mse(cart_means, columns.front())});
  out.predictions.header.push_back(kCartMethod);
  columns.push_back(std::move(cart_means));

  out.predictions.rows.assign(n_test, std::vector<double>(columns.size()));
  for (std::size_t i = 0; i < n_test; ++i) {
    for (std::size_t c = 0; c < columns.size(); ++c) out.predictions.rows[i][c] = columns[c][i];
  }
  return out;
}

}  // namespace

ReplicationResult run_replication(const ExperimentConfig& config, int replication) {
  const std::string prefix = "replication " + std::to_string(replication) + ": ";
  try {
    return run_replication_unchecked(config, replication);
  } catch (const InvalidInput& e) {
    throw InvalidInput(prefix + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(prefix + e.what());
  } catch (const ResourceError& e) {
    throw ResourceError(prefix + e.what());
  }
}

MetricsReport aggregate(const ExperimentConfig& config,
                        const std::vector<ReplicationResult>& replications) {
  require(!replications.empty(), "aggregate: no replications");
  MetricsReport report;
  report.alpha = config.alpha;
  for (const auto& s : replications.front().scores) report.methods.push_back({s.method, {}, {}, {}, {}});
  for (const auto& r : replications) {
    require(r.scores.size() == report.methods.size(), "aggregate: method sets differ");
    for (std::size_t m = 0; m < r.scores.size(); ++m) {
      report.methods[m].mae.push_back(r.scores[m].mae);
      report.methods[m].mse.push_back(r.scores[m].mse);
    }
  }
  for (auto& m : report.methods) {
    m.mae_box = summary_stats(m.mae);
    m.mse_box = summary_stats(m.mse);
  }

  const NamedKernel* reference = nullptr;
  for (const auto& k : config.kernels) {
    if (k.kernel.variant() == KernelVariant::Linear) {
      reference = &k;
      break;
    }
  }
  if (!reference) {
    reference = &config.kernels.front();
    report.warnings.push_back("no linear kernel configured; comparing '" + reference->name +
                              "' against CART");
  }
  report.reference_method = gp_method_name(reference->name);
  const auto* gp = report.find(report.reference_method);
  const auto* cart = report.find(kCartMethod);
  if (gp && cart) {
    report.mae_test = t_test_two_sample(gp->mae, cart->mae, config.alpha);
    report.mse_test = t_test_two_sample(gp->mse, cart->mse, config.alpha);
  }
  if (replications.size() < 2) {
    report.warnings.push_back("t-tests not applicable with fewer than two replications");
  }
  return report;
}

BenchmarkResult run_benchmark(const ExperimentConfig& config, int jobs) {
  config.validate();
  const int R = config.replications;
  std::vector<std::optional<ReplicationResult>> slots(static_cast<std::size_t>(R));
  std::exception_ptr failure;
  int failed_index = R;
  std::mutex mu;
  std::atomic<int> next{0};

  auto worker = [&] {
    for (int r = next++; r < R; r = next++) {
      try {
        auto res = run_replication(config, r);
        std::lock_guard lock(mu);
        slots[static_cast<std::size_t>(r)] = std::move(res);
      } catch (...) {
        std::lock_guard lock(mu);
        // Report the lowest failing index so the error does not depend on scheduling.
        if (r < failed_index) {
          failed_index = r;
          failure = std::current_exception();
        }
      }
    }
  };

  const int threads = std::clamp(jobs, 1, R);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  BenchmarkResult result;
  for (auto& s : slots) result.replications.push_back(std::move(*s));
  result.report = aggregate(config, result.replications);
  return result;
}

namespace {

json box_json(const BoxStats& b) {
  return json{{"median", b.median},         {"q1", b.q1},
              {"q3", b.q3},                 {"min", b.min},
              {"max", b.max},               {"whisker_low", b.whisker_low},
              {"whisker_high", b.whisker_high}, {"outliers", b.outliers}};
}

json ttest_json(const TTestResult& t) {
  if (!t.applicable) return json{{"applicable", false}};
  return json{{"applicable", true},
              {"statistic", std::isfinite(t.statistic) ? json(t.statistic) : json(t.statistic > 0 ? "inf" : "-inf")},
              {"dof", t.dof},
              {"p_value", t.p_value},
              {"reject", t.reject},
              {"degenerate", t.degenerate}};
}

}  // namespace

json report_to_json(const ExperimentConfig& config, const BenchmarkResult& result) {
  const auto& rep = result.report;
  json methods = json::array();
  for (const auto& m : rep.methods) {
    methods.push_back({{"method", m.method},
                       {"mae", m.mae},
                       {"mse", m.mse},
                       {"mae_box", box_json(m.mae_box)},
                       {"mse_box", box_json(m.mse_box)}});
  }
  json reps = json::array();
  for (const auto& r : result.replications) {
    json fits = json::array();
    for (const auto& f : r.fits) {
      json decoded = json::object();
      const auto names = f.kernel.parameter_names();
      for (std::size_t i = 0; i < names.size(); ++i) {
        decoded[names[i]] = std::exp(f.kernel.log_params()[static_cast<Eigen::Index>(i)]);
      }
      fits.push_back({{"kernel_name", f.name},
                      {"kernel", kernel_to_json(f.kernel)},
                      {"hyperparameters", decoded},
                      {"noise_variance", f.noise_variance},
                      {"log_marginal_likelihood", f.log_marginal_likelihood},
                      {"initial_log_marginal_likelihood", f.initial_log_marginal_likelihood}});
    }
    json scores = json::array();
    for (const auto& s : r.scores) scores.push_back({{"method", s.method}, {"mae", s.mae}, {"mse", s.mse}});
    reps.push_back({{"replication", r.index},
                    {"simulation_seed", r.simulation_seed},
                    {"steps", r.steps},
                    {"arrivals", r.arrivals},
                    {"completions", r.completions},
                    {"samples", r.samples},
                    {"scores", scores},
                    {"fits", fits}});
  }
  return json{{"replications", config.replications},
              {"master_seed", config.master_seed},
              {"alpha", rep.alpha},
              {"reference_method", rep.reference_method},
              {"methods", methods},
              {"t_test_mae", ttest_json(rep.mae_test)},
              {"t_test_mse", ttest_json(rep.mse_test)},
              {"warnings", rep.warnings},
              {"per_replication", reps}};
}

std::string metrics_csv(const BenchmarkResult& result) {
  std::string out = "replication,method,mae,mse\n";
  for (const auto& r : result.replications) {
    for (const auto& s : r.scores) {
      out += std::to_string(r.index) + "," + s.method + "," + format_double(s.mae) + "," +
             format_double(s.mse) + "\n";
    }
  }
  return out;
}

}  // namespace qosgp
