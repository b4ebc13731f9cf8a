#pragma once

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

#include "qosgp/config.hpp"
#include "qosgp/csv.hpp"
#include "qosgp/metrics.hpp"
#include "qosgp/stats.hpp"

namespace qosgp {

inline const std::string kCartMethod = "cart";

struct MethodScore {
  std::string method;
  double mae = 0.0;
  double mse = 0.0;
};

struct FittedKernelSummary {
  std::string name;
  KernelConfig kernel;
  double noise_variance = 0.0;
  double log_marginal_likelihood = 0.0;
  double initial_log_marginal_likelihood = 0.0;
};

/// One simulate / split / fit / score cycle.
struct ReplicationResult {
  int index = 0;
  std::uint64_t simulation_seed = 0;
  std::uint64_t steps = 0;
  std::uint64_t arrivals = 0;
  std::uint64_t completions = 0;
  std::size_t samples = 0;
  std::vector<MethodScore> scores;  // GP methods in kernel order, then CART
  std::vector<FittedKernelSummary> fits;
  // Test-set truths and predictive means, header y,<method>...
  CsvTable predictions;
};

struct MethodSummary {
  std::string method;
  std::vector<double> mae;  // replication order
  std::vector<double> mse;
  BoxStats mae_box;
  BoxStats mse_box;
};

struct MetricsReport {
  std::vector<MethodSummary> methods;
  std::string reference_method;  // GP method compared against CART
  TTestResult mae_test;
  TTestResult mse_test;
  double alpha = 0.05;
  std::vector<std::string> warnings;

  const MethodSummary* find(const std::string& method) const;
};

struct BenchmarkResult {
  std::vector<ReplicationResult> replications;
  MetricsReport report;
};

std::string gp_method_name(const std::string& kernel_name);

// Simulation config of replication r: the experiment's simulator settings
// with the seed taken from the master seed's substream r.
SimulationConfig replication_simulation_config(const ExperimentConfig& config, int replication);

// Splits the extracted rows into (train, test) per the configured policy.
std::pair<Dataset, Dataset> split_dataset(const Dataset& all, const ExperimentConfig& config,
                                          int replication);

ReplicationResult run_replication(const ExperimentConfig& config, int replication);

// Aggregates per-replication scores in index order.
MetricsReport aggregate(const ExperimentConfig& config,
                        const std::vector<ReplicationResult>& replications);

/// Runs every replication (on up to `jobs` threads) and aggregates. Output is
/// independent of the job count.
BenchmarkResult run_benchmark(const ExperimentConfig& config, int jobs = 1);

nlohmann::json report_to_json(const ExperimentConfig& config, const BenchmarkResult& result);
// Header replication,method,mae,mse.
std::string metrics_csv(const BenchmarkResult& result);

}  // namespace qosgp
