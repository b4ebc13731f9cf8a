#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qosgp/cart.hpp"
#include "qosgp/errors.hpp"
#include "qosgp/gp.hpp"
#include "qosgp/simulator.hpp"

namespace qosgp {

/// Error in an experiment file, anchored to a line when one is known.
class ConfigError : public InvalidInput {
 public:
  ConfigError(const std::string& source, int line, const std::string& message);
  int line() const { return line_; }

 private:
  int line_;
};

struct NamedKernel {
  std::string name;
  KernelConfig kernel;
};

enum class SplitPolicy { Temporal, Random };

struct GpSettings {
  double noise_variance = 0.1;  // initial (or fixed) observation noise variance
  OptimizerOptions optimizer;
};

struct ExperimentConfig {
  SimulationConfig simulator;
  std::vector<NamedKernel> kernels;
  GpSettings gp;
  CartParams cart;
  int replications = 1;
  double alpha = 0.05;
  std::filesystem::path output_dir = "out";
  std::uint64_t master_seed = 0;
  SplitPolicy split = SplitPolicy::Temporal;

  void validate() const;
  const NamedKernel* find_kernel(const std::string& name) const;
};

/// Sectioned key-value experiment file:
///
///   # comment
///   [simulator]
///   num_classes = 3
///   execution_rates = 1.25, 1.5, 1.1
///   [kernel linear]
///   variant = linear
///
/// Every key has a fixed type (integer, real, boolean, word, path or a
/// comma-separated real list); unknown sections or keys, duplicates and type
/// mismatches are errors naming the offending line.
ExperimentConfig parse_experiment_config(const std::string& text,
                                         const std::string& source = "<config>");
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

}  // namespace qosgp
