#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace qosgp {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUserError = 2;     // malformed input or configuration
inline constexpr int kExitRuntimeError = 3;  // numerical or resource failure

struct CommandOptions {
  std::filesystem::path config;
  std::optional<std::filesystem::path> out;  // overrides the config's output_dir
  std::optional<std::uint64_t> seed;         // overrides master_seed
  int jobs = 1;
  std::string kernel;
  std::filesystem::path dataset;
  std::filesystem::path model;
  std::filesystem::path input;
};

// Each command reports progress on `out`, diagnostics on `err`, and returns an exit code.
int cmd_simulate(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_train(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_predict(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_benchmark(const CommandOptions& opts, std::ostream& out, std::ostream& err);

}  // namespace qosgp
