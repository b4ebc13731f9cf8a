#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

#include "qosgp/gp.hpp"
#include "qosgp/rng.hpp"

namespace qosgp {

struct LognormalParams {
  double mu = 0.0;     // mean of the underlying normal
  double sigma = 0.0;  // standard deviation of the underlying normal
};

enum class FeatureMode { WindowMean, Instantaneous };
enum class QueueMeasure { RemainingSize, DemandCount };

struct SimulationConfig {
  int num_classes = 0;
  double arrival_prob = 0.0;
  std::vector<LognormalParams> size_params;
  std::vector<double> execution_rates;
  int window = 1;
  int num_train = 0;
  int num_test = 0;
  // Steps to simulate; 0 extends until enough dataset rows exist.
  std::int64_t horizon = 0;
  std::uint64_t seed = 0;
  FeatureMode feature_mode = FeatureMode::WindowMean;
  QueueMeasure queue_measure = QueueMeasure::RemainingSize;

  void validate() const;
};

inline constexpr std::int64_t kMaxSimulationSteps = 10'000'000;

struct Demand {
  std::uint64_t id = 0;
  int class_id = 0;
  double size = 0.0;
  double remaining = 0.0;
  std::int64_t arrival_time = 0;
  std::optional<std::int64_t> completion_time;

  std::int64_t latency() const { return *completion_time - arrival_time; }
};

struct Observation {
  std::int64_t t = 0;
  std::vector<double> queue_sizes;  // total remaining size per class queue
  std::vector<int> queue_counts;    // demands waiting per class queue
  std::vector<Demand> completions;
};

struct SimulationTrace {
  SimulationConfig config;
  std::vector<Observation> observations;
  std::uint64_t arrivals = 0;
  std::uint64_t completions = 0;
  std::uint64_t rng_digest = 0;
};

// One Bernoulli(p) trial; on success a demand of uniform class with a lognormal size.
std::optional<Demand> generate_arrival(Rng& rng, const SimulationConfig& config);

/// Teletraffic generator, per-class FIFO queues, Round-Robin dispatcher and a
/// single non-preemptive execution system on a discrete clock.
///
/// Each step at time t: (1) at most one arrival is enqueued on its class queue;
/// (2) an idle server takes the head of the next non-empty queue after the
/// last-served class, considering only demands that arrived before t;
/// (3) the in-service demand is worked by its class execution rate and
/// completes at t once nothing remains; (4) an observation is recorded.
class Simulator {
 public:
  explicit Simulator(SimulationConfig config);

  const Observation& step();

  std::int64_t now() const { return next_t_ - 1; }
  std::uint64_t generated() const { return generated_; }
  std::uint64_t completed() const { return completed_; }
  std::uint64_t queued() const;
  bool busy() const { return in_service_.has_value(); }
  const std::optional<Demand>& in_service() const { return in_service_; }
  const std::vector<std::deque<Demand>>& queues() const { return queues_; }
  // Has any queue a demand eligible for dispatch (arrived before the current step)?
  bool has_waiting_before(std::int64_t t) const;
  const Rng& rng() const { return rng_; }
  const SimulationConfig& config() const { return config_; }

 private:
  SimulationConfig config_;
  Rng rng_;
  std::vector<std::deque<Demand>> queues_;
  std::optional<Demand> in_service_;
  int last_served_ = -1;
  std::int64_t next_t_ = 0;
  std::uint64_t next_id_ = 0;
  std::uint64_t generated_ = 0;
  std::uint64_t completed_ = 0;
  Observation last_;
};

// Runs for config.horizon steps, or until extract_dataset would yield
// num_train + num_test rows when horizon is 0 (ResourceError past kMaxSimulationSteps).
SimulationTrace run(const SimulationConfig& config);

/// Rows for every time t with a full window of T observations ending at t and
/// at least one completion inside it. Features are the per-class window mean
/// (or the value at t) of the chosen queue measure; the target is the mean
/// latency of demands completing in the window.
Dataset extract_dataset(const SimulationTrace& trace, int T,
                        FeatureMode mode = FeatureMode::WindowMean,
                        QueueMeasure measure = QueueMeasure::RemainingSize);

}  // namespace qosgp
