#include "qosgp/simulator.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "qosgp/errors.hpp"

namespace qosgp {

void SimulationConfig::validate() const {
  require(num_classes >= 1, "simulator num_classes must be >= 1");
  const auto D = static_cast<std::size_t>(num_classes);
  require(arrival_prob >= 0.0 && arrival_prob <= 1.0, "simulator arrival_prob must lie in [0, 1]");
  if (size_params.size() != D) {
    throw InvalidInput("simulator needs " + std::to_string(D) + " lognormal parameter pairs, got " +
                       std::to_string(size_params.size()));
  }
  if (execution_rates.size() != D) {
    throw InvalidInput("simulator needs " + std::to_string(D) + " execution rates, got " +
                       std::to_string(execution_rates.size()));
  }
  for (std::size_t d = 0; d < D; ++d) {
    require(std::isfinite(size_params[d].mu), "lognormal mu must be finite");
    require(std::isfinite(size_params[d].sigma) && size_params[d].sigma >= 0.0,
            "lognormal sigma must be finite and >= 0");
    require(std::isfinite(execution_rates[d]) && execution_rates[d] > 0.0,
            "execution rates must be finite and > 0");
  }
  require(window >= 1, "simulator window must be >= 1");
  require(num_train >= 0 && num_test >= 0 && num_train + num_test >= 1,
          "simulator num_train + num_test must be >= 1");
  require(horizon >= 0, "simulator horizon must be >= 0");
}

std::optional<Demand> generate_arrival(Rng& rng, const SimulationConfig& config) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (!(unit(rng) < config.arrival_prob)) return std::nullopt;
  std::uniform_int_distribution<int> pick(0, config.num_classes - 1);
  const int cls = pick(rng);
  std::normal_distribution<double> standard(0.0, 1.0);
  const auto& p = config.size_params[static_cast<std::size_t>(cls)];
  Demand d;
  d.class_id = cls;
  d.size = std::exp(p.mu + p.sigma * standard(rng));
  d.remaining = d.size;
  return d;
}

Simulator::Simulator(SimulationConfig config)
    : config_(std::move(config)), rng_(config_.seed) {
  config_.validate();
  queues_.resize(static_cast<std::size_t>(config_.num_classes));
}

std::uint64_t Simulator::queued() const {
  std::uint64_t n = 0;
  for (const auto& q : queues_) n += q.size();
  return n;
}

bool Simulator::has_waiting_before(std::int64_t t) const {
  for (const auto& q : queues_) {
    if (!q.empty() && q.front().arrival_time < t) return true;
  }
  return false;
}

const Observation& Simulator::step() {
  const std::int64_t t = next_t_++;
  const int D = config_.num_classes;

  if (auto arrival = generate_arrival(rng_, config_)) {
    arrival->id = next_id_++;
    arrival->arrival_time = t;
    queues_[static_cast<std::size_t>(arrival->class_id)].push_back(*arrival);
    ++generated_;
  }

  if (!in_service_) {
    for (int k = 1; k <= D; ++k) {
      const int c = (last_served_ + k) % D;
      auto& q = queues_[static_cast<std::size_t>(c)];
      // FIFO with one arrival per step: only a head that arrived at t is ineligible.
      if (!q.empty() && q.front().arrival_time < t) {
        in_service_ = q.front();
        q.pop_front();
        last_served_ = c;
        break;
      }
    }
  }

  last_.t = t;
  last_.completions.clear();
  if (in_service_) {
    in_service_->remaining -= config_.execution_rates[static_cast<std::size_t>(in_service_->class_id)];
    if (in_service_->remaining <= 0.0) {
      in_service_->remaining = 0.0;
      in_service_->completion_time = t;
      last_.completions.push_back(*in_service_);
      in_service_.reset();
      ++completed_;
    }
  }

  last_.queue_sizes.assign(static_cast<std::size_t>(D), 0.0);
  last_.queue_counts.assign(static_cast<std::size_t>(D), 0);
  for (int c = 0; c < D; ++c) {
    const auto& q = queues_[static_cast<std::size_t>(c)];
    double total = 0.0;
    for (const auto& d : q) total += d.remaining;
    last_.queue_sizes[static_cast<std::size_t>(c)] = total;
    last_.queue_counts[static_cast<std::size_t>(c)] = static_cast<int>(q.size());
  }
  return last_;
}

SimulationTrace run(const SimulationConfig& config) {
  Simulator sim(config);
  SimulationTrace trace;
  trace.config = config;

  const auto T = static_cast<std::size_t>(config.window);
  const auto wanted = static_cast<std::uint64_t>(config.num_train) +
                      static_cast<std::uint64_t>(config.num_test);
  std::uint64_t qualifying = 0;
  std::uint64_t in_window = 0;  // completions in the last T steps

  auto done = [&](std::int64_t steps) {
    if (config.horizon > 0) return steps >= config.horizon;
    return qualifying >= wanted;
  };

  std::int64_t steps = 0;
  while (!done(steps)) {
    if (config.horizon == 0 && steps >= kMaxSimulationSteps) {
      std::ostringstream os;
      os << "simulation auto-extend exceeded " << kMaxSimulationSteps << " steps with only "
         << qualifying << " of " << wanted << " dataset rows";
      throw ResourceError(os.str());
    }
    trace.observations.push_back(sim.step());
    ++steps;
    in_window += trace.observations.back().completions.size();
    if (trace.observations.size() > T) {
      in_window -= trace.observations[trace.observations.size() - 1 - T].completions.size();
    }
    if (trace.observations.size() >= T && in_window > 0) ++qualifying;
  }
  trace.arrivals = sim.generated();
  trace.completions = sim.completed();
  trace.rng_digest = state_digest(sim.rng());
  return trace;
}

Dataset extract_dataset(const SimulationTrace& trace, int T, FeatureMode mode,
                        QueueMeasure measure) {
  require(T >= 1, "extract_dataset: window T must be >= 1");
  const auto& obs = trace.observations;
  const auto W = static_cast<std::size_t>(T);
  if (obs.size() < W) {
    throw InvalidInput("extract_dataset: trace has " + std::to_string(obs.size()) +
                       " observations, fewer than window T = " + std::to_string(T));
  }
  const auto D = static_cast<Eigen::Index>(trace.config.num_classes);

  auto value = [measure](const Observation& o, Eigen::Index d) {
    const auto i = static_cast<std::size_t>(d);
    return measure == QueueMeasure::RemainingSize ? o.queue_sizes[i]
                                                  : static_cast<double>(o.queue_counts[i]);
  };

  std::vector<Vector> features;
  std::vector<double> targets;
  for (std::size_t end = W - 1; end < obs.size(); ++end) {
    const std::size_t begin = end + 1 - W;
    double latency_sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = begin; i <= end; ++i) {
      for (const auto& c : obs[i].completions) {
        latency_sum += static_cast<double>(c.latency());
        ++count;
      }
    }
    if (count == 0) continue;
    Vector x(D);
    for (Eigen::Index d = 0; d < D; ++d) {
      if (mode == FeatureMode::Instantaneous) {
        x[d] = value(obs[end], d);
      } else {
        double s = 0.0;
        for (std::size_t i = begin; i <= end; ++i) s += value(obs[i], d);
        x[d] = s / static_cast<double>(W);
      }
    }
    features.push_back(std::move(x));
    targets.push_back(latency_sum / static_cast<double>(count));
  }
  if (features.empty()) {
    throw InvalidInput("extract_dataset: no window of length T = " + std::to_string(T) +
                       " contains a completion");
  }
  Dataset out{PointSet(static_cast<Eigen::Index>(features.size()), D),
              Vector(static_cast<Eigen::Index>(targets.size()))};
  for (std::size_t r = 0; r < features.size(); ++r) {
    out.X.row(static_cast<Eigen::Index>(r)) = features[r].transpose();
    out.y[static_cast<Eigen::Index>(r)] = targets[r];
  }
  return out;
}

}  // namespace qosgp
