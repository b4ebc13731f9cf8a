#include <doctest.h>

#include <cmath>
#include <map>

#include "qosgp/config.hpp"
#include "qosgp/csv.hpp"
#include "qosgp/errors.hpp"
#include "qosgp/serialization.hpp"
#include "qosgp/simulator.hpp"
#include "support.hpp"

using namespace qosgp;

namespace {

SimulationConfig reference_config(std::uint64_t seed = 1) {
  SimulationConfig c;
  c.num_classes = 3;
  c.arrival_prob = 0.5;
  c.size_params = {{0.5, 0.25}, {0.1, 0.5}, {0.75, 0.15}};
  c.execution_rates = {1.25, 1.5, 1.1};
  c.window = 10;
  c.num_train = 1000;
  c.num_test = 1000;
  c.seed = seed;
  return c;
}

SimulationConfig single_class(double p, double mu, double sigma, double rate) {
  SimulationConfig c;
  c.num_classes = 1;
  c.arrival_prob = p;
  c.size_params = {{mu, sigma}};
  c.execution_rates = {rate};
  c.window = 1;
  c.num_train = 1;
  c.num_test = 0;
  return c;
}

Observation make_obs(std::int64_t t, std::vector<double> sizes) {
  Observation o;
  o.t = t;
  o.queue_counts.assign(sizes.size(), 0);
  o.queue_sizes = std::move(sizes);
  return o;
}

Demand done(std::int64_t arrival, std::int64_t completion) {
  Demand d;
  d.size = 1.0;
  d.arrival_time = arrival;
  d.completion_time = completion;
  return d;
}

}  // namespace

TEST_SUITE("simulator") {

TEST_CASE("config validation") {
  auto c = reference_config();
  c.arrival_prob = 1.5;
  CHECK_THROWS_AS(c.validate(), InvalidInput);
  c = reference_config();
  c.execution_rates[1] = 0.0;
  CHECK_THROWS_AS(c.validate(), InvalidInput);
  c = reference_config();
  c.size_params.pop_back();
  CHECK_THROWS_AS(c.validate(), InvalidInput);
  c = reference_config();
  c.size_params[0].sigma = -0.1;
  CHECK_THROWS_AS(c.validate(), InvalidInput);
  c = reference_config();
  c.window = 0;
  CHECK_THROWS_AS(Simulator{c}, InvalidInput);
}

TEST_CASE("zero arrival probability never generates demands") {
  auto c = single_class(0.0, 0.0, 1.0, 1.0);
  Simulator sim(c);
  for (int t = 0; t < 10000; ++t) {
    const auto& o = sim.step();
    CHECK(o.t == t);
    CHECK(o.queue_sizes == std::vector<double>{0.0});
    CHECK(o.completions.empty());
  }
  CHECK(sim.generated() == 0);
}

TEST_CASE("degenerate lognormal gives exact sizes") {
  SimulationConfig c = reference_config();
  c.arrival_prob = 1.0;
  c.size_params = {{0.5, 0.0}, {-0.2, 0.0}, {1.3, 0.0}};
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const auto d = generate_arrival(rng, c);
    REQUIRE(d);
    CHECK(d->size == std::exp(c.size_params[static_cast<std::size_t>(d->class_id)].mu));
    CHECK(d->remaining == d->size);
  }
}

TEST_CASE("empirical arrival rate and class balance") {
  auto c = reference_config(11);
  Rng rng(c.seed);
  std::map<int, int> per_class;
  int arrivals = 0;
  for (int t = 0; t < 10000; ++t) {
    if (auto d = generate_arrival(rng, c)) {
      ++arrivals;
      ++per_class[d->class_id];
    }
  }
  CHECK(arrivals / 10000.0 >= 0.47);
  CHECK(arrivals / 10000.0 <= 0.53);
  for (int k = 0; k < 3; ++k) CHECK(std::abs(per_class[k] / double(arrivals) - 1.0 / 3.0) < 0.03);
}

TEST_CASE("lognormal sample mean") {
  auto c = single_class(1.0, 0.5, 0.25, 1.0);
  Rng rng(12);
  double sum = 0.0;
  for (int i = 0; i < 100000; ++i) sum += generate_arrival(rng, c)->size;
  const double expected = std::exp(0.5 + 0.25 * 0.25 / 2.0);
  CHECK(expected == doctest::Approx(1.7010573).epsilon(1e-7));
  CHECK(std::abs(sum / 100000.0 - expected) / expected < 0.02);
}

TEST_CASE("hand-stepped single demand") {
  REQUIRE(std::exp(std::log(2.0)) == 2.0);
  auto c = single_class(0.2, std::log(2.0), 0.0, 1.0);
  // Find a seed whose first arrival lands at t = 5 with nothing else before t = 8.
  bool found = false;
  for (std::uint64_t seed = 0; seed < 10000 && !found; ++seed) {
    c.seed = seed;
    Simulator sim(c);
    std::vector<Observation> obs;
    std::vector<std::uint64_t> generated;
    for (int t = 0; t < 8; ++t) {
      obs.push_back(sim.step());
      generated.push_back(sim.generated());
    }
    if (generated != std::vector<std::uint64_t>{0, 0, 0, 0, 0, 1, 1, 1}) continue;
    found = true;

    CHECK(obs[5].queue_sizes[0] == 2.0);  // waiting, not yet dispatched
    CHECK(obs[5].completions.empty());
    CHECK(obs[6].queue_sizes[0] == 0.0);  // in service from t = 6
    CHECK(obs[6].completions.empty());
    REQUIRE(obs[7].completions.size() == 1);
    const Demand& d = obs[7].completions.front();
    CHECK(d.arrival_time == 5);
    CHECK(*d.completion_time == 7);
    CHECK(d.latency() == 2);
    for (int t = 0; t < 5; ++t) {
      CHECK(obs[t].queue_sizes[0] == 0.0);
      CHECK(obs[t].completions.empty());
    }
  }
  CHECK(found);
}

TEST_CASE("round robin alternates between saturated queues") {
  SimulationConfig c;
  c.num_classes = 2;
  c.arrival_prob = 1.0;
  c.size_params = {{2.0, 0.1}, {2.0, 0.1}};
  c.execution_rates = {1.0, 1.0};
  c.window = 1;
  c.num_train = 1;
  c.seed = 13;
  Simulator sim(c);
  std::vector<int> served;
  for (int t = 0; t < 5000; ++t) {
    for (const auto& d : sim.step().completions) served.push_back(d.class_id);
  }
  REQUIRE(served.size() > 100);
  // Skip the warm-up while the queues fill.
  for (std::size_t i = 10; i < served.size(); ++i) CHECK(served[i] != served[i - 1]);
}

TEST_CASE("invariants over a long run") {
  for (std::uint64_t seed : {21u, 22u}) {
    auto c = reference_config(seed);
    Simulator sim(c);
    std::vector<std::int64_t> last_arrival(3, -1);
    std::vector<std::uint64_t> last_id(3, 0);
    std::vector<bool> seen(3, false);
    for (std::int64_t t = 0; t < 20000; ++t) {
      const Observation& o = sim.step();
      REQUIRE(o.t == t);
      CHECK(sim.generated() == sim.completed() + sim.queued() + (sim.busy() ? 1u : 0u));
      const bool worked = sim.busy() || !o.completions.empty();
      if (!worked) CHECK_FALSE(sim.has_waiting_before(t));
      for (int k = 0; k < 3; ++k) {
        CHECK(o.queue_sizes[k] >= 0.0);
        CHECK(o.queue_counts[k] >= 0);
      }
      for (const auto& d : o.completions) {
        CHECK(d.latency() >= 1);
        CHECK(*d.completion_time == t);
        CHECK(d.remaining == 0.0);
        const auto k = static_cast<std::size_t>(d.class_id);
        if (seen[k]) {
          CHECK(d.arrival_time > last_arrival[k]);
          CHECK(d.id > last_id[k]);
        }
        seen[k] = true;
        last_arrival[k] = d.arrival_time;
        last_id[k] = d.id;
      }
    }
  }
}

TEST_CASE("run is a pure function of config and seed") {
  auto c = reference_config(31);
  c.horizon = 10000;
  const auto a = run(c);
  const auto b = run(c);
  CHECK(a.observations.size() == 10000);
  CHECK(format_csv(trace_table(a)) == format_csv(trace_table(b)));
  CHECK(a.rng_digest == b.rng_digest);
  CHECK(a.arrivals == b.arrivals);
  c.seed = 32;
  const auto other = run(c);
  CHECK(format_csv(trace_table(other)) != format_csv(trace_table(a)));
  for (std::size_t i = 1; i < a.observations.size(); ++i) {
    CHECK(a.observations[i].t == a.observations[i - 1].t + 1);
  }
}

TEST_CASE("fast service stays stable under saturation") {
  SimulationConfig c;
  c.num_classes = 2;
  c.arrival_prob = 1.0;
  c.size_params = {{0.0, 0.3}, {0.5, 0.3}};
  c.execution_rates = {100.0, 100.0};
  c.window = 1;
  c.num_train = 1;
  c.horizon = 100000;
  c.seed = 41;
  const auto trace = run(c);
  std::int64_t worst = 0;
  double worst_queue = 0.0;
  for (const auto& o : trace.observations) {
    for (const auto& d : o.completions) worst = std::max(worst, d.latency());
    for (double q : o.queue_sizes) worst_queue = std::max(worst_queue, q);
  }
  CHECK(worst <= 2);
  CHECK(worst_queue < 100.0);
  CHECK(trace.completions + 2 >= trace.arrivals);
}

TEST_CASE("reference parameters yield enough samples") {
  const auto c = reference_config(2013);
  const auto trace = run(c);
  const auto data = extract_dataset(trace, c.window);
  CHECK(data.size() >= 2000);
  CHECK(trace.observations.size() < static_cast<std::size_t>(kMaxSimulationSteps));
  data.validate();
}

TEST_CASE("auto-extension gives up at the step cap") {
  auto c = single_class(0.0, 0.0, 1.0, 1.0);
  CHECK_THROWS_AS(run(c), ResourceError);
}

TEST_CASE("window of one") {
  SimulationTrace trace;
  trace.config.num_classes = 3;
  trace.observations.push_back(make_obs(0, {1, 1, 1}));
  trace.observations.push_back(make_obs(1, {0, 0, 4}));
  trace.observations.back().completions.push_back(done(-2, 1));
  const auto d = extract_dataset(trace, 1);
  REQUIRE(d.size() == 1);
  CHECK(d.X(0, 0) == 0.0);
  CHECK(d.X(0, 1) == 0.0);
  CHECK(d.X(0, 2) == 4.0);
  CHECK(d.y[0] == 3.0);
}

TEST_CASE("window means and skipped windows") {
  SimulationTrace trace;
  trace.config.num_classes = 2;
  for (int t = 0; t < 6; ++t) trace.observations.push_back(make_obs(t, {2.5, 1.0}));
  trace.observations[1].completions.push_back(done(0, 1));
  trace.observations[2].completions.push_back(done(0, 2));
  trace.observations[2].completions.push_back(done(1, 2));
  // Windows of 2 ending at 1, 2, 3 contain completions; those ending at 4 and 5 do not.
  const auto d = extract_dataset(trace, 2);
  REQUIRE(d.size() == 3);
  CHECK(d.y[0] == 1.0);
  CHECK(d.y[1] == doctest::Approx(4.0 / 3.0));
  CHECK(d.y[2] == 1.5);
  for (int r = 0; r < 3; ++r) {
    CHECK(d.X(r, 0) == 2.5);
    CHECK(d.X(r, 1) == 1.0);
  }
  trace.observations[3].queue_sizes = {5.5, 3.0};
  const auto inst = extract_dataset(trace, 2, FeatureMode::Instantaneous);
  CHECK(inst.X(2, 0) == 5.5);
  const auto mean = extract_dataset(trace, 2);
  CHECK(mean.X(2, 0) == 4.0);
}

TEST_CASE("demand-count features") {
  SimulationTrace trace;
  trace.config.num_classes = 1;
  trace.observations.push_back(make_obs(0, {7.0}));
  trace.observations[0].queue_counts = {3};
  trace.observations[0].completions.push_back(done(-1, 0));
  const auto d = extract_dataset(trace, 1, FeatureMode::WindowMean, QueueMeasure::DemandCount);
  CHECK(d.X(0, 0) == 3.0);
}

TEST_CASE("no qualifying window is rejected naming T") {
  SimulationTrace trace;
  trace.config.num_classes = 1;
  for (int t = 0; t < 5; ++t) trace.observations.push_back(make_obs(t, {0.0}));
  try {
    extract_dataset(trace, 3);
    FAIL("expected failure");
  } catch (const InvalidInput& e) {
    CHECK(std::string(e.what()).find("T = 3") != std::string::npos);
  }
  CHECK_THROWS_AS(extract_dataset(trace, 6), InvalidInput);
}

}
