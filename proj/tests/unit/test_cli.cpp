#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <regex>
#include <sstream>

#include "qosgp/benchmark.hpp"
#include "qosgp/commands.hpp"
#include "qosgp/config.hpp"
#include "qosgp/csv.hpp"
#include "qosgp/metrics.hpp"
#include "qosgp/serialization.hpp"
#include "support.hpp"

using namespace qosgp;
namespace fs = std::filesystem;

namespace {

std::string small_config(int replications, int samples, const std::string& extra = "") {
  std::ostringstream os;
  os << "[simulator]\nnum_classes = 3\narrival_prob = 0.5\n"
     << "lognormal_mu = 0.5, 0.1, 0.75\nlognormal_sigma = 0.25, 0.5, 0.15\n"
     << "execution_rates = 1.25, 1.5, 1.1\nwindow = 10\n"
     << "num_train = " << samples << "\nnum_test = " << samples << "\n"
     << "[gp]\nmax_iterations = 25\nrestarts = 1\n"
     << "[experiment]\nreplications = " << replications << "\nmaster_seed = 7\n"
     << extra;
  return os.str();
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const fs::path p = dir / "experiment.cfg";
  std::ofstream(p) << text;
  return p;
}

struct Run {
  int code;
  std::string out;
  std::string err;
};

template <typename Cmd>
Run call(Cmd cmd, const CommandOptions& opts) {
  std::ostringstream out, err;
  const int code = cmd(opts, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> listing(const fs::path& dir) {
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(dir)) names.push_back(e.path().filename().string());
  std::sort(names.begin(), names.end());
  return names;
}

int run_binary(const std::string& args) {
  const std::string cmd = std::string(QOSGP_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void write_dataset(const fs::path& p, const Dataset& d) { write_file_atomic(p, format_csv(dataset_table(d))); }

// Data rows of a CSV with text fields, header dropped.
std::vector<std::vector<std::string>> text_rows(const fs::path& path) {
  std::istringstream in(read_file(path));
  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::vector<std::string> fields;
    std::istringstream cells(line);
    for (std::string f; std::getline(cells, f, ',');) fields.push_back(f);
    rows.push_back(fields);
  }
  return rows;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("simulate writes two csv files and a manifest, reproducibly") {
  const fs::path dir = test::scratch_dir("simulate");
  CommandOptions opts;
  opts.config = write_config(dir, small_config(1, 200));
  opts.out = dir / "out";
  const Run first = call(cmd_simulate, opts);
  REQUIRE(first.code == kExitOk);
  CHECK(first.out.find("arrivals=") != std::string::npos);
  CHECK(listing(*opts.out) == std::vector<std::string>{"dataset_r0.csv", "manifest.json", "trace_r0.csv"});
  const auto trace = read_file(*opts.out / "trace_r0.csv");
  const auto data = read_file(*opts.out / "dataset_r0.csv");
  const auto manifest = read_file(*opts.out / "manifest.json");
  CHECK(trace.rfind("t,q_1,q_2,q_3,completions,mean_latency\n", 0) == 0);
  CHECK(data.rfind("x_1,x_2,x_3,y\n", 0) == 0);
  CHECK(read_csv(*opts.out / "dataset_r0.csv").rows.size() >= 400);

  REQUIRE(call(cmd_simulate, opts).code == kExitOk);
  CHECK(read_file(*opts.out / "trace_r0.csv") == trace);
  CHECK(read_file(*opts.out / "dataset_r0.csv") == data);
  CHECK(read_file(*opts.out / "manifest.json") == manifest);

  opts.seed = 8;
  REQUIRE(call(cmd_simulate, opts).code == kExitOk);
  CHECK(read_file(*opts.out / "trace_r0.csv") != trace);
}

TEST_CASE("configuration errors exit with the user-error code") {
  const fs::path dir = test::scratch_dir("badconfig");
  std::string text = small_config(1, 50);
  text.erase(text.find("num_classes = 3\n"), 16);
  CommandOptions opts;
  opts.config = write_config(dir, text);
  opts.out = dir / "out";
  for (auto cmd : {cmd_simulate, cmd_benchmark}) {
    const Run r = call(cmd, opts);
    CHECK(r.code == kExitUserError);
    CHECK(r.err.find("num_classes") != std::string::npos);
    CHECK(r.err.find("experiment.cfg") != std::string::npos);
  }
  opts.config = dir / "missing.cfg";
  CHECK(call(cmd_simulate, opts).code == kExitUserError);
}

TEST_CASE("simulation resource exhaustion exits with the runtime code") {
  const fs::path dir = test::scratch_dir("resource");
  std::string text = small_config(1, 50);
  text.replace(text.find("arrival_prob = 0.5"), 18, "arrival_prob = 0.0");
  CommandOptions opts;
  opts.config = write_config(dir, text);
  opts.out = dir / "out";
  const Run r = call(cmd_simulate, opts);
  CHECK(r.code == kExitRuntimeError);
  CHECK(r.err.find("resource") != std::string::npos);
}

TEST_CASE("train then predict round-trips through files") {
  const fs::path dir = test::scratch_dir("train");
  std::mt19937_64 rng(71);
  Dataset d{test::uniform_points(rng, 60, 3, 0.0, 5.0), Vector(60)};
  for (int i = 0; i < 60; ++i) d.y[i] = 1.0 + 0.4 * d.X(i, 0) + 0.2 * d.X(i, 2) + 0.05 * std::sin(7.0 * i);
  write_dataset(dir / "data.csv", d);

  CommandOptions opts;
  opts.config = write_config(dir, small_config(1, 50));
  opts.out = dir / "models";
  opts.dataset = dir / "data.csv";
  opts.kernel = "composite";
  const Run trained = call(cmd_train, opts);
  REQUIRE(trained.code == kExitOk);
  const std::regex initial("initial log marginal likelihood: (\\S+)");
  const std::regex final_re("final log marginal likelihood: (\\S+)");
  std::smatch mi, mf;
  REQUIRE(std::regex_search(trained.out, mi, initial));
  REQUIRE(std::regex_search(trained.out, mf, final_re));
  CHECK(std::stod(mf[1]) >= std::stod(mi[1]));
  CHECK(trained.out.find("se_signal_sd = ") != std::string::npos);
  CHECK(trained.out.find("bias = ") != std::string::npos);
  const fs::path model_path = dir / "models" / "model_composite.json";
  REQUIRE(fs::exists(model_path));

  // Predict at the training inputs plus a few fresh points.
  PointSet Z(63, 3);
  Z.topRows(60) = d.X;
  Z.bottomRows(3) = test::uniform_points(rng, 3, 3, 0.0, 5.0);
  CsvTable input;
  input.header = {"x_1", "x_2", "x_3"};
  for (int i = 0; i < 63; ++i) input.rows.push_back({Z(i, 0), Z(i, 1), Z(i, 2)});
  write_file_atomic(dir / "input.csv", format_csv(input));

  CommandOptions popts;
  popts.model = model_path;
  popts.input = dir / "input.csv";
  popts.out = dir / "pred";
  REQUIRE(call(cmd_predict, popts).code == kExitOk);
  const CsvTable out = read_csv(dir / "pred" / "predictions.csv");
  CHECK(out.header == std::vector<std::string>{"x_1", "x_2", "x_3", "mean", "variance"});
  REQUIRE(out.rows.size() == 63);

  const TrainedModel model = model_from_json(nlohmann::json::parse(read_file(model_path)));
  const auto direct = model.predict_many(Z);
  for (int i = 0; i < 63; ++i) {
    CHECK(out.rows[i][0] == Z(i, 0));
    CHECK(out.rows[i][3] == direct[i].mean);
    CHECK(out.rows[i][4] == direct[i].variance);
    CHECK(std::isfinite(out.rows[i][3]));
    if (i < 60) CHECK(out.rows[i][4] >= model.noise_variance() - 1e-8);
  }

  // Idempotent given identical inputs.
  const auto model_bytes = read_file(model_path);
  const auto pred_bytes = read_file(dir / "pred" / "predictions.csv");
  REQUIRE(call(cmd_train, opts).code == kExitOk);
  REQUIRE(call(cmd_predict, popts).code == kExitOk);
  CHECK(read_file(model_path) == model_bytes);
  CHECK(read_file(dir / "pred" / "predictions.csv") == pred_bytes);

  SUBCASE("zero input rows give a header-only file") {
    write_file_atomic(dir / "empty_input.csv", "x_1,x_2,x_3\n");
    popts.input = dir / "empty_input.csv";
    REQUIRE(call(cmd_predict, popts).code == kExitOk);
    CHECK(read_file(dir / "pred" / "predictions.csv") == "x_1,x_2,x_3,mean,variance\n");
  }
  SUBCASE("dimension mismatch") {
    write_file_atomic(dir / "narrow.csv", "x_1,x_2\n1,2\n");
    popts.input = dir / "narrow.csv";
    CHECK(call(cmd_predict, popts).code == kExitUserError);
  }
  SUBCASE("unreadable model") {
    write_file_atomic(dir / "broken.json", "{ not json");
    popts.model = dir / "broken.json";
    CHECK(call(cmd_predict, popts).code == kExitUserError);
  }
}

TEST_CASE("train rejects bad inputs") {
  const fs::path dir = test::scratch_dir("trainbad");
  CommandOptions opts;
  opts.config = write_config(dir, small_config(1, 50));
  opts.out = dir / "models";
  write_file_atomic(dir / "empty.csv", "x_1,x_2,x_3,y\n");
  write_file_atomic(dir / "blank.csv", "");
  write_file_atomic(dir / "ok.csv", "x_1,x_2,x_3,y\n1,2,3,4\n2,3,4,5\n");

  opts.dataset = dir / "ok.csv";
  opts.kernel = "nope";
  const Run unknown = call(cmd_train, opts);
  CHECK(unknown.code == kExitUserError);
  CHECK(unknown.err.find("linear, se, composite") != std::string::npos);

  opts.kernel = "linear";
  opts.dataset = dir / "empty.csv";
  CHECK(call(cmd_train, opts).code == kExitUserError);
  opts.dataset = dir / "blank.csv";
  CHECK(call(cmd_train, opts).code == kExitUserError);
  opts.dataset = dir / "absent.csv";
  CHECK(call(cmd_train, opts).code == kExitUserError);
  write_file_atomic(dir / "garbled.csv", "x_1,x_2,x_3,y\n1,2,abc,4\n");
  opts.dataset = dir / "garbled.csv";
  const Run garbled = call(cmd_train, opts);
  CHECK(garbled.code == kExitUserError);
  CHECK(garbled.err.find(":2") != std::string::npos);
  write_file_atomic(dir / "narrow.csv", "x_1,x_2,y\n1,2,4\n");
  opts.dataset = dir / "narrow.csv";
  CHECK(call(cmd_train, opts).code == kExitUserError);
}

TEST_CASE("benchmark with one replication") {
  const fs::path dir = test::scratch_dir("bench1");
  CommandOptions opts;
  opts.config = write_config(dir, small_config(1, 80));
  opts.out = dir / "out";
  const Run r = call(cmd_benchmark, opts);
  REQUIRE(r.code == kExitOk);
  CHECK(r.out.find("not applicable") != std::string::npos);
  CHECK(listing(*opts.out) == std::vector<std::string>{"metrics.csv", "predictions_r0.csv", "report.json"});
  const auto report = nlohmann::json::parse(read_file(*opts.out / "report.json"));
  CHECK(report["methods"].size() == 4);
  CHECK(report["t_test_mae"]["applicable"] == false);
  CHECK(report["t_test_mse"]["applicable"] == false);
  CHECK(report["reference_method"] == "gp-linear");
  CHECK(text_rows(*opts.out / "metrics.csv").size() == 4);
}

TEST_CASE("benchmark outputs are deterministic and recomputable") {
  const fs::path dir = test::scratch_dir("bench2");
  CommandOptions opts;
  opts.config = write_config(dir, small_config(3, 60));
  opts.out = dir / "a";
  REQUIRE(call(cmd_benchmark, opts).code == kExitOk);
  opts.out = dir / "b";
  opts.jobs = 3;
  REQUIRE(call(cmd_benchmark, opts).code == kExitOk);
  for (const auto* name : {"report.json", "metrics.csv", "predictions_r0.csv", "predictions_r2.csv"}) {
    CHECK_MESSAGE(read_file(dir / "a" / name) == read_file(dir / "b" / name), name);
  }

  const auto report = nlohmann::json::parse(read_file(dir / "a" / "report.json"));
  CHECK(report["t_test_mae"]["applicable"] == true);
  CHECK(report["t_test_mae"]["dof"] == 4.0);
  const auto metrics = text_rows(dir / "a" / "metrics.csv");
  REQUIRE(metrics.size() == 12);
  // Every metric row is recomputable from the persisted predictions.
  std::size_t row = 0;
  for (int r = 0; r < 3; ++r) {
    const CsvTable preds = read_csv(dir / "a" / ("predictions_r" + std::to_string(r) + ".csv"));
    REQUIRE(preds.header == std::vector<std::string>{"y", "gp-linear", "gp-se", "gp-composite", "cart"});
    REQUIRE(preds.rows.size() == 60);
    std::vector<double> truth;
    for (const auto& p : preds.rows) truth.push_back(p[0]);
    for (int m = 1; m <= 4; ++m, ++row) {
      std::vector<double> guess;
      for (const auto& p : preds.rows) guess.push_back(p[static_cast<std::size_t>(m)]);
      CHECK(metrics[row][0] == std::to_string(r));
      CHECK(metrics[row][1] == preds.header[static_cast<std::size_t>(m)]);
      CHECK(std::stod(metrics[row][2]) == mae(guess, truth));
      CHECK(std::stod(metrics[row][3]) == mse(guess, truth));
    }
  }

  opts.seed = 99;
  opts.out = dir / "c";
  REQUIRE(call(cmd_benchmark, opts).code == kExitOk);
  CHECK(read_file(dir / "c" / "metrics.csv") != read_file(dir / "a" / "metrics.csv"));
}

TEST_CASE("benchmark failures inside a replication exit with the runtime code") {
  const fs::path dir = test::scratch_dir("benchfail");
  // A bounded horizon too short for the requested split.
  CommandOptions opts;
  opts.config = write_config(dir, small_config(2, 500));
  std::string text = read_file(opts.config);
  text.replace(text.find("window = 10\n"), 12, "window = 10\nhorizon = 300\n");
  write_file_atomic(opts.config, text);
  opts.out = dir / "out";
  const Run r = call(cmd_benchmark, opts);
  CHECK(r.code == kExitRuntimeError);
  CHECK(r.err.find("replication 0") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "out" / "report.json"));
}

TEST_CASE("executable exit codes") {
  const fs::path dir = test::scratch_dir("binary");
  const fs::path cfg = write_config(dir, small_config(1, 50));
  const std::string out = (dir / "out").string();
  CHECK(run_binary("") == kExitUserError);
  CHECK(run_binary("frobnicate") == kExitUserError);
  CHECK(run_binary("simulate") == kExitUserError);
  CHECK(run_binary("simulate --config " + cfg.string() + " --bogus 1") == kExitUserError);
  CHECK(run_binary("benchmark --config " + cfg.string() + " --jobs 0") == kExitUserError);
  CHECK(run_binary("simulate --config " + cfg.string() + " --out " + out) == kExitOk);
  CHECK(fs::exists(dir / "out" / "manifest.json"));
  CHECK(run_binary("simulate --config " + (dir / "nope.cfg").string()) == kExitUserError);
  CHECK(run_binary("--help") == 0);
}

}
