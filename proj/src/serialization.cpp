#include "qosgp/serialization.hpp"

#include "qosgp/errors.hpp"

namespace qosgp {

using nlohmann::json;

json kernel_to_json(const KernelConfig& kernel) {
  std::vector<double> p(kernel.log_params().begin(), kernel.log_params().end());
  return json{{"variant", std::string(to_string(kernel.variant()))},
              {"log_params", p},
              {"input_dim", kernel.input_dim()}};
}

KernelConfig kernel_from_json(const json& j) {
  try {
    const auto variant = parse_kernel_variant(j.at("variant").get<std::string>());
    const int dim = j.at("input_dim").get<int>();
    const auto p = j.at("log_params").get<std::vector<double>>();
    return KernelConfig(variant, dim, Eigen::Map<const Vector>(p.data(), static_cast<Eigen::Index>(p.size())));
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("malformed kernel JSON: ") + e.what());
  }
}

json model_to_json(const TrainedModel& model) {
  const auto& d = model.dataset();
  json X = json::array();
  for (Eigen::Index n = 0; n < d.X.rows(); ++n) {
    std::vector<double> row(d.X.row(n).begin(), d.X.row(n).end());
    X.push_back(row);
  }
  std::vector<double> y(d.y.begin(), d.y.end());
  return json{{"kernel", kernel_to_json(model.kernel())},
              {"noise_variance", model.noise_variance()},
              {"X", X},
              {"y", y}};
}

TrainedModel model_from_json(const json& j) {
  try {
    auto kernel = kernel_from_json(j.at("kernel"));
    const double noise = j.at("noise_variance").get<double>();
    const auto rows = j.at("X").get<std::vector<std::vector<double>>>();
    const auto y = j.at("y").get<std::vector<double>>();
    Dataset d{PointSet(static_cast<Eigen::Index>(rows.size()), kernel.input_dim()),
              Eigen::Map<const Vector>(y.data(), static_cast<Eigen::Index>(y.size()))};
    for (std::size_t n = 0; n < rows.size(); ++n) {
      if (rows[n].size() != static_cast<std::size_t>(kernel.input_dim())) {
        throw InvalidInput("model JSON row " + std::to_string(n) + " has " +
                           std::to_string(rows[n].size()) + " features, kernel expects " +
                           std::to_string(kernel.input_dim()));
      }
      for (std::size_t k = 0; k < rows[n].size(); ++k) {
        d.X(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k)) = rows[n][k];
      }
    }
    return TrainedModel(std::move(d), std::move(kernel), noise);
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("malformed model JSON: ") + e.what());
  }
}

json tree_to_json(const RegressionTree& tree) {
  json nodes = json::array();
  for (const auto& n : tree.nodes()) {
    if (n.is_leaf()) {
      nodes.push_back({{"leaf", true}, {"mean_target", n.value}, {"count", n.count}});
    } else {
      nodes.push_back({{"leaf", false},
                       {"split_dim", n.split_dim},
                       {"split_threshold", n.threshold},
                       {"left", n.left},
                       {"right", n.right},
                       {"count", n.count}});
    }
  }
  const auto& p = tree.params();
  return json{{"input_dim", tree.input_dim()},
              {"params",
               {{"min_leaf", p.min_leaf},
                {"max_depth", p.max_depth},
                {"min_impurity_decrease", p.min_impurity_decrease}}},
              {"nodes", nodes}};
}

CsvTable trace_table(const SimulationTrace& trace) {
  CsvTable t;
  const int D = trace.config.num_classes;
  t.header.push_back("t");
  for (int d = 1; d <= D; ++d) t.header.push_back("q_" + std::to_string(d));
  t.header.push_back("completions");
  t.header.push_back("mean_latency");
  t.rows.reserve(trace.observations.size());
  for (const auto& o : trace.observations) {
    std::vector<double> row;
    row.push_back(static_cast<double>(o.t));
    row.insert(row.end(), o.queue_sizes.begin(), o.queue_sizes.end());
    row.push_back(static_cast<double>(o.completions.size()));
    double mean = 0.0;
    for (const auto& c : o.completions) mean += static_cast<double>(c.latency());
    if (!o.completions.empty()) mean /= static_cast<double>(o.completions.size());
    row.push_back(mean);
    t.rows.push_back(std::move(row));
  }
  return t;
}

CsvTable dataset_table(const Dataset& dataset) {
  CsvTable t;
  for (int d = 1; d <= dataset.dim(); ++d) t.header.push_back("x_" + std::to_string(d));
  t.header.push_back("y");
  for (Eigen::Index n = 0; n < dataset.size(); ++n) {
    std::vector<double> row(dataset.X.row(n).begin(), dataset.X.row(n).end());
    row.push_back(dataset.y[n]);
    t.rows.push_back(std::move(row));
  }
  return t;
}

int count_input_columns(const CsvTable& table) {
  int d = 0;
  while (d < static_cast<int>(table.header.size()) &&
         table.header[static_cast<std::size_t>(d)] == "x_" + std::to_string(d + 1)) {
    ++d;
  }
  return d;
}

PointSet inputs_from_table(const CsvTable& table, int dim, const std::string& source) {
  const int have = count_input_columns(table);
  if (have != dim) {
    throw InvalidInput(source + ": found " + std::to_string(have) +
                       " input columns x_1..x_D, expected " + std::to_string(dim));
  }
  PointSet X(static_cast<Eigen::Index>(table.rows.size()), dim);
  for (std::size_t n = 0; n < table.rows.size(); ++n) {
    for (int d = 0; d < dim; ++d) {
      X(static_cast<Eigen::Index>(n), d) = table.rows[n][static_cast<std::size_t>(d)];
    }
  }
  return X;
}

Dataset dataset_from_table(const CsvTable& table, const std::string& source) {
  const int D = count_input_columns(table);
  if (D == 0) throw InvalidInput(source + ": dataset header must start with x_1");
  const int y_col = table.column("y");
  if (y_col != D) throw InvalidInput(source + ": dataset header must be x_1..x_D,y");
  if (table.rows.empty()) throw InvalidInput(source + ": dataset has no rows");
  Dataset d{inputs_from_table(table, D, source), Vector(static_cast<Eigen::Index>(table.rows.size()))};
  for (std::size_t n = 0; n < table.rows.size(); ++n) {
    d.y[static_cast<Eigen::Index>(n)] = table.rows[n][static_cast<std::size_t>(y_col)];
  }
  d.validate();
  return d;
}

}  // namespace qosgp
