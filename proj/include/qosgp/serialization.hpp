#pragma once

#include <json.hpp>

#include "qosgp/cart.hpp"
#include "qosgp/csv.hpp"
#include "qosgp/gp.hpp"
#include "qosgp/simulator.hpp"

namespace qosgp {

// {"variant", "log_params", "input_dim"}
nlohmann::json kernel_to_json(const KernelConfig& kernel);
KernelConfig kernel_from_json(const nlohmann::json& j);

// {"kernel", "noise_variance", "X", "y"}; the factorization is recomputed on load.
nlohmann::json model_to_json(const TrainedModel& model);
TrainedModel model_from_json(const nlohmann::json& j);

// Preorder node array.
nlohmann::json tree_to_json(const RegressionTree& tree);

// Header t,q_1..q_D,completions,mean_latency; mean_latency is 0 without completions.
CsvTable trace_table(const SimulationTrace& trace);

// Header x_1..x_D,y.
CsvTable dataset_table(const Dataset& dataset);
Dataset dataset_from_table(const CsvTable& table, const std::string& source);

// Columns x_1..x_D from a table (other columns ignored).
PointSet inputs_from_table(const CsvTable& table, int dim, const std::string& source);

// Number of leading x_1, x_2, ... columns.
int count_input_columns(const CsvTable& table);

}  // namespace qosgp
